// WebSocket session: claims an agent, feeds frames into the reducer, and
// exposes decision senders. State updates arrive only from server frames;
// there is no optimistic local mutation.

import type { ClientFrame, ServerFrame } from "./protocol.js";
import {
  SessionState,
  claimAgent,
  initialState,
  reduce,
  requestAnswered,
} from "./state.js";

export type Listener = (state: SessionState) => void;

export class ConsoleClient {
  private ws: WebSocket | null = null;
  private state: SessionState = initialState();
  private listener: Listener;

  constructor(listener: Listener) {
    this.listener = listener;
  }

  current(): SessionState {
    return this.state;
  }

  connect(url: string, agent: string, token: string): void {
    this.state = claimAgent(initialState(), agent);
    this.ws = new WebSocket(url);
    this.ws.onopen = () => {
      this.send({ type: "claim", agent, token });
    };
    this.ws.onmessage = (msg: MessageEvent) => {
      const frame = JSON.parse(msg.data as string) as ServerFrame;
      this.state = reduce(this.state, frame);
      this.listener(this.state);
    };
    this.ws.onclose = () => {
      this.state = { ...this.state, banner: "disconnected" };
      this.listener(this.state);
    };
  }

  private send(frame: ClientFrame): void {
    if (this.ws && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(JSON.stringify(frame));
    }
  }

  decide(alternative: number, bindings: Record<string, string>): void {
    const pending = this.state.pending;
    if (!pending) {
      return;
    }
    this.send({
      type: "decision",
      request_id: pending.request_id,
      alternative,
      bindings,
    });
    this.state = requestAnswered(this.state, pending.request_id);
    this.listener(this.state);
  }

  pass(): void {
    const pending = this.state.pending;
    if (!pending) {
      return;
    }
    this.send({ type: "pass", request_id: pending.request_id });
    this.state = requestAnswered(this.state, pending.request_id);
    this.listener(this.state);
  }
}
