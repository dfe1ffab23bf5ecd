// Pure session state: a reducer over server frames. The view is a
// function of the replayed event stream only, so reconnecting and
// replaying reconstructs the identical state.

import type {
  AgentInfo,
  EventFrame,
  OracleRequestFrame,
  ServerFrame,
} from "./protocol.js";

export interface FeedEntry {
  index: number;
  agent: string;
  kind: "act" | "oracle";
  payload: string;
  own: boolean;
}

export interface SessionState {
  agent: string | null;
  contract: string;
  agents: Record<string, AgentInfo>;
  stateTerm: string;
  feed: FeedEntry[];
  pending: OracleRequestFrame | null;
  banner: string | null;
  halted: boolean;
}

export function initialState(): SessionState {
  return {
    agent: null,
    contract: "",
    agents: {},
    stateTerm: "",
    feed: [],
    pending: null,
    banner: null,
    halted: false,
  };
}

function visibleToMe(me: string, frame: EventFrame): boolean {
  if (frame.agent === me) {
    return true;
  }
  return frame.kind === "act" && frame.recipients.includes(me);
}

export function reduce(state: SessionState, frame: ServerFrame): SessionState {
  switch (frame.type) {
    case "hello":
      return {
        ...state,
        contract: frame.contract_name,
        agents: frame.agents,
        stateTerm: state.agent ? frame.agents[state.agent]?.state ?? "" : "",
        banner: null,
      };
    case "state": {
      const agents = {
        ...state.agents,
        [frame.agent]: {
          ...(state.agents[frame.agent] ?? {
            interactive: false,
            claimed: false,
            alive: true,
          }),
          state: frame.state_term,
        },
      };
      const stateTerm =
        frame.agent === state.agent ? frame.state_term : state.stateTerm;
      return { ...state, agents, stateTerm };
    }
    case "event": {
      if (frame.kind === "halt") {
        return { ...state, halted: true, pending: null };
      }
      if (state.agent === null || !visibleToMe(state.agent, frame)) {
        return state;
      }
      // replayed frames must not duplicate feed lines
      if (state.feed.some((e) => e.index === frame.index)) {
        return state;
      }
      const entry: FeedEntry = {
        index: frame.index,
        agent: frame.agent,
        kind: frame.kind,
        payload: frame.payload,
        own: frame.agent === state.agent,
      };
      const feed = [...state.feed, entry].sort((a, b) => a.index - b.index);
      return { ...state, feed };
    }
    case "oracle_request":
      // a newer request for this agent supersedes the previous one
      if (frame.agent !== state.agent) {
        return state;
      }
      return { ...state, pending: frame };
    case "error":
      return { ...state, banner: `${frame.code}: ${frame.message}` };
    default:
      return state;
  }
}

export function claimAgent(state: SessionState, agent: string): SessionState {
  return { ...state, agent };
}

export function requestAnswered(state: SessionState, requestId: number): SessionState {
  if (state.pending && state.pending.request_id === requestId) {
    return { ...state, pending: null };
  }
  return state;
}

// A binding value must be a ground term: nonempty, balanced parentheses
// and brackets, and no uppercase-initial (variable) bare words.
export function isGroundTermText(text: string): boolean {
  const trimmed = text.trim();
  if (trimmed === "") {
    return false;
  }
  let depth = 0;
  for (const ch of trimmed) {
    if (ch === "(" || ch === "[") {
      depth += 1;
    } else if (ch === ")" || ch === "]") {
      depth -= 1;
      if (depth < 0) {
        return false;
      }
    }
  }
  if (depth !== 0) {
    return false;
  }
  const words = trimmed.split(/[^A-Za-z0-9_']+/).filter((w) => w !== "");
  return words.every((w) => !/^[A-Z_]/.test(w));
}

export function decisionReady(
  pending: OracleRequestFrame,
  alternative: number,
  bindings: Record<string, string>,
): boolean {
  const alt = pending.alternatives.find((a) => a.index === alternative);
  if (!alt) {
    return false;
  }
  return alt.required_vars.every((v) => isGroundTermText(bindings[v] ?? ""));
}
