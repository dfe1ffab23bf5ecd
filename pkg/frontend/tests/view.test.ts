import { describe, expect, it } from "vitest";

import type { OracleRequestFrame } from "../src/protocol.js";
import {
  escapeHtml,
  prettyTerm,
  renderFeedLine,
  renderRequest,
  renderSession,
  splitArgs,
} from "../src/view.js";
import { claimAgent, initialState } from "../src/state.js";

describe("escapeHtml", () => {
  it("neutralizes markup in term text", () => {
    expect(escapeHtml('<b x="1">&</b>')).toBe(
      "&lt;b x=&quot;1&quot;&gt;&amp;&lt;/b&gt;",
    );
  });
});

describe("splitArgs", () => {
  it("splits only at the top level", () => {
    expect(splitArgs("a,f(b,c),[d,e]")).toEqual(["a", "f(b,c)", "[d,e]"]);
  });

  it("handles a single argument and empty text", () => {
    expect(splitArgs("a")).toEqual(["a"]);
    expect(splitArgs("")).toEqual([]);
  });
});

describe("prettyTerm", () => {
  it("emphasizes the functor and keeps the canonical text in the tooltip", () => {
    const html = prettyTerm("reserve(nimrod)");
    expect(html).toContain("<b>reserve</b>(nimrod)");
    expect(html).toContain('title="reserve(nimrod)"');
  });

  it("leaves atoms and variables plain", () => {
    expect(prettyTerm("tourist")).not.toContain("<b>");
    expect(prettyTerm("Host")).not.toContain("<b>");
  });
});

describe("renderFeedLine", () => {
  it("keeps the trace index and marks own lines", () => {
    const own = renderFeedLine({
      index: 3,
      agent: "gal",
      kind: "act",
      payload: "reserve(nimrod)",
      own: true,
    });
    expect(own).toContain('data-index="3"');
    expect(own).toContain("H / 3");
    expect(own).toContain('class="feed-own"');
    const recv = renderFeedLine({
      index: 5,
      agent: "nimrod",
      kind: "act",
      payload: "reservation_confirmed(gal)",
      own: false,
    });
    expect(recv).toContain('class="feed-recv"');
  });

  it("labels oracle lines distinctly", () => {
    const line = renderFeedLine({
      index: 2,
      agent: "gal",
      kind: "oracle",
      payload: "reserve(nimrod)",
      own: true,
    });
    expect(line).toContain("gal(oracle(...))");
  });
});

function request(): OracleRequestFrame {
  return {
    type: "oracle_request",
    request_id: 4,
    agent: "gal",
    alternatives: [
      {
        index: 0,
        act_pattern: "reserve(Host)",
        required_vars: ["Host"],
        choice_options: [],
      },
      {
        index: 1,
        act_pattern: "pay(broker,X)",
        required_vars: [],
        choice_options: [{ var: "X", options: ["1", "2", "3"] }],
      },
    ],
    domain: ["nimrod", "ouri"],
    fresh_names: [],
  };
}

describe("renderRequest", () => {
  it("renders one fieldset per alternative with a pass button", () => {
    const html = renderRequest(request());
    expect(html.match(/<fieldset/g)).toHaveLength(2);
    expect(html).toContain('class="pass"');
    expect(html).toContain('data-request="4"');
  });

  it("offers domain names for required variables", () => {
    const html = renderRequest(request());
    expect(html).toContain('input name="Host" data-alt="0"');
    expect(html).toContain('<option value="nimrod">');
    expect(html).toContain('<option value="ouri">');
  });

  it("renders choice buttons with their option values", () => {
    const html = renderRequest(request());
    expect(html).toContain('class="choice" data-alt="1"');
    expect(html).toContain('data-option="2"');
  });

  it("renders nothing without a pending request", () => {
    expect(renderRequest(null)).toBe("");
  });
});

describe("renderSession", () => {
  it("shows the banner, agent panel, and feed together", () => {
    const state = {
      ...claimAgent(initialState(), "gal"),
      stateTerm: "waiting(nimrod)",
      banner: "disconnected",
      feed: [
        {
          index: 1,
          agent: "gal",
          kind: "act" as const,
          payload: "reserve(nimrod)",
          own: true,
        },
      ],
    };
    const html = renderSession(state);
    expect(html).toContain("disconnected");
    expect(html).toContain("<h2>gal</h2>");
    expect(html).toContain("<b>waiting</b>(nimrod)");
    expect(html).toContain('data-index="1"');
  });
});
