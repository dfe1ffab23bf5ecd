// Frame types spoken over the gateway WebSocket. One JSON object per
// frame; all terms are canonical text renderings.

export interface AgentInfo {
  state: string;
  interactive: boolean;
  claimed: boolean;
  alive: boolean;
}

export interface HelloFrame {
  type: "hello";
  agents: Record<string, AgentInfo>;
  contract_name: string;
}

export interface StateFrame {
  type: "state";
  agent: string;
  state_term: string;
}

export interface EventFrame {
  type: "event";
  index: number;
  agent: string;
  kind: "act" | "oracle" | "halt";
  payload: string;
  recipients: string[];
}

export interface ChoiceOption {
  var: string;
  options: string[];
}

export interface AlternativeInfo {
  index: number;
  act_pattern: string;
  required_vars: string[];
  choice_options: ChoiceOption[];
}

export interface OracleRequestFrame {
  type: "oracle_request";
  request_id: number;
  agent: string;
  alternatives: AlternativeInfo[];
  domain: string[];
  fresh_names: string[];
}

export interface ErrorFrame {
  type: "error";
  code: string;
  message: string;
}

export type ServerFrame =
  | HelloFrame
  | StateFrame
  | EventFrame
  | OracleRequestFrame
  | ErrorFrame;

export interface ClaimFrame {
  type: "claim";
  agent: string;
  token: string;
}

export interface DecisionFrame {
  type: "decision";
  request_id: number;
  alternative: number;
  bindings: Record<string, string>;
}

export interface PassFrame {
  type: "pass";
  request_id: number;
}

export type ClientFrame = ClaimFrame | DecisionFrame | PassFrame;
