// Typed client for the concierge HTTP JSON API. The UI talks to the
// service only through these three endpoints.

export interface Requirement {
  polarity: "require" | "not_require";
  attribute: string;
  values: string[];
}

export interface PlaceRef {
  id: number;
  name: string;
}

export interface StateSnapshot {
  requirements: Requirement[];
  text: string;
  output_list: PlaceRef[];
  history: PlaceRef[];
}

export interface AskAction {
  kind: "ask";
  attribute: string;
}

export interface JustificationItem {
  attribute: string;
  values: string[];
  value: string;
}

export interface RecommendAction {
  kind: "recommend";
  place_id: number;
  name: string;
  facts: [string, string][];
  justification: {
    matched: JustificationItem[];
    avoided: JustificationItem[];
  };
}

export interface SatisfiedItem {
  polarity: string;
  attribute: string;
  values: string[];
  value: string;
}

export interface NoResultAction {
  kind: "no_result";
  blocking: string[];
  satisfied: SatisfiedItem[];
  suggestion: Record<string, string[]>;
}

export interface CannedAction {
  kind: "canned";
  label: string;
}

export type AgentAction =
  | AskAction
  | RecommendAction
  | NoResultAction
  | CannedAction;

export interface SessionInfo {
  id: string;
  greeting: string;
}

export interface TurnResponse {
  reply: string;
  action: AgentAction;
  state: StateSnapshot;
}

export class ApiError extends Error {
  constructor(message: string, readonly status?: number) {
    super(message);
    this.name = "ApiError";
  }
}

export class SessionExpiredError extends ApiError {
  constructor() {
    super("session expired", 404);
    this.name = "SessionExpiredError";
  }
}

export class ConciergeApi {
  constructor(private readonly baseUrl: string = "") {}

  async createSession(): Promise<SessionInfo> {
    const response = await fetch(`${this.baseUrl}/sessions`, { method: "POST" });
    if (!response.ok) {
      throw new ApiError(`create session failed (${response.status})`, response.status);
    }
    return (await response.json()) as SessionInfo;
  }

  async sendMessage(sessionId: string, text: string): Promise<TurnResponse> {
    const response = await fetch(
      `${this.baseUrl}/sessions/${sessionId}/messages`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ text }),
      }
    );
    if (response.status === 404) {
      throw new SessionExpiredError();
    }
    if (!response.ok) {
      throw new ApiError(`message failed (${response.status})`, response.status);
    }
    return (await response.json()) as TurnResponse;
  }

  async getState(sessionId: string): Promise<StateSnapshot> {
    const response = await fetch(`${this.baseUrl}/sessions/${sessionId}/state`);
    if (response.status === 404) {
      throw new SessionExpiredError();
    }
    if (!response.ok) {
      throw new ApiError(`get state failed (${response.status})`, response.status);
    }
    return (await response.json()) as StateSnapshot;
  }
}
