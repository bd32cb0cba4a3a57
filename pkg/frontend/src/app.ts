// Chat window plus a live inspector of the reasoner's require/not_require
// state. One turn in flight at a time; the send button stays disabled
// while a reply is pending or the input is empty.

import {
  ApiError,
  ConciergeApi,
  NoResultAction,
  RecommendAction,
  SessionExpiredError,
  StateSnapshot,
  TurnResponse,
} from "./api.js";

const RELAX_UTTERANCES: Record<string, string> = {
  "price range": "change the price to average",
};

function relaxUtterance(attribute: string): string {
  return RELAX_UTTERANCES[attribute] ?? `Any ${attribute} is fine.`;
}

function historyUtterance(index: number): string {
  const ref = index === 1 ? "first" : String(index);
  return `Can you show me the restaurant you recommended at ${ref}?`;
}

export class App {
  private sessionId: string | null = null;
  private busy = false;

  private transcript!: HTMLElement;
  private input!: HTMLInputElement;
  private sendButton!: HTMLButtonElement;
  private requirementsBody!: HTMLElement;
  private historyList!: HTMLElement;
  private stateText!: HTMLElement;
  private notice!: HTMLElement;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ConciergeApi
  ) {}

  async start(): Promise<void> {
    this.root.innerHTML = `
      <main class="layout">
        <section class="chat">
          <div class="transcript" id="transcript"></div>
          <div class="notice" id="notice"></div>
          <form class="composer" id="composer">
            <input id="input" autocomplete="off"
                   placeholder="Ask for a restaurant..." />
            <button id="send" type="submit" disabled>Send</button>
          </form>
        </section>
        <aside class="inspector">
          <h2>Reasoner state</h2>
          <table class="requirements">
            <thead><tr><th></th><th>attribute</th><th>values</th></tr></thead>
            <tbody id="requirements"></tbody>
          </table>
          <h2>History</h2>
          <ol id="history" class="history"></ol>
          <pre id="state-text" class="state-text"></pre>
        </aside>
      </main>`;
    this.transcript = this.query("#transcript");
    this.input = this.query<HTMLInputElement>("#input");
    this.sendButton = this.query<HTMLButtonElement>("#send");
    this.requirementsBody = this.query("#requirements");
    this.historyList = this.query("#history");
    this.stateText = this.query("#state-text");
    this.notice = this.query("#notice");

    this.query<HTMLFormElement>("#composer").addEventListener("submit", (e) => {
      e.preventDefault();
      void this.sendTurn(this.input.value);
    });
    this.input.addEventListener("input", () => this.updateControls());

    await this.newSession();
  }

  private query<T extends HTMLElement = HTMLElement>(selector: string): T {
    const el = this.root.querySelector<T>(selector);
    if (!el) throw new Error(`missing element ${selector}`);
    return el;
  }

  async newSession(): Promise<void> {
    const session = await this.api.createSession();
    this.sessionId = session.id;
    this.transcript.innerHTML = "";
    this.notice.innerHTML = "";
    this.addBubble("agent", session.greeting);
    this.renderState({ requirements: [], text: "", output_list: [], history: [] });
    this.updateControls();
  }

  async sendTurn(text: string): Promise<void> {
    const trimmed = text.trim();
    if (!trimmed || this.busy || this.sessionId === null) return;
    this.busy = true;
    this.notice.innerHTML = "";
    this.addBubble("user", trimmed);
    this.input.value = "";
    this.updateControls();
    try {
      const turn = await this.api.sendMessage(this.sessionId, trimmed);
      this.renderTurn(turn);
    } catch (error) {
      this.handleError(error, trimmed);
    } finally {
      this.busy = false;
      this.updateControls();
    }
  }

  private renderTurn(turn: TurnResponse): void {
    const bubble = this.addBubble("agent", turn.reply);
    if (turn.action.kind === "recommend") {
      bubble.appendChild(this.recommendationCard(turn.action));
    } else if (turn.action.kind === "no_result") {
      bubble.appendChild(this.relaxButtons(turn.action));
    }
    this.renderState(turn.state);
  }

  private addBubble(speaker: "user" | "agent", text: string): HTMLElement {
    const bubble = document.createElement("div");
    bubble.className = `bubble ${speaker}`;
    const body = document.createElement("p");
    body.textContent = text;
    bubble.appendChild(body);
    this.transcript.appendChild(bubble);
    this.transcript.scrollTop = this.transcript.scrollHeight;
    return bubble;
  }

  private recommendationCard(action: RecommendAction): HTMLElement {
    const card = document.createElement("div");
    card.className = "card recommendation";
    const title = document.createElement("h3");
    title.textContent = action.name;
    card.appendChild(title);
    const facts = document.createElement("dl");
    for (const [attribute, value] of action.facts) {
      if (attribute === "name") continue;
      const dt = document.createElement("dt");
      dt.textContent = attribute;
      const dd = document.createElement("dd");
      dd.textContent = value;
      facts.appendChild(dt);
      facts.appendChild(dd);
    }
    card.appendChild(facts);
    const chips = document.createElement("div");
    chips.className = "chips";
    for (const item of action.justification.matched) {
      chips.appendChild(this.chip(`${item.attribute}: ${item.value}`, "matched"));
    }
    for (const item of action.justification.avoided) {
      chips.appendChild(
        this.chip(`avoided ${item.values.join(", ")}`, "avoided")
      );
    }
    card.appendChild(chips);
    return card;
  }

  private chip(text: string, kind: string): HTMLElement {
    const chip = document.createElement("span");
    chip.className = `chip ${kind}`;
    chip.textContent = text;
    return chip;
  }

  private relaxButtons(action: NoResultAction): HTMLElement {
    const wrap = document.createElement("div");
    wrap.className = "relax";
    for (const attribute of action.blocking) {
      const button = document.createElement("button");
      button.type = "button";
      button.className = "relax-button";
      button.textContent = `relax ${attribute}`;
      button.addEventListener("click", () => {
        void this.sendTurn(relaxUtterance(attribute));
      });
      wrap.appendChild(button);
    }
    return wrap;
  }

  renderState(state: StateSnapshot): void {
    this.requirementsBody.innerHTML = "";
    for (const req of state.requirements) {
      const row = document.createElement("tr");
      row.className = req.polarity;
      const polarity = document.createElement("td");
      polarity.textContent = req.polarity === "require" ? "+" : "-";
      const attribute = document.createElement("td");
      attribute.textContent = req.attribute;
      const values = document.createElement("td");
      values.textContent = req.values.join(", ");
      row.append(polarity, attribute, values);
      this.requirementsBody.appendChild(row);
    }
    this.historyList.innerHTML = "";
    state.history.forEach((place, index) => {
      const item = document.createElement("li");
      const link = document.createElement("button");
      link.type = "button";
      link.className = "history-entry";
      link.textContent = place.name;
      link.addEventListener("click", () => {
        void this.sendTurn(historyUtterance(index + 1));
      });
      item.appendChild(link);
      this.historyList.appendChild(item);
    });
    this.stateText.textContent = state.text;
  }

  private handleError(error: unknown, lastText: string): void {
    if (error instanceof SessionExpiredError) {
      this.offerNewSession();
      return;
    }
    const message =
      error instanceof ApiError ? error.message : "network failure";
    this.notice.innerHTML = "";
    const label = document.createElement("span");
    label.textContent = `Could not send (${message}). `;
    const retry = document.createElement("button");
    retry.type = "button";
    retry.id = "retry";
    retry.textContent = "Retry";
    retry.addEventListener("click", () => {
      this.notice.innerHTML = "";
      void this.sendTurn(lastText);
    });
    this.notice.append(label, retry);
  }

  private offerNewSession(): void {
    this.notice.innerHTML = "";
    const label = document.createElement("span");
    label.textContent = "This session has expired. ";
    const fresh = document.createElement("button");
    fresh.type = "button";
    fresh.id = "new-session";
    fresh.textContent = "Start a new session";
    fresh.addEventListener("click", () => {
      void this.newSession();
    });
    this.notice.append(label, fresh);
  }

  private updateControls(): void {
    this.sendButton.disabled = this.busy || !this.input.value.trim();
    this.input.disabled = this.busy;
  }
}
