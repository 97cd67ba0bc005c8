// Chat pane: message log, pending status, suggestion buttons, Tab-reachable
// history. Screen-reader text comes from the shared live region, not here.

export interface ChatHooks {
  onSubmit: (text: string) => void;
  onSuggestion: (text: string) => void;
  onMoreSuggestions: () => void;
}

export class ChatPane {
  readonly root: HTMLElement;
  readonly input: HTMLInputElement;
  readonly log: HTMLElement;
  private suggestionsBox: HTMLElement;
  private status: HTMLElement | null = null;

  constructor(container: HTMLElement, private hooks: ChatHooks) {
    this.root = document.createElement("section");
    this.root.className = "chat-pane";
    this.root.setAttribute("aria-label", "Chat");

    this.log = document.createElement("div");
    this.log.className = "chat-log";
    this.log.setAttribute("role", "log");
    this.root.appendChild(this.log);

    this.suggestionsBox = document.createElement("div");
    this.suggestionsBox.className = "suggestions";
    this.root.appendChild(this.suggestionsBox);

    const form = document.createElement("form");
    this.input = document.createElement("input");
    this.input.type = "text";
    this.input.setAttribute("aria-label", "Type your question here, press enter to submit");
    this.input.placeholder = "Ask about the map…";
    form.appendChild(this.input);
    const submit = document.createElement("button");
    submit.type = "submit";
    submit.textContent = "Ask";
    form.appendChild(submit);
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      const text = this.input.value.trim();
      if (!text) return;
      this.input.value = "";
      this.hooks.onSubmit(text);
    });
    this.root.appendChild(form);
    container.appendChild(this.root);
  }

  /** Echo the user's query and show the pending indicator. */
  addQuery(text: string): void {
    this.addMessage("user", text);
    this.status = this.addMessage("status", "Looking for answers…");
  }

  addAnswer(text: string, source: string): void {
    if (this.status) {
      this.status.remove();
      this.status = null;
    }
    const el = this.addMessage("assistant", text);
    el.dataset.source = source;
  }

  addNotice(text: string): void {
    if (this.status) {
      this.status.remove();
      this.status = null;
    }
    this.addMessage("status", text);
  }

  private addMessage(role: string, text: string): HTMLElement {
    const el = document.createElement("div");
    el.className = `message ${role}`;
    el.textContent = text;
    el.tabIndex = 0; // Tab traverses conversation history
    this.log.appendChild(el);
    el.scrollIntoView?.({ block: "end" });
    return el;
  }

  showSuggestions(questions: string[]): void {
    this.suggestionsBox.textContent = "";
    for (const question of questions) {
      const btn = document.createElement("button");
      btn.type = "button";
      btn.className = "suggestion";
      btn.textContent = question;
      btn.addEventListener("click", () => this.hooks.onSuggestion(question));
      this.suggestionsBox.appendChild(btn);
    }
    const more = document.createElement("button");
    more.type = "button";
    more.className = "more-suggestions";
    more.textContent = "More suggestions";
    more.addEventListener("click", () => this.hooks.onMoreSuggestions());
    this.suggestionsBox.appendChild(more);
  }

  focusInput(): void {
    this.input.focus();
  }
}
