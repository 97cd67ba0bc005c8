// Application controller: one UiState, one live region, synchronized map and
// chat over the HTTP API. All keyboard shortcuts land here.

import type { Api } from "./api.js";
import { Announcer } from "./announcer.js";
import { ChatPane } from "./chat.js";
import { MapView } from "./mapview.js";
import { interpretKey, type UiAction } from "./shortcuts.js";
import type {
  Answer,
  DatasetInfo,
  InteractionMode,
  NavigateAction,
  RegionCollection,
  RegionFeature,
} from "./types.js";

export interface UiState {
  mode: InteractionMode;
  focusId: string | null;
  focusLevel: "state" | "county";
  lastAnswerText: string;
  helpVisible: boolean;
}

const HELP_ROWS: [string, string][] = [
  ["Ctrl + M", "Toggle between map and chat interaction"],
  ["Arrow keys", "Navigate between states/counties"],
  ["+", "Zoom in to county level within a state"],
  ["-", "Zoom out to state level"],
  ["Ctrl + L", "Hear the last response again"],
  ["Ctrl + H", "Show/hide the help window"],
  ["Ctrl + I", "Refresh question suggestions"],
];

export class App {
  readonly state: UiState = {
    mode: "chat",
    focusId: null,
    focusLevel: "state",
    lastAnswerText: "",
    helpVisible: false,
  };
  readonly announcer: Announcer;
  readonly map: MapView;
  readonly chat: ChatPane;
  readonly helpPanel: HTMLElement;

  private session = "";
  private dataset: DatasetInfo | null = null;
  private stateRegions: RegionCollection | null = null;
  private countyRegions: RegionCollection | null = null;
  private queryInFlight = false;
  private navChain: Promise<unknown> = Promise.resolve();

  constructor(
    private api: Api,
    private root: HTMLElement,
  ) {
    this.announcer = new Announcer(root);

    const mapContainer = document.createElement("section");
    mapContainer.className = "map-pane";
    mapContainer.setAttribute("aria-label", "Map");
    root.appendChild(mapContainer);
    this.map = new MapView(mapContainer, (id) => this.handleRegionClick(id));

    this.chat = new ChatPane(root, {
      onSubmit: (text) => void this.submitQuery(text),
      onSuggestion: (text) => void this.submitQuery(text),
      onMoreSuggestions: () => void this.refreshSuggestions(),
    });

    this.helpPanel = document.createElement("dialog");
    this.helpPanel.className = "help-panel";
    this.helpPanel.setAttribute("aria-label", "Keyboard shortcuts");
    const list = document.createElement("dl");
    for (const [keys, what] of HELP_ROWS) {
      const dt = document.createElement("dt");
      dt.textContent = keys;
      const dd = document.createElement("dd");
      dd.textContent = what;
      list.appendChild(dt);
      list.appendChild(dd);
    }
    this.helpPanel.appendChild(list);
    this.helpPanel.hidden = true;
    root.appendChild(this.helpPanel);

    root.ownerDocument.addEventListener("keydown", (event) => this.handleKey(event));
  }

  async start(): Promise<void> {
    this.session = await this.api.createSession();
    this.dataset = await this.api.dataset();
    this.stateRegions = await this.api.regions("state");
    this.renderLevel("state");
    this.chat.addNotice(
      `${this.dataset.name}: a choropleth map of ${this.dataset.levels.state} states` +
        ` and ${this.dataset.levels.county} counties. Ask a question, pick a` +
        ` suggestion, or press Ctrl+M to explore the map with arrow keys.`,
    );
    await this.refreshSuggestions();
    this.chat.focusInput();
  }

  // -- rendering ---------------------------------------------------------

  private legendClasses(level: "state" | "county") {
    if (!this.dataset) return [];
    const metric = this.dataset.default_metric;
    return this.dataset.legend[metric]?.levels[level]?.classes ?? [];
  }

  private renderLevel(level: "state" | "county", parentId?: string): void {
    if (!this.dataset) return;
    let features: RegionFeature[] = [];
    if (level === "state") {
      features = this.stateRegions?.features ?? [];
    } else {
      features = (this.countyRegions?.features ?? []).filter(
        (f) => !parentId || f.properties.parent_id === parentId,
      );
    }
    this.map.render(features, this.dataset.default_metric, this.legendClasses(level));
    this.state.focusLevel = level;
  }

  private async ensureCounties(): Promise<void> {
    if (!this.countyRegions) {
      this.countyRegions = await this.api.regions("county");
    }
  }

  // -- answer application -------------------------------------------------

  /** Apply one server answer: chat text, map directive, and exactly one
   * live-region announcement (the server's announce string) when present. */
  private async applyAnswer(answer: Answer, echoInChat = true): Promise<void> {
    if (echoInChat) {
      this.chat.addAnswer(answer.text, answer.source);
    }
    this.state.lastAnswerText = answer.text;

    const directive = answer.map ?? {};
    if (directive.zoom === "county" && directive.focus) {
      await this.ensureCounties();
      const parent = this.parentOf(directive.focus);
      this.renderLevel("county", parent ?? undefined);
    } else if (directive.zoom === "state") {
      this.renderLevel("state");
    }
    if (directive.focus) {
      if (!this.map.has(directive.focus) && this.state.focusLevel === "county") {
        // focus moved to a region outside the rendered slice; re-render around it
        const parent = this.parentOf(directive.focus);
        this.renderLevel("county", parent ?? undefined);
      }
      this.map.setFocus(directive.focus);
      this.state.focusId = directive.focus;
    }
    if (directive.highlights && Object.keys(directive.highlights).length > 0) {
      this.map.setHighlights(directive.highlights);
    }
    if (answer.announce) {
      this.announcer.announce(answer.announce);
    }
  }

  private parentOf(regionId: string): string | null {
    const county = this.countyRegions?.features.find((f) => f.properties.id === regionId);
    if (county) return county.properties.parent_id;
    return null;
  }

  // -- interactions --------------------------------------------------------

  async submitQuery(text: string): Promise<void> {
    if (!text.trim()) return;
    if (this.queryInFlight) {
      this.chat.addNotice("Still looking for the previous answer…");
      return;
    }
    this.queryInFlight = true;
    this.chat.addQuery(text);
    try {
      const answer = await this.api.query(this.session, text);
      await this.applyAnswer(answer);
    } catch (error) {
      this.chat.addNotice("Sorry, that request failed. Your question is still in the box.");
      this.chat.input.value = text; // preserve input on failure
      this.announcer.announce("Request failed.");
    } finally {
      this.queryInFlight = false;
    }
  }

  /** Navigation calls queue FIFO so rapid arrow presses stay ordered. */
  navigate(action: NavigateAction): Promise<void> {
    const next = this.navChain.then(async () => {
      try {
        const answer = await this.api.navigate(this.session, action);
        await this.applyAnswer(answer, false);
        if (!answer.map?.focus) {
          // boundary or zoom notices still reach the chat log for context
          this.chat.addNotice(answer.text);
        }
      } catch {
        this.announcer.announce("Navigation failed.");
      }
    });
    this.navChain = next;
    return next;
  }

  async refreshSuggestions(): Promise<void> {
    const suggestions = await this.api.suggestions(this.session);
    this.chat.showSuggestions(suggestions);
  }

  toggleMode(): void {
    this.state.mode = this.state.mode === "map" ? "chat" : "map";
    if (this.state.mode === "map") {
      const focusName = this.state.focusId ? ` Focused on ${this.focusName()}.` : "";
      this.announcer.announce(`Map interaction enabled.${focusName}`);
      this.map.svg.setAttribute("tabindex", "0");
      this.map.svg.focus?.();
    } else {
      this.announcer.announce(
        "Chat interaction enabled. Type your question here, press enter to submit.",
      );
      this.chat.focusInput();
    }
  }

  private focusName(): string {
    const pools = [this.stateRegions?.features ?? [], this.countyRegions?.features ?? []];
    for (const pool of pools) {
      const hit = pool.find((f) => f.properties.id === this.state.focusId);
      if (hit) return hit.properties.name;
    }
    return "the map";
  }

  toggleHelp(): void {
    this.state.helpVisible = !this.state.helpVisible;
    this.helpPanel.hidden = !this.state.helpVisible;
    this.announcer.announce(this.state.helpVisible ? "Help shown." : "Help hidden.");
  }

  repeatLast(): void {
    if (this.state.lastAnswerText) {
      this.announcer.announce(this.state.lastAnswerText);
    } else {
      this.announcer.announce("Nothing to repeat yet.");
    }
    if (this.state.mode === "chat") {
      this.chat.focusInput(); // input focus is retained
    }
  }

  private handleRegionClick(id: string): void {
    const feature =
      this.stateRegions?.features.find((f) => f.properties.id === id) ??
      this.countyRegions?.features.find((f) => f.properties.id === id);
    if (!feature) return;
    void this.submitQuery(`Go to ${feature.properties.name}`);
  }

  handleKey(event: KeyboardEvent): void {
    const action = interpretKey(event, this.state.mode);
    if (!action) return;
    if (action.kind === "focus-initial" && this.state.focusId) {
      return; // later Tabs traverse the page normally
    }
    event.preventDefault?.();
    this.dispatch(action);
  }

  dispatch(action: UiAction): void {
    switch (action.kind) {
      case "toggle-mode":
        this.toggleMode();
        break;
      case "navigate":
        void this.navigate(action.action);
        break;
      case "repeat-last":
        this.repeatLast();
        break;
      case "toggle-help":
        this.toggleHelp();
        break;
      case "refresh-suggestions":
        void this.refreshSuggestions();
        break;
      case "focus-initial":
        void this.navigate("focus");
        break;
    }
  }
}
