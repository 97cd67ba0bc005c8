// ARIA live region: the single channel through which every focus change and
// status update reaches assistive technology.

export class Announcer {
  private region: HTMLElement;
  readonly log: string[] = [];

  constructor(container: HTMLElement = document.body) {
    const el = document.createElement("div");
    el.id = "live-region";
    el.setAttribute("role", "status");
    el.setAttribute("aria-live", "polite");
    el.className = "sr-only";
    container.appendChild(el);
    this.region = el;
  }

  /** Replace the live region's text; repeated identical strings still fire
   * by clearing first (screen readers skip unchanged content). */
  announce(text: string): void {
    if (!text) return;
    this.region.textContent = "";
    this.region.textContent = text;
    this.log.push(text);
  }

  get element(): HTMLElement {
    return this.region;
  }
}
