// Keyboard shortcut table. Pure: turns a key event into a UI action so the
// mapping can be tested without a DOM.

import type { InteractionMode, NavigateAction } from "./types.js";

export type UiAction =
  | { kind: "toggle-mode" }
  | { kind: "navigate"; action: NavigateAction }
  | { kind: "repeat-last" }
  | { kind: "toggle-help" }
  | { kind: "refresh-suggestions" }
  | { kind: "focus-initial" };

export interface KeyStroke {
  key: string;
  ctrlKey?: boolean;
  metaKey?: boolean;
}

const ARROWS: Record<string, NavigateAction> = {
  ArrowUp: "north",
  ArrowRight: "east",
  ArrowDown: "south",
  ArrowLeft: "west",
};

/**
 * Map one keystroke to an action, or null when the stroke is not a shortcut
 * in the current mode. Arrow keys and zoom apply only in map mode so typing
 * in the chat box is never hijacked; the Ctrl shortcuts work everywhere.
 */
export function interpretKey(stroke: KeyStroke, mode: InteractionMode): UiAction | null {
  const ctrl = Boolean(stroke.ctrlKey || stroke.metaKey);
  if (ctrl) {
    switch (stroke.key.toLowerCase()) {
      case "m":
        return { kind: "toggle-mode" };
      case "l":
        return { kind: "repeat-last" };
      case "h":
        return { kind: "toggle-help" };
      case "i":
        return { kind: "refresh-suggestions" };
      default:
        return null;
    }
  }
  if (mode !== "map") {
    return null;
  }
  if (stroke.key in ARROWS) {
    return { kind: "navigate", action: ARROWS[stroke.key] };
  }
  if (stroke.key === "+" || stroke.key === "=") {
    return { kind: "navigate", action: "zoom_in" };
  }
  if (stroke.key === "-" || stroke.key === "_") {
    return { kind: "navigate", action: "zoom_out" };
  }
  if (stroke.key === "Tab") {
    return { kind: "focus-initial" };
  }
  return null;
}
