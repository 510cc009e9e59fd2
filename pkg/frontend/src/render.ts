/**
 * Maps per-character attributes to presentation, DOM-free:
 *
 *   hl=<kind>     token color class
 *   spot=1        underline; carries the ui context-menu URI if present
 *   fold=hidden   character hidden
 *   display=<v>   v rendered in place of the character
 *
 * Unknown keys are ignored for forward compatibility.
 */

import { Doc } from "./changeset.js";

export interface Segment {
  text: string;
  classes: string[];
  uiUri?: string;
  /** index of the first source character this segment came from */
  sourceStart: number;
}

export function charPresentation(pairs: Map<string, string>): {
  hidden: boolean;
  display?: string;
  classes: string[];
  uiUri?: string;
} {
  const classes: string[] = [];
  const hl = pairs.get("hl");
  if (hl) classes.push(`hl-${hl}`);
  if (pairs.get("spot") === "1") classes.push("spot");
  if (pairs.has("display-error")) classes.push("display-error");
  const uiUri = pairs.get("ui");
  return {
    hidden: pairs.get("fold") === "hidden",
    display: pairs.get("display"),
    classes,
    uiUri,
  };
}

/** The raw-text pane: every character visible, styling only. */
export function rawSegments(doc: Doc): Segment[] {
  const out: Segment[] = [];
  for (let i = 0; i < doc.length; i++) {
    const view = charPresentation(new Map(doc.charPairs(i)));
    const last = out[out.length - 1];
    if (
      last &&
      last.classes.join(" ") === view.classes.join(" ") &&
      last.uiUri === view.uiUri
    ) {
      last.text += doc.chars[i];
    } else {
      out.push({ text: doc.chars[i], classes: view.classes, uiUri: view.uiUri, sourceStart: i });
    }
  }
  return out;
}

/** The reading pane: fold=hidden dropped, display values substituted. */
export function readingSegments(doc: Doc): Segment[] {
  const out: Segment[] = [];
  for (let i = 0; i < doc.length; i++) {
    const view = charPresentation(new Map(doc.charPairs(i)));
    if (view.display !== undefined) {
      out.push({ text: view.display, classes: ["display", ...view.classes], sourceStart: i });
      continue;
    }
    if (view.hidden) continue;
    const last = out[out.length - 1];
    if (
      last &&
      !last.classes.includes("display") &&
      last.classes.join(" ") === view.classes.join(" ") &&
      last.uiUri === view.uiUri
    ) {
      last.text += doc.chars[i];
    } else {
      out.push({ text: doc.chars[i], classes: view.classes, uiUri: view.uiUri, sourceStart: i });
    }
  }
  return out;
}

export function renderVisibleText(doc: Doc): string {
  return readingSegments(doc)
    .map((s) => s.text)
    .join("");
}
