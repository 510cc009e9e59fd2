import { describe, expect, it } from "vitest";
import {
  applyChangeset,
  AttributePool,
  ChangesetBuilder,
  Doc,
} from "../src/changeset.js";
import { rawSegments, readingSegments, renderVisibleText } from "../src/render.js";

function docWith(text: string, spans: [number, number, Record<string, string>][]): Doc {
  let doc = Doc.fromText(text);
  for (const [start, end, attrs] of spans) {
    const builder = new ChangesetBuilder(doc.length, doc.pool);
    if (start > 0) builder.keep(start);
    builder.keep(end - start, attrs);
    doc = applyChangeset(doc, builder.finish());
  }
  return doc;
}

describe("attribute presentation", () => {
  it("maps hl kinds to classes and leaves plain text bare", () => {
    const doc = docWith("% note\nword", [[0, 6, { hl: "Comment" }]]);
    const segments = rawSegments(doc);
    expect(segments[0]).toMatchObject({ text: "% note", classes: ["hl-Comment"] });
    expect(segments[1]).toMatchObject({ text: "\nword", classes: [] });
  });

  it("underlines spotted terms and carries the context-menu uri", () => {
    const doc = docWith("say energy now", [
      [4, 10, { spot: "1", ui: "contextmenu.spotter_plugin.0" }],
    ]);
    const seg = rawSegments(doc).find((s) => s.text === "energy");
    expect(seg?.classes).toContain("spot");
    expect(seg?.uiUri).toBe("contextmenu.spotter_plugin.0");
  });

  it("hides folded spans in the reading view only", () => {
    const doc = docWith("\\termref{a}{body} tail", [
      [0, 12, { fold: "hidden" }],
      [16, 17, { fold: "hidden" }],
    ]);
    expect(renderVisibleText(doc)).toBe("body tail");
    expect(rawSegments(doc).map((s) => s.text).join("")).toBe("\\termref{a}{body} tail");
  });

  it("substitutes display values in place", () => {
    const doc = docWith("see \\STRcopy{m1} end", [
      [4, 16, { fold: "hidden" }],
      [4, 5, { fold: "hidden", display: "$m_1$" }],
    ]);
    expect(renderVisibleText(doc)).toBe("see $m_1$ end");
    const display = readingSegments(doc).find((s) => s.classes.includes("display"));
    expect(display?.text).toBe("$m_1$");
    expect(display?.sourceStart).toBe(4);
  });

  it("ignores unknown attribute keys", () => {
    const doc = docWith("future", [[0, 6, { holographic: "yes" }]]);
    expect(rawSegments(doc)[0]).toMatchObject({ text: "future", classes: [] });
    expect(renderVisibleText(doc)).toBe("future");
  });

  it("renders an annotated snippet to its plain form", () => {
    // \termref folded to its display text plus a transcluded label
    const text = "A \\termref{cd=c, name=n}{friendly term} and \\STRlabel[k]{K} \\STRcopy{k}.";
    const refStart = text.indexOf("\\termref");
    const bodyStart = text.indexOf("{friendly") + 1;
    const bodyEnd = text.indexOf(" term}") + " term".length;
    const labelStart = text.indexOf("\\STRlabel");
    const labelBody = text.indexOf("{K}") + 1;
    const copyStart = text.indexOf("\\STRcopy");
    const copyEnd = text.indexOf("{k}") + 3;
    let doc = docWith(text, [
      [refStart, bodyStart, { fold: "hidden" }],
      [bodyEnd, bodyEnd + 1, { fold: "hidden" }],
      [labelStart, labelBody, { fold: "hidden" }],
      [labelBody + 1, labelBody + 2, { fold: "hidden" }],
      [copyStart, copyEnd, { fold: "hidden" }],
    ]);
    const builder = new ChangesetBuilder(doc.length, doc.pool);
    builder.keep(copyStart);
    builder.keep(1, { display: "K" });
    doc = applyChangeset(doc, builder.finish());
    expect(renderVisibleText(doc)).toBe("A friendly term and K K.");
  });
});
