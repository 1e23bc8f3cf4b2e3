import * as fs from "node:fs";
import * as path from "node:path";
import { describe, expect, it } from "vitest";

import { readSentences, XmlFormatError } from "../src/semeval";

const SAMPLE = fs.readFileSync(
  path.join(__dirname, "fixtures", "sample.xml"),
  "utf-8",
);

describe("readSentences", () => {
  it("returns every sentence in document order", () => {
    const sentences = readSentences(SAMPLE);
    expect(sentences).toHaveLength(10);
    expect(sentences.map((s) => s.id).slice(0, 3)).toEqual([
      "restaurant:10", "restaurant:11", "restaurant:12",
    ]);
  });

  it("decodes the XML entities in the text", () => {
    const sentences = readSentences(SAMPLE);
    expect(sentences[0].text).toBe("The salad was great & the staff were friendly!");
    expect(sentences[2].text).toBe('I paid $5.99 for a so-called "premium" coffee.');
    expect(sentences[7].text).toBe("The menu lists 12 entrées <new>.");
  });

  it("handles a single-sentence file", () => {
    const sentences = readSentences(
      "<sentences><sentence id=\"a\"><text>One.</text></sentence></sentences>",
    );
    expect(sentences).toEqual([{ id: "a", text: "One." }]);
  });

  it("keeps numeric-looking text as a string", () => {
    const sentences = readSentences(
      "<sentences><sentence id=\"n\"><text>1984</text></sentence></sentences>",
    );
    expect(sentences[0].text).toBe("1984");
  });

  it("rejects malformed XML with the line number", () => {
    expect(() => readSentences("<sentences><sentence></sentences>")).toThrow(
      XmlFormatError,
    );
  });

  it("rejects a file without sentences", () => {
    expect(() => readSentences("<sentences/>")).toThrow(/no <sentence>/);
  });

  it("rejects a sentence without text", () => {
    expect(() =>
      readSentences("<sentences><sentence id=\"s7\"><aspectTerms/></sentence></sentences>"),
    ).toThrow(/s7 has no <text>/);
  });
});
