import { XMLParser, XMLValidator } from "fast-xml-parser";

export interface SentenceEntry {
  id: string;
  text: string;
}

export class XmlFormatError extends Error {}

/**
 * Pull every <sentence> out of a SemEval task file, in document order.
 * Only the id attribute and the <text> child matter for parsing; aspect
 * annotations are the training pipeline's business.
 */
export function readSentences(xml: string): SentenceEntry[] {
  const verdict = XMLValidator.validate(xml);
  if (verdict !== true) {
    throw new XmlFormatError(
      `malformed XML at line ${verdict.err.line}: ${verdict.err.msg}`,
    );
  }
  const parser = new XMLParser({
    ignoreAttributes: false,
    attributeNamePrefix: "@_",
    isArray: (name) => name === "sentence",
    // keep <text>1984</text> a string, not a number
    parseTagValue: false,
  });
  const doc = parser.parse(xml);
  const root = doc.sentences;
  if (!root || !Array.isArray(root.sentence) || root.sentence.length === 0) {
    throw new XmlFormatError("no <sentence> elements found");
  }

  const entries: SentenceEntry[] = [];
  for (const sentence of root.sentence) {
    const id = String(sentence["@_id"] ?? "");
    const text = sentence.text;
    if (typeof text !== "string" || text.length === 0) {
      throw new XmlFormatError(
        `sentence ${id || `#${entries.length}`} has no <text> element`,
      );
    }
    entries.push({ id, text });
  }
  return entries;
}
