/**
 * Canonical tokenizer: maximal runs of word characters, otherwise a single
 * non-space symbol character.
 *
 * This must agree token for token with the Python pipeline's `\w+|[^\w\s]`,
 * so the classes are spelled out rather than using JS's own \w and \s:
 *
 * - Python \w is letters, digits (Nd/Nl/No) and underscore; combining marks
 *   are NOT word characters there, so \p{M} stays out of the run class.
 * - JS \s counts U+FEFF as whitespace and U+0085 (NEL) as not; Python's is
 *   the other way around on both. Both code points are handled explicitly.
 */
const TOKEN_RE = /[\p{L}\p{N}_]+|[^\p{L}\p{N}_\s\u0085]|\uFEFF/gu;

export interface Token {
  form: string;
  start: number;
  end: number;
}

export function tokenize(text: string): Token[] {
  const tokens: Token[] = [];
  for (const match of text.matchAll(TOKEN_RE)) {
    tokens.push({
      form: match[0],
      start: match.index,
      end: match.index + match[0].length,
    });
  }
  return tokens;
}

export function tokenForms(text: string): string[] {
  return tokenize(text).map((t) => t.form);
}
