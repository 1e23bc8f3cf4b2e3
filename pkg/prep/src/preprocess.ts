import * as fs from "node:fs";

import { backendFor, ParseRequest } from "./backend";
import { formatBlock, formatFile } from "./conllu";
import { readSentences } from "./semeval";
import { tokenForms } from "./tokenizer";

export class AlignmentError extends Error {}

export interface ParseJob {
  xmlPath: string;
  outPath: string;
  model: string;
}

export interface PrepSummary {
  sentences: number;
  tokens: number;
}

/**
 * Tokenize every sentence of a SemEval file, parse over those exact tokens,
 * and write one CoNLL-U block per sentence in document order. The token
 * count audit runs on every sentence before anything is written: a parser
 * that re-segments produces a head count that no longer matches and the
 * whole job fails rather than emitting misaligned trees.
 */
export async function preprocess(job: ParseJob): Promise<PrepSummary> {
  const xml = fs.readFileSync(job.xmlPath, "utf-8");
  const sentences = readSentences(xml);
  const backend = backendFor(job.model);

  const requests: ParseRequest[] = sentences.map((sentence) => {
    const tokens = tokenForms(sentence.text);
    if (tokens.length === 0) {
      throw new AlignmentError(`sentence ${sentence.id} has no tokens`);
    }
    return { sentId: sentence.id, tokens };
  });

  const parses = await backend.parse(requests);

  const blocks = requests.map((request, i) => {
    const heads = parses[i];
    if (heads.length !== request.tokens.length) {
      throw new AlignmentError(
        `sentence ${request.sentId}: parser returned ${heads.length} heads ` +
          `for ${request.tokens.length} tokens; it must not re-segment`,
      );
    }
    return formatBlock(request.sentId, request.tokens, heads);
  });

  fs.writeFileSync(job.outPath, formatFile(blocks));
  return {
    sentences: requests.length,
    tokens: requests.reduce((sum, r) => sum + r.tokens.length, 0),
  };
}
