import { spawn } from "node:child_process";
import * as path from "node:path";

/** The parser could not even start: missing program, model, or library. */
export class ParserSetupError extends Error {}

/** The parser ran but broke the line protocol. */
export class ParserProtocolError extends Error {}

export interface ParseRequest {
  sentId: string;
  tokens: string[];
}

export interface ParserBackend {
  readonly describe: string;
  parse(requests: ParseRequest[]): Promise<number[][]>;
}

/**
 * All backends speak the same protocol: one JSON object per line on stdin
 * ({"sent_id": ..., "tokens": [...]}), one {"heads": [...]} reply per line
 * on stdout, in order, heads in CoNLL-U convention (0 = root, else 1-based).
 *
 * A parser must never re-segment: it gets the canonical tokens and answers
 * with exactly one head per token. Exit code 3 is reserved for setup
 * problems (missing library or model) and surfaces stderr as the hint.
 */
class SubprocessBackend implements ParserBackend {
  constructor(
    private readonly command: string,
    private readonly args: string[],
    readonly describe: string,
  ) {}

  parse(requests: ParseRequest[]): Promise<number[][]> {
    return new Promise((resolve, reject) => {
      const child = spawn(this.command, this.args, {
        stdio: ["pipe", "pipe", "pipe"],
      });
      let stdout = "";
      let stderr = "";
      child.stdout.setEncoding("utf-8");
      child.stderr.setEncoding("utf-8");
      child.stdout.on("data", (chunk) => (stdout += chunk));
      child.stderr.on("data", (chunk) => (stderr += chunk));
      child.on("error", (err) => {
        reject(
          new ParserSetupError(`cannot run ${this.describe}: ${err.message}`),
        );
      });
      child.on("close", (code) => {
        if (code === 3) {
          reject(new ParserSetupError(stderr.trim() || `${this.describe} reported a setup problem`));
          return;
        }
        if (code !== 0) {
          reject(
            new ParserProtocolError(
              `${this.describe} exited with code ${code}: ${stderr.trim()}`,
            ),
          );
          return;
        }
        try {
          resolve(this.decode(stdout, requests));
        } catch (err) {
          reject(err);
        }
      });

      for (const request of requests) {
        child.stdin.write(
          JSON.stringify({ sent_id: request.sentId, tokens: request.tokens }) + "\n",
        );
      }
      child.stdin.end();
    });
  }

  private decode(stdout: string, requests: ParseRequest[]): number[][] {
    const lines = stdout.split("\n").filter((line) => line.trim().length > 0);
    if (lines.length !== requests.length) {
      throw new ParserProtocolError(
        `${this.describe} answered ${lines.length} of ${requests.length} sentences`,
      );
    }
    return lines.map((line, i) => {
      let reply: unknown;
      try {
        reply = JSON.parse(line);
      } catch {
        throw new ParserProtocolError(
          `${this.describe}: reply for ${requests[i].sentId} is not JSON`,
        );
      }
      const heads = (reply as { heads?: unknown }).heads;
      if (
        !Array.isArray(heads) ||
        heads.some((h) => !Number.isInteger(h))
      ) {
        throw new ParserProtocolError(
          `${this.describe}: reply for ${requests[i].sentId} has no integer heads array`,
        );
      }
      return heads as number[];
    });
  }
}

const SPACY_DRIVER = path.join(__dirname, "..", "drivers", "spacy_driver.py");

/**
 * Model identifiers:
 *   spacy:<model>  - run the bundled spaCy driver with that model name
 *   cmd:<program>  - run any executable speaking the line protocol
 *                    (whitespace-split, so arguments may be included)
 */
export function backendFor(model: string): ParserBackend {
  if (model.startsWith("spacy:")) {
    const name = model.slice("spacy:".length);
    if (!name) {
      throw new ParserSetupError("empty spaCy model name; use spacy:<model>");
    }
    return new SubprocessBackend("python3", [SPACY_DRIVER, name], model);
  }
  if (model.startsWith("cmd:")) {
    const parts = model.slice("cmd:".length).split(/\s+/).filter(Boolean);
    if (parts.length === 0) {
      throw new ParserSetupError("empty parser command; use cmd:<program>");
    }
    return new SubprocessBackend(parts[0], parts.slice(1), model);
  }
  throw new ParserSetupError(
    `unknown parser model '${model}'; use spacy:<model> or cmd:<program>`,
  );
}
