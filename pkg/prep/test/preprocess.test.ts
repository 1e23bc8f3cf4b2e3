import { execFileSync, spawnSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ParserSetupError } from "../src/backend";
import { AlignmentError, preprocess } from "../src/preprocess";
import { readSentences } from "../src/semeval";

const FIXTURES = path.join(__dirname, "fixtures");
const SAMPLE_XML = path.join(FIXTURES, "sample.xml");
const CHAIN = `cmd:python3 ${path.join(FIXTURES, "stub_parser.py")}`;
const MULTIROOT = `cmd:python3 ${path.join(FIXTURES, "multiroot_parser.py")}`;
const MERGING = `cmd:python3 ${path.join(FIXTURES, "merging_parser.py")}`;

let workDir: string;
let smallXml: string;

beforeAll(() => {
  workDir = fs.mkdtempSync(path.join(os.tmpdir(), "prep-test-"));
  smallXml = path.join(workDir, "small.xml");
  fs.writeFileSync(
    smallXml,
    "<sentences>" +
      '<sentence id="a:1"><text>Good food.</text></sentence>' +
      '<sentence id="a:2"><text>Bad service!</text></sentence>' +
      "</sentences>",
  );
});

afterAll(() => {
  fs.rmSync(workDir, { recursive: true, force: true });
});

describe("preprocess", () => {
  it("writes one block per sentence, in document order", async () => {
    const out = path.join(workDir, "small.conllu");
    const summary = await preprocess({ xmlPath: smallXml, outPath: out, model: CHAIN });
    expect(summary).toEqual({ sentences: 2, tokens: 6 });

    const text = fs.readFileSync(out, "utf-8");
    expect(text.indexOf("# sent_id = a:1")).toBeLessThan(
      text.indexOf("# sent_id = a:2"),
    );
    expect(text.endsWith("\n")).toBe(true);
    expect(text).toContain("1\tGood\t_\t_\t_\t_\t0\t_\t_\t_");
    expect(text).toContain("2\tfood\t_\t_\t_\t_\t1\t_\t_\t_");
  });

  it("passes a multi-rooted parse through untouched", async () => {
    const out = path.join(workDir, "multiroot.conllu");
    await preprocess({ xmlPath: smallXml, outPath: out, model: MULTIROOT });
    const headCols = fs
      .readFileSync(out, "utf-8")
      .split("\n")
      .filter((line) => /^\d/.test(line))
      .map((line) => line.split("\t")[6]);
    expect(headCols).toEqual(["0", "0", "0", "0", "0", "0"]);
  });

  it("fails the whole job when the parser re-segments", async () => {
    const out = path.join(workDir, "merged.conllu");
    const job = preprocess({ xmlPath: smallXml, outPath: out, model: MERGING });
    await expect(job).rejects.toThrow(AlignmentError);
    await expect(job).rejects.toThrow(
      /a:1: parser returned 2 heads for 3 tokens; it must not re-segment/,
    );
    expect(fs.existsSync(out)).toBe(false);
  });

  it("rejects an unknown model scheme", async () => {
    const job = preprocess({
      xmlPath: smallXml,
      outPath: path.join(workDir, "never.conllu"),
      model: "stanford:lstm",
    });
    await expect(job).rejects.toThrow(/unknown parser model 'stanford:lstm'/);
  });

  it("rejects an empty spaCy model name", async () => {
    const job = preprocess({
      xmlPath: smallXml,
      outPath: path.join(workDir, "never.conllu"),
      model: "spacy:",
    });
    await expect(job).rejects.toThrow(ParserSetupError);
  });

  it("surfaces a setup hint when the spaCy backend cannot start", async () => {
    // Works whether or not spaCy is installed: a missing library says
    // "pip install spacy", a missing model says how to download it.
    const job = preprocess({
      xmlPath: smallXml,
      outPath: path.join(workDir, "never.conllu"),
      model: "spacy:xx_no_such_model_zz",
    });
    await expect(job).rejects.toThrow(ParserSetupError);
    await expect(job).rejects.toThrow(/install|download/);
  }, 30000);
});

describe("cli", () => {
  const CLI = path.join(__dirname, "..", "dist", "cli.js");

  beforeAll(() => {
    if (!fs.existsSync(CLI)) {
      throw new Error("dist/cli.js missing; run `npm run build` first");
    }
  });

  function runCli(args: string[]) {
    return spawnSync(process.execPath, [CLI, ...args], { encoding: "utf-8" });
  }

  it("exits 0 and reports the summary on success", () => {
    const out = path.join(workDir, "cli.conllu");
    const run = runCli(["--xml", smallXml, "--out", out, "--model", CHAIN]);
    expect(run.status).toBe(0);
    expect(run.stdout).toContain(`wrote 2 sentences (6 tokens) to ${out}`);
    expect(fs.existsSync(out)).toBe(true);
  });

  it("exits 2 on a usage error", () => {
    const run = runCli(["--xml", smallXml, "--out", "x.conllu"]);
    expect(run.status).toBe(2);
    expect(run.stderr).toContain("usage error:");
    expect(run.stderr).toContain("model");
  });

  it("exits 2 on an unknown flag", () => {
    const run = runCli([
      "--xml", smallXml, "--out", "x.conllu", "--model", CHAIN, "--fast",
    ]);
    expect(run.status).toBe(2);
    expect(run.stderr).toContain("usage error:");
  });

  it("exits 1 when the input file is missing", () => {
    const run = runCli([
      "--xml", path.join(workDir, "no_such.xml"),
      "--out", path.join(workDir, "x.conllu"),
      "--model", CHAIN,
    ]);
    expect(run.status).toBe(1);
    expect(run.stderr).toContain("error:");
  });

  it("exits 1 with a setup hint when the parser cannot start", () => {
    const run = runCli([
      "--xml", smallXml,
      "--out", path.join(workDir, "x.conllu"),
      "--model", "cmd:no-such-program-zz",
    ]);
    expect(run.status).toBe(1);
    expect(run.stderr).toContain("setup error:");
  });
});

describe("corpus audit", () => {
  // Every sentence of the fixture corpus must round-trip: the emitted
  // CoNLL-U is accepted by the training pipeline's reader and the FORM
  // column matches the canonical tokenizer exactly, sentence by sentence.
  it("emits blocks the python loader accepts with matching forms", async () => {
    const out = path.join(workDir, "sample.conllu");
    const summary = await preprocess({ xmlPath: SAMPLE_XML, outPath: out, model: CHAIN });
    expect(summary.sentences).toBe(10);

    const texts = readSentences(fs.readFileSync(SAMPLE_XML, "utf-8")).map(
      (s) => s.text,
    );
    const script = [
      "import json, sys",
      "import pwcn",
      "payload = json.load(sys.stdin)",
      "forests = pwcn.parse_conllu(payload['conllu'])",
      "mismatches = []",
      "for forest, text in zip(forests, payload['texts']):",
      "    want = [t[0] for t in pwcn.tokenize(text)]",
      "    if list(forest.forms) != want:",
      "        mismatches.append({'sent_id': forest.sent_id, 'got': list(forest.forms), 'want': want})",
      "print(json.dumps({'blocks': len(forests), 'mismatches': mismatches}))",
    ].join("\n");
    const reply = JSON.parse(
      execFileSync("python3", ["-c", script], {
        input: JSON.stringify({
          conllu: fs.readFileSync(out, "utf-8"),
          texts,
        }),
        encoding: "utf-8",
      }),
    );
    expect(reply.mismatches).toEqual([]);
    expect(reply.blocks).toBe(10);
  });
});
