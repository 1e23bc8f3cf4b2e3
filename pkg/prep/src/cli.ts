#!/usr/bin/env node
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { ParserSetupError } from "./backend";
import { preprocess } from "./preprocess";

class UsageError extends Error {}

export async function main(argv: string[]): Promise<number> {
  const args = await yargs(argv)
    .scriptName("pwcn-prep")
    .usage(
      "$0 --xml <in> --out <out.conllu> --model <name>\n\n" +
        "Tokenize SemEval sentences and emit dependency parses as CoNLL-U\n" +
        "aligned with the canonical tokenizer.",
    )
    .option("xml", { type: "string", demandOption: true, describe: "input SemEval XML file" })
    .option("out", { type: "string", demandOption: true, describe: "output CoNLL-U file" })
    .option("model", {
      type: "string",
      demandOption: true,
      describe: "parser: spacy:<model> or cmd:<program>",
    })
    .strict()
    .exitProcess(false)
    .fail((msg, err) => {
      throw err ?? new UsageError(msg);
    })
    .parse();

  const summary = await preprocess({
    xmlPath: args.xml,
    outPath: args.out,
    model: args.model,
  });
  console.log(
    `wrote ${summary.sentences} sentences (${summary.tokens} tokens) to ${args.out}`,
  );
  return 0;
}

if (require.main === module) {
  main(hideBin(process.argv))
    .then((code) => process.exit(code))
    .catch((err) => {
      if (err instanceof UsageError) {
        console.error(`usage error: ${err.message}`);
        process.exit(2);
      }
      const prefix = err instanceof ParserSetupError ? "setup error" : "error";
      console.error(`${prefix}: ${err instanceof Error ? err.message : err}`);
      process.exit(1);
    });
}
