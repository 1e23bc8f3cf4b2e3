export class ConlluError extends Error {}

/**
 * One CoNLL-U sentence block. `heads` uses the file convention directly:
 * 0 is the root, anything else is a 1-based token index.
 */
export function formatBlock(
  sentId: string,
  forms: string[],
  heads: number[],
): string {
  if (forms.length === 0) {
    throw new ConlluError(`sentence ${sentId}: no tokens to emit`);
  }
  if (heads.length !== forms.length) {
    throw new ConlluError(
      `sentence ${sentId}: ${forms.length} tokens but ${heads.length} heads`,
    );
  }
  const lines: string[] = [];
  if (sentId) {
    lines.push(`# sent_id = ${sentId}`);
  }
  forms.forEach((form, i) => {
    // the FORM column is tab-delimited; the tokenizer never yields
    // whitespace, so this only fires on a broken caller
    if (/\s/.test(form) || form.length === 0) {
      throw new ConlluError(`sentence ${sentId}: unusable FORM ${JSON.stringify(form)}`);
    }
    const head = heads[i];
    if (!Number.isInteger(head) || head < 0 || head > forms.length) {
      throw new ConlluError(`sentence ${sentId}: token ${i + 1} has invalid head ${head}`);
    }
    if (head === i + 1) {
      throw new ConlluError(`sentence ${sentId}: token ${i + 1} is its own head`);
    }
    lines.push(`${i + 1}\t${form}\t_\t_\t_\t_\t${head}\t_\t_\t_`);
  });
  return lines.join("\n");
}

export function formatFile(blocks: string[]): string {
  return blocks.join("\n\n") + "\n";
}
