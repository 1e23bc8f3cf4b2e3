"""spaCy side of the parser line protocol.

Reads {"sent_id": ..., "tokens": [...]} JSON lines on stdin, answers one
{"heads": [...]} line each (CoNLL-U convention: 0 root, else 1-based).
The Doc is built from the given tokens, so spaCy never re-segments.

Exit code 3 means a setup problem; stderr then carries the fix.
"""

import json
import sys


def main() -> int:
    if len(sys.argv) != 2:
        print("usage: spacy_driver.py <model>", file=sys.stderr)
        return 2
    model = sys.argv[1]
    try:
        import spacy
        from spacy.tokens import Doc
    except ImportError:
        print("spacy is not installed; run: pip install spacy", file=sys.stderr)
        return 3
    try:
        nlp = spacy.load(model, exclude=["ner", "lemmatizer", "textcat"])
    except OSError:
        print(
            f"spaCy model '{model}' is not available; run: python3 -m spacy download {model}",
            file=sys.stderr,
        )
        return 3

    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        request = json.loads(line)
        doc = Doc(nlp.vocab, words=request["tokens"])
        for _, component in nlp.pipeline:
            doc = component(doc)
        heads = [0 if tok.head.i == tok.i else tok.head.i + 1 for tok in doc]
        sys.stdout.write(json.dumps({"heads": heads}) + "\n")
        sys.stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
