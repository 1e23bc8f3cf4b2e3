"""Shared fixtures: synthetic SemEval-style data small enough to train on."""

from __future__ import annotations

import random

import numpy as np
import pytest

from pwcn import (
    ROOT,
    DepForest,
    instances_from_records,
    parse_semeval_xml,
    tokenize,
    write_conllu,
)

GOOD = ["fabulous", "tasty", "great", "lovely"]
BAD = ["dreadful", "awful", "bland", "rude"]
NOUNS = ["pizza", "service", "salad", "staff", "wine", "menu", "decor", "soup"]
FILL = ["frankly", "honestly", "overall", "somehow"]


def synth_xml(n_sentences: int, seed: int) -> str:
    """Sentences whose polarity is decided by one adjective near the aspect."""
    rng = random.Random(seed)
    lines = ['<?xml version="1.0" encoding="UTF-8"?>', "<sentences>"]
    for k in range(n_sentences):
        noun = rng.choice(NOUNS)
        roll = rng.random()
        if roll < 0.2:
            text = f"the {noun} was there"
            polarity = "neutral"
        elif roll < 0.6:
            text = f"{rng.choice(FILL)} the {noun} was {rng.choice(GOOD)}"
            polarity = "positive"
        else:
            text = f"{rng.choice(FILL)} the {noun} was {rng.choice(BAD)}"
            polarity = "negative"
        start = text.index(noun)
        lines += [
            f'  <sentence id="s{k}">',
            f"    <text>{text}</text>",
            "    <aspectTerms>",
            f'      <aspectTerm term="{noun}" polarity="{polarity}" '
            f'from="{start}" to="{start + len(noun)}"/>',
            "    </aspectTerms>",
            "  </sentence>",
        ]
    lines.append("</sentences>")
    return "\n".join(lines) + "\n"


def synth_vectors(d_e: int, seed: int) -> str:
    words = GOOD + BAD + NOUNS + FILL + ["the", "was", "there"]
    rng = np.random.default_rng(seed)
    rows = []
    for w in words:
        rows.append(w + " " + " ".join(f"{v:.4f}" for v in rng.uniform(-0.3, 0.3, d_e)))
    return "\n".join(rows) + "\n"


def chain_conllu(xml_text: str) -> str:
    """Naive parses: token i headed by i-1, token 0 the root."""
    records = parse_semeval_xml(xml_text)
    forests, seen = [], set()
    for rec in records:
        if rec.sentence_id in seen:
            continue
        seen.add(rec.sentence_id)
        toks = tuple(t for t, _, _ in tokenize(rec.text))
        heads = tuple([ROOT] + list(range(len(toks) - 1)))
        forests.append(DepForest(heads, toks, rec.sentence_id))
    return write_conllu(forests)


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    """On-disk train/test XML + vectors + chain CoNLL-U, shared per session."""
    root = tmp_path_factory.mktemp("data")
    train_xml = synth_xml(60, seed=5)
    test_xml = synth_xml(24, seed=6)
    (root / "train.xml").write_text(train_xml)
    (root / "test.xml").write_text(test_xml)
    (root / "vectors.txt").write_text(synth_vectors(8, seed=7))
    (root / "train.conllu").write_text(chain_conllu(train_xml))
    (root / "test.conllu").write_text(chain_conllu(test_xml))
    return root


@pytest.fixture(scope="session")
def tiny_instances(tiny_dataset):
    text = (tiny_dataset / "train.xml").read_text()
    return instances_from_records(parse_semeval_xml(text))
