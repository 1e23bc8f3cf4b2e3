"""Corpus ingestion: review XML, canonical tokenization, CoNLL-U, embeddings.

All functions here are pure: they read text that the caller already loaded
and return immutable-ish records, so they are safe to call concurrently.
"""

from __future__ import annotations

import hashlib
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

import numpy as np

from .errors import AlignmentError, DataError, FormatError, StructureError, XmlError

# Head index of tokens that have no head inside the sentence.
ROOT = -1

# Polarity classes, in fixed index order used everywhere downstream.
LABELS = ("negative", "neutral", "positive")
LABEL_INDEX = {name: i for i, name in enumerate(LABELS)}

# Canonical tokenization: maximal runs of word characters, or a single
# non-word non-space character.  Every pipeline stage (including the
# external preprocessing tool) must segment text exactly like this.
_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


@dataclass(frozen=True)
class AspectRecord:
    """One aspect occurrence as read from the XML, prior to tokenization."""

    sentence_id: str
    sentence_index: int
    text: str
    span: tuple[int, int]
    label: str


@dataclass(frozen=True)
class Instance:
    """A tokenized sentence with one labeled aspect span."""

    tokens: tuple[str, ...]
    aspect_start: int
    aspect_len: int
    label: str
    sentence_id: str = ""
    sentence_index: int = 0

    def __post_init__(self):
        n = len(self.tokens)
        if n < 1:
            raise DataError("instance must contain at least one token")
        if self.aspect_len < 1:
            raise DataError("aspect must cover at least one token")
        if not (0 <= self.aspect_start and self.aspect_start + self.aspect_len <= n):
            raise DataError(
                f"aspect span [{self.aspect_start}, "
                f"{self.aspect_start + self.aspect_len}) outside sentence of length {n}"
            )
        for tok in self.tokens:
            if not tok or any(ch.isspace() for ch in tok):
                raise DataError(f"bad token {tok!r}: empty or contains whitespace")
        if self.label not in LABEL_INDEX:
            raise DataError(f"unknown polarity label {self.label!r}")

    @property
    def n(self) -> int:
        return len(self.tokens)

    @property
    def aspect_stop(self) -> int:
        return self.aspect_start + self.aspect_len


@dataclass(frozen=True)
class DepForest:
    """Per-sentence dependency structure: one head per token, >= 1 root.

    ``heads[i]`` is the 0-based index of token i's head, or ROOT.  ``forms``
    and ``sent_id`` are carried through from CoNLL-U when available so the
    caller can audit alignment against tokenized instances.
    """

    heads: tuple[int, ...]
    forms: tuple[str, ...] = ()
    sent_id: str = ""
    tree_id: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        n = len(self.heads)
        if n < 1:
            raise StructureError("empty dependency structure")
        if self.forms and len(self.forms) != n:
            raise StructureError("FORM count does not match head count")
        for i, h in enumerate(self.heads):
            if h == ROOT:
                continue
            if not (0 <= h < n):
                raise StructureError(f"token {i} has out-of-range head {h}")
            if h == i:
                raise StructureError(f"token {i} is its own head")
        tree_id = []
        for i in range(n):
            cur, steps = i, 0
            while self.heads[cur] != ROOT:
                cur = self.heads[cur]
                steps += 1
                if steps > n:
                    raise StructureError(f"cycle in dependency heads reachable from token {i}")
            tree_id.append(cur)
        object.__setattr__(self, "tree_id", tuple(tree_id))

    @property
    def n(self) -> int:
        return len(self.heads)


def parse_semeval_xml(xml_text: str) -> list[AspectRecord]:
    """Extract (sentence, aspect span, polarity) records from task XML.

    Sentences are visited in document order and each aspect term yields one
    record.  "conflict" aspects are dropped (three-class protocol).  Spans
    are verified to slice the exact aspect string out of the sentence text.
    """
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        line, col = exc.position
        raise XmlError(f"malformed XML at line {line}, column {col}: {exc.msg}") from exc

    records = []
    for index, sentence in enumerate(root.iter("sentence")):
        sid = sentence.get("id", str(index))
        text_el = sentence.find("text")
        if text_el is None or text_el.text is None:
            raise XmlError(f"sentence {sid!r} has no text element")
        text = text_el.text
        for term in sentence.iter("aspectTerm"):
            polarity = term.get("polarity", "")
            if polarity == "conflict":
                continue
            if polarity not in LABEL_INDEX:
                raise DataError(f"sentence {sid!r}: unknown polarity {polarity!r}")
            try:
                start = int(term.get("from", ""))
                stop = int(term.get("to", ""))
            except ValueError as exc:
                raise XmlError(f"sentence {sid!r}: non-integer from/to offsets") from exc
            surface = term.get("term", "")
            if text[start:stop] != surface:
                raise AlignmentError(
                    f"sentence {sid!r}: span ({start}, {stop}) slices "
                    f"{text[start:stop]!r}, expected {surface!r}"
                )
            records.append(AspectRecord(sid, index, text, (start, stop), polarity))
    return records


def tokenize(text: str) -> list[tuple[str, int, int]]:
    """Canonical tokenizer: returns (token, char_start, char_stop) triples."""
    return [(m.group(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def tokenize_and_align(
    raw_sentence: str,
    aspect_char_span: tuple[int, int],
    *,
    label: str = "neutral",
    sentence_id: str = "",
    sentence_index: int = 0,
) -> Instance:
    """Tokenize a sentence and map a character span to a token span.

    The aspect token range is the minimal run of tokens overlapping the
    character span.  Deterministic for a fixed input.
    """
    start, stop = aspect_char_span
    if not (0 <= start < stop <= len(raw_sentence)):
        raise AlignmentError(
            f"character span ({start}, {stop}) outside sentence of length {len(raw_sentence)}"
        )
    spans = tokenize(raw_sentence)
    if not spans:
        raise AlignmentError("sentence contains no tokens")
    covering = [i for i, (_, s, e) in enumerate(spans) if s < stop and e > start]
    if not covering:
        raise AlignmentError(f"character span ({start}, {stop}) covers no tokens")
    tau = covering[0]
    m = covering[-1] - tau + 1
    return Instance(
        tokens=tuple(tok for tok, _, _ in spans),
        aspect_start=tau,
        aspect_len=m,
        label=label,
        sentence_id=sentence_id,
        sentence_index=sentence_index,
    )


def instances_from_records(records: list[AspectRecord]) -> list[Instance]:
    return [
        tokenize_and_align(
            r.text,
            r.span,
            label=r.label,
            sentence_id=r.sentence_id,
            sentence_index=r.sentence_index,
        )
        for r in records
    ]


def parse_conllu(text: str) -> list[DepForest]:
    """Parse CoNLL-U text into one DepForest per sentence block.

    Only the ID, FORM and HEAD columns are consumed.  Comment lines are
    ignored except ``# sent_id``, multiword ranges (ID with ``-``) and
    empty nodes (ID with ``.``) are skipped, and 1-based heads are shifted
    to 0-based with HEAD=0 becoming the ROOT sentinel.
    """
    forests = []
    forms: list[str] = []
    heads: list[int] = []
    sent_id = ""

    def flush():
        nonlocal forms, heads, sent_id
        if forms:
            forests.append(DepForest(heads=tuple(heads), forms=tuple(forms), sent_id=sent_id))
        forms, heads, sent_id = [], [], ""

    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.rstrip("\r\n")
        if not line.strip():
            flush()
            continue
        if line.startswith("#"):
            if line[1:].split("=", 1)[0].strip() == "sent_id" and "=" in line:
                sent_id = line.split("=", 1)[1].strip()
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise FormatError(f"line {lineno}: expected 10 tab-separated columns, got {len(cols)}")
        if "-" in cols[0] or "." in cols[0]:
            continue
        try:
            tok_id = int(cols[0])
            head = int(cols[6])
        except ValueError as exc:
            raise FormatError(f"line {lineno}: non-integer ID or HEAD") from exc
        if tok_id != len(forms) + 1:
            raise FormatError(f"line {lineno}: token ID {tok_id} out of sequence")
        forms.append(cols[1])
        heads.append(ROOT if head == 0 else head - 1)
    flush()
    return forests


def write_conllu(forests: list[DepForest]) -> str:
    """Serialize forests back to CoNLL-U (inverse of parse_conllu on heads)."""
    blocks = []
    for forest in forests:
        lines = []
        if forest.sent_id:
            lines.append(f"# sent_id = {forest.sent_id}")
        for i, head in enumerate(forest.heads):
            form = forest.forms[i] if forest.forms else f"tok{i}"
            head_col = 0 if head == ROOT else head + 1
            lines.append(f"{i + 1}\t{form}\t_\t_\t_\t_\t{head_col}\t_\t_\t_")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


class Vocabulary:
    """Token-to-index map with reserved padding (0) and unknown (1) slots.

    Tokens are lowercased before lookup; out-of-vocabulary tokens map to
    the unknown index rather than failing.
    """

    PAD = 0
    UNK = 1
    RESERVED = ("<pad>", "<unk>")

    def __init__(self, tokens=()):
        self.tokens: list[str] = list(self.RESERVED)
        self._index: dict[str, int] = {}
        for tok in tokens:
            low = tok.lower()
            if low not in self._index:
                self._index[low] = len(self.tokens)
                self.tokens.append(low)

    def __len__(self) -> int:
        return len(self.tokens)

    def index(self, token: str) -> int:
        return self._index.get(token.lower(), self.UNK)

    def encode(self, tokens) -> np.ndarray:
        return np.array([self.index(t) for t in tokens], dtype=np.int64)

    def content_hash(self) -> str:
        digest = hashlib.sha256("\n".join(self.tokens).encode("utf-8")).hexdigest()
        return digest

    @classmethod
    def from_instances(cls, *instance_lists) -> "Vocabulary":
        seen = []
        for instances in instance_lists:
            for inst in instances:
                seen.extend(inst.tokens)
        return cls(seen)

    @classmethod
    def from_tokens(cls, tokens) -> "Vocabulary":
        """Rebuild from a stored token list, reserved slots included."""
        tokens = list(tokens)
        if tuple(tokens[:2]) != cls.RESERVED:
            raise DataError("stored vocabulary does not start with the reserved slots")
        vocab = cls(tokens[2:])
        if vocab.tokens != tokens:
            raise DataError("stored vocabulary has duplicate or non-canonical entries")
        return vocab


def load_embeddings(text: str, vocab: Vocabulary, d_e: int, seed: int = 0) -> np.ndarray:
    """Build the |V| x d_e embedding matrix from a word-vector text file.

    Rows for words present in the file are copied verbatim; rows for words
    absent from the file are drawn from U(-0.25, 0.25) with the given seed;
    the padding row is all zeros.  The first file line for a (lowercased)
    word wins.  A line whose value count differs from d_e is rejected.
    """
    rng = np.random.default_rng(seed)
    table = rng.uniform(-0.25, 0.25, size=(len(vocab), d_e))
    table[Vocabulary.PAD] = 0.0
    filled = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.rstrip().split(" ")
        word, values = parts[0], parts[1:]
        if len(values) != d_e:
            raise FormatError(
                f"line {lineno}: expected {d_e} values for {word!r}, got {len(values)}"
            )
        row = vocab.index(word)
        if row in (Vocabulary.PAD, Vocabulary.UNK) or row in filled:
            continue
        try:
            table[row] = np.array([float(v) for v in values], dtype=np.float64)
        except ValueError as exc:
            raise FormatError(f"line {lineno}: non-numeric embedding value") from exc
        filled.add(row)
    return table
