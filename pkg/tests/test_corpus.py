"""Corpus layer: XML parsing, tokenization, CoNLL-U, vocabulary, embeddings."""

import re

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pwcn import (
    ROOT,
    AlignmentError,
    DataError,
    DepForest,
    FormatError,
    Instance,
    StructureError,
    Vocabulary,
    XmlError,
    instances_from_records,
    load_embeddings,
    parse_conllu,
    parse_semeval_xml,
    tokenize,
    tokenize_and_align,
    write_conllu,
)

SAMPLE_XML = """<?xml version="1.0" encoding="UTF-8"?>
<sentences>
  <sentence id="11">
    <text>great food but the service was dreadful !</text>
    <aspectTerms>
      <aspectTerm term="food" polarity="positive" from="6" to="10"/>
      <aspectTerm term="service" polarity="negative" from="19" to="26"/>
    </aspectTerms>
  </sentence>
  <sentence id="12">
    <text>no opinions here</text>
  </sentence>
  <sentence id="13">
    <text>the menu changed</text>
    <aspectTerms>
      <aspectTerm term="menu" polarity="conflict" from="4" to="8"/>
      <aspectTerm term="menu" polarity="neutral" from="4" to="8"/>
    </aspectTerms>
  </sentence>
</sentences>
"""


class TestParseSemevalXml:
    def test_records_in_document_order(self):
        records = parse_semeval_xml(SAMPLE_XML)
        assert [(r.sentence_id, r.label) for r in records] == [
            ("11", "positive"),
            ("11", "negative"),
            ("13", "neutral"),
        ]
        assert records[0].text[records[0].span[0] : records[0].span[1]] == "food"
        assert records[1].sentence_index == 0
        assert records[2].sentence_index == 2

    def test_conflict_polarity_dropped(self):
        records = parse_semeval_xml(SAMPLE_XML)
        assert all(r.label != "conflict" for r in records)

    def test_unknown_polarity_rejected(self):
        bad = SAMPLE_XML.replace('polarity="neutral"', 'polarity="mixed"')
        with pytest.raises(DataError):
            parse_semeval_xml(bad)

    def test_char_span_mismatch_names_sentence(self):
        bad = SAMPLE_XML.replace('from="6" to="10"', 'from="5" to="9"')
        with pytest.raises(AlignmentError, match="11"):
            parse_semeval_xml(bad)

    def test_malformed_xml(self):
        with pytest.raises(XmlError):
            parse_semeval_xml("<sentences><sentence></sentences>")

    def test_entity_escapes_decoded(self):
        xml = (
            "<sentences><sentence id=\"1\"><text>a &amp; b</text><aspectTerms>"
            '<aspectTerm term="b" polarity="neutral" from="4" to="5"/>'
            "</aspectTerms></sentence></sentences>"
        )
        (rec,) = parse_semeval_xml(xml)
        assert rec.text == "a & b"


class TestTokenizer:
    def test_words_and_punctuation(self):
        toks = [t for t, _, _ in tokenize("great food, isn't it?")]
        assert toks == ["great", "food", ",", "isn", "'", "t", "it", "?"]

    def test_spans_slice_back(self):
        text = "The BEST pizza-place in town!"
        for tok, start, stop in tokenize(text):
            assert text[start:stop] == tok

    @given(st.text(max_size=60))
    def test_covers_every_non_space_char(self, text):
        joined = "".join(t for t, _, _ in tokenize(text))
        assert joined == re.sub(r"\s", "", text)

    @given(st.text(max_size=60))
    def test_spans_ascend_without_overlap(self, text):
        prev = 0
        for _, start, stop in tokenize(text):
            assert prev <= start < stop
            prev = stop


class TestTokenizeAndAlign:
    def test_aspect_span_maps_to_token_range(self):
        inst = tokenize_and_align(
            "great food but the service was dreadful !", (6, 10), label="positive"
        )
        assert inst.tokens == ("great", "food", "but", "the", "service", "was", "dreadful", "!")
        assert (inst.aspect_start, inst.aspect_len) == (1, 1)

    def test_multiword_aspect(self):
        text = "the hot dog was fine"
        inst = tokenize_and_align(text, (4, 11))
        assert inst.tokens[inst.aspect_start : inst.aspect_stop] == ("hot", "dog")

    def test_partial_token_overlap_widens_to_token(self):
        # span covering only "foo" of "food" still claims the whole token
        inst = tokenize_and_align("great food", (6, 9))
        assert inst.tokens[inst.aspect_start : inst.aspect_stop] == ("food",)

    def test_span_outside_any_token_rejected(self):
        with pytest.raises(AlignmentError):
            tokenize_and_align("a b", (1, 2))  # only whitespace

    def test_instances_from_records_roundtrip(self):
        records = parse_semeval_xml(SAMPLE_XML)
        instances = instances_from_records(records)
        assert len(instances) == 3
        assert instances[0].tokens[instances[0].aspect_start] == "food"
        assert instances[1].tokens[instances[1].aspect_start] == "service"

    def test_instance_validation(self):
        with pytest.raises(DataError):
            Instance(("a", "b"), 1, 2, "neutral", "x", 0)  # span past end
        with pytest.raises(DataError):
            Instance(("a",), 0, 1, "sarcastic", "x", 0)


class TestConllu:
    CONLLU = (
        "# sent_id = 42\n"
        "1\tgreat\t_\t_\t_\t_\t2\t_\t_\t_\n"
        "2\tfood\t_\t_\t_\t_\t0\t_\t_\t_\n"
        "\n"
        "# sent_id = 43\n"
        "1\tok\t_\t_\t_\t_\t0\t_\t_\t_\n"
    )

    def test_parse_blocks(self):
        forests = parse_conllu(self.CONLLU)
        assert len(forests) == 2
        assert forests[0].forms == ("great", "food")
        assert forests[0].heads == (1, ROOT)
        assert forests[0].sent_id == "42"

    def test_range_and_empty_ids_skipped(self):
        text = (
            "1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n"
            "1\tdo\t_\t_\t_\t_\t0\t_\t_\t_\n"
            "2\tnot\t_\t_\t_\t_\t1\t_\t_\t_\n"
            "2.1\tghost\t_\t_\t_\t_\t_\t_\t_\t_\n"
        )
        (forest,) = parse_conllu(text)
        assert forest.forms == ("do", "not")

    def test_wrong_column_count_names_line(self):
        with pytest.raises(FormatError, match="line 1"):
            parse_conllu("1\tword\t_\n")

    def test_nonsequential_ids_rejected(self):
        text = "1\ta\t_\t_\t_\t_\t0\t_\t_\t_\n3\tb\t_\t_\t_\t_\t1\t_\t_\t_\n"
        with pytest.raises(FormatError):
            parse_conllu(text)

    def test_head_cycle_rejected(self):
        text = "1\ta\t_\t_\t_\t_\t2\t_\t_\t_\n2\tb\t_\t_\t_\t_\t1\t_\t_\t_\n"
        with pytest.raises(StructureError):
            parse_conllu(text)

    def test_write_then_parse_roundtrip(self):
        forests = [
            DepForest((1, ROOT, 1), ("a", "b", "c"), "s1"),
            DepForest((ROOT,), ("solo",), "s2"),
            DepForest((ROOT, 0, ROOT), ("x", "y", "z"), ""),  # two trees
        ]
        again = parse_conllu(write_conllu(forests))
        assert [f.heads for f in again] == [f.heads for f in forests]
        assert [f.forms for f in again] == [f.forms for f in forests]
        assert again[0].sent_id == "s1" and again[2].sent_id == ""

    @given(st.data())
    def test_roundtrip_random_forests(self, data):
        n = data.draw(st.integers(1, 8))
        heads = tuple(
            data.draw(st.sampled_from([ROOT] + list(range(i)))) for i in range(n)
        )
        forms = tuple(f"w{i}" for i in range(n))
        forest = DepForest(heads, forms, "gen")
        (back,) = parse_conllu(write_conllu([forest]))
        assert back.heads == heads and back.forms == forms

    def test_tree_ids_partition_tokens(self):
        # Each token is labeled with the index of its tree's root token.
        forest = DepForest((ROOT, 0, ROOT, 2), ("a", "b", "c", "d"), "")
        assert forest.tree_id == (0, 0, 2, 2)


class TestVocabulary:
    def test_reserved_slots_and_lowercasing(self):
        vocab = Vocabulary(["Great", "Food", "great"])
        assert vocab.tokens[:2] == ["<pad>", "<unk>"]
        assert vocab.index("GREAT") == 2
        assert vocab.index("food") == 3
        assert vocab.index("absent") == Vocabulary.UNK

    def test_encode_dtype_and_values(self):
        vocab = Vocabulary(["a", "b"])
        ids = vocab.encode(("b", "zzz", "A"))
        assert ids.dtype == np.int64
        assert ids.tolist() == [3, Vocabulary.UNK, 2]

    def test_content_hash_changes_with_content(self):
        assert Vocabulary(["a"]).content_hash() != Vocabulary(["b"]).content_hash()
        assert Vocabulary(["a"]).content_hash() == Vocabulary(["a", "A"]).content_hash()

    def test_from_tokens_rejects_tampering(self):
        vocab = Vocabulary(["a", "b"])
        rebuilt = Vocabulary.from_tokens(vocab.tokens)
        assert rebuilt.tokens == vocab.tokens
        with pytest.raises(DataError):
            Vocabulary.from_tokens(["a", "b"])  # reserved slots missing


class TestLoadEmbeddings:
    def test_file_rows_copied_others_random(self):
        vocab = Vocabulary(["known", "missing"])
        table = load_embeddings("known 1.0 2.0 3.0\n", vocab, 3, seed=0)
        assert table.shape == (4, 3)
        assert table[vocab.index("known")].tolist() == [1.0, 2.0, 3.0]
        assert np.all(table[Vocabulary.PAD] == 0.0)
        missing = table[vocab.index("missing")]
        assert np.all((missing >= -0.25) & (missing <= 0.25))

    def test_first_occurrence_wins(self):
        vocab = Vocabulary(["w"])
        table = load_embeddings("w 1.0\nw 9.0\n", vocab, 1, seed=0)
        assert table[vocab.index("w"), 0] == 1.0

    def test_wrong_width_names_line(self):
        with pytest.raises(FormatError, match="line 2"):
            load_embeddings("a 1.0 2.0\nb 1.0\n", Vocabulary(["a", "b"]), 2)

    def test_deterministic_given_seed(self):
        vocab = Vocabulary(["q"])
        t1 = load_embeddings("", vocab, 4, seed=9)
        t2 = load_embeddings("", vocab, 4, seed=9)
        assert np.array_equal(t1, t2)
