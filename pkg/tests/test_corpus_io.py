import os
import tempfile

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lpglem.corpus_io import (
    FormatError,
    PredictionKind,
    attach_translations,
    format_corpus,
    parse_alignment,
    parse_topset,
    read_annotated,
    read_corpus,
    read_instance_vectors,
    read_predictions,
    read_translations,
    write_annotated,
    write_corpus,
)
from lpglem.model import Analysis, LpgEntry
from lpglem.selection import Selection

from conftest import FIXTURES

SEVEN = """# sent_id = a
0\tktb\tkatab\tverb\twrite
1\tAlwld\twalad\tnoun\tboy;child
2\tfy\tfiy\tprep\t_
3\tEqd\t_\t_\t_

# sent_id = b
0\tHsn\tHasan\t_\t_
1\t2024\t2024\tdigit\tNO_GLOSS
2\t.\t.\tpunc\tNO_GLOSS

"""


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


class TestCorpus:
    def test_round_trip(self, tmp_path):
        src = _write(tmp_path, "c.tsv", SEVEN)
        corpus = read_corpus(src)
        assert [len(s.tokens) for s in corpus] == [4, 3]
        out = tmp_path / "out.tsv"
        write_corpus(out, corpus)
        assert read_corpus(out) == corpus
        assert out.read_text(encoding="utf-8") == SEVEN

    def test_missing_lemma_not_evaluatable(self, tmp_path):
        corpus = read_corpus(_write(tmp_path, "c.tsv", SEVEN))
        tok = corpus[0].tokens[3]
        assert tok.gold is None and not tok.evaluatable
        assert corpus[1].tokens[0].gold == LpgEntry("Hasan")

    def test_gold_lemma_normalized(self, tmp_path):
        corpus = read_corpus(_write(tmp_path, "c.tsv", "0\tAyDA\tAyDFA\tadv\talso\n"))
        assert corpus[0].tokens[0].gold.lemma == "AyDAF"
        assert corpus[0].id == "s1"

    def test_arabic_script_converted(self, tmp_path):
        corpus = read_corpus(_write(tmp_path, "c.tsv", "0\tعقد\tعَقْد\tnoun\tcontract\n"))
        tok = corpus[0].tokens[0]
        assert tok.surface == "Eqd" and tok.gold.lemma == "Eaqod"

    def test_non_contiguous_index(self, tmp_path):
        with pytest.raises(FormatError, match=":2:.*expected 1"):
            read_corpus(_write(tmp_path, "c.tsv", "0\ta\t_\t_\t_\n2\tb\t_\t_\t_\n"))

    def test_wrong_columns(self, tmp_path):
        with pytest.raises(FormatError, match=":1:"):
            read_corpus(_write(tmp_path, "c.tsv", "0\ta\t_\t_\n"))

    def test_header_is_written_as_comments(self, tmp_path):
        corpus = read_corpus(_write(tmp_path, "c.tsv", SEVEN))
        text = format_corpus(corpus, ["lpglem normalize", "seed=42"])
        assert text.startswith("# lpglem normalize\n# seed=42\n# sent_id = a\n")
        assert read_corpus(_write(tmp_path, "h.tsv", text)) == corpus

    def test_dev_fixture_shape(self, dev_corpus):
        assert sum(len(s.tokens) for s in dev_corpus) == 50
        assert all(t.evaluatable for s in dev_corpus for t in s.tokens)


class TestPredictions:
    def test_topset(self):
        assert parse_topset("noun:0.93;verb:0.05") == (("noun", 0.93), ("verb", 0.05))
        assert parse_topset("verb:0.05;noun:0.93")[0] == ("noun", 0.93)

    @pytest.mark.parametrize("payload", ["noun:1.5", "noun", "noun:-0.1", ":0.3", "noun:x"])
    def test_bad_topset(self, payload):
        with pytest.raises(ValueError):
            parse_topset(payload)

    def test_read_all_kinds(self, predictions):
        top = predictions[PredictionKind.POS_TOPSET]
        assert top.get("s1", 2) == (("noun", 0.9), ("verb", 0.1))
        assert top.get("s1", 3) is None
        assert predictions[PredictionKind.S2S_LEMMA].get("s4", 6) == "taHar~iy"
        assert predictions[PredictionKind.LEXC_LPG].get("s3", 4) == "bayot#noun#verse"
        assert predictions[PredictionKind.CLUSTER_ID].get("s1", 2) == 0

    def test_hallucinated_lemma_loads(self, tmp_path):
        p = _write(tmp_path, "p.tsv", "s1\t0\ttaHar~iy\n")
        assert read_predictions(p, "s2s_lemma").get("s1", 0) == "taHar~iy"

    def test_duplicate_key(self, tmp_path):
        p = _write(tmp_path, "p.tsv", "s1\t0\tnoun:0.5\ns1\t0\tverb:0.5\n")
        with pytest.raises(FormatError, match="duplicate"):
            read_predictions(p, PredictionKind.POS_TOPSET)

    def test_bad_score_location(self, tmp_path):
        p = _write(tmp_path, "p.tsv", "# c\ns1\t0\tnoun:0.5\ns1\t1\tnoun:2\n")
        with pytest.raises(FormatError, match=":3:"):
            read_predictions(p, PredictionKind.POS_TOPSET)

    def test_bad_cluster_id(self, tmp_path):
        with pytest.raises(FormatError):
            read_predictions(_write(tmp_path, "p.tsv", "s1\t0\tseven\n"), "cluster_id")


class TestTranslations:
    def test_parse_alignment(self):
        assert parse_alignment("0-1 1-0") == {0: (1,), 1: (0,)}
        assert parse_alignment("") == {}
        assert parse_alignment("0-2 0-1") == {0: (1, 2)}

    @pytest.mark.parametrize("bad", ["2-", "-1", "a-b", "1"])
    def test_malformed_pair(self, bad):
        with pytest.raises(ValueError):
            parse_alignment(bad)

    def test_fixture_file(self, dev_corpus):
        s4 = next(s for s in dev_corpus if s.id == "s4")
        assert s4.alignment == {}
        assert s4.aligned_words(0) == []
        s1 = dev_corpus[0]
        assert s1.aligned_words(2) == ["contract"]

    def test_out_of_range_alignment_rejected(self, tmp_path):
        corpus = read_corpus(_write(tmp_path, "c.tsv", "0\ta\t_\t_\t_\n"))
        tr = read_translations(_write(tmp_path, "t.tsv", "s1\tthe boy\n0-5\n"))
        with pytest.raises(ValueError):
            attach_translations(corpus, tr)

    def test_bad_pair_location(self, tmp_path):
        with pytest.raises(FormatError, match=":2:"):
            read_translations(_write(tmp_path, "t.tsv", "s1\tthe boy\n0-\n"))


class TestAnnotated:
    def test_golden_reads_back(self):
        ann = read_annotated(FIXTURES / "golden" / "top_logp.tsv")
        assert len(ann) == 50
        assert ann[("s1", 2)].entry == LpgEntry("Eaqod", "noun", ("contract",))
        assert ann[("s3", 5)].stage == "backoff"

    def test_write_is_deterministic(self, tmp_path, dev_corpus):
        sels = {(s.id, t.index): Selection(Analysis(LpgEntry(t.surface, "noun", ("x",)), t.surface), "logp", ())
                for s in dev_corpus for t in s.tokens}
        a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
        write_annotated(a, dev_corpus, sels, ["h"])
        write_annotated(b, dev_corpus, sels, ["h"])
        assert a.read_bytes() == b.read_bytes()
        assert b"\r" not in a.read_bytes()


class TestInstanceVectors:
    def test_fixture(self):
        vecs = read_instance_vectors(FIXTURES / "instance_vectors.tsv")
        assert len({v.shape for v in vecs.values()}) == 1

    def test_dimension_mismatch(self, tmp_path):
        p = _write(tmp_path, "v.tsv", "s1\t0\t1 2 3\ns1\t1\t1 2\n")
        with pytest.raises(FormatError, match=":2:"):
            read_instance_vectors(p)

    @given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=5))
    def test_floats_round_trip(self, xs):
        fd, name = tempfile.mkstemp(suffix=".tsv")
        with os.fdopen(fd, "w") as f:
            f.write("s1\t0\t" + " ".join(repr(x) for x in xs) + "\n")
        try:
            np.testing.assert_array_equal(read_instance_vectors(name)[("s1", 0)], xs)
        finally:
            os.unlink(name)
