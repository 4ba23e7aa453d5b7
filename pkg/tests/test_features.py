import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kpmatch.corpus import AnnotationDoc, LabeledPair, GoldLabel, Stance, Token
from kpmatch.errors import DataError
from kpmatch.features import (
    FeatureConfig,
    FeatureKind,
    TagKind,
    TagVocabulary,
    assemble_features,
    build_tag_vocab,
    encode_tags,
    feature_dim,
    fit_tfidf,
    load_tag_vocab,
    load_tfidf,
    save_tag_vocab,
    save_tfidf,
    tfidf_vector,
    tokenize,
)


def doc_from_tags(doc_id, dep_tags=(), pos_tags=()):
    tags = dep_tags or pos_tags
    tokens = tuple(
        Token(
            surface=f"w{i}",
            pos_tag=pos_tags[i] if pos_tags else "X",
            dep_tag=dep_tags[i] if dep_tags else "dep",
        )
        for i in range(len(tags))
    )
    return AnnotationDoc(doc_id=doc_id, tokens=tokens)


class TestBuildTagVocab:
    def test_worked_example_descending_counts(self):
        # aux x10, nsubj x7, amod x3 -> ranks 1, 2, 3
        docs = [
            doc_from_tags("d1", dep_tags=["aux"] * 10 + ["nsubj"] * 7 + ["amod"] * 3)
        ]
        vocab = build_tag_vocab(docs, TagKind.DEP)
        assert vocab.rank_of == {"aux": 1, "nsubj": 2, "amod": 3}

    def test_singleton(self):
        vocab = build_tag_vocab([doc_from_tags("d", dep_tags=["ROOT"] * 4)], TagKind.DEP)
        assert vocab.rank_of == {"ROOT": 1}

    def test_tie_broken_lexicographically(self):
        docs = [doc_from_tags("d", dep_tags=["b"] * 5 + ["a"] * 5)]
        vocab = build_tag_vocab(docs, TagKind.DEP)
        assert vocab.rank_of == {"a": 1, "b": 2}

    def test_rank_monotone_in_count(self):
        docs = [doc_from_tags("d", pos_tags=["NOUN"] * 6 + ["VERB"] * 4 + ["ADJ"] * 2)]
        vocab = build_tag_vocab(docs, TagKind.POS)
        counts, ranks = vocab.counts, vocab.rank_of
        for t in counts:
            for u in counts:
                if counts[t] > counts[u]:
                    assert ranks[t] < ranks[u]

    def test_no_tags_errors(self):
        with pytest.raises(DataError):
            build_tag_vocab([], TagKind.DEP)

    def test_ranks_are_bijection(self):
        docs = [doc_from_tags("d", dep_tags=list("abcabcaab"))]
        vocab = build_tag_vocab(docs, TagKind.DEP)
        assert sorted(vocab.rank_of.values()) == list(range(1, len(vocab.rank_of) + 1))


class TestEncodeTags:
    VOCAB = TagVocabulary(
        kind=TagKind.DEP, rank_of={"aux": 1, "nsubj": 2}, counts={"aux": 2, "nsubj": 1}
    )

    def test_padding(self):
        doc = doc_from_tags("d", dep_tags=["aux", "nsubj"])
        vec = encode_tags(doc, self.VOCAB, 4)
        assert vec.values.tolist() == [1.0, 2.0, 0.0, 0.0]

    def test_truncation(self):
        doc = doc_from_tags("d", dep_tags=["aux", "aux", "aux"])
        vec = encode_tags(doc, self.VOCAB, 2)
        assert vec.values.tolist() == [1.0, 1.0]

    def test_unknown_tag_coded_zero(self):
        doc = doc_from_tags("d", dep_tags=["aux", "xcomp", "nsubj"])
        vec = encode_tags(doc, self.VOCAB, 3)
        assert vec.values.tolist() == [1.0, 0.0, 2.0]

    @given(n_tokens=st.integers(min_value=0, max_value=20), max_tokens=st.integers(1, 16))
    @settings(max_examples=50, deadline=None)
    def test_trailing_zero_padding_property(self, n_tokens, max_tokens):
        doc = doc_from_tags("d", dep_tags=["aux"] * n_tokens)
        vec = encode_tags(doc, self.VOCAB, max_tokens)
        assert vec.dim == max_tokens
        expected_zeros = max(0, max_tokens - n_tokens)
        if expected_zeros:
            assert all(v == 0.0 for v in vec.values[-expected_zeros:])
        assert all(v == 1.0 for v in vec.values[: max_tokens - expected_zeros])


class TestFitTfidf:
    def test_idf_one_for_ubiquitous_term(self):
        model = fit_tfidf(["common a", "common b", "common c"], FeatureConfig(kind=FeatureKind.TFIDF))
        assert model.idf[model.vocabulary["common"]] == pytest.approx(1.0)

    def test_idf_formula(self):
        # 2 docs, term in 1 -> ln(3/2) + 1
        model = fit_tfidf(["rare shared", "shared"], FeatureConfig(kind=FeatureKind.TFIDF))
        assert model.idf[model.vocabulary["rare"]] == pytest.approx(math.log(3 / 2) + 1)

    def test_cap_keeps_most_frequent(self):
        texts = ["a b c", "a b", "a"]  # df: a=3, b=2, c=1
        model = fit_tfidf(texts, FeatureConfig(kind=FeatureKind.TFIDF, vocab_cap=1))
        assert set(model.vocabulary) == {"a"}

    def test_cap_ties_lexicographic(self):
        texts = ["a b", "b a"]  # both df=2
        model = fit_tfidf(texts, FeatureConfig(kind=FeatureKind.TFIDF, vocab_cap=1))
        assert set(model.vocabulary) == {"a"}

    def test_all_empty_errors(self):
        with pytest.raises(DataError):
            fit_tfidf(["...", "!!"], FeatureConfig(kind=FeatureKind.TFIDF))

    def test_idf_bounds_property(self):
        texts = [f"shared word{i} word{i % 3}" for i in range(10)]
        model = fit_tfidf(texts, FeatureConfig(kind=FeatureKind.TFIDF))
        upper = math.log(1 + model.doc_count) + 1
        assert all(1.0 <= v <= upper for v in model.idf)

    def test_determinism(self):
        texts = ["alpha beta gamma", "beta gamma delta", "gamma delta alpha"]
        cfg = FeatureConfig(kind=FeatureKind.TFIDF, vocab_cap=3)
        m1, m2 = fit_tfidf(texts, cfg), fit_tfidf(texts, cfg)
        assert m1.vocabulary == m2.vocabulary
        assert m1.idf.tolist() == m2.idf.tolist()


class TestTfidfVector:
    def test_no_overlap_gives_zero_vector(self):
        model = fit_tfidf(["alpha beta"], FeatureConfig(kind=FeatureKind.TFIDF))
        vec = tfidf_vector("gamma delta", model)
        assert not vec.values.any()

    def test_unit_norm(self):
        model = fit_tfidf(["alpha beta", "beta gamma"], FeatureConfig(kind=FeatureKind.TFIDF))
        vec = tfidf_vector("alpha alpha beta", model)
        assert np.linalg.norm(vec.values) == pytest.approx(1.0, abs=1e-9)

    def test_hand_computed_example(self):
        # corpus {d1: "a b", d2: "a c"}; idf(a)=1, idf(b)=idf(c)=ln(3/2)+1
        model = fit_tfidf(["a b", "a c"], FeatureConfig(kind=FeatureKind.TFIDF))
        idf_b = math.log(3 / 2) + 1
        raw = {"a": 1.0, "b": idf_b, "c": 0.0}
        norm = math.sqrt(sum(v * v for v in raw.values()))
        vec = tfidf_vector("a b", model)
        for term, value in raw.items():
            assert vec.values[model.vocabulary[term]] == pytest.approx(value / norm)

    def test_cosine_self_similarity(self):
        model = fit_tfidf(["x y z", "y z w"], FeatureConfig(kind=FeatureKind.TFIDF))
        vec = tfidf_vector("x y w", model).values
        assert float(vec @ vec) == pytest.approx(1.0, abs=1e-9)

    @given(st.text(alphabet="abc xyz", max_size=40))
    @settings(max_examples=60, deadline=None)
    def test_norm_is_zero_or_one(self, text):
        model = fit_tfidf(["abc xyz", "xyz qq"], FeatureConfig(kind=FeatureKind.TFIDF))
        norm = float(np.linalg.norm(tfidf_vector(text, model).values))
        assert norm == pytest.approx(0.0, abs=1e-12) or norm == pytest.approx(1.0, abs=1e-9)


class TestTokenize:
    def test_splits_on_non_alphanumeric(self):
        assert tokenize("Hello, world-wide [SEP] 42!") == ["hello", "world", "wide", "sep", "42"]

    def test_case_preserved_when_configured(self):
        assert tokenize("Hello World", lowercase=False) == ["Hello", "World"]


def make_pair(pair_id="a1::k1"):
    arg_id, kp_id = pair_id.split("::")
    return LabeledPair(
        argument_id=arg_id,
        keypoint_id=kp_id,
        topic="t",
        stance=Stance.PRO,
        label=GoldLabel.MATCH,
    )


class TestAssembleFeatures:
    def test_none_kind_dim_zero(self):
        pair = make_pair()
        vec = assemble_features(pair, {}, None, None, None, FeatureConfig(kind=FeatureKind.NONE))
        assert vec.dim == 0

    def test_pos_delegates_to_encode_tags(self):
        pair = make_pair()
        doc = doc_from_tags(pair.pair_id, pos_tags=["NOUN", "VERB"])
        vocab = build_tag_vocab([doc], TagKind.POS)
        cfg = FeatureConfig(kind=FeatureKind.POS, max_tokens=4)
        direct = encode_tags(doc, vocab, 4)
        assembled = assemble_features(pair, {}, {pair.pair_id: doc}, vocab, None, cfg)
        assert assembled.values.tolist() == direct.values.tolist()

    def test_missing_annotation_errors(self):
        pair = make_pair()
        cfg = FeatureConfig(kind=FeatureKind.DEP)
        vocab = TagVocabulary(kind=TagKind.DEP, rank_of={"x": 1}, counts={"x": 1})
        with pytest.raises(DataError, match="missing annotation"):
            assemble_features(pair, {}, {}, vocab, None, cfg)

    def test_tfidf_dim_consistent_across_pairs(self):
        texts = {f"a{i}::k": f"word{i} shared text" for i in range(5)}
        model = fit_tfidf(texts.values(), FeatureConfig(kind=FeatureKind.TFIDF))
        cfg = FeatureConfig(kind=FeatureKind.TFIDF)
        dims = {
            assemble_features(make_pair(pid), texts, None, None, model, cfg).dim
            for pid in texts
        }
        assert dims == {model.dim}
        assert feature_dim(cfg, model) == model.dim


class TestPersistence:
    def test_tag_vocab_round_trip(self, tmp_path):
        vocab = build_tag_vocab([doc_from_tags("d", dep_tags=list("aabbc"))], TagKind.DEP)
        save_tag_vocab(vocab, tmp_path / "vocab.json")
        loaded = load_tag_vocab(tmp_path / "vocab.json")
        assert loaded == vocab

    def test_tfidf_round_trip(self, tmp_path):
        model = fit_tfidf(["a b c", "b c d"], FeatureConfig(kind=FeatureKind.TFIDF, vocab_cap=3))
        save_tfidf(model, tmp_path / "tfidf.json")
        loaded = load_tfidf(tmp_path / "tfidf.json")
        assert loaded.vocabulary == model.vocabulary
        assert loaded.idf.tolist() == model.idf.tolist()
        assert (loaded.doc_count, loaded.cap, loaded.lowercase) == (
            model.doc_count,
            model.cap,
            model.lowercase,
        )
