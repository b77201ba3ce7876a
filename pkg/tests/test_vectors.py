import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import brute_force_top_k, cosine_oracle
from pidgraph.errors import ConfigurationError, ValidationError
from pidgraph.graph import Node, PropertyGraph
from pidgraph.vectors import IndexName, VectorIndex, build_indexes, cosine_similarity


def test_cosine_identity():
    assert cosine_similarity([1, 0, 0], [1, 0, 0]) == pytest.approx(1.0)


def test_cosine_orthogonal():
    assert cosine_similarity([1, 0, 0], [0, 1, 0]) == pytest.approx(0.0, abs=1e-12)


def test_cosine_hand_value():
    # Direct evaluation: (1*1 + 1*0 + 0*0) / (sqrt(2) * 1) = 1/sqrt(2)
    assert cosine_similarity([1, 1, 0], [1, 0, 0]) == pytest.approx(0.70710678, abs=1e-9)


def test_cosine_rejects_mismatch_and_zero():
    with pytest.raises(ValidationError):
        cosine_similarity([1, 0], [1, 0, 0])
    with pytest.raises(ValidationError):
        cosine_similarity([0, 0, 0], [1, 0, 0])
    with pytest.raises(ValidationError):
        cosine_similarity([1, float("nan"), 0], [1, 0, 0])


finite_vectors = st.integers(min_value=2, max_value=16).flatmap(
    lambda n: st.tuples(
        st.lists(st.floats(-1e3, 1e3), min_size=n, max_size=n),
        st.lists(st.floats(-1e3, 1e3), min_size=n, max_size=n),
    )
)


@given(finite_vectors)
@settings(max_examples=200, deadline=None)
def test_cosine_symmetry_and_range(pair):
    a, b = pair
    if not any(a) or not any(b):
        return
    ab = cosine_similarity(a, b)
    ba = cosine_similarity(b, a)
    assert abs(ab - ba) <= 1e-12
    assert -1 - 1e-12 <= ab <= 1 + 1e-12


@given(finite_vectors, st.floats(min_value=1e-3, max_value=1e3))
@settings(max_examples=200, deadline=None)
def test_cosine_positive_scale_invariance(pair, scale):
    a, b = pair
    if not any(a) or not any(b):
        return
    scaled = [scale * x for x in a]
    assert cosine_similarity(scaled, b) == pytest.approx(cosine_similarity(a, b), abs=1e-9)


def test_top_k_singleton():
    index = VectorIndex(IndexName.GLOBAL, [("only", [1.0, 2.0])])
    assert index.top_k([0.5, 0.5], 3) == [("only", pytest.approx(cosine_oracle([0.5, 0.5], [1, 2])))]


def test_top_k_tie_breaks_by_node_id():
    index = VectorIndex(IndexName.GLOBAL, [("zeta", [1.0, 0.0]), ("alpha", [2.0, 0.0])])
    result = index.top_k([3.0, 0.0], 2)
    assert [node_id for node_id, _ in result] == ["alpha", "zeta"]
    assert result[0][1] == result[1][1] == pytest.approx(1.0)


def test_top_k_empty_index_errors():
    index = VectorIndex(IndexName.GLOBAL, [])
    with pytest.raises(ConfigurationError):
        index.top_k([1.0], 1)
    with pytest.raises(ValidationError):
        VectorIndex(IndexName.GLOBAL, [("a", [1.0])]).top_k([1.0], 0)


def test_top_k_matches_brute_force_oracle():
    rng = random.Random(99)
    entries = [
        (f"n{i:03d}", [rng.gauss(0, 1) for _ in range(32)]) for i in range(200)
    ]
    index = VectorIndex(IndexName.GLOBAL, entries)
    for k in (1, 5, 20):
        query = [rng.gauss(0, 1) for _ in range(32)]
        expected = brute_force_top_k(entries, query, k)
        got = index.top_k(query, k)
        assert [nid for nid, _ in got] == [nid for nid, _ in expected]
        for (_, s1), (_, s2) in zip(got, expected):
            assert s1 == pytest.approx(s2, abs=1e-9)


def test_top_k_scores_clamped():
    v = [0.1] * 8
    index = VectorIndex(IndexName.GLOBAL, [("a", v)])
    ((_, score),) = index.top_k(v, 1)
    assert -1.0 <= score <= 1.0


def test_top_k_returns_min_k_n():
    entries = [(f"n{i}", [float(i + 1), 1.0]) for i in range(4)]
    index = VectorIndex(IndexName.GLOBAL, entries)
    assert len(index.top_k([1.0, 1.0], 10)) == 4


def test_duplicate_node_id_rejected():
    with pytest.raises(ValidationError):
        VectorIndex(IndexName.GLOBAL, [("a", [1.0]), ("a", [2.0])])


def test_build_indexes_from_graph():
    g = PropertyGraph(embedding_dim=2)
    n1 = Node("a", ["X"])
    n1.global_embedding = [1.0, 0.0]
    n1.local_embedding = [0.0, 1.0]
    g.add_node(n1)
    n2 = Node("b", ["X"])
    n2.global_embedding = [0.5, 0.5]
    g.add_node(n2)
    indexes = build_indexes(g)
    assert len(indexes[IndexName.GLOBAL]) == 2
    assert len(indexes[IndexName.LOCAL]) == 1
    assert indexes[IndexName.GLOBAL].dim == 2


def test_numpy_and_oracle_agree_on_floats():
    rng = np.random.default_rng(5)
    for _ in range(50):
        a = rng.normal(size=64)
        b = rng.normal(size=64)
        assert cosine_similarity(a, b) == pytest.approx(cosine_oracle(a.tolist(), b.tolist()), abs=1e-12)
