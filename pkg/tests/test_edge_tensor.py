"""Sparse edge tensors: dense-oracle equivalence and support closure."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import (dense_mode1_oracle, dense_mode2_oracle,
                      dense_mode3_oracle, random_adjacency,
                      random_edge_tensor, support_mask, tensor_to_dense)
from edgetensor import autodiff as ad
from edgetensor.autodiff import Var, backward
from edgetensor.edge_tensor import (EdgeFeatureTensor, axpy,
                                    collapse_to_weighted_graph,
                                    contraction_plan, load_snapshot,
                                    mode_k_product_dense, project_mode3,
                                    propagate_mode1, propagate_mode2,
                                    save_snapshot)


def make_pair(n, p, rng, density=0.4):
    """Tensor and adjacency sharing one random support."""
    t = random_edge_tensor(n, p, rng, density)
    dense = np.zeros((n, n))
    upper = t.rows <= t.cols
    dense[t.rows[upper], t.cols[upper]] = rng.random(int(upper.sum())) + 0.1
    dense = np.maximum(dense, dense.T)
    a = t.rows, t.cols, dense[t.rows, t.cols]
    from edgetensor.sparse_graph import SparseAdjacency
    return t, SparseAdjacency(n, *a)


def test_tensor_requires_diagonal():
    with pytest.raises(ValueError, match="diagonal"):
        EdgeFeatureTensor(2, 1, [0, 1], [1, 0], np.ones((2, 1)))


def test_tensor_requires_symmetric_support():
    with pytest.raises(ValueError, match="symmetric"):
        EdgeFeatureTensor(2, 1, [0, 0, 1], [0, 1, 1], np.ones((3, 1)))


def test_tensor_requires_sorted_slots():
    with pytest.raises(ValueError, match="sorted"):
        EdgeFeatureTensor(2, 1, [1, 0, 0, 1], [1, 0, 1, 0], np.ones((4, 1)))


def test_mode_k_product_dense_matches_loop_oracle(rng):
    t = rng.standard_normal((4, 4, 3))
    a = rng.standard_normal((4, 4))
    w = rng.standard_normal((2, 3))
    np.testing.assert_allclose(mode_k_product_dense(t, a, 1),
                               dense_mode1_oracle(t, a), atol=1e-12)
    np.testing.assert_allclose(mode_k_product_dense(t, a, 2),
                               dense_mode2_oracle(t, a), atol=1e-12)
    np.testing.assert_allclose(mode_k_product_dense(t, w, 3),
                               dense_mode3_oracle(t, w.T), atol=1e-12)


def test_propagate_mode1_matches_masked_dense_oracle(rng):
    for _ in range(20):
        n = int(rng.integers(2, 15))
        p = int(rng.integers(1, 5))
        t, a = make_pair(n, p, rng, density=float(rng.random() * 0.6))
        out = propagate_mode1(t, a)
        expected = dense_mode1_oracle(tensor_to_dense(t), a.to_dense())
        expected[~support_mask(t)] = 0.0
        np.testing.assert_allclose(tensor_to_dense(out), expected, atol=1e-12)


def test_propagate_mode2_matches_masked_dense_oracle(rng):
    for _ in range(20):
        n = int(rng.integers(2, 15))
        p = int(rng.integers(1, 5))
        t, a = make_pair(n, p, rng, density=float(rng.random() * 0.6))
        out = propagate_mode2(t, a)
        expected = dense_mode2_oracle(tensor_to_dense(t), a.to_dense())
        expected[~support_mask(t)] = 0.0
        np.testing.assert_allclose(tensor_to_dense(out), expected, atol=1e-12)


def test_project_mode3_matches_oracle(rng):
    t = random_edge_tensor(6, 4, rng)
    w = rng.standard_normal((4, 2))
    out = project_mode3(t, w)
    expected = dense_mode3_oracle(tensor_to_dense(t), w)
    np.testing.assert_allclose(tensor_to_dense(out), expected, atol=1e-12)


def test_identity_adjacency_is_noop(rng):
    t = random_edge_tensor(5, 2, rng)
    from edgetensor.sparse_graph import SparseAdjacency
    eye = SparseAdjacency(5, np.arange(5), np.arange(5), np.ones(5))
    np.testing.assert_allclose(propagate_mode1(t, eye).values, t.values,
                               atol=1e-15)
    np.testing.assert_allclose(propagate_mode2(t, eye).values, t.values,
                               atol=1e-15)


def test_support_closure(rng):
    t, a = make_pair(8, 3, rng)
    out = propagate_mode2(propagate_mode1(t, a), a)
    assert np.array_equal(out.rows, t.rows)
    assert np.array_equal(out.cols, t.cols)


def test_propagate_linearity(rng):
    t1, a = make_pair(7, 3, rng)
    t2 = t1.with_values(rng.standard_normal(t1.values.shape))
    lhs = propagate_mode1(t1.with_values(t1.values + t2.values), a)
    rhs = propagate_mode1(t1, a).values + propagate_mode1(t2, a).values
    np.testing.assert_allclose(lhs.values, rhs, atol=1e-12)


def test_propagate_homogeneity(rng):
    t, a = make_pair(7, 2, rng)
    lhs = propagate_mode1(t.with_values(3.5 * t.values), a).values
    np.testing.assert_allclose(lhs, 3.5 * propagate_mode1(t, a).values,
                               atol=1e-12)


def test_axpy_and_epsilon_decomposition(rng):
    t, a = make_pair(6, 2, rng)
    prop = propagate_mode2(propagate_mode1(t, a), a)
    mixed = axpy(prop, t, 0.25)
    np.testing.assert_allclose(mixed.values, prop.values + 0.25 * t.values,
                               atol=1e-15)
    zero = axpy(prop, t, 0.0)
    np.testing.assert_array_equal(zero.values, prop.values)


def test_axpy_rejects_mismatched_support(rng):
    t1 = random_edge_tensor(5, 2, rng, density=0.2)
    t2 = random_edge_tensor(5, 2, rng, density=0.9)
    if np.array_equal(t1.keys, t2.keys):
        pytest.skip("supports collided")
    with pytest.raises(ValueError, match="support"):
        axpy(t1, t2, 0.1)


def test_propagate_gradients_match_finite_differences(rng):
    t, a = make_pair(5, 2, rng)
    coeff = rng.standard_normal(t.values.shape)
    sv = Var(t.values.copy())
    av = Var(a.weights.copy())
    out = propagate_mode1(t.with_values(sv), a, a_values=av)
    backward(ad.total(ad.mul(out.values, Var(coeff))))

    step = 1e-6
    for var, base, rebuild in (
        (sv, t.values, lambda v: propagate_mode1(t.with_values(v), a).values),
        (av, a.weights,
         lambda v: propagate_mode1(t, a, a_values=v).values),
    ):
        flat = base.reshape(-1).copy()
        for k in range(flat.size):
            delta = np.zeros_like(flat)
            delta[k] = step
            hi = (rebuild((flat + delta).reshape(base.shape)) * coeff).sum()
            lo = (rebuild((flat - delta).reshape(base.shape)) * coeff).sum()
            fd = (hi - lo) / (2 * step)
            assert var.grad.reshape(-1)[k] == pytest.approx(fd, abs=1e-6)


def test_contraction_plan_is_cached(rng):
    t, a = make_pair(6, 2, rng)
    p1 = contraction_plan(1, t, a)
    p2 = contraction_plan(1, t, a)
    assert p1 is p2
    assert contraction_plan(2, t, a) is not p1


def test_collapse_to_weighted_graph(rng):
    t, a = make_pair(6, 1, rng)
    sym_vals = t.plain_values()[:, 0]
    sym_vals = 0.5 * (sym_vals + sym_vals[t.transpose_permutation])
    g = collapse_to_weighted_graph(t.with_values(sym_vals[:, None]))
    assert g.symmetric
    np.testing.assert_array_equal(g.weights, sym_vals)
    with pytest.raises(ValueError, match="dimension 1"):
        collapse_to_weighted_graph(random_edge_tensor(4, 2, rng))


def test_snapshot_round_trip(tmp_path, rng):
    t = random_edge_tensor(7, 3, rng)
    path = tmp_path / "snap.txt"
    save_snapshot(t, path)
    back = load_snapshot(path)
    assert back.n == t.n and back.p == t.p
    assert np.array_equal(back.rows, t.rows)
    assert np.array_equal(back.values, t.values)  # repr round-trips exactly


def test_snapshot_rejects_malformed_header(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("3 2\n")
    with pytest.raises(ValueError, match="header"):
        load_snapshot(path)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 31))
def test_oracle_equivalence_property(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 12))
    p = int(rng.integers(1, 4))
    t, a = make_pair(n, p, rng, density=float(rng.random() * 0.7))
    out = tensor_to_dense(propagate_mode1(t, a))
    expected = mode_k_product_dense(tensor_to_dense(t), a.to_dense(), 1)
    expected[~support_mask(t)] = 0.0
    assert np.abs(out - expected).max() <= 1e-10 * max(1.0, np.abs(expected).max())
