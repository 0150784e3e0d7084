import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sparse_lab import GridSpec, gen_weight, scalar_ainf, vector_ainf_estimate
from sparse_lab.errors import InvalidInputError
from sparse_lab.weights import (MatrixField, MatrixWeight, expm_sym, sqrt_psd,
                                weight_constants)

from oracles import brute_a2, brute_average, brute_scalar_ainf

grids = st.builds(GridSpec, st.integers(1, 2), st.integers(2, 4)).filter(
    lambda g: g.n_cells <= 256)


def test_two_cell_hand_values():
    grid = GridSpec(1, 1)
    w = MatrixWeight(grid, np.array([[[1.0]], [[4.0]]]))
    root = grid.root()
    assert w.average(root)[0, 0] == pytest.approx(2.5)
    assert w.average_inv(root)[0, 0] == pytest.approx(0.625)
    a2, witness = w.a2_constant()
    assert a2 == pytest.approx(1.5625)
    assert witness == root


@given(grids, st.integers(1, 3), st.integers(0, 15))
def test_averages_match_bruteforce(grid, n, seed):
    weight = gen_weight(grid, n, "random_logsym", seed=seed, spread=0.6)
    for q in [grid.root(), *grid.children(grid.root())]:
        np.testing.assert_allclose(weight.average(q),
                                   brute_average(weight.values, grid, q),
                                   rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(weight.average_inv(q),
                                   brute_average(weight.cell_inv, grid, q),
                                   rtol=1e-12, atol=1e-12)


@given(grids, st.integers(1, 3), st.integers(0, 15))
def test_a2_matches_bruteforce(grid, n, seed):
    weight = gen_weight(grid, n, "random_logsym", seed=seed, spread=0.6)
    a2, witness = weight.a2_constant()
    assert a2 == pytest.approx(brute_a2(weight), rel=1e-10)
    # witness attains the max
    slot = grid.pyramid_index(witness)
    assert weight.a2_per_cube[slot] == pytest.approx(a2, rel=1e-12)
    assert a2 >= 1.0 - 1e-12


@given(grids, st.integers(0, 15))
def test_scalar_ainf_matches_bruteforce(grid, seed):
    weight = gen_weight(grid, 1, "random_logsym", seed=seed, spread=0.9)
    val, witness = scalar_ainf(weight)
    assert val == pytest.approx(brute_scalar_ainf(weight), rel=1e-10)
    assert val >= 1.0 - 1e-12
    grid.validate_cube(witness)


def test_a2_constant_over_collection_subset():
    grid = GridSpec(1, 4)
    weight = gen_weight(grid, 1, "power", alpha=0.7)
    a2_all, _ = weight.a2_constant()
    some = [grid.root(), *grid.children(grid.root())]
    a2_sub, wit = weight.a2_constant(some)
    assert a2_sub <= a2_all + 1e-15
    assert wit in some
    with pytest.raises(InvalidInputError):
        weight.a2_constant([])


def test_validation_rejects_bad_cells():
    grid = GridSpec(1, 1)
    asym = np.array([[[1.0, 0.5], [0.0, 1.0]]] * 2)
    with pytest.raises(InvalidInputError):
        MatrixWeight(grid, asym)
    indef = np.array([[[1.0, 0.0], [0.0, -0.5]]] * 2)
    with pytest.raises(InvalidInputError):
        MatrixWeight(grid, indef)
    wrong_shape = np.ones((3, 1, 1))
    with pytest.raises(InvalidInputError):
        MatrixWeight(grid, wrong_shape)


def test_power_weight_cells_match_numeric_integration():
    grid = GridSpec(1, 4)
    alpha = 0.6
    weight = gen_weight(grid, 1, "power", alpha=alpha)
    # integrate |x|^alpha over each cell with a fine midpoint rule
    N = grid.n_cells
    h = 1.0 / N
    fine = 4096
    for c in range(N):
        xs = (c + (np.arange(fine) + 0.5) / fine) * h
        approx = (np.abs(xs) ** alpha).mean()
        assert weight.values[c, 0, 0] == pytest.approx(approx, rel=1e-6)


def test_power_weight_with_center_and_validation():
    grid = GridSpec(1, 3)
    w = gen_weight(grid, 1, "power", alpha=0.5, center=1.0)
    # symmetric partner of |x|^0.5: cell averages mirror around the midpoint
    v = w.values[:, 0, 0]
    u = gen_weight(grid, 1, "power", alpha=0.5).values[:, 0, 0]
    np.testing.assert_allclose(v, u[::-1], rtol=1e-12)
    with pytest.raises(InvalidInputError):
        gen_weight(grid, 1, "power", alpha=-1.0)
    with pytest.raises(InvalidInputError):
        gen_weight(grid, 2, "power", alpha=0.5)


def test_gen_weight_kinds_and_validation():
    grid = GridSpec(1, 3)
    w = gen_weight(grid, 2, "constant", value=[2.0, 3.0])
    assert np.allclose(w.values[0], np.diag([2.0, 3.0]))
    with pytest.raises(InvalidInputError):
        gen_weight(grid, 2, "constant", value=[1.0, 2.0, 3.0])
    with pytest.raises(InvalidInputError):
        gen_weight(grid, 2, "rotating2d", junk=1)
    with pytest.raises(InvalidInputError):
        gen_weight(grid, 3, "rotating2d")
    with pytest.raises(InvalidInputError):
        gen_weight(grid, 1, "nosuch")
    d = gen_weight(grid, 2, "diag", components=[
        {"kind": "constant", "value": 2.0},
        {"kind": "power", "alpha": 0.5},
    ])
    assert np.allclose(d.values[:, 0, 1], 0.0)
    assert np.allclose(d.values[:, 0, 0], 2.0)


def test_rotating2d_eigenvalues():
    grid = GridSpec(1, 4)
    w = gen_weight(grid, 2, "rotating2d", alpha=0.6)
    t = grid.cell_centers[:, 0]
    eigs = np.linalg.eigvalsh(w.values)
    np.testing.assert_allclose(np.sort(eigs, axis=1),
                               np.sort(np.stack([t ** 0.6, t ** -0.6], 1), 1),
                               rtol=1e-10)


def test_sqrt_psd_and_expm_sym():
    rng = np.random.default_rng(0)
    g = rng.standard_normal((5, 3, 3))
    sym = (g + g.transpose(0, 2, 1)) / 2
    spd = expm_sym(sym)
    # oracle: series sum of the exponential
    for k in range(5):
        series = np.eye(3)
        term = np.eye(3)
        for j in range(1, 40):
            term = term @ sym[k] / j
            series = series + term
        np.testing.assert_allclose(spd[k], series, rtol=1e-10, atol=1e-12)
    roots = sqrt_psd(spd)
    np.testing.assert_allclose(
        np.einsum("cij,cjk->cik", roots, roots), spd, rtol=1e-10, atol=1e-12)


def test_inverse_weight_roundtrip():
    grid = GridSpec(1, 3)
    w = gen_weight(grid, 2, "random_logsym", seed=4, spread=0.5)
    wi = w.inverse_weight()
    prod = np.einsum("cij,cjk->cik", w.values, wi.values)
    np.testing.assert_allclose(prod, np.broadcast_to(np.eye(2), prod.shape),
                               rtol=1e-10, atol=1e-10)
    # duality of the characteristic: [W]_{A2} == [W^-1]_{A2} cube by cube
    np.testing.assert_allclose(w.a2_per_cube, wi.a2_per_cube, rtol=1e-9)


def test_direction_weight_and_vector_ainf():
    grid = GridSpec(1, 4)
    w = gen_weight(grid, 2, "random_logsym", seed=6, spread=0.7)
    est = vector_ainf_estimate(w, directions=32, seed=0)
    assert not est.exact
    assert est.value >= 1.0 - 1e-12
    # the estimate dominates every axis direction's exact scalar constant
    for e in np.eye(2):
        scalar = w.direction_weight(e)
        val, _ = scalar_ainf(scalar)
        assert est.value >= val - 1e-10
    # scalar case is exact and flagged
    ws = gen_weight(grid, 1, "random_logsym", seed=6)
    est1 = vector_ainf_estimate(ws)
    assert est1.exact
    assert est1.value == pytest.approx(scalar_ainf(ws)[0], rel=1e-14)


def test_vector_ainf_monotone_in_directions():
    grid = GridSpec(1, 3)
    w = gen_weight(grid, 3, "random_logsym", seed=8, spread=0.6)
    lo = vector_ainf_estimate(w, directions=4, seed=1)
    hi = vector_ainf_estimate(w, directions=64, seed=1)
    assert hi.value >= lo.value - 1e-12


def test_weight_constants_bundle(weight6, coll6):
    consts = weight_constants(weight6, coll6.cubes)
    assert consts.n == 1
    assert consts.ainf_exact
    assert consts.a2 <= consts.a2_tree + 1e-15
    assert consts.ainf >= 1.0 and consts.ainf_dual >= 1.0


def test_matrix_field_transpose():
    grid = GridSpec(1, 2)
    rng = np.random.default_rng(3)
    vals = rng.standard_normal((grid.n_cells, 2, 2))
    f = MatrixField(grid, vals)
    np.testing.assert_allclose(f.transpose_field().values,
                               vals.transpose(0, 2, 1))
    assert f.n == 2
