from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sparse_lab import (CubeId, GridSpec, SparseCollection, chain_collection,
                        gen_collection, leftmost_chain, maximal_collection,
                        random_collection)
from sparse_lab.errors import InvalidInputError

grids = st.builds(GridSpec, st.integers(1, 2), st.integers(2, 5)).filter(
    lambda g: g.n_cells <= 1024)
kinds = st.sampled_from(["chain", "leftchain", "maximal", "random"])


@given(grids, kinds, st.integers(0, 20))
def test_generators_are_sparse(grid, kind, seed):
    coll = gen_collection(grid, kind, seed=seed)
    report = coll.packing_report()
    assert report.ok, f"{kind} seed {seed}: ratio {report.worst_ratio}"
    assert coll.is_sparse()


@given(grids, kinds, st.integers(0, 20))
def test_sparse_implies_weak_half(grid, kind, seed):
    coll = gen_collection(grid, kind, seed=seed)
    weak = coll.weak_report(Fraction(1, 2))
    assert weak.disjoint
    assert weak.ok
    assert weak.min_ratio >= Fraction(1, 2)


def test_maximal_attains_half_exactly():
    grid = GridSpec(1, 6)
    coll = maximal_collection(grid, seed=0)
    report = coll.packing_report()
    assert report.ok
    assert report.worst_ratio == Fraction(1, 2)


def test_chain_structure():
    grid = GridSpec(1, 5)
    coll = chain_collection(grid, seed=3)
    assert len(coll) == grid.depth + 1
    assert coll.maximal_cubes == (grid.root(),)
    for q in coll:
        kids = coll.children(q)
        assert len(kids) <= 1
        if kids:
            assert coll.parent(kids[0]) == q


def test_leftmost_chain_deterministic():
    grid = GridSpec(2, 4)
    coll = leftmost_chain(grid)
    assert coll.cubes == tuple(CubeId(l, (0, 0)) for l in range(5))
    assert coll.packing_report().worst_ratio == Fraction(1, 4)


@given(grids, st.integers(0, 20))
def test_children_are_maximal_strict_members(grid, seed):
    coll = random_collection(grid, seed=seed)
    members = set(coll.cubes)
    for q in coll:
        kids = coll.children(q)
        for c in kids:
            assert c in members and c != q
            assert grid.contains(q, c)
            # maximality: no member strictly between q and c
            for mid in grid.ancestors(c):
                if mid != q and grid.contains(q, mid) and mid.level > q.level:
                    assert mid not in members
        # disjointness of the children
        ranges = sorted(grid.cell_range(c) for c in kids)
        for (_, e1), (s2, _) in zip(ranges, ranges[1:]):
            assert e1 <= s2


@given(grids, st.integers(0, 20))
def test_parent_is_minimal_strict_supercube(grid, seed):
    coll = random_collection(grid, seed=seed)
    members = set(coll.cubes)
    for q in coll:
        p = coll.parent(q)
        if p is None:
            assert all(not (grid.contains(r, q) and r != q) for r in members)
        else:
            assert grid.contains(p, q) and p != q
            for mid in members:
                if grid.contains(mid, q) and mid != q:
                    assert grid.contains(mid, p) or mid == p


def test_non_sparse_detected():
    grid = GridSpec(1, 3)
    full = SparseCollection(grid, list(grid.iter_cubes()))
    report = full.packing_report()
    assert not report.ok
    assert report.worst_ratio == Fraction(1)
    assert not full.is_sparse()


def test_member_mask_matches():
    grid = GridSpec(1, 4)
    coll = random_collection(grid, seed=7)
    mask = coll.member_mask
    assert mask.sum() == len(coll)
    for q in coll:
        assert mask[grid.pyramid_index(q)] == 1


def test_restricted_to():
    grid = GridSpec(1, 4)
    coll = maximal_collection(grid, seed=0)
    sub = coll.restricted_to(grid.root())
    assert sub == coll.cubes
    q = coll.cubes[1]
    inner = coll.restricted_to(q)
    assert q in inner
    assert all(grid.contains(q, c) for c in inner)


def test_empty_collection_rejected():
    with pytest.raises(InvalidInputError):
        SparseCollection(GridSpec(1, 2), [])


def test_random_collection_accept_validation():
    with pytest.raises(InvalidInputError):
        random_collection(GridSpec(1, 2), accept=0.0)
    with pytest.raises(InvalidInputError):
        random_collection(GridSpec(1, 2), accept=1.5)


def test_gen_collection_unknown_kind():
    with pytest.raises(InvalidInputError):
        gen_collection(GridSpec(1, 2), "nosuch")


def test_root_always_in_random():
    for seed in range(10):
        coll = random_collection(GridSpec(1, 5), seed=seed)
        assert GridSpec(1, 5).root() in coll.cubes
