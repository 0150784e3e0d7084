from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sparse_lab import CubeId, GridSpec, format_cube, parse_cube
from sparse_lab.errors import InvalidInputError
from sparse_lab.grid import as_cube_list, common_grid, pyramid_sums_np

grids = st.builds(GridSpec, st.integers(1, 3), st.integers(1, 4)).filter(
    lambda g: g.n_cells <= 512)


@st.composite
def grid_and_cube(draw):
    grid = draw(grids)
    level = draw(st.integers(0, grid.depth))
    index = tuple(draw(st.integers(0, 2 ** level - 1))
                  for _ in range(grid.dimension))
    return grid, CubeId(level, index)


def test_counts_and_offsets():
    g = GridSpec(2, 3)
    assert g.n_cells == 64
    assert g.branch == 4
    assert g.n_cubes == 1 + 4 + 16 + 64
    assert list(g.level_offsets) == [0, 1, 5, 21, 85]


def test_invalid_grid():
    with pytest.raises(InvalidInputError):
        GridSpec(0, 3)
    with pytest.raises(InvalidInputError):
        GridSpec(4, 3)
    with pytest.raises(InvalidInputError):
        GridSpec(1, 0)
    with pytest.raises(InvalidInputError):
        GridSpec(3, 8)  # 2^24 cells > cap


@given(grid_and_cube())
def test_morton_roundtrip(gc):
    grid, cube = gc
    code = grid.morton(cube)
    assert grid.cube_from_morton(cube.level, code) == cube


@given(grid_and_cube())
def test_pyramid_roundtrip(gc):
    grid, cube = gc
    slot = grid.pyramid_index(cube)
    assert 0 <= slot < grid.n_cubes
    assert grid.cube_from_pyramid(slot) == cube


@given(grid_and_cube())
def test_parent_child_inverse(gc):
    grid, cube = gc
    kids = grid.children(cube)
    if cube.level == grid.depth:
        assert kids == []
    else:
        assert len(kids) == grid.branch
        for kid in kids:
            assert grid.parent(kid) == cube
            assert grid.contains(cube, kid)


@given(grid_and_cube())
def test_cell_range_partition(gc):
    grid, cube = gc
    a, b = grid.cell_range(cube)
    assert 0 <= a < b <= grid.n_cells
    assert b - a == grid.cell_count(cube)
    kids = grid.children(cube)
    if kids:
        ranges = sorted(grid.cell_range(k) for k in kids)
        assert ranges[0][0] == a and ranges[-1][1] == b
        for (_, e1), (s2, _) in zip(ranges, ranges[1:]):
            assert e1 == s2


@given(grid_and_cube())
def test_measure_exact(gc):
    grid, cube = gc
    assert grid.measure(cube) == Fraction(1, 2 ** (grid.dimension * cube.level))
    a, b = grid.cell_range(cube)
    assert grid.measure(cube) == Fraction(b - a, grid.n_cells)


@given(grid_and_cube())
def test_format_parse_roundtrip(gc):
    _, cube = gc
    assert parse_cube(format_cube(cube)) == cube


@given(grid_and_cube())
def test_ancestors_chain(gc):
    grid, cube = gc
    chain = grid.ancestors(cube)
    assert len(chain) == cube.level
    assert [c.level for c in chain] == list(range(cube.level))
    if chain:
        assert chain[0] == grid.root()
    for anc in chain:
        assert grid.contains(anc, cube) and anc != cube


@given(grid_and_cube())
def test_cell_centers_inside(gc):
    grid, cube = gc
    a, b = grid.cell_range(cube)
    centers = grid.cell_centers[a:b]
    side = 1.0 / 2 ** cube.level
    lo = np.array(cube.index) * side
    assert (centers >= lo).all() and (centers <= lo + side).all()


def test_iter_cubes_complete():
    g = GridSpec(2, 2)
    cubes = list(g.iter_cubes())
    assert len(cubes) == g.n_cubes
    assert len(set(cubes)) == g.n_cubes
    assert [g.pyramid_index(q) for q in cubes] == list(range(g.n_cubes))


def test_validate_cube_errors():
    g = GridSpec(1, 3)
    with pytest.raises(InvalidInputError):
        g.validate_cube(CubeId(4, (0,)))
    with pytest.raises(InvalidInputError):
        g.validate_cube(CubeId(1, (2,)))
    with pytest.raises(InvalidInputError):
        g.validate_cube(CubeId(1, (0, 0)))


def test_common_grid():
    a, b = GridSpec(1, 3), GridSpec(1, 3)
    assert common_grid(a, b) == a
    with pytest.raises(InvalidInputError):
        common_grid(a, GridSpec(1, 4))


def test_as_cube_list_sorts_and_rejects_duplicates():
    g = GridSpec(1, 2)
    cubes = as_cube_list(g, [CubeId(2, (3,)), CubeId(0, (0,)), CubeId(1, (0,))])
    assert [q.level for q in cubes] == [0, 1, 2]
    with pytest.raises(InvalidInputError):
        as_cube_list(g, [CubeId(1, (0,)), CubeId(1, (0,))])


@given(grids, st.integers(0, 10))
def test_pyramid_sums_match_slices(grid, seed):
    rng = np.random.default_rng(seed)
    cells = rng.standard_normal(grid.n_cells)
    sums = pyramid_sums_np(grid, cells)
    for q in grid.iter_cubes():
        a, b = grid.cell_range(q)
        assert sums[grid.pyramid_index(q)] == pytest.approx(
            cells[a:b].sum(), rel=1e-12, abs=1e-12)
