import numpy as np
import pytest
from importlib import resources

from sparse_lab import (GridSpec, InvalidInputError, check_decay,
                        gen_collection, gen_symbol, gen_weight)
from sparse_lab import storage
from sparse_lab.corpus import build_standard_corpus, load_standard_corpus


def test_dumps_is_deterministic():
    doc = {"b": 1.0, "a": [1, 2, {"z": 0.1, "y": None}]}
    assert storage.dumps(doc) == storage.dumps(doc)
    assert storage.dumps(doc).endswith("\n")
    assert storage.dumps(doc, compact=True).count(" ") == 0
    with pytest.raises(ValueError):
        storage.dumps({"x": float("nan")})


def test_collection_roundtrip(tmp_path):
    grid = GridSpec(2, 3)
    coll = gen_collection(grid, "random", seed=9)
    p = tmp_path / "coll.json"
    storage.save_collection(p, coll)
    again = storage.load_collection(p)
    assert again.grid == coll.grid
    assert again.cubes == coll.cubes
    # saving twice produces identical bytes
    p2 = tmp_path / "coll2.json"
    storage.save_collection(p2, again)
    assert p.read_bytes() == p2.read_bytes()


def test_weight_roundtrip(tmp_path):
    grid = GridSpec(1, 4)
    w = gen_weight(grid, 2, "random_logsym", seed=3, spread=0.5)
    p = tmp_path / "w.json"
    storage.save_weight(p, w)
    again = storage.load_weight(p)
    np.testing.assert_allclose(again.values, w.values, rtol=0, atol=0)
    assert again.grid == w.grid


def test_symbol_roundtrip(tmp_path):
    grid = GridSpec(1, 3)
    b = gen_symbol(grid, 2, "gauss", seed=4)
    p = tmp_path / "b.json"
    storage.save_symbol(p, b)
    again = storage.load_symbol(p)
    np.testing.assert_allclose(again.values, b.values, rtol=0, atol=0)


def test_format_tag_mismatch_raises(tmp_path):
    grid = GridSpec(1, 2)
    p = tmp_path / "w.json"
    storage.save_weight(p, gen_weight(grid, 1, "constant", value=2.0))
    with pytest.raises(InvalidInputError):
        storage.load_collection(p)
    with pytest.raises(InvalidInputError):
        storage.load_symbol(p)
    q = tmp_path / "c.json"
    storage.save_collection(q, gen_collection(grid, "maximal"))
    with pytest.raises(InvalidInputError):
        storage.load_weight(q)


def test_cell_shape_mismatch_raises(tmp_path):
    grid = GridSpec(1, 2)
    p = tmp_path / "w.json"
    storage.save_weight(p, gen_weight(grid, 1, "constant", value=2.0))
    doc = storage.load_json(p)
    doc["cells"] = doc["cells"][:-1]
    storage.save_json(p, doc, compact=True)
    with pytest.raises(InvalidInputError):
        storage.load_weight(p)


def test_weight_load_revalidates(tmp_path):
    grid = GridSpec(1, 1)
    p = tmp_path / "w.json"
    storage.save_weight(p, gen_weight(grid, 1, "constant", value=2.0))
    doc = storage.load_json(p)
    doc["cells"] = [[[2.0]], [[-1.0]]]
    storage.save_json(p, doc, compact=True)
    with pytest.raises(InvalidInputError):
        storage.load_weight(p)


def test_checks_serialization(weight6, coll6):
    reports = [check_decay(coll6)]
    doc = storage.checks_to_dict(reports, config_digest="demo")
    assert doc["format"] == "sparse-lab/checks@1"
    assert doc["passed"] is True
    assert doc["checks"][0]["name"] == "decay"
    csv_text = storage.checks_to_csv(reports)
    lines = csv_text.splitlines()
    assert lines[0].startswith("name,digest,lhs,rhs,margin,passed")
    assert len(lines) == 2
    assert storage.checks_to_csv(reports) == csv_text
    stamped = storage.checks_to_csv(reports, config_digest="demo")
    assert stamped.splitlines()[0] == "# config demo"
    assert stamped.splitlines()[1:] == lines


def test_standard_corpus_file_matches_generator():
    committed = (resources.files("sparse_lab")
                 .joinpath("data/standard_corpus.json").read_text())
    assert storage.dumps(build_standard_corpus()) == committed


def test_standard_corpus_loads():
    corpus = load_standard_corpus()
    assert len(corpus.weights) == 120
    assert len(corpus.symbols) == 30
    ids = [w.id for w in corpus.weights] + [s.id for s in corpus.symbols]
    assert len(set(ids)) == len(ids)
    inst = corpus.weights[0]
    coll, weight = inst.materialize()
    assert weight.n == inst.n
    assert coll.grid.depth == inst.depth
