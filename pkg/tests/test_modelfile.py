import json

import numpy as np
import pytest

from pctlverify.modelfile import ModelError, build_model, load_model, parse_grid_override

FINITE = {"space": {"type": "finite", "size": 2}, "kernel": {"type": "matrix", "rows": [[0.5, 0.5], [0, 1]]},
          "labels": {"a": {"states": [0]}}}
GRID = {"space": {"type": "grid", "bounds": [[-1, 1]], "resolution": [10]},
        "kernel": {"type": "affine_gauss_1d", "mu": 0, "sigma": 1}, "abstraction": {"lipschitz": 1.0},
        "labels": {"left": {"boxes": [[[-1, 0]]]}, "mid": {"boxes": [[[-0.3, 0.3]]], "mode": "inner"}}}


def _variant(base, path, value):
    d = json.loads(json.dumps(base))
    node = d
    for key in path[:-1]:
        node = node[key]
    if value is KeyError:
        del node[path[-1]]
    else:
        node[path[-1]] = value
    return d


def test_finite_model():
    m = build_model(FINITE)
    assert not m.is_grid and m.labels["a"].indices.tolist() == [0] and m.chain is m.kernel


def test_grid_model_and_override():
    m = build_model(GRID)
    assert m.is_grid and m.abstraction.provenance == "lipschitz-derived"
    assert m.labels["left"].count == 5 and m.labels["mid"].count == 2
    assert build_model(GRID, grid=(20,)).space.size == 20
    assert parse_grid_override("60x60") == (60, 60)


@pytest.mark.parametrize("path,value,needle", [
    (("kernel", "rows"), [[0.5, 0.4], [0, 1]], "kernel.rows[0]"),
    (("kernel", "rows"), [[1.0]], "2x2"),
    (("labels", "a", "states"), [5], "labels.a.states[0]"),
    (("space", "type"), "torus", "space.type"),
    (("kernel",), KeyError, "'kernel'"),
    (("labels", "true"), {"states": [0]}, "reserved"),
])
def test_finite_errors_name_the_key(path, value, needle):
    with pytest.raises(ModelError) as exc:
        build_model(_variant(FINITE, path, value), "m.json")
    assert needle in str(exc.value) and "m.json" in str(exc.value)


@pytest.mark.parametrize("path,value,needle", [
    (("abstraction",), KeyError, "'abstraction'"),
    (("abstraction",), {}, "lambda"),
    (("kernel", "type"), "matrix", "finite space"),
    (("kernel", "type"), "nonlinear_2d", "2D grid"),
    (("kernel", "sigma"), -1, "sigma"),
    (("labels", "left"), {"states": [0]}, "boxes"),
])
def test_grid_errors_name_the_key(path, value, needle):
    with pytest.raises(ModelError) as exc:
        build_model(_variant(GRID, path, value), "g.json")
    assert needle in str(exc.value)


def test_grid_override_validation():
    for bad in ("60y60", "0x3", ""):
        with pytest.raises(ModelError):
            parse_grid_override(bad)
    with pytest.raises(ModelError):
        build_model(FINITE, grid=(4,))


def test_invalid_json_has_line_and_column(tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{\n  \"space\": [,]\n}")
    with pytest.raises(ModelError) as exc:
        load_model(str(p))
    assert f"{p}:2:" in str(exc.value)


def test_rows_are_stored_as_given():
    assert np.array_equal(build_model(FINITE).kernel.dense(), np.array([[0.5, 0.5], [0, 1]]))
