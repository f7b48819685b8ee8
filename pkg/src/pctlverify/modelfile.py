"""JSON model files: state space, kernel and labelled regions.

Schema (all keys required unless marked optional)::

    {
      "space":  {"type": "finite", "size": N}
              | {"type": "grid", "bounds": [[lo, hi], ...], "resolution": [n1, ...]},
      "kernel": {"type": "matrix", "rows": [[p00, p01, ...], ...]}
              | {"type": "affine_gauss_1d", "mu": M, "sigma": S}
              | {"type": "nonlinear_2d"},
      "abstraction": {"lambda": L} | {"lipschitz": K},      (grid models only)
      "labels": {"name": {"states": [i, ...]}
                       | {"boxes": [[[lo, hi], ...], ...], "mode": "center" | "inner"}}
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .discretize import Abstraction, discretize
from .kernel import AffineGauss1D, MatrixKernel, Nonlinear2D
from .space import Region, StateSpace, region_from_box


class ModelError(ValueError):
    """Malformed model file; the message names the file and the offending key."""


@dataclass
class Model:
    path: str
    space: StateSpace
    kernel: object
    labels: dict
    abstraction: Abstraction | None = None

    @property
    def is_grid(self) -> bool:
        return self.space.is_grid

    @property
    def chain(self) -> MatrixKernel:
        return self.abstraction.chain if self.abstraction is not None else self.kernel


def parse_grid_override(text: str) -> tuple:
    try:
        res = tuple(int(t) for t in text.lower().split("x"))
    except ValueError:
        raise ModelError(f"--grid: expected sizes like 60x60, got {text!r}") from None
    if not res or any(r < 1 for r in res):
        raise ModelError(f"--grid: sizes must be positive, got {text!r}")
    return res


def load_model(path: str, grid: tuple | None = None) -> Model:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ModelError(f"{path}: cannot read model file: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    return build_model(data, path, grid)


def _need(obj, key, where, path):
    if not isinstance(obj, dict) or key not in obj:
        raise ModelError(f"{path}: {where}: missing key {key!r}")
    return obj[key]


def build_model(data: dict, path: str = "<model>", grid: tuple | None = None) -> Model:
    space = _space(_need(data, "space", "top level", path), path, grid)
    kernel = _kernel(_need(data, "kernel", "top level", path), space, path)
    labels_raw = data.get("labels", {})
    if not isinstance(labels_raw, dict):
        raise ModelError(f"{path}: labels: expected an object")
    labels = {name: _region(spec, space, f"labels.{name}", path) for name, spec in labels_raw.items()}
    if "true" in labels:
        raise ModelError(f"{path}: labels.true: 'true' is reserved")
    abstraction = None
    if space.is_grid:
        spec = _need(data, "abstraction", "top level", path)
        lam, lip = spec.get("lambda"), spec.get("lipschitz")
        if lam is None and lip is None:
            raise ModelError(f"{path}: abstraction: give 'lambda' or 'lipschitz'")
        try:
            abstraction = discretize(kernel, space, lipschitz=lip, lam=lam)
        except ValueError as exc:
            raise ModelError(f"{path}: abstraction: {exc}") from None
    return Model(path, space, kernel, labels, abstraction)


def _space(spec, path, grid):
    kind = _need(spec, "type", "space", path)
    if kind == "finite":
        size = _need(spec, "size", "space", path)
        if not isinstance(size, int) or size < 1:
            raise ModelError(f"{path}: space.size: expected a positive integer")
        if grid is not None:
            raise ModelError(f"{path}: --grid given for a finite model")
        return StateSpace.finite(size)
    if kind == "grid":
        bounds = _need(spec, "bounds", "space", path)
        res = grid if grid is not None else tuple(_need(spec, "resolution", "space", path))
        try:
            return StateSpace.grid(bounds, res)
        except (ValueError, TypeError) as exc:
            raise ModelError(f"{path}: space: {exc}") from None
    raise ModelError(f"{path}: space.type: unknown space type {kind!r}")


def _kernel(spec, space, path):
    kind = _need(spec, "type", "kernel", path)
    try:
        if kind == "matrix":
            if space.is_grid:
                raise ModelError(f"{path}: kernel: matrix kernels need a finite space")
            rows = np.asarray(_need(spec, "rows", "kernel", path), dtype=float)
            if rows.shape != (space.size, space.size):
                raise ModelError(f"{path}: kernel.rows: expected a {space.size}x{space.size} matrix, got shape {rows.shape}")
            sums = rows.sum(axis=1)
            bad = np.flatnonzero((np.abs(sums - 1) > 1e-9) | np.any(rows < 0, axis=1))
            if bad.size:
                raise ModelError(f"{path}: kernel.rows[{bad[0]}]: row is not a probability vector")
            return MatrixKernel(rows, space)
        if not space.is_grid:
            raise ModelError(f"{path}: kernel: density kernels need a grid space")
        if kind == "affine_gauss_1d":
            k = AffineGauss1D(_need(spec, "mu", "kernel", path), _need(spec, "sigma", "kernel", path))
        elif kind == "nonlinear_2d":
            k = Nonlinear2D()
        else:
            raise ModelError(f"{path}: kernel.type: unknown kernel family {kind!r}")
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ModelError):
            raise
        raise ModelError(f"{path}: kernel: {exc}") from None
    if space.dim != k.dim:
        raise ModelError(f"{path}: kernel: {kind} needs a {k.dim}D grid")
    return k


def _region(spec, space, where, path):
    if not isinstance(spec, dict):
        raise ModelError(f"{path}: {where}: expected an object")
    if "states" in spec:
        states = spec["states"]
        if space.is_grid:
            raise ModelError(f"{path}: {where}: grid labels use 'boxes'")
        for j, s in enumerate(states):
            if not isinstance(s, int) or not 0 <= s < space.size:
                raise ModelError(f"{path}: {where}.states[{j}]: index {s!r} out of range")
        return Region.from_states(space, states)
    if "boxes" in spec:
        if not space.is_grid:
            raise ModelError(f"{path}: {where}: finite labels use 'states'")
        mask = np.zeros(space.size, dtype=bool)
        for j, box in enumerate(spec["boxes"]):
            try:
                mask |= region_from_box(space, box, spec.get("mode", "center")).mask
            except (ValueError, TypeError) as exc:
                raise ModelError(f"{path}: {where}.boxes[{j}]: {exc}") from None
        return Region(space, mask)
    raise ModelError(f"{path}: {where}: expected 'states' or 'boxes'")
