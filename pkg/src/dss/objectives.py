"""Synthetic non-convex test functions plus an exhaustive grid oracle.

The two closed-form surfaces (Branin, 2-D Styblinski-Tang) are classic
non-convex benchmarks; ``interpolated_grid`` bilinearly interpolates a
user-supplied CSV table so arbitrary measured landscapes can be replayed as
objectives. The grid oracle brute-forces small spaces to give tests an
independent source of truth.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .space import ConfigSpace, Configuration, ParamSpec


@dataclass(frozen=True)
class SyntheticObjective:
    """A deterministic objective over its canonical space.

    ``fn`` is vectorized over numpy arrays (one argument per parameter);
    calling the objective with a Configuration validates the domain first.
    """

    name: str
    space: ConfigSpace
    fn: Callable[..., np.ndarray]

    def __call__(self, config: Configuration, seed: int = 0) -> float:
        self.space.validate(config)
        return float(self.fn(*[np.asarray(v, dtype=np.float64) for v in config.values]))


def _branin_fn(x1, x2):
    a = 1.0
    b = 5.1 / (4.0 * math.pi**2)
    c = 5.0 / math.pi
    r = 6.0
    s = 10.0
    t = 1.0 / (8.0 * math.pi)
    return a * (x2 - b * x1**2 + c * x1 - r) ** 2 + s * (1.0 - t) * np.cos(x1) + s


def branin() -> SyntheticObjective:
    space = ConfigSpace(params=(
        ParamSpec("x1", "continuous", -5.0, 10.0),
        ParamSpec("x2", "continuous", 0.0, 15.0),
    ))
    return SyntheticObjective(name="branin", space=space, fn=_branin_fn)


def _styblinski_tang_fn(x1, x2):
    def term(x):
        return x**4 - 16.0 * x**2 + 5.0 * x

    return 0.5 * (term(x1) + term(x2))


def styblinski_tang_2d() -> SyntheticObjective:
    space = ConfigSpace(params=(
        ParamSpec("x1", "continuous", -5.0, 5.0),
        ParamSpec("x2", "continuous", -5.0, 5.0),
    ))
    return SyntheticObjective(name="styblinski_tang_2d", space=space, fn=_styblinski_tang_fn)


# ---------------------------------------------------------------------------
# interpolated grid objective


def parse_grid_csv(text: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read a row-major (x1, x2, value) table; returns (x1_axis, x2_axis, values)."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["x1", "x2", "value"]:
        raise ValueError("grid CSV must start with header 'x1,x2,value'")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise ValueError(f"grid CSV line {lineno}: expected 3 columns")
        try:
            rows.append((float(row[0]), float(row[1]), float(row[2])))
        except ValueError:
            raise ValueError(f"grid CSV line {lineno}: non-numeric entry") from None
    if not rows:
        raise ValueError("grid CSV has no data rows")
    x1_axis = np.unique([r[0] for r in rows])
    x2_axis = np.unique([r[1] for r in rows])
    if len(rows) != len(x1_axis) * len(x2_axis):
        raise ValueError("grid CSV must contain the full Cartesian grid")
    if len(x1_axis) < 2 or len(x2_axis) < 2:
        raise ValueError("grid needs at least 2 distinct values per axis")
    values = np.full((len(x1_axis), len(x2_axis)), np.nan)
    for a, b, v in rows:
        values[np.searchsorted(x1_axis, a), np.searchsorted(x2_axis, b)] = v
    if np.isnan(values).any():
        raise ValueError("grid CSV must contain the full Cartesian grid")
    return x1_axis, x2_axis, values


def interpolated_grid(text: str, name: str = "interpolated_grid") -> SyntheticObjective:
    """Objective that bilinearly interpolates a CSV grid of (x1, x2, value)."""
    x1_axis, x2_axis, values = parse_grid_csv(text)

    def fn(x1, x2):
        i = np.clip(np.searchsorted(x1_axis, x1, side="right") - 1, 0, len(x1_axis) - 2)
        j = np.clip(np.searchsorted(x2_axis, x2, side="right") - 1, 0, len(x2_axis) - 2)
        t = (x1 - x1_axis[i]) / (x1_axis[i + 1] - x1_axis[i])
        u = (x2 - x2_axis[j]) / (x2_axis[j + 1] - x2_axis[j])
        return ((1 - t) * (1 - u) * values[i, j]
                + t * (1 - u) * values[i + 1, j]
                + (1 - t) * u * values[i, j + 1]
                + t * u * values[i + 1, j + 1])

    space = ConfigSpace(params=(
        ParamSpec("x1", "continuous", float(x1_axis[0]), float(x1_axis[-1])),
        ParamSpec("x2", "continuous", float(x2_axis[0]), float(x2_axis[-1])),
    ))
    return SyntheticObjective(name=name, space=space, fn=fn)


# ---------------------------------------------------------------------------
# grid oracle


@dataclass(frozen=True)
class GridOracle:
    resolution: int
    best_config: Configuration
    best_value: float
    grid_values: np.ndarray  # one axis per parameter
    axes: tuple[tuple[float | int, ...], ...]


def grid_oracle(obj: SyntheticObjective, resolution: int) -> GridOracle:
    """Exhaustive evaluation on a bounds-inclusive grid, uniform on each
    parameter's encoded scale. Guarded to <= 3 dimensions."""
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    if len(obj.space) > 3:
        raise ValueError("grid oracle supports at most 3 dimensions")
    axes = []
    for p in obj.space.params:
        if p.kind == "categorical":
            axes.append(tuple(range(len(p.choices))))
        else:
            ts = np.linspace(0.0, 1.0, resolution)
            axes.append(tuple(p.denormalize(float(t)) for t in ts))
    mesh = np.meshgrid(*[np.asarray(ax, dtype=np.float64) for ax in axes], indexing="ij")
    values = np.asarray(obj.fn(*mesh), dtype=np.float64)
    flat_idx = int(np.argmin(values))  # first occurrence wins ties
    multi = np.unravel_index(flat_idx, values.shape)
    best = Configuration(tuple(axes[d][i] for d, i in enumerate(multi)))
    return GridOracle(resolution=resolution, best_config=best,
                      best_value=float(values[multi]), grid_values=values,
                      axes=tuple(axes))


def landscape_csv(obj: SyntheticObjective, resolution: int) -> str:
    """Row-major x1,x2,value table for a 2-D objective (the grid CSV format)."""
    if len(obj.space) != 2:
        raise ValueError("landscape export needs a 2-d objective")
    oracle = grid_oracle(obj, resolution)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x1", "x2", "value"])
    ax1, ax2 = oracle.axes
    for i, j in itertools.product(range(len(ax1)), range(len(ax2))):
        writer.writerow([repr(float(ax1[i])), repr(float(ax2[j])),
                         repr(float(oracle.grid_values[i, j]))])
    return buf.getvalue()


_REGISTRY: dict[str, Callable[[], SyntheticObjective]] = {
    "branin": branin,
    "styblinski": styblinski_tang_2d,
    "styblinski_tang_2d": styblinski_tang_2d,
}


def by_name(name: str) -> SyntheticObjective:
    """Look up a built-in objective; ``grid:PATH`` loads an interpolated grid."""
    if name.startswith("grid:"):
        path = name[len("grid:"):]
        with open(path, "r", encoding="utf-8") as fh:
            return interpolated_grid(fh.read())
    if name not in _REGISTRY:
        raise ValueError(f"unknown objective {name!r}")
    return _REGISTRY[name]()
