"""Hyperparameter search space: parameter specs, sampling, and numeric encoding.

A :class:`ConfigSpace` is an ordered list of :class:`ParamSpec`. Declaration
order is canonical: configurations, feature vectors, and cell keys all align
with it. Continuous and integer parameters live on either a linear or a log10
scale; all sampling and normalization happens on that scale so log-ranged
parameters are covered uniformly in exponent space.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

KINDS = ("continuous", "integer", "categorical")
SCALES = ("linear", "log10")


class SpaceError(ValueError):
    """Raised for invalid space definitions or out-of-space configurations."""


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class ParamSpec:
    """One search dimension.

    Args:
        name: unique identifier within the space.
        kind: "continuous", "integer", or "categorical".
        low, high: inclusive bounds for continuous/integer parameters.
        choices: ordered option labels for categorical parameters.
        scale: "linear" or "log10" (log10 requires low > 0).
    """

    name: str
    kind: str
    low: float | None = None
    high: float | None = None
    choices: tuple[str, ...] | None = None
    scale: str = "linear"

    def __post_init__(self):
        if not self.name:
            raise SpaceError("parameter name must be non-empty")
        if self.kind not in KINDS:
            raise SpaceError(f"parameter {self.name!r}: unknown kind {self.kind!r}")
        if self.scale not in SCALES:
            raise SpaceError(f"parameter {self.name!r}: unknown scale {self.scale!r}")
        if self.kind == "categorical":
            if self.low is not None or self.high is not None:
                raise SpaceError(f"parameter {self.name!r}: categorical takes no bounds")
            if self.choices is None or len(self.choices) < 2:
                raise SpaceError(f"parameter {self.name!r}: categorical needs >= 2 choices")
            if len(set(self.choices)) != len(self.choices):
                raise SpaceError(f"parameter {self.name!r}: duplicate choices")
            if self.scale != "linear":
                raise SpaceError(f"parameter {self.name!r}: categorical takes no scale")
            return
        if self.choices is not None:
            raise SpaceError(f"parameter {self.name!r}: choices only valid for categorical")
        if self.low is None or self.high is None:
            raise SpaceError(f"parameter {self.name!r}: bounds required")
        low, high = float(self.low), float(self.high)
        if not (math.isfinite(low) and math.isfinite(high)):
            raise SpaceError(f"parameter {self.name!r}: bounds must be finite")
        if self.kind == "continuous" and not low < high:
            raise SpaceError(f"parameter {self.name!r}: low must be < high")
        if self.kind == "integer":
            if int(self.low) != self.low or int(self.high) != self.high:
                raise SpaceError(f"parameter {self.name!r}: integer bounds must be integral")
            if not low <= high:
                raise SpaceError(f"parameter {self.name!r}: low must be <= high")
        if self.scale == "log10" and low <= 0:
            raise SpaceError(f"parameter {self.name!r}: log10 scale requires low > 0")

    # -- scale helpers -------------------------------------------------

    def to_scale(self, value: float) -> float:
        return math.log10(value) if self.scale == "log10" else float(value)

    def from_scale(self, s: float) -> float | int:
        value = 10.0**s if self.scale == "log10" else s
        if self.kind == "integer":
            return min(max(_round_half_up(value), int(self.low)), int(self.high))
        return value

    @property
    def scale_bounds(self) -> tuple[float, float]:
        return self.to_scale(self.low), self.to_scale(self.high)

    def normalize(self, value: float) -> float:
        """Map a value to [0, 1] on the parameter's scale."""
        lo, hi = self.scale_bounds
        if hi == lo:  # degenerate integer range
            return 0.0
        return (self.to_scale(value) - lo) / (hi - lo)

    def denormalize(self, t: float) -> float | int:
        lo, hi = self.scale_bounds
        return self.from_scale(lo + t * (hi - lo))

    def contains(self, value) -> bool:
        if self.kind == "categorical":
            return isinstance(value, (int, np.integer)) and 0 <= value < len(self.choices)
        if self.kind == "integer":
            return float(value) == int(value) and self.low <= value <= self.high
        return self.low <= value <= self.high

    @property
    def feature_width(self) -> int:
        return len(self.choices) if self.kind == "categorical" else 1


@dataclass(frozen=True)
class Configuration:
    """One point in a space: a value per parameter, in declaration order.

    Continuous parameters hold floats, integer parameters ints, categorical
    parameters the integer index into ``choices``.
    """

    values: tuple[float | int, ...]

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class ConfigSpace:
    params: tuple[ParamSpec, ...]

    def __post_init__(self):
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            dup = next(n for n in names if names.count(n) > 1)
            raise SpaceError(f"duplicate parameter name {dup!r}")
        if not self.params:
            raise SpaceError("space must declare at least one parameter")

    def __len__(self) -> int:
        return len(self.params)

    @property
    def feature_dim(self) -> int:
        return sum(p.feature_width for p in self.params)

    def index_of(self, name: str) -> int:
        for i, p in enumerate(self.params):
            if p.name == name:
                return i
        raise SpaceError(f"no parameter named {name!r}")

    def validate(self, config: Configuration) -> None:
        if len(config.values) != len(self.params):
            raise SpaceError(
                f"configuration has {len(config.values)} values, space has {len(self.params)}"
            )
        for p, v in zip(self.params, config.values):
            if not p.contains(v):
                raise SpaceError(f"value {v!r} out of bounds for parameter {p.name!r}")

    def named(self, config: Configuration) -> dict[str, Any]:
        """Configuration as a name -> value mapping (categoricals by label)."""
        out: dict[str, Any] = {}
        for p, v in zip(self.params, config.values):
            out[p.name] = p.choices[int(v)] if p.kind == "categorical" else v
        return out


# ---------------------------------------------------------------------------
# parsing


def _parse_param(obj: Any, path: str) -> ParamSpec:
    if not isinstance(obj, dict):
        raise SpaceError(f"{path}: expected an object")
    name = obj.get("name")
    if not isinstance(name, str) or not name:
        raise SpaceError(f"{path}.name: expected a non-empty string")
    kind = obj.get("kind")
    if kind not in KINDS:
        raise SpaceError(f"{path}.kind: parameter {name!r} has invalid kind {kind!r}")
    allowed = {"name", "kind", "low", "high", "choices", "scale"}
    for key in obj:
        if key not in allowed:
            raise SpaceError(f"{path}.{key}: unknown key on parameter {name!r}")
    scale = obj.get("scale", "linear")
    if scale not in SCALES:
        raise SpaceError(f"{path}.scale: parameter {name!r} has invalid scale {scale!r}")
    if kind == "categorical":
        choices = obj.get("choices")
        if not isinstance(choices, list) or not all(isinstance(c, str) for c in choices):
            raise SpaceError(f"{path}.choices: parameter {name!r} needs a list of strings")
        if "low" in obj or "high" in obj:
            raise SpaceError(f"{path}: categorical parameter {name!r} takes no bounds")
        try:
            return ParamSpec(name=name, kind=kind, choices=tuple(choices))
        except SpaceError as exc:
            raise SpaceError(f"{path}: {exc}") from None
    low, high = obj.get("low"), obj.get("high")
    if not isinstance(low, (int, float)) or isinstance(low, bool):
        raise SpaceError(f"{path}.low: parameter {name!r} needs a numeric low bound")
    if not isinstance(high, (int, float)) or isinstance(high, bool):
        raise SpaceError(f"{path}.high: parameter {name!r} needs a numeric high bound")
    try:
        return ParamSpec(name=name, kind=kind, low=low, high=high, scale=scale)
    except SpaceError as exc:
        raise SpaceError(f"{path}: {exc}") from None


def parse_space(spec_text: str) -> ConfigSpace:
    """Parse the JSON space format: ``{"params": [{...}, ...]}``.

    Errors name the offending parameter and its JSON path.
    """
    try:
        doc = json.loads(spec_text)
    except json.JSONDecodeError as exc:
        raise SpaceError(f"invalid JSON: {exc}") from None
    return space_from_dict(doc)


def space_from_dict(doc: Any) -> ConfigSpace:
    if not isinstance(doc, dict) or "params" not in doc:
        raise SpaceError("$: expected an object with a 'params' list")
    params_obj = doc["params"]
    if not isinstance(params_obj, list):
        raise SpaceError("$.params: expected a list")
    params = [_parse_param(p, f"$.params[{i}]") for i, p in enumerate(params_obj)]
    names = [p.name for p in params]
    for i, n in enumerate(names):
        if names.index(n) != i:
            raise SpaceError(f"$.params[{i}].name: duplicate parameter name {n!r}")
    return ConfigSpace(params=tuple(params))


# ---------------------------------------------------------------------------
# sampling


def sample_uniform(space: ConfigSpace, rng: np.random.Generator) -> Configuration:
    """One configuration, each parameter uniform on its own scale."""
    values = []
    for p in space.params:
        if p.kind == "categorical":
            values.append(int(rng.integers(len(p.choices))))
        else:
            lo, hi = p.scale_bounds
            values.append(p.from_scale(float(rng.uniform(lo, hi))))
    return Configuration(tuple(values))


def sample_uniform_batch(
    space: ConfigSpace, n: int, rng: np.random.Generator
) -> list[Configuration]:
    """n uniform configurations with one vectorized draw per parameter.

    The joint distribution matches n calls to :func:`sample_uniform`, but the
    RNG stream differs; use one or the other consistently per stream.
    """
    cols: list[np.ndarray] = []
    for p in space.params:
        if p.kind == "categorical":
            cols.append(rng.integers(len(p.choices), size=n))
        else:
            lo, hi = p.scale_bounds
            draws = rng.uniform(lo, hi, size=n)
            cols.append(np.array([p.from_scale(float(s)) for s in draws]))
    out = []
    for i in range(n):
        out.append(
            Configuration(
                tuple(
                    int(c[i]) if p.kind in ("categorical", "integer") else float(c[i])
                    for p, c in zip(space.params, cols)
                )
            )
        )
    return out


def latin_hypercube_init(
    space: ConfigSpace, n: int, rng: np.random.Generator
) -> list[Configuration]:
    """Space-filling initial design.

    Numeric parameters get one sample per equal-probability stratum on their
    scale, with an independent stratum permutation per dimension. Categorical
    parameters are covered round-robin over choices, then shuffled.
    """
    if n < 1:
        raise SpaceError("latin hypercube size must be >= 1")
    cols: list[list[float | int]] = []
    for p in space.params:
        if p.kind == "categorical":
            idx = np.array([i % len(p.choices) for i in range(n)], dtype=np.int64)
            rng.shuffle(idx)
            cols.append([int(i) for i in idx])
        else:
            perm = rng.permutation(n)
            u = rng.uniform(size=n)
            cols.append([p.denormalize((int(s) + float(ui)) / n) for s, ui in zip(perm, u)])
    return [
        Configuration(tuple(col[i] for col in cols)) for i in range(n)
    ]


# ---------------------------------------------------------------------------
# encoding


def encode(space: ConfigSpace, config: Configuration) -> np.ndarray:
    """Numeric feature vector in [0, 1]^d: scaled min-max for numeric
    parameters, one-hot blocks for categoricals."""
    space.validate(config)
    out = np.zeros(space.feature_dim)
    pos = 0
    for p, v in zip(space.params, config.values):
        if p.kind == "categorical":
            out[pos + int(v)] = 1.0
            pos += len(p.choices)
        else:
            out[pos] = p.normalize(v)
            pos += 1
    return out


def encode_batch(space: ConfigSpace, configs: list[Configuration]) -> np.ndarray:
    if not configs:
        return np.zeros((0, space.feature_dim))
    return np.stack([encode(space, c) for c in configs])


def decode(space: ConfigSpace, vec: np.ndarray) -> Configuration:
    """Inverse of :func:`encode`; exact for integer/categorical parameters."""
    if vec.shape != (space.feature_dim,):
        raise SpaceError(f"feature vector has shape {vec.shape}, expected ({space.feature_dim},)")
    values: list[float | int] = []
    pos = 0
    for p in space.params:
        if p.kind == "categorical":
            block = vec[pos : pos + len(p.choices)]
            values.append(int(np.argmax(block)))
            pos += len(p.choices)
        else:
            values.append(p.denormalize(float(vec[pos])))
            pos += 1
    return Configuration(tuple(values))
