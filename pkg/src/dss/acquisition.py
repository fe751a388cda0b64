"""Candidate generation, surrogate ranking, and exploit/explore allocation.

The exploration memory discretizes every dimension into ``resolution`` cells
(on the encoded scale) and remembers the cell of each configuration that was
ever evaluated or scheduled. Candidates landing in a visited cell are
discarded, which steers both random exploration and surrogate exploitation
away from regions considered before. Two distinct configurations falling in
one cell are deliberately collapsed; that is the discarding mechanism, not an
accident.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .space import ConfigSpace, Configuration, encode_batch, sample_uniform, sample_uniform_batch
from .surrogates import FittedSurrogate

DEFAULT_RESOLUTION = 16
DEFAULT_BATCH_SIZE = 512
DEFAULT_N_BATCHES = 10


def default_max_attempts(batch_size: int) -> int:
    return 50 * batch_size


CellKey = tuple[int, ...]


def cell_key(space: ConfigSpace, config: Configuration, resolution: int) -> CellKey:
    """Cell index tuple: per numeric dimension the stratum of the encoded
    value (upper bound clamped into the last cell), per categorical dimension
    the choice index."""
    key = []
    for p, v in zip(space.params, config.values):
        if p.kind == "categorical":
            key.append(int(v))
        else:
            t = p.normalize(v)
            key.append(min(int(t * resolution), resolution - 1))
    return tuple(key)


@dataclass
class ExplorationMemory:
    """Visited-cell set; grows monotonically within a run."""

    resolution: int = DEFAULT_RESOLUTION
    visited: set[CellKey] = field(default_factory=set)

    def add(self, key: CellKey) -> None:
        self.visited.add(key)

    def __contains__(self, key: CellKey) -> bool:
        return key in self.visited

    def __len__(self) -> int:
        return len(self.visited)

    def to_csv(self) -> str:
        lines = [",".join(f"cell_{i}" for i in range(self._width()))]
        for key in sorted(self.visited):
            lines.append(",".join(str(i) for i in key))
        return "\n".join(lines) + "\n"

    def _width(self) -> int:
        return len(next(iter(self.visited))) if self.visited else 0


def generate_candidates(
    space: ConfigSpace,
    memory: ExplorationMemory,
    batch_size: int,
    n_batches: int,
    max_attempts: int,
    rng: np.random.Generator,
) -> list[Configuration]:
    """Uniform candidates in unvisited cells, drawn in mini-batches.

    Returns up to batch_size * n_batches configurations with pairwise
    distinct cells, none of them visited. Gives up (returning what it has,
    possibly nothing) after max_attempts consecutive rejections.
    """
    if batch_size < 1 or n_batches < 1:
        raise ValueError("batch_size and n_batches must be >= 1")
    target = batch_size * n_batches
    out: list[Configuration] = []
    taken: set[CellKey] = set()
    consecutive_rejects = 0
    while len(out) < target and consecutive_rejects < max_attempts:
        chunk = sample_uniform_batch(space, min(batch_size, target - len(out)), rng)
        for config in chunk:
            key = cell_key(space, config, memory.resolution)
            if key in memory.visited or key in taken:
                consecutive_rejects += 1
                if consecutive_rejects >= max_attempts:
                    break
            else:
                taken.add(key)
                out.append(config)
                consecutive_rejects = 0
                if len(out) >= target:
                    break
    return out


@dataclass(frozen=True)
class RankedCandidates:
    """Candidates sorted ascending by predicted score (minimization); ties
    keep generation order."""

    entries: tuple[tuple[Configuration, float], ...]

    def __len__(self) -> int:
        return len(self.entries)

    @staticmethod
    def empty() -> "RankedCandidates":
        return RankedCandidates(entries=())


def rank_candidates(
    model: FittedSurrogate,
    space: ConfigSpace,
    candidates: list[Configuration],
    batch_size: int = DEFAULT_BATCH_SIZE,
) -> RankedCandidates:
    """Score candidates with the surrogate, mini-batch at a time, and sort."""
    if not candidates:
        raise ValueError("no candidates to rank")
    scores = np.empty(len(candidates))
    for start in range(0, len(candidates), batch_size):
        chunk = candidates[start : start + batch_size]
        scores[start : start + len(chunk)] = model.predict(encode_batch(space, chunk))
    order = np.argsort(scores, kind="stable")
    return RankedCandidates(
        entries=tuple((candidates[i], float(scores[i])) for i in order)
    )


@dataclass(frozen=True)
class AllocatedBatch:
    """The next evaluation batch; roles align with configs ('exploit' or
    'explore')."""

    configs: tuple[Configuration, ...]
    roles: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.configs)


def allocate_batch(
    ranked: RankedCandidates,
    space: ConfigSpace,
    memory: ExplorationMemory,
    n_slots: int,
    exploit_fraction: float,
    rng: np.random.Generator,
    max_attempts: int | None = None,
) -> AllocatedBatch:
    """Split the batch between top-ranked candidates and fresh random picks.

    floor(exploit_fraction * n_slots) slots go to the best-ranked candidates
    whose cells are still free; the rest (plus any exploit shortfall) are
    uniform samples in unvisited cells. All chosen cells are inserted into
    the memory. The batch comes back short only when exploration cannot find
    a free cell within max_attempts consecutive rejections.
    """
    if n_slots < 1:
        raise ValueError("n_slots must be >= 1")
    if not 0.0 <= exploit_fraction <= 1.0:
        raise ValueError("exploit_fraction must be in [0, 1]")
    if max_attempts is None:
        max_attempts = default_max_attempts(DEFAULT_BATCH_SIZE)

    n_exploit = int(np.floor(exploit_fraction * n_slots))
    configs: list[Configuration] = []
    roles: list[str] = []
    chosen: set[CellKey] = set()

    for config, _score in ranked.entries:
        if len(configs) >= n_exploit:
            break
        key = cell_key(space, config, memory.resolution)
        if key in memory.visited or key in chosen:
            continue
        chosen.add(key)
        configs.append(config)
        roles.append("exploit")

    consecutive_rejects = 0
    while len(configs) < n_slots and consecutive_rejects < max_attempts:
        config = sample_uniform(space, rng)
        key = cell_key(space, config, memory.resolution)
        if key in memory.visited or key in chosen:
            consecutive_rejects += 1
            continue
        consecutive_rejects = 0
        chosen.add(key)
        configs.append(config)
        roles.append("explore")

    for key in chosen:
        memory.add(key)
    return AllocatedBatch(configs=tuple(configs), roles=tuple(roles))
