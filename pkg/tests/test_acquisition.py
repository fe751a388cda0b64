import numpy as np
import pytest

from dss.acquisition import (
    ExplorationMemory,
    RankedCandidates,
    allocate_batch,
    cell_key,
    generate_candidates,
    rank_candidates,
)
from dss.space import ConfigSpace, Configuration, ParamSpec
from dss.surrogates import FittedSurrogate, SurrogateSpec, register_family, unregister_family
from dss.surrogates import fit as fit_surrogate


def space_of(*params):
    return ConfigSpace(params=tuple(params))


UNIT = space_of(ParamSpec("x", "continuous", 0.0, 1.0))


class _FirstFeature:
    def fit(self, X, y, rng):
        return self

    def predict(self, X):
        return np.asarray(X)[:, 0].astype(float)


class _Constant:
    def fit(self, X, y, rng):
        return self

    def predict(self, X):
        return np.zeros(len(X))


@pytest.fixture(autouse=True)
def stub_families():
    register_family("stub_first", lambda h: _FirstFeature())
    register_family("stub_const", lambda h: _Constant())
    yield
    unregister_family("stub_first")
    unregister_family("stub_const")


def _fitted(family):
    X = np.array([[0.0], [1.0]])
    return fit_surrogate(SurrogateSpec(family, {}), X, np.array([0.0, 1.0]))


# ---------------------------------------------------------------------------
# cell keys


def test_cell_key_floor_of_scaled_value():
    assert cell_key(UNIT, Configuration((0.37,)), 10) == (3,)


def test_cell_key_upper_bound_clamps_into_last_cell():
    assert cell_key(UNIT, Configuration((1.0,)), 10) == (9,)


def test_cell_key_categorical_is_choice_index():
    space = space_of(ParamSpec("c", "categorical", choices=("a", "b", "c")))
    assert cell_key(space, Configuration((2,)), 16) == (2,)


def test_cell_key_integer_enumeration():
    # integer [0, 9] at resolution 16: cell = floor(16 * v / 9), clamped
    space = space_of(ParamSpec("n", "integer", 0, 9))
    expected = {v: min(int(16 * v / 9), 15) for v in range(10)}
    assert expected == {v: cell_key(space, Configuration((v,)), 16)[0] for v in range(10)}
    assert [expected[v] for v in range(10)] == [0, 1, 3, 5, 7, 8, 10, 12, 14, 15]


# ---------------------------------------------------------------------------
# candidate generation


def test_generation_exhausted_space_returns_empty():
    space = space_of(ParamSpec("c", "categorical", choices=("a", "b")))
    memory = ExplorationMemory(resolution=16, visited={(0,), (1,)})
    out = generate_candidates(space, memory, batch_size=4, n_batches=2,
                              max_attempts=50, rng=np.random.default_rng(0))
    assert out == []


def test_generation_returns_distinct_unvisited_cells():
    memory = ExplorationMemory(resolution=16)
    out = generate_candidates(UNIT, memory, batch_size=100, n_batches=1,
                              max_attempts=5000, rng=np.random.default_rng(1))
    # 16 cells exist, so at most 16 candidates, each in its own cell
    keys = [cell_key(UNIT, c, 16) for c in out]
    assert len(set(keys)) == len(keys)
    assert out  # something was found


def test_generation_fills_full_batch_when_cells_abound():
    space = space_of(ParamSpec("x", "continuous", 0.0, 1.0),
                     ParamSpec("y", "continuous", 0.0, 1.0))
    memory = ExplorationMemory(resolution=16)
    out = generate_candidates(space, memory, batch_size=100, n_batches=1,
                              max_attempts=5000, rng=np.random.default_rng(2))
    assert len(out) == 100
    keys = {cell_key(space, c, 16) for c in out}
    assert len(keys) == 100


def test_generation_avoids_visited_integer_cells():
    # cells {0..4} cover the integers 0, 1, 2 (cells 0, 1, 3); the rest stay open
    space = space_of(ParamSpec("n", "integer", 0, 9))
    memory = ExplorationMemory(resolution=16, visited={(i,) for i in range(5)})
    out = generate_candidates(space, memory, batch_size=32, n_batches=1,
                              max_attempts=2000, rng=np.random.default_rng(3))
    values = {c.values[0] for c in out}
    assert values == {3, 4, 5, 6, 7, 8, 9}


def test_generation_deterministic_given_seed():
    space = space_of(ParamSpec("x", "continuous", 0.0, 1.0),
                     ParamSpec("y", "continuous", 0.0, 1.0))
    a = generate_candidates(space, ExplorationMemory(), 64, 2, 1000,
                            np.random.default_rng(5))
    b = generate_candidates(space, ExplorationMemory(), 64, 2, 1000,
                            np.random.default_rng(5))
    assert [c.values for c in a] == [c.values for c in b]


# ---------------------------------------------------------------------------
# ranking


def test_constant_model_preserves_generation_order():
    model = _fitted("stub_const")
    candidates = [Configuration((v,)) for v in (0.9, 0.1, 0.5)]
    ranked = rank_candidates(model, UNIT, candidates)
    assert [e[0].values[0] for e in ranked.entries] == [0.9, 0.1, 0.5]


def test_ranking_sorts_by_predicted_score():
    model = _fitted("stub_first")
    candidates = [Configuration((v,)) for v in (0.9, 0.1, 0.5)]
    ranked = rank_candidates(model, UNIT, candidates)
    assert [e[0].values[0] for e in ranked.entries] == [0.1, 0.5, 0.9]
    assert [e[1] for e in ranked.entries] == [0.1, 0.5, 0.9]


def test_ranking_is_independent_of_batch_size():
    model = _fitted("stub_first")
    rng = np.random.default_rng(6)
    candidates = [Configuration((float(v),)) for v in rng.uniform(size=1000)]
    full = rank_candidates(model, UNIT, candidates, batch_size=1000)
    tiny = rank_candidates(model, UNIT, candidates, batch_size=1)
    assert [e[0].values for e in full.entries] == [e[0].values for e in tiny.entries]


def test_ranking_rejects_empty_candidates():
    with pytest.raises(ValueError):
        rank_candidates(_fitted("stub_const"), UNIT, [])


# ---------------------------------------------------------------------------
# allocation


def _ranked_points(values):
    return RankedCandidates(entries=tuple(
        (Configuration((v,)), float(v)) for v in values))


def test_allocation_splits_exploit_and_explore():
    space = space_of(ParamSpec("x", "continuous", 0.0, 1.0),
                     ParamSpec("y", "continuous", 0.0, 1.0))
    memory = ExplorationMemory(resolution=16)
    ranked = RankedCandidates(entries=tuple(
        (Configuration((v, v)), float(v)) for v in np.linspace(0.01, 0.99, 20)))
    batch = allocate_batch(ranked, space, memory, n_slots=8, exploit_fraction=0.75,
                           rng=np.random.default_rng(0))
    assert len(batch) == 8
    assert batch.roles.count("exploit") == 6
    assert batch.roles.count("explore") == 2
    assert batch.configs[0].values == ranked.entries[0][0].values


def test_zero_exploit_fraction_means_pure_exploration():
    memory = ExplorationMemory(resolution=16)
    batch = allocate_batch(_ranked_points([0.1, 0.2]), UNIT, memory, n_slots=8,
                           exploit_fraction=0.0, rng=np.random.default_rng(1))
    assert set(batch.roles) == {"explore"}


def test_empty_ranking_falls_back_to_exploration():
    space = space_of(ParamSpec("x", "continuous", 0.0, 1.0),
                     ParamSpec("y", "continuous", 0.0, 1.0))
    memory = ExplorationMemory(resolution=16)
    batch = allocate_batch(RankedCandidates.empty(), space, memory, n_slots=8,
                           exploit_fraction=0.75, rng=np.random.default_rng(2))
    assert len(batch) == 8
    assert set(batch.roles) == {"explore"}


def test_allocation_inserts_chosen_cells_into_memory():
    space = space_of(ParamSpec("x", "continuous", 0.0, 1.0),
                     ParamSpec("y", "continuous", 0.0, 1.0))
    memory = ExplorationMemory(resolution=16)
    batch = allocate_batch(_ranked_points([]), space, memory, n_slots=4,
                           exploit_fraction=0.0, rng=np.random.default_rng(3))
    assert len(memory) == 4
    for config in batch.configs:
        assert cell_key(space, config, 16) in memory


def test_allocation_never_reuses_visited_cells():
    memory = ExplorationMemory(resolution=16)
    seen = set()
    rng = np.random.default_rng(4)
    for _ in range(4):  # 16 cells total; four batches of four exhaust them
        batch = allocate_batch(RankedCandidates.empty(), UNIT, memory, n_slots=4,
                               exploit_fraction=0.0, rng=rng, max_attempts=5000)
        for config in batch.configs:
            key = cell_key(UNIT, config, 16)
            assert key not in seen
            seen.add(key)
    assert len(seen) == 16


def test_allocation_returns_short_batch_near_exhaustion():
    space = space_of(ParamSpec("c", "categorical", choices=("a", "b")))
    memory = ExplorationMemory(resolution=16, visited={(0,)})
    batch = allocate_batch(RankedCandidates.empty(), space, memory, n_slots=4,
                           exploit_fraction=0.0, rng=np.random.default_rng(5),
                           max_attempts=200)
    assert len(batch) == 1  # only cell (1,) was free


def test_allocation_skips_exploit_candidates_in_visited_cells():
    memory = ExplorationMemory(resolution=16)
    memory.add((0,))  # cell of 0.01
    ranked = _ranked_points([0.01, 0.5])
    batch = allocate_batch(ranked, UNIT, memory, n_slots=1, exploit_fraction=1.0,
                           rng=np.random.default_rng(6))
    assert batch.configs[0].values[0] == 0.5


def test_allocation_deterministic_given_seed():
    space = space_of(ParamSpec("x", "continuous", 0.0, 1.0),
                     ParamSpec("y", "continuous", 0.0, 1.0))
    ranked = RankedCandidates(entries=tuple(
        (Configuration((v, 1.0 - v)), float(v)) for v in np.linspace(0.01, 0.99, 12)))
    a = allocate_batch(ranked, space, ExplorationMemory(), 8, 0.5,
                       np.random.default_rng(7))
    b = allocate_batch(ranked, space, ExplorationMemory(), 8, 0.5,
                       np.random.default_rng(7))
    assert a == b


def test_memory_csv_lists_cells():
    memory = ExplorationMemory(resolution=16, visited={(2, 3), (0, 1)})
    text = memory.to_csv()
    assert text.splitlines() == ["cell_0,cell_1", "0,1", "2,3"]
