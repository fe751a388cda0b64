import math

import numpy as np
import pytest

from dss.objectives import (
    branin,
    by_name,
    grid_oracle,
    interpolated_grid,
    landscape_csv,
    parse_grid_csv,
    styblinski_tang_2d,
)
from dss.space import Configuration, SpaceError


def test_branin_known_global_minimum_value():
    obj = branin()
    assert obj(Configuration((math.pi, 2.275))) == pytest.approx(0.397887, abs=1e-4)


def test_branin_all_three_minima_agree():
    obj = branin()
    for x1, x2 in [(-math.pi, 12.275), (math.pi, 2.275), (9.42478, 2.475)]:
        assert obj(Configuration((x1, x2))) == pytest.approx(0.397887, abs=1e-4)


def test_styblinski_tang_known_minimum():
    obj = styblinski_tang_2d()
    val = obj(Configuration((-2.903534, -2.903534)))
    assert val == pytest.approx(-78.332, abs=1e-3)


def test_objectives_are_pure():
    obj = branin()
    config = Configuration((1.234, 5.678))
    assert obj(config) == obj(config)


def test_out_of_domain_is_rejected():
    with pytest.raises(SpaceError):
        branin()(Configuration((-6.0, 0.0)))


# ---------------------------------------------------------------------------
# grid oracle


def test_grid_oracle_tiny_resolution_is_corner_min():
    obj = branin()
    oracle = grid_oracle(obj, 2)
    corners = [obj(Configuration((x1, x2)))
               for x1 in (-5.0, 10.0) for x2 in (0.0, 15.0)]
    assert oracle.best_value == min(corners)


def test_grid_oracle_refinement_improves_on_nested_grids():
    # 11 -> 101 -> 1001 are nested (each step is a 10x refinement incl. endpoints)
    obj = branin()
    values = [grid_oracle(obj, r).best_value for r in (11, 101, 1001)]
    assert values[1] <= values[0]
    assert values[2] <= values[1]


def test_grid_oracle_2001_finds_branin_minimum():
    oracle = grid_oracle(branin(), 2001)
    assert oracle.best_value == pytest.approx(0.397887, abs=1e-3)


def test_grid_oracle_internal_consistency():
    oracle = grid_oracle(styblinski_tang_2d(), 101)
    assert oracle.best_value == oracle.grid_values.min()


def test_grid_oracle_rejects_high_dimensions():
    from dss.objectives import SyntheticObjective
    from dss.space import ConfigSpace, ParamSpec

    space = ConfigSpace(params=tuple(
        ParamSpec(f"x{i}", "continuous", 0.0, 1.0) for i in range(4)))
    obj = SyntheticObjective("flat", space, lambda *a: a[0] * 0.0)
    with pytest.raises(ValueError, match="3 dimensions"):
        grid_oracle(obj, 3)


# ---------------------------------------------------------------------------
# interpolated grid


GRID_CSV = """x1,x2,value
0.0,0.0,1.0
0.0,1.0,2.0
1.0,0.0,3.0
1.0,1.0,5.0
"""


def test_interpolation_exact_at_grid_nodes():
    obj = interpolated_grid(GRID_CSV)
    assert obj(Configuration((0.0, 0.0))) == 1.0
    assert obj(Configuration((0.0, 1.0))) == 2.0
    assert obj(Configuration((1.0, 0.0))) == 3.0
    assert obj(Configuration((1.0, 1.0))) == 5.0


def test_interpolation_center_is_cell_average():
    obj = interpolated_grid(GRID_CSV)
    assert obj(Configuration((0.5, 0.5))) == pytest.approx((1 + 2 + 3 + 5) / 4)


def test_interpolation_is_lipschitz_within_bilinear_bound():
    rng = np.random.default_rng(0)
    axis = np.linspace(0.0, 1.0, 6)
    values = rng.uniform(-3, 3, size=(6, 6))
    lines = ["x1,x2,value"]
    for i in range(6):
        for j in range(6):
            lines.append(f"{axis[i]},{axis[j]},{values[i, j]}")
    obj = interpolated_grid("\n".join(lines))
    spacing = axis[1] - axis[0]
    max_adjacent = max(np.abs(np.diff(values, axis=0)).max(),
                       np.abs(np.diff(values, axis=1)).max())
    lipschitz = max_adjacent / spacing
    for _ in range(200):
        x1, x2 = rng.uniform(0, 1, 2)
        delta = rng.uniform(-0.01, 0.01, 2)
        x1b = float(np.clip(x1 + delta[0], 0, 1))
        x2b = float(np.clip(x2 + delta[1], 0, 1))
        diff = abs(obj(Configuration((x1, x2))) - obj(Configuration((x1b, x2b))))
        dist = abs(x1 - x1b) + abs(x2 - x2b)
        assert diff <= lipschitz * dist + 1e-9


def test_grid_csv_requires_header_and_full_grid():
    with pytest.raises(ValueError, match="header"):
        parse_grid_csv("a,b,c\n0,0,1\n")
    with pytest.raises(ValueError, match="full Cartesian"):
        parse_grid_csv("x1,x2,value\n0,0,1\n0,1,2\n1,0,3\n")


def test_landscape_csv_roundtrips_through_the_grid_objective():
    obj = branin()
    text = landscape_csv(obj, 21)
    assert len(text.strip().splitlines()) == 1 + 21 * 21
    replay = interpolated_grid(text)
    # node identity: replaying the exported landscape reproduces the surface
    oracle = grid_oracle(obj, 21)
    ax1, ax2 = oracle.axes
    for i in (0, 7, 20):
        for j in (0, 11, 20):
            node = Configuration((ax1[i], ax2[j]))
            assert replay(node) == pytest.approx(obj(node), rel=1e-12)


def test_by_name_lookup():
    assert by_name("branin").name == "branin"
    assert by_name("styblinski").name == "styblinski_tang_2d"
    with pytest.raises(ValueError):
        by_name("rosenbrock")
