import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oam_noon import (
    ScenarioConfig,
    TARGETS,
    CompiledObjective,
    SearchSpace,
    generalized_noon,
    named_target,
    objective,
    optimize,
)
from oam_noon.protocol import default_config
from oam_noon.optics import Projector


TWO_MODE_CFG = default_config(2, Projector.of("D", {-1: 1, -2: 1}), Projector.of("A", {-1: 1, -2: 1}))
SIGN_FLIP_FN = CompiledObjective(TWO_MODE_CFG, named_target("two-mode-noon"), SearchSpace.from_config(TWO_MODE_CFG))


@pytest.fixture
def two_mode_cfg():
    return TWO_MODE_CFG


@pytest.fixture
def three_mode_cfg(unit_config):
    return unit_config({-1: 1, -2: 1, -3: 1}, {-1: 1, -2: 1, -3: 1}, l_max=3)


def test_objective_known_points(two_mode_cfg):
    target = named_target("two-mode-noon")
    assert objective(([1, 1], [1, -1]), two_mode_cfg, target) == pytest.approx(1.0, abs=1e-12)
    assert objective(([1, 1], [1, 1]), two_mode_cfg, target) == pytest.approx(0.0, abs=1e-12)
    assert objective(([0, 0], [1, 1]), two_mode_cfg, target) == 0.0


def test_named_target_matches_generalized_noon():
    # equal up to the global sign carried by the templates
    assert (-named_target("two-mode-noon")).allclose(generalized_noon({1: 1, 2: -1}), atol=1e-14)
    assert (-named_target("single-mode")).allclose(generalized_noon({1: 1}), atol=1e-14)
    with pytest.raises(KeyError):
        named_target("nope")


@pytest.mark.parametrize("name", sorted(TARGETS))
def test_targets_normalized(name):
    assert named_target(name).norm() == pytest.approx(1.0, abs=1e-14)


def test_space_encode_decode():
    space = SearchSpace((-1, -2, -3), (-1, -2))
    assert space.dimension == 5 + 3
    w_d = np.array([0.5, 0.25j, -0.5])
    w_a = np.array([1.0, -1.0])
    x = space.encode(w_d, w_a)
    d, a = space.decode(x)
    assert d == pytest.approx(w_d / 0.5)
    assert a == pytest.approx(w_a)
    with pytest.raises(ValueError):
        SearchSpace((1, 1), (2,))
    with pytest.raises(ValueError):
        SearchSpace((), (2,))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=4, max_size=4), st.lists(st.floats(0, 6.28), min_size=2, max_size=2),
       st.floats(0, 6.28))
def test_compiled_matches_reference(mags, phases, shift):
    """The precompiled objective agrees with the pipeline, and is blind to global phases."""
    target = named_target("two-mode-noon")
    space = SearchSpace.from_config(TWO_MODE_CFG)
    x = np.array(mags[:2] + [phases[0]] + mags[2:] + [phases[1]])
    d, a = space.decode(x)
    ref = objective((d, a), TWO_MODE_CFG, target)
    assert SIGN_FLIP_FN(x) == pytest.approx(ref, abs=1e-12)
    rotated = objective((d * np.exp(1j * shift), a * np.exp(-2j * shift)), TWO_MODE_CFG, target)
    assert rotated == pytest.approx(ref, abs=1e-12)


def test_optimizer_deterministic(two_mode_cfg):
    target = named_target("two-mode-noon")
    a = optimize(two_mode_cfg, target, budget=300, seed=7)
    b = optimize(two_mode_cfg, target, budget=300, seed=7)
    assert a.to_dict() == b.to_dict()


def test_optimizer_trace_monotone(two_mode_cfg):
    res = optimize(two_mode_cfg, named_target("two-mode-noon"), budget=500, seed=1)
    values = [v for _, v in res.trace]
    evals = [e for e, _ in res.trace]
    assert values == sorted(values)
    assert evals == sorted(evals)
    assert res.evaluations <= 500
    assert res.trace_csv().splitlines()[0] == "evaluation,best_objective"


def test_optimizer_budget_one_at_optimum(two_mode_cfg):
    space = SearchSpace.from_config(two_mode_cfg)
    x0 = space.encode([1, 1], [1, -1])
    res = optimize(two_mode_cfg, named_target("two-mode-noon"), space, budget=1, x0=x0)
    assert res.evaluations == 1
    assert res.best_objective == pytest.approx(1.0, abs=1e-12)
    w = dict(res.best_weights["A"])
    assert w[-2] / w[-1] == pytest.approx(-1.0)


def test_optimizer_rejects_zero_budget(two_mode_cfg):
    with pytest.raises(ValueError):
        optimize(two_mode_cfg, named_target("two-mode-noon"), budget=0)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_optimizer_recovers_sign_flip(two_mode_cfg, seed):
    res = optimize(two_mode_cfg, named_target("two-mode-noon"), budget=2000, seed=seed)
    assert res.best_objective >= 0.999
    assert all(0 <= v < 2 * np.pi for v in res.best_x[[2, 5]])


@pytest.mark.parametrize("name", ["three-mode-gr", "three-mode-gn-positive"])
def test_optimizer_three_mode(three_mode_cfg, name):
    # the -positive variant needs complex weights to make every diagonal positive
    res = optimize(three_mode_cfg, named_target(name), budget=5000, seed=0)
    assert res.best_objective >= 0.99


def test_optimizer_single_mode_reachable():
    cfg = default_config(1, Projector.of("D", {-1: 1, 0: 1}), Projector.of("A", {-1: 1, 0: 1}))
    res = optimize(cfg, named_target("single-mode"), budget=1500, seed=3)
    assert res.best_objective >= 0.999
    w = dict(res.best_weights["D"])
    assert abs(w[-1]) > 0.99


def test_success_weight_penalizes_low_rate(two_mode_cfg):
    target = named_target("two-mode-noon")
    space = SearchSpace.from_config(two_mode_cfg)
    x = space.encode([1, 1], [1, -1])
    plain = CompiledObjective(two_mode_cfg, target, space)(x)
    weighted = CompiledObjective(two_mode_cfg, target, space, success_weight=1.0)(x)
    assert weighted != pytest.approx(plain)


def test_pump_block_search():
    # physical tables: the pump block mixes l = 0 and l = 2 pump components
    cfg = ScenarioConfig(proj_D=Projector.of("D", {-1: 1, -2: 1}), proj_A=Projector.of("A", {-1: 1, -2: 1}), l_max=2)
    space = SearchSpace.from_config(cfg, pump_modes=(0, 2))
    assert space.dimension == 3 + 3 + 3
    res = optimize(cfg, named_target("two-mode-noon"), space, budget=1500, seed=0)
    assert res.best_objective >= 0.999
    assert [l for l, _ in res.best_weights["pump"]] == [0, 2]
