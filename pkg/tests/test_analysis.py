from math import sqrt

import numpy as np
import pytest

from oam_noon import (
    ContractError,
    DegenerateStateError,
    FockState,
    PumpSpec,
    coincidence_table,
    flatness_scan,
    generalized_noon,
    mes_flatness,
    noon_fidelity,
    normalize,
    run_named_scenario,
    schmidt_decomposition,
    spiral_spectrum,
)

import oracles

DIAGONAL = [(-1, -1), (0, 0), (1, 1)]


def test_spectrum_normalized_and_supported(qutrit_pump):
    spec = spiral_spectrum(coincidence_table(qutrit_pump, l_max=3))
    assert spec.probabilities.sum() == pytest.approx(1.0, abs=1e-14)
    assert {a + b for a, b in spec.support()} == {-2, 0, 2}
    assert spec.prob(5, 0) == 0.0


def test_spectrum_sums_over_radial_indices():
    table = coincidence_table(PumpSpec.gaussian(), l_max=1, p_max=2)
    spec = spiral_spectrum(table)
    raw = sum(abs(v) ** 2 for (l_s, _, l_i, _), v in table.items() if (l_s, l_i) == (1, -1))
    total = sum(abs(v) ** 2 for _, v in table.items())
    assert spec.prob(1, -1) == pytest.approx(raw / total)


def test_spectrum_csv_covers_grid():
    spec = spiral_spectrum(coincidence_table(PumpSpec.gaussian(), l_max=2))
    lines = spec.to_csv().splitlines()
    assert lines[0] == "l_s,l_i,probability"
    assert len(lines) == 1 + 25


def test_qutrit_flatness_at_equal_waists(qutrit_pump):
    """At equal waists the ratio of diagonal probabilities is exactly 80/81."""
    spec = spiral_spectrum(coincidence_table(qutrit_pump, l_max=3))
    assert mes_flatness(spec, DIAGONAL) == pytest.approx(80 / 81, rel=1e-10)


def test_qutrit_flatness_oracle(qutrit_pump):
    # |C(1,1)|^2/|C(0,0)|^2 = 2.5 B(2;1,1)^2 / B(0;0,0)^2 from adaptive quadrature
    ratio = 2.5 * (oracles.overlap_adaptive((2, 0, 1.0), (1, 0, 1.0), (1, 0, 1.0))
                   / oracles.overlap_adaptive((0, 0, 1.0), (0, 0, 1.0), (0, 0, 1.0))) ** 2
    spec = spiral_spectrum(coincidence_table(qutrit_pump, l_max=3))
    assert spec.prob(1, 1) / spec.prob(0, 0) == pytest.approx(ratio, rel=1e-10)


def test_flatness_scan_finds_flat_ratio(qutrit_pump):
    ratios = np.round(np.arange(0.8, 1.21, 0.01), 2)
    best, flat, trace = flatness_scan(qutrit_pump, DIAGONAL, ratios)
    assert flat >= 0.98
    assert 0.95 <= best <= 1.05
    assert len(trace) == len(ratios)
    assert flat == max(f for _, f in trace)


def test_flatness_zero_when_cell_missing():
    spec = spiral_spectrum(coincidence_table(PumpSpec.gaussian(), l_max=1))
    assert mes_flatness(spec, [(1, 1), (0, 0)]) == 0.0
    with pytest.raises(ValueError):
        mes_flatness(spec, [])


def test_spectrum_empty_table_rejected():
    table = coincidence_table(PumpSpec.gaussian(), l_max=0)
    with pytest.raises(DegenerateStateError):
        spiral_spectrum(table.with_overrides({(0, 0, 0, 0): 0}))


def test_schmidt_single_mode_noon():
    stages, _ = run_named_scenario("single-mode")
    rep = schmidt_decomposition(stages.psi_f)
    sv, k = oracles.schmidt_values(oracles.SINGLE_NOON_MATRIX)
    assert rep.schmidt_rank == 2
    assert rep.schmidt_number == pytest.approx(k, abs=1e-10)
    assert rep.schmidt_number == pytest.approx(2.0, abs=1e-10)
    assert rep.singular_values[:2] == pytest.approx(list(sv), abs=1e-12)


def test_schmidt_sign_flip_state():
    stages, _ = run_named_scenario("two-mode-noon")
    rep = schmidt_decomposition(stages.psi_f)
    sv, k = oracles.schmidt_values(oracles.SIGN_FLIP_MATRIX)
    assert rep.schmidt_rank == 2 == int(np.sum(sv > 1e-10))
    assert rep.term_dimension == 4
    assert rep.schmidt_number == pytest.approx(k, abs=1e-10)


def test_schmidt_product_state():
    state = FockState({(("B", 1, 1), ("C", 2, 1)): 1.0, (("B", 1, 1), ("C", 3, 1)): 1.0})
    rep = schmidt_decomposition(state)
    assert rep.schmidt_rank == 1
    assert rep.schmidt_number == pytest.approx(1.0)
    assert rep.term_dimension == 2


def test_schmidt_contract():
    with pytest.raises(ContractError):
        schmidt_decomposition(FockState({(("A", 0, 1), ("B", 0, 1)): 1.0}))
    with pytest.raises(DegenerateStateError):
        schmidt_decomposition(FockState())
    with pytest.raises(ValueError):
        schmidt_decomposition(FockState({(("B", 0, 1),): 1.0}), (("B",), ("B",)))


def test_fidelity_oracles():
    ones, _ = run_named_scenario("two-mode-ones")
    psi = normalize(ones.psi_f)[0]
    # Fock vector (sqrt2, sqrt2, sqrt2, sqrt2, 2, 2)/4 against (mm - nn) and (mm) N00N
    assert noon_fidelity(psi, generalized_noon({1: 1, 2: -1})) == pytest.approx(0.0, abs=1e-15)
    assert noon_fidelity(psi, generalized_noon({1: 1})) == pytest.approx(0.25, abs=1e-12)
    noon, _ = run_named_scenario("two-mode-noon")
    assert noon_fidelity(normalize(noon.psi_f)[0], generalized_noon({1: 1, 2: -1})) == pytest.approx(1.0, abs=1e-12)


def test_fidelity_requires_normalized():
    with pytest.raises(ContractError):
        noon_fidelity(2 * generalized_noon({1: 1}), generalized_noon({1: 1}))


def test_generalized_noon_shape():
    state = generalized_noon({1: 1, 2: 1j}, n_photons=3)
    assert state.norm() == pytest.approx(1.0)
    assert len(state) == 4
    assert state[(("B", 1, 3),)] == pytest.approx(0.5)
    assert state[(("C", 2, 3),)] == pytest.approx(0.5j)
    assert sqrt(sum(abs(v) ** 2 for _, v in state.items())) == pytest.approx(1.0)
