import pytest
import sympy as sp

from oam_noon import (
    SCENARIOS,
    DegenerateProjectorError,
    FockState,
    Projector,
    PumpSpec,
    ScenarioConfig,
    build_tables,
    literal_template,
    exact_template,
    run_named_scenario,
    run_pipeline,
    scenario_single_mode,
    scenario_three_mode,
    scenario_two_mode,
    three_mode_template,
    two_mode_template,
    unit_override,
    verify_against_closed_form,
)
from oam_noon.fock import monomial_coefficients

EXPECTED_TERMS = {
    "single-mode": 2,
    "two-mode-ones": 6,
    "two-mode-noon": 4,
    "two-mode-single": 2,
    "three-mode-ones": 12,
    "three-mode-gr": 8,
    "three-mode-gn": 8,
    "three-mode-gm": 8,
}


@pytest.fixture
def asymmetric_config():
    """Unit tables except gamma[-2, 2] = 2, so gamma_m C_n != gamma_n C_m."""
    over = unit_override(2)
    over["gamma"][(-2, 0, 2, 0)] = 2.0
    return ScenarioConfig(
        proj_D=Projector.of("D", {-1: 1}), proj_A=Projector.of("A", {-1: 1}), l_max=2, amplitude_override=over
    )


@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_named_scenarios_pass(name):
    stages, report = run_named_scenario(name)
    assert report.passed, report.offending
    assert report.ratio_spread < 1e-10
    assert report.max_extra < 1e-12
    assert len(stages.psi_f) == EXPECTED_TERMS[name]
    assert 0 < stages.success_probability <= 1


def test_unknown_scenario():
    with pytest.raises(KeyError):
        run_named_scenario("four-mode")


def test_stage_term_counts_are_consistent():
    stages, _ = run_named_scenario("two-mode-noon")
    counts = stages.term_counts()
    assert counts["psi0"] == 1
    assert counts["psi_filtered"] <= counts["psi3"]
    assert stages.psi2.norm() == pytest.approx(1.0)
    assert stages.psi3.norm() == pytest.approx(1.0)


def test_single_mode_shape():
    stages, _ = scenario_single_mode(2)
    coeffs = monomial_coefficients(stages.psi_f)
    keys = sorted(coeffs)
    assert [tuple((m.path, m.l, n) for m, n in k) for k in keys] == [(("B", 2, 2),), (("C", 2, 2),)]
    a, b = (coeffs[k] for k in keys)
    assert a == pytest.approx(b, abs=1e-15)


def test_two_mode_cross_weight_is_two():
    stages, _ = run_named_scenario("two-mode-ones")
    coeffs = {tuple((m.path, m.l, n) for m, n in k): v for k, v in monomial_coefficients(stages.psi_f).items()}
    diag = coeffs[(("B", 1, 2),)]
    assert coeffs[(("B", 1, 1), ("B", 2, 1))] / diag == pytest.approx(2.0, abs=1e-10)
    assert coeffs[(("C", 1, 1), ("C", 2, 1))] / diag == pytest.approx(2.0, abs=1e-10)


def test_noon_signs_and_no_cross_terms():
    stages, _ = run_named_scenario("two-mode-noon")
    coeffs = {tuple((m.path, m.l, n) for m, n in k): v for k, v in monomial_coefficients(stages.psi_f).items()}
    ref = coeffs[(("B", 1, 2),)]
    signs = [coeffs[k] / ref for k in [(("B", 1, 2),), (("C", 1, 2),), (("B", 2, 2),), (("C", 2, 2),)]]
    assert signs == pytest.approx([1, 1, -1, -1], abs=1e-12)


def test_repeated_modes_rejected():
    with pytest.raises(DegenerateProjectorError):
        scenario_two_mode(1, 1)
    with pytest.raises(DegenerateProjectorError):
        scenario_three_mode(1, 2, 1)


def test_config_validation():
    with pytest.raises(ValueError):
        ScenarioConfig(proj_D=Projector.of("D", {-4: 1}), proj_A=Projector.of("A", {0: 1}), l_max=3)
    with pytest.raises(ValueError):
        ScenarioConfig(proj_D=Projector.of("A", {0: 1}), proj_A=Projector.of("A", {0: 1}))
    with pytest.raises(ValueError):
        ScenarioConfig(
            proj_D=Projector.of("D", {0: 1}), proj_A=Projector.of("A", {0: 1}), l_max=1,
            amplitude_override={"C": {(-2, 0, 2, 0): 1.0}},
        )
    with pytest.raises(ValueError):
        ScenarioConfig(proj_D=Projector.of("D", {0: 1}), proj_A=Projector.of("A", {0: 1}), amplitude_override={"X": {}})


def test_physical_tables_match_one_pairing_form():
    """With one Gaussian pump for both crystals the tables are symmetric, so the closed form holds."""
    cfg = ScenarioConfig(proj_D=Projector.of("D", {-1: 1}), proj_A=Projector.of("A", {-1: 1}), l_max=2)
    assert not cfg.overridden
    stages, report = scenario_two_mode(1, 2, 1, 1, 1, -1, cfg=cfg)
    assert report.passed and report.tol == pytest.approx(1e-6)
    assert report.max_deviation < 1e-12


def test_exact_form_with_unequal_waists():
    cfg = ScenarioConfig(
        proj_D=Projector.of("D", {-1: 1}), proj_A=Projector.of("A", {-1: 1}), l_max=2,
        pump2=PumpSpec.gaussian(0.8), signal_waist=1.3, idler_waist=1.3,
    )
    c_ab, gamma_ac = build_tables(cfg)
    assert abs(c_ab.get(-1, 1) - gamma_ac.get(-1, 1)) > 1e-3
    _, report = scenario_two_mode(1, 2, 1, 1, 1, -1, cfg=cfg, template=exact_template("mn"))
    assert report.passed


def test_one_pairing_form_fails_for_asymmetric_tables(asymmetric_config):
    _, report = scenario_two_mode(1, 2, 1, 1, 1, -1, cfg=asymmetric_config)
    assert not report.passed
    assert set(report.offending) == {"|B+1,B+2>", "|C+1,C+2>"}
    _, exact = scenario_two_mode(1, 2, 1, 1, 1, -1, cfg=asymmetric_config, template=exact_template("mn"))
    assert exact.passed


def test_asymmetric_tables_produce_single_occupancy_terms(asymmetric_config):
    stages, report = scenario_two_mode(1, 2, cfg=asymmetric_config)
    assert not report.passed
    assert any("B" in p and "C" in p for p, _ in report.extra_terms)
    _, exact = scenario_two_mode(1, 2, cfg=asymmetric_config, template=exact_template("mn"))
    assert exact.passed and len(stages.psi_f) == 8


def test_cross_coefficient_identity():
    """exact - one-pairing = (gamma_m C_n - gamma_n C_m)(f_m g_n - f_n g_m) on the cross term."""
    gm, cm, fm, g_m = sp.symbols("gamma_m C_m f_m g_m")
    gn, cn, fn, g_n = sp.symbols("gamma_n C_n f_n g_n")
    key = (("B", "m"), ("B", "n"))
    exact = dict(exact_template("mn").terms)[key]
    one = {tuple(sorted(p)): e for p, e in two_mode_template().terms}[key]
    assert sp.expand(exact - one - (gm * cn - gn * cm) * (fm * g_n - fn * g_m)) == 0
    single = dict(exact_template("mn").terms)[(("B", "m"), ("C", "n"))]
    assert sp.simplify(single.subs({gn: gm * cn / cm})) == 0


@pytest.mark.parametrize("names,template", [("mn", two_mode_template), ("mnr", three_mode_template)])
def test_exact_template_reduces_for_symmetric_tables(names, template):
    subs = {}
    for x in names:
        subs[sp.Symbol(f"gamma_{x}")] = sp.Symbol("k") * sp.Symbol(f"C_{x}")
    exact = {p: sp.expand(e.subs(subs)) for p, e in exact_template(names).terms}
    exact = {p: e for p, e in exact.items() if e != 0}
    one = {tuple(sorted(p)): sp.expand(e.subs(subs)) for p, e in template().terms}
    assert exact.keys() == one.keys()
    for p in exact:
        assert sp.expand(exact[p] - one[p]) == 0


def test_swapping_projectors_leaves_state_unchanged(unit_config):
    a = run_pipeline(unit_config({-1: 1, -2: 0.5j}, {-1: 0.3, -2: -1}))
    b = run_pipeline(unit_config({-1: 0.3, -2: -1}, {-1: 1, -2: 0.5j}))
    assert a.psi_f.allclose(b.psi_f, atol=1e-14)


@pytest.mark.parametrize("preset,form", [("gr", "three-gr"), ("gn", "three-gn"), ("gm", "three-gm")])
def test_positive_forms_need_complex_weights(preset, form):
    """The real sign-flip presets give a negative flipped diagonal, which the all-positive forms lack."""
    stages, report = scenario_three_mode(1, 2, 3, preset)
    positive = literal_template(form).bind(m=1, n=2, r=3)
    assert report.passed
    assert not verify_against_closed_form(stages.psi_f, positive).passed


@pytest.mark.parametrize(
    "form,weights",
    [
        ("three-gr", (1j, 1j, 1, -1j, -1j, 1)),
        ("three-gm", (1, 1j, 1j, 1, -1j, -1j)),
        ("three-gn", (1j, 1, 1j, -1j, 1, -1j)),
    ],
)
def test_positive_forms_reachable(form, weights):
    stages, _ = scenario_three_mode(1, 2, 3, weights)
    report = verify_against_closed_form(stages.psi_f, literal_template(form).bind(m=1, n=2, r=3))
    assert report.passed, report.offending


@pytest.mark.parametrize("form", ["two-ones", "two-noon", "three-ones"])
def test_literal_forms_agree(form):
    name = {"two-ones": "two-mode-ones", "two-noon": "two-mode-noon", "three-ones": "three-mode-ones"}[form]
    stages, _ = run_named_scenario(name)
    report = verify_against_closed_form(stages.psi_f, literal_template(form).bind(m=1, n=2, r=3))
    assert report.passed


def test_verification_report_flags_extra_terms():
    stages, _ = run_named_scenario("two-mode-ones")
    extra = stages.psi_f + FockState({(("B", 3, 1), ("C", 3, 1)): 0.1})
    report = verify_against_closed_form(extra, literal_template("two-ones").bind(m=1, n=2))
    assert not report.passed
    assert report.offending == ("|B+3,C+3>",)
    assert report.to_dict()["extra_terms"][0]["pattern"] == "|B+3,C+3>"


def test_template_collision_detected():
    with pytest.raises(ValueError):
        literal_template("two-ones").bind(m=1, n=1).bound_terms()
    with pytest.raises(KeyError):
        literal_template("five-modes")
