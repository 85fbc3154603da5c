"""
Checking heralded states against closed forms
=============================================

Every named scenario runs the full pipeline and compares the result with a
symbolic template up to one global constant.
"""

from oam_noon import (
    SCENARIOS,
    ScenarioConfig,
    Projector,
    literal_template,
    exact_template,
    run_named_scenario,
    scenario_three_mode,
    scenario_two_mode,
    unit_override,
    verify_against_closed_form,
)

for name in sorted(SCENARIOS):
    stages, report = run_named_scenario(name)
    print(f"{name:16s} terms={len(stages.psi_f):2d} passed={report.passed} spread={report.ratio_spread:.1e}")

# the symbolic template in readable form
for pattern, coeff in exact_template("mn").describe():
    print(f"  {pattern:8s} {coeff}")

# unequal pair amplitudes between crystals: only the exact template holds
over = unit_override(2)
over["gamma"][(-2, 0, 2, 0)] = 2.0
cfg = ScenarioConfig(Projector.of("D", {-1: 1}), Projector.of("A", {-1: 1}), l_max=2, amplitude_override=over)
_, one_pairing = scenario_two_mode(1, 2, 1, 1, 1, -1, cfg=cfg)
_, exact = scenario_two_mode(1, 2, 1, 1, 1, -1, cfg=cfg, template=exact_template("mn"))
print("one-pairing template:", one_pairing.passed, one_pairing.offending)
print("exact template:      ", exact.passed)

# a real sign flip on g_r makes the r diagonal negative; phases of i reach the all-positive form
stages, _ = scenario_three_mode(1, 2, 3, "gr")
positive = literal_template("three-gr").bind(m=1, n=2, r=3)
print("real weights vs all-positive form:", verify_against_closed_form(stages.psi_f, positive).passed)
stages, _ = scenario_three_mode(1, 2, 3, (1j, 1j, 1, -1j, -1j, 1))
print("complex weights vs all-positive form:", verify_against_closed_form(stages.psi_f, positive).passed)
