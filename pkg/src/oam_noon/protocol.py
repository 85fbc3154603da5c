"""Staged device pipeline and closed-form scenario checks.

Stages: vacuum -> pair on (A, B) -> pair on (A, C) -> beam splitters A:D and
B:C -> keep A/D coincidences -> herald on projectors over D and A.  The
residual two-photon state lives on paths B and C.

Closed forms are held as :class:`ClosedFormTemplate` objects whose
coefficients are sympy expressions in the symbols ``gamma_x``, ``C_x``,
``f_x``, ``g_x`` (``x`` one of the mode names ``m``, ``n``, ``r``).  Here
``C_x`` stands for the table entry ``C[-x, x]``, ``gamma_x`` for the second
crystal's ``gamma[-x, x]``, and ``f_x``/``g_x`` for the projector weights at
OAM ``-x`` on D and A.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import sympy as sp

from ._fmt import complex_pair
from .errors import DegenerateProjectorError
from .fock import FockState, ModeLabel, canonical_config, config_label, monomial_coefficients, normalize, vacuum
from .lg_engine import CoincidenceTable, PumpSpec, QuadratureSpec, coincidence_table
from .optics import Projector, apply_beamsplitter, apply_spdc, coincidence_filter, herald

__all__ = [
    "ScenarioConfig",
    "StageStates",
    "ClosedFormTemplate",
    "VerificationReport",
    "unit_override",
    "build_tables",
    "prepare",
    "run_pipeline",
    "verify_against_closed_form",
    "single_mode_template",
    "two_mode_template",
    "three_mode_template",
    "exact_template",
    "literal_template",
    "scenario_single_mode",
    "scenario_two_mode",
    "scenario_three_mode",
    "run_named_scenario",
    "SCENARIOS",
    "TWO_MODE_PRESETS",
    "THREE_MODE_PRESETS",
]

OVERRIDE_TOL = 1e-10
PHYSICAL_TOL = 1e-6


def unit_override(l_max: int) -> dict[str, dict]:
    """Override map setting every ``C[-l, l]`` and ``gamma[-l, l]`` to one."""
    ones = {(-l, 0, l, 0): 1.0 for l in range(-l_max, l_max + 1)}
    return {"C": dict(ones), "gamma": dict(ones)}


@dataclass(frozen=True)
class ScenarioConfig:
    """Full device description.

    ``pump1`` drives the (A, B) crystal and yields the ``C`` table,
    ``pump2`` drives the (A, C) crystal and yields ``gamma``.
    ``amplitude_override`` maps ``"C"``/``"gamma"`` to
    ``{(l_s, p_s, l_i, p_i): value}`` replacements applied after the overlap
    integrals.
    """

    proj_D: Projector
    proj_A: Projector
    pump1: PumpSpec = field(default_factory=PumpSpec.gaussian)
    pump2: PumpSpec = field(default_factory=PumpSpec.gaussian)
    signal_waist: float | None = None
    idler_waist: float | None = None
    l_max: int = 3
    p_max: int = 0
    quad: QuadratureSpec = field(default_factory=QuadratureSpec)
    amplitude_override: Mapping[str, Mapping] | None = None
    tolerance: float | None = None

    def __post_init__(self):
        if self.proj_D.path != "D" or self.proj_A.path != "A":
            raise ValueError("proj_D must act on path D and proj_A on path A")
        for proj in (self.proj_D, self.proj_A):
            bad = [l for l in proj.ls if abs(l) > self.l_max]
            if bad:
                raise ValueError(f"projector OAM {bad} outside truncation |l| <= {self.l_max}")
        for pump in (self.pump1, self.pump2):
            if pump.max_abs_l > self.l_max:
                raise ValueError(f"pump |l|={pump.max_abs_l} outside truncation l_max={self.l_max}")
        if self.amplitude_override:
            unknown = set(self.amplitude_override) - {"C", "gamma"}
            if unknown:
                raise ValueError(f"unknown override tables {sorted(unknown)}")
            for name, entries in self.amplitude_override.items():
                for key in entries:
                    l_s, p_s, l_i, p_i = key
                    if max(abs(l_s), abs(l_i)) > self.l_max or not (0 <= p_s <= self.p_max and 0 <= p_i <= self.p_max):
                        raise ValueError(f"override {name}{tuple(key)} outside truncated grid")

    @property
    def overridden(self) -> bool:
        return bool(self.amplitude_override)

    @property
    def verify_tol(self) -> float:
        if self.tolerance is not None:
            return self.tolerance
        return OVERRIDE_TOL if self.overridden else PHYSICAL_TOL

    def with_projectors(self, proj_D: Projector, proj_A: Projector) -> ScenarioConfig:
        return replace(self, proj_D=proj_D, proj_A=proj_A)


def build_tables(cfg: ScenarioConfig) -> tuple[CoincidenceTable, CoincidenceTable]:
    """``(C_AB, gamma_AC)`` with overrides applied."""
    tables = []
    for pump, name in ((cfg.pump1, "C"), (cfg.pump2, "gamma")):
        w_s = cfg.signal_waist or pump.waist
        w_i = cfg.idler_waist or pump.waist
        t = coincidence_table(pump, cfg.l_max, cfg.p_max, (w_s, w_i), cfg.quad)
        if cfg.amplitude_override and name in cfg.amplitude_override:
            t = t.with_overrides(cfg.amplitude_override[name])
        tables.append(t)
    return tables[0], tables[1]


@dataclass(frozen=True)
class StageStates:
    psi0: FockState
    psi1: FockState
    psi2: FockState
    psi3: FockState
    psi_filtered: FockState
    psi_f: FockState
    success_amplitude: float

    @property
    def success_probability(self) -> float:
        return self.success_amplitude**2

    @property
    def psi_f_normalized(self) -> FockState:
        return normalize(self.psi_f)[0]

    def term_counts(self) -> dict[str, int]:
        return {
            "psi0": len(self.psi0),
            "psi1": len(self.psi1),
            "psi2": len(self.psi2),
            "psi3": len(self.psi3),
            "psi_filtered": len(self.psi_filtered),
            "psi_f": len(self.psi_f),
        }


def prepare(cfg: ScenarioConfig, tables=None) -> tuple[FockState, ...]:
    """Projector-independent stages ``(psi0, psi1, psi2, psi3, psi_filtered)``.

    ``psi2`` is normalised (one pair from each crystal is post-selected), so
    downstream norms are probabilities.
    """
    c_ab, gamma_ac = tables if tables is not None else build_tables(cfg)
    psi0 = vacuum()
    psi1 = apply_spdc(psi0, c_ab, "A", "B")
    psi2, _ = normalize(apply_spdc(psi1, gamma_ac, "A", "C"))
    psi3 = apply_beamsplitter(apply_beamsplitter(psi2, "A", "D"), "B", "C")
    psi_filtered = coincidence_filter(psi3, {"A": 1, "D": 1})
    return psi0, psi1, psi2, psi3, psi_filtered


def run_pipeline(cfg: ScenarioConfig, tables=None) -> StageStates:
    stages = prepare(cfg, tables)
    h = herald(stages[-1], cfg.proj_D, cfg.proj_A)
    return StageStates(*stages, psi_f=h.state, success_amplitude=h.success_amplitude)


# ---------------------------------------------------------------------------
# closed-form templates


Pattern = tuple  # photons as (path, mode-name) pairs, e.g. (("B", "m"), ("B", "m"))


def _syms(x: str):
    return sp.symbols(f"gamma_{x} C_{x} f_{x} g_{x}")


@dataclass(frozen=True)
class ClosedFormTemplate:
    """Expected ``psi_f`` in the monomial view, symbolic until bound.

    ``terms`` pairs a photon pattern with a sympy coefficient; ``binding``
    maps mode names to OAM integers and coefficient symbol names to numbers.
    """

    name: str
    terms: tuple[tuple[Pattern, sp.Expr], ...]
    binding: Mapping[str, object] = field(default_factory=dict)

    def bind(self, **values) -> ClosedFormTemplate:
        return replace(self, binding={**self.binding, **values})

    def bound_terms(self) -> dict:
        """Numeric ``{config: coefficient}``; raises if two patterns collide."""
        names = {x for pattern, _ in self.terms for _, x in pattern}
        subs = {sp.Symbol(k): v for k, v in self.binding.items() if k not in names}
        out = {}
        for pattern, expr in self.terms:
            config = canonical_config(((path, self.binding[x] if isinstance(x, str) else x), 1) for path, x in pattern)
            if config in out:
                raise ValueError(f"template {self.name}: patterns collide at {config_label(config)}")
            value = complex(sp.N(expr.subs(subs)))
            out[config] = value
        return out

    def describe(self) -> list[tuple[str, str]]:
        return [("".join(f"{p}{x}" for p, x in pat), str(expr)) for pat, expr in self.terms]


def _diag(x: str, scale=-2):
    g, c, f, gg = _syms(x)
    coeff = scale * g * c * f * gg
    return [(( ("B", x), ("B", x) ), coeff), ((("C", x), ("C", x)), coeff)]


def _cross(x: str, y: str, scale=-2):
    # (gamma_x C_y f_x g_y + gamma_y C_x f_y g_x)(|y,x>_B + |y,x>_C)
    gx, cx, fx, g_x = _syms(x)
    gy, cy, fy, g_y = _syms(y)
    coeff = scale * (gx * cy * fx * g_y + gy * cx * fy * g_x)
    return [((("B", y), ("B", x)), coeff), ((("C", y), ("C", x)), coeff)]


def single_mode_template() -> ClosedFormTemplate:
    """``-2 gamma C f g (|m,m>_B|0>_C + |0>_B|m,m>_C)``."""
    return ClosedFormTemplate("single-mode", tuple(_diag("m")))


def two_mode_template() -> ClosedFormTemplate:
    """Two-mode projector result with one delta pairing per cross coefficient."""
    return ClosedFormTemplate("two-mode", tuple(_diag("m") + _diag("n") + _cross("m", "n")))


def three_mode_template() -> ClosedFormTemplate:
    terms = _diag("m") + _diag("n") + _diag("r") + _cross("m", "n") + _cross("m", "r") + _cross("n", "r")
    return ClosedFormTemplate("three-mode", tuple(terms))


def exact_template(names: Sequence[str]) -> ClosedFormTemplate:
    """Template derived term-by-term from the general delta-contracted result.

    Sums over ordered mode pairs ``(l, L)`` with coefficient
    ``-i gamma_L C_l (f_L g_l + f_l g_L)`` times
    ``|l>_B|L>_C - i|l,L>_B - i|l,L>_C - |L>_B|l>_C``. Unlike the
    one-pairing forms it keeps both delta pairings on cross terms, and it
    retains the single-occupancy ``|x>_B|y>_C`` terms that cancel only for
    symmetric tables.
    """
    acc: dict = {}

    def add(pattern, coeff):
        key = tuple(sorted(pattern))
        acc[key] = acc.get(key, 0) + coeff

    for lo, up in itertools.product(names, repeat=2):
        g_up, _, f_up, gg_up = _syms(up)
        _, c_lo, f_lo, gg_lo = _syms(lo)
        pref = -sp.I * g_up * c_lo * (f_up * gg_lo + f_lo * gg_up)
        add((("B", lo), ("C", up)), pref)
        add((("B", lo), ("B", up)), -sp.I * pref)
        add((("C", lo), ("C", up)), -sp.I * pref)
        add((("B", up), ("C", lo)), -pref)
    terms = []
    for pattern, expr in acc.items():
        expr = sp.expand(expr)
        if expr != 0:
            terms.append((pattern, expr))
    return ClosedFormTemplate("exact-" + "".join(names), tuple(terms))


def literal_template(name: str) -> ClosedFormTemplate:
    """Unit-amplitude literal forms, coefficients relative to ``-2``.

    ``name`` is one of ``"two-ones"``, ``"two-noon"``, ``"three-ones"``,
    ``"three-gr"``, ``"three-gn"``, ``"three-gm"``.
    """

    def pair(*photons, c=1):
        return [(tuple(("B", x) for x in photons), -2 * sp.Integer(c)), (tuple(("C", x) for x in photons), -2 * sp.Integer(c))]

    forms = {
        "two-ones": pair("m", "m") + pair("n", "n") + pair("n", "m", c=2),
        "two-noon": pair("m", "m") + pair("n", "n", c=-1),
        "three-ones": pair("m", "m") + pair("n", "m", c=2) + pair("n", "n") + pair("r", "n", c=2)
        + pair("r", "r") + pair("m", "r", c=2),
        "three-gr": pair("n", "n") + pair("r", "r") + pair("m", "m") + pair("n", "m", c=2),
        "three-gn": pair("m", "m") + pair("n", "n") + pair("r", "r") + pair("m", "r", c=2),
        "three-gm": pair("m", "m") + pair("r", "r") + pair("n", "n") + pair("r", "n", c=2),
    }
    if name not in forms:
        raise KeyError(f"no literal form {name!r}; choose from {sorted(forms)}")
    return ClosedFormTemplate("literal-" + name, tuple(forms[name]))


@dataclass(frozen=True)
class TermCheck:
    pattern: str
    measured: complex
    expected: complex
    ratio: complex | None
    deviation: float


@dataclass(frozen=True)
class VerificationReport:
    template: str
    tol: float
    rows: tuple[TermCheck, ...]
    global_constant: complex
    ratio_spread: float
    max_deviation: float
    extra_terms: tuple[tuple[str, complex], ...]
    max_extra: float
    passed: bool
    offending: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "template": self.template,
            "tol": self.tol,
            "passed": self.passed,
            "global_constant": complex_pair(self.global_constant),
            "ratio_spread": self.ratio_spread,
            "max_deviation": self.max_deviation,
            "max_extra": self.max_extra,
            "offending": list(self.offending),
            "terms": [
                {
                    "pattern": r.pattern,
                    "measured": complex_pair(r.measured),
                    "expected": complex_pair(r.expected),
                    "ratio": None if r.ratio is None else complex_pair(r.ratio),
                    "deviation": r.deviation,
                }
                for r in self.rows
            ],
            "extra_terms": [{"pattern": p, "measured": complex_pair(v)} for p, v in self.extra_terms],
        }


def verify_against_closed_form(state: FockState, template: ClosedFormTemplate, tol: float = OVERRIDE_TOL) -> VerificationReport:
    """Compare ``state`` with a bound template up to one global constant.

    The constant is fixed by the largest-magnitude expected term. The report
    passes iff every ratio ``measured/expected`` matches it to relative
    ``tol``, template terms expected to vanish stay below ``tol`` (relative
    to the reference term), and no term outside the template exceeds
    ``tol``.
    """
    measured = monomial_coefficients(state)
    expected = template.bound_terms()
    nonzero = {k: v for k, v in expected.items() if abs(v) > 0}
    if not nonzero:
        raise ValueError(f"template {template.name} has no nonzero terms after binding")
    ref = max(sorted(nonzero), key=lambda k: abs(nonzero[k]))
    kappa = measured.get(ref, 0j) / nonzero[ref]
    scale = abs(kappa * nonzero[ref])

    rows = []
    offending = []
    spread = 0.0
    max_dev = 0.0
    for config in sorted(expected):
        m = measured.get(config, 0j)
        e = expected[config]
        label = config_label(config)
        if scale == 0:
            dev = float("inf")
        else:
            dev = abs(m - kappa * e) / scale
        ratio = m / e if e != 0 else None
        if e != 0 and kappa != 0:
            spread = max(spread, abs(ratio / kappa - 1))
        elif e != 0:
            spread = float("inf")
        max_dev = max(max_dev, dev)
        if dev > tol:
            offending.append(label)
        rows.append(TermCheck(label, m, e, ratio, dev))

    extras = []
    max_extra = 0.0
    for config in sorted(measured):
        if config in expected:
            continue
        rel = abs(measured[config]) / scale if scale else float("inf")
        max_extra = max(max_extra, rel)
        extras.append((config_label(config), measured[config]))
        if rel > tol:
            offending.append(config_label(config))

    passed = scale > 0 and spread <= tol and max_dev <= tol and max_extra <= tol
    return VerificationReport(
        template.name, tol, tuple(rows), kappa, spread, max_dev, tuple(extras), max_extra, passed, tuple(offending)
    )


# ---------------------------------------------------------------------------
# scenarios

TWO_MODE_PRESETS = {
    # (f_m, g_m, f_n, g_n)
    "ones": (1, 1, 1, 1),
    "noon": (1, 1, 1, -1),
    "single": (1, 1, 0, 0),
}

THREE_MODE_PRESETS = {
    # (f_m, f_n, f_r, g_m, g_n, g_r)
    "ones": (1, 1, 1, 1, 1, 1),
    "gr": (1, 1, 1, 1, 1, -1),
    "gn": (1, 1, 1, 1, -1, 1),
    "gm": (1, 1, 1, -1, 1, 1),
}


def default_config(l_max: int, proj_D: Projector, proj_A: Projector) -> ScenarioConfig:
    """Gaussian pumps with every ``C[-l, l]`` and ``gamma[-l, l]`` set to one."""
    return ScenarioConfig(proj_D=proj_D, proj_A=proj_A, l_max=l_max, amplitude_override=unit_override(l_max))


def _scenario_cfg(cfg, modes, f, g):
    proj_D = Projector.of("D", [(-x, w) for x, w in zip(modes, f)])
    proj_A = Projector.of("A", [(-x, w) for x, w in zip(modes, g)])
    if cfg is None:
        return default_config(max(abs(x) for x in modes), proj_D, proj_A)
    return cfg.with_projectors(proj_D, proj_A)


def _binding(names, modes, f, g, tables):
    c_ab, gamma_ac = tables
    b = {}
    for x, l, fx, gx in zip(names, modes, f, g):
        b[x] = l
        b[f"f_{x}"] = complex(fx)
        b[f"g_{x}"] = complex(gx)
        b[f"C_{x}"] = c_ab.get(-l, l)
        b[f"gamma_{x}"] = gamma_ac.get(-l, l)
    return b


def _check_distinct(modes):
    if len(set(modes)) != len(modes):
        raise DegenerateProjectorError(f"projector modes must be distinct, got {modes}")


def _run_scenario(names, modes, f, g, cfg, template, tol):
    _check_distinct(modes)
    cfg = _scenario_cfg(cfg, modes, f, g)
    tables = build_tables(cfg)
    stages = run_pipeline(cfg, tables)
    bound = template.bind(**_binding(names, modes, f, g, tables))
    report = verify_against_closed_form(stages.psi_f, bound, cfg.verify_tol if tol is None else tol)
    return stages, report


def scenario_single_mode(m: int, f_m=1, g_m=1, cfg: ScenarioConfig | None = None, tol=None):
    return _run_scenario(("m",), (m,), (f_m,), (g_m,), cfg, single_mode_template(), tol)


def scenario_two_mode(m: int, n: int, f_m=1, f_n=1, g_m=1, g_n=1, cfg: ScenarioConfig | None = None,
                      template: ClosedFormTemplate | None = None, tol=None):
    """Two-mode projectors ``f_m|-m> + f_n|-n>`` on D and ``g_m|-m> + g_n|-n>`` on A.

    Verified against :func:`two_mode_template` unless another template is
    given. ``m == n`` raises :class:`DegenerateProjectorError`.
    """
    template = template or two_mode_template()
    return _run_scenario(("m", "n"), (m, n), (f_m, f_n), (g_m, g_n), cfg, template, tol)


def scenario_three_mode(m: int, n: int, r: int, weights="ones", cfg: ScenarioConfig | None = None,
                        template: ClosedFormTemplate | None = None, tol=None):
    """Three-mode projectors; ``weights`` is a preset name or ``(f_m, f_n, f_r, g_m, g_n, g_r)``."""
    if isinstance(weights, str):
        weights = THREE_MODE_PRESETS[weights]
    f, g = tuple(weights[:3]), tuple(weights[3:])
    template = template or three_mode_template()
    return _run_scenario(("m", "n", "r"), (m, n, r), f, g, cfg, template, tol)


SCENARIOS = {
    "single-mode": lambda: scenario_single_mode(1),
    "two-mode-ones": lambda: scenario_two_mode(1, 2, *_two(TWO_MODE_PRESETS["ones"])),
    "two-mode-noon": lambda: scenario_two_mode(1, 2, *_two(TWO_MODE_PRESETS["noon"])),
    "two-mode-single": lambda: scenario_two_mode(1, 2, *_two(TWO_MODE_PRESETS["single"])),
    "three-mode-ones": lambda: scenario_three_mode(1, 2, 3, "ones"),
    "three-mode-gr": lambda: scenario_three_mode(1, 2, 3, "gr"),
    "three-mode-gn": lambda: scenario_three_mode(1, 2, 3, "gn"),
    "three-mode-gm": lambda: scenario_three_mode(1, 2, 3, "gm"),
}


def _two(preset):
    f_m, g_m, f_n, g_n = preset
    return f_m, f_n, g_m, g_n


def run_named_scenario(name: str):
    if name not in SCENARIOS:
        raise KeyError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
    return SCENARIOS[name]()
