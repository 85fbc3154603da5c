"""Derivative-free search over heralding-projector weights.

The heralded state is bilinear in the projector weights,
``psi_f = sum_{j,k} f_j g_k Phi[j, k]``, where ``Phi[j, k]`` is the filtered
four-photon state contracted with ``<j|_D <k|_A``.  :class:`CompiledObjective`
builds ``Phi`` once so that each evaluation is a small tensor contraction;
:func:`objective` is the slow reference path that reruns the whole pipeline.

The optimizer is a bounded Nelder-Mead simplex (scipy) restarted from fresh
random points whenever it stagnates, until the evaluation budget is spent.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from math import pi
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.optimize import minimize

from ._fmt import fmt_float
from .analysis import noon_fidelity
from .errors import DegenerateStateError, OamNoonError
from .fock import FockState, from_monomials, normalize
from .lg_engine import PumpSpec
from .optics import Projector
from .protocol import (
    THREE_MODE_PRESETS,
    TWO_MODE_PRESETS,
    ClosedFormTemplate,
    ScenarioConfig,
    build_tables,
    literal_template,
    prepare,
    run_pipeline,
    single_mode_template,
    three_mode_template,
    two_mode_template,
)

__all__ = [
    "SearchSpace",
    "SearchResult",
    "CompiledObjective",
    "objective",
    "optimize",
    "template_state",
    "named_target",
    "TARGETS",
]

TWO_PI = 2 * pi


@dataclass(frozen=True)
class SearchSpace:
    """Parameterisation of the projector weights (and optionally pump amplitudes).

    Each block of ``k`` weights becomes ``k`` magnitudes in ``[0, 1]``
    followed by ``k - 1`` phases in ``[0, 2pi)``; the first weight of a
    block is real and non-negative, which removes the global-phase
    direction.  ``pump_modes`` adds a block of pump amplitudes on those OAM
    indices, shared by both crystals.
    """

    d_modes: tuple[int, ...]
    a_modes: tuple[int, ...]
    pump_modes: tuple[int, ...] = ()

    def __post_init__(self):
        if not self.d_modes or not self.a_modes:
            raise ValueError("search space needs at least one mode on D and on A")
        for modes in (self.d_modes, self.a_modes, self.pump_modes):
            if len(set(modes)) != len(modes):
                raise ValueError(f"repeated modes in {modes}")

    @classmethod
    def from_config(cls, cfg: ScenarioConfig, pump_modes: Sequence[int] = ()) -> SearchSpace:
        return cls(tuple(cfg.proj_D.ls), tuple(cfg.proj_A.ls), tuple(pump_modes))

    @property
    def blocks(self) -> tuple[tuple[int, ...], ...]:
        return tuple(b for b in (self.d_modes, self.a_modes, self.pump_modes) if b)

    @property
    def dimension(self) -> int:
        return sum(2 * len(b) - 1 for b in self.blocks)

    def bounds(self) -> list[tuple[float, float]]:
        out = []
        for b in self.blocks:
            out += [(0.0, 1.0)] * len(b) + [(0.0, TWO_PI)] * (len(b) - 1)
        return out

    def decode(self, x) -> list[np.ndarray]:
        """Parameter vector -> one complex weight array per block."""
        x = np.asarray(x, dtype=float)
        out = []
        i = 0
        for b in self.blocks:
            k = len(b)
            mags = x[i : i + k]
            phases = np.concatenate([[0.0], x[i + k : i + 2 * k - 1]])
            out.append(mags * np.exp(1j * phases))
            i += 2 * k - 1
        return out

    def encode(self, *weights) -> np.ndarray:
        """Inverse of :meth:`decode` up to per-block phase and scale."""
        x = []
        for b, w in zip(self.blocks, weights):
            w = np.asarray(w, dtype=complex)
            if w.shape != (len(b),):
                raise ValueError(f"expected {len(b)} weights, got {w.shape}")
            peak = np.max(np.abs(w))
            if peak == 0:
                raise ValueError("weights are all zero")
            w = w / peak
            if w[0] != 0:
                w = w * np.exp(-1j * np.angle(w[0]))
            x += list(np.abs(w)) + list(np.mod(np.angle(w[1:]), TWO_PI))
        return np.array(x)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        lo, hi = np.array(self.bounds()).T
        return lo + (hi - lo) * rng.random(self.dimension)

    def projectors(self, x) -> tuple[Projector, Projector]:
        blocks = self.decode(x)
        return (
            Projector.of("D", zip(self.d_modes, blocks[0])),
            Projector.of("A", zip(self.a_modes, blocks[1])),
        )


def _target_vector(target: FockState, index: Mapping) -> np.ndarray:
    vec = np.zeros(len(index), dtype=complex)
    for config, amp in target.items():
        if config in index:
            vec[index[config]] = amp
    return vec


def _unit(v: np.ndarray) -> np.ndarray | None:
    """``v / |v|``, or None for a zero vector; rescaled first to avoid underflow."""
    peak = np.max(np.abs(v))
    if peak == 0:
        return None
    v = v / peak
    return v / np.linalg.norm(v)


class CompiledObjective:
    """Fast fidelity objective for a fixed device and target.

    Parameters
    ----------
    success_weight : float
        Adds ``success_weight * P(herald)`` to the fidelity. Zero by default,
        so the objective is pure state quality.
    metric : callable, optional
        ``metric(psi_f_normalized) -> float`` replacing the fidelity, e.g. a
        Schmidt number. Evaluated on a full :class:`FockState`, so slower.
    """

    def __init__(self, cfg: ScenarioConfig, target: FockState, space: SearchSpace,
                 success_weight: float = 0.0, metric: Callable[[FockState], float] | None = None):
        if abs(target.norm() - 1.0) > 1e-9:
            raise ValueError("target must be normalized")
        self.cfg = cfg
        self.target = target
        self.space = space
        self.success_weight = success_weight
        self.metric = metric
        self._base_tables = None
        if space.pump_modes:
            self._component_tables = self._pump_component_tables()
        else:
            self._compile(build_tables(cfg))

    def _pump_component_tables(self):
        tables = []
        for l in self.space.pump_modes:
            pump = PumpSpec.from_modes([(l, 1.0)], w0=self.cfg.pump1.waist)
            comp_cfg = replace(self.cfg, pump1=pump, pump2=pump.with_waist(self.cfg.pump2.waist))
            tables.append(build_tables(comp_cfg))
        return tables

    def _compile(self, tables):
        psi_filtered = prepare(self.cfg, tables)[-1]
        d_index = {l: i for i, l in enumerate(self.space.d_modes)}
        a_index = {l: i for i, l in enumerate(self.space.a_modes)}
        index: dict = {}
        cells = []
        for config, amp in psi_filtered.items():
            d = [m.l for m, n in config if m.path == "D"]
            a = [m.l for m, n in config if m.path == "A"]
            if d[0] not in d_index or a[0] not in a_index:
                continue
            rest = tuple(e for e in config if e[0].path not in ("A", "D"))
            c = index.setdefault(rest, len(index))
            cells.append((d_index[d[0]], a_index[a[0]], c, amp))
        phi = np.zeros((len(d_index), len(a_index), max(len(index), 1)), dtype=complex)
        for j, k, c, amp in cells:
            phi[j, k, c] += amp
        self._index = index
        self._configs = sorted(index, key=index.get)
        self._phi = phi
        self._tvec = _target_vector(self.target, index) if index else np.zeros(1, dtype=complex)

    def _pump_tables(self, coeffs):
        from .lg_engine import CoincidenceTable

        merged = []
        for which in (0, 1):
            entries: dict = {}
            for c, tabs in zip(coeffs, self._component_tables):
                for key, v in tabs[which].entries.items():
                    entries[key] = entries.get(key, 0j) + c * v
            base = self._component_tables[0][which]
            merged.append(CoincidenceTable(entries, base.l_max, base.p_max, base.waists, None))
        return tuple(merged)

    def heralded(self, x) -> tuple[np.ndarray, float]:
        """Unnormalized ``psi_f`` amplitudes on the compiled index and the herald probability."""
        blocks = self.space.decode(x)
        if self.space.pump_modes:
            coeffs = _unit(blocks[2])
            if coeffs is None:
                return np.zeros(1, dtype=complex), 0.0
            self._compile(self._pump_tables(coeffs))
        f, g = _unit(blocks[0]), _unit(blocks[1])
        if f is None or g is None:
            return np.zeros_like(self._tvec), 0.0
        psi = np.einsum("j,k,jkc->c", f, g, self._phi)
        return psi, float(np.vdot(psi, psi).real)

    def state(self, x) -> FockState:
        psi, _ = self.heralded(x)
        return FockState._raw({c: psi[i] for c, i in self._index.items()}, 1e-14)

    def __call__(self, x) -> float:
        psi, prob = self.heralded(x)
        if prob == 0.0:
            return 0.0
        if self.metric is not None:
            value = self.metric(normalize(self.state(x))[0])
        else:
            value = float(abs(np.vdot(self._tvec, psi)) ** 2 / prob)
        return value + self.success_weight * prob


def objective(weights, cfg: ScenarioConfig, target: FockState) -> float:
    """Reference objective: rerun the full pipeline with ``weights`` installed.

    ``weights`` is ``(d_weights, a_weights)``, each a mapping ``l -> w`` or a
    sequence aligned with the configured projector modes. Returns the
    fidelity of the normalized heralded state with ``target``, or 0 when the
    herald never fires.
    """
    d_w, a_w = weights
    d_items = d_w.items() if isinstance(d_w, Mapping) else zip(cfg.proj_D.ls, d_w)
    a_items = a_w.items() if isinstance(a_w, Mapping) else zip(cfg.proj_A.ls, a_w)
    try:
        cfg = cfg.with_projectors(Projector.of("D", d_items), Projector.of("A", a_items))
    except ValueError:
        return 0.0  # all-zero projector
    stages = run_pipeline(cfg)
    if stages.success_amplitude == 0:
        return 0.0
    return noon_fidelity(stages.psi_f_normalized, target)


@dataclass
class SearchResult:
    best_x: np.ndarray
    best_weights: dict[str, list[tuple[int, complex]]]
    best_objective: float
    evaluations: int
    trace: list[tuple[int, float]]
    seed: int
    restarts: int
    budget: int

    def to_dict(self) -> dict:
        return {
            "best_objective": self.best_objective,
            "best_x": [float(v) for v in self.best_x],
            "best_weights": {
                path: [{"l": l, "re": float(w.real) + 0.0, "im": float(w.imag) + 0.0} for l, w in ws]
                for path, ws in self.best_weights.items()
            },
            "evaluations": self.evaluations,
            "budget": self.budget,
            "restarts": self.restarts,
            "seed": self.seed,
            "trace": [{"evaluation": e, "best_objective": v} for e, v in self.trace],
        }

    def trace_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["evaluation", "best_objective"])
        for e, v in self.trace:
            writer.writerow([e, fmt_float(v)])
        return buf.getvalue()


class _BudgetSpent(Exception):
    pass


class _Stagnated(Exception):
    pass


def optimize(
    cfg: ScenarioConfig,
    target: FockState,
    space: SearchSpace | None = None,
    budget: int = 2000,
    seed: int = 0,
    x0=None,
    stop_at: float = 1.0 - 1e-12,
    patience: int | None = None,
    success_weight: float = 0.0,
    metric: Callable[[FockState], float] | None = None,
) -> SearchResult:
    """Maximise fidelity to ``target`` over projector weights.

    Deterministic for fixed arguments. Each restart runs a bounded
    Nelder-Mead simplex (initial edge a quarter of each parameter range)
    until it stagnates (simplex collapse, or no run of ``patience``
    evaluations closing a thousandth of the gap to ``stop_at``; default
    ``40 * dimension``), then starts again
    from a uniformly random point. ``x0`` seeds the first start. The search stops once ``budget``
    evaluations are used or the objective reaches ``stop_at``.
    """
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    space = space or SearchSpace.from_config(cfg)
    fn = CompiledObjective(cfg, target, space, success_weight, metric)
    rng = np.random.default_rng(seed)
    bounds = space.bounds()
    lo, hi = np.array(bounds).T
    # phases are periodic: let the simplex move freely and wrap on decode
    nm_bounds = [(a, b) if b <= 1.0 else (None, None) for a, b in bounds]

    patience = patience or 40 * space.dimension
    state = {"evals": 0, "best": -np.inf, "best_x": None, "local": -np.inf, "last_gain": 0}
    trace: list[tuple[int, float]] = []

    def wrapped(x):
        if state["evals"] >= budget or state["best"] >= stop_at:
            raise _BudgetSpent
        state["evals"] += 1
        try:
            val = fn(x)
        except (OamNoonError, ValueError):
            val = 0.0
        if val > state["best"]:
            state["best"] = val
            state["best_x"] = np.array(x, dtype=float)
            trace.append((state["evals"], float(val)))
        local = state["local"]
        if local == -np.inf or val > local + 1e-3 * abs(stop_at - local) + 1e-12:
            state["local"] = val
            state["last_gain"] = state["evals"]
        elif state["evals"] - state["last_gain"] > patience:
            raise _Stagnated
        return -val

    restarts = 0
    start = np.asarray(x0, dtype=float) if x0 is not None else space.sample(rng)
    while state["evals"] < budget and state["best"] < stop_at:
        state["local"] = -np.inf
        state["last_gain"] = state["evals"]
        step = 0.25 * (hi - lo)
        simplex = np.vstack([start] + [start + np.eye(len(start))[i] * step[i] * (1 if start[i] + step[i] <= hi[i] else -1)
                                       for i in range(len(start))])
        try:
            minimize(
                wrapped,
                start,
                method="Nelder-Mead",
                bounds=nm_bounds,
                options={"initial_simplex": simplex, "maxfev": budget, "xatol": 1e-9, "fatol": 1e-13, "adaptive": True},
            )
        except _BudgetSpent:
            break
        except _Stagnated:
            pass
        restarts += 1
        start = space.sample(rng)

    best_x = state["best_x"]
    if best_x is None:
        raise DegenerateStateError("optimizer made no evaluations")
    best_x = np.where(np.array([b > 1.0 for _, b in bounds]), np.mod(best_x, TWO_PI), best_x)
    proj_D, proj_A = space.projectors(best_x)
    weights = {"D": list(proj_D.weights), "A": list(proj_A.weights)}
    if space.pump_modes:
        weights["pump"] = list(zip(space.pump_modes, space.decode(best_x)[2]))
    return SearchResult(best_x, weights, float(state["best"]), state["evals"], trace, seed, restarts, budget)


# ---------------------------------------------------------------------------
# targets


def template_state(template: ClosedFormTemplate) -> FockState:
    """Normalized state whose monomial coefficients are the bound template."""
    return normalize(from_monomials(template.bound_terms()))[0]


def _unit_binding(names, modes, f, g):
    b = {}
    for x, l, fx, gx in zip(names, modes, f, g):
        b.update({x: l, f"f_{x}": fx, f"g_{x}": gx, f"C_{x}": 1, f"gamma_{x}": 1})
    return b


def _two(preset):
    f_m, g_m, f_n, g_n = preset
    return (f_m, f_n), (g_m, g_n)


def named_target(name: str, m: int = 1, n: int = 2, r: int = 3) -> FockState:
    """Target state for the closed-form scenarios, with unit pair amplitudes."""
    if name not in TARGETS:
        raise KeyError(f"unknown target {name!r}; choose from {sorted(TARGETS)}")
    return TARGETS[name](m, n, r)


TARGETS: dict[str, Callable[[int, int, int], FockState]] = {
    "single-mode": lambda m, n, r: template_state(single_mode_template().bind(**_unit_binding("m", (m,), (1,), (1,)))),
    "two-mode-ones": lambda m, n, r: template_state(
        two_mode_template().bind(**_unit_binding("mn", (m, n), *_two(TWO_MODE_PRESETS["ones"])))
    ),
    "two-mode-noon": lambda m, n, r: template_state(
        two_mode_template().bind(**_unit_binding("mn", (m, n), *_two(TWO_MODE_PRESETS["noon"])))
    ),
    **{
        f"three-mode-{p}": (
            lambda p: lambda m, n, r: template_state(
                three_mode_template().bind(
                    **_unit_binding("mnr", (m, n, r), THREE_MODE_PRESETS[p][:3], THREE_MODE_PRESETS[p][3:])
                )
            )
        )(p)
        for p in THREE_MODE_PRESETS
    },
    **{
        f"three-mode-{p}-positive": (
            lambda p: lambda m, n, r: template_state(literal_template(f"three-{p}").bind(m=m, n=n, r=r))
        )(p)
        for p in ("gr", "gn", "gm")
    },
}
