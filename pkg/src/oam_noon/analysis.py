"""Spiral spectra, Schmidt decomposition and fidelities of heralded states."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._fmt import fmt_float
from .errors import ContractError, DegenerateStateError
from .fock import FockState, from_monomials, inner_product, normalize
from .lg_engine import CoincidenceTable, PumpSpec, QuadratureSpec, coincidence_table

__all__ = [
    "SpiralSpectrum",
    "SchmidtReport",
    "spiral_spectrum",
    "mes_flatness",
    "flatness_scan",
    "schmidt_decomposition",
    "noon_fidelity",
    "generalized_noon",
]

RANK_THRESHOLD = 1e-10


@dataclass(frozen=True)
class SpiralSpectrum:
    """Joint OAM probabilities ``P[l_s, l_i]`` summed over radial indices.

    ``probabilities[i, j]`` belongs to ``l_s = l_values[i]``,
    ``l_i = l_values[j]``.
    """

    probabilities: np.ndarray
    l_values: tuple[int, ...]

    def prob(self, l_s: int, l_i: int) -> float:
        lo = self.l_values[0]
        if not (lo <= l_s <= self.l_values[-1] and lo <= l_i <= self.l_values[-1]):
            return 0.0
        return float(self.probabilities[l_s - lo, l_i - lo])

    def support(self, threshold: float = 0.0) -> list[tuple[int, int]]:
        idx = np.argwhere(self.probabilities > threshold)
        return [(self.l_values[i], self.l_values[j]) for i, j in idx]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["l_s", "l_i", "probability"])
        for i, l_s in enumerate(self.l_values):
            for j, l_i in enumerate(self.l_values):
                writer.writerow([l_s, l_i, fmt_float(self.probabilities[i, j])])
        return buf.getvalue()


def spiral_spectrum(table: CoincidenceTable) -> SpiralSpectrum:
    ls = tuple(range(-table.l_max, table.l_max + 1))
    probs = np.zeros((len(ls), len(ls)))
    for (l_s, _, l_i, _), amp in table.items():
        probs[l_s + table.l_max, l_i + table.l_max] += abs(amp) ** 2
    total = probs.sum()
    if total == 0:
        raise DegenerateStateError("coincidence table is empty")
    return SpiralSpectrum(probs / total, ls)


def mes_flatness(spectrum: SpiralSpectrum, cells: Sequence[tuple[int, int]]) -> float:
    """``min/max`` probability over the target cells; 1 means a perfectly flat MES."""
    if not cells:
        raise ValueError("cells must be nonempty")
    values = [spectrum.prob(l_s, l_i) for l_s, l_i in cells]
    hi = max(values)
    if hi == 0 or min(values) == 0:
        return 0.0
    return min(values) / hi


def flatness_scan(
    pump: PumpSpec,
    cells: Sequence[tuple[int, int]],
    ratios: Iterable[float],
    l_max: int | None = None,
    quad: QuadratureSpec | None = None,
) -> tuple[float, float, list[tuple[float, float]]]:
    """Scan the signal/idler-to-pump waist ratio for the flattest target cells.

    Returns ``(best_ratio, best_flatness, [(ratio, flatness), ...])``. The
    first ratio wins ties, so the result is deterministic for a fixed grid.
    """
    if l_max is None:
        l_max = max(pump.max_abs_l, *(max(abs(a), abs(b)) for a, b in cells))
    trace = []
    for ratio in ratios:
        w = ratio * pump.waist
        table = coincidence_table(pump, l_max, 0, (w, w), quad)
        trace.append((float(ratio), mes_flatness(spiral_spectrum(table), cells)))
    if not trace:
        raise ValueError("no ratios to scan")
    best = max(trace, key=lambda t: t[1])
    return best[0], best[1], trace


@dataclass(frozen=True)
class SchmidtReport:
    singular_values: tuple[float, ...]
    schmidt_rank: int
    schmidt_number: float
    term_dimension: int

    def to_dict(self) -> dict:
        return {
            "singular_values": list(self.singular_values),
            "schmidt_rank": self.schmidt_rank,
            "schmidt_number": self.schmidt_number,
            "term_dimension": self.term_dimension,
        }


def schmidt_decomposition(
    state: FockState,
    bipartition: tuple[Sequence[str], Sequence[str]] = (("B",), ("C",)),
    threshold: float = RANK_THRESHOLD,
) -> SchmidtReport:
    """Singular values of the coefficient matrix across a path bipartition.

    Local bases are the occupation patterns that actually occur on each
    side. ``term_dimension`` counts the product patterns with amplitude
    above ``threshold``, i.e. the number of orthogonal ``left x right`` kets
    the state is written in; it bounds the Schmidt rank from above.
    """
    if state.is_zero():
        raise DegenerateStateError("cannot decompose the zero state")
    left, right = set(bipartition[0]), set(bipartition[1])
    if left & right:
        raise ValueError("bipartition sides overlap")
    stray = state.paths() - left - right
    if stray:
        raise ContractError(f"state has photons on paths {sorted(stray)} outside the bipartition")
    psi, _ = normalize(state)

    rows: dict = {}
    cols: dict = {}
    cells = []
    for config, amp in psi.items():
        lpart = tuple(e for e in config if e[0].path in left)
        rpart = tuple(e for e in config if e[0].path in right)
        i = rows.setdefault(lpart, len(rows))
        j = cols.setdefault(rpart, len(cols))
        cells.append((i, j, amp))
    mat = np.zeros((len(rows), len(cols)), dtype=complex)
    for i, j, amp in cells:
        mat[i, j] += amp
    sv = np.linalg.svd(mat, compute_uv=False)
    sv = np.sort(sv)[::-1]
    rank = int(np.sum(sv > threshold))
    p = sv**2
    k = 1.0 / float(np.sum(p**2))
    terms = sum(1 for _, amp in psi.items() if abs(amp) > threshold)
    return SchmidtReport(tuple(float(s) for s in sv), rank, k, terms)


def _check_normalized(state: FockState, name: str, tol: float = 1e-9):
    n = state.norm()
    if abs(n - 1.0) > tol:
        raise ContractError(f"{name} must be normalized, norm is {n!r}")


def noon_fidelity(state: FockState, target: FockState) -> float:
    """``|<target|state>|^2`` for normalized inputs."""
    _check_normalized(state, "state")
    _check_normalized(target, "target")
    f = abs(inner_product(target, state)) ** 2
    return float(min(max(f, 0.0), 1.0))


def generalized_noon(weights: Mapping[int, complex], n_photons: int = 2,
                     paths: tuple[str, str] = ("B", "C")) -> FockState:
    """Normalized ``sum_l w_l (|N_l>_B|0>_C + |0>_B|N_l>_C)``, weights in the monomial view.

    ``generalized_noon({m: 1})`` is the single-mode N00N state and
    ``generalized_noon({m: 1, n: -1})`` the two-mode sign-flip state.
    """
    coeffs = {}
    for l, w in weights.items():
        for path in paths:
            coeffs[((path, l, n_photons),)] = w
    state = from_monomials(coeffs)
    return normalize(state)[0]
