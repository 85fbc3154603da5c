r"""Laguerre-Gauss modes and SPDC coincidence amplitudes.

The field of a Laguerre-Gauss mode at the waist plane is

.. math::
    \mathrm{LG}_p^l(\rho, \phi) = \frac{1}{w_0}\sqrt{\frac{2 p!}{\pi (p+|l|)!}}
        \left(\frac{\rho\sqrt{2}}{w_0}\right)^{|l|}
        L_p^{|l|}\!\left(\frac{2\rho^2}{w_0^2}\right)
        e^{-\rho^2/w_0^2} e^{i l \phi}

and the pair amplitude for a single pump mode is the transverse overlap
``<LG_pump conj(LG_signal) conj(LG_idler)>``.  The azimuthal part of that
overlap is a Kronecker delta on ``l_p = l_s + l_i`` and is handled exactly;
only the radial integral is evaluated numerically.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field, replace
from functools import lru_cache
from math import factorial, pi, sqrt
from typing import Iterable, Mapping

import numpy as np
from scipy.special import eval_genlaguerre

from ._fmt import fmt_float
from .errors import ConvergenceError

__all__ = [
    "LgMode",
    "PumpSpec",
    "QuadratureSpec",
    "CoincidenceTable",
    "eval_lg",
    "radial_profile",
    "overlap_B",
    "coincidence_table",
    "azimuthal_selection",
]

TableKey = tuple[int, int, int, int]  # (l_s, p_s, l_i, p_i)


@dataclass(frozen=True, order=True)
class LgMode:
    """One Laguerre-Gauss mode.

    Parameters
    ----------
    l : int
        Azimuthal index (OAM of ``l`` hbar per photon).
    p : int
        Radial index, ``p >= 0``.
    w0 : float
        Waist radius, ``w0 > 0``. Any length unit, used consistently.
    """

    l: int
    p: int = 0
    w0: float = 1.0

    def __post_init__(self):
        if int(self.l) != self.l or int(self.p) != self.p:
            raise ValueError(f"mode indices must be integers, got l={self.l!r}, p={self.p!r}")
        if self.p < 0:
            raise ValueError(f"radial index p must be >= 0, got {self.p}")
        if not self.w0 > 0:
            raise ValueError(f"waist w0 must be > 0, got {self.w0}")
        object.__setattr__(self, "l", int(self.l))
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "w0", float(self.w0))


@dataclass(frozen=True)
class QuadratureSpec:
    """Radial Gauss-Legendre rule on ``[0, radial_cutoff_multiplier * w_max]``."""

    node_count: int = 128
    radial_cutoff_multiplier: float = 8.0
    relative_tolerance: float = 1e-10

    def __post_init__(self):
        if int(self.node_count) != self.node_count or self.node_count < 16:
            raise ValueError(f"node_count must be an integer >= 16, got {self.node_count}")
        if not self.radial_cutoff_multiplier > 0:
            raise ValueError("radial_cutoff_multiplier must be > 0")
        if not self.relative_tolerance > 0:
            raise ValueError("relative_tolerance must be > 0")


@dataclass(frozen=True)
class PumpSpec:
    """Pump beam as a superposition of LG modes sharing one waist.

    Use :meth:`from_modes` to build one; ``components`` pairs each
    :class:`LgMode` with its complex amplitude.
    """

    components: tuple[tuple[LgMode, complex], ...]
    normalized: bool = False

    def __post_init__(self):
        if not self.components:
            raise ValueError("pump needs at least one component")
        keys = [(m.l, m.p) for m, _ in self.components]
        if len(set(keys)) != len(keys):
            raise ValueError(f"duplicate pump modes in {keys}")
        waists = {m.w0 for m, _ in self.components}
        if len(waists) != 1:
            raise ValueError(f"pump components must share one waist, got {sorted(waists)}")
        if self.normalized:
            total = sum(abs(a) ** 2 for _, a in self.components)
            if abs(total - 1.0) > 1e-12:
                raise ValueError(f"pump flagged normalized but sum |a|^2 = {total!r}")

    @classmethod
    def from_modes(cls, modes: Iterable[tuple], w0: float = 1.0, normalize: bool = True) -> PumpSpec:
        """Build from ``(l, amplitude)`` or ``(l, p, amplitude)`` tuples."""
        comps = []
        for item in modes:
            if len(item) == 2:
                l, amp = item
                p = 0
            else:
                l, p, amp = item
            comps.append((LgMode(l, p, w0), complex(amp)))
        pump = cls(tuple(comps))
        return pump.normalize() if normalize else pump

    @classmethod
    def gaussian(cls, w0: float = 1.0) -> PumpSpec:
        return cls.from_modes([(0, 1.0)], w0=w0)

    @property
    def waist(self) -> float:
        return self.components[0][0].w0

    @property
    def max_abs_l(self) -> int:
        return max(abs(m.l) for m, _ in self.components)

    def normalize(self) -> PumpSpec:
        norm = sqrt(sum(abs(a) ** 2 for _, a in self.components))
        if norm == 0:
            raise ValueError("pump amplitudes are all zero")
        return PumpSpec(tuple((m, a / norm) for m, a in self.components), normalized=True)

    def with_waist(self, w0: float) -> PumpSpec:
        return PumpSpec(
            tuple((replace(m, w0=w0), a) for m, a in self.components), normalized=self.normalized
        )


def radial_profile(mode: LgMode, rho):
    """Real radial factor of ``LG_p^l``; ``eval_lg`` is this times ``exp(i l phi)``."""
    rho = np.asarray(rho, dtype=float)
    al = abs(mode.l)
    w = mode.w0
    norm = sqrt(2.0 * factorial(mode.p) / (pi * factorial(mode.p + al))) / w
    x = 2.0 * rho**2 / w**2
    return norm * (rho * sqrt(2.0) / w) ** al * eval_genlaguerre(mode.p, al, x) * np.exp(-(rho**2) / w**2)


def eval_lg(mode: LgMode, rho, phi):
    """Evaluate the complex LG field at polar coordinates ``(rho, phi)``.

    Scalars in, complex scalar out; arrays broadcast.
    """
    if not isinstance(mode, LgMode):
        raise TypeError("mode must be an LgMode")
    rho_arr = np.asarray(rho, dtype=float)
    if np.any(rho_arr < 0):
        raise ValueError("rho must be non-negative")
    val = radial_profile(mode, rho_arr) * np.exp(1j * mode.l * np.asarray(phi, dtype=float))
    if val.ndim == 0:
        return complex(val)
    return val


def azimuthal_selection(l_p: int, l_s: int, l_i: int) -> bool:
    """True iff OAM is conserved, ``l_p == l_s + l_i``."""
    return l_p == l_s + l_i


@lru_cache(maxsize=32)
def _legendre01(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _radial_integral(modes: tuple[LgMode, LgMode, LgMode], n: int, cutoff: float) -> tuple[float, float]:
    x, w = _legendre01(n)
    rho = cutoff * x
    f = rho * radial_profile(modes[0], rho) * radial_profile(modes[1], rho) * radial_profile(modes[2], rho)
    return float(cutoff * np.dot(w, f)), float(cutoff * np.dot(w, np.abs(f)))


def overlap_B(pump: LgMode, signal: LgMode, idler: LgMode, quad: QuadratureSpec | None = None) -> complex:
    """Single-pump-mode pair amplitude ``B``.

    Returns exactly ``0j`` when ``l_p != l_s + l_i``. Otherwise the radial
    integral is evaluated with ``quad.node_count`` and twice that many nodes;
    :class:`ConvergenceError` is raised if the two disagree by more than
    ``relative_tolerance`` (measured against the integral of ``|integrand|``,
    so exact radial cancellations do not trip the check).
    """
    quad = quad or QuadratureSpec()
    if not azimuthal_selection(pump.l, signal.l, idler.l):
        return 0j
    cutoff = quad.radial_cutoff_multiplier * max(pump.w0, signal.w0, idler.w0)
    modes = (pump, signal, idler)
    coarse, _ = _radial_integral(modes, quad.node_count, cutoff)
    fine, mass = _radial_integral(modes, 2 * quad.node_count, cutoff)
    scale = max(abs(fine), mass)
    if abs(coarse - fine) > quad.relative_tolerance * scale:
        raise ConvergenceError(2 * pi * coarse, 2 * pi * fine, quad.relative_tolerance)
    # the conjugated signal/idler phases cancel the pump phase, leaving 2*pi
    return complex(2.0 * pi * fine)


@dataclass(frozen=True)
class CoincidenceTable:
    """Sparse table of full coincidence amplitudes ``C[l_s, p_s, l_i, p_i]``."""

    entries: Mapping[TableKey, complex]
    l_max: int
    p_max: int
    waists: tuple[float, float, float]  # (pump, signal, idler)
    pump: PumpSpec | None = None
    overridden: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        for key in self.entries:
            self._check_key(key)

    def _check_key(self, key):
        l_s, p_s, l_i, p_i = key
        if abs(l_s) > self.l_max or abs(l_i) > self.l_max:
            raise ValueError(f"key {key} outside |l| <= {self.l_max}")
        if not (0 <= p_s <= self.p_max and 0 <= p_i <= self.p_max):
            raise ValueError(f"key {key} outside 0 <= p <= {self.p_max}")

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(sorted(self.entries))

    def get(self, l_s: int, l_i: int, p_s: int = 0, p_i: int = 0) -> complex:
        return self.entries.get((l_s, p_s, l_i, p_i), 0j)

    def items(self):
        return [(k, self.entries[k]) for k in sorted(self.entries)]

    def with_overrides(self, overrides: Mapping[TableKey, complex]) -> CoincidenceTable:
        """Copy with selected entries replaced by exact values (zero removes an entry)."""
        entries = dict(self.entries)
        touched = set()
        for key, value in overrides.items():
            key = tuple(int(k) for k in key)
            self._check_key(key)
            touched.add(key)
            if value == 0:
                entries.pop(key, None)
            else:
                entries[key] = complex(value)
        return replace(self, entries=entries, overridden=self.overridden | frozenset(touched))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["l_s", "p_s", "l_i", "p_i", "re", "im", "abs2"])
        for (l_s, p_s, l_i, p_i), amp in self.items():
            writer.writerow(
                [l_s, p_s, l_i, p_i, fmt_float(amp.real), fmt_float(amp.imag), fmt_float(abs(amp) ** 2)]
            )
        return buf.getvalue()


def coincidence_table(
    pump: PumpSpec,
    l_max: int,
    p_max: int = 0,
    waists: tuple[float, float] | None = None,
    quad: QuadratureSpec | None = None,
    prune: float = 1e-12,
) -> CoincidenceTable:
    """Full coincidence amplitudes for a (possibly superposed) pump.

    ``C = sum_pump a * B`` over the grid ``|l_s|, |l_i| <= l_max`` and
    ``p_s, p_i <= p_max``. Entries below ``prune`` times the largest
    magnitude are dropped, as are cells no pump component can reach.

    Parameters
    ----------
    waists : (float, float), optional
        Signal and idler waists. Defaults to the pump waist for both.
    """
    if l_max < pump.max_abs_l:
        raise ValueError(f"l_max={l_max} smaller than max pump |l|={pump.max_abs_l}")
    if p_max < 0:
        raise ValueError("p_max must be >= 0")
    quad = quad or QuadratureSpec()
    w_s, w_i = waists if waists is not None else (pump.waist, pump.waist)

    raw: dict[TableKey, complex] = {}
    ls_range = range(-l_max, l_max + 1)
    p_range = range(p_max + 1)
    for l_s, l_i in itertools.product(ls_range, ls_range):
        hits = [(m, a) for m, a in pump.components if azimuthal_selection(m.l, l_s, l_i)]
        if not hits:
            continue
        for p_s, p_i in itertools.product(p_range, p_range):
            sig = LgMode(l_s, p_s, w_s)
            idl = LgMode(l_i, p_i, w_i)
            raw[(l_s, p_s, l_i, p_i)] = sum(a * overlap_B(m, sig, idl, quad) for m, a in hits)

    peak = max((abs(v) for v in raw.values()), default=0.0)
    entries = {k: v for k, v in raw.items() if abs(v) > prune * peak}
    return CoincidenceTable(entries, l_max, p_max, (pump.waist, w_s, w_i), pump)
