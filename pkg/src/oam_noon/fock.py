"""Sparse multimode bosonic states over (path, OAM) modes.

A :class:`FockState` maps occupation configurations to complex amplitudes in
the orthonormal number basis.  A configuration is a canonically sorted tuple
of ``(ModeLabel, count)`` pairs with ``count >= 1``; the vacuum is the empty
tuple.

Two coefficient conventions are used.  Internally amplitudes are ordinary
Fock amplitudes.  The *monomial* view divides each amplitude by
``sqrt(prod n!)``, giving the coefficient of the creation-operator product
``prod (a_k^dagger)^{n_k} |0>``.  Hand-written kets such as ``|m,m>_B`` are
in the monomial view.
"""

from __future__ import annotations

import itertools
from collections import Counter
from math import factorial, prod, sqrt
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple

from .errors import DegenerateStateError

__all__ = [
    "ModeLabel",
    "FockState",
    "Config",
    "vacuum",
    "apply_creation",
    "apply_linear_map",
    "inner_product",
    "monomial_coefficients",
    "from_monomials",
    "scale_add",
    "normalize",
    "prune",
    "photon_count",
    "DEFAULT_PRUNE",
    "config_label",
    "canonical_config",
]

DEFAULT_PRUNE = 1e-14
PATHS = ("A", "B", "C", "D")


class ModeLabel(NamedTuple):
    """Optical path (``"A"``..``"D"``) and OAM index. Sorts by path, then ``l``."""

    path: str
    l: int


Config = tuple  # tuple[tuple[ModeLabel, int], ...]


def canonical_config(occupations) -> Config:
    counts: Counter = Counter()
    for item in occupations:
        if len(item) == 3:
            path, l, n = item
            mode = ModeLabel(path, int(l))
        else:
            mode, n = item
            mode = ModeLabel(mode[0], int(mode[1]))
        if mode.path not in PATHS:
            raise ValueError(f"unknown path {mode.path!r}")
        if n < 0 or int(n) != n:
            raise ValueError(f"occupation must be a non-negative integer, got {n!r}")
        counts[mode] += int(n)
    return tuple(sorted((m, n) for m, n in counts.items() if n > 0))


def _bosonic_weight(config: Config) -> float:
    return sqrt(prod(factorial(n) for _, n in config))


class FockState:
    """Immutable sparse state vector.

    Parameters
    ----------
    terms : mapping
        Configuration -> amplitude. Keys may be any iterable of
        ``(ModeLabel, count)`` or ``(path, l, count)``; they are canonicalised
        and duplicate configurations are summed.
    prune_epsilon : float
        Terms with ``|amplitude| < prune_epsilon`` are dropped.
    """

    __slots__ = ("_terms", "prune_epsilon")

    def __init__(self, terms: Mapping | None = None, prune_epsilon: float = DEFAULT_PRUNE):
        if prune_epsilon < 0:
            raise ValueError("prune_epsilon must be >= 0")
        acc: dict[Config, complex] = {}
        for occ, amp in (terms or {}).items():
            key = canonical_config(occ)
            acc[key] = acc.get(key, 0j) + complex(amp)
        self._terms = {k: v for k, v in acc.items() if abs(v) >= prune_epsilon and v != 0}
        self.prune_epsilon = prune_epsilon

    @classmethod
    def _raw(cls, terms: dict, prune_epsilon: float) -> FockState:
        # trusted constructor: keys already canonical
        obj = cls.__new__(cls)
        obj._terms = {k: v for k, v in terms.items() if abs(v) >= prune_epsilon and v != 0}
        obj.prune_epsilon = prune_epsilon
        return obj

    @property
    def terms(self) -> Mapping[Config, complex]:
        return MappingProxyType(self._terms)

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(sorted(self._terms))

    def __contains__(self, config):
        return canonical_config(config) in self._terms

    def __getitem__(self, config) -> complex:
        return self._terms.get(canonical_config(config), 0j)

    def items(self):
        return [(k, self._terms[k]) for k in sorted(self._terms)]

    def __repr__(self):
        body = ", ".join(f"{config_label(k)}: {v:.6g}" for k, v in self.items()[:6])
        more = "" if len(self) <= 6 else f", ... ({len(self)} terms)"
        return f"FockState({{{body}{more}}})"

    def __add__(self, other: FockState) -> FockState:
        return scale_add([(1, self), (1, other)])

    def __sub__(self, other: FockState) -> FockState:
        return scale_add([(1, self), (-1, other)])

    def __mul__(self, c) -> FockState:
        return scale_add([(c, self)])

    __rmul__ = __mul__

    def __neg__(self) -> FockState:
        return self * -1

    def norm(self) -> float:
        return sqrt(sum(abs(v) ** 2 for v in self._terms.values()))

    def is_zero(self) -> bool:
        return not self._terms

    def paths(self) -> set[str]:
        return {m.path for k in self._terms for m, _ in k}

    def photon_numbers(self) -> set[int]:
        return {photon_count(k) for k in self._terms}

    def allclose(self, other: FockState, atol: float = 1e-12) -> bool:
        keys = set(self._terms) | set(other._terms)
        return all(abs(self._terms.get(k, 0j) - other._terms.get(k, 0j)) <= atol for k in keys)

    def to_dict(self, convention: str = "fock") -> dict:
        """JSON-ready export in either the ``"fock"`` or ``"monomial"`` convention."""
        if convention == "fock":
            data = self.items()
        elif convention == "monomial":
            coeffs = monomial_coefficients(self)
            data = [(k, coeffs[k]) for k in sorted(coeffs)]
        else:
            raise ValueError(f"unknown convention {convention!r}")
        return {
            "convention": convention,
            "terms": [
                {
                    "occupations": [[m.path, m.l, n] for m, n in k],
                    "re": float(v.real) + 0.0,
                    "im": float(v.imag) + 0.0,
                }
                for k, v in data
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> FockState:
        convention = data.get("convention", "fock")
        coeffs = {
            tuple(tuple(o) for o in t["occupations"]): complex(t["re"], t["im"]) for t in data["terms"]
        }
        if convention == "fock":
            return cls(coeffs)
        if convention == "monomial":
            return from_monomials(coeffs)
        raise ValueError(f"unknown convention {convention!r}")


def config_label(config: Config) -> str:
    if not config:
        return "|0>"
    return "|" + ",".join(f"{m.path}{m.l:+d}" + (f"^{n}" if n > 1 else "") for m, n in config) + ">"


def photon_count(config: Config, path: str | None = None) -> int:
    return sum(n for m, n in config if path is None or m.path == path)


def vacuum() -> FockState:
    return FockState._raw({(): 1 + 0j}, DEFAULT_PRUNE)


def apply_creation(state: FockState, mode) -> FockState:
    """Apply ``a^dagger`` for ``mode``: ``|n> -> sqrt(n+1) |n+1>``."""
    mode = ModeLabel(mode[0], int(mode[1]))
    if mode.path not in PATHS:
        raise ValueError(f"unknown path {mode.path!r}")
    out: dict[Config, complex] = {}
    for config, amp in state._terms.items():
        occ = dict(config)
        n = occ.get(mode, 0)
        occ[mode] = n + 1
        key = tuple(sorted(occ.items()))
        out[key] = out.get(key, 0j) + amp * sqrt(n + 1)
    return FockState._raw(out, state.prune_epsilon)


def apply_linear_map(state: FockState, images: Mapping[ModeLabel, list[tuple[ModeLabel, complex]]]) -> FockState:
    """Substitute each creation operator by a linear combination of others.

    ``images[x] = [(y, u), ...]`` means ``x^dagger -> sum u y^dagger``; modes
    absent from ``images`` are left alone. Works on the monomial expansion,
    so the result is exact for any passive linear-optical map.
    """
    out: dict[Config, complex] = {}
    for config, amp in state._terms.items():
        coeff = amp / _bosonic_weight(config)
        factors = []
        for mode, n in config:
            factors.extend([images.get(mode, [(mode, 1.0)])] * n)
        for choice in itertools.product(*factors):
            c = coeff
            modes = []
            for m, u in choice:
                c *= u
                modes.append(m)
            key = tuple(sorted(Counter(modes).items()))
            out[key] = out.get(key, 0j) + c
    fock = {k: v * _bosonic_weight(k) for k, v in out.items()}
    return FockState._raw(fock, state.prune_epsilon)


def inner_product(lhs: FockState, rhs: FockState) -> complex:
    """``<lhs|rhs>``, antilinear in ``lhs``."""
    small, large = (lhs, rhs) if len(lhs) <= len(rhs) else (rhs, lhs)
    total = 0j
    for k in small._terms:
        if k in large._terms:
            total += lhs._terms[k].conjugate() * rhs._terms[k]
    return total


def monomial_coefficients(state: FockState) -> dict[Config, complex]:
    return {k: v / _bosonic_weight(k) for k, v in state._terms.items()}


def from_monomials(coeffs: Mapping, prune_epsilon: float = DEFAULT_PRUNE) -> FockState:
    """Inverse of :func:`monomial_coefficients`."""
    acc: dict[Config, complex] = {}
    for occ, c in coeffs.items():
        key = canonical_config(occ)
        acc[key] = acc.get(key, 0j) + complex(c)
    return FockState._raw({k: v * _bosonic_weight(k) for k, v in acc.items()}, prune_epsilon)


def scale_add(states: Iterable[tuple[complex, FockState]], prune_epsilon: float | None = None) -> FockState:
    """Linear combination ``sum c_i |psi_i>`` with canonical merging."""
    out: dict[Config, complex] = {}
    eps = prune_epsilon
    for c, st in states:
        if eps is None:
            eps = st.prune_epsilon
        for k, v in st._terms.items():
            out[k] = out.get(k, 0j) + c * v
    return FockState._raw(out, DEFAULT_PRUNE if eps is None else eps)


def normalize(state: FockState) -> tuple[FockState, float]:
    """Return ``(state / norm, norm)``; zero states raise :class:`DegenerateStateError`."""
    n = state.norm()
    if n == 0:
        raise DegenerateStateError("cannot normalize the zero state")
    return FockState._raw({k: v / n for k, v in state._terms.items()}, state.prune_epsilon), n


def prune(state: FockState, eps: float) -> FockState:
    return FockState._raw(dict(state._terms), eps)
