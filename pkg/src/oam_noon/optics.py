"""Device transformations: pair creation, 50:50 beam splitters, heralding.

Beam-splitter convention: transmission ``1``, reflection ``-i``, i.e.
``x^dagger -> (x^dagger - i y^dagger)/sqrt(2)`` and
``y^dagger -> (y^dagger - i x^dagger)/sqrt(2)`` for every OAM index.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt
from typing import Iterable, Mapping

from .errors import ContractError, DegenerateStateError
from .fock import (
    PATHS,
    FockState,
    ModeLabel,
    apply_creation,
    apply_linear_map,
    normalize,
    photon_count,
    scale_add,
)
from .lg_engine import CoincidenceTable

__all__ = [
    "Projector",
    "HeraldResult",
    "apply_spdc",
    "apply_beamsplitter",
    "coincidence_filter",
    "herald",
]

HERALD_PATHS = ("A", "D")


@dataclass(frozen=True)
class Projector:
    """Heralding projector ``|P> = sum_l conj(w_l) |l>`` on one path.

    ``weights`` holds the ``w_l`` that multiply the amplitudes when the bra
    ``<P|`` is applied.
    """

    path: str
    weights: tuple[tuple[int, complex], ...]
    normalized: bool = False

    def __post_init__(self):
        if self.path not in HERALD_PATHS:
            raise ValueError(f"projector path must be one of {HERALD_PATHS}, got {self.path!r}")
        if not self.weights:
            raise ValueError("projector needs at least one weight")
        ls = [l for l, _ in self.weights]
        if len(set(ls)) != len(ls):
            raise ValueError(f"duplicate OAM index in projector weights {ls}")
        if all(w == 0 for _, w in self.weights):
            raise ValueError("projector weights are all zero")
        if self.normalized:
            total = sum(abs(w) ** 2 for _, w in self.weights)
            if abs(total - 1.0) > 1e-12:
                raise ValueError(f"projector flagged normalized but sum |w|^2 = {total!r}")

    @classmethod
    def of(cls, path: str, weights: Mapping[int, complex] | Iterable[tuple[int, complex]]) -> Projector:
        items = weights.items() if isinstance(weights, Mapping) else weights
        return cls(path, tuple((int(l), complex(w)) for l, w in items))

    @property
    def ls(self) -> list[int]:
        return [l for l, _ in self.weights]

    def weight(self, l: int) -> complex:
        for ll, w in self.weights:
            if ll == l:
                return w
        return 0j

    def normalize(self) -> Projector:
        if self.normalized:
            return self
        # rescale by the peak first so tiny weights do not underflow the norm
        peak = max(abs(w) for _, w in self.weights)
        scaled = [(l, w / peak) for l, w in self.weights]
        n = sqrt(sum(abs(w) ** 2 for _, w in scaled))
        return Projector(self.path, tuple((l, w / n) for l, w in scaled), normalized=True)

    def on(self, path: str) -> Projector:
        """Same weights on another heralding path."""
        return Projector(path, self.weights, self.normalized)


def apply_spdc(
    state: FockState,
    table: CoincidenceTable,
    signal_path: str,
    idler_path: str,
    signal_sign_convention: bool = True,
) -> FockState:
    """Add one down-converted pair: ``sum C[l_s, l_i] s^dagger_{l_s} i^dagger_{l_i}``.

    Only ``p_s = p_i = 0`` entries are used; the device modes carry OAM only.
    With ``signal_sign_convention`` (default) the signal photon is labelled
    by the table's ``l_s`` as is, so a ``C[-l, l]`` entry creates
    ``a^dagger_{-l} b^dagger_{l}``. Disabling it stores the signal as
    ``-l_s`` (mirror labelling).
    """
    if signal_path == idler_path:
        raise ValueError("signal and idler paths must differ")
    entries = [(k, v) for k, v in table.items() if k[1] == 0 and k[3] == 0]
    if not entries:
        raise DegenerateStateError("coincidence table has no p=0 entries")
    parts = []
    for (l_s, _, l_i, _), amp in entries:
        ls = l_s if signal_sign_convention else -l_s
        pair = apply_creation(apply_creation(state, ModeLabel(signal_path, ls)), ModeLabel(idler_path, l_i))
        parts.append((amp, pair))
    return scale_add(parts)


def apply_beamsplitter(state: FockState, path_x: str, path_y: str, inverse: bool = False) -> FockState:
    """50:50 beam splitter between two paths, acting independently on each ``l``.

    ``inverse=True`` applies the adjoint map (reflection ``+i``).
    """
    if path_x == path_y:
        raise ValueError("beam splitter paths must differ")
    if path_x not in PATHS or path_y not in PATHS:
        raise ValueError(f"unknown path in ({path_x!r}, {path_y!r})")
    r = (1j if inverse else -1j) / sqrt(2)
    t = 1 / sqrt(2)
    images = {}
    for config in state.terms:
        for mode, _ in config:
            if mode.path == path_x:
                images[mode] = [(mode, t), (ModeLabel(path_y, mode.l), r)]
            elif mode.path == path_y:
                images[mode] = [(mode, t), (ModeLabel(path_x, mode.l), r)]
    return apply_linear_map(state, images)


def coincidence_filter(state: FockState, required: Mapping[str, int] | Iterable[tuple[str, int]]) -> FockState:
    """Keep terms whose per-path photon totals equal every requirement. No renormalisation."""
    req = dict(required.items() if isinstance(required, Mapping) else required)
    kept = {k: v for k, v in state.terms.items() if all(photon_count(k, p) == n for p, n in req.items())}
    return FockState._raw(kept, state.prune_epsilon)


@dataclass(frozen=True)
class HeraldResult:
    state: FockState
    success_amplitude: float

    @property
    def success_probability(self) -> float:
        return self.success_amplitude**2

    @property
    def normalized(self) -> FockState:
        return normalize(self.state)[0]


def herald(state: FockState, proj_D: Projector, proj_A: Projector) -> HeraldResult:
    """Contract the single A and D photons against ``<P_D| <P_A|``.

    Every term must hold exactly one photon on A and one on D (run
    :func:`coincidence_filter` first), otherwise :class:`ContractError`.
    Projectors are normalised before use. The returned state lives on
    paths B and C and is not renormalised; its norm is the success
    amplitude.
    """
    if proj_D.path != "D" or proj_A.path != "A":
        raise ValueError("expected projectors on paths D and A")
    pd = proj_D.normalize()
    pa = proj_A.normalize()
    wd = dict(pd.weights)
    wa = dict(pa.weights)
    out: dict = {}
    for config, amp in state.terms.items():
        a_modes = [m for m, n in config if m.path == "A" for _ in range(n)]
        d_modes = [m for m, n in config if m.path == "D" for _ in range(n)]
        if len(a_modes) != 1 or len(d_modes) != 1:
            raise ContractError(
                f"herald needs exactly one photon on A and on D; term has {len(a_modes)} on A, {len(d_modes)} on D"
            )
        c = wd.get(d_modes[0].l, 0) * wa.get(a_modes[0].l, 0)
        if c == 0:
            continue
        rest = tuple((m, n) for m, n in config if m.path not in HERALD_PATHS)
        out[rest] = out.get(rest, 0j) + c * amp
    residual = FockState._raw(out, state.prune_epsilon)
    return HeraldResult(residual, residual.norm())
