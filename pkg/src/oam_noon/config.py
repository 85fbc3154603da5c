"""JSON run-configuration parsing.

Schema (version 1)::

    {
      "schema_version": 1,
      "pumps": [[{"l": 0, "p": 0, "re": 1.0, "im": 0.0}], ...],  # one or two pumps
      "waists": {"pump1": 1.0, "pump2": 1.0, "signal": 1.0, "idler": 1.0},
      "truncation": {"l_max": 3, "p_max": 0},
      "quadrature": {"nodes": 128, "cutoff_multiplier": 8.0, "rel_tol": 1e-10},
      "projectors": {"D": [{"l": -1, "re": 1.0, "im": 0.0}], "A": [...]},
      "overrides": "unit" | {"C": [{"l_s":..,"p_s":..,"l_i":..,"p_i":..,"re":..,"im":..}], "gamma": [...]},
      "tolerances": {"verify": 1e-10, "fidelity_threshold": 0.999},
      "spectrum": {"target_cells": [[-1, -1], [0, 0], [1, 1]]},
      "search": {"start_from_config": false, "pump_modes": [], "success_weight": 0.0},
      "seed": 0
    }

Only ``schema_version``, ``pumps`` and ``truncation`` are always required;
``projectors`` is needed by the pipeline and the optimizer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ConfigError
from .lg_engine import PumpSpec, QuadratureSpec
from .optics import Projector
from .protocol import ScenarioConfig, unit_override

SCHEMA_VERSION = 1


@dataclass
class RunConfig:
    pump1: PumpSpec
    pump2: PumpSpec
    signal_waist: float | None
    idler_waist: float | None
    l_max: int
    p_max: int
    quad: QuadratureSpec
    projectors: dict[str, Projector] | None
    overrides: dict | None
    verify_tol: float | None
    fidelity_threshold: float
    target_cells: list[tuple[int, int]] | None
    seed: int
    search: dict[str, Any] = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    def scenario(self) -> ScenarioConfig:
        if not self.projectors:
            raise ConfigError("projectors: section required for this command")
        try:
            return ScenarioConfig(
                proj_D=self.projectors["D"],
                proj_A=self.projectors["A"],
                pump1=self.pump1,
                pump2=self.pump2,
                signal_waist=self.signal_waist,
                idler_waist=self.idler_waist,
                l_max=self.l_max,
                p_max=self.p_max,
                quad=self.quad,
                amplitude_override=self.overrides,
                tolerance=self.verify_tol,
            )
        except ValueError as exc:
            raise ConfigError(f"config: {exc}") from exc


def _get(section: dict, key: str, where: str, kind=None, default=...):
    if key not in section:
        if default is ...:
            raise ConfigError(f"{where}.{key}: missing required field")
        return default
    value = section[key]
    if kind is None or (value is None and default is None):
        return value
    if not isinstance(value, kind) or (isinstance(value, bool) and kind is not bool):
        raise ConfigError(f"{where}.{key}: expected {getattr(kind, '__name__', kind)}, got {value!r}")
    return value


_NUM = (int, float)


def _pump(items, where: str, w0: float) -> PumpSpec:
    if not isinstance(items, list) or not items:
        raise ConfigError(f"{where}: pump needs a nonempty list of components")
    modes = []
    for i, comp in enumerate(items):
        w = f"{where}[{i}]"
        if not isinstance(comp, dict):
            raise ConfigError(f"{w}: expected an object")
        modes.append(
            (_get(comp, "l", w, int), _get(comp, "p", w, int, 0),
             complex(_get(comp, "re", w, _NUM, 0.0), _get(comp, "im", w, _NUM, 0.0)))
        )
    try:
        return PumpSpec.from_modes(modes, w0=w0)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _projector(items, path: str) -> Projector:
    where = f"projectors.{path}"
    if not isinstance(items, list) or not items:
        raise ConfigError(f"{where}: needs a nonempty list of weights")
    weights = []
    for i, item in enumerate(items):
        w = f"{where}[{i}]"
        if not isinstance(item, dict):
            raise ConfigError(f"{w}: expected an object")
        weights.append((_get(item, "l", w, int), complex(_get(item, "re", w, _NUM, 0.0), _get(item, "im", w, _NUM, 0.0))))
    try:
        return Projector.of(path, weights)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _overrides(value, l_max: int):
    if value is None:
        return None
    if value == "unit":
        return unit_override(l_max)
    if not isinstance(value, dict):
        raise ConfigError("overrides: expected \"unit\" or an object with C/gamma lists")
    out = {}
    for name, items in value.items():
        if name not in ("C", "gamma"):
            raise ConfigError(f"overrides.{name}: unknown table (use C or gamma)")
        entries = {}
        for i, item in enumerate(items):
            w = f"overrides.{name}[{i}]"
            key = tuple(_get(item, k, w, int, 0 if k.startswith("p") else ...) for k in ("l_s", "p_s", "l_i", "p_i"))
            entries[key] = complex(_get(item, "re", w, _NUM, 0.0), _get(item, "im", w, _NUM, 0.0))
        out[name] = entries
    return out


def parse_config(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config: top level must be an object")
    version = _get(data, "schema_version", "config", int)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"config.schema_version: unsupported version {version}")

    waists = _get(data, "waists", "config", dict, {})
    w_p1 = float(_get(waists, "pump1", "waists", _NUM, 1.0))
    w_p2 = float(_get(waists, "pump2", "waists", _NUM, w_p1))
    w_s = _get(waists, "signal", "waists", _NUM, None)
    w_i = _get(waists, "idler", "waists", _NUM, None)
    for name, w in (("pump1", w_p1), ("pump2", w_p2), ("signal", w_s), ("idler", w_i)):
        if w is not None and not w > 0:
            raise ConfigError(f"waists.{name}: must be > 0, got {w}")

    pumps = _get(data, "pumps", "config", list)
    if not pumps or len(pumps) > 2:
        raise ConfigError("config.pumps: expected one or two pump component lists")
    pump1 = _pump(pumps[0], "pumps[0]", w_p1)
    pump2 = _pump(pumps[1], "pumps[1]", w_p2) if len(pumps) == 2 else pump1.with_waist(w_p2)

    trunc = _get(data, "truncation", "config", dict)
    l_max = _get(trunc, "l_max", "truncation", int)
    p_max = _get(trunc, "p_max", "truncation", int, 0)
    if l_max < 0 or p_max < 0:
        raise ConfigError("truncation: l_max and p_max must be >= 0")
    for where, pump in (("pumps[0]", pump1), ("pumps[1]", pump2)):
        if pump.max_abs_l > l_max:
            raise ConfigError(f"{where}: pump |l|={pump.max_abs_l} outside truncation.l_max={l_max}")

    q = _get(data, "quadrature", "config", dict, {})
    try:
        quad = QuadratureSpec(
            _get(q, "nodes", "quadrature", int, 128),
            float(_get(q, "cutoff_multiplier", "quadrature", _NUM, 8.0)),
            float(_get(q, "rel_tol", "quadrature", _NUM, 1e-10)),
        )
    except ValueError as exc:
        raise ConfigError(f"quadrature: {exc}") from exc

    projectors = None
    if "projectors" in data:
        sec = _get(data, "projectors", "config", dict)
        projectors = {p: _projector(_get(sec, p, "projectors", list), p) for p in ("D", "A")}
        for p, proj in projectors.items():
            bad = [l for l in proj.ls if abs(l) > l_max]
            if bad:
                raise ConfigError(f"projectors.{p}: OAM {bad} outside truncation.l_max={l_max}")

    tol = _get(data, "tolerances", "config", dict, {})
    cells = None
    if "spectrum" in data:
        spec = _get(data, "spectrum", "config", dict)
        if "target_cells" in spec:
            raw_cells = _get(spec, "target_cells", "spectrum", list)
            try:
                cells = [(int(a), int(b)) for a, b in raw_cells]
            except (TypeError, ValueError) as exc:
                raise ConfigError("spectrum.target_cells: expected [[l_s, l_i], ...]") from exc

    search = _get(data, "search", "config", dict, {})
    return RunConfig(
        pump1=pump1,
        pump2=pump2,
        signal_waist=None if w_s is None else float(w_s),
        idler_waist=None if w_i is None else float(w_i),
        l_max=l_max,
        p_max=p_max,
        quad=quad,
        projectors=projectors,
        overrides=_overrides(data.get("overrides"), l_max),
        verify_tol=_get(tol, "verify", "tolerances", _NUM, None),
        fidelity_threshold=float(_get(tol, "fidelity_threshold", "tolerances", _NUM, 0.999)),
        target_cells=cells,
        seed=_get(data, "seed", "config", int, 0),
        search=dict(search),
        raw=data,
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return parse_config(data)
