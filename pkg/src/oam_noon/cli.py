"""Command-line entry point: ``spectrum | evolve | verify | optimize``.

Exit codes: 0 success/pass, 1 verification or optimizer threshold failed,
2 configuration error, 3 quadrature non-convergence.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ._fmt import complex_pair, dumps
from .analysis import mes_flatness, schmidt_decomposition, spiral_spectrum
from .config import RunConfig, load_config
from .errors import ConfigError, ConvergenceError
from .fock import FockState, normalize
from .lg_engine import coincidence_table
from .protocol import SCENARIOS, run_named_scenario, run_pipeline
from .search import TARGETS, SearchSpace, named_target, optimize

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _pump_dict(pump) -> list[dict]:
    return [{"l": m.l, "p": m.p, **complex_pair(a)} for m, a in pump.components]


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def default_cells(cfg: RunConfig) -> list[tuple[int, int]]:
    """Diagonal cells ``(l_p/2, l_p/2)`` for each even pump OAM."""
    return sorted({(m.l // 2, m.l // 2) for m, _ in cfg.pump1.components if m.l % 2 == 0})


def cmd_spectrum(config: str, out: str) -> int:
    cfg = load_config(config)
    w_s = cfg.signal_waist or cfg.pump1.waist
    w_i = cfg.idler_waist or cfg.pump1.waist
    table = coincidence_table(cfg.pump1, cfg.l_max, cfg.p_max, (w_s, w_i), cfg.quad)
    spectrum = spiral_spectrum(table)
    cells = cfg.target_cells or default_cells(cfg)
    out_path = Path(out)
    _write(out_path, spectrum.to_csv())
    meta = {
        "pump": _pump_dict(cfg.pump1),
        "waists": {"pump": table.waists[0], "signal": table.waists[1], "idler": table.waists[2]},
        "truncation": {"l_max": cfg.l_max, "p_max": cfg.p_max},
        "target_cells": [list(c) for c in cells],
        "flatness": mes_flatness(spectrum, cells) if cells else None,
        "support_sums": sorted({a + b for a, b in spectrum.support()}),
    }
    _write(out_path.with_suffix(".json"), dumps(meta))
    _write(out_path.with_suffix(".table.csv"), table.to_csv())
    return EXIT_OK


def cmd_evolve(config: str, out: str) -> int:
    cfg = load_config(config)
    stages = run_pipeline(cfg.scenario())
    report = {
        "term_counts": stages.term_counts(),
        "success_probability": stages.success_probability,
    }
    if stages.psi_f.is_zero():
        report["psi_f"] = None
    else:
        psi = stages.psi_f_normalized
        report["psi_f"] = {"fock": psi.to_dict("fock"), "monomial": psi.to_dict("monomial")}
        report["schmidt"] = schmidt_decomposition(psi).to_dict()
    _write(Path(out), dumps(report))
    return EXIT_OK


def cmd_verify(scenario: str, out: str) -> int:
    if scenario not in SCENARIOS:
        raise ConfigError(f"--scenario: unknown scenario {scenario!r}; choose from {', '.join(sorted(SCENARIOS))}")
    stages, report = run_named_scenario(scenario)
    payload = {
        "scenario": scenario,
        "term_counts": stages.term_counts(),
        "success_probability": stages.success_probability,
        "verification": report.to_dict(),
    }
    _write(Path(out), dumps(payload))
    return EXIT_OK if report.passed else EXIT_FAIL


def _load_target(spec: str) -> FockState:
    if spec in TARGETS:
        return named_target(spec)
    path = Path(spec)
    if not path.exists():
        raise ConfigError(f"--target: {spec!r} is neither a named target ({', '.join(sorted(TARGETS))}) nor a file")
    try:
        state = FockState.from_dict(json.loads(path.read_text()))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"--target {spec}: not a state JSON ({exc})") from exc
    return normalize(state)[0]


def cmd_optimize(config: str, target: str, budget: int, seed: int | None, out: str) -> int:
    if budget < 1:
        raise ConfigError(f"--budget must be >= 1, got {budget}")
    cfg = load_config(config)
    scen = cfg.scenario()
    tgt = _load_target(target)
    space = SearchSpace.from_config(scen, tuple(cfg.search.get("pump_modes", ())))
    x0 = None
    if cfg.search.get("start_from_config"):
        blocks = [[w for _, w in scen.proj_D.weights], [w for _, w in scen.proj_A.weights]]
        if space.pump_modes:
            blocks.append([1.0] * len(space.pump_modes))
        x0 = space.encode(*blocks)
    result = optimize(
        scen,
        tgt,
        space,
        budget=budget,
        seed=cfg.seed if seed is None else seed,
        x0=x0,
        success_weight=float(cfg.search.get("success_weight", 0.0)),
    )
    payload = result.to_dict()
    payload["target"] = target
    payload["fidelity_threshold"] = cfg.fidelity_threshold
    payload["passed"] = result.best_objective >= cfg.fidelity_threshold
    out_path = Path(out)
    _write(out_path, dumps(payload))
    _write(out_path.with_suffix(".trace.csv"), result.trace_csv())
    return EXIT_OK if payload["passed"] else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oam-noon", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="spiral spectrum CSV (+ JSON sidecar) for pump 1")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("evolve", help="run the device pipeline and report the heralded state")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("verify", help="check a named closed-form scenario")
    p.add_argument("--scenario", required=True, help=", ".join(sorted(SCENARIOS)))
    p.add_argument("--out", required=True)

    p = sub.add_parser("optimize", help="search projector weights for a target state")
    p.add_argument("--config", required=True)
    p.add_argument("--target", required=True, help="named target or state JSON file")
    p.add_argument("--budget", type=int, default=2000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "spectrum":
            return cmd_spectrum(args.config, args.out)
        if args.command == "evolve":
            return cmd_evolve(args.config, args.out)
        if args.command == "verify":
            return cmd_verify(args.scenario, args.out)
        return cmd_optimize(args.config, args.target, args.budget, args.seed, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        print(f"  estimate (n nodes):  {exc.coarse!r}", file=sys.stderr)
        print(f"  estimate (2n nodes): {exc.fine!r}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
