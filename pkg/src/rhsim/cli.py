"""Command-line front end.

Exit codes: 0 success, 1 configuration error, 2 budget or timing
violation.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import defense as defense_mod
from . import disturbance, engine, profiles, trace


def _load_profile(spec: str) -> disturbance.ChipProfile:
    if spec in profiles.PROFILE_BUILDERS:
        return profiles.get_profile(spec)
    return disturbance.load_profile(spec)


def _load_defense(path: str | None, rows_per_bank: int = 2**16):
    if path is None:
        return None
    return defense_mod.load_defense_config(path, rows_per_bank)


def _parse_axis(text: str) -> list[float]:
    """Either a comma list ("1e6,2e6") or "lo:hi:n" geometric spacing."""
    if ":" in text:
        lo, hi, n = text.split(":")
        return [float(v) for v in np.geomspace(float(lo), float(hi), int(n))]
    return [float(v) for v in text.split(",")]


def _write_out(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _cmd_compile(args) -> int:
    config, timing = engine.load_attack_config(args.config)
    compiled = trace.compile_counter_bypass(config, timing)
    compiled.write(args.output)
    print(f"wrote {len(compiled)} commands to {args.output}")
    return 0


def _cmd_run(args) -> int:
    config, timing = engine.load_attack_config(args.config)
    profile = _load_profile(args.profile)
    state = _load_defense(args.defense, config.geometry.rows_per_bank)
    report = engine.run_attack(profile, config, state, timing, seed=args.seed)
    _write_out(report.to_csv(), args.output)
    if state is not None and args.nrr_log:
        _write_out(defense_mod.nrr_log_csv(state), args.nrr_log)
    return 0


def _cmd_sweep(args) -> int:
    profile = _load_profile(args.profile)
    defenses = {}
    for path in args.defense or []:
        state = defense_mod.load_defense_config(path)
        defenses[engine.defense_name(state)] = state
    surface = engine.sweep(
        profile, _parse_axis(args.S), _parse_axis(args.T),
        defenses=defenses, seed=args.seed)
    _write_out(surface.to_csv(), args.output)
    if args.emit_plot_data:
        _write_out(surface.to_plot_matrix(), args.emit_plot_data)
    return 0


def _cmd_calibrate(args) -> int:
    anchors = []
    with open(args.anchors) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line or line.lower().startswith("s,"):
                continue
            s, t, f = line.split(",")
            anchors.append((float(s), float(t), float(f)))
    profile = disturbance.calibrate(anchors, args.cells_per_row,
                                    vendor_id=args.vendor, seed=args.seed)
    disturbance.save_profile(profile, args.output)
    print(f"fit mean relative error {profile.fit_mre:.4f}; "
          f"profile written to {args.output}")
    return 0


def _cmd_classify(args) -> int:
    profile = _load_profile(args.profile)
    result = disturbance.classify_chip(profile, args.t_mac, args.flip_target)
    line = result.verdict
    if result.witness:
        line += f" witness S={result.witness[0]:g} T={result.witness[1]:g}"
    if result.t_dbl is not None:
        line += f" t_dbl={result.t_dbl:g}"
    if result.reason:
        line += f" ({result.reason})"
    print(line)
    return 0


def _parse_surface_csv(path: str) -> engine.Surface:
    cells = []
    names: tuple[str, ...] = ()
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        names = tuple(h.removeprefix("detected_")
                      for h in header if h.startswith("detected_"))
        for line in fh:
            parts = line.strip().split(",")
            if len(parts) < 4:
                continue
            detected = {n: bool(int(v)) for n, v in zip(names, parts[4:])}
            cells.append(engine.SurfaceCell(
                float(parts[0]), float(parts[1]), float(parts[2]),
                int(parts[3]), detected))
    return engine.Surface(cells, names)


def _cmd_optimal(args) -> int:
    surface = _parse_surface_csv(args.surface)
    best = engine.find_optimal_set(surface, args.flip_target)
    if best is None:
        print("none")
        return 0
    print(f"S={best[0]:g} T={best[1]:g}")
    return 0


def _cmd_feasibility(args) -> int:
    profile = _load_profile(args.profile)
    state = _load_defense(args.defense)
    targets = []
    with open(args.cells) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line or line.lower().startswith("bank,"):
                continue
            parts = line.split(",")
            if len(parts) < 4:
                raise ValueError(f"malformed cell line {line!r}")
            current = int(parts[4]) if len(parts) > 4 and parts[4] else None
            targets.append(engine.CellTarget(
                engine.RowId(int(parts[0]), int(parts[1])),
                int(parts[2]), int(parts[3]), current))
    verdicts = engine.feasibility(profile, state, targets, seed=args.seed,
                                  max_hc=args.max_hc,
                                  attack_model=args.attack_model)
    _write_out(engine.feasibility_csv(verdicts), args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rhsim",
        description="Multi-sided hammering simulator with counter defenses")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="compile an attack into a trace file")
    p.add_argument("config", help="attack config file")
    p.add_argument("-o", "--output", required=True, help="trace file path")
    p.set_defaults(func=_cmd_compile)

    p = sub.add_parser("run", help="simulate one attack end to end")
    p.add_argument("config", help="attack config file")
    p.add_argument("--profile", required=True,
                   help="profile preset name or file")
    p.add_argument("--defense", help="defense config file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", help="report CSV (default stdout)")
    p.add_argument("--nrr-log", help="write the NRR event log CSV here")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="evaluate an (S, T) grid")
    p.add_argument("--profile", required=True)
    p.add_argument("--S", required=True,
                   help="comma list or lo:hi:n geometric axis")
    p.add_argument("--T", required=True)
    p.add_argument("--defense", action="append",
                   help="defense config file (repeatable)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", help="surface CSV (default stdout)")
    p.add_argument("--emit-plot-data",
                   help="also write a gnuplot-compatible matrix here")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("calibrate", help="fit a profile to anchors")
    p.add_argument("anchors", help="CSV of S,T,flips rows")
    p.add_argument("-o", "--output", required=True, help="profile file path")
    p.add_argument("--cells-per-row", type=int, default=65536)
    p.add_argument("--vendor", default="calibrated")
    p.add_argument("--seed", type=int, default=12345)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("classify", help="bypass / failed-bypass verdict")
    p.add_argument("--profile", required=True)
    p.add_argument("--t-mac", type=float, required=True)
    p.add_argument("--flip-target", type=float, required=True)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("optimal", help="best sub-threshold cell of a surface")
    p.add_argument("surface", help="surface CSV from the sweep command")
    p.add_argument("--flip-target", type=float, required=True)
    p.set_defaults(func=_cmd_optimal)

    p = sub.add_parser("feasibility", help="classify target cells")
    p.add_argument("--profile", required=True)
    p.add_argument("--defense", help="defense config file")
    p.add_argument("cells", help="CSV of bank,row,cell,direction[,current]")
    p.add_argument("--attack-model", default="aavaa",
                   choices=["aavaa", "double_sided", "arvra"],
                   help="restrict the hammer pattern the attacker may use")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-hc", type=int, default=20_000_000)
    p.add_argument("-o", "--output", help="verdict CSV (default stdout)")
    p.set_defaults(func=_cmd_feasibility)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except trace.BudgetError as exc:
        print(f"budget error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
