"""Command line driver for the quantized-network bit-flip case study."""

from __future__ import annotations

import argparse
import sys
import tempfile
from pathlib import Path

from .attack import (attack_loop, trajectory_csv, write_defense_config,
                     write_sharp_profile)
from .data import make_dataset, train_float_mlp
from .placement import PlacementFile
from .quantize import QuantizedModel


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bfa-casestudy",
        description="Bit-flip attack on a small quantized classifier, "
                    "gated by the rhsim feasibility interface")
    parser.add_argument("--attack-model", default="aavaa",
                        choices=["aavaa", "double_sided"])
    parser.add_argument("--no-defense", action="store_true",
                        help="disable the activation counter")
    parser.add_argument("--t-mac", type=int, default=100_000)
    parser.add_argument("--max-flips", type=int, default=25)
    parser.add_argument("--hidden", type=int, default=16)
    parser.add_argument("--candidates-per-layer", type=int, default=8)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--simulator", default="rhsim",
                        help="simulator executable name or path")
    parser.add_argument("-o", "--output",
                        help="trajectory CSV (default stdout)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    X, y, X_test, y_test = make_dataset(seed=args.seed)
    weights, biases = train_float_mlp(X, y, hidden=args.hidden,
                                      seed=args.seed)
    model = QuantizedModel(weights, biases)
    shapes = [q.shape for q in model.qweights]
    placement = PlacementFile.generate(shapes, seed=args.seed)
    with tempfile.TemporaryDirectory(prefix="bfa-demo-") as tmp:
        profile = Path(tmp) / "profile.txt"
        write_sharp_profile(profile, args.t_mac)
        defense = None
        if not args.no_defense:
            defense = Path(tmp) / "defense.txt"
            write_defense_config(defense, args.t_mac)
        points = attack_loop(
            model, placement, args.attack_model, defense, args.max_flips,
            X, y, profile, candidates_per_layer=args.candidates_per_layer,
            seed=args.seed, simulator=args.simulator)
    text = trajectory_csv(points)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    applied = sum(p.applied for p in points)
    print(f"applied {applied}/{args.max_flips} flips; "
          f"test accuracy {model.accuracy(X_test, y_test):.3f} "
          f"(clean {points[0].accuracy:.3f} on the attack batch)",
          file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
