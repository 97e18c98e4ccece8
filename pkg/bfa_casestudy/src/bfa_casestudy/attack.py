"""Attack loop driving the hammering simulator through its CLI.

Each iteration ranks candidate bits, asks the simulator whether the
candidates' DRAM cells are reachable under the chosen hammer pattern
and defense, and applies the best-ranked flip only when the simulator
says it is flippable.
"""

from __future__ import annotations

import csv
import io
import math
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .placement import PlacementFile
from .quantize import QuantizedModel
from .ranking import rank_bits

ATTACK_MODELS = {"aavaa": "aavaa", "double_sided": "double_sided",
                 "doublesided": "double_sided"}


@dataclass(frozen=True)
class TrajectoryPoint:
    attempt: int
    applied: bool
    accuracy: float
    loss: float


def trajectory_csv(points: list[TrajectoryPoint]) -> str:
    buf = io.StringIO()
    buf.write("attempt,applied_flag,accuracy,loss\n")
    for p in points:
        buf.write(f"{p.attempt},{int(p.applied)},{p.accuracy:.6f},"
                  f"{p.loss:.6f}\n")
    return buf.getvalue()


def write_sharp_profile(path, t_mac: int, cells_per_row: int = 1024) -> None:
    """Chip profile with a narrow threshold band just above t_mac.

    Double-sided hammering capped at t_mac - 1 per row cannot reach any
    cell, while joint near plus edge hammering at the same per-row cap
    clears the whole band.
    """
    lines = [
        "vendor bfa-sharp",
        "mode analytic",
        "alpha 0.5",
        "gamma 0.5",
        f"mu {math.log(1.5 * t_mac)!r}",
        "sigma 0.08",
        f"cells_per_row {cells_per_row}",
        f"vulnerable_cells {float(cells_per_row)!r}",
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def write_defense_config(path, t_mac: int) -> None:
    Path(path).write_text(f"kind per_row\nt_mac {t_mac}\n")


def _query_feasibility(cells_text: str, profile_path: str,
                       defense_path: str | None, attack_model: str,
                       seed: int, simulator: str,
                       workdir: Path) -> dict[tuple[int, int, int], str]:
    cells_path = workdir / "cells.csv"
    out_path = workdir / "verdicts.csv"
    cells_path.write_text(cells_text)
    cmd = [simulator, "feasibility", "--profile", str(profile_path),
           "--attack-model", attack_model, "--seed", str(seed),
           "-o", str(out_path), str(cells_path)]
    if defense_path is not None:
        cmd[2:2] = ["--defense", str(defense_path)]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise RuntimeError(
            f"simulator invocation failed (exit {proc.returncode}): "
            f"{proc.stderr.strip()}")
    verdicts = {}
    with open(out_path, newline="") as fh:
        for rec in csv.DictReader(fh):
            key = (int(rec["bank"]), int(rec["row"]), int(rec["cell"]))
            verdicts[key] = rec["verdict"]
    return verdicts


def attack_loop(model: QuantizedModel, placement: PlacementFile,
                attack_model: str, defense_path: str | None,
                max_flips: int, X: np.ndarray, y: np.ndarray,
                profile_path: str, candidates_per_layer: int = 8,
                seed: int = 0,
                simulator: str = "rhsim") -> list[TrajectoryPoint]:
    """Greedy bit-flip attack; returns the accuracy trajectory.

    Attempt 0 is the clean model. Each later attempt either applies the
    best-ranked feasible flip or records a blocked try.
    """
    try:
        attack_model = ATTACK_MODELS[attack_model.lower()]
    except KeyError:
        raise ValueError(f"unknown attack model {attack_model!r}") from None
    points = [TrajectoryPoint(0, False, model.accuracy(X, y),
                              model.loss(X, y))]
    cache: dict[str, dict] = {}
    with tempfile.TemporaryDirectory(prefix="bfa-") as tmp:
        workdir = Path(tmp)
        for attempt in range(1, max_flips + 1):
            targets = rank_bits(model, X, y, candidates_per_layer)
            lines = ["bank,row,cell,direction,current"]
            for t in targets:
                bank, row, cell = placement.location(t.layer, t.out,
                                                     t.inp, t.bit)
                lines.append(f"{bank},{row},{cell},"
                             f"{t.required_direction},"
                             f"{1 - t.required_direction}")
            cells_text = "\n".join(lines) + "\n"
            if cells_text not in cache:
                cache[cells_text] = _query_feasibility(
                    cells_text, profile_path, defense_path, attack_model,
                    seed, simulator, workdir)
            best = targets[0]
            loc = placement.location(best.layer, best.out, best.inp,
                                     best.bit)
            applied = cache[cells_text][loc] == "flippable"
            if applied:
                model.flip_bit(best.layer, best.out, best.inp, best.bit)
            points.append(TrajectoryPoint(attempt, applied,
                                          model.accuracy(X, y),
                                          model.loss(X, y)))
    return points
