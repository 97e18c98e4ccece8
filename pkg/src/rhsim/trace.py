"""DDR4 command trace compilation, timing validation, and hammer budgets.

A hammer iteration is one ACT/PRE pair occupying tRAS + tRP clock ticks.
Traces are stored column-wise in numpy arrays so multi-million-command
traces stay cheap; the line format "TICK KIND BANK ROW [COL]" is the
export surface for tester toolchains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

ACT, PRE, RD, WR, REF, NRR = "ACT", "PRE", "RD", "WR", "REF", "NRR"
_KINDS = (ACT, PRE, RD, WR, REF, NRR)
_KIND_CODE = {k: i for i, k in enumerate(_KINDS)}


class BudgetError(ValueError):
    """Hammer counts exceed what fits in one refresh window."""


@dataclass(frozen=True)
class TimingParams:
    tCK_ns: float = 0.833  # DDR4-2400
    tRAS_ck: int = 39
    tRP_ck: int = 12
    sleep_ck: int = 5
    tREFW_ms: float = 64.0
    refresh_enabled: bool = False

    def __post_init__(self):
        if not 36 <= self.tRAS_ck <= 48:
            raise ValueError("tRAS_ck outside the DDR4-plausible 36..48 range")
        if min(self.tCK_ns, self.tRP_ck, self.sleep_ck, self.tREFW_ms) <= 0:
            raise ValueError("all timing durations must be positive")

    @property
    def iteration_ck(self) -> int:
        """Ticks consumed by one ACT/PRE hammer iteration."""
        return self.tRAS_ck + self.tRP_ck

    @property
    def tREFW_ck(self) -> float:
        return self.tREFW_ms * 1e6 / self.tCK_ns


@dataclass(frozen=True)
class Command:
    kind: str
    bank: int
    row: int
    tick: int
    col: int | None = None

    def to_line(self) -> str:
        base = f"{self.tick} {self.kind} {self.bank} {self.row}"
        return base if self.col is None else f"{base} {self.col}"


class CommandTrace:
    """Ordered command sequence with its timing context."""

    def __init__(self, timing: TimingParams, interleaving: str = "round_robin"):
        self.timing = timing
        self.interleaving = interleaving
        self.ticks = np.empty(0, dtype=np.int64)
        self.kinds = np.empty(0, dtype=np.int8)
        self.banks = np.empty(0, dtype=np.int32)
        self.rows = np.empty(0, dtype=np.int32)
        self.cols = np.empty(0, dtype=np.int32)  # -1 where absent

    def __len__(self) -> int:
        return len(self.ticks)

    def append_arrays(self, ticks, kinds, banks, rows, cols=None) -> None:
        n = len(ticks)
        self.ticks = np.concatenate([self.ticks, np.asarray(ticks, np.int64)])
        self.kinds = np.concatenate([self.kinds, np.asarray(kinds, np.int8)])
        self.banks = np.concatenate([self.banks, np.asarray(banks, np.int32)])
        self.rows = np.concatenate([self.rows, np.asarray(rows, np.int32)])
        if cols is None:
            cols = np.full(n, -1, np.int32)
        self.cols = np.concatenate([self.cols, np.asarray(cols, np.int32)])

    def commands(self) -> Iterator[Command]:
        for i in range(len(self)):
            col = int(self.cols[i])
            yield Command(
                kind=_KINDS[self.kinds[i]],
                bank=int(self.banks[i]),
                row=int(self.rows[i]),
                tick=int(self.ticks[i]),
                col=None if col < 0 else col,
            )

    def act_count(self) -> int:
        return int(np.count_nonzero(self.kinds == _KIND_CODE[ACT]))

    def acts_per_row(self) -> dict[int, int]:
        mask = self.kinds == _KIND_CODE[ACT]
        rows, counts = np.unique(self.rows[mask], return_counts=True)
        return {int(r): int(c) for r, c in zip(rows, counts)}

    def command_multiset(self) -> dict[tuple[str, int, int], int]:
        """(kind, bank, row) multiset, ignoring ticks and ordering."""
        out: dict[tuple[str, int, int], int] = {}
        keys = zip(self.kinds, self.banks, self.rows)
        for k, b, r in keys:
            key = (_KINDS[k], int(b), int(r))
            out[key] = out.get(key, 0) + 1
        return out

    def write(self, path) -> None:
        with open(path, "w") as fh:
            for cmd in self.commands():
                fh.write(cmd.to_line() + "\n")

    @classmethod
    def read(cls, path, timing: TimingParams) -> "CommandTrace":
        ticks, kinds, banks, rows, cols = [], [], [], [], []
        with open(path) as fh:
            for line in fh:
                parts = line.split()
                if not parts:
                    continue
                ticks.append(int(parts[0]))
                kinds.append(_KIND_CODE[parts[1]])
                banks.append(int(parts[2]))
                rows.append(int(parts[3]))
                cols.append(int(parts[4]) if len(parts) > 4 else -1)
        trace = cls(timing)
        trace.append_arrays(ticks, kinds, banks, rows, cols)
        return trace


@dataclass(frozen=True)
class Violation:
    kind: str  # "tRAS", "tRP" or "tREFW"
    index: int
    detail: str


def hammer_budget(timing: TimingParams) -> float:
    """Complete ACT/PRE iterations fitting one refresh window.

    Returns infinity when refresh is disabled (unrestricted hammering).
    """
    if not timing.refresh_enabled:
        return math.inf
    return float(math.floor(timing.tREFW_ck / timing.iteration_ck))


class HammerSchedule:
    """Structured ACT/PRE plan for one CounterBypass run.

    Near aggressors (X+-1) are hammered T times each, edge aggressors
    (X+-2) S times each. Round-robin cycles near-,near+,edge-,edge+ while
    both classes have work left, then alternates within the surviving
    class; sequential drains the near pairs first, then the edge pairs.
    Pair index k maps to ACT tick k*(tRAS+tRP) and PRE tick +tRAS.
    """

    def __init__(self, bank: int, target_row: int, S: int, T: int,
                 interleaving: str, timing: TimingParams,
                 near_rows: tuple[int, int] | None = None,
                 edge_rows: tuple[int, int] | None = None):
        if S < 0 or T < 0:
            raise ValueError("hammer counts must be nonnegative")
        if interleaving not in ("sequential", "round_robin"):
            raise ValueError(f"unknown interleaving {interleaving!r}")
        self.bank = bank
        self.target_row = target_row
        self.S, self.T = S, T
        self.interleaving = interleaving
        self.timing = timing
        self.near_rows = near_rows or (target_row - 1, target_row + 1)
        self.edge_rows = edge_rows or (target_row - 2, target_row + 2)

    @property
    def total_pairs(self) -> int:
        return 2 * (self.S + self.T)

    def row_segments(self, row: int) -> list[tuple[int, int, int]]:
        """Pair indices at which `row` is activated, as (start, stride, count).

        Every hammered row's occurrences form at most two arithmetic runs
        (the mixed phase and the leftover single-class phase).
        """
        near, edge = self.near_rows, self.edge_rows
        S, T = self.S, self.T
        segs: list[tuple[int, int, int]] = []
        if self.interleaving == "sequential":
            if row in near and T:
                segs.append((near.index(row), 2, T))
            if row in edge and S:
                segs.append((2 * T + edge.index(row), 2, S))
            return segs
        m = min(S, T)
        if row in near and T:
            if m:
                segs.append((near.index(row), 4, m))
            if T > m:
                segs.append((4 * m + near.index(row), 2, T - m))
        if row in edge and S:
            if m:
                segs.append((2 + edge.index(row), 4, m))
            if S > m:
                segs.append((4 * m + edge.index(row), 2, S - m))
        return segs

    def acts_in_range(self, row: int, start_pair: int, end_pair: int) -> int:
        """ACTs issued to `row` with pair index in [start_pair, end_pair)."""
        total = 0
        for first, stride, count in self.row_segments(row):
            lo = max(0, -(-(start_pair - first) // stride))
            hi = min(count, -(-(end_pair - first) // stride))
            total += max(0, hi - lo)
        return total

    def occurrence_pair(self, row: int, n: int) -> int:
        """Pair index of the n-th (1-based) ACT to `row`."""
        remaining = n
        for first, stride, count in self.row_segments(row):
            if remaining <= count:
                return first + (remaining - 1) * stride
            remaining -= count
        raise IndexError(f"row {row} receives fewer than {n} ACTs")

    def pair_act_tick(self, pair_index: int) -> int:
        return pair_index * self.timing.iteration_ck

    def hammered_rows(self) -> list[int]:
        rows = []
        if self.T:
            rows += list(self.near_rows)
        if self.S:
            rows += list(self.edge_rows)
        return rows

    def emit(self, trace: CommandTrace) -> None:
        """Materialize the ACT/PRE stream into a trace (vectorized)."""
        n = self.total_pairs
        if n == 0:
            return
        rows = np.empty(n, dtype=np.int32)
        for row in self.hammered_rows():
            for first, stride, count in self.row_segments(row):
                rows[first: first + stride * count: stride] = row
        it = self.timing.iteration_ck
        act_ticks = np.arange(n, dtype=np.int64) * it
        ticks = np.empty(2 * n, dtype=np.int64)
        ticks[0::2] = act_ticks
        ticks[1::2] = act_ticks + self.timing.tRAS_ck
        kinds = np.empty(2 * n, dtype=np.int8)
        kinds[0::2] = _KIND_CODE[ACT]
        kinds[1::2] = _KIND_CODE[PRE]
        rows2 = np.repeat(rows, 2)
        trace.append_arrays(ticks, kinds, np.full(2 * n, self.bank), rows2)


def compile_counter_bypass(config, timing: TimingParams) -> CommandTrace:
    """Compile an attack config into a legal command trace.

    The hammer loops are followed by RD/PRE readbacks of the five tracked
    rows (the target and its four aggressors), mirroring the retrieve-and-
    compare tail of the fault-injection procedure.
    """
    schedule = HammerSchedule(
        bank=config.target.bank,
        target_row=config.target.row,
        S=config.S,
        T=config.T,
        interleaving=config.interleaving,
        timing=timing,
    )
    if timing.refresh_enabled and schedule.total_pairs > hammer_budget(timing):
        raise BudgetError(
            f"{schedule.total_pairs} hammer pairs exceed the tREFW budget "
            f"of {int(hammer_budget(timing))}"
        )
    trace = CommandTrace(timing, config.interleaving)
    schedule.emit(trace)
    x = config.target.row
    tracked = [r for r in range(x - 2, x + 3) if r != x] + [x]
    tick = schedule.total_pairs * timing.iteration_ck
    ticks, kinds, rows = [], [], []
    for row in tracked:
        ticks += [tick, tick + timing.tRAS_ck]
        kinds += [_KIND_CODE[RD], _KIND_CODE[PRE]]
        rows += [row, row]
        tick += timing.iteration_ck
    cols = [0 if k == _KIND_CODE[RD] else -1 for k in kinds]
    trace.append_arrays(ticks, kinds, np.full(len(ticks), config.target.bank),
                        rows, cols)
    return trace


def validate_trace(trace: CommandTrace) -> list[Violation]:
    """Check per-bank ACT->PRE (tRAS), PRE->ACT (tRP) and tREFW span rules.

    A PRE is only held to tRAS when a row is actually open (an ACT more
    recent than the last PRE); stray PREs close nothing and are legal.
    """
    timing = trace.timing
    violations: list[Violation] = []
    act_code, pre_code = _KIND_CODE[ACT], _KIND_CODE[PRE]
    for bank in np.unique(trace.banks):
        sel = np.flatnonzero(
            (trace.banks == bank)
            & ((trace.kinds == act_code) | (trace.kinds == pre_code))
        )
        if len(sel) == 0:
            continue
        ticks = trace.ticks[sel]
        is_act = trace.kinds[sel] == act_code
        neg = np.iinfo(np.int64).min
        # exclusive running maxima of the latest ACT / PRE tick seen so far
        last_act = np.concatenate(
            ([neg], np.maximum.accumulate(np.where(is_act, ticks, neg))[:-1]))
        last_pre = np.concatenate(
            ([neg], np.maximum.accumulate(np.where(~is_act, ticks, neg))[:-1]))
        bad_pre = ~is_act & (last_act > last_pre) \
            & (ticks - last_act < timing.tRAS_ck)
        bad_act = is_act & (last_pre > neg) & (ticks - last_pre < timing.tRP_ck)
        for i in np.flatnonzero(bad_pre):
            violations.append(Violation(
                "tRAS", int(sel[i]),
                f"ACT->PRE gap {int(ticks[i] - last_act[i])} < {timing.tRAS_ck}"))
        for i in np.flatnonzero(bad_act):
            violations.append(Violation(
                "tRP", int(sel[i]),
                f"PRE->ACT gap {int(ticks[i] - last_pre[i])} < {timing.tRP_ck}"))
    if timing.refresh_enabled and len(trace):
        span = int(trace.ticks[-1] - trace.ticks[0])
        if span > timing.tREFW_ck:
            violations.append(Violation(
                "tREFW", len(trace) - 1,
                f"trace span {span} ticks exceeds tREFW "
                f"({timing.tREFW_ck:.0f} ticks)"))
    violations.sort(key=lambda v: v.index)
    return violations
