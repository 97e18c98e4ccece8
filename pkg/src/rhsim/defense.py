"""Counter-based hammer detection archetypes.

Each defense watches the ACT stream of one bank and issues Nearby Row
Refresh (NRR) commands when a tracked count reaches the MAC threshold.
Three trackers are provided: an idealized per-row counter, a group
counter over aligned blocks of consecutive rows, and a Misra-Gries
frequent-item table with a bounded number of counters.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

from .dram import RowId


@dataclass(frozen=True)
class MacPolicy:
    """MAC configuration: unlimited and untested modules never intervene."""

    kind: str
    t_mac: int | None = None

    def __post_init__(self):
        if self.kind not in ("unlimited", "untested", "limit"):
            raise ValueError(f"unknown MAC policy kind {self.kind!r}")
        if self.kind == "limit":
            if self.t_mac is None or self.t_mac < 1:
                raise ValueError("limit policy needs t_mac >= 1")
        elif self.t_mac is not None:
            raise ValueError(f"{self.kind} policy carries no t_mac")

    @classmethod
    def unlimited(cls) -> "MacPolicy":
        return cls("unlimited")

    @classmethod
    def untested(cls) -> "MacPolicy":
        return cls("untested")

    @classmethod
    def limit(cls, t_mac: int) -> "MacPolicy":
        return cls("limit", int(t_mac))

    @property
    def active(self) -> bool:
        return self.kind == "limit"


@dataclass(frozen=True)
class NrrEvent:
    tick: int
    aggressor: RowId
    refreshed: tuple[RowId, ...]


def _identity_neighbors(row: RowId, rows_per_bank: int) -> tuple[RowId, ...]:
    out = []
    for cand in (row.row - 1, row.row + 1):
        if 0 <= cand < rows_per_bank:
            out.append(RowId(row.bank, cand))
    return tuple(out)


@dataclass
class DefenseState:
    """Base tracker: counting discipline is supplied by subclasses.

    ``neighbor_fn(row) -> iterable of RowId`` maps a tripped aggressor to
    the rows its NRR refreshes; the default assumes identity logical to
    physical mapping. Counters reset when their row trips and at window
    rollover; the NRR log persists for the whole run.
    """

    policy: MacPolicy
    rows_per_bank: int = 2**16
    neighbor_fn: object = None
    window_start: int = 0
    nrr_log: list[NrrEvent] = field(default_factory=list)

    def refresh_targets(self, row: RowId) -> tuple[RowId, ...]:
        if self.neighbor_fn is not None:
            return tuple(sorted(self.neighbor_fn(row)))
        return _identity_neighbors(row, self.rows_per_bank)

    @property
    def detected(self) -> bool:
        return bool(self.nrr_log)

    def observe_activate(self, row: RowId, tick: int) -> list[NrrEvent]:
        if tick < self.window_start:
            raise ValueError("tick precedes the current window")
        if not self.policy.active:
            return []
        return self._count(row, tick)

    def window_rollover(self, tick: int) -> None:
        self.window_start = tick
        self._clear()

    def is_bypassed(self) -> bool:
        return not self.detected

    def _emit(self, row: RowId, tick: int) -> NrrEvent:
        event = NrrEvent(tick, row, self.refresh_targets(row))
        self.nrr_log.append(event)
        return event

    def _count(self, row: RowId, tick: int) -> list[NrrEvent]:
        raise NotImplementedError

    def _clear(self) -> None:
        raise NotImplementedError


@dataclass
class PerRowCounter(DefenseState):
    """One exact counter per row (TWiCe/Graphene-style idealization)."""

    counters: dict[RowId, int] = field(default_factory=dict)

    def _count(self, row, tick):
        count = self.counters.get(row, 0) + 1
        if count >= self.policy.t_mac:
            self.counters[row] = 0
            return [self._emit(row, tick)]
        self.counters[row] = count
        return []

    def _clear(self):
        self.counters.clear()


@dataclass
class GroupCounter(DefenseState):
    """One counter per aligned block of ``group_size`` consecutive rows.

    A trip refreshes the whole group plus the rows bordering it, so any
    aggressor pair split across a boundary is still covered.
    """

    group_size: int = 8
    counters: dict[tuple[int, int], int] = field(default_factory=dict)

    def group_of(self, row: RowId) -> tuple[int, int]:
        return (row.bank, row.row // self.group_size)

    def group_refresh_targets(self, row: RowId) -> tuple[RowId, ...]:
        bank, g = self.group_of(row)
        lo = max(g * self.group_size - 1, 0)
        hi = min((g + 1) * self.group_size, self.rows_per_bank - 1)
        return tuple(RowId(bank, r) for r in range(lo, hi + 1))

    def _count(self, row, tick):
        key = self.group_of(row)
        count = self.counters.get(key, 0) + 1
        if count >= self.policy.t_mac:
            self.counters[key] = 0
            event = NrrEvent(tick, row, self.group_refresh_targets(row))
            self.nrr_log.append(event)
            return [event]
        self.counters[key] = count
        return []

    def _clear(self):
        self.counters.clear()


@dataclass
class FrequentItem(DefenseState):
    """Misra-Gries heavy-hitter table with ``num_counters`` entries.

    The estimate undercounts by at most total_ACTs / num_counters, so any
    row whose true count exceeds t_mac plus that bound is always caught.
    A tripped row's entry is dropped, mirroring the post-NRR reset.
    """

    num_counters: int = 16
    counters: dict[RowId, int] = field(default_factory=dict)

    def _count(self, row, tick):
        if row in self.counters:
            self.counters[row] += 1
        elif len(self.counters) < self.num_counters:
            self.counters[row] = 1
        else:
            for key in list(self.counters):
                self.counters[key] -= 1
                if self.counters[key] == 0:
                    del self.counters[key]
            return []
        if self.counters[row] >= self.policy.t_mac:
            del self.counters[row]
            return [self._emit(row, tick)]
        return []

    def _clear(self):
        self.counters.clear()

    def exact_counting(self, distinct_rows: int) -> bool:
        """With enough table slots Misra-Gries never decrements."""
        return distinct_rows <= self.num_counters


def observe_activate(state: DefenseState, row: RowId,
                     tick: int) -> list[NrrEvent]:
    return state.observe_activate(row, tick)


def window_rollover(state: DefenseState, tick: int) -> DefenseState:
    state.window_rollover(tick)
    return state


def is_bypassed(state: DefenseState) -> bool:
    return state.is_bypassed()


def nrr_log_csv(state: DefenseState) -> str:
    buf = io.StringIO()
    buf.write("tick,aggressor_row,refreshed_rows\n")
    for event in state.nrr_log:
        rows = ";".join(str(r.row) for r in event.refreshed)
        buf.write(f"{event.tick},{event.aggressor.row},{rows}\n")
    return buf.getvalue()


def parse_defense_config(text: str, rows_per_bank: int = 2**16,
                         neighbor_fn=None) -> DefenseState:
    """Build a tracker from "key value" lines.

    Keys: kind (per_row | group | frequent_item), t_mac (a count, or
    "unlimited"/"untested"), group_size, num_counters.
    """
    fields: dict[str, str] = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, value = line.partition(" ")
        fields[key.lower()] = value.strip()
    t_mac = fields.get("t_mac", "untested").lower()
    if t_mac in ("unlimited", "untested"):
        policy = MacPolicy(t_mac)
    else:
        policy = MacPolicy.limit(int(float(t_mac)))
    kind = fields.get("kind", "per_row").lower()
    common = dict(policy=policy, rows_per_bank=rows_per_bank,
                  neighbor_fn=neighbor_fn)
    if kind == "per_row":
        return PerRowCounter(**common)
    if kind == "group":
        return GroupCounter(group_size=int(fields.get("group_size", 8)),
                            **common)
    if kind == "frequent_item":
        return FrequentItem(num_counters=int(fields.get("num_counters", 16)),
                            **common)
    raise ValueError(f"unknown defense kind {kind!r}")


def load_defense_config(path, rows_per_bank: int = 2**16,
                        neighbor_fn=None) -> DefenseState:
    with open(path) as fh:
        return parse_defense_config(fh.read(), rows_per_bank, neighbor_fn)
