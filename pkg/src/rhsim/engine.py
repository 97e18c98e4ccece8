"""End-to-end attack runs: trace schedule, defense observation, flips.

``run_attack`` ties the pieces together. Defense counters are evaluated
either by replaying the ACT stream command by command or through an
equivalent closed-form pass over the schedule's arithmetic ACT sequences;
the closed form is the default because multi-million-pair runs make
per-command replay needlessly slow.
"""

from __future__ import annotations

import copy
import io
import warnings
from dataclasses import dataclass, field

import numpy as np

from .defense import (DefenseState, FrequentItem, GroupCounter, NrrEvent,
                      PerRowCounter)
from .disturbance import (ChipProfile, ExtrapolationWarning, cell_thresholds,
                          effective_disturbance, expected_flips)
from .dram import (DramArrayState, DramGeometry, PhysicalMap, RowData, RowId,
                   init_attack_layout, physical_neighbors)
from .trace import BudgetError, HammerSchedule, TimingParams, hammer_budget

ATTACK_MODELS = ("double_sided", "arvra", "aavaa")


@dataclass
class AttackConfig:
    """One attack instance: model, target, hammer counts, data patterns.

    S counts hammers per edge aggressor (X+-2), T per near aggressor
    (X+-1). The classical double-sided attack is the S=0 special case and
    the edge-only variant is T=0.
    """

    model: str
    target: RowId
    S: int
    T: int
    aggressor_pattern: RowData | None = None
    victim_pattern: RowData | None = None
    interleaving: str = "round_robin"
    geometry: DramGeometry = field(default_factory=DramGeometry)
    pmap: PhysicalMap | None = None

    def __post_init__(self):
        self.model = self.model.lower()
        if self.model not in ATTACK_MODELS:
            raise ValueError(f"unknown attack model {self.model!r}")
        self.S, self.T = int(self.S), int(self.T)
        if self.S < 0 or self.T < 0:
            raise ValueError("hammer counts must be nonnegative")
        if self.model == "double_sided" and self.S != 0:
            raise ValueError("double_sided requires S = 0")
        if self.model == "arvra" and self.T != 0:
            raise ValueError("arvra requires T = 0")
        bits = self.geometry.row_size_bits
        if self.aggressor_pattern is None:
            self.aggressor_pattern = RowData.from_hex("0xFF", bits)
        if self.victim_pattern is None:
            self.victim_pattern = RowData.from_hex("0x00", bits)
        self.target.validate(self.geometry)


@dataclass
class FlipReport:
    flips_per_row: dict[RowId, int]
    total_flips_target_row: int
    total_acts: int
    detected: bool
    bypassed: bool
    nrr_count: int
    seed: int

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("bank,row,flips,total_acts,detected,bypassed,"
                  "nrr_count,seed\n")
        for row in sorted(self.flips_per_row):
            buf.write(f"{row.bank},{row.row},{self.flips_per_row[row]},"
                      f"{self.total_acts},{int(self.detected)},"
                      f"{int(self.bypassed)},{self.nrr_count},{self.seed}\n")
        return buf.getvalue()


def parse_attack_config(text: str) -> tuple[AttackConfig, TimingParams]:
    """Read "key value" lines into an attack config and timing params.

    Attack keys: model, bank, target_row, S, T, aggressor_pattern,
    victim_pattern, interleaving, rows_per_bank, row_size_bits,
    banks_per_chip, physical_map (path). Timing keys: tCK_ns, tRAS_ck,
    tRP_ck, sleep_ck, tREFW_ms, refresh_enabled.
    """
    fields: dict[str, str] = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, value = line.partition(" ")
        fields[key] = value.strip()
    geometry = DramGeometry(
        banks_per_chip=int(fields.get("banks_per_chip", 1)),
        rows_per_bank=int(fields.get("rows_per_bank", 2**16)),
        row_size_bits=int(fields.get("row_size_bits", 65536)))
    pmap = None
    if "physical_map" in fields:
        pmap = PhysicalMap.from_file(fields["physical_map"],
                                     geometry.rows_per_bank)
    config = AttackConfig(
        model=fields.get("model", "aavaa"),
        target=RowId(int(fields.get("bank", 0)),
                     int(fields.get("target_row", geometry.rows_per_bank // 2))),
        S=int(float(fields.get("S", 0))),
        T=int(float(fields.get("T", 0))),
        aggressor_pattern=RowData.from_hex(
            fields.get("aggressor_pattern", "0xFF"), geometry.row_size_bits),
        victim_pattern=RowData.from_hex(
            fields.get("victim_pattern", "0x00"), geometry.row_size_bits),
        interleaving=fields.get("interleaving", "round_robin"),
        geometry=geometry,
        pmap=pmap)
    timing = TimingParams(
        tCK_ns=float(fields.get("tCK_ns", 0.833)),
        tRAS_ck=int(fields.get("tRAS_ck", 39)),
        tRP_ck=int(fields.get("tRP_ck", 12)),
        sleep_ck=int(fields.get("sleep_ck", 5)),
        tREFW_ms=float(fields.get("tREFW_ms", 64.0)),
        refresh_enabled=fields.get("refresh_enabled", "false").lower()
        in ("1", "true", "yes"))
    return config, timing


def load_attack_config(path) -> tuple[AttackConfig, TimingParams]:
    with open(path) as fh:
        return parse_attack_config(fh.read())


# ---------------------------------------------------------------------------
# defense evaluation over a schedule


def _pair_rows(schedule: HammerSchedule) -> np.ndarray:
    """Row address of every ACT/PRE pair, in issue order."""
    rows = np.empty(schedule.total_pairs, dtype=np.int64)
    for row in schedule.hammered_rows():
        for first, stride, count in schedule.row_segments(row):
            rows[first: first + stride * count: stride] = row
    return rows


def _row_total(schedule: HammerSchedule, row: int) -> int:
    return schedule.acts_in_range(row, 0, schedule.total_pairs)


def _nrr_events(state: DefenseState | None, schedule: HammerSchedule,
                replay: str) -> list[tuple[int, NrrEvent]]:
    """All NRR issuances for this schedule, as (pair_index, event).

    The closed-form paths update ``state`` (log and residual counters) to
    the exact values a command-by-command replay would leave behind.
    """
    if state is None or not state.policy.active:
        return []
    if replay == "commands":
        return _replay_events(state, schedule)
    t_mac = state.policy.t_mac
    per_row_exact = isinstance(state, PerRowCounter) or (
        isinstance(state, FrequentItem)
        and state.exact_counting(len(schedule.hammered_rows())))
    events: list[tuple[int, NrrEvent]] = []
    if per_row_exact:
        for row in schedule.hammered_rows():
            total = _row_total(schedule, row)
            rid = RowId(schedule.bank, row)
            for k in range(1, total // t_mac + 1):
                pair = schedule.occurrence_pair(row, k * t_mac)
                event = NrrEvent(schedule.pair_act_tick(pair), rid,
                                 state.refresh_targets(rid))
                events.append((pair, event))
            residual = total % t_mac
            if isinstance(state, PerRowCounter):
                state.counters[rid] = residual
            elif residual:
                state.counters[rid] = residual
    elif isinstance(state, GroupCounter):
        rows = _pair_rows(schedule)
        groups = rows // state.group_size
        for g in np.unique(groups):
            idx = np.flatnonzero(groups == g)
            for pair in idx[t_mac - 1::t_mac]:
                rid = RowId(schedule.bank, int(rows[pair]))
                event = NrrEvent(schedule.pair_act_tick(int(pair)), rid,
                                 state.group_refresh_targets(rid))
                events.append((int(pair), event))
            state.counters[(schedule.bank, int(g))] = len(idx) % t_mac
    else:
        return _replay_events(state, schedule)
    events.sort(key=lambda pe: pe[0])
    state.nrr_log.extend(event for _, event in events)
    return events


def _replay_events(state: DefenseState,
                   schedule: HammerSchedule) -> list[tuple[int, NrrEvent]]:
    rows = _pair_rows(schedule)
    events = []
    for pair, row in enumerate(rows):
        for event in state.observe_activate(RowId(schedule.bank, int(row)),
                                            schedule.pair_act_tick(pair)):
            events.append((pair, event))
    return events


# ---------------------------------------------------------------------------
# disturbance accumulation and flips


def _victim_seed(seed: int, row: RowId) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), row.bank, row.row])


def _segment_peak_E(profile: ChipProfile, schedule: HammerSchedule,
                    d1_rows: list[int], d2_rows: list[int],
                    resets: list[int]):
    """Peak effective disturbance over the victim's refresh segments.

    Returns (E_max, (edge_eff, near_eff) at the peak). Within a segment E
    only grows, so the peak sits at each segment's end; an NRR at pair p
    keeps the disturbance of pairs up to and including p and clears it
    for the pairs after.
    """
    bounds = [0]
    for p in sorted(set(resets)):
        bounds.append(p + 1)
    bounds.append(schedule.total_pairs)
    best = (0.0, (0.0, 0.0))
    for lo, hi in zip(bounds, bounds[1:]):
        if hi <= lo:
            continue
        near = sum(schedule.acts_in_range(r, lo, hi) for r in d1_rows) / 2.0
        edge = sum(schedule.acts_in_range(r, lo, hi) for r in d2_rows) / 2.0
        E = effective_disturbance(profile, edge, near)
        if E > best[0]:
            best = (E, (edge, near))
    return best


def run_attack(profile: ChipProfile, attack: AttackConfig,
               defense: DefenseState | None = None,
               timing: TimingParams | None = None, seed: int = 0,
               replay: str = "auto") -> FlipReport:
    """Simulate one full attack and read back the damage.

    A cell flips the first time its running effective disturbance crosses
    its sampled threshold; NRR events reset accumulated disturbance of
    the refreshed rows without undoing earlier flips. Table-driven
    profiles have no per-cell thresholds, so they flip the rounded
    expected count deterministically.
    """
    timing = timing or TimingParams()
    if profile.cells_per_row != attack.geometry.row_size_bits:
        raise ValueError(
            f"profile models {profile.cells_per_row} cells per row but the "
            f"geometry has {attack.geometry.row_size_bits}")
    layout = init_attack_layout(attack.geometry, attack.target,
                                attack.aggressor_pattern,
                                attack.victim_pattern, attack.pmap)
    pmap = layout.pmap
    near = sorted(physical_neighbors(pmap, attack.target, 1),
                  key=lambda r: pmap.physical(r.row))
    edge = sorted(physical_neighbors(pmap, attack.target, 2),
                  key=lambda r: pmap.physical(r.row))
    schedule = HammerSchedule(
        bank=attack.target.bank, target_row=attack.target.row,
        S=attack.S, T=attack.T, interleaving=attack.interleaving,
        timing=timing,
        near_rows=tuple(r.row for r in near),
        edge_rows=tuple(r.row for r in edge))
    if timing.refresh_enabled and schedule.total_pairs > hammer_budget(timing):
        raise BudgetError(
            f"{schedule.total_pairs} hammer pairs exceed the tREFW budget "
            f"of {int(hammer_budget(timing))}")
    if defense is not None and defense.neighbor_fn is None:
        defense.neighbor_fn = lambda row: physical_neighbors(pmap, row, 1)
    events = _nrr_events(defense, schedule, replay)

    flips_per_row: dict[RowId, int] = {}
    for victim in layout.tracked_victims():
        d1 = [r.row for r in physical_neighbors(pmap, victim, 1)]
        d2 = [r.row for r in physical_neighbors(pmap, victim, 2)]
        resets = [pair for pair, event in events if victim in event.refreshed]
        E_max, (edge_eff, near_eff) = _segment_peak_E(
            profile, schedule, d1, d2, resets)
        eligible = layout.eligible_cells(victim)
        if profile.mode == "table_driven":
            with warnings.catch_warnings():
                if victim != attack.target:
                    warnings.simplefilter("ignore", ExtrapolationWarning)
                flips = int(round(float(
                    expected_flips(profile, edge_eff, near_eff))))
            cells = np.flatnonzero(eligible)[:flips]
        else:
            theta = cell_thresholds(profile, _victim_seed(seed, victim))
            cells = np.flatnonzero((theta <= E_max) & eligible)
        layout.apply_flips(victim, cells)
        flips_per_row[victim] = layout.flip_count(victim)

    detected = defense.detected if defense is not None else False
    return FlipReport(
        flips_per_row=flips_per_row,
        total_flips_target_row=flips_per_row[attack.target],
        total_acts=schedule.total_pairs,
        detected=detected,
        bypassed=not detected,
        nrr_count=len(events),
        seed=seed)


# ---------------------------------------------------------------------------
# sweeps and optimal-set search


@dataclass(frozen=True)
class SurfaceCell:
    S: float
    T: float
    expected_flips: float
    sampled_flips: int
    detected_under: dict

    def key(self):
        return (self.S, self.T)


@dataclass
class Surface:
    cells: list[SurfaceCell]
    defense_names: tuple[str, ...] = ()

    def cell(self, S, T) -> SurfaceCell:
        for c in self.cells:
            if c.key() == (S, T):
                return c
        raise KeyError((S, T))

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ["S", "T", "expected_flips", "sampled_flips"]
        cols += [f"detected_{n}" for n in self.defense_names]
        buf.write(",".join(cols) + "\n")
        for c in sorted(self.cells, key=SurfaceCell.key):
            row = [f"{c.S:g}", f"{c.T:g}", f"{c.expected_flips:.6f}",
                   str(c.sampled_flips)]
            row += [str(int(c.detected_under[n])) for n in self.defense_names]
            buf.write(",".join(row) + "\n")
        return buf.getvalue()

    def to_plot_matrix(self) -> str:
        """Gnuplot-style matrix: blank-line separated S blocks."""
        buf = io.StringIO()
        for s in sorted({c.S for c in self.cells}):
            for c in sorted((c for c in self.cells if c.S == s),
                            key=lambda c: c.T):
                buf.write(f"{c.S:g} {c.T:g} {c.expected_flips:.6f}\n")
            buf.write("\n")
        return buf.getvalue()


def defense_name(state: DefenseState) -> str:
    kind = type(state).__name__
    if state.policy.active:
        return f"{kind}_t{state.policy.t_mac}"
    return f"{kind}_{state.policy.kind}"


def sweep(profile: ChipProfile, S_values, T_values, defenses=(),
          timing: TimingParams | None = None, seed: int = 0,
          target: RowId | None = None,
          interleaving: str = "round_robin") -> Surface:
    """Evaluate the (S, T) grid; each cell is independent and seeded.

    Cells share one per-cell threshold draw (thresholds are a property of
    the chip, not of the hammer counts), so sampled counts are monotone
    along each axis like the expected surface.
    """
    timing = timing or TimingParams()
    if not len(S_values) or not len(T_values):
        raise ValueError("sweep grids must be nonempty")
    target = target or RowId(0, 2**15)
    if isinstance(defenses, dict):
        named = list(defenses.items())
    else:
        named = [(defense_name(d), d) for d in defenses]
    theta = None
    if profile.mode == "analytic":
        theta = cell_thresholds(profile, _victim_seed(seed, target))
    cells = []
    for S in S_values:
        for T in T_values:
            expected = float(expected_flips(profile, S, T))
            if theta is not None:
                E = effective_disturbance(profile, S, T)
                sampled = int(np.count_nonzero(theta <= E))
            else:
                sampled = int(round(expected))
            detected = {}
            for name, template in named:
                state = copy.deepcopy(template)
                schedule = HammerSchedule(
                    bank=target.bank, target_row=target.row, S=int(S),
                    T=int(T), interleaving=interleaving, timing=timing)
                _nrr_events(state, schedule, replay="auto")
                detected[name] = state.detected
            cells.append(SurfaceCell(float(S), float(T), expected, sampled,
                                     detected))
    cells.sort(key=SurfaceCell.key)
    return Surface(cells, tuple(name for name, _ in named))


def find_optimal_set(surface: Surface, flip_target: float):
    """Best sub-threshold (S, T) cell reaching the flip target.

    T_dbl is the smallest double-sided count on this surface that reaches
    the target; candidates need both counts strictly below it. Ties
    prefer balanced counts, then the cheaper total, then the smaller S.
    """
    dbl = [c.T for c in surface.cells
           if c.S == 0 and c.expected_flips >= flip_target]
    t_dbl = min(dbl) if dbl else float("inf")
    candidates = [c for c in surface.cells
                  if c.expected_flips >= flip_target
                  and c.S < t_dbl and c.T < t_dbl]
    if not candidates:
        return None
    best = min(candidates, key=lambda c: (abs(c.S - c.T), c.S + c.T, c.S))
    return (best.S, best.T)


# ---------------------------------------------------------------------------
# per-cell feasibility service


@dataclass(frozen=True)
class CellTarget:
    row: RowId
    cell: int
    direction: int  # value the attacker wants the cell to take
    current: int | None = None  # stored value, if known


@dataclass(frozen=True)
class CellVerdict:
    target: CellTarget
    verdict: str  # flippable | blocked | infeasible
    threshold: float
    bypass_E: float
    max_E: float


def _bypass_max_E(profile: ChipProfile, state: DefenseState | None,
                  target_row: int, max_hc: int, budget: float,
                  attack_model: str = "aavaa"):
    """Largest effective disturbance reachable without tripping a counter.

    Builds the linear per-counter constraints on (S, T) implied by the
    tracker, then scans the T axis taking the largest feasible S at each
    step. Inactive policies impose no constraint beyond the search bound.
    """
    near = (target_row - 1, target_row + 1)
    edge = (target_row - 2, target_row + 2)
    constraints: list[tuple[int, int]] = []  # (near_coeff, edge_coeff)
    limit = max_hc
    if state is not None and state.policy.active:
        limit = state.policy.t_mac - 1
        if isinstance(state, GroupCounter):
            groups: dict[int, list[int]] = {}
            for r in near:
                groups.setdefault(r // state.group_size, []).append(0)
            for r in edge:
                groups.setdefault(r // state.group_size, []).append(1)
            for members in groups.values():
                constraints.append((members.count(0), members.count(1)))
        else:
            constraints = [(1, 0), (0, 1)]
        limit = state.policy.t_mac - 1
    pair_cap = budget / 2.0 if np.isfinite(budget) else np.inf
    t_grid = np.unique(np.round(np.linspace(0, min(limit, max_hc),
                                            2049)).astype(np.int64))
    if attack_model == "arvra":
        t_grid = np.zeros(1, dtype=np.int64)
    best = (0.0, (0, 0))
    for T in t_grid:
        S = 0 if attack_model == "double_sided" else min(limit, max_hc)
        ok = True
        for a, b in constraints:
            used = a * T
            if used > limit:
                ok = False
                break
            if b:
                S = min(S, (limit - used) // b)
        if not ok or S < 0:
            continue
        if np.isfinite(pair_cap):
            S = min(S, int(pair_cap) - int(T))
            if S < 0:
                continue
        E = effective_disturbance(profile, float(S), float(T))
        if E > best[0]:
            best = (E, (int(S), int(T)))
    return best


def feasibility(profile: ChipProfile, defense: DefenseState | None,
                targets: list[CellTarget], seed: int = 0,
                max_hc: int = 20_000_000,
                timing: TimingParams | None = None,
                attack_model: str = "aavaa") -> list[CellVerdict]:
    """Classify target cells as flippable, blocked, or infeasible.

    flippable: a counter-bypassing (S, T) reaches the cell's sampled
    threshold and the attacker can set up a flip toward the requested
    value. blocked: only detected configurations reach it. infeasible:
    out of reach at any in-bounds (S, T), or the direction rule forbids
    the flip outright.
    """
    if profile.mode != "analytic":
        raise ValueError("feasibility needs an analytic profile")
    if attack_model not in ATTACK_MODELS:
        raise ValueError(f"unknown attack model {attack_model!r}")
    timing = timing or TimingParams()
    budget = hammer_budget(timing)
    theta_cache: dict[RowId, np.ndarray] = {}
    out = []
    for target in targets:
        if target.direction not in (0, 1):
            raise ValueError(f"bad flip direction {target.direction!r}")
        if not 0 <= target.cell < profile.cells_per_row:
            raise ValueError(f"cell index {target.cell} out of range")
        hc_cap = max_hc
        if np.isfinite(budget):
            hc_cap = min(max_hc, int(budget) // 2)
        s_cap = 0.0 if attack_model == "double_sided" else float(hc_cap)
        t_cap = 0.0 if attack_model == "arvra" else float(hc_cap)
        max_E = effective_disturbance(profile, s_cap, t_cap)
        bypass_E, _ = _bypass_max_E(profile, defense, target.row.row,
                                    max_hc, budget, attack_model)
        if target.row not in theta_cache:
            theta_cache[target.row] = cell_thresholds(
                profile, _victim_seed(seed, target.row))
        theta = float(theta_cache[target.row][target.cell])
        if target.current is not None and target.current == target.direction:
            verdict = "infeasible"
        elif theta <= bypass_E:
            verdict = "flippable"
        elif theta <= max_E:
            verdict = "blocked"
        else:
            verdict = "infeasible"
        out.append(CellVerdict(target, verdict, theta, bypass_E, max_E))
    return out


def feasibility_csv(verdicts: list[CellVerdict]) -> str:
    buf = io.StringIO()
    buf.write("bank,row,cell,direction,verdict\n")
    for v in verdicts:
        t = v.target
        buf.write(f"{t.row.bank},{t.row.row},{t.cell},{t.direction},"
                  f"{v.verdict}\n")
    return buf.getvalue()
