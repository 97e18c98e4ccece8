import math

import numpy as np
import pytest

from rhsim.dram import DramGeometry, RowId
from rhsim.engine import AttackConfig
from rhsim.trace import (ACT, PRE, RD, BudgetError, CommandTrace,
                         HammerSchedule, TimingParams, _KIND_CODE,
                         compile_counter_bypass, hammer_budget,
                         validate_trace)


def make_config(S, T, interleaving="round_robin", model=None):
    model = model or ("aavaa" if S and T else
                      "arvra" if S else "double_sided")
    g = DramGeometry(rows_per_bank=256, row_size_bits=64)
    return AttackConfig(model, RowId(0, 100), S, T,
                        interleaving=interleaving, geometry=g)


def act_rows(trace):
    return [c.row for c in trace.commands() if c.kind == ACT]


class TestTimingParams:
    def test_defaults(self):
        t = TimingParams()
        assert t.iteration_ck == 51

    def test_tras_range_enforced(self):
        with pytest.raises(ValueError):
            TimingParams(tRAS_ck=30)

    def test_positive_durations(self):
        with pytest.raises(ValueError):
            TimingParams(tCK_ns=0)


class TestCompile:
    def test_sequential_near_only(self):
        trace = compile_counter_bypass(make_config(0, 3, "sequential"),
                                       TimingParams())
        assert act_rows(trace) == [99, 101, 99, 101, 99, 101]
        rds = [c.row for c in trace.commands() if c.kind == RD]
        assert rds == [98, 99, 101, 102, 100]

    def test_zero_hammers_only_readbacks(self):
        trace = compile_counter_bypass(make_config(0, 0), TimingParams())
        assert trace.act_count() == 0
        assert any(c.kind == RD for c in trace.commands())

    def test_round_robin_order(self):
        trace = compile_counter_bypass(make_config(2, 2), TimingParams())
        assert act_rows(trace) == [99, 101, 98, 102, 99, 101, 98, 102]

    def test_act_counts_exact(self):
        trace = compile_counter_bypass(make_config(5, 9), TimingParams())
        assert trace.act_count() == 2 * (5 + 9)
        per_row = trace.acts_per_row()
        assert per_row[99] == per_row[101] == 9
        assert per_row[98] == per_row[102] == 5

    def test_interleavings_same_multiset(self):
        a = compile_counter_bypass(make_config(4, 7, "round_robin"),
                                   TimingParams())
        b = compile_counter_bypass(make_config(4, 7, "sequential"),
                                   TimingParams())
        assert a.command_multiset() == b.command_multiset()

    def test_iteration_spacing(self):
        timing = TimingParams()
        trace = compile_counter_bypass(make_config(0, 2), timing)
        acts = [c.tick for c in trace.commands() if c.kind == ACT]
        assert acts[1] - acts[0] == timing.iteration_ck

    def test_budget_error_when_refresh_enabled(self):
        timing = TimingParams(refresh_enabled=True)
        over = int(hammer_budget(timing)) // 2 + 1
        with pytest.raises(BudgetError):
            compile_counter_bypass(make_config(0, over), timing)


class TestValidate:
    def test_compiled_traces_legal(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            S, T = int(rng.integers(0, 50)), int(rng.integers(0, 50))
            mode = ["sequential", "round_robin"][int(rng.integers(2))]
            trace = compile_counter_bypass(make_config(S, T, mode),
                                           TimingParams())
            assert validate_trace(trace) == []

    def test_short_act_pre_gap_flagged(self):
        trace = CommandTrace(TimingParams())
        trace.append_arrays([0, 10], [_KIND_CODE[ACT], _KIND_CODE[PRE]],
                            [0, 0], [5, 5])
        violations = validate_trace(trace)
        assert len(violations) == 1 and violations[0].kind == "tRAS"

    def test_short_pre_act_gap_flagged(self):
        trace = CommandTrace(TimingParams())
        trace.append_arrays(
            [0, 39, 45],
            [_KIND_CODE[ACT], _KIND_CODE[PRE], _KIND_CODE[ACT]],
            [0, 0, 0], [5, 5, 6])
        violations = validate_trace(trace)
        assert len(violations) == 1 and violations[0].kind == "tRP"

    def test_refw_span_flagged(self):
        timing = TimingParams(refresh_enabled=True)
        trace = CommandTrace(timing)
        span = int(timing.tREFW_ck) + 100
        trace.append_arrays([0, 39, span],
                            [_KIND_CODE[ACT], _KIND_CODE[PRE],
                             _KIND_CODE[ACT]],
                            [0, 0, 0], [5, 5, 6])
        assert any(v.kind == "tREFW" for v in validate_trace(trace))


class TestBudget:
    def test_closed_form(self):
        timing = TimingParams(refresh_enabled=True)
        expect = math.floor(64e6 / (51 * 0.833))
        assert hammer_budget(timing) == expect

    def test_unbounded_without_refresh(self):
        assert hammer_budget(TimingParams()) == math.inf

    def test_halves_when_iteration_doubles(self):
        a = TimingParams(tRAS_ck=39, tRP_ck=12, refresh_enabled=True)
        b = TimingParams(tRAS_ck=48, tRP_ck=54, refresh_enabled=True)
        ratio = hammer_budget(a) / hammer_budget(b)
        assert abs(ratio - 2.0) < 1e-3

    def test_matches_formula_for_random_timings(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            timing = TimingParams(
                tCK_ns=float(rng.uniform(0.5, 2.0)),
                tRAS_ck=int(rng.integers(36, 49)),
                tRP_ck=int(rng.integers(8, 20)),
                tREFW_ms=float(rng.uniform(16, 128)),
                refresh_enabled=True)
            expect = math.floor(
                timing.tREFW_ms * 1e6
                / ((timing.tRAS_ck + timing.tRP_ck) * timing.tCK_ns))
            assert hammer_budget(timing) == expect


class TestSchedule:
    @pytest.mark.parametrize("S,T", [(0, 5), (5, 0), (3, 3), (2, 7), (9, 4)])
    @pytest.mark.parametrize("mode", ["sequential", "round_robin"])
    def test_segments_match_emitted_stream(self, S, T, mode):
        sched = HammerSchedule(0, 100, S, T, mode, TimingParams())
        trace = CommandTrace(TimingParams())
        sched.emit(trace)
        rows = [c.row for c in trace.commands() if c.kind == ACT]
        for row in sched.hammered_rows():
            positions = [i for i, r in enumerate(rows) if r == row]
            total = sched.acts_in_range(row, 0, sched.total_pairs)
            assert total == len(positions)
            for n, pair in enumerate(positions, start=1):
                assert sched.occurrence_pair(row, n) == pair

    def test_acts_in_range_partial_windows(self):
        sched = HammerSchedule(0, 100, 4, 6, "round_robin", TimingParams())
        for row in sched.hammered_rows():
            full = sched.acts_in_range(row, 0, sched.total_pairs)
            split = sum(sched.acts_in_range(row, a, a + 3)
                        for a in range(0, sched.total_pairs, 3))
            assert full == split


class TestTraceFile:
    def test_round_trip(self, tmp_path):
        trace = compile_counter_bypass(make_config(2, 3), TimingParams())
        path = tmp_path / "trace.txt"
        trace.write(path)
        back = CommandTrace.read(path, TimingParams())
        assert back.command_multiset() == trace.command_multiset()
        assert list(back.ticks) == list(trace.ticks)

    def test_line_format(self):
        trace = compile_counter_bypass(make_config(0, 1), TimingParams())
        first = next(trace.commands())
        assert first.to_line() == "0 ACT 0 99"
