import numpy as np
import pytest

from rhsim.defense import (FrequentItem, GroupCounter, MacPolicy,
                           PerRowCounter, is_bypassed, nrr_log_csv,
                           observe_activate, parse_defense_config,
                           window_rollover)
from rhsim.dram import RowId


def row(r):
    return RowId(0, r)


class TestMacPolicy:
    def test_limit_needs_t_mac(self):
        with pytest.raises(ValueError):
            MacPolicy("limit")

    def test_untested_carries_no_t_mac(self):
        with pytest.raises(ValueError):
            MacPolicy("untested", 100)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            MacPolicy("sometimes")


class TestPerRowCounter:
    def test_nrr_at_threshold_refreshes_neighbors(self):
        state = PerRowCounter(policy=MacPolicy.limit(3))
        assert observe_activate(state, row(99), 0) == []
        assert observe_activate(state, row(99), 51) == []
        events = observe_activate(state, row(99), 102)
        assert len(events) == 1
        assert {r.row for r in events[0].refreshed} == {98, 100}
        assert events[0].tick == 102

    def test_counter_resets_after_nrr(self):
        state = PerRowCounter(policy=MacPolicy.limit(2))
        observe_activate(state, row(7), 0)
        observe_activate(state, row(7), 1)
        assert state.counters[row(7)] == 0
        # two more needed for the next trip
        assert observe_activate(state, row(7), 2) == []
        assert len(observe_activate(state, row(7), 3)) == 1

    def test_unlimited_never_triggers(self):
        state = PerRowCounter(policy=MacPolicy.unlimited())
        for tick in range(10_000):
            assert observe_activate(state, row(5), tick) == []
        assert is_bypassed(state)

    def test_crossing_tick_exact(self):
        t_mac = 7
        state = PerRowCounter(policy=MacPolicy.limit(t_mac))
        ticks = list(range(0, 510, 51))
        fired = [t for t in ticks if observe_activate(state, row(3), t)]
        assert fired == [ticks[t_mac - 1]]

    def test_benign_fuzz_no_false_positives(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            t_mac = int(rng.integers(2, 10))
            state = PerRowCounter(policy=MacPolicy.limit(t_mac))
            rows = rng.integers(0, 20, size=60)
            counts = np.bincount(rows, minlength=20)
            if counts.max() >= t_mac:
                continue
            for tick, r in enumerate(rows):
                assert observe_activate(state, row(int(r)), tick) == []

    def test_tick_before_window_rejected(self):
        state = PerRowCounter(policy=MacPolicy.limit(2), window_start=100)
        with pytest.raises(ValueError):
            observe_activate(state, row(1), 50)


class TestWindowRollover:
    def test_counters_cleared(self):
        state = PerRowCounter(policy=MacPolicy.limit(10))
        for tick in range(5):
            observe_activate(state, row(99), tick)
        window_rollover(state, 1000)
        assert state.counters == {} and state.window_start == 1000

    def test_windows_isolated(self):
        t_mac = 5
        state = PerRowCounter(policy=MacPolicy.limit(t_mac))
        for tick in range(t_mac - 1):
            observe_activate(state, row(4), tick)
        window_rollover(state, 100)
        for tick in range(100, 100 + t_mac - 1):
            observe_activate(state, row(4), tick)
        assert state.nrr_log == []


class TestGroupCounter:
    def test_group_sum_trips(self):
        # rows 98 and 99 share group 12 with group_size 8
        state = GroupCounter(policy=MacPolicy.limit(4), group_size=8)
        observe_activate(state, row(98), 0)
        observe_activate(state, row(99), 1)
        observe_activate(state, row(98), 2)
        events = observe_activate(state, row(99), 3)
        assert len(events) == 1

    def test_refresh_covers_group_and_boundaries(self):
        state = GroupCounter(policy=MacPolicy.limit(1), group_size=8)
        events = observe_activate(state, row(98), 0)
        assert [r.row for r in events[0].refreshed] == list(range(95, 105))

    def test_rows_in_distinct_groups_independent(self):
        state = GroupCounter(policy=MacPolicy.limit(4), group_size=8)
        for tick, r in enumerate([95, 96, 97, 103]):  # groups 11,12,12,12
            events = observe_activate(state, row(r), tick)
        assert events == [] and state.nrr_log == []


class TestFrequentItem:
    def test_exact_when_counters_suffice(self):
        state = FrequentItem(policy=MacPolicy.limit(3), num_counters=4)
        for tick in range(3):
            events = observe_activate(state, row(42), tick)
        assert len(events) == 1 and state.counters.get(row(42)) is None

    def test_round_robin_below_threshold_silent(self):
        # 3 distinct rows over 2 counters, t_mac 4: decrements keep every
        # estimate below the trigger
        state = FrequentItem(policy=MacPolicy.limit(4), num_counters=2)
        for tick in range(12):
            assert observe_activate(state, row(tick % 3), tick) == []
        assert state.nrr_log == []

    def test_heavy_hitter_never_missed(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            k = int(rng.integers(2, 5))
            t_mac = int(rng.integers(3, 8))
            stream = rng.integers(0, 6, size=int(rng.integers(20, 60)))
            state = FrequentItem(policy=MacPolicy.limit(t_mac),
                                 num_counters=k)
            for tick, r in enumerate(stream):
                observe_activate(state, row(int(r)), tick)
            # any row whose true count beats t_mac plus the MG error bound
            # must appear in the log
            bound = len(stream) / k
            counts = np.bincount(stream, minlength=6)
            caught = {e.aggressor.row for e in state.nrr_log}
            for r, c in enumerate(counts):
                if c > t_mac + bound:
                    assert r in caught


class TestConfigAndLog:
    def test_parse_per_row(self):
        state = parse_defense_config("kind per_row\nt_mac 2000000\n")
        assert isinstance(state, PerRowCounter)
        assert state.policy.t_mac == 2_000_000

    def test_parse_untested(self):
        state = parse_defense_config("kind group\nt_mac untested\n"
                                     "group_size 4\n")
        assert isinstance(state, GroupCounter) and not state.policy.active
        assert state.group_size == 4

    def test_parse_frequent_item(self):
        state = parse_defense_config("kind frequent_item\nt_mac 10\n"
                                     "num_counters 3\n")
        assert isinstance(state, FrequentItem) and state.num_counters == 3

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            parse_defense_config("kind magic\nt_mac 5\n")

    def test_nrr_log_csv(self):
        state = PerRowCounter(policy=MacPolicy.limit(1))
        observe_activate(state, row(99), 7)
        text = nrr_log_csv(state)
        assert text.splitlines() == [
            "tick,aggressor_row,refreshed_rows", "7,99,98;100"]
