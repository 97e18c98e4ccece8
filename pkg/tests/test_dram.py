import numpy as np
import pytest

from rhsim.dram import (DramGeometry, LayoutError, PhysicalMap, RowData,
                        RowId, count_bitflips, init_attack_layout,
                        physical_neighbors)


def ones(n):
    return RowData.from_hex("0xFF", n)


def zeros(n):
    return RowData.from_hex("0x00", n)


class TestGeometry:
    def test_defaults(self):
        g = DramGeometry()
        assert g.rows_per_bank == 2**16 and g.row_size_bits == 65536

    def test_rejects_tiny_bank(self):
        with pytest.raises(ValueError):
            DramGeometry(rows_per_bank=4)

    def test_rejects_non_byte_rows(self):
        with pytest.raises(ValueError):
            DramGeometry(row_size_bits=7)


class TestRowData:
    def test_from_hex_all_ones(self):
        assert ones(16).bits.all()

    def test_from_hex_repeats_pattern(self):
        row = RowData.from_hex("0x81", 16)
        assert row.bits.tolist() == [1, 0, 0, 0, 0, 0, 0, 1] * 2

    def test_from_hex_truncates_to_row_size(self):
        assert len(RowData.from_hex("0xABC", 8)) == 8

    def test_bad_hex_rejected(self):
        with pytest.raises(ValueError):
            RowData.from_hex("0xZZ", 8)

    def test_copy_is_independent(self):
        a = zeros(8)
        b = a.copy()
        b.bits[0] = True
        assert not a.bits[0]


class TestCountBitflips:
    def test_identical_rows(self):
        assert count_bitflips(zeros(64), zeros(64)) == 0

    def test_two_bit_difference(self):
        assert count_bitflips(zeros(8), RowData.from_hex("0x81", 8)) == 2

    def test_matches_per_bit_loop_oracle(self):
        rng = np.random.default_rng(0)
        a = RowData(rng.random(65536) < 0.5)
        b = RowData(rng.random(65536) < 0.5)
        oracle = sum(int(x) != int(y) for x, y in zip(a.bits, b.bits))
        assert count_bitflips(a, b) == oracle

    def test_symmetry_and_self_distance(self):
        rng = np.random.default_rng(1)
        a = RowData(rng.random(256) < 0.5)
        b = RowData(rng.random(256) < 0.5)
        assert count_bitflips(a, b) == count_bitflips(b, a)
        assert count_bitflips(a, a) == 0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            count_bitflips(zeros(8), zeros(16))


class TestPhysicalMap:
    def test_identity_neighbors(self):
        pmap = PhysicalMap(256)
        assert {r.row for r in physical_neighbors(pmap, RowId(0, 100), 1)} \
            == {99, 101}

    def test_edge_clipping(self):
        pmap = PhysicalMap(256)
        assert {r.row for r in physical_neighbors(pmap, RowId(0, 0), 2)} \
            == {2}

    def test_permuted_neighbors_match_table(self):
        # explicit 3-cycle: logical 100 sits at physical 7
        mapping = {100: 7, 7: 12, 12: 100}
        pmap = PhysicalMap(256, mapping)
        got = {r.row for r in physical_neighbors(pmap, RowId(0, 100), 1)}
        # physical neighbors of 7 are physical 6 and 8, both identity-mapped
        assert got == {6, 8}

    def test_symmetry_for_interior_rows(self):
        pmap = PhysicalMap(64)
        for row in range(2, 62):
            for nb in physical_neighbors(pmap, RowId(0, row), 2):
                back = physical_neighbors(pmap, nb, 2)
                assert RowId(0, row) in back

    def test_non_bijection_rejected(self):
        with pytest.raises(ValueError):
            PhysicalMap(16, {0: 5})

    def test_file_round_trip(self, tmp_path):
        path = tmp_path / "map.txt"
        path.write_text("# logical physical\n3 9\n9 3\n")
        pmap = PhysicalMap.from_file(path, 16)
        assert pmap.physical(3) == 9 and pmap.logical(3) == 9
        assert pmap.physical(1) == 1

    def test_distance_must_be_positive(self):
        with pytest.raises(ValueError):
            physical_neighbors(PhysicalMap(16), RowId(0, 8), 0)


class TestAttackLayout:
    def test_patterns_placed(self):
        g = DramGeometry(rows_per_bank=256, row_size_bits=64)
        state = init_attack_layout(g, RowId(0, 100), ones(64), zeros(64))
        for row in (98, 99, 101, 102):
            assert state.read_row(RowId(0, row)).bits.all()
        assert not state.read_row(RowId(0, 100)).bits.any()

    def test_minimal_geometry(self):
        g = DramGeometry(rows_per_bank=5, row_size_bits=8)
        state = init_attack_layout(g, RowId(0, 2), ones(8), zeros(8))
        for row in (0, 1, 3, 4):
            assert state.read_row(RowId(0, row)).bits.all()
        assert not state.read_row(RowId(0, 2)).bits.any()

    def test_target_too_close_to_edge(self):
        g = DramGeometry(rows_per_bank=8, row_size_bits=8)
        with pytest.raises(LayoutError):
            init_attack_layout(g, RowId(0, 1), ones(8), zeros(8))

    def test_readback_unchanged_without_hammering(self):
        g = DramGeometry(rows_per_bank=64, row_size_bits=32)
        agg = RowData.from_hex("0xA5", 32)
        vic = RowData.from_hex("0x3C", 32)
        state = init_attack_layout(g, RowId(0, 30), agg, vic)
        assert state.read_row(RowId(0, 29)) == agg
        assert state.read_row(RowId(0, 30)) == vic
        assert state.read_row(RowId(0, 50)) == vic  # untouched row

    def test_pattern_length_checked(self):
        g = DramGeometry(rows_per_bank=64, row_size_bits=32)
        with pytest.raises(ValueError):
            init_attack_layout(g, RowId(0, 30), ones(8), zeros(32))

    def test_permuted_layout_uses_physical_adjacency(self):
        g = DramGeometry(rows_per_bank=64, row_size_bits=8)
        pmap = PhysicalMap(64, {30: 40, 40: 30})
        state = init_attack_layout(g, RowId(0, 30), ones(8), zeros(8),
                                   pmap=pmap)
        # target's physical position is 40, so its aggressors are the
        # logical rows mapped to physical 38, 39, 41, 42
        for row in (38, 39, 41, 42):
            assert state.read_row(RowId(0, row)).bits.all()

    def test_flips_persist_and_invert(self):
        g = DramGeometry(rows_per_bank=64, row_size_bits=16)
        state = init_attack_layout(g, RowId(0, 30), ones(16), zeros(16))
        state.apply_flips(RowId(0, 30), np.array([0, 5]))
        got = state.read_row(RowId(0, 30)).bits
        assert got[0] and got[5] and not got[1]
        assert state.flip_count(RowId(0, 30)) == 2

    def test_tracked_victims(self):
        g = DramGeometry(rows_per_bank=64, row_size_bits=8)
        state = init_attack_layout(g, RowId(0, 30), ones(8), zeros(8))
        assert [r.row for r in state.tracked_victims()] \
            == [28, 29, 30, 31, 32]


class TestFlipDirection:
    def make(self, aggressor_hex, victim_hex):
        g = DramGeometry(rows_per_bank=64, row_size_bits=8)
        return init_attack_layout(g, RowId(0, 30),
                                  RowData.from_hex(aggressor_hex, 8),
                                  RowData.from_hex(victim_hex, 8))

    def test_unanimous_neighbors_force_their_value(self):
        state = self.make("0xFF", "0x00")
        assert (state.flip_direction(RowId(0, 30)) == 1).all()

    def test_cell_equal_to_forced_value_ineligible(self):
        state = self.make("0xFF", "0xFF")
        assert (state.flip_direction(RowId(0, 30)) == -1).all()

    def test_disagreeing_neighbors_ineligible(self):
        # row 31 sits between the victim (zeros) and row 32 (ones)
        state = self.make("0xFF", "0x00")
        assert (state.flip_direction(RowId(0, 31)) == -1).all()

    def test_eligible_mask_matches_direction(self):
        state = self.make("0xFF", "0x00")
        assert state.eligible_cells(RowId(0, 30)).all()
        assert not state.eligible_cells(RowId(0, 31)).any()
