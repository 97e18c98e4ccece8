"""DRAM geometry, row contents at bit granularity, and the attack data layout.

Rows are bit vectors. The attack layout places an aggressor pattern on the
four aggressor rows (X+-1, X+-2) and a victim pattern on the target row X;
every other row implicitly holds the victim pattern until touched.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class LayoutError(ValueError):
    """Target row too close to the bank edge for the requested layout."""


@dataclass(frozen=True)
class DramGeometry:
    banks_per_chip: int = 1
    rows_per_bank: int = 2**16
    row_size_bits: int = 65536

    def __post_init__(self):
        if self.banks_per_chip < 1 or self.rows_per_bank < 5:
            raise ValueError("need banks_per_chip >= 1 and rows_per_bank >= 5")
        if self.row_size_bits < 1 or self.row_size_bits % 8 != 0:
            raise ValueError("row_size_bits must be a positive multiple of 8")


@dataclass(frozen=True, order=True)
class RowId:
    bank: int
    row: int

    def validate(self, geometry: DramGeometry) -> "RowId":
        if not (0 <= self.bank < geometry.banks_per_chip):
            raise ValueError(f"bank {self.bank} out of range")
        if not (0 <= self.row < geometry.rows_per_bank):
            raise ValueError(f"row {self.row} out of range")
        return self


class RowData:
    """Fixed-length bit vector holding one row's contents."""

    def __init__(self, bits: np.ndarray):
        self.bits = np.asarray(bits, dtype=bool)
        if self.bits.ndim != 1:
            raise ValueError("row data must be one-dimensional")

    def __len__(self) -> int:
        return len(self.bits)

    def __eq__(self, other) -> bool:
        return isinstance(other, RowData) and np.array_equal(self.bits, other.bits)

    def copy(self) -> "RowData":
        return RowData(self.bits.copy())

    @classmethod
    def from_hex(cls, pattern: str, row_size_bits: int) -> "RowData":
        """Build a row by repeating a hex pattern, e.g. "0xFF" -> all ones."""
        digits = pattern.lower().removeprefix("0x")
        if not digits or any(c not in "0123456789abcdef" for c in digits):
            raise ValueError(f"bad hex pattern {pattern!r}")
        unit = np.array(
            [(int(c, 16) >> (3 - b)) & 1 for c in digits for b in range(4)], dtype=bool
        )
        reps = -(-row_size_bits // len(unit))
        return cls(np.tile(unit, reps)[:row_size_bits])


def count_bitflips(before: RowData, after: RowData) -> int:
    """Hamming distance between two equally sized rows."""
    if len(before) != len(after):
        raise ValueError("row length mismatch")
    return int(np.count_nonzero(before.bits ^ after.bits))


class PhysicalMap:
    """Bijection from logical row index to physical row position."""

    def __init__(self, rows_per_bank: int, mapping: dict[int, int] | None = None):
        self.rows_per_bank = rows_per_bank
        table = np.arange(rows_per_bank, dtype=np.int64)
        if mapping:
            for logical, physical in mapping.items():
                table[logical] = physical
        if not np.array_equal(np.sort(table), np.arange(rows_per_bank)):
            raise ValueError("mapping is not a bijection over the bank's rows")
        self._to_phys = table
        self._to_logical = np.empty_like(table)
        self._to_logical[table] = np.arange(rows_per_bank)

    def physical(self, logical: int) -> int:
        return int(self._to_phys[logical])

    def logical(self, physical: int) -> int:
        return int(self._to_logical[physical])

    @classmethod
    def from_file(cls, path, rows_per_bank: int) -> "PhysicalMap":
        """Load "logical physical" pairs, one per line; '#' starts a comment."""
        mapping = {}
        with open(path) as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                logical, physical = line.split()
                mapping[int(logical)] = int(physical)
        return cls(rows_per_bank, mapping)


def physical_neighbors(pmap: PhysicalMap, row: RowId, distance: int) -> set[RowId]:
    """Rows at the given physical distance, mapped back to logical ids.

    Edge rows return fewer neighbors; interior rows return two.
    """
    if distance < 1:
        raise ValueError("distance must be >= 1")
    phys = pmap.physical(row.row)
    out = set()
    for cand in (phys - distance, phys + distance):
        if 0 <= cand < pmap.rows_per_bank:
            out.add(RowId(row.bank, pmap.logical(cand)))
    return out


@dataclass
class DramArrayState:
    """Bank contents after the attack layout is written.

    Untouched rows lazily read back as the victim pattern. ``flipped`` masks
    grow monotonically; a refresh rewrites current values and never clears
    them.
    """

    geometry: DramGeometry
    pmap: PhysicalMap
    target: RowId
    aggressor_pattern: RowData
    victim_pattern: RowData
    initial: dict[RowId, RowData] = field(default_factory=dict)
    flipped: dict[RowId, np.ndarray] = field(default_factory=dict)

    def initial_row(self, row: RowId) -> RowData:
        return self.initial.get(row, self.victim_pattern).copy()

    def read_row(self, row: RowId) -> RowData:
        """Current contents: the initial pattern with flipped cells inverted."""
        data = self.initial_row(row)
        mask = self.flipped.get(row)
        if mask is not None:
            data.bits[mask] = ~data.bits[mask]
        return data

    def apply_flips(self, row: RowId, cell_indices: np.ndarray) -> None:
        mask = self.flipped.setdefault(
            row, np.zeros(self.geometry.row_size_bits, dtype=bool)
        )
        mask[cell_indices] = True

    def flip_count(self, row: RowId) -> int:
        mask = self.flipped.get(row)
        return int(mask.sum()) if mask is not None else 0

    def tracked_victims(self) -> list[RowId]:
        rows = {self.target}
        for distance in (1, 2):
            rows |= physical_neighbors(self.pmap, self.target, distance)
        return sorted(rows)

    def flip_direction(self, row: RowId) -> np.ndarray:
        """Per-cell forced flip value, from the distance-1 aggressor majority.

        With two neighbors a flip needs both to agree; a disagreeing pair
        gives no disparity majority and the cell cannot flip. Cells whose
        stored bit already equals the forced value cannot flip either. The
        result is -1 where no flip is possible, else the value flipped to.
        """
        neighbors = sorted(physical_neighbors(self.pmap, row, 1))
        stacked = np.stack([self.read_row(n).bits for n in neighbors])
        direction = np.where(
            np.all(stacked, axis=0), 1, np.where(~np.any(stacked, axis=0), 0, -1)
        )
        current = self.read_row(row).bits.astype(int)
        direction[direction == current] = -1
        return direction

    def eligible_cells(self, row: RowId) -> np.ndarray:
        """Boolean mask of cells the direction rule allows to flip."""
        return self.flip_direction(row) >= 0


def init_attack_layout(
    geometry: DramGeometry,
    target: RowId,
    aggressor_pattern: RowData,
    victim_pattern: RowData,
    pmap: PhysicalMap | None = None,
) -> DramArrayState:
    """Write the multi-sided layout: X+-1 and X+-2 aggressors around victim X.

    Adjacency is physical: with a permuted map the aggressors land on the
    logical rows whose physical positions neighbor the target.
    """
    target.validate(geometry)
    for pat in (aggressor_pattern, victim_pattern):
        if len(pat) != geometry.row_size_bits:
            raise ValueError("pattern length does not match row size")
    pmap = pmap or PhysicalMap(geometry.rows_per_bank)
    phys = pmap.physical(target.row)
    if not 2 <= phys <= geometry.rows_per_bank - 3:
        raise LayoutError(
            f"target row {target.row} (physical {phys}) leaves X+-2 outside "
            f"the bank (rows_per_bank={geometry.rows_per_bank})"
        )
    state = DramArrayState(
        geometry=geometry,
        pmap=pmap,
        target=target,
        aggressor_pattern=aggressor_pattern,
        victim_pattern=victim_pattern,
    )
    for distance in (1, 2):
        for row in physical_neighbors(pmap, target, distance):
            state.initial[row] = aggressor_pattern.copy()
    state.initial[target] = victim_pattern.copy()
    return state
