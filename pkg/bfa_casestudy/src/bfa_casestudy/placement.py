"""Mapping from model bits to DRAM cells.

Bits are packed row by row into small clusters of consecutive DRAM rows
placed at random bases across a couple of banks: neither concentrated
in a single region nor spread uniformly over the whole array.
"""

from __future__ import annotations

import csv

import numpy as np

Key = tuple[int, int, int, int]  # layer, out, in, bit
Loc = tuple[int, int, int]  # bank, row, cell


class PlacementFile:

    def __init__(self, mapping: dict[Key, Loc]):
        if len(set(mapping.values())) != len(mapping):
            raise ValueError("placement maps two bits to the same cell")
        self.mapping = dict(mapping)

    def location(self, layer: int, out: int, inp: int, bit: int) -> Loc:
        return self.mapping[(layer, out, inp, bit)]

    def __len__(self) -> int:
        return len(self.mapping)

    def covers(self, shapes: list[tuple[int, int]]) -> bool:
        need = sum(o * i * 8 for o, i in shapes)
        if len(self.mapping) < need:
            return False
        return all((l, o, i, b) in self.mapping
                   for l, (out, inp) in enumerate(shapes)
                   for o in range(out) for i in range(inp)
                   for b in range(8))

    @classmethod
    def generate(cls, shapes: list[tuple[int, int]], seed: int = 0,
                 rows_per_bank: int = 2**16, cells_per_row: int = 1024,
                 banks: tuple[int, ...] = (0, 1),
                 cluster_rows: int = 4) -> "PlacementFile":
        rng = np.random.default_rng(seed)
        keys = [(l, o, i, b)
                for l, (out, inp) in enumerate(shapes)
                for o in range(out) for i in range(inp) for b in range(8)]
        n_rows = -(-len(keys) // cells_per_row)
        rows: list[tuple[int, int]] = []
        used = set()
        while len(rows) < n_rows:
            bank = int(rng.choice(banks))
            base = int(rng.integers(2, rows_per_bank - 2 - cluster_rows))
            cluster = [(bank, base + k) for k in range(cluster_rows)]
            if any(c in used for c in cluster):
                continue
            used.update(cluster)
            rows.extend(cluster)
        mapping = {}
        for idx, key in enumerate(keys):
            bank, row = rows[idx // cells_per_row]
            mapping[key] = (bank, row, idx % cells_per_row)
        return cls(mapping)

    def write(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["layer", "out", "in", "bit",
                             "bank", "row", "cell"])
            for key in sorted(self.mapping):
                writer.writerow(list(key) + list(self.mapping[key]))

    @classmethod
    def read(cls, path) -> "PlacementFile":
        mapping = {}
        with open(path, newline="") as fh:
            for rec in csv.DictReader(fh):
                key = (int(rec["layer"]), int(rec["out"]),
                       int(rec["in"]), int(rec["bit"]))
                mapping[key] = (int(rec["bank"]), int(rec["row"]),
                                int(rec["cell"]))
        return cls(mapping)
