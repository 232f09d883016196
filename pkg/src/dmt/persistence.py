"""Persistence by boundary-matrix reduction over GF(2).

Standard left-to-right column reduction in filtration order.  Columns only
ever combine with columns of the same dimension, so the matrix is reduced one
dimension at a time with columns stored as Python-int bitsets indexed by the
filtration rank of the faces.  Every pair records its birth simplex, which
the decoration layer needs to place bars on merge trees.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from .barcode import Barcode, Interval
from .filtration import FilteredComplex


@dataclass(frozen=True)
class PersistencePair:
    interval: Interval
    degree: int
    birth_simplex: int
    death_simplex: int | None

    @property
    def is_essential(self) -> bool:
        return self.death_simplex is None


def reduce(complex: FilteredComplex) -> list[PersistencePair]:
    """All persistence pairs of the complex, zero-length bars included.

    Unpaired creators in any dimension become essential bars [b, inf).
    """
    problems = complex.validate()
    if problems:
        raise ValueError("invalid filtered complex: " + "; ".join(problems))

    by_dim: dict[int, list[int]] = {}
    for i in range(len(complex)):
        by_dim.setdefault(complex.dimension(i), []).append(i)
    # rank of each simplex within its own dimension, in filtration order
    rank: dict[int, int] = {}
    for dim, idxs in by_dim.items():
        for r, i in enumerate(idxs):
            rank[i] = r

    pairs: list[PersistencePair] = []
    paired_births: set[int] = set()

    for dim in sorted(by_dim):
        if dim == 0:
            continue
        faces_of_dim = by_dim.get(dim - 1, [])
        pivot_owner: dict[int, int] = {}  # face rank -> reduced column (global index)
        reduced: dict[int, int] = {}  # global index -> bitset over face ranks
        for j in by_dim[dim]:
            verts = complex.simplices[j][0]
            col = 0
            for face in itertools.combinations(verts, dim):
                col ^= 1 << rank[complex.index[face]]
            while col:
                low = col.bit_length() - 1
                owner = pivot_owner.get(low)
                if owner is None:
                    break
                col ^= reduced[owner]
            if col:
                low = col.bit_length() - 1
                pivot_owner[low] = j
                reduced[j] = col
                birth = faces_of_dim[low]
                paired_births.add(birth)
                pairs.append(
                    PersistencePair(
                        interval=Interval(complex.value(birth), complex.value(j)),
                        degree=dim - 1,
                        birth_simplex=birth,
                        death_simplex=j,
                    )
                )
            else:
                reduced[j] = 0

    # every simplex either kills (nonzero reduced column, recorded as a
    # death) or creates; creators never paired as a birth are essential
    dying = {p.death_simplex for p in pairs}
    for dim, idxs in by_dim.items():
        for j in idxs:
            if j in dying or j in paired_births:
                continue
            pairs.append(
                PersistencePair(
                    interval=Interval(complex.value(j), float("inf")),
                    degree=dim,
                    birth_simplex=j,
                    death_simplex=None,
                )
            )
    pairs.sort(key=lambda p: (p.degree, p.interval.birth, p.interval.death, p.birth_simplex))
    return pairs


def barcode(pairs: list[PersistencePair], degree: int, drop_zero_length: bool = True) -> Barcode:
    """Bars of one homology degree, optionally without zero-length bars."""
    bars = [p.interval for p in pairs if p.degree == degree]
    if drop_zero_length:
        bars = [b for b in bars if not b.is_empty]
    return Barcode(bars=tuple(bars), degree=degree)
