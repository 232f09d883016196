"""Intervals and barcodes.

A bar is a half-open lifespan ``[birth, death)`` with a finite birth; the
death may be ``math.inf`` for features that never die.  A barcode is a finite
multiset of bars in a fixed homology degree; duplicates are kept as distinct
entries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass(frozen=True, order=True)
class Interval:
    birth: float
    death: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.birth):
            raise ValueError(f"interval birth must be finite, got {self.birth}")
        if self.death < self.birth:
            raise ValueError(f"interval death {self.death} < birth {self.birth}")

    @property
    def length(self) -> float:
        return self.death - self.birth

    @property
    def is_essential(self) -> bool:
        return math.isinf(self.death)

    @property
    def is_empty(self) -> bool:
        """True for zero-length bars, whose half-open support is empty."""
        return self.death == self.birth

    def truncated(self, h: float) -> Interval | None:
        """Restrict the bar to heights >= h; None if nothing remains.

        Unchanged when h <= birth, rebased to [h, death) when the bar
        straddles h, dropped when h is at or past the death.
        """
        if h <= self.birth:
            return self
        if h < self.death:
            return Interval(h, self.death)
        return None


@dataclass(frozen=True)
class Barcode:
    bars: tuple[Interval, ...] = field(default=())
    degree: int = 0

    def __post_init__(self) -> None:
        if self.degree < 0:
            raise ValueError("homology degree must be non-negative")
        object.__setattr__(self, "bars", tuple(self.bars))

    def __len__(self) -> int:
        return len(self.bars)

    def __iter__(self):
        return iter(self.bars)

    def sorted_bars(self) -> tuple[Interval, ...]:
        """Canonical ordering, used for multiset comparison."""
        return tuple(sorted(self.bars, key=lambda i: (i.birth, i.death)))

    def drop_empty(self) -> Barcode:
        return Barcode(tuple(b for b in self.bars if not b.is_empty), self.degree)

    def same_multiset(self, other: Barcode) -> bool:
        return self.degree == other.degree and self.sorted_bars() == other.sorted_bars()
