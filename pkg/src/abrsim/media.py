"""Encoded-video model: the bitrate ladder and per-segment sizes.

Segment sizes can vary around the nominal level rate (variable-bitrate
encoding); the same seeded variation applies to every quality level of a
segment, since scene complexity does not depend on the encoding level.
"""
from __future__ import annotations

import csv
import math
import random
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class BitrateLadder:
    """Ordered encoding levels: (nominal kbps, label), lowest first."""

    levels: tuple[tuple[float, str], ...]

    def __post_init__(self) -> None:
        if len(self.levels) < 2:
            raise ValueError("ladder needs at least 2 levels")
        rates = [r for r, _ in self.levels]
        if any(b <= a for a, b in zip(rates, rates[1:])):
            raise ValueError("ladder bitrates must be strictly increasing")

    @property
    def bitrates(self) -> tuple[float, ...]:
        return tuple(r for r, _ in self.levels)

    @property
    def top(self) -> int:
        """Highest level index."""
        return len(self.levels) - 1

    def bitrate_of(self, level: int) -> float:
        if not 0 <= level < len(self.levels):
            raise IndexError(f"level {level} outside ladder [0, {self.top}]")
        return self.levels[level][0]


#: 150 kbps .. 2.5 Mbps ladder used throughout the bundled experiments.
DEFAULT_LADDER = BitrateLadder(
    (
        (150.0, "320x240"),
        (300.0, "480x360"),
        (600.0, "854x480"),
        (1200.0, "1280x720"),
        (2500.0, "1920x1080"),
    )
)


@dataclass(frozen=True)
class VideoModel:
    """A clip split into equal-duration segments encoded at every ladder level.

    sizes[i][q] is the byte size of segment i at level q.
    """

    ladder: BitrateLadder
    segment_duration: float
    segment_count: int
    sizes: tuple[tuple[int, ...], ...]
    vbr_spread: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.segment_count < 1 or len(self.sizes) != self.segment_count:
            raise ValueError("segment count does not match size table")
        for row in self.sizes:
            if len(row) != len(self.ladder.levels):
                raise ValueError("size row does not cover every ladder level")
            if any(b <= 0 for b in row):
                raise ValueError("segment sizes must be positive")
            if any(b2 <= b1 for b1, b2 in zip(row, row[1:])):
                raise ValueError("segment sizes must increase with level")

    @property
    def duration(self) -> float:
        return self.segment_count * self.segment_duration

    def size_of(self, segment_index: int, level: int) -> int:
        if not 0 <= segment_index < self.segment_count:
            raise IndexError(f"segment {segment_index} outside [0, {self.segment_count})")
        if not 0 <= level < len(self.ladder.levels):
            raise IndexError(f"level {level} outside ladder")
        return self.sizes[segment_index][level]


def bitrate_of(video: VideoModel, level: int) -> float:
    """Nominal kbps of a ladder level; policies decide on this, not actual sizes."""
    return video.ladder.bitrate_of(level)


def _vbr_factors(count: int, spread: float, seed: int) -> list[float]:
    """Antithetic uniform draws in [-spread, +spread] with an exact zero mean."""
    rng = random.Random(f"vbr:{seed}")
    factors = [0.0] * count
    for i in range(0, count - 1, 2):
        u = rng.uniform(-spread, spread)
        factors[i] = u
        factors[i + 1] = -u
    return factors


def build_video(
    ladder: BitrateLadder,
    segment_duration: float,
    total_duration: float,
    vbr_spread: float = 0.0,
    seed: int = 0,
) -> VideoModel:
    """Build a VideoModel with seeded per-segment size variation.

    Segment i at level q weighs nominal_bytes(q) * (1 + e_i) with e_i drawn
    uniformly in [-vbr_spread, +vbr_spread]; e_i is shared across levels.
    """
    if segment_duration <= 0:
        raise ValueError("segment_duration must be positive")
    if total_duration < segment_duration:
        raise ValueError("total_duration must cover at least one segment")
    if not 0.0 <= vbr_spread < 0.5:
        raise ValueError("vbr_spread must be in [0, 0.5)")
    count = math.ceil(total_duration / segment_duration)
    factors = _vbr_factors(count, vbr_spread, seed)
    nominal = [rate * segment_duration * 1000.0 / 8.0 for rate in ladder.bitrates]
    sizes = tuple(
        tuple(max(1, round(b * (1.0 + e))) for b in nominal) for e in factors
    )
    return VideoModel(ladder, float(segment_duration), count, sizes, vbr_spread, seed)


VIDEO_CSV_HEADER = ("segment_index", "level_index", "bytes")


def save_video_sizes(video: VideoModel, path: str | Path) -> None:
    """Pin the exact size table to CSV for regression use."""
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(VIDEO_CSV_HEADER)
        for i, row in enumerate(video.sizes):
            for q, b in enumerate(row):
                writer.writerow([i, q, b])


def load_video_sizes(
    path: str | Path, ladder: BitrateLadder, segment_duration: float
) -> VideoModel:
    """Rebuild a VideoModel from a pinned size CSV."""
    table: dict[int, dict[int, int]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != list(VIDEO_CSV_HEADER):
            raise ValueError(f"{path}: expected header {','.join(VIDEO_CSV_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                i, q, b = int(row[0]), int(row[1]), int(row[2])
            except (ValueError, IndexError) as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            table.setdefault(i, {})[q] = b
    if not table:
        raise ValueError(f"{path}: no size rows")
    count = max(table) + 1
    n_levels = len(ladder.levels)
    sizes = []
    for i in range(count):
        row = table.get(i)
        if row is None or sorted(row) != list(range(n_levels)):
            raise ValueError(f"{path}: segment {i} is missing levels")
        sizes.append(tuple(row[q] for q in range(n_levels)))
    return VideoModel(ladder, float(segment_duration), count, tuple(sizes))
