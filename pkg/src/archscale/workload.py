"""Workload specification and deterministic traffic generation.

Rates are emails per second; arrivals are realized per tick either
stochastically (Poisson counts from a seeded generator) or exactly
(deterministic rounding of the cumulative rate integral), so acceptance
runs can be reproduced bit for bit.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
import numpy as np

from .model import EmailProfile


class WorkloadError(ValueError):
    """Malformed workload specification or trace file."""


@dataclass(frozen=True)
class Diurnal:
    """Raised-cosine day curve between ``base`` and ``peak`` emails/sec.

    The curve starts at ``base`` when ``phase_s`` is 0 and reaches ``peak``
    half a period later.
    """

    base: float
    peak: float
    period_s: float
    phase_s: float = 0.0


@dataclass(frozen=True)
class Steps:
    """Piecewise-constant rates: list of (start tick, emails/sec)."""

    points: tuple[tuple[int, float], ...]


@dataclass(frozen=True)
class Trace:
    """Replay of (tick, emails/sec) rows from a CSV file."""

    path: str


@dataclass(frozen=True)
class WorkloadSpec:
    kind: Diurnal | Steps | Trace
    jitter: float = 0.0  # multiplicative noise bound, stochastic mode only

    def __post_init__(self):
        if not 0 <= self.jitter < 1:
            raise WorkloadError("jitter must lie in [0, 1)")


def _load_trace(path: str) -> tuple[tuple[int, float], ...]:
    points: list[tuple[int, float]] = []
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            for lineno, row in enumerate(csv.reader(fh), start=1):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                if row[0].strip().lower() in ("tick", "t"):
                    continue
                if len(row) < 2:
                    raise WorkloadError(f"{path}:{lineno}: expected 'tick,rate' rows")
                try:
                    tick, rate = int(row[0]), float(row[1])
                except ValueError as exc:
                    raise WorkloadError(f"{path}:{lineno}: malformed row {row!r}") from exc
                points.append((tick, rate))
    except OSError as exc:
        raise WorkloadError(f"cannot read trace file {path}: {exc}") from exc
    if not points:
        raise WorkloadError(f"trace file {path} holds no rate points")
    points.sort()
    return tuple(points)


def rate_curve(spec: WorkloadSpec, duration_ticks: int, ticks_per_second: int) -> np.ndarray:
    """Per-tick rate (emails/sec) over the whole run."""
    t = np.arange(duration_ticks, dtype=np.float64) / ticks_per_second
    kind = spec.kind
    if isinstance(kind, Diurnal):
        if kind.base < 0 or kind.peak < kind.base or kind.period_s <= 0:
            raise WorkloadError("diurnal needs 0 <= base <= peak and period > 0")
        swing = (kind.peak - kind.base) / 2.0
        rates = kind.base + swing * (1.0 - np.cos(2.0 * math.pi * (t - kind.phase_s) / kind.period_s))
        return rates
    if isinstance(kind, (Steps, Trace)):
        points = kind.points if isinstance(kind, Steps) else _load_trace(kind.path)
        if any(r < 0 for _, r in points):
            raise WorkloadError("rates must be >= 0")
        rates = np.zeros(duration_ticks, dtype=np.float64)
        for i, (start, rate) in enumerate(points):
            end = points[i + 1][0] if i + 1 < len(points) else duration_ticks
            start = max(0, start)
            if start < end:
                rates[start:min(end, duration_ticks)] = rate
        return rates
    raise WorkloadError(f"unknown workload kind {kind!r}")


def generate_arrivals(
    spec: WorkloadSpec,
    seed: int,
    duration_ticks: int,
    ticks_per_second: int,
    exact: bool = False,
) -> np.ndarray:
    """Per-tick arrival counts, deterministic for a given seed and mode."""
    rates = rate_curve(spec, duration_ticks, ticks_per_second)
    per_tick = rates / ticks_per_second
    if exact:
        # The epsilon absorbs cumulative float drift (~1e-12 over 1e7 ticks)
        # so windows of a rational rate count the same total every time.
        cum = np.cumsum(per_tick)
        floors = np.floor(cum + 1e-6).astype(np.int64)
        counts = np.diff(floors, prepend=0)
        return counts
    rng = np.random.Generator(np.random.PCG64(seed))
    if spec.jitter > 0:
        noise = rng.uniform(-spec.jitter, spec.jitter, size=duration_ticks)
        per_tick = np.maximum(per_tick * (1.0 + noise), 0.0)
    return rng.poisson(per_tick).astype(np.int64)


@dataclass(frozen=True)
class EmailBatch:
    """Pre-sampled structures for a run's emails, indexable by email id."""

    blocks: np.ndarray  # int per email
    attachments: np.ndarray  # int per email
    virus_masks: np.ndarray  # bitmask over attachment slots

    def __len__(self) -> int:
        return len(self.blocks)


@dataclass
class EmailStructure:
    blocks: int
    attachments: int
    virus_flags: tuple[bool, ...] = field(default_factory=tuple)


def sample_email(profile: EmailProfile, rng: np.random.Generator) -> EmailStructure:
    """Draw one email's structure from the profile's supports."""
    b_lo, b_hi = profile.block_count_support
    a_lo, a_hi = profile.attachment_count_support
    blocks = int(rng.integers(b_lo, b_hi + 1))
    attachments = int(rng.integers(a_lo, a_hi + 1))
    flags = tuple(bool(rng.random() < float(profile.p_virus)) for _ in range(attachments))
    return EmailStructure(blocks, attachments, flags)


def sample_email_batch(profile: EmailProfile, rng: np.random.Generator, count: int) -> EmailBatch:
    """Vectorized structure sampling for ``count`` emails."""
    b_lo, b_hi = profile.block_count_support
    a_lo, a_hi = profile.attachment_count_support
    blocks = rng.integers(b_lo, b_hi + 1, size=count, dtype=np.int64)
    attachments = rng.integers(a_lo, a_hi + 1, size=count, dtype=np.int64)
    max_att = int(a_hi)
    if max_att > 0:
        draws = rng.random(size=(count, max_att)) < float(profile.p_virus)
        within = np.arange(max_att)[None, :] < attachments[:, None]
        bits = (draws & within).astype(np.int64)
        masks = (bits << np.arange(max_att)[None, :]).sum(axis=1)
    else:
        masks = np.zeros(count, dtype=np.int64)
    return EmailBatch(blocks=blocks, attachments=attachments, virus_masks=masks)
