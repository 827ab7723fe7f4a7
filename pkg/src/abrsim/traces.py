"""Piecewise-constant network throughput traces.

A trace is a step function over time: each sample ``(start_s, kbps)`` holds
until the next sample's start, and the final sample holds to the end of the
trace (and beyond it, for downloads that overrun). Traces carry a fixed
per-request latency and a protocol overhead factor; the effective rate a
download sees is ``kbps * (1 - overhead_factor)``.
"""
from __future__ import annotations

import bisect
import csv
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

WIFI_LATENCY_S = 0.02
HSPA_LATENCY_S = 0.10
DEFAULT_OVERHEAD = 0.05

TRACE_CSV_HEADER = ("time_s", "throughput_kbps")


class TraceError(ValueError):
    """Malformed trace data or an invalid trace operation."""


@dataclass(frozen=True)
class BandwidthTrace:
    """Immutable throughput-over-time step function.

    samples: ordered (start_s, kbps) pairs; starts strictly increasing,
        first at 0.0; kbps >= 0 (zero models outages).
    duration: total trace length in seconds, >= last sample start.
    latency: fixed one-way request latency charged once per segment fetch.
    overhead_factor: protocol overhead fraction in [0, 0.5].
    """

    samples: tuple[tuple[float, float], ...]
    duration: float
    latency: float = 0.0
    overhead_factor: float = DEFAULT_OVERHEAD

    # derived lookup arrays, filled in __post_init__
    _starts: tuple[float, ...] = field(init=False, repr=False, compare=False)
    _rates: tuple[float, ...] = field(init=False, repr=False, compare=False)
    _cum_kbits: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.samples:
            raise TraceError("trace has no samples")
        samples = tuple((float(t), float(r)) for t, r in self.samples)
        object.__setattr__(self, "samples", samples)
        if samples[0][0] != 0.0:
            raise TraceError("first sample must start at time 0")
        prev = -1.0
        for t, r in samples:
            if t <= prev:
                raise TraceError(f"sample times must be strictly increasing (at t={t})")
            if r < 0:
                raise TraceError(f"negative throughput {r} at t={t}")
            prev = t
        if self.duration < samples[-1][0] or self.duration <= 0:
            raise TraceError("duration must be positive and cover the last sample")
        if self.latency < 0:
            raise TraceError("latency must be >= 0")
        if not 0.0 <= self.overhead_factor <= 0.5:
            raise TraceError("overhead_factor must be within [0, 0.5]")
        starts = tuple(t for t, _ in samples)
        rates = tuple(r for _, r in samples)
        # cumulative nominal kilobits delivered from t=0 up to each sample start
        cum = [0.0]
        for i in range(1, len(samples)):
            cum.append(cum[-1] + rates[i - 1] * (starts[i] - starts[i - 1]))
        object.__setattr__(self, "_starts", starts)
        object.__setattr__(self, "_rates", rates)
        object.__setattr__(self, "_cum_kbits", tuple(cum))

    @property
    def effective_factor(self) -> float:
        return 1.0 - self.overhead_factor

    @property
    def final_rate(self) -> float:
        return self._rates[-1]

    def rate_at(self, t: float) -> float:
        """Nominal throughput at time t; times past the end use the final rate."""
        if t < 0:
            raise TraceError("time before trace start")
        i = bisect.bisect_right(self._starts, t) - 1
        return self._rates[i]

    def integral_kbits(self, a: float, b: float) -> float:
        """Nominal kilobits delivered over [a, b]; b may exceed the duration,
        in which case the final rate is extended."""
        if a < 0 or b < a:
            raise TraceError("bad integration interval")
        return self._cum_to(b) - self._cum_to(a)

    def _cum_to(self, t: float) -> float:
        i = bisect.bisect_right(self._starts, t) - 1
        return self._cum_kbits[i] + self._rates[i] * (t - self._starts[i])

    def time_to_deliver(self, start: float, kbits_nominal: float) -> float:
        """Smallest t >= start with integral_kbits(start, t) >= kbits_nominal.

        Raises TraceError when the trace tail is all-zero and the remaining
        bits can never arrive (a starved download).
        """
        if kbits_nominal <= 0:
            return start
        target = self._cum_to(start) + kbits_nominal
        # first sample boundary whose cumulative total reaches the target
        j = bisect.bisect_left(self._cum_kbits, target)
        if j < len(self._cum_kbits):
            i = j - 1
            # walk back over zero-rate plateaus that contributed nothing
            while i > 0 and self._cum_kbits[i] >= target:
                i -= 1
            rate = self._rates[i]
            if rate <= 0:
                # target met exactly at the next boundary
                return self._starts[i + 1]
            t = self._starts[i] + (target - self._cum_kbits[i]) / rate
            return max(t, start)
        rate = self._rates[-1]
        if rate <= 0:
            raise TraceError("download starves: trace ends with zero throughput")
        t = self._starts[-1] + (target - self._cum_kbits[-1]) / rate
        return max(t, start)


def load_trace(
    path: str | Path,
    latency: float = 0.0,
    overhead_factor: float = DEFAULT_OVERHEAD,
    duration: float | None = None,
) -> BandwidthTrace:
    """Load a trace CSV (header ``time_s,throughput_kbps``).

    The file does not carry a duration; unless one is given, the final sample
    is assumed to last as long as the preceding inter-sample gap (1 s for a
    single-sample file).
    """
    rows: list[tuple[float, float]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise TraceError(f"{path}: empty trace file")
        if [h.strip() for h in header] != list(TRACE_CSV_HEADER):
            raise TraceError(f"{path}: expected header {','.join(TRACE_CSV_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise TraceError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            try:
                t, r = float(row[0]), float(row[1])
            except ValueError as exc:
                raise TraceError(f"{path}:{lineno}: {exc}") from None
            if rows and t <= rows[-1][0]:
                raise TraceError(f"{path}:{lineno}: sample times out of order")
            if r < 0:
                raise TraceError(f"{path}:{lineno}: negative throughput")
            rows.append((t, r))
    if not rows:
        raise TraceError(f"{path}: no samples")
    if duration is None:
        if len(rows) > 1:
            duration = rows[-1][0] + (rows[-1][0] - rows[-2][0])
        else:
            duration = rows[0][0] + 1.0
    return BandwidthTrace(tuple(rows), duration, latency, overhead_factor)


def save_trace(trace: BandwidthTrace, path: str | Path) -> None:
    """Write the trace sample grid as CSV (UTF-8, LF line endings)."""
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_CSV_HEADER)
        for t, r in trace.samples:
            writer.writerow([repr(float(t)), repr(float(r))])


def time_average(trace: BandwidthTrace) -> float:
    """Nominal throughput averaged over the whole trace."""
    return trace.integral_kbits(0.0, trace.duration) / trace.duration


def average_throughput(trace: BandwidthTrace, start: float, end: float) -> float:
    """Exact nominal mean throughput over [start, end] within the trace."""
    if not 0.0 <= start < end <= trace.duration:
        raise TraceError(f"interval [{start}, {end}] outside trace [0, {trace.duration}]")
    return trace.integral_kbits(start, end) / (end - start)


def rescale_trace(trace: BandwidthTrace, target_average: float) -> BandwidthTrace:
    """Scale every sample so the whole-trace time average equals target_average."""
    if target_average <= 0:
        raise TraceError("target average must be positive")
    avg = time_average(trace)
    if avg <= 0:
        raise TraceError("cannot rescale an all-zero trace")
    k = target_average / avg
    scaled = tuple((t, r * k) for t, r in trace.samples)
    return BandwidthTrace(scaled, trace.duration, trace.latency, trace.overhead_factor)


def _fade_schedule(
    rng: random.Random, duration: float, period: float
) -> list[tuple[float, float]]:
    """Seeded alternation of long fades and brief dips, separated by roughly
    one period of clear air."""
    fades: list[tuple[float, float]] = []
    t = rng.uniform(26.0, 40.0)
    long_next = rng.random() < 0.5
    while t < duration - 4.0:
        length = rng.uniform(85.0, 110.0) if long_next else rng.uniform(4.5, 7.0)
        length = min(length, duration - t - 1.0)
        if length >= 3.0:
            fades.append((t, t + length))
        long_next = not long_next
        t += length + rng.uniform(0.82, 1.18) * period
    return fades


def generate_wifi_trace(
    mean: float,
    amplitude: float,
    period: float = 45.0,
    duration: float = 600.0,
    seed: int = 0,
    *,
    latency: float = WIFI_LATENCY_S,
    overhead_factor: float = DEFAULT_OVERHEAD,
) -> BandwidthTrace:
    """Synthesize a Wi-Fi-like trace: a steady band around the mean broken by
    seeded fades, plus per-second jitter.

    The output is bounded to [mean - amplitude, mean + amplitude] and its time
    average lands on the mean (up to boundary clamping). Identical arguments
    produce identical traces.
    """
    if mean <= 0:
        raise TraceError("mean must be positive")
    if amplitude < 0 or amplitude >= mean:
        raise TraceError("amplitude must satisfy 0 <= amplitude < mean")
    if period <= 0 or duration <= 0:
        raise TraceError("period and duration must be positive")
    if amplitude == 0.0:
        return BandwidthTrace(((0.0, float(mean)),), float(duration), latency, overhead_factor)

    rng = random.Random(f"wifi:{seed}")
    fades = _fade_schedule(rng, duration, period)
    fade_level = mean - 0.875 * amplitude
    fade_time = sum(b - a for a, b in fades)
    # trim trailing fades if they would push the clear-air level past the bound
    while fades and fade_time / duration > 0.60:
        a, b = fades.pop()
        fade_time -= b - a
    base_level = mean
    if fade_time > 0.0 and duration > fade_time:
        base_level = (mean * duration - fade_level * fade_time) / (duration - fade_time)
        base_level = min(base_level, mean + 0.92 * amplitude)
    jitter = 0.02 * amplitude

    n = math.ceil(duration)
    bounds = iter(sorted(fades))
    cur = next(bounds, None)
    values: list[float] = []
    for k in range(n):
        mid = k + 0.5
        while cur is not None and mid >= cur[1]:
            cur = next(bounds, None)
        in_fade = cur is not None and cur[0] <= mid < cur[1]
        level = fade_level if in_fade else base_level
        values.append(level + rng.uniform(-1.0, 1.0) * jitter)

    samples = tuple((float(k), values[k]) for k in range(n))
    trace = BandwidthTrace(samples, float(duration), latency, overhead_factor)
    trace = rescale_trace(trace, mean)
    lo, hi = mean - amplitude, mean + amplitude
    clamped = tuple((t, min(hi, max(lo, r))) for t, r in trace.samples)
    return BandwidthTrace(clamped, trace.duration, latency, overhead_factor)


_HSPA_LEVELS = (0.45, 0.65, 0.90, 1.15, 1.45)
_HSPA_STEPS = (-2, -1, -1, 0, 1, 1, 2)


def generate_hspa_trace(
    mean: float,
    duration: float,
    outage_rate: float = 0.02,
    seed: int = 0,
    *,
    latency: float = HSPA_LATENCY_S,
    overhead_factor: float = DEFAULT_OVERHEAD,
) -> BandwidthTrace:
    """Synthesize a mobile-network-like trace: plateau/ramp regimes covering a
    wide rate range, brief spikes well above the mean, and hard outages at
    exactly zero. The result is rescaled so its time average equals the mean
    to within float precision.
    """
    if duration <= 0:
        raise TraceError("duration must be positive")
    if mean <= 0:
        raise TraceError("mean must be positive")
    if outage_rate < 0:
        raise TraceError("outage_rate must be >= 0")

    rng = random.Random(f"hspa:{seed}")
    n = math.ceil(duration)
    rel = [0.0] * n

    idx = rng.choice((1, 2, 2, 3))
    prev = _HSPA_LEVELS[idx]
    t = 0
    while t < n:
        length = rng.randint(5, 14)
        idx = min(len(_HSPA_LEVELS) - 1, max(0, idx + rng.choice(_HSPA_STEPS)))
        level = _HSPA_LEVELS[idx]
        ramp = rng.randint(2, 5)
        for k in range(length):
            if t >= n:
                break
            v = prev + (level - prev) * (k + 1) / ramp if k < ramp else level
            rel[t] = v * (1.0 + rng.uniform(-0.03, 0.03))
            t += 1
        prev = level

    # spikes: sharp-edged excursions far above the running level
    spike_positions: list[int] = []
    st = rng.uniform(30.0, 80.0)
    while st < n - 6:
        ln = rng.uniform(2.0, 4.0)
        lvl = rng.uniform(2.3, 2.8)
        for k in range(int(st), min(n - 1, int(st + ln))):
            rel[k] = lvl
            spike_positions.append(k)
        st += rng.uniform(80.0, 140.0)
    if not spike_positions:
        pos = max(2, int(n * 0.4))
        for k in range(pos, min(n - 1, pos + 3)):
            rel[k] = 2.5
            spike_positions.append(k)

    # outages: exact zeros with a seeded refractory gap, kept off the tail so
    # in-flight downloads can always finish
    if outage_rate > 0:
        spans: list[tuple[float, float]] = []
        ot = 25.0 + rng.expovariate(outage_rate)
        while ot < n - 8:
            ln = rng.uniform(1.5, 3.2)
            spans.append((ot, min(ot + ln, n - 6)))
            ot += ln + max(20.0, rng.expovariate(outage_rate))
        if not spans and n > 60:
            pos = rng.uniform(40.0, n - 20.0)
            spans.append((pos, pos + rng.uniform(1.8, 2.8)))
        for a, b in spans:
            for k in range(n):
                if a <= k + 0.5 < b:
                    rel[k] = 0.0
            if rng.random() < 0.45:
                lvl = rng.uniform(2.0, 2.6)
                for k in range(int(b) + 1, min(n - 1, int(b) + 1 + rng.randint(2, 3))):
                    rel[k] = lvl

    # keep the guaranteed excursion even if an outage overwrote the spikes
    if max(rel) < 2.2:
        pos = max(2, min(n - 2, int(n * 0.35)))
        rel[pos] = rel[pos + 1 if pos + 1 < n else pos] = 2.4
    if rel[n - 1] <= 0.0:
        rel[n - 1] = _HSPA_LEVELS[1]

    samples = tuple((float(k), rel[k]) for k in range(n))
    trace = BandwidthTrace(samples, float(duration), latency, overhead_factor)
    return rescale_trace(trace, mean)
