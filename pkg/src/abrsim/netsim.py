"""Virtual-time download engine and client-side throughput metering.

Downloads follow a fluid-flow model: the request pays the trace latency once,
then bytes arrive by integrating the trace's effective throughput until the
segment is delivered. The meter reproduces what a real client would measure,
so the request latency is part of the measured rate's denominator.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .traces import BandwidthTrace, TraceError


class DownloadStarvedError(RuntimeError):
    """The trace throughput is zero from some point on and bytes remain."""


@dataclass(frozen=True)
class DownloadRecord:
    segment_index: int
    level: int
    size_bytes: int
    request_time: float
    completion_time: float
    measured_throughput: float  # kbps over the whole request, latency included

    def as_dict(self) -> dict:
        return {
            "segment_index": self.segment_index,
            "level": self.level,
            "size_bytes": self.size_bytes,
            "request_time": self.request_time,
            "completion_time": self.completion_time,
            "measured_throughput": self.measured_throughput,
        }


def download_segment(
    trace: BandwidthTrace,
    size_bytes: int,
    request_time: float,
    segment_index: int = -1,
    level: int = -1,
) -> DownloadRecord:
    """Compute when a segment requested at request_time finishes arriving.

    Completion is the smallest t such that the effective throughput integrated
    from (request_time + latency) to t covers size_bytes. Zero-throughput spans
    defer completion; if the trace ends early the final rate is extended.
    """
    if size_bytes <= 0:
        raise ValueError("size_bytes must be positive")
    if request_time < 0:
        raise ValueError("request_time must be >= 0")
    start = request_time + trace.latency
    kbits = size_bytes * 8.0 / 1000.0
    needed_nominal = kbits / trace.effective_factor
    try:
        completion = trace.time_to_deliver(start, needed_nominal)
    except TraceError as exc:
        raise DownloadStarvedError(str(exc)) from None
    elapsed = completion - request_time
    return DownloadRecord(
        segment_index=segment_index,
        level=level,
        size_bytes=size_bytes,
        request_time=request_time,
        completion_time=completion,
        measured_throughput=kbits / elapsed,
    )


@dataclass
class ThroughputMeter:
    """Sliding-window mean of per-download measured throughput.

    The window covers completion times in (now - window_s, now]. With no
    completion inside the window the most recent measurement is reused, so the
    estimate stays defined for as long as at least one download has finished.
    """

    window_s: float
    history: list[DownloadRecord] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.window_s <= 0:
            raise ValueError("window_s must be positive")

    def add(self, record: DownloadRecord) -> None:
        if self.history and record.completion_time < self.history[-1].completion_time:
            raise ValueError("records must arrive in completion order")
        self.history.append(record)

    def average_bandwidth(self, now: float) -> float:
        if not self.history:
            raise ValueError("no completed downloads to measure")
        lo = now - self.window_s
        total = 0.0
        count = 0
        for rec in reversed(self.history):
            if rec.completion_time > now:
                continue
            if rec.completion_time <= lo:
                break
            total += rec.measured_throughput
            count += 1
        if count == 0:
            return self.history[-1].measured_throughput
        return total / count


def get_network_bandwidth(meter: ThroughputMeter, now: float) -> float:
    """Windowed mean network bandwidth as observed by the client."""
    return meter.average_bandwidth(now)
