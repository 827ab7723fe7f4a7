"""Bit-rate adaptation policies.

All deciders are pure functions from observed state to the next quality
level. They move at most one level per call, and evaluate their up branch
before their down branch with the current level re-read in between, so an
up-switch can be immediately revoked by the down test. That ordering is
observable near the top of the ladder and is kept deliberately.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .media import BitrateLadder


class Policy(str, Enum):
    BANDWIDTH = "bandwidth"
    BUFFER = "buffer"
    HYBRID_BASE = "hybrid-base"
    HYBRID_ADAPTIVE = "hybrid-adaptive"


@dataclass(frozen=True)
class AbrConfig:
    """Policy parameters.

    bandwidth_window_s: averaging window for the throughput meter.
    up_margin_fraction: headroom, as a fraction of measured bandwidth, that
        must exist above the current video rate before switching up.
    buffer_low_s / buffer_high_s: buffer cushion bounds in seconds.
    switch_limit: maximum number of recent switches tolerated before
        up-switches are suppressed (math.inf disables the limiter).
    switch_window_s: how far back "recent" reaches.
    """

    policy: Policy
    bandwidth_window_s: float = 4.0
    up_margin_fraction: float = 0.25
    buffer_low_s: float = 3.0
    buffer_high_s: float = 7.0
    switch_limit: float = math.inf
    switch_window_s: float = 10.0

    def __post_init__(self) -> None:
        if self.bandwidth_window_s <= 0:
            raise ValueError("bandwidth_window_s must be positive")
        if self.switch_window_s <= 0:
            raise ValueError("switch_window_s must be positive")
        if self.buffer_low_s < 0 or self.buffer_high_s < 0:
            raise ValueError("buffer thresholds must be >= 0")
        if self.up_margin_fraction < 0:
            raise ValueError("up_margin_fraction must be >= 0")
        if self.policy in (Policy.BUFFER, Policy.HYBRID_ADAPTIVE):
            if not self.buffer_low_s < self.buffer_high_s:
                raise ValueError(f"{self.policy.value} needs buffer_low_s < buffer_high_s")


def preset(policy: Policy | str) -> AbrConfig:
    """Stock parameterization for each policy (the bundled experiments)."""
    policy = Policy(policy)
    if policy is Policy.BANDWIDTH:
        return AbrConfig(policy, bandwidth_window_s=4.0, up_margin_fraction=0.25)
    if policy is Policy.BUFFER:
        return AbrConfig(policy, buffer_low_s=3.0, buffer_high_s=7.0)
    if policy is Policy.HYBRID_BASE:
        return AbrConfig(
            policy,
            bandwidth_window_s=4.0,
            up_margin_fraction=0.25,
            buffer_low_s=3.0,
            buffer_high_s=0.0,
            switch_limit=math.inf,
            switch_window_s=10.0,
        )
    return AbrConfig(
        Policy.HYBRID_ADAPTIVE,
        bandwidth_window_s=4.0,
        up_margin_fraction=0.25,
        buffer_low_s=3.0,
        buffer_high_s=7.0,
        switch_limit=10,
        switch_window_s=10.0,
    )


@dataclass(frozen=True)
class AbrState:
    """Per-session adaptation state: current level and recent switch times."""

    level: int = 0
    switch_times: tuple[float, ...] = ()

    def recent_switches(self, now: float, window_s: float) -> int:
        lo = now - window_s
        return sum(1 for t in self.switch_times if lo < t <= now)


def record_switch(
    state: AbrState, old_level: int, new_level: int, now: float, window_s: float
) -> AbrState:
    """Append a switch instant, pruning entries older than the window."""
    if old_level == new_level:
        raise ValueError("record_switch called without an actual level change")
    kept = tuple(t for t in state.switch_times if t > now - window_s)
    return AbrState(level=new_level, switch_times=kept + (now,))


def decide_bandwidth(
    state: AbrState,
    video_rate: float,
    bandwidth: float,
    ladder: BitrateLadder,
    config: AbrConfig,
) -> int:
    """Track the measured bandwidth, with an up-switch dead band."""
    q = state.level
    if video_rate < bandwidth - config.up_margin_fraction * bandwidth and q < ladder.top:
        q += 1
    if ladder.bitrate_of(q) > bandwidth and q > 0:
        q -= 1
    return q


def decide_buffer(
    state: AbrState, buffer_s: float, ladder: BitrateLadder, config: AbrConfig
) -> int:
    """Hold the level while the buffer stays inside the cushion."""
    q = state.level
    if buffer_s > config.buffer_high_s and q < ladder.top:
        q += 1
    if buffer_s < config.buffer_low_s and q > 0:
        q -= 1
    return q


def decide_hybrid(
    state: AbrState,
    video_rate: float,
    bandwidth: float,
    buffer_s: float,
    now: float,
    ladder: BitrateLadder,
    config: AbrConfig,
) -> int:
    """Combine both signals: switch up only when the bandwidth headroom, the
    buffer level and the recent switch count all allow it; switch down only
    when the bandwidth is short and the buffer has already fallen below the
    low threshold, so a healthy buffer rides out transient dips. The switch
    limiter gates up-switches only, never the escape downward.
    """
    q = state.level
    if (
        video_rate < bandwidth - config.up_margin_fraction * bandwidth
        and buffer_s > config.buffer_high_s
        and state.recent_switches(now, config.switch_window_s) < config.switch_limit
        and q < ladder.top
    ):
        q += 1
    if ladder.bitrate_of(q) > bandwidth and buffer_s < config.buffer_low_s and q > 0:
        q -= 1
    return q


def next_level(
    state: AbrState,
    config: AbrConfig,
    ladder: BitrateLadder,
    *,
    bandwidth: float,
    buffer_s: float,
    now: float,
) -> int:
    """Dispatch to the configured policy."""
    video_rate = ladder.bitrate_of(state.level)
    if config.policy is Policy.BANDWIDTH:
        return decide_bandwidth(state, video_rate, bandwidth, ladder, config)
    if config.policy is Policy.BUFFER:
        return decide_buffer(state, buffer_s, ladder, config)
    return decide_hybrid(state, video_rate, bandwidth, buffer_s, now, ladder, config)
