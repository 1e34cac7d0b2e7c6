"""Domain types and the shared round clock.

Every sub-flow in the MPTCP/NC model advances on a common clock whose tick
is the greatest common divisor of the (quantized) sub-flow RTTs.  Sub-flow
``j`` acts once every ``alphas[j]`` ticks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Hashable, Iterable, Sequence

DEFAULT_QUANTUM = 0.001


class InvalidInputError(ValueError):
    """Raised when an argument violates an operation's preconditions."""


class InconsistencyError(ValueError):
    """Raised when an RTT does not fit the round clock it is used with."""


class RegimeError(ValueError):
    """Raised when a closed form is evaluated outside its domain of validity."""


def _check_finite_positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise InvalidInputError(f"{name} must be finite and > 0, got {value!r}")
    return value


@dataclass(frozen=True)
class PathParams:
    """Model inputs for one sub-flow.

    Attributes:
        path_id: Opaque label (e.g. ``"wifi"``).
        p: Packet loss probability, ``0 <= p < 1``.
        rtt: Round-trip time in seconds.
        redundancy: Coded packets sent per degree of freedom, ``>= 1``.
        w_max: Maximum congestion window in packets.
        w1: Expected initial window ``E[W_1]`` in packets.
    """

    path_id: Hashable
    p: float
    rtt: float
    redundancy: float = 1.0
    w_max: float = 12.0
    w1: float = 1.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.p < 1.0):
            raise InvalidInputError(f"loss probability must be in [0, 1), got {self.p!r}")
        _check_finite_positive("rtt", self.rtt)
        if not (self.redundancy >= 1.0 and math.isfinite(self.redundancy)):
            raise InvalidInputError(f"redundancy must be >= 1, got {self.redundancy!r}")
        if not (self.w1 >= 1.0):
            raise InvalidInputError(f"w1 must be >= 1, got {self.w1!r}")
        if not (self.w_max >= self.w1 and math.isfinite(self.w_max)):
            raise InvalidInputError(f"w_max must be finite and >= w1, got {self.w_max!r}")

    @property
    def growth_rate(self) -> float:
        return min(1.0, (1.0 - self.p) * self.redundancy)


@dataclass(frozen=True)
class RoundClock:
    """Common round duration and per-sub-flow integer multipliers.

    ``quantum`` is the unit used to quantize RTTs; ``t_rnd`` is always an
    integer number of quanta.
    """

    t_rnd: float
    alphas: tuple[int, ...]
    quantum: float = DEFAULT_QUANTUM

    def __post_init__(self) -> None:
        _check_finite_positive("t_rnd", self.t_rnd)
        object.__setattr__(self, "alphas", tuple(int(a) for a in self.alphas))
        if any(a < 1 for a in self.alphas):
            raise InvalidInputError(f"alphas must be positive integers, got {self.alphas}")

    @property
    def ticks(self) -> int:
        """Round duration in quanta."""
        return round(self.t_rnd / self.quantum)

    def __len__(self) -> int:
        return len(self.alphas)


def quantize(rtt: float, quantum: float) -> int:
    """Round ``rtt`` to the nearest whole number of quanta (at least one)."""
    rtt = _check_finite_positive("rtt", rtt)
    quantum = _check_finite_positive("quantum", quantum)
    return max(1, round(rtt / quantum))


def make_round_clock(rtts: Sequence[float], quantum: float = DEFAULT_QUANTUM) -> RoundClock:
    """Build the round clock for a set of sub-flow RTTs.

    Each RTT is snapped to the nearest multiple of ``quantum``; the round
    duration is the integer GCD of the snapped values.

    >>> make_round_clock([0.2, 0.3], quantum=0.1).alphas
    (2, 3)
    """
    rtts = list(rtts)
    if not rtts:
        raise InvalidInputError("at least one RTT is required")
    quantum = _check_finite_positive("quantum", quantum)
    ticks = [quantize(r, quantum) for r in rtts]
    g = reduce(math.gcd, ticks)
    return RoundClock(t_rnd=g * quantum, alphas=tuple(t // g for t in ticks), quantum=quantum)


def alpha_of(rtt: float, clock: RoundClock) -> int:
    """Number of clock rounds spanned by one RTT of ``rtt`` seconds."""
    ticks = quantize(rtt, clock.quantum)
    if ticks % clock.ticks:
        raise InconsistencyError(
            f"rtt {rtt!r} ({ticks} quanta) is not a multiple of t_rnd ({clock.ticks} quanta)"
        )
    return ticks // clock.ticks


@dataclass(frozen=True)
class ThroughputSeries:
    """Throughput samples (packets/s) for one protocol, keyed by time (s)."""

    protocol: str
    times: tuple[float, ...] = field(default_factory=tuple)
    values: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.times) != len(self.values):
            raise InvalidInputError("times and values must have equal length")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise InvalidInputError("sample times must be strictly increasing")
        if any(not (v >= 0) for v in self.values):
            raise InvalidInputError("throughput samples must be >= 0")

    @classmethod
    def from_pairs(cls, protocol: str, samples: Iterable[tuple[float, float]]) -> ThroughputSeries:
        samples = list(samples)
        return cls(protocol, tuple(t for t, _ in samples), tuple(v for _, v in samples))

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.times, self.values))

    def mean(self) -> float:
        if not self.values:
            raise InvalidInputError("empty series has no mean")
        return math.fsum(self.values) / len(self.values)

    def __len__(self) -> int:
        return len(self.values)
