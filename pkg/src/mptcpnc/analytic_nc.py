"""Mean-field MPTCP/NC model.

With network coding below TCP, a sub-flow sends ``R`` coded packets per
packet of window and the expected window grows by ``min(1, (1 - p) R)``
per RTT.  All sub-flows share a round clock; sub-flow ``j`` advances its
window every ``alpha_j`` rounds and is capped at ``w_max``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .core import (
    DEFAULT_QUANTUM,
    InvalidInputError,
    PathParams,
    RegimeError,
    RoundClock,
    ThroughputSeries,
    make_round_clock,
)
from .traces import TraceSeries, average_loss

# Slack when deciding that (1 - p) R reaches 1; R = 1/(1 - p) rounds either way.
_REGIME_EPS = 1e-12


def growth_rate(p: float, redundancy: float) -> float:
    """Expected window increase per RTT, ``min(1, (1 - p) R)``."""
    if not (0.0 <= p < 1.0):
        raise InvalidInputError(f"loss probability must be in [0, 1), got {p!r}")
    if not redundancy >= 1.0:
        raise InvalidInputError(f"redundancy must be >= 1, got {redundancy!r}")
    return min(1.0, (1.0 - p) * redundancy)


def min_redundancy(p: float) -> float:
    """Smallest redundancy factor that compensates loss rate ``p``."""
    if not (0.0 <= p < 1.0):
        raise InvalidInputError(f"redundancy is unbounded for loss probability {p!r}")
    return 1.0 / (1.0 - p)


def is_supercritical(path: PathParams) -> bool:
    return (1.0 - path.p) * path.redundancy >= 1.0 - _REGIME_EPS


def _block(i: int, alpha: int) -> int:
    return -(-i // alpha)


def expected_window(path: PathParams, alpha: int, i: int) -> float:
    """Expected window of ``path`` during global round ``i`` (1-based)."""
    if i < 1 or alpha < 1:
        raise InvalidInputError("round index and alpha must be >= 1")
    w = path.w1 + (_block(i, alpha) - 1) * growth_rate(path.p, path.redundancy)
    return min(path.w_max, w)


def round_throughput(path: PathParams, alpha: int, t_rnd: float, i: int) -> float:
    """Delivered degrees of freedom per second for ``path`` in round ``i``."""
    g = 1.0 if is_supercritical(path) else growth_rate(path.p, path.redundancy)
    return expected_window(path, alpha, i) * g / (alpha * t_rnd)


@dataclass(frozen=True)
class WindowTrajectory:
    """Expected window per global round ``1..k`` for one path."""

    path_id: object
    windows: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.windows, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "windows", w)


def window_trajectory(path: PathParams, alpha: int, k: int) -> WindowTrajectory:
    i = np.arange(1, k + 1)
    blocks = -(-i // alpha)
    g = growth_rate(path.p, path.redundancy)
    return WindowTrajectory(path.path_id, np.minimum(path.w_max, path.w1 + (blocks - 1) * g))


@dataclass(frozen=True)
class NcModelInputs:
    paths: tuple[PathParams, ...]
    clock: RoundClock
    k: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "paths", tuple(self.paths))
        if not self.paths:
            raise InvalidInputError("at least one path is required")
        if len(self.clock.alphas) != len(self.paths):
            raise InvalidInputError(
                f"{len(self.clock.alphas)} alphas for {len(self.paths)} paths"
            )
        if int(self.k) != self.k or self.k < 1:
            raise InvalidInputError(f"k must be a positive integer, got {self.k!r}")

    @classmethod
    def from_paths(cls, paths: Sequence[PathParams], k: int, quantum: float = DEFAULT_QUANTUM) -> NcModelInputs:
        return cls(tuple(paths), make_round_clock([p.rtt for p in paths], quantum), k)


def saturation_round(path: PathParams, alpha: int) -> float:
    """Global round by which ``path`` stops growing, ``alpha (w_max - w1)``."""
    return alpha * (path.w_max - path.w1)


def _capped_progression_sum(w: float, g: float, w_max: float, count: int) -> float:
    # sum_{m=1}^{count} min(w_max, w + m g)
    if count <= 0:
        return 0.0
    if g <= 0.0 or w >= w_max:
        return count * min(w, w_max)
    free = min(count, max(0, math.ceil((w_max - w) / g) - 1))
    return free * w + g * free * (free + 1) / 2.0 + (count - free) * w_max


@dataclass
class WindowState:
    """Position of one sub-flow on the round clock.

    ``window`` is the expected window of the current block of ``alpha``
    rounds and ``used`` counts rounds of that block already elapsed.
    """

    alpha: int
    w_max: float
    window: float
    used: int = 0

    def advance(self, n: int, g: float) -> float:
        """Advance ``n`` rounds at growth rate ``g``; return the summed windows."""
        if n <= 0:
            return 0.0
        head = min(n, self.alpha - self.used)
        rest = n - head
        full, partial = divmod(rest, self.alpha)
        total = head * self.window
        total += self.alpha * _capped_progression_sum(self.window, g, self.w_max, full)
        if partial:
            last = min(self.w_max, self.window + (full + 1) * g)
            total += partial * last
            self.window, self.used = last, partial
        elif full:
            self.window, self.used = min(self.w_max, self.window + full * g), self.alpha
        else:
            self.used += head
        return total


def _check_regime(paths: Sequence[PathParams]) -> None:
    bad = [p.path_id for p in paths if not is_supercritical(p)]
    if bad:
        raise RegimeError(
            f"paths {bad} have R < 1/(1-p); the closed form does not cover this regime, "
            "use simulator.simulate_mptcpnc instead"
        )


def e2e_throughput(inputs: NcModelInputs) -> float:
    """Average end-to-end throughput over ``k`` rounds, packets/s.

    Evaluates ``(1/k) sum_i sum_j T_i^(j)`` exactly in O(n), including the
    ceiling in the block index and the partial final block.
    """
    _check_regime(inputs.paths)
    k, t = int(inputs.k), inputs.clock.t_rnd
    total = 0.0
    for path, alpha in zip(inputs.paths, inputs.clock.alphas):
        state = WindowState(alpha, path.w_max, path.w1)
        total += state.advance(k, 1.0) / (alpha * t * k)
    return total


def e2e_throughput_relaxed(inputs: NcModelInputs) -> float:
    """Two-branch approximation with ``ceil(i/alpha)`` relaxed to ``i/alpha``.

    Rounds up to ``r = alpha (w_max - w1)`` use the arithmetic-series form;
    beyond it the saturated rounds contribute ``w_max`` each.  This
    under-counts by up to one packet per block compared with
    :func:`e2e_throughput` and is kept for comparison.
    """
    _check_regime(inputs.paths)
    k, t = inputs.k, inputs.clock.t_rnd
    total = 0.0
    for path, alpha in zip(inputs.paths, inputs.clock.alphas):
        r = saturation_round(path, alpha)
        if k <= r:
            total += (path.w1 + (k + 1) / (2.0 * alpha) - 1.0) / (alpha * t)
        else:
            rho = r * path.w1 + r * (r + 1 - 2 * alpha) / (2.0 * alpha) + path.w_max * (k - r)
            total += rho / (alpha * k * t)
    return total


def unbounded_e2e_throughput(inputs: NcModelInputs) -> float:
    """Relaxed average throughput ignoring ``w_max`` (valid for ``k <= r``)."""
    t = inputs.clock.t_rnd
    k = inputs.k
    return math.fsum(
        p.w1 / a + (k + 1) / (2.0 * a * a) - 1.0 / a for p, a in zip(inputs.paths, inputs.clock.alphas)
    ) / t


def asymptotic_throughput(paths: Sequence[PathParams], clock: RoundClock) -> float:
    """Limit of :func:`e2e_throughput` as ``k`` grows."""
    return math.fsum(p.w_max / (a * clock.t_rnd) for p, a in zip(paths, clock.alphas))


def redundancy_for(p: float, margin: float = 1.25, floor: float = 1.0) -> float:
    """Redundancy policy: ``margin`` times the critical value, at least ``floor``."""
    return max(margin * min_redundancy(p), floor, 1.0)


@dataclass
class RegimeViolation:
    t: float
    path_id: object
    p: float
    redundancy: float


@dataclass
class NcSeriesResult:
    series: ThroughputSeries
    clock: RoundClock
    violations: list[RegimeViolation] = field(default_factory=list)


def mptcpnc_series(
    trace: TraceSeries,
    paths: Mapping[str, PathParams],
    window: float = 5.0,
    quantum: float = DEFAULT_QUANTUM,
    margin: float = 1.25,
    floor: float = 1.0,
    allow_subcritical: bool = False,
) -> NcSeriesResult:
    """MPTCP/NC throughput per averaging interval of ``trace``.

    Each interval's loss sets ``p`` and the redundancy (see
    :func:`redundancy_for`); the round counter of every path carries over
    between intervals, so the series shows ramp-up then saturation.  A
    path in outage (loss 1 or no data) contributes nothing and its window
    is frozen until it reconnects.

    If the policy leaves a path below the critical redundancy the call
    raises :class:`RegimeError`, unless ``allow_subcritical`` is set, in
    which case the interval is evaluated with the mean-field growth
    ``(1 - p) R`` and logged in ``violations``.
    """
    if not paths:
        raise InvalidInputError("at least one path is required")
    if trace.interval != window:
        trace = average_loss(trace, window)
    nets = list(paths)
    clock = make_round_clock([paths[n].rtt for n in nets], quantum)
    t_rnd = clock.t_rnd
    states = {
        n: WindowState(a, paths[n].w_max, paths[n].w1) for n, a in zip(nets, clock.alphas)
    }
    violations: list[RegimeViolation] = []
    times, values = [], []
    for t in trace.grid():
        start = math.floor(t / t_rnd + 1e-9)
        end = math.floor((t + window) / t_rnd + 1e-9)
        n_rounds = end - start
        rate = 0.0
        for net, alpha in zip(nets, clock.alphas):
            p = trace.loss_at(net, t)
            if p is None or p >= 1.0:
                continue
            R = redundancy_for(p, margin, floor)
            g = min(1.0, (1.0 - p) * R)
            if g < 1.0 - _REGIME_EPS:
                if not allow_subcritical:
                    raise RegimeError(
                        f"interval t={t}: path {net!r} has R={R:.4g} below 1/(1-p)={min_redundancy(p):.4g}"
                    )
                violations.append(RegimeViolation(t, net, p, R))
            else:
                g = 1.0
            state = states[net]
            if n_rounds > 0:
                rate += state.advance(n_rounds, g) * g / (alpha * t_rnd * n_rounds)
            else:
                rate += state.window * g / (alpha * t_rnd)
        times.append(t)
        values.append(rate)
    return NcSeriesResult(ThroughputSeries("mptcpnc", tuple(times), tuple(values)), clock, violations)
