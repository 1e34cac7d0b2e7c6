"""Mean-field MPTCP throughput.

Each sub-flow is treated as an independent TCP Reno connection whose
steady-state send rate follows the full Padhye et al. model (triple-duplicate
and timeout loss indications, window limitation).  MPTCP throughput is the
plain sum over sub-flows, which assumes perfect scheduling and therefore
over-estimates what a real MPTCP stack achieves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

from .core import InvalidInputError, ThroughputSeries
from .traces import TraceSeries, average_loss


@dataclass(frozen=True)
class PadhyeParams:
    """Arguments of the single-flow Reno model.

    ``b`` is the number of packets acknowledged per ACK (2 with delayed
    ACKs) and ``t0`` the initial retransmission timeout in seconds.
    """

    p: float
    rtt: float
    b: float = 2.0
    t0: float = 0.2
    w_max: float = 12.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.p < 1.0):
            raise InvalidInputError(f"loss probability must be in [0, 1), got {self.p!r}")
        for name in ("rtt", "t0"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvalidInputError(f"{name} must be finite and > 0, got {v!r}")
        if not self.b >= 1:
            raise InvalidInputError(f"b must be >= 1, got {self.b!r}")
        if not self.w_max >= 1:
            raise InvalidInputError(f"w_max must be >= 1, got {self.w_max!r}")


def _timeout_fraction(p: float, w: float) -> float:
    # Q^(w): probability that a loss indication in a window of w is a timeout.
    q = 1.0 - p
    num = (1.0 - q**3) * (1.0 + q**3 * (1.0 - q ** (w - 3.0)))
    return min(1.0, num / (1.0 - q**w))


def _backoff_factor(p: float) -> float:
    return 1 + p + 2 * p**2 + 4 * p**3 + 8 * p**4 + 16 * p**5 + 32 * p**6


def unconstrained_window(p: float, b: float = 2.0) -> float:
    """Expected window at a loss indication when ``w_max`` never binds."""
    c = (2.0 + b) / (3.0 * b)
    return c + math.sqrt(8.0 * (1.0 - p) / (3.0 * b * p) + c * c)


def padhye_throughput(params: PadhyeParams) -> float:
    """Steady-state Reno send rate in packets/s.

    Uses the loss-limited branch while the expected unconstrained window is
    below ``w_max`` and the window-limited branch otherwise, then caps the
    result at ``w_max / rtt``.  ``p == 0`` returns the cap directly.
    """
    p, rtt, b, t0, w_max = params.p, params.rtt, params.b, params.t0, params.w_max
    ceiling = w_max / rtt
    if p == 0.0:
        return ceiling
    q = 1.0 - p
    f = _backoff_factor(p)
    ewu = unconstrained_window(p, b)
    if ewu < w_max:
        qhat = _timeout_fraction(p, ewu)
        num = q / p + ewu + qhat / q
        den = rtt * (b / 2.0 * ewu + 1.0) + qhat * t0 * f / q
    else:
        qhat = _timeout_fraction(p, w_max)
        num = q / p + w_max + qhat / q
        den = rtt * (b / 8.0 * w_max + q / (p * w_max) + 2.0) + qhat * t0 * f / q
    return min(ceiling, num / den)


def mptcp_throughput(paths: Sequence[PadhyeParams]) -> float:
    """Sum of per-path Reno throughputs (packets/s)."""
    paths = list(paths)
    if not paths:
        raise InvalidInputError("at least one path is required")
    return math.fsum(padhye_throughput(p) for p in paths)


def mptcp_series(
    trace: TraceSeries,
    paths: Mapping[str, PadhyeParams],
    window: float = 5.0,
) -> ThroughputSeries:
    """MPTCP throughput per averaging interval of ``trace``.

    ``paths`` maps network ids to static parameters; only ``p`` is replaced
    by each interval's averaged loss.  A path absent from an interval or
    with loss 1 contributes nothing for that interval.
    """
    if not paths:
        raise InvalidInputError("at least one path is required")
    if trace.interval != window:
        trace = average_loss(trace, window)
    times, values = [], []
    for t in trace.grid():
        total = []
        for net, base in paths.items():
            p = trace.loss_at(net, t)
            if p is None or p >= 1.0:
                continue
            total.append(padhye_throughput(replace(base, p=p)))
        times.append(t)
        values.append(math.fsum(total))
    return ThroughputSeries("mptcp", tuple(times), tuple(values))
