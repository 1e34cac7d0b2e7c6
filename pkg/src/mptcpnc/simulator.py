"""Round-based Monte Carlo simulation.

Three pieces live here:

* the coded sub-flow dynamics behind the MPTCP/NC mean-field model: each
  RTT a sub-flow transmits ``W R`` coded packets, credits at most ``W``
  arrivals as acknowledgments and grows its window by ``a / W``;
* an estimator of the two-round timeout probability of that process;
* a plain TCP Reno simulator following Padhye's loss-indication conventions,
  used as an independent check of the closed-form Reno throughput.

Batched functions vectorise over independent trials with numpy; every
random draw comes from a ``numpy.random.Generator`` so a seed fixes a run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .analytic_mptcp import PadhyeParams
from .analytic_nc import WindowTrajectory
from .core import InvalidInputError, PathParams, RoundClock, ThroughputSeries

# (path index, global round) -> loss probability for that round
LossModel = Callable[[int, int], float]


def _stochastic_round(x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    base = np.floor(x)
    return (base + (rng.random(x.shape) < x - base)).astype(np.int64)


def _transmit(
    windows: np.ndarray, p: float, redundancy: float, rng: np.random.Generator
) -> np.ndarray:
    """Arrivals out of ``round(W R)`` coded packets sent over a Bernoulli(p) channel."""
    sent = _stochastic_round(windows * redundancy, rng)
    return rng.binomial(sent, 1.0 - p)


def _advance(
    windows: np.ndarray, p: float, redundancy: float, w_max: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    arrivals = _transmit(windows, p, redundancy, rng)
    acks = np.minimum(windows, arrivals)
    return np.minimum(w_max, windows + acks / windows), acks


@dataclass(frozen=True)
class SubflowState:
    """Per-RTT state of one coded sub-flow.

    ``acks`` and ``delivered`` refer to the most recent round; ``total_delivered``
    accumulates degrees of freedom over all rounds.
    """

    window: float = 1.0
    round_index: int = 0
    acks: float = 0.0
    delivered: float = 0.0
    total_delivered: float = 0.0

    def __post_init__(self) -> None:
        if not self.window >= 1.0:
            raise InvalidInputError(f"window must be >= 1, got {self.window!r}")


def step_subflow(
    state: SubflowState, path: PathParams, rng: np.random.Generator, loss: float | None = None
) -> SubflowState:
    """Play one RTT of ``path`` starting from ``state``.

    ``loss`` replaces ``path.p`` for this round only; 1.0 models an outage.
    """
    p = path.p if loss is None else loss
    w = np.array([state.window])
    new_w, acks = _advance(w, p, path.redundancy, path.w_max, rng)
    a = float(acks[0])
    return SubflowState(
        window=float(new_w[0]),
        round_index=state.round_index + 1,
        acks=a,
        delivered=a,
        total_delivered=state.total_delivered + a,
    )


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo run description.

    ``rounds`` counts global rounds of the shared clock.  ``trials``
    independent replicas are simulated and averaged.  ``loss_model``
    overrides the constant per-path ``p`` (e.g. for trace replay).
    """

    paths: tuple[PathParams, ...]
    clock: RoundClock
    rounds: int
    seed: int = 0
    trials: int = 1
    timeouts: bool = False
    loss_model: LossModel | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "paths", tuple(self.paths))
        if len(self.paths) != len(self.clock.alphas):
            raise InvalidInputError("clock must have one alpha per path")
        if self.rounds < 1 or self.trials < 1:
            raise InvalidInputError("rounds and trials must be >= 1")


@dataclass
class SimResult:
    series: ThroughputSeries
    trajectories: list[WindowTrajectory]
    delivered: np.ndarray  # per-round trial-mean delivered DOF rate, shape (paths, rounds)
    timeouts: np.ndarray  # timeouts per path, summed over trials


def simulate_mptcpnc(config: SimConfig) -> SimResult:
    """Run ``config.rounds`` global rounds of every coded sub-flow.

    Sub-flow ``j`` starts a new RTT on rounds ``1, 1 + alpha_j, ...``; the
    degrees of freedom it delivers in that RTT are spread evenly over its
    ``alpha_j`` rounds.  With ``timeouts`` enabled, a sub-flow whose
    acknowledgments over two consecutive RTTs fall short of the earlier
    window is reset to ``w1``.
    """
    rng = np.random.default_rng(config.seed)
    k, trials, t_rnd = config.rounds, config.trials, config.clock.t_rnd
    n = len(config.paths)
    windows_out = np.zeros((n, k))
    delivered_out = np.zeros((n, k))
    timeouts = np.zeros(n, dtype=np.int64)

    for j, (path, alpha) in enumerate(zip(config.paths, config.clock.alphas)):
        w = np.full(trials, float(path.w1))
        prev_w = prev_a = None
        for start in range(0, k, alpha):
            i = start + 1
            p = path.p if config.loss_model is None else config.loss_model(j, i)
            stop = min(k, start + alpha)
            windows_out[j, start:stop] = w.mean()
            if p >= 1.0:
                # Outage: nothing arrives and the window holds.
                prev_w = prev_a = None
                continue
            new_w, acks = _advance(w, p, path.redundancy, path.w_max, rng)
            delivered_out[j, start:stop] = acks.mean() / (alpha * t_rnd)
            if config.timeouts:
                if prev_w is not None:
                    fired = prev_a + acks < prev_w
                    timeouts[j] += int(fired.sum())
                    new_w = np.where(fired, path.w1, new_w)
                    # NaN never compares true, so a reset flow starts a fresh pair.
                    prev_w, prev_a = np.where(fired, np.nan, w), acks
                else:
                    prev_w, prev_a = w, acks
            w = new_w

    times = t_rnd * np.arange(1, k + 1)
    series = ThroughputSeries("mptcpnc-sim", tuple(times), tuple(delivered_out.sum(axis=0)))
    trajectories = [WindowTrajectory(p.path_id, windows_out[j]) for j, p in enumerate(config.paths)]
    return SimResult(series, trajectories, delivered_out, timeouts)


def mean_window_at(
    path: PathParams, rounds: Sequence[int], trials: int, seed: int = 0
) -> dict[int, float]:
    """Trial-averaged window of a single sub-flow at the given RTT indices (1-based)."""
    rng = np.random.default_rng(seed)
    last = max(rounds)
    wanted = set(rounds)
    w = np.full(trials, float(path.w1))
    out = {}
    for i in range(1, last + 1):
        if i in wanted:
            out[i] = float(w.mean())
        w, _ = _advance(w, path.p, path.redundancy, path.w_max, rng)
    return out


def estimate_timeout_prob(
    path: PathParams,
    window: float,
    trials: int,
    rng: np.random.Generator | int | None = None,
    loss: float | None = None,
) -> float:
    """Monte Carlo estimate of ``Pr(a_i + a_{i+1} < W)`` at a fixed window ``W``."""
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    rng = np.random.default_rng(rng)
    p = path.p if loss is None else loss
    w = np.full(trials, float(window))
    a1 = np.minimum(w, _transmit(w, p, path.redundancy, rng))
    a2 = np.minimum(w, _transmit(w, p, path.redundancy, rng))
    return float(np.mean(a1 + a2 < w))


def simulate_tcp_reno(
    params: PadhyeParams, duration: float, rng: np.random.Generator | int | None = None
) -> float:
    """Long-run send rate (packets/s) of a round-based Reno sender.

    Conventions follow Padhye et al.: the window grows by ``1/b`` per
    loss-free round; once a packet is lost, the rest of that round is lost
    too, and the packets acknowledged before it clock out one more round
    whose survivors return duplicate ACKs.  Three or more duplicates halve
    the window; fewer trigger a timeout of ``t0`` that doubles (up to
    ``64 t0``) for every lost retransmission and restarts the window at 1.
    """
    if not duration > 0:
        raise InvalidInputError("duration must be > 0")
    rng = np.random.default_rng(rng)
    p, rtt, b, t0, w_max = params.p, params.rtt, params.b, params.t0, params.w_max
    if p == 0.0:
        return simulate_lossless_reno(params, duration)

    t = 0.0
    sent = 0
    window = 1.0
    while t < duration:
        cap = min(window, w_max)
        w = max(1, int(cap) + (rng.random() < cap - int(cap)))
        first_loss = int(rng.geometric(p))
        sent += w
        t += rtt
        if first_loss > w:
            window = min(w_max, window + 1.0 / b)
            continue
        last_round = first_loss - 1
        if last_round:
            sent += last_round
            t += rtt
        dup_acks = min(last_round, int(rng.geometric(p)) - 1)
        if dup_acks >= 3:
            window = max(1.0, window / 2.0)
            continue
        backoff = 1
        while True:
            t += min(backoff, 64) * t0
            sent += 1
            if rng.random() >= p:
                break
            backoff *= 2
        window = 1.0
    return sent / t


def simulate_lossless_reno(params: PadhyeParams, duration: float) -> float:
    """Send rate over ``duration`` with no loss; tends to ``w_max / rtt``."""
    t, sent, window = 0.0, 0.0, 1.0
    while t < duration:
        sent += max(1, int(min(window, params.w_max)))
        t += params.rtt
        window = min(params.w_max, window + 1.0 / params.b)
    return sent / t

