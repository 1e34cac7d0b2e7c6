"""Loss/RTT trace files: parsing, interval averaging, summaries, synthesis.

Trace files are CSV with the header ``t,network,loss_prob,rtt``.  ``t`` is
seconds since the start of the experiment, ``loss_prob`` lies in [0, 1] and
``rtt`` (seconds) may be left empty.  Extra columns are ignored.  Rows for
different networks may interleave, but each network's times must be
strictly increasing.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Mapping, Sequence, TextIO

import numpy as np

from .core import InvalidInputError

HEADER = ("t", "network", "loss_prob", "rtt")


class TraceParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TraceOrderError(TraceParseError):
    pass


class TraceRangeError(TraceParseError):
    pass


@dataclass(frozen=True)
class TraceRecord:
    t: float
    network_id: str
    loss_prob: float
    rtt: float | None = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.t) and self.t >= 0):
            raise TraceRangeError(f"time must be >= 0, got {self.t!r}")
        if not (0.0 <= self.loss_prob <= 1.0):
            raise TraceRangeError(f"loss_prob must be in [0, 1], got {self.loss_prob!r}")
        if self.rtt is not None and not (math.isfinite(self.rtt) and self.rtt > 0):
            raise TraceRangeError(f"rtt must be > 0 when present, got {self.rtt!r}")


@dataclass(frozen=True, eq=False)
class TraceSeries:
    """Trace records grouped by network.

    ``interval`` is set once the series has been averaged onto a regular
    grid of that many seconds; raw traces carry ``None``.
    """

    records: Mapping[str, tuple[TraceRecord, ...]] = field(default_factory=dict)
    interval: float | None = None

    def __post_init__(self) -> None:
        for net, recs in self.records.items():
            for a, b in zip(recs, recs[1:]):
                if b.t <= a.t:
                    raise TraceOrderError(f"times for network {net!r} not strictly increasing at t={b.t}")

    @classmethod
    def from_records(cls, records: Iterable[TraceRecord], interval: float | None = None) -> TraceSeries:
        grouped: dict[str, list[TraceRecord]] = {}
        for rec in records:
            grouped.setdefault(rec.network_id, []).append(rec)
        return cls({k: tuple(v) for k, v in grouped.items()}, interval)

    @property
    def networks(self) -> list[str]:
        return list(self.records)

    def __len__(self) -> int:
        return sum(len(v) for v in self.records.values())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TraceSeries):
            return NotImplemented
        return dict(self.records) == dict(other.records) and self.interval == other.interval

    def iter_records(self) -> list[TraceRecord]:
        """All records ordered by time, ties broken by network order."""
        order = {net: i for i, net in enumerate(self.records)}
        recs = [r for v in self.records.values() for r in v]
        return sorted(recs, key=lambda r: (r.t, order[r.network_id]))

    def grid(self) -> list[float]:
        return sorted({r.t for v in self.records.values() for r in v})

    @cached_property
    def _index(self) -> dict[str, dict[float, TraceRecord]]:
        return {net: {r.t: r for r in recs} for net, recs in self.records.items()}

    def record_at(self, network_id: str, t: float) -> TraceRecord | None:
        return self._index.get(network_id, {}).get(t)

    def loss_at(self, network_id: str, t: float) -> float | None:
        rec = self.record_at(network_id, t)
        return None if rec is None else rec.loss_prob


def _parse_float(text: str, column: str, line: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise TraceParseError(f"bad {column} value {text!r}", line) from None
    if not math.isfinite(value):
        raise TraceParseError(f"non-finite {column} value {text!r}", line)
    return value


def parse_trace(source: TextIO | str) -> TraceSeries:
    """Parse a trace CSV from a text stream (or a string holding its contents)."""
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise TraceParseError("missing header", 1) from None
    missing = [h for h in HEADER if h not in header]
    if missing:
        raise TraceParseError(f"header lacks column(s) {', '.join(missing)}", 1)
    col = {h: header.index(h) for h in HEADER}

    grouped: dict[str, list[TraceRecord]] = {}
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < len(header):
            raise TraceParseError(f"expected {len(header)} fields, got {len(row)}", line)
        net = row[col["network"]].strip()
        if not net:
            raise TraceParseError("empty network id", line)
        t = _parse_float(row[col["t"]], "t", line)
        loss = _parse_float(row[col["loss_prob"]], "loss_prob", line)
        rtt_text = row[col["rtt"]].strip()
        rtt = _parse_float(rtt_text, "rtt", line) if rtt_text else None
        try:
            rec = TraceRecord(t, net, loss, rtt)
        except TraceParseError as exc:
            raise TraceRangeError(str(exc), line) from None
        prev = grouped.setdefault(net, [])
        if prev and rec.t <= prev[-1].t:
            raise TraceOrderError(f"time {t} for network {net!r} does not increase", line)
        prev.append(rec)
    return TraceSeries({k: tuple(v) for k, v in grouped.items()})


def _fmt(x: float) -> str:
    return repr(float(x))


def write_trace(series: TraceSeries, stream: TextIO) -> None:
    """Write ``series`` in the trace CSV format.

    Rows are ordered by time then by network order; floats use Python's
    shortest round-trip repr, so parse/write round-trips exactly.
    """
    stream.write(",".join(HEADER) + "\n")
    for r in series.iter_records():
        rtt = "" if r.rtt is None else _fmt(r.rtt)
        stream.write(f"{_fmt(r.t)},{r.network_id},{_fmt(r.loss_prob)},{rtt}\n")


def trace_to_string(series: TraceSeries) -> str:
    buf = io.StringIO()
    write_trace(series, buf)
    return buf.getvalue()


def average_loss(series: TraceSeries, window: float = 5.0) -> TraceSeries:
    """Average loss per network over consecutive ``window``-second intervals.

    Interval ``k`` covers ``[k*window, (k+1)*window)`` and is stamped with
    its start time.  Every network gets a record for every interval up to
    the last observed time; intervals without data are outages (loss 1.0).
    """
    if not (math.isfinite(window) and window > 0):
        raise InvalidInputError(f"window must be > 0, got {window!r}")
    all_recs = [r for v in series.records.values() for r in v]
    if not all_recs:
        return TraceSeries({}, window)

    def slot(t: float) -> int:
        return math.floor(t / window + 1e-9)

    n_slots = max(slot(r.t) for r in all_recs) + 1
    out: dict[str, tuple[TraceRecord, ...]] = {}
    for net, recs in series.records.items():
        losses: list[list[float]] = [[] for _ in range(n_slots)]
        rtts: list[list[float]] = [[] for _ in range(n_slots)]
        for r in recs:
            k = slot(r.t)
            losses[k].append(r.loss_prob)
            if r.rtt is not None:
                rtts[k].append(r.rtt)
        averaged = []
        for k in range(n_slots):
            loss = math.fsum(losses[k]) / len(losses[k]) if losses[k] else 1.0
            rtt = math.fsum(rtts[k]) / len(rtts[k]) if rtts[k] else None
            averaged.append(TraceRecord(k * window, net, min(1.0, loss), rtt))
        out[net] = tuple(averaged)
    return TraceSeries(out, window)


@dataclass(frozen=True)
class NetworkSummary:
    """Per-network statistics; CDFs are ``(sorted values, cumulative fraction)``."""

    n_records: int
    mean_loss: float
    loss_cdf: tuple[np.ndarray, np.ndarray]
    mean_rtt: float | None
    median_rtt: float | None
    rtt_cdf: tuple[np.ndarray, np.ndarray] | None


def ecdf(values: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    x = np.sort(np.asarray(values, dtype=float))
    return x, np.arange(1, len(x) + 1) / len(x)


def summarize(series: TraceSeries) -> dict[str, NetworkSummary]:
    """Loss and RTT statistics for each network in ``series``."""
    if len(series) == 0:
        raise InvalidInputError("cannot summarize an empty trace")
    out = {}
    for net, recs in series.records.items():
        losses = [r.loss_prob for r in recs]
        rtts = [r.rtt for r in recs if r.rtt is not None]
        out[net] = NetworkSummary(
            n_records=len(recs),
            mean_loss=float(np.mean(losses)),
            loss_cdf=ecdf(losses),
            mean_rtt=float(np.mean(rtts)) if rtts else None,
            median_rtt=float(np.median(rtts)) if rtts else None,
            rtt_cdf=ecdf(rtts) if rtts else None,
        )
    return out


LossModel = Callable[[str, float], float]


def alternating_loss(low: float, high: float, period: float) -> LossModel:
    """Loss that starts at ``low`` and flips between the two levels every ``period`` s."""

    def loss(network_id: str, t: float) -> float:
        return high if int(t // period) % 2 else low

    return loss


def synthetic_trace(
    rtts: Mapping[str, float],
    duration: float,
    step: float = 1.0,
    loss: float | LossModel = 0.0,
    dropouts: Iterable[tuple[str, float, float]] = (),
    rtt_jitter: float = 0.0,
    seed: int | None = None,
) -> TraceSeries:
    """Generate a trace sampled every ``step`` seconds on ``[0, duration)``.

    ``dropouts`` lists ``(network, start, end)`` spans with no samples at
    all, mimicking a vehicle leaving a network's coverage.  With
    ``rtt_jitter`` > 0, RTTs are scaled by a lognormal factor drawn from a
    generator seeded with ``seed``.
    """
    if duration <= 0 or step <= 0:
        raise InvalidInputError("duration and step must be > 0")
    rng = np.random.default_rng(seed)
    loss_fn = loss if callable(loss) else (lambda net, t, _v=float(loss): _v)
    dropouts = list(dropouts)
    n = math.ceil(duration / step - 1e-9)
    recs = []
    for i in range(n):
        t = round(i * step, 9)
        for net, rtt in rtts.items():
            if any(d_net == net and lo <= t < hi for d_net, lo, hi in dropouts):
                continue
            r = rtt * float(rng.lognormal(0.0, rtt_jitter)) if rtt_jitter > 0 else rtt
            recs.append(TraceRecord(t, net, float(loss_fn(net, t)), r))
    return TraceSeries.from_records(recs)
