"""Command-line front end.

Every subcommand writes CSV whose first line is ``# config: {...}``, the
JSON-serialised run configuration, and prints a short summary to stdout.
Outputs depend only on the configuration, so repeated runs are
byte-identical.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import coding
from .analytic_mptcp import PadhyeParams, mptcp_series
from .analytic_nc import mptcpnc_series
from .core import DEFAULT_QUANTUM, InvalidInputError, PathParams, RegimeError, make_round_clock
from .simulator import SimConfig, simulate_mptcpnc
from .traces import (
    TraceParseError,
    TraceSeries,
    alternating_loss,
    average_loss,
    parse_trace,
    summarize,
    synthetic_trace,
    trace_to_string,
)

# Mean RTTs of the three measured networks, seconds.
DEFAULT_RTTS = {"iridium": 1.653, "wifi": 0.607, "wimax": 0.087}
DEFAULT_WMAX = 12.0

SUBCOMMANDS = ("model-mptcp", "model-mptcpnc", "simulate", "compare", "trace-stats", "codec-bench", "synth-trace")


@dataclass
class RunConfig:
    subcommand: str
    trace: str | None = None
    out: str | None = None
    quantum: float = DEFAULT_QUANTUM
    wmax: float = DEFAULT_WMAX
    w1: float = 1.0
    redundancy_margin: float = 1.25
    redundancy_floor: float = 1.0
    avg_window: float = 5.0
    rounds: int = 1000
    trials: int = 100
    seed: int = 0
    b: float = 2.0
    t0: float = 0.2
    rtt: dict[str, float] = field(default_factory=dict)
    loss: dict[str, float] = field(default_factory=dict)
    generation: int = 16
    payload: int = coding.SEGMENT_SIZE
    duration: float = 300.0
    period: float = 30.0
    low_loss: float = 0.05
    high_loss: float = 0.5

    def header(self) -> str:
        return "# config: " + json.dumps(asdict(self), sort_keys=True) + "\n"


class CliError(Exception):
    pass


def _load_trace(cfg: RunConfig) -> TraceSeries:
    if not cfg.trace:
        raise CliError(f"{cfg.subcommand} needs --trace")
    with open(cfg.trace, newline="") as fh:
        return parse_trace(fh)


def _rtt_for(net: str, cfg: RunConfig, trace: TraceSeries | None) -> float:
    if net in cfg.rtt:
        return cfg.rtt[net]
    if net in DEFAULT_RTTS:
        return DEFAULT_RTTS[net]
    if trace is not None and net in trace.records:
        rtts = [r.rtt for r in trace.records[net] if r.rtt is not None]
        if rtts:
            return math.fsum(rtts) / len(rtts)
    raise CliError(f"no RTT known for network {net!r}; pass --rtt {net}=SECONDS")


def _networks(cfg: RunConfig, trace: TraceSeries | None) -> list[str]:
    if trace is not None:
        return trace.networks
    nets = list(dict.fromkeys([*cfg.loss, *cfg.rtt]))
    return nets or list(DEFAULT_RTTS)


def _padhye_paths(cfg: RunConfig, trace: TraceSeries) -> dict[str, PadhyeParams]:
    return {
        net: PadhyeParams(p=0.0, rtt=_rtt_for(net, cfg, trace), b=cfg.b, t0=cfg.t0, w_max=cfg.wmax)
        for net in _networks(cfg, trace)
    }


def _nc_paths(cfg: RunConfig, trace: TraceSeries | None) -> dict[str, PathParams]:
    return {
        net: PathParams(net, p=0.0, rtt=_rtt_for(net, cfg, trace), w_max=cfg.wmax, w1=cfg.w1)
        for net in _networks(cfg, trace)
    }


def _fmt(x: float) -> str:
    return repr(float(x))


def _csv(cfg: RunConfig, columns: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
    buf = io.StringIO()
    buf.write(cfg.header())
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) if isinstance(v, (float, np.floating)) else str(v) for v in row) + "\n")
    return buf.getvalue()


@dataclass
class CompareResult:
    csv: str
    times: list[float]
    mptcp: list[float]
    mptcpnc: list[float]
    violations: list[str]

    @property
    def summary(self) -> dict[str, float]:
        n = len(self.times)
        wins = sum(b >= a for a, b in zip(self.mptcp, self.mptcpnc))
        return {
            "intervals": n,
            "mean_mptcp": math.fsum(self.mptcp) / n if n else float("nan"),
            "mean_mptcpnc": math.fsum(self.mptcpnc) / n if n else float("nan"),
            "fraction_nc_ge_mptcp": wins / n if n else float("nan"),
            "regime_violations": len(self.violations),
        }


def run_compare(cfg: RunConfig, trace: TraceSeries | None = None) -> CompareResult:
    """MPTCP vs MPTCP/NC per averaging interval of the trace."""
    if trace is None:
        trace = _load_trace(cfg)
    averaged = average_loss(trace, cfg.avg_window)
    mp = mptcp_series(averaged, _padhye_paths(cfg, trace), cfg.avg_window)
    nc = mptcpnc_series(
        averaged,
        _nc_paths(cfg, trace),
        window=cfg.avg_window,
        quantum=cfg.quantum,
        margin=cfg.redundancy_margin,
        floor=cfg.redundancy_floor,
        allow_subcritical=True,
    )
    violations = [
        f"t={v.t}: {v.path_id} R={v.redundancy:.6g} < 1/(1-p)={1 / (1 - v.p):.6g}" for v in nc.violations
    ]
    rows = [(t, a, b) for t, a, b in zip(mp.times, mp.values, nc.series.values)]
    text = _csv(cfg, ("time", "mptcp_throughput", "mptcpnc_throughput"), rows)
    return CompareResult(text, list(mp.times), list(mp.values), list(nc.series.values), violations)


def _run_model_mptcp(cfg: RunConfig) -> tuple[str, str]:
    trace = _load_trace(cfg)
    s = mptcp_series(average_loss(trace, cfg.avg_window), _padhye_paths(cfg, trace), cfg.avg_window)
    text = _csv(cfg, ("time", "mptcp_throughput"), list(zip(s.times, s.values)))
    return text, f"intervals={len(s)} mean_mptcp={s.mean() if len(s) else float('nan'):.6g}\n"


def _run_model_mptcpnc(cfg: RunConfig) -> tuple[str, str]:
    trace = _load_trace(cfg)
    res = mptcpnc_series(
        average_loss(trace, cfg.avg_window),
        _nc_paths(cfg, trace),
        window=cfg.avg_window,
        quantum=cfg.quantum,
        margin=cfg.redundancy_margin,
        floor=cfg.redundancy_floor,
        allow_subcritical=True,
    )
    s = res.series
    text = _csv(cfg, ("time", "mptcpnc_throughput"), list(zip(s.times, s.values)))
    summary = (
        f"t_rnd={res.clock.t_rnd:.6g} alphas={list(res.clock.alphas)} intervals={len(s)} "
        f"mean_mptcpnc={s.mean() if len(s) else float('nan'):.6g} regime_violations={len(res.violations)}\n"
    )
    return text, summary


def _run_simulate(cfg: RunConfig) -> tuple[str, str]:
    trace = _load_trace(cfg) if cfg.trace else None
    nets = _networks(cfg, trace)
    base = _nc_paths(cfg, trace)
    clock = make_round_clock([base[n].rtt for n in nets], cfg.quantum)
    loss_model = None
    paths = []
    if trace is not None:
        averaged = average_loss(trace, cfg.avg_window)
        grid = averaged.grid()

        def loss_model(j: int, i: int) -> float:
            t = (i - 1) * clock.t_rnd
            k = min(len(grid) - 1, int(t // cfg.avg_window)) if grid else 0
            p = averaged.loss_at(nets[j], grid[k]) if grid else None
            return 1.0 if p is None else p

        # R is sized for the worst non-outage interval; per-round p comes from the trace.
        for n in nets:
            losses = [averaged.loss_at(n, t) for t in grid]
            live = [p for p in losses if p is not None and p < 1.0] or [0.0]
            p_ref = max(live)
            r = max(cfg.redundancy_margin / (1.0 - p_ref), cfg.redundancy_floor, 1.0)
            paths.append(PathParams(n, 0.0, base[n].rtt, r, cfg.wmax, cfg.w1))
    else:
        for n in nets:
            p = cfg.loss.get(n, 0.0)
            r = max(cfg.redundancy_margin / (1.0 - p), cfg.redundancy_floor, 1.0)
            paths.append(PathParams(n, p, base[n].rtt, r, cfg.wmax, cfg.w1))
    res = simulate_mptcpnc(
        SimConfig(tuple(paths), clock, cfg.rounds, seed=cfg.seed, trials=cfg.trials, loss_model=loss_model)
    )
    cols = ["time", "throughput"] + [f"window_{n}" for n in nets]
    rows = [
        (t, v, *(float(tr.windows[i]) for tr in res.trajectories))
        for i, (t, v) in enumerate(zip(res.series.times, res.series.values))
    ]
    text = _csv(cfg, cols, rows)
    return text, f"rounds={cfg.rounds} trials={cfg.trials} mean_throughput={res.series.mean():.6g}\n"


def _run_trace_stats(cfg: RunConfig) -> tuple[str, str]:
    trace = _load_trace(cfg)
    stats = summarize(trace)
    rows = []
    lines = []
    for net, s in stats.items():
        mean_rtt = "" if s.mean_rtt is None else _fmt(s.mean_rtt)
        med_rtt = "" if s.median_rtt is None else _fmt(s.median_rtt)
        rows.append((net, "summary", s.n_records, _fmt(s.mean_loss), mean_rtt, med_rtt))
        for x, f in zip(*s.loss_cdf):
            rows.append((net, "loss_cdf", "", _fmt(x), _fmt(f), ""))
        if s.rtt_cdf is not None:
            for x, f in zip(*s.rtt_cdf):
                rows.append((net, "rtt_cdf", "", _fmt(x), _fmt(f), ""))
        lines.append(f"{net}: n={s.n_records} mean_loss={s.mean_loss:.4g} mean_rtt={mean_rtt or 'n/a'}")
    text = _csv(cfg, ("network", "kind", "n", "value", "cdf_or_mean_rtt", "median_rtt"), rows)
    return text, "\n".join(lines) + "\n"


def codec_bench(trials: int, generation: int, payload: int, seed: int) -> dict[str, float]:
    """Random encode/decode round-trips; returns success and redundancy rates."""
    rng = np.random.default_rng(seed)
    ok = redundant = received = 0
    for _ in range(trials):
        packets = [rng.bytes(payload) for _ in range(generation)]
        enc = coding.Encoder(packets)
        dec = coding.DecoderState(0, generation)
        first_k = 0
        while not dec.complete:
            pkt = enc.emit(rng)
            status = dec.receive(pkt)
            received += 1
            if first_k < generation:
                first_k += 1
                redundant += status is coding.Reception.REDUNDANT
        ok += coding.decode_all(dec) == packets
    return {
        "trials": trials,
        "decoded_exactly": ok / trials,
        "redundant_in_first_k": redundant / (trials * generation),
        "packets_per_generation": received / trials,
    }


def _run_codec_bench(cfg: RunConfig) -> tuple[str, str]:
    start = time.perf_counter()
    res = codec_bench(cfg.trials, cfg.generation, cfg.payload, cfg.seed)
    elapsed = time.perf_counter() - start
    text = _csv(cfg, tuple(res), [tuple(float(v) for v in res.values())])
    summary = " ".join(f"{k}={v:.6g}" for k, v in res.items()) + f" elapsed_s={elapsed:.3f}\n"
    return text, summary


def _run_synth_trace(cfg: RunConfig) -> tuple[str, str]:
    rtts = {**DEFAULT_RTTS, **cfg.rtt}
    if cfg.loss:
        loss = lambda net, t: cfg.loss.get(net, 0.0)  # noqa: E731
    else:
        loss = alternating_loss(cfg.low_loss, cfg.high_loss, cfg.period)
    series = synthetic_trace(rtts, cfg.duration, loss=loss)
    return trace_to_string(series), f"records={len(series)} networks={series.networks}\n"


def _run_compare(cfg: RunConfig) -> tuple[str, str]:
    res = run_compare(cfg)
    s = res.summary
    lines = [" ".join(f"{k}={v:.6g}" for k, v in s.items())]
    lines += [f"regime violation {v}" for v in res.violations]
    return res.csv, "\n".join(lines) + "\n"


_RUNNERS = {
    "model-mptcp": _run_model_mptcp,
    "model-mptcpnc": _run_model_mptcpnc,
    "simulate": _run_simulate,
    "compare": _run_compare,
    "trace-stats": _run_trace_stats,
    "codec-bench": _run_codec_bench,
    "synth-trace": _run_synth_trace,
}


def _assignment(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep or not name:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    try:
        return name, float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number in {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mptcpnc", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--trace", help="trace CSV (t,network,loss_prob,rtt)")
    common.add_argument("--out", help="output CSV path (default: stdout)")
    common.add_argument("--quantum", type=float, default=DEFAULT_QUANTUM, help="RTT quantum in seconds")
    common.add_argument("--wmax", type=float, default=DEFAULT_WMAX, help="maximum window, packets")
    common.add_argument("--w1", type=float, default=1.0, help="initial expected window, packets")
    common.add_argument("--redundancy-margin", type=float, default=1.25, help="R = margin / (1 - p)")
    common.add_argument("--redundancy-floor", type=float, default=1.0)
    common.add_argument("--avg-window", type=float, default=5.0, help="loss averaging window, seconds")
    common.add_argument("--rounds", type=int, default=1000)
    common.add_argument("--trials", type=int, default=100)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--b", type=float, default=2.0, help="packets acknowledged per ACK")
    common.add_argument("--t0", type=float, default=0.2, help="initial retransmission timeout, seconds")
    common.add_argument("--rtt", type=_assignment, action="append", default=[], metavar="NET=SECONDS")
    common.add_argument("--loss", type=_assignment, action="append", default=[], metavar="NET=P")
    common.add_argument("--generation", type=int, default=16, help="codec-bench generation size")
    common.add_argument("--payload", type=int, default=coding.SEGMENT_SIZE, help="codec-bench payload bytes")
    common.add_argument("--duration", type=float, default=300.0, help="synth-trace length, seconds")
    common.add_argument("--period", type=float, default=30.0, help="synth-trace loss flip period")
    common.add_argument("--low-loss", type=float, default=0.05)
    common.add_argument("--high-loss", type=float, default=0.5)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def config_from_args(argv: Sequence[str] | None = None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    values = vars(ns)
    values["rtt"] = dict(values["rtt"])
    values["loss"] = dict(values["loss"])
    return RunConfig(**values)


def run(cfg: RunConfig) -> tuple[str, str]:
    """Execute one configuration; returns (output file text, summary)."""
    return _RUNNERS[cfg.subcommand](cfg)


def main(argv: Sequence[str] | None = None) -> int:
    cfg = config_from_args(argv)
    try:
        text, summary = run(cfg)
    except (CliError, TraceParseError, InvalidInputError, RegimeError, OSError) as exc:
        print(f"mptcpnc {cfg.subcommand}: error: {exc}", file=sys.stderr)
        return 1
    if cfg.out:
        Path(cfg.out).write_text(text)
        sys.stdout.write(summary)
    else:
        sys.stdout.write(text)
        sys.stderr.write(summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())
