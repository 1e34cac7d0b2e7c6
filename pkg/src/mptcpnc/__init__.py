"""Throughput models, simulation and network coding for MPTCP and MPTCP/NC."""

from .analytic_mptcp import PadhyeParams, mptcp_series, mptcp_throughput, padhye_throughput
from .analytic_nc import (
    NcModelInputs,
    WindowTrajectory,
    e2e_throughput,
    expected_window,
    growth_rate,
    min_redundancy,
    mptcpnc_series,
    round_throughput,
)
from .core import (
    InconsistencyError,
    InvalidInputError,
    PathParams,
    RegimeError,
    RoundClock,
    ThroughputSeries,
    alpha_of,
    make_round_clock,
)
from .simulator import SimConfig, estimate_timeout_prob, simulate_mptcpnc, simulate_tcp_reno, step_subflow
from .traces import TraceRecord, TraceSeries, average_loss, parse_trace, summarize

__version__ = "0.1.0"
