import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import direct_e2e
from mptcpnc.analytic_nc import (
    NcModelInputs,
    WindowState,
    asymptotic_throughput,
    e2e_throughput,
    e2e_throughput_relaxed,
    expected_window,
    growth_rate,
    min_redundancy,
    mptcpnc_series,
    round_throughput,
    saturation_round,
    unbounded_e2e_throughput,
    window_trajectory,
)
from mptcpnc.core import InvalidInputError, PathParams, RegimeError, RoundClock, make_round_clock
from mptcpnc.traces import TraceRecord, TraceSeries, synthetic_trace


def path(p=0.0, R=1.25, w_max=12.0, w1=1.0, rtt=1.0, pid="a"):
    return PathParams(pid, p, rtt, R, w_max, w1)


@pytest.mark.parametrize("p, R, expected", [(0, 1, 1), (0.5, 2, 1), (0.5, 1.5, 0.75)])
def test_growth_rate(p, R, expected):
    assert growth_rate(p, R) == expected


@pytest.mark.parametrize("p, expected", [(0, 1), (0.5, 2), (0.9, 10)])
def test_min_redundancy(p, expected):
    assert min_redundancy(p) == pytest.approx(expected, rel=1e-12)


def test_min_redundancy_unbounded():
    with pytest.raises(InvalidInputError):
        min_redundancy(1.0)


@pytest.mark.parametrize("p, R, alpha", [(0.0, 1.0, 1), (0.3, 1.1, 3), (0.7, 3.0, 7)])
def test_expected_window_first_round(p, R, alpha):
    assert expected_window(path(p, R, w1=2.5), alpha, 1) == 2.5


def test_expected_window_examples():
    assert expected_window(path(0.0, 1.0, w_max=5), 1, 5) == 5
    assert expected_window(path(0.5, 1.5, w_max=2), 2, 4) == pytest.approx(1.75)
    assert expected_window(path(0.0, 1.0, w_max=12), 1, 100) == 12


def test_round_throughput_examples():
    assert round_throughput(path(0.1, 2.0, w_max=3), 1, 1.0, 3) == pytest.approx(3.0)
    assert round_throughput(path(0.1, 2.0, w_max=12), 2, 0.5, 1000) == pytest.approx(12.0)
    assert round_throughput(path(0.5, 1.5, w_max=100), 1, 1.0, 4) == pytest.approx(2.4375)


def test_round_throughput_bounded_by_window_cap():
    p = path(0.2, 1.5, w_max=7.5)
    for i in range(1, 200):
        assert round_throughput(p, 3, 0.1, i) <= 7.5 / (3 * 0.1) + 1e-12


def test_trajectory_non_decreasing_and_clamped():
    tr = window_trajectory(path(0.3, 2.0, w_max=9.5), 4, 200)
    assert (np.diff(tr.windows) >= 0).all()
    assert tr.windows.max() == 9.5
    assert not tr.windows.flags.writeable


def single(k, w_max=12.0, w1=1.0, t=1.0, alpha=1):
    return NcModelInputs((path(w_max=w_max, w1=w1),), RoundClock(t, (alpha,), quantum=t), k)


def test_e2e_arithmetic_series():
    assert direct_e2e([path(w_max=12)], [1], 1.0, 9) == pytest.approx(5.0)
    assert e2e_throughput(single(9)) == pytest.approx(5.0, rel=1e-12)


@pytest.mark.parametrize("w1, t", [(1.0, 1.0), (3.0, 0.25), (2.5, 0.087)])
def test_e2e_one_round_sends_initial_window(w1, t):
    assert e2e_throughput(single(1, w1=w1, t=t)) == pytest.approx(w1 / t, rel=1e-12)


def test_e2e_asymptote_single_path():
    assert abs(e2e_throughput(single(10**6)) - 12.0) <= 0.01


def test_e2e_rejects_subcritical():
    inputs = NcModelInputs((path(0.5, 1.5),), RoundClock(1.0, (1,), quantum=1.0), 10)
    with pytest.raises(RegimeError):
        e2e_throughput(inputs)


def test_critical_redundancy_is_accepted():
    inputs = NcModelInputs((path(0.3, 1 / 0.7),), RoundClock(1.0, (1,), quantum=1.0), 10)
    assert e2e_throughput(inputs) == pytest.approx(direct_e2e(inputs.paths, [1], 1.0, 10))


def random_inputs(rng, k_max=10_000):
    n = int(rng.integers(1, 4))
    paths = []
    for j in range(n):
        p = float(rng.uniform(0, 0.9))
        R = float(rng.uniform(1.0, 1.5)) / (1 - p)
        w1 = float(rng.integers(1, 4))
        w_max = w1 + float(rng.integers(0, 40))
        rtt = float(rng.integers(1, 200)) * 0.001
        paths.append(PathParams(j, p, rtt, R, w_max, w1))
    return NcModelInputs.from_paths(paths, int(rng.integers(1, k_max + 1)))


def test_closed_form_matches_direct_sum_on_random_configs():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(300):
        inp = random_inputs(rng)
        direct = direct_e2e(inp.paths, inp.clock.alphas, inp.clock.t_rnd, inp.k)
        worst = max(worst, abs(e2e_throughput(inp) - direct) / direct)
    assert worst <= 1e-9


def test_relaxed_form_consistency():
    # For k <= r and alpha | k the relaxed two-branch form reduces to the
    # unbounded arithmetic-series expression exactly.
    rng = np.random.default_rng(5)
    for _ in range(200):
        alphas = rng.integers(1, 30, size=int(rng.integers(1, 4)))
        paths = [path(w_max=float(rng.integers(5, 50)), w1=float(rng.integers(1, 4)), pid=j) for j in range(len(alphas))]
        clock = RoundClock(0.01, tuple(int(a) for a in alphas), quantum=0.01)
        r_min = min(saturation_round(p, a) for p, a in zip(paths, clock.alphas))
        lcm = math.lcm(*clock.alphas)
        if lcm > r_min:
            continue
        k = lcm * int(rng.integers(1, r_min // lcm + 1))
        inp = NcModelInputs(tuple(paths), clock, k)
        assert e2e_throughput_relaxed(inp) == pytest.approx(unbounded_e2e_throughput(inp), rel=1e-12)


def test_relaxed_form_equals_exact_when_alpha_is_one():
    for k in (1, 5, 11, 12, 50):
        assert e2e_throughput_relaxed(single(k)) == pytest.approx(e2e_throughput(single(k)), rel=1e-12)


def test_relaxed_form_underestimates_for_integer_windows():
    rng = np.random.default_rng(9)
    for _ in range(200):
        alpha = int(rng.integers(1, 20))
        inp = single(int(rng.integers(1, 3000)), w_max=float(rng.integers(2, 30)), alpha=alpha)
        assert e2e_throughput_relaxed(inp) <= e2e_throughput(inp) * (1 + 1e-12)


def test_relaxed_branches_meet_at_saturation_round():
    for alpha in (1, 2, 7):
        p = path(w_max=12, w1=1)
        r = int(saturation_round(p, alpha))
        clock = RoundClock(0.1, (alpha,), quantum=0.1)
        below = e2e_throughput_relaxed(NcModelInputs((p,), clock, r))
        rho = r * p.w1 + r * (r + 1 - 2 * alpha) / (2 * alpha) + p.w_max * (r - r)
        assert below == pytest.approx(rho / (alpha * r * 0.1), rel=1e-12)


def test_monotone_in_k_and_w_max():
    base = [e2e_throughput(single(k, alpha=3)) for k in range(1, 200)]
    assert all(b >= a - 1e-12 for a, b in zip(base, base[1:]))
    by_w = [e2e_throughput(single(150, w_max=w, alpha=3)) for w in range(1, 40)]
    assert all(b >= a for a, b in zip(by_w, by_w[1:]))


def test_independent_of_loss_when_supercritical():
    clock = RoundClock(0.01, (3, 5), quantum=0.01)
    values = {
        e2e_throughput(NcModelInputs((path(p, 1.0 / (1 - p) * m), path(p, 2 / (1 - p), pid="b")), clock, 777))
        for p in (0.0, 0.2, 0.5, 0.8)
        for m in (1.0, 1.25, 3.0)
    }
    assert len(values) == 1


def test_asymptote_limit():
    paths = [path(w_max=12, rtt=r, pid=i) for i, r in enumerate([1.653, 0.607, 0.087])]
    clock = make_round_clock([p.rtt for p in paths], 0.01)
    limit = asymptotic_throughput(paths, clock)
    assert limit == pytest.approx(12 / 1.65 + 12 / 0.61 + 12 / 0.09, rel=1e-12)
    gaps = [limit - e2e_throughput(NcModelInputs(tuple(paths), clock, k)) for k in (10**4, 10**5, 10**6, 10**7)]
    assert all(g > 0 for g in gaps)
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] / limit < 1e-4


@settings(max_examples=200, deadline=None)
@given(
    alpha=st.integers(1, 9),
    w1=st.floats(1, 4),
    extra=st.floats(0, 20),
    steps=st.lists(st.tuples(st.integers(0, 40), st.sampled_from([1.0, 0.5, 0.75, 0.0])), min_size=1, max_size=8),
)
def test_window_state_matches_round_by_round(alpha, w1, extra, steps):
    w_max = w1 + extra
    state = WindowState(alpha, w_max, w1)
    # Oracle: explicit per-round windows, growth applied at each block boundary.
    window, rounds_done = w1, 0
    for n, g in steps:
        expected = 0.0
        for _ in range(n):
            if rounds_done and rounds_done % alpha == 0:
                window = min(w_max, window + g)
            expected += window
            rounds_done += 1
        assert state.advance(n, g) == pytest.approx(expected, rel=1e-12, abs=1e-12)


RTTS = {"iridium": 1.653, "wifi": 0.607, "wimax": 0.087}


def nc_paths(rtts=RTTS):
    return {n: PathParams(n, 0.0, r, 1.0, 12.0, 1.0) for n, r in rtts.items()}


def test_series_zero_loss_ramps_then_holds():
    trace = synthetic_trace(RTTS, duration=120, loss=0.0)
    res = mptcpnc_series(trace, nc_paths())
    limit = asymptotic_throughput(list(nc_paths().values()), res.clock)
    v = res.series.values
    assert all(b >= a for a, b in zip(v, v[1:]))
    assert v[0] < limit
    assert v[-1] == pytest.approx(limit, rel=1e-12)


def test_series_single_path_matches_closed_form():
    trace = synthetic_trace({"wifi": 0.607}, duration=60, loss=0.1)
    res = mptcpnc_series(trace, nc_paths({"wifi": 0.607}))
    clock = res.clock
    rounds_per = round(5.0 / clock.t_rnd)
    p = PathParams("wifi", 0.1, 0.607, 1.25 / 0.9, 12.0, 1.0)
    for m, value in enumerate(res.series.values):
        k1, k2 = m * rounds_per, (m + 1) * rounds_per
        cum = lambda k: 0.0 if k == 0 else k * e2e_throughput(NcModelInputs((p,), clock, k))  # noqa: E731
        assert value == pytest.approx((cum(k2) - cum(k1)) / rounds_per, rel=1e-9)


def test_series_unchanged_by_loss_spike_when_supercritical():
    calm = synthetic_trace(RTTS, duration=120, loss=0.05)
    spiky = synthetic_trace(RTTS, duration=120, loss=lambda n, t: 0.5 if (n == "wifi" and 40 <= t < 60) else 0.05)
    a = mptcpnc_series(calm, nc_paths()).series.values
    b = mptcpnc_series(spiky, nc_paths()).series.values
    assert a == b


def test_series_outage_freezes_window():
    recs = [TraceRecord(float(t), "x", 1.0 if 5 <= t < 10 else 0.0) for t in range(20)]
    res = mptcpnc_series(TraceSeries.from_records(recs), {"x": PathParams("x", 0.0, 1.0, 1.0, 12.0, 1.0)}, quantum=1.0)
    # Five rounds per interval on a 1 s clock: windows 1..5, outage, 6..10, 11,12,12,12,12.
    assert res.series.values == pytest.approx((3.0, 0.0, 8.0, 11.8))


def test_series_regime_violation():
    trace = synthetic_trace({"wifi": 0.607}, duration=10, loss=0.5)
    with pytest.raises(RegimeError):
        mptcpnc_series(trace, nc_paths({"wifi": 0.607}), margin=0.8)
    res = mptcpnc_series(trace, nc_paths({"wifi": 0.607}), margin=0.8, allow_subcritical=True)
    assert len(res.violations) == 2
