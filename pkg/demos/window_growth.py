"""
Coded window growth: mean field and Monte Carlo
===============================================

With redundancy ``R`` the expected window grows by ``min(1, (1-p) R)``
per RTT.  The stochastic process lags the mean field early on because the
acknowledgments credited per RTT are capped at the window.
"""

from mptcpnc import PathParams, expected_window
from mptcpnc.simulator import mean_window_at

rounds = (5, 10, 25, 50, 100)
for p in (0.1, 0.3, 0.5):
    path = PathParams("demo", p=p, rtt=0.1, redundancy=1.25 / (1 - p), w_max=1e6)
    sim = mean_window_at(path, rounds, trials=20_000, seed=0)
    cells = "  ".join(f"i={i}: {sim[i]:6.2f}/{expected_window(path, 1, i):6.2f}" for i in rounds)
    print(f"p={p}: {cells}")

# Below the critical redundancy 1/(1-p) growth slows to (1-p) R per RTT.
slow = PathParams("slow", p=0.3, rtt=0.1, redundancy=1.0, w_max=1e6)
print("\nR=1, p=0.3, window at i=50:", expected_window(slow, 1, 50))
