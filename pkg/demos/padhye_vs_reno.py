"""
Closed-form Reno throughput against a round-based simulation
============================================================

The Padhye formula predicts the long-run send rate of a Reno flow from its
loss rate.  A direct simulation under the same loss conventions should land
within a few tens of percent.
"""

import numpy as np

from mptcpnc import PadhyeParams, padhye_throughput, simulate_tcp_reno

print(f"{'p':>6s} {'model':>9s} {'sim':>9s} {'ratio':>6s}")
for p in (0.001, 0.005, 0.01, 0.05, 0.1):
    params = PadhyeParams(p=p, rtt=0.1, b=2, t0=0.2, w_max=1e6)
    model = padhye_throughput(params)
    sim = simulate_tcp_reno(params, duration=1e4, rng=np.random.default_rng(1))
    print(f"{p:6.3f} {model:9.2f} {sim:9.2f} {sim / model:6.2f}")

# A finite receiver window caps both at w_max / rtt.
capped = PadhyeParams(p=0.001, rtt=0.1, w_max=12)
print("\nw_max=12 at p=0.001:", round(padhye_throughput(capped), 2), "pkt/s; cap", 12 / 0.1)
