"""
The shared round clock
======================

Every sub-flow advances on a common clock whose tick is the GCD of the
quantized RTTs.  A slow path acts once every ``alpha`` ticks.
"""

from mptcpnc import make_round_clock

rtts = {"iridium": 1.653, "wifi": 0.607, "wimax": 0.087}

# With a 1 ms quantum the three RTTs share only the trivial divisor.
clock = make_round_clock(list(rtts.values()), quantum=0.001)
print("t_rnd =", clock.t_rnd)
for name, alpha in zip(rtts, clock.alphas):
    print(f"  {name:8s} acts every {alpha} rounds")

# Coarser quanta give a longer tick and smaller alphas.
for q in (0.01, 0.1):
    c = make_round_clock(list(rtts.values()), quantum=q)
    print(f"quantum {q}: t_rnd={c.t_rnd} alphas={list(c.alphas)}")
