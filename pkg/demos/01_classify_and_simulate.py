"""Regions of the switching manifold and a concatenated trajectory.

The reference system has g = z, so the manifold is the plane z = 0.  There
the upper field is a linear unstable focus with third component x - 1:
everything left of the line x = 1 is sliding region, everything right of it
is crossing region, and the line itself is the fold of X.
"""

import numpy as np

from slidim import Region, classify_region, filippov_trajectory, make_bench

bench = make_bench()
sys_ = bench.system
print(f"reference system: alpha={bench.alpha}, beta={bench.beta}, "
      f"shooting residual {bench.residual:.2e}")

print("\nmanifold classification along y = 0:")
for x in (-1.0, 0.0, 0.5, 0.999, 1.0, 1.001, 1.5, 2.0):
    label = classify_region(sys_, [x, 0.0, 0.0])
    print(f"  x = {x:+.3f}: {label.value}")

assert classify_region(sys_, [0.0, 0.0, 0.0]) == Region.SLIDING

print("\ntrajectory from (0.2, 0.1, 0.5): falls onto the manifold, then slides")
segments = filippov_trajectory(sys_, [0.2, 0.1, 0.5], 4.0)
for seg in segments:
    t0, t1 = seg.samples[0][0], seg.t_end
    print(f"  mode {seg.mode.value:>5} on t in [{t0:.3f}, {t1:.3f}] "
          f"ending at {np.round(seg.u_end, 4)} ({seg.terminal_event.value})")

print("\nsliding orbits spiral outward and leave through the visible fold:")
segments = filippov_trajectory(sys_, [0.3, 0.0, 0.0], 25.0)
for seg in segments[:3]:
    print(f"  mode {seg.mode.value:>5} until t = {seg.t_end:.3f} "
          f"at {np.round(seg.u_end, 4)}")
