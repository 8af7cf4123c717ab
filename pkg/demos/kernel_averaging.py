"""Averaging the one-scale dyadic kernel over random shifts and calibres.

Estimates the averaged kernel at a few points by Monte Carlo and compares it
with c |x|^(alpha - 1) for two candidate constants: the integral of the tent
profile over its full support [0, 1], and over half of it.
"""
import numpy as np

from dyadfrac.averaging import empirical_average_kernel, half_support_constant, limit_kernel_constant

alpha = 0.5
xs = np.array([0.05, 0.1, 0.2, 0.4])
est = empirical_average_kernel(alpha, 200000, 1e-3, xs, seed=1)
full, half = limit_kernel_constant(alpha), half_support_constant(alpha)
print(f"full-support constant {full:.6f}, half-support constant {half:.6f}")
print("     x   estimate  stderr   est/(full |x|^-1/2)  est/(half |x|^-1/2)")
for x, v, s in zip(xs, est.values, est.stderr):
    base = x ** (alpha - 1)
    print(f"{x:6.2f} {v:10.5f} {s:7.4f} {v / (full * base):20.4f} {v / (half * base):20.4f}")
