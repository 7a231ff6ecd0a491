"""
Fast transform against the direct double sum
=============================================

The fast 2D transform is checked bin by bin against the literal sum, on
both smooth and prime sizes, then timed.
"""

import time

import numpy as np

from dualedge.rng import SplitMix64
from dualedge.spectral import dft2_naive, fft2, idft2

gen = SplitMix64(7)

# a tiny plane small enough to check by hand: F(0,0) is the sum, F(0,1) = 1-2+3-4
x = np.array([[1.0, 2.0], [3.0, 4.0]])
print("2x2 spectrum:\n", fft2(x).values.real)

# smooth sizes take the mixed-radix path, prime sizes take the chirp-z path
for shape in [(16, 16), (13, 17), (30, 25)]:
    plane = gen.uniform(-1, 1, shape)
    err = np.abs(fft2(plane).values - dft2_naive(plane).values).max()
    back = np.abs(idft2(fft2(plane)) - plane).max()
    print(f"{shape}: max |fast - direct| = {err:.2e}, round trip = {back:.2e}")

# the direct sum is O(M^2 N^2)
plane = gen.uniform(-1, 1, (48, 48))
t0 = time.perf_counter()
fft2(plane)
t1 = time.perf_counter()
dft2_naive(plane)
t2 = time.perf_counter()
print(f"48x48: fast {1e3 * (t1 - t0):.2f} ms, direct {1e3 * (t2 - t1):.1f} ms")
