"""
Spiral spectrum of a three-component pump
=========================================

A pump in the superposition sqrt(2.5)|-2> + |0> + sqrt(2.5)|2> feeds pairs
whose OAM sums are -2, 0 or 2. Tuning the signal/idler waist makes the three
diagonal cells (-1,-1), (0,0), (1,1) equally likely.
"""

from math import sqrt

import numpy as np

from oam_noon import PumpSpec, coincidence_table, flatness_scan, spiral_spectrum

pump = PumpSpec.from_modes([(-2, sqrt(2.5)), (0, 1.0), (2, sqrt(2.5))], w0=1.0)

# equal waists first
table = coincidence_table(pump, l_max=3)
spectrum = spiral_spectrum(table)
np.set_printoptions(precision=4, suppress=True)
print("l values:", spectrum.l_values)
print(spectrum.probabilities)

# which OAM sums appear
print("support sums:", sorted({a + b for a, b in spectrum.support()}))

# scan the waist ratio for the flattest diagonal
cells = [(-1, -1), (0, 0), (1, 1)]
best, flatness, trace = flatness_scan(pump, cells, np.round(np.arange(0.6, 2.21, 0.02), 2))
print(f"flattest at ratio {best}: min/max = {flatness:.4f}")
for ratio, f in trace[::10]:
    print(f"  ratio {ratio:4.2f}  flatness {f:.4f}")

# plot-ready CSV of the flattest spectrum
w = best * pump.waist
flat = spiral_spectrum(coincidence_table(pump, l_max=3, waists=(w, w)))
print(flat.to_csv()[:200])
