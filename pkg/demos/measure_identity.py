"""Classify the free boundary of |x^2 - y^2| and compare Laplacian mass with the label-weighted length.

    python3 demos/measure_identity.py
"""

from __future__ import annotations

from fbscope import analytic as an
from fbscope.fb_analysis import classify, extract_boundary, measure_profile
from fbscope.field import GridSpec

sol = an.absharm("x2-y2")
field = an.to_field(sol, GridSpec.cube(2, 256))
pts = classify(field, extract_boundary(field))
print("labels:", pts.counts())
mp = measure_profile(field, (0.3, 0.3), pts, [0.05, 0.1, 0.15])
for r, m, p, e in zip(mp.radii, mp.measured, mp.predicted, mp.mismatch):
    print(f"r={r:.2f} measured {m:.5f} predicted {p:.5f} mismatch {100 * e:.2f}%")
