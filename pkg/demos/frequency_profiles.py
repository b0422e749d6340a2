"""Weiss and frequency profiles for a few catalogue solutions, exact and gridded.

    python3 demos/frequency_profiles.py
"""

from __future__ import annotations

from fbscope import analytic as an
from fbscope.field import GridSpec
from fbscope.functionals import limit_extrapolate, profile


def show(label, field, x, r_min, r_max):
    prof = profile(field, x, r_min, r_max, 8)
    lim = limit_extrapolate(prof)
    print(f"{label:32s} M(r) {prof.column('M').min():.4f}..{prof.column('M').max():.4f}  "
          f"N(r) {prof.column('N').min():.4f}..{prof.column('N').max():.4f}  "
          f"M0 {lim.M0:.4f} N0 {lim.N0:.4f} H0 {lim.H0:.4f}")


grid = GridSpec.cube(2, 256)
for text in ("wedge:q=0.5", "halfplane:a=1", "homabs:k=2", "absharm:v=x2-y2"):
    sol = an.parse_solution(text)
    show(f"{text} (exact)", sol, (0.0, 0.0), 0.02, 0.5)
    show(f"{text} (256^2 grid)", an.to_field(sol, grid), (0.0, 0.0), 0.05, 0.5)
