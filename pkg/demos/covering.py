"""Beta numbers and the terminal-ball covering around the singular point of |x^2 - y^2|.

Also runs the synthetic curve oracle (N = 1 + 2 delta1 on a line, constant
in r), where every child keeps a pinched point, so counts grow like the
number of delta2-balls along the curve until r_stop.

    python3 demos/covering.py
"""

from __future__ import annotations

import numpy as np

from fbscope import analytic as an
from fbscope.geometry import (DiscreteMeasure, FrequencyOracle, beta_number, covering_tree,
                              ray_candidates, synthetic_curve)

rng = np.random.default_rng(1)
cloud = DiscreteMeasure.uniform(np.column_stack([rng.uniform(-1, 1, 50), 0.05 * rng.normal(size=50)]))
b = beta_number(cloud, (0, 0), 1.0)
print(f"beta^2 of a thin cloud: {b.beta2:.2e}, normal {np.round(b.normal, 3)}")

oracle = FrequencyOracle.from_analytic(an.absharm("x2-y2"))
pts = ray_candidates([45, 135, 225, 315], 0.5, d_min=1e-6, growth=1.005)
for r_stop in (1e-3, 1e-4):
    rep = covering_tree(pts, oracle, (0, 0), 0.5, 0.1, 0.05, 0.1, r_stop)
    counts = [g["non_terminal"] for g in rep.generation_counts()]
    print(f"|x^2-y^2| r_stop={r_stop:g}: non-terminal per generation {counts}, "
          f"packing sum {rep.packing_sum():.3f}")

line = np.column_stack([np.linspace(-0.5, 0.5, 4001), np.zeros(4001)])
rep = covering_tree(line, synthetic_curve(0.1), (0, 0), 0.5, 0.1, 0.05, 0.1, 1e-3)
print("synthetic curve: nodes per generation", [g["nodes"] for g in rep.generation_counts()],
      f"budget {rep.budget}, worst path {rep.max_large_drops()}")
