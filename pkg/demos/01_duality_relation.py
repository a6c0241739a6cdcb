"""
Wave-particle duality in multi-path interferometers
===================================================

A which-path detector that can tell the paths apart destroys interference.
This script sweeps the coupling angle of the one-angle rotation detector
family and shows the exact trade-off: the which-path information D and the
rms visibility V_P always satisfy D**2 + V_P**2 = 1, while the coherence
visibility V_C never exceeds V_P.
"""

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from npath import (
    InterferometerSpec,
    distinguishability,
    overlap_matrix_for,
    visibility_coherence,
    visibility_purity,
)

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

thetas = np.linspace(0.0, math.pi, 25)

print(f"{'N':>3} {'theta':>8} {'D':>8} {'V_C':>8} {'V_P':>8} {'D^2+V_P^2':>10}")
curves = {}
for num_paths in (2, 4, 8):
    d_curve, vc_curve, vp_curve = [], [], []
    for theta in thetas:
        overlaps = overlap_matrix_for(
            InterferometerSpec(num_paths=num_paths, theta=float(theta))
        )
        d_curve.append(distinguishability(overlaps))
        vc_curve.append(visibility_coherence(overlaps))
        vp_curve.append(visibility_purity(overlaps))
    curves[num_paths] = (np.array(d_curve), np.array(vc_curve), np.array(vp_curve))
    for index in (0, 12, 24):
        d, vc, vp = d_curve[index], vc_curve[index], vp_curve[index]
        print(f"{num_paths:>3} {thetas[index]:8.4f} {d:8.4f} {vc:8.4f}"
              f" {vp:8.4f} {d * d + vp * vp:10.6f}")

# the duality residual is zero to machine precision for every N and angle
worst = max(
    float(np.max(np.abs(d**2 + vp**2 - 1.0))) for d, _, vp in curves.values()
)
print(f"\nlargest |D^2 + V_P^2 - 1| over all points: {worst:.2e}")

worst_gap = max(float(np.max(vc - vp)) for _, vc, vp in curves.values())
print(f"largest V_C - V_P (never positive): {worst_gap:.2e}")

fig, (left, right) = plt.subplots(1, 2, figsize=(10, 4))
for num_paths, (d, vc, vp) in curves.items():
    left.plot(thetas, vp, label=f"V_P, N={num_paths}")
    left.plot(thetas, d, "--", label=f"D, N={num_paths}")
    right.plot(d**2, vp**2, label=f"N={num_paths}")
left.set_xlabel("coupling angle (rad)")
left.set_ylabel("quantifier value")
left.legend(fontsize=8)
line = np.linspace(0.0, 1.0, 2)
right.plot(line, 1.0 - line, "k", lw=1)
right.set_xlabel("D squared")
right.set_ylabel("V_P squared")
right.legend(fontsize=8)
fig.tight_layout()
fig.savefig(out_dir / "duality_relation.svg")
print(f"\nfigure written to {out_dir / 'duality_relation.svg'}")
