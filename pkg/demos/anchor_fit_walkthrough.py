"""Walk through the measured mf-H anchors and the analytic fit.

Shows the three attack families side by side, fits the closed-form
disturbance model, and checks the combined-attack superadditivity that a
plain linear model cannot express.
"""

import numpy as np

import rhsim

anchors = np.asarray(rhsim.MFH_ANCHORS, dtype=float)
table = rhsim.mfh_table()
analytic = rhsim.mfh_analytic()

print("measured anchors (S = edge hammers per X+-2, T = near per X+-1)")
print(f"{'S':>10} {'T':>10} {'measured':>9} {'table':>7} {'fit':>8}")
for s, t, f in anchors:
    tab = rhsim.expected_flips(table, s, t)
    fit = rhsim.expected_flips(analytic, s, t)
    print(f"{s:10.0f} {t:10.0f} {f:9.0f} {tab:7.0f} {fit:8.1f}")

pred = rhsim.expected_flips(analytic, anchors[:, 0], anchors[:, 1])
mre = np.mean(np.abs(pred - anchors[:, 2]) / anchors[:, 2])
print(f"\nfit mean relative error over anchors: {mre:.1%}")
print(f"fitted alpha={analytic.alpha:.3f} gamma={analytic.gamma:.3f} "
      f"mu={analytic.mu:.2f} sigma={analytic.sigma:.2f}")
print(f"onset hammer count: {analytic.onset_hc:,.0f}")

# the interaction term is what lets a split (5M,5M) attack beat a pure
# double-sided (0,10M) attack with the same total activation count
mixed = rhsim.expected_flips(analytic, 5e6, 5e6)
pure = rhsim.expected_flips(analytic, 0, 10e6)
print(f"\nequal-budget comparison: (5M,5M) -> {mixed:.0f} flips, "
      f"(0,10M) -> {pure:.0f} flips")
assert mixed > pure
