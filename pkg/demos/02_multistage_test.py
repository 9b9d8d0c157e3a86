"""
A two-stage truncated sequential test
======================================

A cheap first stage watches one sensor until its likelihood ratio leaves a
wide interval, then hands over to a stricter second stage. The engine
returns the exact distribution of the stopping time and final decision.
"""

import numpy as np

from seqfusion import (
    ConfusionMatrix,
    MultiStageTest,
    TargetOperatingPoint,
    run_multistage,
    wald_bound_diagnostic,
    wald_thresholds,
)

N = 20
stage1 = TargetOperatingPoint(pf_star=0.3, pd_star=0.6)
stage2 = TargetOperatingPoint(pf_star=0.05, pd_star=0.95)
th1, th2 = wald_thresholds(stage1), wald_thresholds(stage2)
print("stage 1 thresholds", th1)
print("stage 2 thresholds", th2)

# the first stage's sensor slowly improves; the second stage sees a fused, sharper decision
steps1 = [ConfusionMatrix.from_rates(0.45 - 0.01 * k, 0.55 + 0.01 * k) for k in range(1, N + 1)]
steps2 = [ConfusionMatrix.from_rates(0.2, 0.8) for _ in range(N)]
test = MultiStageTest.of((steps1, th1), (steps2, th2))

exact = run_multistage(test, coalesce_mode="exact")
plain = run_multistage(test, coalesce_mode="off")
print("coalescing changes nothing:", np.abs(exact.final.pmf - plain.final.pmf).max())
print("atoms kept at N:", int(exact.per_stage[0].alive_atoms[-1] + exact.per_stage[1].alive_atoms[-1]),
      "of", exact.count_alive_at_horizon, "live paths")

final = exact.final
print(f"P_D' = {exact.pd_final:.4f}   P_F' = {exact.pf_final:.4f}")
print(f"E(K|H=0) = {exact.per_stage[0].expected_k[0]:.3f}   E(K'|H=0) = {final.expected_k[0]:.3f}")
print(f"E(K|H=1) = {exact.per_stage[0].expected_k[1]:.3f}   E(K'|H=1) = {final.expected_k[1]:.3f}")
print(f"growth base R = {exact.growth_base:.4f}")

for i, (rep, target) in enumerate(zip(exact.per_stage, (stage1, stage2)), start=1):
    d = wald_bound_diagnostic(rep, target)
    print(f"stage {i}: P_D at k={d.k_detect} is {d.pd_at_mean:.3f} (bound {d.pd_bound:.3f}),"
          f" P_F at k={d.k_false} is {d.pf_at_mean:.3f} (bound {d.pf_bound:.3f})")

# the final-stage stopping pmf under H=1, one row per k
for k, p in zip(final.k, final.pmf[1]):
    print(f"{k:3d} {p:.5f} " + "#" * int(200 * p))
