"""
Checking the engine against independent oracles
================================================

The exact engine never enumerates sequences one by one. Two slow oracles do:
brute force over all 2**N decision sequences, and Monte Carlo simulation.
"""

import numpy as np

from seqfusion import run_multistage
from seqfusion.oracle import brute_force_multistage, monte_carlo_multistage
from seqfusion.random_models import random_multistage
from seqfusion.scenario import bundled
from seqfusion.verify import report_deltas, verify_scenario

rng = np.random.default_rng(7)
worst = 0.0
for _ in range(20):
    test = random_multistage(rng, horizon=10, n_stages=3)
    d = report_deltas(run_multistage(test), brute_force_multistage(test))
    worst = max(worst, d["stop_low"], d["stop_high"], d["alive_mass"])
print(f"20 random three-stage tests, N=10: max |engine - brute force| = {worst:.1e}")

# full-horizon Monte Carlo for the bundled scenario
scenario = bundled("approaching")
test = scenario.build_test()
exact = run_multistage(test)
mc = monte_carlo_multistage(test, h=1, trials=200_000, seed=42)
print(f"P_D'  exact {exact.pd_final:.5f}   MC {mc.detect_final:.5f} +/- {mc.detect_final_se:.5f}")
print(f"E(K'|H=1)  exact {exact.final.expected_k[1]:.4f}   MC {mc.final.expected_k:.4f} +/- {mc.final.expected_k_se:.4f}")

# the same checks the command line `verify` runs
for line in verify_scenario(scenario, max_horizon=10, mc_trials=100_000, seed=1).lines():
    print(line)
