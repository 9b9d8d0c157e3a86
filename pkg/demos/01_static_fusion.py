"""
Static fusion of hard decisions
===============================

Three sensors report a binary decision about one object. A fusion center
combines two of them, a second center combines that result with the third.
We compare the five rules at the final center.
"""

import numpy as np

from seqfusion import ConfusionMatrix, FusionNetwork, RuleSpec, fusion_order, propagate, validate_network
from seqfusion.oracle import brute_force_network

# each sensor is described by (P_F, P_D)
sensors = {
    "S1": ConfusionMatrix.from_rates(0.10, 0.80),
    "S2": ConfusionMatrix.from_rates(0.20, 0.90),
    "S3": ConfusionMatrix.from_rates(0.05, 0.60),
}

rules = {
    "and": RuleSpec.and_(),
    "or": RuleSpec.or_(),
    "majority": RuleSpec.majority(),
    "neyman_pearson(0.1)": RuleSpec.neyman_pearson(0.1),
    "bayes(miss costs 4)": RuleSpec.bayes(c_false=1, c_miss=4, priors=(0.5, 0.5)),
}

for label, rule in rules.items():
    net = FusionNetwork.build(
        {"F1": (RuleSpec.or_(), ["S1", "S2"]), "D": (rule, ["F1", "S3"])},
        sensors,
    )
    assert validate_network(net).ok
    system = propagate(net)
    # the exhaustive oracle enumerates every joint sensor outcome
    check = brute_force_network(net)
    print(f"{label:>22}:  P_F = {system.pf:.4f}  P_D = {system.pd:.4f}"
          f"   (oracle delta {np.abs(system.entries - check.entries).max():.1e})")

print("fusion order:", fusion_order(net))

# broken graphs are reported rule by rule rather than failing on the first problem
bad = FusionNetwork.build({"D": (RuleSpec.and_(), ["S1"]), "E": (RuleSpec.or_(), ["S2"])}, sensors)
for v in validate_network(bad).violations:
    print("violation:", v)
