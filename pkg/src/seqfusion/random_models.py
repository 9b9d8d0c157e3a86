"""Random fusion networks and sequential tests for property checks and demos."""

from __future__ import annotations

import numpy as np

from seqfusion.confusion import ConfusionMatrix
from seqfusion.fusion_core import FusionNetwork, Vertex, validate_network
from seqfusion.fusion_rules import RuleKind, RuleSpec
from seqfusion.seq_engine import MultiStageTest, StageModel, Thresholds


def random_matrix(rng: np.random.Generator, m: int = 2) -> ConfusionMatrix:
    cols = rng.dirichlet(np.ones(m), size=m).T
    return ConfusionMatrix(cols)


def random_rule(rng: np.random.Generator, m: int = 2, kind: RuleKind | None = None) -> RuleSpec:
    if kind is None:
        kinds = list(RuleKind) if m == 2 else [RuleKind.MAJORITY, RuleKind.BAYES]
        kind = kinds[rng.integers(len(kinds))]
    if kind is RuleKind.NEYMAN_PEARSON:
        return RuleSpec.neyman_pearson(float(rng.uniform(0.02, 0.6)))
    if kind is RuleKind.BAYES:
        return RuleSpec.bayes(
            c_false=float(rng.uniform(0.1, 5)),
            c_miss=float(rng.uniform(0.1, 5)),
            c_cross=float(rng.uniform(0.1, 5)),
            priors=tuple(rng.dirichlet(np.ones(m))),
        )
    return RuleSpec(kind)


def random_tree_network(
    rng: np.random.Generator, max_sensors: int = 6, m: int = 2, cue_probability: float = 0.3
) -> FusionNetwork:
    """A valid tree-shaped network with models attached to every sensor."""
    n_sensors = int(rng.integers(1, max_sensors + 1))
    sensors = [f"S{i + 1}" for i in range(n_sensors)]
    pool = list(sensors)
    centers: dict[str, tuple[RuleSpec, list[str]]] = {}
    while True:
        size = int(rng.integers(1, len(pool) + 1))
        picked = [pool[i] for i in sorted(rng.choice(len(pool), size=size, replace=False))]
        cid = f"F{len(centers) + 1}"
        centers[cid] = (random_rule(rng, m), picked)
        pool = [p for p in pool if p not in picked] + [cid]
        if len(pool) == 1:
            break
    models = {s: random_matrix(rng, m) for s in sensors}
    net = FusionNetwork.build(centers, models, m=m)
    if rng.random() < cue_probability and len(centers) > 1:
        cue = (list(centers)[int(rng.integers(len(centers) - 1))], sensors[int(rng.integers(n_sensors))])
        candidate = FusionNetwork.build(centers, models, cues=[cue], m=m)
        if validate_network(candidate).ok:
            net = candidate
    return net


def random_thresholds(rng: np.random.Generator, inside: Thresholds | None = None) -> Thresholds:
    if inside is None:
        return Thresholds(float(rng.uniform(0.05, 0.9)), float(rng.uniform(1.1, 20)))
    return Thresholds(inside.eta0 * float(rng.uniform(0.05, 1.0)), inside.eta1 * float(rng.uniform(1.0, 20)))


def random_multistage(
    rng: np.random.Generator, horizon: int, n_stages: int = 2, stationary_probability: float = 0.3
) -> MultiStageTest:
    """Random nested-threshold test; some stages reuse one matrix for every step."""
    stages = []
    th = None
    for _ in range(n_stages):
        th = random_thresholds(rng, th)
        if rng.random() < stationary_probability:
            steps = (random_matrix(rng),) * horizon
        else:
            steps = tuple(random_matrix(rng) for _ in range(horizon))
        stages.append(StageModel(steps, th))
    return MultiStageTest(tuple(stages))
