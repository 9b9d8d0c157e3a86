"""Ground truth by brute force: exhaustive enumeration and Monte Carlo.

Nothing here reuses the frontier machinery of :mod:`seqfusion.seq_engine`;
trajectories are replayed one decision sequence (or one simulated trial)
at a time so that agreement with the engine is evidence rather than a
tautology.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from seqfusion.confusion import ConfusionMatrix
from seqfusion.fusion_core import FusionNetwork, VertexKind, fusion_order, validate_network, InvalidNetworkError
from seqfusion.fusion_rules import build_rule
from seqfusion.seq_engine import MultiStageReport, MultiStageTest, StageReport

MAX_BRUTE_HORIZON = 20
MAX_BRUTE_SENSORS = 15


class OracleTooLarge(ValueError):
    """The exhaustive oracle refuses problems beyond its size limit."""


def _replay(test: MultiStageTest, seq: tuple[int, ...]):
    """Trajectory of one full decision sequence.

    Returns the joint likelihood of the whole sequence under H=0 and H=1, a
    list of ``(stage, k, decision)`` stop events, and for every time
    ``k = 1..N`` the stage the path is alive in (``None`` once finished).
    """
    stages = test.stages
    n = test.horizon
    last = len(stages) - 1
    s = 0
    l0 = l1 = 1.0
    events = []
    alive_in = []
    for k in range(1, n + 1):
        d = seq[k - 1]
        # a finished path still carries its remaining decision factors
        e = stages[min(s, last)].steps[k - 1].entries
        l0 *= e[d, 0]
        l1 *= e[d, 1]
        if s <= last:
            ratio = math.inf if l0 == 0 else l1 / l0
            if l0 == 0 and l1 == 0:
                ratio = math.nan
            while s <= last and not math.isnan(ratio):
                th = stages[s].thresholds
                if ratio <= th.eta0:
                    events.append((s, k, 0))
                elif ratio >= th.eta1:
                    events.append((s, k, 1))
                else:
                    break
                s += 1
            if math.isnan(ratio):
                s = last + 1
        alive_in.append(s if s <= last and l0 + l1 > 0 else None)
    if s <= last and l0 + l1 > 0:
        mid = stages[s].thresholds.midpoint
        ratio = math.inf if l0 == 0 else l1 / l0
        decision = int(ratio >= mid)
        for later in range(s, last + 1):
            events.append((later, n + 1, decision))
    return l0, l1, events, alive_in


def brute_force_multistage(test: MultiStageTest) -> MultiStageReport:
    """Exact report by enumerating all ``2**N`` decision sequences."""
    n = test.horizon
    if n > MAX_BRUTE_HORIZON:
        raise OracleTooLarge(
            f"horizon {n} needs {2 ** n * n:,} path steps; brute force is limited to N <= {MAX_BRUTE_HORIZON}"
        )
    reports = [StageReport.zeros(st.thresholds, n) for st in test.stages]
    alive_seq_count = [np.zeros(n, dtype=np.int64) for _ in test.stages]
    for seq in itertools.product((0, 1), repeat=n):
        l0, l1, events, alive_in = _replay(test, seq)
        for s, k, decision in events:
            target = reports[s].stop_high if decision else reports[s].stop_low
            target[0, k - 1] += l0
            target[1, k - 1] += l1
        for k, s in enumerate(alive_in, start=1):
            if s is not None:
                alive_seq_count[s][k - 1] += 1
                # suffix factors sum to one, so this is the prefix mass
                reports[s].alive_mass[0, k - 1] += l0
                reports[s].alive_mass[1, k - 1] += l1
    for r, counts in zip(reports, alive_seq_count):
        # each live length-k prefix is shared by 2**(N-k) full sequences
        r.alive_count[:] = counts // (2 ** (n - np.arange(1, n + 1)))
        r.alive_atoms[:] = r.alive_count
    return MultiStageReport(reports, int(sum(r.alive_count[-1] for r in reports)))


@dataclass
class MonteCarloStage:
    stop_low: np.ndarray
    stop_high: np.ndarray
    stop_low_se: np.ndarray
    stop_high_se: np.ndarray
    detect_cum: np.ndarray
    detect_cum_se: np.ndarray
    expected_k: float
    expected_k_se: float

    @property
    def pmf(self) -> np.ndarray:
        return self.stop_low + self.stop_high


@dataclass
class MonteCarloReport:
    """Estimated single-hypothesis statistics with binomial standard errors.

    ``detect_cum`` is the estimate of ``pd_cum`` when ``hypothesis == 1`` and
    of ``pf_cum`` when ``hypothesis == 0``.
    """

    hypothesis: int
    trials: int
    seed: int
    generator: str
    per_stage: list[MonteCarloStage]

    @property
    def final(self) -> MonteCarloStage:
        return self.per_stage[-1]

    @property
    def detect_final(self) -> float:
        return float(self.final.detect_cum[-1])

    @property
    def detect_final_se(self) -> float:
        return float(self.final.detect_cum_se[-1])


def _binomial_se(p: np.ndarray, trials: int) -> np.ndarray:
    return np.sqrt(p * (1.0 - p) / trials)


def monte_carlo_multistage(
    test: MultiStageTest, h: int, trials: int, seed: int = 0
) -> MonteCarloReport:
    """Simulate ``trials`` independent runs of the test under ``H = h``."""
    if h not in (0, 1):
        raise ValueError("hypothesis must be 0 or 1")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    n = test.horizon
    stages = test.stages
    n_stages = len(stages)
    rng = np.random.Generator(np.random.PCG64(seed))

    stage = np.zeros(trials, dtype=np.int64)
    ratio = np.ones(trials)
    stop_k = np.full((n_stages, trials), n + 1, dtype=np.int64)
    stop_d = np.full((n_stages, trials), -1, dtype=np.int64)

    p_one = np.array([[st.steps[k].entries[1, h] for k in range(n)] for st in stages])
    # lr[s, k, d] = (P(d | H=1), P(d | H=0)) for stage s at step k + 1
    lr = np.array([[st.steps[k].entries[:, ::-1] for k in range(n)] for st in stages])
    eta0 = np.array([st.thresholds.eta0 for st in stages])
    eta1 = np.array([st.thresholds.eta1 for st in stages])

    for k in range(1, n + 1):
        # trial t always consumes the t-th uniform of step k
        u = rng.random(trials)
        running = stage < n_stages
        if not running.any():
            break
        idx = np.flatnonzero(running)
        s = stage[idx]
        d = (u[idx] < p_one[s, k - 1]).astype(np.int64)
        num = lr[s, k - 1, d, 0]
        den = lr[s, k - 1, d, 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            step_ratio = np.where(den == 0, np.inf, num / np.where(den == 0, 1.0, den))
            r = ratio[idx] * step_ratio
        # a zero ratio stays zero and an infinite one infinite
        r = np.where(ratio[idx] == 0, 0.0, r)
        ratio[idx] = r
        # cascade through every stage the new ratio already lies outside of
        while idx.size:
            s = stage[idx]
            low = r <= eta0[s]
            high = r >= eta1[s]
            out = low | high
            if not out.any():
                break
            hit = idx[out]
            stop_k[s[out], hit] = k
            stop_d[s[out], hit] = high[out].astype(np.int64)
            stage[hit] += 1
            keep = stage[hit] < n_stages
            idx, r = hit[keep], r[out][keep]

    left = np.flatnonzero(stage < n_stages)
    if left.size:
        mids = np.sqrt(eta0 * eta1)
        decision = (ratio[left] >= mids[stage[left]]).astype(np.int64)
        for s in range(n_stages):
            sel = stage[left] <= s
            stop_d[s, left[sel]] = decision[sel]

    per_stage = []
    ks = np.arange(1, n + 2)
    for s in range(n_stages):
        low = np.bincount(stop_k[s][stop_d[s] == 0] - 1, minlength=n + 1) / trials
        high = np.bincount(stop_k[s][stop_d[s] == 1] - 1, minlength=n + 1) / trials
        cum = np.cumsum(high)
        kk = stop_k[s].astype(float)
        per_stage.append(
            MonteCarloStage(
                stop_low=low,
                stop_high=high,
                stop_low_se=_binomial_se(low, trials),
                stop_high_se=_binomial_se(high, trials),
                detect_cum=cum,
                detect_cum_se=_binomial_se(np.clip(cum, 0.0, 1.0), trials),
                expected_k=float(np.dot(ks, low + high)),
                expected_k_se=float(kk.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0,
            )
        )
    return MonteCarloReport(h, trials, seed, "numpy.random.PCG64", per_stage)


def brute_force_network(
    net: FusionNetwork, sensor_models: Mapping[str, ConfusionMatrix] | None = None
) -> ConfusionMatrix:
    """P(D=.|H) by enumerating every joint sensor outcome.

    Fusion-center outputs given the sensor outcomes are carried as a joint
    distribution, so majority ties and shared ancestry are handled exactly.
    Neyman-Pearson and Bayes tensors are built from parent marginals that
    this function computes itself.
    """
    report = validate_network(net)
    if not report.ok:
        raise InvalidNetworkError(report)
    sensors = net.ids(VertexKind.SENSOR)
    if len(sensors) > MAX_BRUTE_SENSORS:
        raise OracleTooLarge(f"{len(sensors)} sensors exceed the brute-force limit of {MAX_BRUTE_SENSORS}")
    m = net.m
    models = {}
    for s in sensors:
        model = (sensor_models or {}).get(s, net.vertex(s).model)
        if model is None:
            raise ValueError(f"no model for sensor {s!r}")
        models[s] = model
    order = fusion_order(net)
    tensors = {}

    def joint(upto: list[str]) -> dict[tuple, np.ndarray]:
        """Map (sensor outcomes + center outputs for ``upto``) -> P(. | H) vector."""
        out: dict[tuple, np.ndarray] = {}
        for outcome in itertools.product(range(m), repeat=len(sensors)):
            value = dict(zip(sensors, outcome))
            base = np.ones(m)
            for s, o in value.items():
                base = base * models[s].entries[o]
            branches = [((), 1.0, value)]
            for c in upto:
                nxt = []
                for key, weight, val in branches:
                    combo = tuple(val[p] for p in net.parents(c))
                    dist = tensors[c].table[combo]
                    for f in range(m):
                        if dist[f] > 0:
                            nxt.append((key + (f,), weight * dist[f], {**val, c: f}))
                branches = nxt
            for key, weight, _ in branches:
                full = outcome + key
                out[full] = out.get(full, 0.0) + weight * base
        return out

    def marginal(vid: str, done: list[str]) -> ConfusionMatrix:
        if net.kind(vid) is VertexKind.SENSOR:
            return models[vid]
        pos = len(sensors) + done.index(vid)
        acc = np.zeros((m, m))
        for key, prob in joint(done).items():
            acc[key[pos]] += prob
        return ConfusionMatrix(acc)

    done: list[str] = []
    for c in order:
        parents = [marginal(p, done) for p in net.parents(c)]
        tensors[c] = build_rule(net.vertex(c).rule, parents)
        done.append(c)
    final = next(c for c in order if not net.children(c))
    return marginal(final, done)
