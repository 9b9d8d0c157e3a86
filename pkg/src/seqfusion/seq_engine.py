"""Exact statistics of a multi-stage truncated Wald sequential test.

The test watches the running likelihood ratio of binary fused decisions.
While the ratio stays inside stage ``s``'s open interval ``(eta0, eta1)`` the
stage keeps sampling with its own per-time decision matrix; once it leaves,
the accumulated evidence is handed to stage ``s + 1``, whose interval is at
least as wide. At time ``N + 1`` every path still running is forced to
decide by comparing its ratio with the geometric midpoint of its current
stage's thresholds.

Instead of enumerating all ``2**N`` decision sequences, the engine keeps a
frontier of live path likelihood pairs ``(w0, w1)`` per stage, splits each
pair on the next decision, and removes pairs once they cross a threshold.
Pairs sharing a ratio evolve identically from then on, so they can be merged
("coalesced") without changing any reported probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from seqfusion.confusion import ConfusionMatrix

Coalesce = str | float | None
"""``"exact"``, ``"off"``/``None``, or a relative ratio tolerance."""


@dataclass(frozen=True)
class TargetOperatingPoint:
    pf_star: float
    pd_star: float

    def __post_init__(self) -> None:
        if not 0.0 < self.pf_star < self.pd_star < 1.0:
            raise ValueError(
                f"target operating point needs 0 < pf* < pd* < 1, got pf*={self.pf_star}, pd*={self.pd_star}"
            )

    @property
    def pd_bound(self) -> float:
        """Lower bound on detection at the mean stopping time: 1 - (1-pd*)/(1-pf*)."""
        return 1.0 - (1.0 - self.pd_star) / (1.0 - self.pf_star)

    @property
    def pf_bound(self) -> float:
        """Upper bound on false alarm at the mean stopping time: pf*/pd*."""
        return self.pf_star / self.pd_star


@dataclass(frozen=True)
class Thresholds:
    eta0: float
    eta1: float

    def __post_init__(self) -> None:
        if not 0.0 < self.eta0 < 1.0 < self.eta1 or not math.isfinite(self.eta1):
            raise ValueError(f"thresholds need 0 < eta0 < 1 < eta1, got ({self.eta0}, {self.eta1})")

    @property
    def midpoint(self) -> float:
        return math.sqrt(self.eta0 * self.eta1)


def wald_thresholds(target: TargetOperatingPoint | tuple[float, float]) -> Thresholds:
    """Wald's approximate thresholds for a target ``(pf*, pd*)``."""
    if not isinstance(target, TargetOperatingPoint):
        target = TargetOperatingPoint(*target)
    return Thresholds(
        eta0=(1.0 - target.pd_star) / (1.0 - target.pf_star),
        eta1=target.pd_star / target.pf_star,
    )


@dataclass(frozen=True)
class StageModel:
    steps: tuple[ConfusionMatrix, ...]
    thresholds: Thresholds

    def __post_init__(self) -> None:
        steps = tuple(self.steps)
        if any(s.m != 2 for s in steps):
            raise ValueError("sequential stages take binary (2x2) decision matrices")
        object.__setattr__(self, "steps", steps)

    @property
    def horizon(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class MultiStageTest:
    stages: tuple[StageModel, ...]

    def __post_init__(self) -> None:
        stages = tuple(self.stages)
        object.__setattr__(self, "stages", stages)
        if not stages:
            raise ValueError("a test needs at least one stage")
        n = stages[0].horizon
        if n == 0:
            raise ValueError("horizon N must be at least 1")
        if any(s.horizon != n for s in stages):
            raise ValueError("all stages must share the same horizon")
        for i, (a, b) in enumerate(zip(stages, stages[1:])):
            if b.thresholds.eta0 > a.thresholds.eta0 or b.thresholds.eta1 < a.thresholds.eta1:
                raise ValueError(
                    f"stage {i + 2} thresholds {b.thresholds} must nest outside stage {i + 1} "
                    f"thresholds {a.thresholds} (eta0' <= eta0 and eta1' >= eta1)"
                )

    @property
    def horizon(self) -> int:
        return self.stages[0].horizon

    @classmethod
    def of(cls, *stages: tuple[Sequence[ConfusionMatrix], Thresholds]) -> MultiStageTest:
        return cls(tuple(StageModel(tuple(steps), th) for steps, th in stages))


@dataclass(frozen=True)
class PathAtom:
    """A bundle of ``count`` sample paths sharing one likelihood ratio."""

    w0: float
    w1: float
    count: int = 1

    @property
    def ratio(self) -> float:
        return math.inf if self.w0 == 0 else self.w1 / self.w0


def _count_dtype(horizon: int):
    # raw path counts reach 2**N
    return np.int64 if horizon < 62 else object


@dataclass(frozen=True, eq=False)
class AtomSet:
    """Column storage for a sequence of path atoms."""

    w0: np.ndarray
    w1: np.ndarray
    count: np.ndarray

    @classmethod
    def empty(cls, count_dtype=np.int64) -> AtomSet:
        return cls(np.empty(0), np.empty(0), np.empty(0, dtype=count_dtype))

    @classmethod
    def from_atoms(cls, atoms: Iterable[PathAtom]) -> AtomSet:
        atoms = list(atoms)
        return cls(
            np.array([a.w0 for a in atoms], dtype=float),
            np.array([a.w1 for a in atoms], dtype=float),
            np.array([a.count for a in atoms], dtype=np.int64),
        )

    def atoms(self) -> list[PathAtom]:
        return [PathAtom(float(a), float(b), int(c)) for a, b, c in zip(self.w0, self.w1, self.count)]

    def __len__(self) -> int:
        return len(self.w0)

    def ratios(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.w0 == 0, np.inf, self.w1 / np.where(self.w0 == 0, 1.0, self.w0))

    def mass(self) -> tuple[float, float]:
        return float(self.w0.sum()), float(self.w1.sum())

    def total_count(self) -> int:
        return int(self.count.sum())

    def select(self, mask: np.ndarray) -> AtomSet:
        return AtomSet(self.w0[mask], self.w1[mask], self.count[mask])

    def concat(self, other: AtomSet) -> AtomSet:
        if not len(other):
            return self
        if not len(self):
            return other
        return AtomSet(
            np.concatenate([self.w0, other.w0]),
            np.concatenate([self.w1, other.w1]),
            np.concatenate([self.count, other.count]),
        )


@dataclass(frozen=True, eq=False)
class Frontier(AtomSet):
    """Live atoms of one stage; all ratios strictly inside its thresholds."""

    stage_index: int = 0

    @classmethod
    def seed(cls, stage_index: int = 0, count_dtype=np.int64) -> Frontier:
        return cls(np.ones(1), np.ones(1), np.ones(1, dtype=count_dtype), stage_index)

    @classmethod
    def wrap(cls, atoms: AtomSet, stage_index: int) -> Frontier:
        return cls(atoms.w0, atoms.w1, atoms.count, stage_index)


@dataclass(frozen=True, eq=False)
class Advanced:
    alive: Frontier
    escaped_low: AtomSet
    escaped_high: AtomSet


def classify(atoms: AtomSet, thresholds: Thresholds) -> tuple[np.ndarray, np.ndarray]:
    """Masks of atoms at or below eta0 and at or above eta1.

    Cross-multiplied so that ``w0 == 0`` means an infinite ratio.
    """
    low = atoms.w1 <= thresholds.eta0 * atoms.w0
    high = atoms.w1 >= thresholds.eta1 * atoms.w0
    return low, high & ~low


def _split(atoms: AtomSet, thresholds: Thresholds, stage_index: int) -> Advanced:
    low, high = classify(atoms, thresholds)
    inside = ~(low | high)
    return Advanced(Frontier.wrap(atoms.select(inside), stage_index), atoms.select(low), atoms.select(high))


def extend(atoms: AtomSet, step: ConfusionMatrix) -> AtomSet:
    """Children of every atom for decisions 0 and 1, zero-mass children dropped.

    Children of one atom stay adjacent, in atom insertion order.
    """
    e = step.entries
    w0 = np.stack([atoms.w0 * e[0, 0], atoms.w0 * e[1, 0]], axis=1).ravel()
    w1 = np.stack([atoms.w1 * e[0, 1], atoms.w1 * e[1, 1]], axis=1).ravel()
    count = np.repeat(atoms.count, 2)
    keep = (w0 > 0) | (w1 > 0)
    return AtomSet(w0[keep], w1[keep], count[keep])


def advance(frontier: Frontier, step: ConfusionMatrix, thresholds: Thresholds) -> Advanced:
    """One time step: split every live atom and sort children by threshold crossing."""
    return _split(extend(frontier, step), thresholds, frontier.stage_index)


def coalesce(atoms: AtomSet, mode: Coalesce = "exact") -> AtomSet:
    """Merge atoms with equal (or, for a float ``mode``, nearby) ratios.

    Merging adds ``w0``, ``w1`` and ``count`` componentwise. Output atoms are
    ordered by ascending ratio.
    """
    mode = _parse_mode(mode)
    if mode is None or len(atoms) < 2:
        return atoms
    ratios = atoms.ratios()
    if mode == 0.0:
        keys, group = np.unique(ratios, return_inverse=True)
        n_groups = len(keys)
    else:
        order = np.argsort(ratios, kind="stable")
        r = ratios[order]
        starts = [0]
        anchor = r[0]
        for i in range(1, len(r)):
            same = r[i] == anchor or (
                math.isfinite(anchor) and abs(r[i] - anchor) <= mode * abs(anchor)
            )
            if not same:
                starts.append(i)
                anchor = r[i]
        labels = np.zeros(len(r), dtype=np.intp)
        labels[starts[1:]] = 1
        labels = np.cumsum(labels)
        group = np.empty_like(labels)
        group[order] = labels
        n_groups = len(starts)
    w0 = np.bincount(group, weights=atoms.w0, minlength=n_groups)
    w1 = np.bincount(group, weights=atoms.w1, minlength=n_groups)
    if atoms.count.dtype == object:
        count = np.zeros(n_groups, dtype=object)
        for g, c in zip(group, atoms.count):
            count[g] += c
    else:
        count = np.zeros(n_groups, dtype=np.int64)
        np.add.at(count, group, atoms.count)
    merged = AtomSet(w0, w1, count)
    if isinstance(atoms, Frontier):
        return Frontier.wrap(merged, atoms.stage_index)
    return merged


def _parse_mode(mode: Coalesce) -> float | None:
    """``None`` for no coalescing, ``0.0`` for exact, else the tolerance."""
    if mode is None or mode == "off" or mode is False:
        return None
    if mode == "exact":
        return 0.0
    if isinstance(mode, str):
        if mode.startswith("tol="):
            mode = mode[4:]
        try:
            mode = float(mode)
        except ValueError:
            raise ValueError(f"unknown coalesce mode {mode!r}") from None
    tol = float(mode)
    if not tol >= 0:
        raise ValueError(f"coalesce tolerance must be non-negative, got {tol}")
    return tol


@dataclass
class StageReport:
    """Exact stopping statistics of one stage.

    Arrays are indexed by ``k - 1`` for ``k = 1 .. N + 1``; the last slot holds
    the forced decisions. ``stop_low[h]`` / ``stop_high[h]`` are the
    unconditional probabilities under ``H = h`` that this stage's stopping
    time is ``k`` with a low / high decision.
    """

    thresholds: Thresholds
    stop_low: np.ndarray
    stop_high: np.ndarray
    alive_count: np.ndarray
    alive_atoms: np.ndarray
    alive_mass: np.ndarray

    @classmethod
    def zeros(cls, thresholds: Thresholds, horizon: int, count_dtype=np.int64) -> StageReport:
        return cls(
            thresholds,
            np.zeros((2, horizon + 1)),
            np.zeros((2, horizon + 1)),
            np.zeros(horizon, dtype=count_dtype),
            np.zeros(horizon, dtype=np.int64),
            np.zeros((2, horizon)),
        )

    @property
    def horizon(self) -> int:
        return self.stop_low.shape[1] - 1

    @property
    def k(self) -> np.ndarray:
        return np.arange(1, self.horizon + 2)

    @property
    def pmf(self) -> np.ndarray:
        """P(K = k | H = h), shape (2, N + 1)."""
        return self.stop_low + self.stop_high

    @property
    def pd_cum(self) -> np.ndarray:
        return np.cumsum(self.stop_high[1])

    @property
    def pf_cum(self) -> np.ndarray:
        return np.cumsum(self.stop_high[0])

    @property
    def expected_k(self) -> np.ndarray:
        """E(K | H = h) for h = 0, 1."""
        return np.array([expected_stopping_time(self, 0), expected_stopping_time(self, 1)])

    def record(self, k: int, low: AtomSet, high: AtomSet) -> None:
        self.stop_low[:, k - 1] += low.mass()
        self.stop_high[:, k - 1] += high.mass()


@dataclass
class MultiStageReport:
    per_stage: list[StageReport]
    count_alive_at_horizon: int
    growth_base: float = field(init=False)

    def __post_init__(self) -> None:
        self.growth_base = _growth(self.count_alive_at_horizon, self.horizon)

    @property
    def horizon(self) -> int:
        return self.per_stage[0].horizon

    @property
    def final(self) -> StageReport:
        return self.per_stage[-1]

    @property
    def pd_final(self) -> float:
        return float(self.final.pd_cum[-1])

    @property
    def pf_final(self) -> float:
        return float(self.final.pf_cum[-1])


def expected_stopping_time(report: StageReport, h: int) -> float:
    """sum_k k * P(K = k | H = h), including the forced slot k = N + 1."""
    return float(np.dot(report.k, report.pmf[h]))


def _growth(count: int, horizon: int) -> float:
    if count <= 0:
        return 1.0
    return float(math.exp(math.log(count) / horizon))


def growth_base(report: MultiStageReport, n: int | None = None) -> float:
    """Per-step growth of the surviving raw-path count: count(n) ** (1 / n)."""
    n = report.horizon if n is None else n
    if not 1 <= n <= report.horizon:
        raise ValueError(f"n must be in [1, {report.horizon}]")
    count = sum(int(s.alive_count[n - 1]) for s in report.per_stage)
    return _growth(count, n)


def run_multistage(test: MultiStageTest, coalesce_mode: Coalesce = "exact") -> MultiStageReport:
    """Propagate every stage's frontier through time ``1 .. N + 1``."""
    mode = _parse_mode(coalesce_mode)
    n = test.horizon
    n_stages = len(test.stages)
    cdt = _count_dtype(n)
    reports = [StageReport.zeros(s.thresholds, n, cdt) for s in test.stages]
    frontiers = [Frontier.seed(0, cdt)] + [Frontier.wrap(AtomSet.empty(cdt), s) for s in range(1, n_stages)]

    for k in range(1, n + 1):
        # every atom in stage s at the start of step k uses stage s's matrix
        stepped = [
            advance(frontiers[s], stage.steps[k - 1], stage.thresholds) for s, stage in enumerate(test.stages)
        ]
        incoming = AtomSet.empty(cdt)
        for s, stage in enumerate(test.stages):
            res = stepped[s]
            reports[s].record(k, res.escaped_low, res.escaped_high)
            alive = res.alive
            if len(incoming):
                # atoms handed over at k are re-checked against the wider thresholds, not stepped again
                entered = _split(incoming, stage.thresholds, s)
                reports[s].record(k, entered.escaped_low, entered.escaped_high)
                alive = Frontier.wrap(alive.concat(entered.alive), s)
                leaving = res.escaped_low.concat(res.escaped_high)
                leaving = leaving.concat(entered.escaped_low).concat(entered.escaped_high)
            else:
                leaving = res.escaped_low.concat(res.escaped_high)
            if mode is not None:
                alive = coalesce(alive, mode)
            frontiers[s] = alive
            incoming = leaving
            reports[s].alive_count[k - 1] = alive.total_count()
            reports[s].alive_atoms[k - 1] = len(alive)
            reports[s].alive_mass[:, k - 1] = alive.mass()

    # forced decisions: a leftover in stage s decides with stage s's midpoint,
    # which is also its decision for every later stage it never reached
    for s, stage in enumerate(test.stages):
        left = frontiers[s]
        if not len(left):
            continue
        high = left.w1 >= stage.thresholds.midpoint * left.w0
        low_set, high_set = left.select(~high), left.select(high)
        for later in reports[s:]:
            later.record(n + 1, low_set, high_set)

    alive_n = sum(int(r.alive_count[-1]) for r in reports)
    return MultiStageReport(reports, alive_n)


@dataclass(frozen=True)
class WaldBoundCheck:
    """Detection / false alarm at the mean stopping time against Wald's bounds."""

    k_detect: int
    pd_at_mean: float
    pd_bound: float
    k_false: int
    pf_at_mean: float
    pf_bound: float

    @property
    def pd_ok(self) -> bool:
        return self.pd_at_mean >= self.pd_bound

    @property
    def pf_ok(self) -> bool:
        return self.pf_at_mean <= self.pf_bound


def wald_bound_diagnostic(report: StageReport, target: TargetOperatingPoint | None = None) -> WaldBoundCheck:
    """Evaluate pd_cum under H=1 at ceil(E(K|H=1)) and pf_cum under H=0 at ceil(E(K|H=0)).

    Without ``target`` the bounds come from the thresholds, since
    ``1 - eta0`` and ``1 / eta1`` equal the bounds for Wald-derived thresholds.
    """
    if target is None:
        pd_bound = 1.0 - report.thresholds.eta0
        pf_bound = 1.0 / report.thresholds.eta1
    else:
        pd_bound, pf_bound = target.pd_bound, target.pf_bound
    last = report.horizon + 1
    k1 = min(max(math.ceil(expected_stopping_time(report, 1)), 1), last)
    k0 = min(max(math.ceil(expected_stopping_time(report, 0)), 1), last)
    return WaldBoundCheck(
        k_detect=k1,
        pd_at_mean=float(report.pd_cum[k1 - 1]),
        pd_bound=pd_bound,
        k_false=k0,
        pf_at_mean=float(report.pf_cum[k0 - 1]),
        pf_bound=pf_bound,
    )
