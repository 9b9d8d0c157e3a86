"""The five hard-decision fusion rules and the tensor contraction that applies them.

A rule tensor maps every combination of parent decisions to a distribution
over the fused decision. ``table[s_1, ..., s_V, f]`` is
``P(F = f | S_1 = s_1, ..., S_V = s_V)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from seqfusion.confusion import COLUMN_TOL, ConfusionMatrix

# Slack on the false-alarm budget and on Bayes-risk ties, so that decimal
# inputs such as 0.01 + 0.09 == 0.1 behave as written.
BUDGET_SLACK = 1e-12
RISK_TIE_RTOL = 1e-12


class RuleKind(str, Enum):
    AND = "and"
    OR = "or"
    MAJORITY = "majority"
    NEYMAN_PEARSON = "neyman_pearson"
    BAYES = "bayes"


BINARY_ONLY = frozenset({RuleKind.AND, RuleKind.OR, RuleKind.NEYMAN_PEARSON})


@dataclass(frozen=True)
class RuleSpec:
    """User-facing description of a fusion rule.

    ``pf_target`` is only read by Neyman-Pearson; the costs and ``priors``
    only by Bayes. ``priors=None`` means uniform.
    """

    kind: RuleKind
    pf_target: float | None = None
    c_false: float = 1.0
    c_miss: float = 1.0
    c_cross: float = 1.0
    priors: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", RuleKind(self.kind))
        if self.kind is RuleKind.NEYMAN_PEARSON:
            if self.pf_target is None or not 0.0 < self.pf_target < 1.0:
                raise ValueError(f"Neyman-Pearson rule needs pf_target in (0, 1), got {self.pf_target}")
        if self.kind is RuleKind.BAYES:
            if min(self.c_false, self.c_miss, self.c_cross) < 0:
                raise ValueError("Bayes costs must be non-negative")
            if self.priors is not None:
                p = tuple(float(x) for x in self.priors)
                if min(p) < 0 or max(p) > 1 or abs(sum(p) - 1.0) > COLUMN_TOL:
                    raise ValueError(f"priors must be a probability vector, got {p}")
                object.__setattr__(self, "priors", p)

    @classmethod
    def and_(cls) -> RuleSpec:
        return cls(RuleKind.AND)

    @classmethod
    def or_(cls) -> RuleSpec:
        return cls(RuleKind.OR)

    @classmethod
    def majority(cls) -> RuleSpec:
        return cls(RuleKind.MAJORITY)

    @classmethod
    def neyman_pearson(cls, pf_target: float) -> RuleSpec:
        return cls(RuleKind.NEYMAN_PEARSON, pf_target=pf_target)

    @classmethod
    def bayes(
        cls,
        c_false: float = 1.0,
        c_miss: float = 1.0,
        c_cross: float = 1.0,
        priors: Sequence[float] | None = None,
    ) -> RuleSpec:
        return cls(
            RuleKind.BAYES,
            c_false=c_false,
            c_miss=c_miss,
            c_cross=c_cross,
            priors=None if priors is None else tuple(priors),
        )

    def check_size(self, m: int) -> None:
        if self.kind in BINARY_ONLY and m != 2:
            raise ValueError(f"{self.kind.value} rule requires m = 2, got m = {m}")
        if self.kind is RuleKind.BAYES and self.priors is not None and len(self.priors) != m:
            raise ValueError(f"Bayes priors have length {len(self.priors)}, expected {m}")

    def resolved_priors(self, m: int) -> np.ndarray:
        if self.priors is None:
            return np.full(m, 1.0 / m)
        return np.asarray(self.priors, dtype=float)


@dataclass(frozen=True, eq=False)
class RuleTensor:
    """Conditional table of the fused decision given parent decisions.

    ``degenerate`` flags a Neyman-Pearson rule whose budget admitted no
    parent combination (the rule always answers 0).
    """

    table: np.ndarray
    degenerate: bool = False

    def __post_init__(self) -> None:
        t = np.array(self.table, dtype=float)
        m = t.shape[-1]
        if t.ndim < 2 or any(d != m for d in t.shape):
            raise ValueError(f"rule table must have shape (m,)*V + (m,), got {t.shape}")
        if np.any(t < 0) or np.any(np.abs(t.sum(axis=-1) - 1.0) > COLUMN_TOL):
            raise ValueError("every rule row must be a probability distribution")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    @property
    def arity(self) -> int:
        return self.table.ndim - 1

    @property
    def m(self) -> int:
        return self.table.shape[-1]

    def distribution(self, combo: Sequence[int]) -> np.ndarray:
        return self.table[tuple(combo)]

    @property
    def is_deterministic(self) -> bool:
        return bool(np.all((self.table == 0.0) | (self.table == 1.0)))

    def decision_map(self) -> dict[tuple[int, ...], int]:
        """Combo -> fused decision, for deterministic tensors."""
        if not self.is_deterministic:
            raise ValueError("decision_map is only defined for deterministic rules")
        return {combo: int(np.argmax(self.table[combo])) for combo in combos(self.arity, self.m)}


def combos(arity: int, m: int):
    """All parent-decision tuples in ascending lexicographic order."""
    return itertools.product(range(m), repeat=arity)


def _one_hot_table(arity: int, m: int, decide) -> np.ndarray:
    table = np.zeros((m,) * arity + (m,))
    for combo in combos(arity, m):
        table[combo + (decide(combo),)] = 1.0
    return table


def build_fixed_rule(spec: RuleSpec, arity: int, m: int = 2) -> RuleTensor:
    """Tensor for the and / or / majority rules, which ignore parent statistics."""
    if arity < 1:
        raise ValueError("a fusion center needs at least one parent")
    spec.check_size(m)
    if spec.kind is RuleKind.AND:
        return RuleTensor(_one_hot_table(arity, m, lambda c: int(all(s == 1 for s in c))))
    if spec.kind is RuleKind.OR:
        return RuleTensor(_one_hot_table(arity, m, lambda c: int(any(s != 0 for s in c))))
    if spec.kind is RuleKind.MAJORITY:
        table = np.zeros((m,) * arity + (m,))
        for combo in combos(arity, m):
            votes = np.bincount(combo, minlength=m)
            modes = np.flatnonzero(votes == votes.max())
            table[combo][modes] = 1.0 / len(modes)
        return RuleTensor(table)
    raise ValueError(f"{spec.kind.value} is not a fixed rule; use build_rule")


def _combo_masses(parents: Sequence[ConfusionMatrix]) -> tuple[list[tuple[int, ...]], np.ndarray]:
    """Per-combo likelihood under every hypothesis, rows in lexicographic order."""
    m = parents[0].m
    keys = list(combos(len(parents), m))
    masses = np.ones((len(keys), m))
    for row, combo in enumerate(keys):
        for n, s in enumerate(combo):
            masses[row] *= parents[n].entries[s]
    return keys, masses


def _check_parents(parents: Sequence[ConfusionMatrix]) -> int:
    if not parents:
        raise ValueError("a fusion center needs at least one parent")
    m = parents[0].m
    if any(p.m != m for p in parents):
        raise ValueError("parent matrices disagree on decision-space size")
    return m


def build_np_rule(parents: Sequence[ConfusionMatrix], pf_target: float) -> RuleTensor:
    """Deterministic Neyman-Pearson rule under a false-alarm budget.

    Parent combinations are ranked by likelihood ratio, highest first (ties by
    ascending tuple); the longest prefix whose cumulative H=0 mass fits in
    ``pf_target`` decides 1, everything else decides 0.
    """
    if not 0.0 < pf_target < 1.0:
        raise ValueError(f"pf_target must be in (0, 1), got {pf_target}")
    m = _check_parents(parents)
    if m != 2:
        raise ValueError("the Neyman-Pearson rule requires m = 2")
    keys, masses = _combo_masses(parents)

    def rank(i: int):
        h0, h1 = masses[i]
        if h0 == 0.0:
            # +inf ratio first; impossible combos (both zero) last
            lr = np.inf if h1 > 0 else -np.inf
        else:
            lr = h1 / h0
        return (-lr, keys[i])

    order = sorted(range(len(keys)), key=rank)
    table = np.zeros((2,) * len(parents) + (2,))
    for combo in keys:
        table[combo + (0,)] = 1.0
    spent = 0.0
    chosen = 0
    for i in order:
        spent += masses[i, 0]
        if spent > pf_target + BUDGET_SLACK:
            break
        table[keys[i]] = (0.0, 1.0)
        chosen += 1
    return RuleTensor(table, degenerate=chosen == 0)


def cost_matrix(m: int, c_false: float, c_miss: float, c_cross: float) -> np.ndarray:
    """``C[j, k]``: cost of deciding j when the truth is hypothesis k (0-based)."""
    c = np.full((m, m), float(c_cross))
    c[1:, 0] = c_false
    c[0, 1:] = c_miss
    np.fill_diagonal(c, 0.0)
    return c


def build_bayes_rule(parents: Sequence[ConfusionMatrix], spec: RuleSpec) -> RuleTensor:
    """Per-combination Bayes-risk minimizer; ties go to the lowest decision."""
    m = _check_parents(parents)
    spec.check_size(m)
    costs = cost_matrix(m, spec.c_false, spec.c_miss, spec.c_cross)
    priors = spec.resolved_priors(m)
    keys, masses = _combo_masses(parents)
    table = np.zeros((m,) * len(parents) + (m,))
    for combo, mass in zip(keys, masses):
        risk = costs @ (priors * mass)
        best = risk.min()
        j = int(np.flatnonzero(risk <= best + RISK_TIE_RTOL * abs(best))[0])
        table[combo + (j,)] = 1.0
    return RuleTensor(table)


def build_rule(spec: RuleSpec, parents: Sequence[ConfusionMatrix]) -> RuleTensor:
    """Build the tensor for any rule kind given the parents' matrices."""
    m = _check_parents(parents)
    spec.check_size(m)
    if spec.kind is RuleKind.NEYMAN_PEARSON:
        return build_np_rule(parents, spec.pf_target)
    if spec.kind is RuleKind.BAYES:
        return build_bayes_rule(parents, spec)
    return build_fixed_rule(spec, len(parents), m)


def fuse(tensor: RuleTensor, parents: Sequence[ConfusionMatrix]) -> ConfusionMatrix:
    """Marginalize a rule over conditionally independent parents.

    ``P(F=f|H=h) = sum_combo table[combo, f] * prod_n parents[n][combo_n, h]``,
    summed in lexicographic combo order.
    """
    m = _check_parents(parents)
    if tensor.arity != len(parents) or tensor.m != m:
        raise ValueError(
            f"tensor has arity {tensor.arity} and m = {tensor.m}, "
            f"got {len(parents)} parents with m = {m}"
        )
    out = np.zeros((m, m))
    for combo in combos(len(parents), m):
        weight = np.ones(m)
        for n, s in enumerate(combo):
            weight = weight * parents[n].entries[s]
        out += np.outer(tensor.table[combo], weight)
    return ConfusionMatrix(out)
