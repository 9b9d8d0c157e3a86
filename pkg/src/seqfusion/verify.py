"""Cross-checks of the exact engine against the oracles for one scenario."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from seqfusion.oracle import brute_force_multistage, monte_carlo_multistage
from seqfusion.scenario import Scenario
from seqfusion.seq_engine import MultiStageReport, run_multistage

EXACT_TOL = 1e-10
MC_SIGMAS = 3.0


@dataclass
class Check:
    name: str
    ok: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.ok else 'FAIL'}  {self.name}: {self.detail}"


@dataclass
class VerifyResult:
    checks: list[Check] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def lines(self) -> list[str]:
        return [c.line() for c in self.checks]


def report_deltas(a: MultiStageReport, b: MultiStageReport) -> dict[str, float]:
    """Largest absolute difference per reported quantity, over all stages."""
    out = {"stop_low": 0.0, "stop_high": 0.0, "alive_mass": 0.0, "alive_count": 0.0}
    for ra, rb in zip(a.per_stage, b.per_stage, strict=True):
        out["stop_low"] = max(out["stop_low"], float(np.abs(ra.stop_low - rb.stop_low).max()))
        out["stop_high"] = max(out["stop_high"], float(np.abs(ra.stop_high - rb.stop_high).max()))
        out["alive_mass"] = max(out["alive_mass"], float(np.abs(ra.alive_mass - rb.alive_mass).max()))
        out["alive_count"] = max(
            out["alive_count"], float(np.abs(ra.alive_count.astype(float) - rb.alive_count.astype(float)).max())
        )
    return out


def verify_scenario(
    scenario: Scenario,
    *,
    max_horizon: int = 12,
    mc_trials: int | None = None,
    seed: int = 0,
    coalesce: str = "exact",
) -> VerifyResult:
    """Brute-force check on a down-scaled horizon, optional Monte Carlo check at full horizon."""
    result = VerifyResult()
    small = scenario.truncated(max_horizon)
    test = small.build_test()
    deltas = report_deltas(run_multistage(test, coalesce), brute_force_multistage(test))
    for name, d in deltas.items():
        tol = 0.0 if name == "alive_count" else EXACT_TOL
        result.checks.append(
            Check(f"brute force N={small.horizon} {name}", d <= tol, f"max |delta| = {d:.3g} (tol {tol:g})")
        )

    if mc_trials:
        test = scenario.build_test()
        exact = run_multistage(test, coalesce)
        for h in (0, 1):
            mc = monte_carlo_multistage(test, h, mc_trials, seed)
            final_exact = exact.pd_final if h else exact.pf_final
            name = "P_D final" if h else "P_F final"
            result.checks.append(_mc_check(f"MC h={h} {name}", mc.detect_final, mc.detect_final_se, final_exact))
            for s, (est, rep) in enumerate(zip(mc.per_stage, exact.per_stage), start=1):
                result.checks.append(
                    _mc_check(f"MC h={h} E(K|H) stage {s}", est.expected_k, est.expected_k_se, rep.expected_k[h])
                )
    return result


def _mc_check(name: str, estimate: float, se: float, exact: float) -> Check:
    err = abs(estimate - exact)
    ok = err <= MC_SIGMAS * se if se > 0 else err == 0.0
    z = err / se if se > 0 else float("inf") if err else 0.0
    return Check(name, ok, f"estimate {estimate:.6g} +/- {se:.3g}, exact {exact:.6g}, |z| = {z:.2f}")
