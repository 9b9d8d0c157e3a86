"""Scenario documents: loading, the linear-drift sensor model and end-to-end runs."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import jsonschema
import numpy as np

from seqfusion import scenarios
from seqfusion.confusion import ConfusionMatrix
from seqfusion.fusion_core import (
    FusionNetwork,
    InvalidNetworkError,
    NetworkStructureError,
    propagate,
    validate_network,
)
from seqfusion.fusion_rules import RuleSpec
from seqfusion.seq_engine import (
    MultiStageReport,
    MultiStageTest,
    StageModel,
    TargetOperatingPoint,
    Thresholds,
    run_multistage,
    wald_bound_diagnostic,
    wald_thresholds,
)

RANGE_TOL = 1e-12


class ScenarioError(ValueError):
    """A scenario document is malformed or describes an invalid configuration."""


@dataclass(frozen=True)
class DriftSensorSpec:
    """Sensor whose rates move linearly in time: pf = 0.5 - a - b k, pd = 0.5 + a + b k."""

    a: float
    b: float

    def rates(self, k: int) -> tuple[float, float]:
        shift = self.a + self.b * k
        return 0.5 - shift, 0.5 + shift


def drift_matrices(spec: DriftSensorSpec, n: int) -> list[ConfusionMatrix]:
    """Per-time matrices for ``k = 1 .. n``."""
    out = []
    for k in range(1, n + 1):
        pf, pd = spec.rates(k)
        if min(pf, pd) < -RANGE_TOL or max(pf, pd) > 1 + RANGE_TOL:
            raise ScenarioError(
                f"drift a={spec.a}, b={spec.b} leaves [0, 1] at k={k}: P_F={pf:.6g}, P_D={pd:.6g}"
            )
        out.append(ConfusionMatrix.from_rates(min(max(pf, 0.0), 1.0), min(max(pd, 0.0), 1.0)))
    return out


@dataclass(frozen=True)
class StageSpec:
    sensors: tuple[str, ...]
    network: FusionNetwork
    targets: TargetOperatingPoint

    @property
    def thresholds(self) -> Thresholds:
        return wald_thresholds(self.targets)


@dataclass(frozen=True)
class OutputOptions:
    directory: str | None = None
    coalesce: str = "exact"
    plots: bool = False


@dataclass(frozen=True)
class Scenario:
    name: str
    horizon: int
    sensors: Mapping[str, DriftSensorSpec | tuple[ConfusionMatrix, ...]]
    stages: tuple[StageSpec, ...]
    output: OutputOptions = field(default_factory=OutputOptions)

    def sensor_matrices(self, n: int | None = None) -> dict[str, list[ConfusionMatrix]]:
        n = self.horizon if n is None else n
        out = {}
        for sid, spec in self.sensors.items():
            if isinstance(spec, DriftSensorSpec):
                out[sid] = drift_matrices(spec, n)
            else:
                out[sid] = list(spec[:n])
        return out

    def truncated(self, n: int) -> Scenario:
        """The same scenario on the first ``min(n, horizon)`` time steps."""
        n = min(n, self.horizon)
        sensors = {
            sid: spec if isinstance(spec, DriftSensorSpec) else tuple(spec[:n])
            for sid, spec in self.sensors.items()
        }
        return replace(self, name=f"{self.name}-N{n}", horizon=n, sensors=sensors)

    def stage_steps(self) -> list[list[ConfusionMatrix]]:
        """Fused per-time decision matrix of every stage network."""
        per_time = self.sensor_matrices()
        steps = []
        for stage in self.stages:
            steps.append(
                [
                    propagate(stage.network, {s: per_time[s][k] for s in stage.sensors})
                    for k in range(self.horizon)
                ]
            )
        return steps

    def build_test(self) -> MultiStageTest:
        steps = self.stage_steps()
        try:
            return MultiStageTest(
                tuple(StageModel(tuple(st), stage.thresholds) for st, stage in zip(steps, self.stages))
            )
        except ValueError as exc:
            raise ScenarioError(str(exc)) from None


@lru_cache(maxsize=1)
def schema() -> dict:
    """The published JSON schema for scenario documents."""
    text = resources.files("seqfusion").joinpath("scenario_schema.json").read_text()
    return json.loads(text)


def _path(parts) -> str:
    return "/".join(str(p) for p in parts) or "<root>"


def _rule(doc: Mapping[str, Any]) -> RuleSpec:
    kwargs = {k: v for k, v in doc.items() if k != "type"}
    if "priors" in kwargs:
        kwargs["priors"] = tuple(kwargs["priors"])
    return RuleSpec(doc["type"], **kwargs)


def _stage_network(doc: Mapping[str, Any], where: str) -> FusionNetwork:
    sensors = list(doc["sensors"])
    centers_doc = doc.get("centers")
    if not centers_doc:
        if len(sensors) != 1:
            raise ScenarioError(f"{where}: a stage with several sensors needs fusion centers")
        # lone sensor: a one-parent "and" center passes its decision through
        centers_doc = [{"id": "D", "parents": sensors, "rule": {"type": "and"}}]
    try:
        centers = {c["id"]: (_rule(c["rule"]), list(c["parents"])) for c in centers_doc}
        cues = [(c["id"], s) for c in centers_doc for s in c.get("cues", ())]
        net = FusionNetwork.build(centers, sensors, cues=cues)
    except (NetworkStructureError, ValueError) as exc:
        raise ScenarioError(f"{where}/centers: {exc}") from None
    report = validate_network(net)
    if not report.ok:
        raise ScenarioError(f"{where}/centers: {InvalidNetworkError(report)}")
    return net


def load_scenario(text: str | Mapping[str, Any]) -> Scenario:
    """Parse and fully validate a scenario document (JSON text or loaded mapping)."""
    if isinstance(text, str):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"scenario is not valid JSON: {exc}") from None
    else:
        doc = text
    errors = sorted(jsonschema.Draft202012Validator(schema()).iter_errors(doc), key=lambda e: list(e.path))
    if errors:
        raise ScenarioError(
            "scenario schema violations:\n" + "\n".join(f"  at {_path(e.path)}: {e.message}" for e in errors)
        )

    n = doc["horizon"]
    sensors: dict[str, DriftSensorSpec | tuple[ConfusionMatrix, ...]] = {}
    for sid, sdoc in doc["sensors"].items():
        where = f"sensors/{sid}"
        if "drift" in sdoc:
            spec = DriftSensorSpec(float(sdoc["drift"]["a"]), float(sdoc["drift"]["b"]))
            try:
                drift_matrices(spec, n)
            except ScenarioError as exc:
                raise ScenarioError(f"{where}: {exc}") from None
            sensors[sid] = spec
            continue
        key = "rates" if "rates" in sdoc else "matrices"
        rows = sdoc[key]
        if len(rows) < n:
            raise ScenarioError(f"{where}/{key}: {len(rows)} entries, horizon needs {n}")
        try:
            if key == "rates":
                sensors[sid] = tuple(ConfusionMatrix.from_rates(pf, pd) for pf, pd in rows[:n])
            else:
                sensors[sid] = tuple(ConfusionMatrix(np.array(mat)) for mat in rows[:n])
        except ValueError as exc:
            raise ScenarioError(f"{where}/{key}: {exc}") from None

    stages = []
    for i, sdoc in enumerate(doc["stages"]):
        where = f"stages/{i}"
        missing = [s for s in sdoc["sensors"] if s not in sensors]
        if missing:
            raise ScenarioError(f"{where}/sensors: undefined sensors {missing}")
        try:
            targets = TargetOperatingPoint(sdoc["targets"]["pf"], sdoc["targets"]["pd"])
        except ValueError as exc:
            raise ScenarioError(f"{where}/targets: {exc}") from None
        stages.append(StageSpec(tuple(sdoc["sensors"]), _stage_network(sdoc, where), targets))

    for i, (a, b) in enumerate(zip(stages, stages[1:]), start=1):
        ta, tb = a.thresholds, b.thresholds
        if tb.eta0 > ta.eta0 or tb.eta1 < ta.eta1:
            raise ScenarioError(
                f"stages/{i}/targets: thresholds ({tb.eta0:.6g}, {tb.eta1:.6g}) do not nest outside "
                f"stage {i} thresholds ({ta.eta0:.6g}, {ta.eta1:.6g}); later stages require "
                "eta0' <= eta0 and eta1' >= eta1"
            )

    out = doc.get("output", {})
    return Scenario(
        name=doc.get("name", "scenario"),
        horizon=n,
        sensors=sensors,
        stages=tuple(stages),
        output=OutputOptions(out.get("directory"), out.get("coalesce", "exact"), bool(out.get("plots", False))),
    )


def load_scenario_file(path: str | Path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc.strerror}") from None
    return load_scenario(text)


def bundled(name: str) -> Scenario:
    """One of the scenarios shipped with the package, e.g. ``"approaching"``."""
    return load_scenario(scenarios.path(name).read_text())


def oscillation_count(pmf: np.ndarray, k_lo: int = 2, k_hi: int = 15) -> int:
    """Sign changes between successive differences of ``pmf`` over ``k_lo..k_hi``.

    ``pmf[k - 1]`` is the probability at time ``k``; zero differences are skipped.
    """
    values = np.asarray(pmf)[k_lo - 1 : k_hi]
    signs = np.sign(np.diff(values))
    signs = signs[signs != 0]
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


@dataclass
class ScenarioResult:
    scenario: Scenario
    test: MultiStageTest
    report: MultiStageReport
    summary: dict[str, Any]
    files: list[Path]


def summarize(scenario: Scenario, report: MultiStageReport, coalesce: str) -> dict[str, Any]:
    """Flat key/value digest of a run, in a fixed key order."""
    out: dict[str, Any] = {
        "scenario": scenario.name,
        "horizon": scenario.horizon,
        "stages": len(scenario.stages),
        "coalesce": coalesce,
    }
    for i, (stage, rep) in enumerate(zip(scenario.stages, report.per_stage), start=1):
        th = stage.thresholds
        diag = wald_bound_diagnostic(rep, stage.targets)
        p = f"stage{i}."
        out |= {
            p + "pf_star": stage.targets.pf_star,
            p + "pd_star": stage.targets.pd_star,
            p + "eta0": th.eta0,
            p + "eta1": th.eta1,
            p + "midpoint": th.midpoint,
            p + "expected_k_h0": float(rep.expected_k[0]),
            p + "expected_k_h1": float(rep.expected_k[1]),
            p + "pd_at_N1": float(rep.pd_cum[-1]),
            p + "pf_at_N1": float(rep.pf_cum[-1]),
            p + "pmf_sum_h0": float(rep.pmf[0].sum()),
            p + "pmf_sum_h1": float(rep.pmf[1].sum()),
            p + "oscillation_h1": oscillation_count(rep.pmf[1]),
            p + "wald_pd_bound": diag.pd_bound,
            p + "wald_pf_bound": diag.pf_bound,
            p + "wald_k_detect": diag.k_detect,
            p + "wald_pd_at_mean_k": diag.pd_at_mean,
            p + "wald_pd_bound_met": diag.pd_ok,
            p + "wald_k_false": diag.k_false,
            p + "wald_pf_at_mean_k": diag.pf_at_mean,
            p + "wald_pf_bound_met": diag.pf_ok,
        }
    out |= {
        "pd_final": report.pd_final,
        "pf_final": report.pf_final,
        "alive_paths_at_N": report.count_alive_at_horizon,
        "growth_base": report.growth_base,
    }
    return out


def run_scenario(
    scenario: Scenario,
    out_dir: str | Path | None = None,
    *,
    coalesce: str | None = None,
    plots: bool | None = None,
) -> ScenarioResult:
    """Fuse every time step, run the sequential engine and write the artifacts.

    With ``out_dir`` (or ``output.directory``) unset nothing is written.
    """
    from seqfusion import artifacts

    coalesce = scenario.output.coalesce if coalesce is None else coalesce
    plots = scenario.output.plots if plots is None else plots
    test = scenario.build_test()
    result = run_multistage(test, coalesce)
    summary = summarize(scenario, result, coalesce)
    files: list[Path] = []
    target = out_dir if out_dir is not None else scenario.output.directory
    if target is not None:
        files = artifacts.write_all(Path(target), scenario, result, summary, plots=plots)
    return ScenarioResult(scenario, test, result, summary, files)
