"""CSV, summary and chart files for a scenario run."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Any

from seqfusion.seq_engine import MultiStageReport
from seqfusion.svgplot import line_chart

CSV_COLUMNS = ("k", "stop_low_h0", "stop_high_h0", "stop_low_h1", "stop_high_h1", "pd_cum", "pf_cum")


def _num(x: float) -> str:
    return repr(float(x))


def atomic_write(path: Path, text: str) -> None:
    """Write through a temporary file in the same directory, then rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def stage_csv(report: MultiStageReport, stage: int) -> str:
    r = report.per_stage[stage]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    pd_cum, pf_cum = r.pd_cum, r.pf_cum
    for i, k in enumerate(r.k):
        w.writerow(
            [
                int(k),
                _num(r.stop_low[0, i]),
                _num(r.stop_high[0, i]),
                _num(r.stop_low[1, i]),
                _num(r.stop_high[1, i]),
                _num(pd_cum[i]),
                _num(pf_cum[i]),
            ]
        )
    return buf.getvalue()


def summary_json(summary: dict[str, Any]) -> str:
    return json.dumps(summary, indent=2) + "\n"


def write_all(out_dir: Path, scenario, report: MultiStageReport, summary: dict[str, Any], *, plots: bool) -> list[Path]:
    """Emit ``stage<i>.csv``, ``summary.json`` and optionally SVG charts."""
    files = []
    try:
        for i in range(len(report.per_stage)):
            path = out_dir / f"stage{i + 1}.csv"
            atomic_write(path, stage_csv(report, i))
            files.append(path)
        path = out_dir / "summary.json"
        atomic_write(path, summary_json(summary))
        files.append(path)
        if plots:
            for i, r in enumerate(report.per_stage, start=1):
                k = list(r.k)
                pmf = line_chart(
                    k,
                    {"P(K=k|H=0)": r.pmf[0], "P(K=k|H=1)": r.pmf[1]},
                    title=f"{scenario.name}: stage {i} stopping time",
                    xlabel="k",
                    ylabel="probability",
                )
                cum = line_chart(
                    k,
                    {"P_D (cumulative)": r.pd_cum, "P_F (cumulative)": r.pf_cum},
                    title=f"{scenario.name}: stage {i} detection / false alarm",
                    xlabel="k",
                    ylabel="probability",
                )
                for name, text in ((f"stage{i}_pmf.svg", pmf), (f"stage{i}_cumulative.svg", cum)):
                    atomic_write(out_dir / name, text)
                    files.append(out_dir / name)
    except OSError as exc:
        raise OSError(f"cannot write results under {out_dir}: {exc}") from exc
    return files
