"""Bundled reference data: the 12-sequence property catalog and the
published per-cell run results, plus derivations of per-run files.

The cell table stores what the source tables print: per (sequence,
metric, speed, algorithm) an average error over successful runs (empty
when every run failed) and a failure count out of the run total. The
derived per-run files spread each cell over its runs: successful runs
carry the cell mean and zero loss, failed runs carry no error value and
full loss. No per-run variation is invented.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from importlib import resources

from .catalog import SequenceRecord, parse_catalog
from .metrics import RunResult, RunStatus
from .report import RunRecord, parse_records_csv

TABLE1 = "table1.csv"
TABLE2_CELLS = "table2_cells.csv"
TABLE2_RUNS = "table2_runs.csv"
TABLE2_RESULTS = "table2_results.csv"


@dataclass(frozen=True)
class CellRecord:
    """One printed result cell."""

    sequence: str
    metric: str  # "rmse" | "rpe"
    speed: str  # "slomo" | "normal"
    algorithm: str
    value: float | None
    failures: int
    runs: int


def read_data(name: str) -> str:
    return resources.files("vobench").joinpath("data").joinpath(name).read_text()


def load_table1() -> list[SequenceRecord]:
    return parse_catalog(read_data(TABLE1))


def load_table2_cells() -> list[CellRecord]:
    reader = csv.DictReader(io.StringIO(read_data(TABLE2_CELLS)))
    cells = []
    for row in reader:
        raw = (row["value"] or "").strip()
        cells.append(CellRecord(
            sequence=row["sequence"],
            metric=row["metric"],
            speed=row["speed"],
            algorithm=row["algorithm"],
            value=float(raw) if raw else None,
            failures=int(row["failures"]),
            runs=int(row["runs"]),
        ))
    return cells


def cell_run_results(cells, metric: str, speed: str, algorithm: str) -> list[RunResult]:
    """Column cells as per-sequence RunResults (for averaging checks)."""
    results = []
    for c in cells:
        if (c.metric, c.speed, c.algorithm) != (metric, speed, algorithm):
            continue
        if c.value is None:
            results.append(RunResult(
                rmse_m=None, rpe_mps=None, loss_rate=1.0,
                status=RunStatus.FAILURE, n_matched=0,
            ))
        else:
            results.append(RunResult(
                rmse_m=c.value if metric == "rmse" else None,
                rpe_mps=c.value if metric == "rpe" else None,
                loss_rate=0.0, status=RunStatus.SUCCESS, n_matched=0,
            ))
    return results


def derive_run_rows(cells) -> list[dict]:
    """Normal-speed cells spread into per-run observation rows.

    Successful runs get the cell value and zero loss; failed runs get no
    value and full loss. Run ids are dense, successes first.
    """
    rows = []
    for c in cells:
        if c.speed != "normal":
            continue
        successes = c.runs - c.failures
        if c.value is None and successes != 0:
            raise ValueError(f"cell {c} has no value but non-failed runs")
        for run_id in range(c.runs):
            success = run_id < successes
            rows.append({
                "sequence": c.sequence,
                "algorithm": c.algorithm,
                "run_id": run_id,
                "loss_rate": 0.0 if success else 1.0,
                "raw_err": c.value if success else None,
            })
    return rows


def derive_result_records(cells) -> list[RunRecord]:
    """All cells spread into per-run result records (both speeds)."""
    records = []
    for c in cells:
        successes = c.runs - c.failures
        for run_id in range(c.runs):
            success = run_id < successes
            value = c.value if success else None
            records.append(RunRecord(
                sequence=c.sequence,
                algorithm=c.algorithm,
                speed=c.speed,
                run_id=run_id,
                rmse_m=value if c.metric == "rmse" else None,
                rpe_mps=value if c.metric == "rpe" else None,
                loss_rate=0.0 if success else 1.0,
                status=RunStatus.SUCCESS if success else RunStatus.FAILURE,
            ))
    return records


def run_rows_to_csv(rows) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["sequence", "algorithm", "run_id", "loss_rate", "raw_err"])
    for r in rows:
        writer.writerow([
            r["sequence"], r["algorithm"], r["run_id"],
            repr(float(r["loss_rate"])),
            "" if r["raw_err"] is None else repr(float(r["raw_err"])),
        ])
    return out.getvalue()


def load_table2_runs() -> list[dict]:
    from .perfcluster import parse_observation_rows

    return parse_observation_rows(read_data(TABLE2_RUNS))


def load_table2_results() -> list[RunRecord]:
    return parse_records_csv(read_data(TABLE2_RESULTS))
