"""Per-run result records and their aggregation into result tables.

Each record is one run of one algorithm on one sequence. A table covers
one (metric, speed) group: rows are sequences, columns algorithms, and
each cell averages the metric over that cell's successful runs, with a
failure count out of the total runs. All-failed cells render as a dash;
the lowest mean in each row gets the best marker. An averages row
(mean of the cell means, successful cells only) closes the table.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from pathlib import Path

from .errors import VobenchError
from .metrics import RunResult, RunStatus

RECORD_COLUMNS = (
    "sequence", "algorithm", "speed", "run_id",
    "rmse_m", "rpe_mps", "loss_rate", "status",
)

METRIC_FIELDS = {"rmse": "rmse_m", "rpe": "rpe_mps"}
METRIC_TITLES = {"rmse": "RMSE (m)", "rpe": "RPE (m/s)"}


@dataclass(frozen=True)
class RunRecord:
    sequence: str
    algorithm: str
    speed: str
    run_id: int
    rmse_m: float | None
    rpe_mps: float | None
    loss_rate: float | None
    status: RunStatus

    @classmethod
    def from_result(
        cls,
        result: RunResult,
        sequence: str,
        algorithm: str,
        speed: str = "normal",
        run_id: int = 0,
    ) -> "RunRecord":
        return cls(
            sequence=sequence,
            algorithm=algorithm,
            speed=speed,
            run_id=run_id,
            rmse_m=result.rmse_m,
            rpe_mps=result.rpe_mps,
            loss_rate=result.loss_rate,
            status=result.status,
        )

    def to_json(self) -> str:
        payload = asdict(self)
        payload["status"] = self.status.value
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def record_from_mapping(data: dict) -> RunRecord:
    def opt_float(value):
        if value is None or value == "":
            return None
        return float(value)

    return RunRecord(
        sequence=str(data["sequence"]),
        algorithm=str(data["algorithm"]),
        speed=str(data.get("speed", "normal")),
        run_id=int(data.get("run_id", 0)),
        rmse_m=opt_float(data.get("rmse_m")),
        rpe_mps=opt_float(data.get("rpe_mps")),
        loss_rate=opt_float(data.get("loss_rate")),
        status=RunStatus(str(data["status"]).lower()),
    )


def parse_records_csv(text: str) -> list[RunRecord]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or any(c not in reader.fieldnames for c in RECORD_COLUMNS):
        raise ValueError(f"record CSV needs columns {', '.join(RECORD_COLUMNS)}")
    return [record_from_mapping(row) for row in reader]


def write_records_csv(records) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(RECORD_COLUMNS)
    for r in records:
        writer.writerow([
            r.sequence, r.algorithm, r.speed, r.run_id,
            "" if r.rmse_m is None else repr(r.rmse_m),
            "" if r.rpe_mps is None else repr(r.rpe_mps),
            "" if r.loss_rate is None else repr(r.loss_rate),
            r.status.value,
        ])
    return out.getvalue()


def load_records(path) -> list[RunRecord]:
    """Load run records from a CSV/JSON file or a directory of them."""
    path = Path(path)
    records: list[RunRecord] = []
    if path.is_dir():
        files = sorted(path.glob("*.json")) + sorted(path.glob("*.csv"))
        if not files:
            raise FileNotFoundError(f"no record files in {path}")
        for f in files:
            records.extend(load_records(f))
    elif path.suffix == ".json":
        records.append(record_from_mapping(json.loads(path.read_text())))
    else:
        records.extend(parse_records_csv(path.read_text()))
    return records


@dataclass(frozen=True)
class Cell:
    mean: float | None
    failures: int
    runs: int
    best: bool = False


@dataclass(frozen=True)
class ReportTable:
    metric: str
    speed: str
    sequences: tuple[str, ...]
    algorithms: tuple[str, ...]
    cells: dict[tuple[str, str], Cell]
    averages: dict[str, float | None]


def build_tables(records) -> list[ReportTable]:
    """Group records into one table per (metric, speed), in appearance order."""
    records = list(records)
    if not records:
        raise VobenchError("no records to report")

    speeds = _in_order(r.speed for r in records)
    algorithms = _in_order(r.algorithm for r in records)
    tables = []
    for metric, field in METRIC_FIELDS.items():
        sequences = _in_order(
            r.sequence for r in records if getattr(r, field) is not None
        )
        if not sequences:
            continue
        for speed in speeds:
            group = [r for r in records if r.speed == speed and r.sequence in sequences]
            if not group:
                continue
            group_algorithms = tuple(
                a for a in algorithms if any(r.algorithm == a for r in group)
            )
            tables.append(_build_one(metric, field, speed, sequences, group_algorithms, group))
    return tables


def _in_order(items) -> tuple:
    seen = []
    for item in items:
        if item not in seen:
            seen.append(item)
    return tuple(seen)


def _build_one(metric, field, speed, sequences, algorithms, records) -> ReportTable:
    cells: dict[tuple[str, str], Cell] = {}
    for seq in sequences:
        row_cells = {}
        for alg in algorithms:
            runs = [r for r in records if r.sequence == seq and r.algorithm == alg]
            if not runs:
                continue
            failures = sum(1 for r in runs if r.status is RunStatus.FAILURE)
            values = [
                getattr(r, field)
                for r in runs
                if r.status is RunStatus.SUCCESS and getattr(r, field) is not None
            ]
            mean = sum(values) / len(values) if values else None
            row_cells[alg] = Cell(mean=mean, failures=failures, runs=len(runs))
        best_alg = None
        best_val = None
        for alg in algorithms:
            cell = row_cells.get(alg)
            if cell is not None and cell.mean is not None:
                if best_val is None or cell.mean < best_val:
                    best_val = cell.mean
                    best_alg = alg
        for alg, cell in row_cells.items():
            cells[(seq, alg)] = Cell(
                mean=cell.mean, failures=cell.failures, runs=cell.runs,
                best=(alg == best_alg),
            )

    averages: dict[str, float | None] = {}
    for alg in algorithms:
        means = [
            cells[(seq, alg)].mean
            for seq in sequences
            if (seq, alg) in cells and cells[(seq, alg)].mean is not None
        ]
        averages[alg] = sum(means) / len(means) if means else None
    return ReportTable(
        metric=metric, speed=speed, sequences=sequences,
        algorithms=algorithms, cells=cells, averages=averages,
    )


def _fmt(value: float | None) -> str:
    return "-" if value is None else f"{value:.3g}"


def render_text(tables) -> str:
    """Human-readable tables; * marks the best cell of each row."""
    blocks = []
    for table in tables:
        title = f"{METRIC_TITLES[table.metric]} — {table.speed}"
        header = ["sequence"] + list(table.algorithms)
        rows = [header]
        for seq in table.sequences:
            row = [seq]
            for alg in table.algorithms:
                cell = table.cells.get((seq, alg))
                if cell is None:
                    row.append("")
                    continue
                text = _fmt(cell.mean)
                if cell.failures:
                    text += f" [{cell.failures}/{cell.runs} fail]"
                if cell.best:
                    text = "*" + text
                row.append(text)
            rows.append(row)
        avg_row = ["Average"] + [_fmt(table.averages[a]) for a in table.algorithms]
        rows.append(avg_row)

        widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
        lines = [title]
        for i, row in enumerate(rows):
            lines.append("  ".join(cell.ljust(widths[c]) for c, cell in enumerate(row)).rstrip())
            if i == 0:
                lines.append("-" * (sum(widths) + 2 * (len(widths) - 1)))
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def write_report_csv(tables) -> str:
    """Long-format report: one row per cell plus per-table Average rows."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["metric", "speed", "sequence", "algorithm",
                     "mean", "failures", "runs", "best"])
    for table in tables:
        for seq in table.sequences:
            for alg in table.algorithms:
                cell = table.cells.get((seq, alg))
                if cell is None:
                    continue
                writer.writerow([
                    table.metric, table.speed, seq, alg,
                    "" if cell.mean is None else repr(cell.mean),
                    cell.failures, cell.runs, int(cell.best),
                ])
        for alg in table.algorithms:
            avg = table.averages[alg]
            writer.writerow([
                table.metric, table.speed, "Average", alg,
                "" if avg is None else repr(avg), "", "", "",
            ])
    return out.getvalue()
