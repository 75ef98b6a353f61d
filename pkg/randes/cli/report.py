"""Report files and terminal output.

The CSV schema is fixed: `estimator,n,metric,value,ci_half_width,reps,seed`, preceded by `#` comment lines carrying
the seed and the generator version. Floats are written with `repr`, the shortest string that reads back to the same
double, so identical runs give identical bytes on every platform.
"""
import csv
import io
import json
from pathlib import Path
from typing import IO, Dict, List, Optional, Union

import numpy as np

from ..base.selector import SelectionResult, argmin_position
from ..simulation.experiment import METRICS, ExperimentReport
from ..simulation.verify import VerificationReport

CSV_COLUMNS = ("estimator", "n", "metric", "value", "ci_half_width", "reps", "seed")


def _number(value: float) -> str:
    return repr(float(value))


def report_rows(report: ExperimentReport) -> List[Dict[str, Union[str, int, float]]]:
    """One row per estimator and metric, metrics in the order risk_ratio, power, fdr."""
    rows = []
    for summary in report.estimators:
        for metric in METRICS:
            value = getattr(summary, metric)
            rows.append(
                {
                    "estimator": summary.estimator,
                    "n": summary.n,
                    "metric": metric,
                    "value": value.value,
                    "ci_half_width": value.ci_half_width,
                    "reps": report.replications,
                    "seed": report.seed,
                }
            )
    return rows


def format_csv(report: ExperimentReport) -> str:
    buffer = io.StringIO()
    buffer.write(f"# seed: {report.seed}\n")
    buffer.write(f"# generator: {report.generator_version}\n")
    buffer.write(f"# oracle_model: {{{report.oracle_model}}} oracle_risk: {_number(report.oracle_risk)}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in report_rows(report):
        writer.writerow(
            [
                row["estimator"],
                row["n"],
                row["metric"],
                _number(row["value"]),
                _number(row["ci_half_width"]),
                row["reps"],
                row["seed"],
            ]
        )
    return buffer.getvalue()


def format_json(report: ExperimentReport) -> str:
    """Mirror of the CSV: the same rows and field names, with the header lines as top-level keys."""
    document = {
        "seed": report.seed,
        "generator_version": report.generator_version,
        "oracle_model": list(report.oracle_model.indices),
        "oracle_risk": report.oracle_risk,
        "rows": report_rows(report),
    }
    return json.dumps(document, indent=2) + "\n"


def write_report(report: ExperimentReport, path: Optional[Path], fmt: str = "csv", stream: Optional[IO] = None) -> None:
    """Write to `path`, or to `stream` when no path is given."""
    text = format_json(report) if fmt == "json" else format_csv(report)
    if path is None:
        stream.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def format_verification(report: VerificationReport) -> str:
    lines = []
    for cell in report.cells:
        if not cell.asserted:
            status = "INFO"
        else:
            status = "PASS" if cell.passed else "FAIL"
        line = (
            f"{status:4}  {cell.name}: observed={cell.observed:.6g} expected={cell.expected:.6g} "
            f"tolerance={cell.tolerance:.3g}"
        )
        if cell.note:
            line += f"  ({cell.note})"
        lines.append(line)
    asserted = sum(cell.asserted for cell in report.cells)
    failed = len(report.failures)
    verdict = "passed" if report.passed else "failed"
    lines.append(f"{report.suite}: {verdict}, {asserted - failed}/{asserted} asserted cells pass")
    return "\n".join(lines) + "\n"


def format_selection(result: SelectionResult) -> str:
    lines = [f"model: {result.chosen}"]
    for index in np.flatnonzero(result.estimate):
        lines.append(f"theta[{index + 1}] = {_number(result.estimate[index])}")
    lines.append(f"criterion: {_number(result.criterion_values[argmin_position(result.criterion_values)])}")
    return "\n".join(lines) + "\n"


def format_audit(result: SelectionResult) -> str:
    """CSV of every model with its criterion value, in enumeration order."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(("model", "dim", "criterion"))
    for m, value in result.audit():
        writer.writerow((str(m), m.dim, _number(value)))
    return buffer.getvalue()
