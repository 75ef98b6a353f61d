import io
import json

import pytest

from randes.base.collection import CompleteCollection
from randes.base.penalty import CompletePenalty
from randes.base.selector import select
from randes.base.types import Model
from randes.cli.report import format_audit, format_csv, format_json, format_selection, format_verification, write_report
from randes.simulation.experiment import EstimatorSummary, ExperimentReport, Metric
from randes.simulation.verify import Cell, VerificationReport

GOLDEN_CSV = """\
# seed: 7
# generator: numpy-test/PCG64
# oracle_model: {1,2} oracle_risk: 0.5
estimator,n,metric,value,ci_half_width,reps,seed
K=1.1,30,risk_ratio,1.5,0.25,10,7
K=1.1,30,power,0.75,0.125,10,7
K=1.1,30,fdr,0.0,0.0,10,7
lasso,30,risk_ratio,6.6,0.2,10,7
lasso,30,power,1.0,0.0,10,7
lasso,30,fdr,0.1,0.05,10,7
"""


@pytest.fixture
def report():
    return ExperimentReport(
        estimators=[
            EstimatorSummary(
                estimator="K=1.1",
                n=30,
                risk_ratio=Metric(value=1.5, ci_half_width=0.25),
                power=Metric(value=0.75, ci_half_width=0.125),
                fdr=Metric(value=0.0, ci_half_width=0.0),
            ),
            EstimatorSummary(
                estimator="lasso",
                n=30,
                risk_ratio=Metric(value=6.6, ci_half_width=0.2),
                power=Metric(value=1.0, ci_half_width=0.0),
                fdr=Metric(value=0.1, ci_half_width=0.05),
            ),
        ],
        replications=10,
        seed=7,
        generator_version="numpy-test/PCG64",
        oracle_risk=0.5,
        oracle_model=Model(indices="1,2"),
    )


def test_format_csv(report):
    assert format_csv(report) == GOLDEN_CSV


def test_format_json(report):
    document = json.loads(format_json(report))
    assert document["seed"] == 7
    assert document["generator_version"] == "numpy-test/PCG64"
    assert document["oracle_model"] == [1, 2]
    assert document["oracle_risk"] == 0.5
    assert len(document["rows"]) == 6
    assert document["rows"][5] == {
        "estimator": "lasso",
        "n": 30,
        "metric": "fdr",
        "value": 0.1,
        "ci_half_width": 0.05,
        "reps": 10,
        "seed": 7,
    }


def test_write_report(report, tmp_path):
    write_report(report, tmp_path / "out.json", "json")
    assert json.loads((tmp_path / "out.json").read_text())["seed"] == 7
    stream = io.StringIO()
    write_report(report, None, "csv", stream=stream)
    assert stream.getvalue() == GOLDEN_CSV


def test_format_verification():
    report = VerificationReport(
        suite="concentration",
        cells=[
            Cell(name="chi2_lower(d=5, x=1.0)", observed=0.25, expected=0.3679, tolerance=0.01, passed=True),
            Cell(name="skipped one", observed=float("nan"), expected=1e-5, tolerance=0.0, passed=True, asserted=False),
            Cell(name="bad", observed=0.5, expected=0.1, tolerance=0.01, passed=False, note="too many"),
        ],
    )
    lines = format_verification(report).splitlines()
    assert lines[0] == "PASS  chi2_lower(d=5, x=1.0): observed=0.25 expected=0.3679 tolerance=0.01"
    assert lines[1].startswith("INFO  skipped one: observed=nan")
    assert lines[2].endswith("(too many)")
    assert lines[2].startswith("FAIL  bad")
    assert lines[3] == "concentration: failed, 1/2 asserted cells pass"


def test_format_selection_and_audit(noiseless_data):
    result = select(noiseless_data, CompleteCollection(p=8, dmax=2), CompletePenalty(K=1.1))
    lines = format_selection(result).splitlines()
    assert lines[0] == "model: 1,2"
    assert lines[1].startswith("theta[1] = ")
    assert float(lines[1].split(" = ")[1]) == pytest.approx(1.5)
    assert float(lines[2].split(" = ")[1]) == pytest.approx(-2.0)
    assert lines[3].startswith("criterion: ")
    assert len(lines) == 4

    audit = format_audit(result).splitlines()
    assert audit[0] == "model,dim,criterion"
    assert audit[1].startswith(",0,")
    assert audit[2].startswith("1,1,")
    assert len(audit) == 1 + 1 + 8 + 28
