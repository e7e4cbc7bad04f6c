"""Scenario runners with verdicts, and the same through the ``dnlab`` command.

    dnlab experiment calibration --out runs/cal
    dnlab experiment cloaking --set rho_grid=[0.4,0.2] --out runs/cloak
"""
import tempfile

from dnlab.experiments import ExperimentConfig, run_experiment

cfg = ExperimentConfig.from_mapping("counterexample", {"alpha": 1.0, "fem_R": [0.9]})
report = run_experiment(cfg)
for line in report.summary_lines():
    print(line)

with tempfile.TemporaryDirectory() as out:
    cfg = ExperimentConfig.from_mapping("qc-invariance", {"levels": 3}, out=out)
    report = run_experiment(cfg)
    print("qc-invariance passed:", report.passed, " tables:", sorted(report.tables))
