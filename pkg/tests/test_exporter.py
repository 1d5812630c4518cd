"""Tests for result documents and CSV exports."""
import json
import pytest
import sys
from pathlib import Path

import numpy as np
import pandas as pd

sys.path.insert(0, str(Path(__file__).parent.parent))

from weber.exceptions import InvalidInputError, ParseError
from weber.models import CompareConfig, SolverParams
from weber.services import exporter
from weber.services.analysis import brute_force_global, evaluate, local_certificate, natural_clustering
from weber.services.datasets import triangle, unit_square
from weber.services.gauge import GaugeSet
from weber.services.harness import RATIO_COLUMNS, compare
from weber.services.objective import objective_true
from weber.services.solver import solve

FAST = SolverParams(mu_f=1e-3, N=500)


@pytest.fixture
def solved():
    """A solved triangle instance and its report."""
    P = triangle()
    report = solve(P, [[0.1, 0.2], [0.4, 0.1]], FAST, variant='abdca-skip')
    return P, report


class TestDocuments:
    """Test building and validating result documents."""

    def test_solve_document(self, solved):
        """A solve document carries the instance summary and clustering."""
        P, report = solved
        doc = exporter.solve_document(P, report, FAST.to_dict(), natural_clustering(P, report.X))
        assert doc['command'] == 'solve'
        assert doc['version'] == exporter.FORMAT_VERSION
        assert doc['instance']['m'] == 3
        assert doc['iterations'] == report.total_iterations
        assert sorted(i for c in doc['clustering']['clusters'] for i in c) == [0, 1, 2]

    def test_json_round_trip_reproduces_value(self, solved, tmp_path):
        """Centers read back from JSON give the same objective to 1e-12."""
        P, report = solved
        doc = exporter.solve_document(P, report, FAST.to_dict(), natural_clustering(P, report.X))
        path = exporter.write_json(doc, tmp_path / 'out' / 'solve.json')
        loaded = exporter.load_result(path)
        assert objective_true(P, np.array(loaded['centers'])) == pytest.approx(doc['value'], abs=1e-12)

    def test_evaluate_document(self):
        """Evaluation fields survive into the document."""
        P = unit_square()
        X = [[0.5, 0.0], [0.5, 1.0]]
        doc = exporter.evaluate_document(P, X, evaluate(P, X))
        assert doc['value'] == pytest.approx(2.0)
        assert doc['g'] - doc['h'] == pytest.approx(2.0)

    def test_certificate_document_with_empty_cluster(self):
        """Centers attracting nothing give null residuals."""
        P = unit_square()
        X = [[0.5, 0.5], [50.0, 50.0]]
        doc = exporter.certificate_document(P, X, local_certificate(P, X))
        assert doc['per_center_residual'][1] is None

    def test_oracle_document(self):
        """Oracle documents hold the optimal centers and value."""
        P = unit_square(GaugeSet('linf'))
        X_star, value = brute_force_global(P)
        doc = exporter.oracle_document(P, X_star, value)
        assert doc['value'] == pytest.approx(1.5)
        assert len(doc['centers']) == 2

    def test_compare_document(self):
        """Compare documents list every run with its hash."""
        cfg = CompareConfig(runs=2, seed=0, params=FAST)
        P = triangle()
        doc = exporter.compare_document(P, compare(P, cfg), cfg)
        assert [run['run_index'] for run in doc['per_run']] == [0, 1]
        assert all(len(run['x0_hash']) == 16 for run in doc['per_run'])
        json.loads(exporter.dumps(doc))

    def test_schema_violation_names_field(self):
        """A broken document is rejected with its field path."""
        P = triangle()
        doc = exporter.oracle_document(P, [[0.5, 0.0], [0.0, 1.0]], 1.0)
        doc['value'] = 'one'
        with pytest.raises(InvalidInputError, match='value'):
            exporter.validate_document('oracle', doc)

    def test_unknown_kind(self):
        """Unknown document kinds are rejected."""
        with pytest.raises(InvalidInputError):
            exporter.validate_document('plot', {})

    def test_nan_refused(self):
        """dumps refuses non-finite numbers."""
        with pytest.raises(ValueError):
            exporter.dumps({'value': float('nan')})


class TestFiles:
    """Test trace and ratio CSV files."""

    def test_trace_rows_match_iterations(self, solved, tmp_path):
        """One CSV row per inner iteration, in column order."""
        _, report = solved
        path = exporter.write_trace_csv(report.trace, tmp_path / 'trace.csv')
        frame = pd.read_csv(path)
        assert list(frame.columns) == exporter.TRACE_COLUMNS
        assert len(frame) == report.total_iterations
        assert frame['f_value'].iloc[-1] == pytest.approx(report.trace[-1].f_value, rel=1e-15)

    def test_ratio_csv_append(self, tmp_path):
        """Appending writes the header once."""
        P = triangle()
        report = compare(P, CompareConfig(runs=2, seed=0, params=FAST))
        path = tmp_path / 'ratios.csv'
        exporter.write_ratio_csv(report, P, 'triangle', path)
        exporter.write_ratio_csv(report, P, 'triangle', path, append=True)
        frame = pd.read_csv(path)
        assert list(frame.columns) == RATIO_COLUMNS
        assert len(frame) == 6

    def test_load_missing_file(self, tmp_path):
        """A missing result file is a parse error."""
        with pytest.raises(ParseError):
            exporter.load_result(tmp_path / 'missing.json')

    def test_load_invalid_json(self, tmp_path):
        """Broken JSON reports its line."""
        path = tmp_path / 'bad.json'
        path.write_text('{\n  "command": \n')
        with pytest.raises(ParseError) as info:
            exporter.load_result(path)
        assert info.value.row is not None
