"""Result documents for solve, evaluate, certify, oracle and compare.

Documents are plain dicts validated against JSON Schemas before they are
written. Floats go through json's repr, which round-trips float64 exactly;
CSV files are written with 17 significant digits.
"""
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import jsonschema
import numpy as np
import pandas as pd

from weber.config import get_logger
from weber.exceptions import InvalidInputError, ParseError
from weber.models import Certificate, Clustering, CompareConfig, CompareReport, IterationRecord, ProblemInstance, SolverReport
from weber.services.harness import RATIO_COLUMNS, ratio_rows

logger = get_logger()

FORMAT_VERSION = '1.0'
TRACE_COLUMNS = ['stage', 'iter', 'mu', 'tau', 'lambda_trial', 'lambda_accepted',
                 'backtracks', 'f_value', 'step_fro', 'skipped', 'wall_ns']

_number = {'type': 'number'}
_nullable_number = {'type': ['number', 'null']}
_matrix = {'type': 'array', 'items': {'type': 'array', 'items': _number, 'minItems': 1}, 'minItems': 1}
_index_sets = {'type': 'array', 'items': {'type': 'array', 'items': {'type': 'integer', 'minimum': 0}}}

INSTANCE_SCHEMA = {
    'type': 'object',
    'required': ['name', 'm', 'n', 'k', 'q', 'gauge', 'radius'],
    'properties': {
        'name': {'type': 'string'},
        'm': {'type': 'integer', 'minimum': 2},
        'n': {'type': 'integer', 'minimum': 1},
        'k': {'type': 'integer', 'minimum': 1},
        'q': {'type': 'integer', 'minimum': 0},
        'gauge': {'enum': ['euclidean-ball', 'l1-ball', 'linf-ball']},
        'radius': _number,
    },
}

CLUSTERING_SCHEMA = {
    'type': 'object',
    'required': ['clusters', 'attraction', 'level_sets'],
    'properties': {'clusters': _index_sets, 'attraction': _index_sets, 'level_sets': _index_sets},
}

_envelope = {
    'command': {'type': 'string'},
    'version': {'const': FORMAT_VERSION},
    'created_at': {'type': 'string'},
    'instance': INSTANCE_SCHEMA,
}

SCHEMAS: Dict[str, Dict[str, Any]] = {
    'solve': {
        'type': 'object',
        'required': ['command', 'instance', 'variant', 'params', 'centers', 'value', 'iterations', 'stages', 'clustering'],
        'properties': {
            **_envelope,
            'variant': {'enum': ['dca', 'abdca', 'abdca-skip']},
            'params': {'type': 'object'},
            'centers': _matrix,
            'value': _number,
            'iterations': {'type': 'integer', 'minimum': 0},
            'stages': {
                'type': 'array',
                'items': {
                    'type': 'object',
                    'required': ['index', 'mu', 'tau', 'iterations', 'converged', 'value'],
                },
            },
            'clustering': CLUSTERING_SCHEMA,
        },
    },
    'evaluate': {
        'type': 'object',
        'required': ['command', 'instance', 'centers', 'value', 'g', 'h', 'penalized', 'smoothed', 'clustering'],
        'properties': {
            **_envelope,
            'centers': _matrix,
            'value': _number, 'g': _number, 'h': _number,
            'penalized': _number, 'smoothed': _number, 'mu': _number, 'tau': _number,
            'clustering': CLUSTERING_SCHEMA,
        },
    },
    'certify': {
        'type': 'object',
        'required': ['command', 'instance', 'centers', 'status', 'is_singleton', 'per_center_residual', 'value'],
        'properties': {
            **_envelope,
            'centers': _matrix,
            'status': {'enum': ['local', 'not-local', 'inconclusive']},
            'is_local': {'type': ['boolean', 'null']},
            'is_singleton': {'type': 'array', 'items': {'type': 'boolean'}},
            'per_center_residual': {'type': 'array', 'items': _nullable_number},
            'local_values': {'type': 'array', 'items': _nullable_number},
            'single_source_values': {'type': 'array', 'items': _nullable_number},
            'ambiguous': {'type': 'array', 'items': {'type': 'integer'}},
            'value': _number,
            'tol': _number,
        },
    },
    'oracle': {
        'type': 'object',
        'required': ['command', 'instance', 'centers', 'value'],
        'properties': {**_envelope, 'centers': _matrix, 'value': _number},
    },
    'compare': {
        'type': 'object',
        'required': ['command', 'instance', 'runs', 'seed', 'variants', 'mean_iterations', 'iter_ratio',
                     'time_ratio', 'failed', 'valid', 'per_run'],
        'properties': {
            **_envelope,
            'runs': {'type': 'integer', 'minimum': 1},
            'seed': {'type': 'integer'},
            'variants': {'type': 'array', 'items': {'enum': ['dca', 'abdca', 'abdca-skip']}},
            'mean_iterations': {'type': 'object', 'additionalProperties': _nullable_number},
            'mean_time_ns': {'type': 'object', 'additionalProperties': _nullable_number},
            'iter_ratio': {'type': 'object', 'additionalProperties': _nullable_number},
            'time_ratio': {'type': 'object', 'additionalProperties': _nullable_number},
            'failed': {'type': 'object', 'additionalProperties': {'type': 'integer'}},
            'valid': {'type': 'boolean'},
            'per_run': {'type': 'array'},
            'lambda_traces': {'type': 'object'},
        },
    },
}


def _matrix_list(X) -> List[List[float]]:
    return np.asarray(X, dtype=float).tolist()


def _index_lists(sets) -> List[List[int]]:
    return [sorted(int(i) for i in s) for s in sets]


def _envelope_fields(command: str, P: ProblemInstance) -> Dict[str, Any]:
    return {
        'command': command,
        'version': FORMAT_VERSION,
        'created_at': datetime.now(timezone.utc).isoformat(),
        'instance': {
            'name': P.name,
            'm': P.m,
            'n': P.n,
            'k': P.k,
            'q': P.q,
            'gauge': P.gauge.kind,
            'radius': P.gauge.radius,
        },
    }


def clustering_dict(clustering: Clustering) -> Dict[str, Any]:
    return {
        'clusters': _index_lists(clustering.clusters),
        'attraction': _index_lists(clustering.attraction),
        'level_sets': _index_lists(clustering.level_sets),
    }


def validate_document(kind: str, document: Dict[str, Any]) -> Dict[str, Any]:
    """Check a result document against its schema.

    Raises:
        InvalidInputError: Naming the first offending field path
    """
    if kind not in SCHEMAS:
        raise InvalidInputError(f"Unknown document kind: {kind}")
    try:
        jsonschema.validate(document, SCHEMAS[kind])
    except jsonschema.ValidationError as e:
        where = '/'.join(str(p) for p in e.absolute_path) or '<root>'
        logger.error("document_invalid", kind=kind, field=where, error=e.message)
        raise InvalidInputError(f"{kind} document invalid at {where}: {e.message}") from e
    return document


def solve_document(P: ProblemInstance, report: SolverReport, params: Dict[str, Any],
                   clustering: Clustering) -> Dict[str, Any]:
    doc = _envelope_fields('solve', P)
    doc.update({
        'variant': report.variant,
        'params': params,
        'centers': _matrix_list(report.X),
        'value': report.value,
        'iterations': report.total_iterations,
        'stages': [
            {'index': s.index, 'mu': s.mu, 'tau': s.tau, 'iterations': s.iterations,
             'converged': s.converged, 'value': s.value}
            for s in report.stages
        ],
        'clustering': clustering_dict(clustering),
    })
    return validate_document('solve', doc)


def evaluate_document(P: ProblemInstance, X, evaluation: Dict[str, Any]) -> Dict[str, Any]:
    doc = _envelope_fields('evaluate', P)
    doc.update({key: value for key, value in evaluation.items() if key != 'clustering'})
    doc['centers'] = _matrix_list(X)
    doc['clustering'] = clustering_dict(evaluation['clustering'])
    return validate_document('evaluate', doc)


def certificate_document(P: ProblemInstance, X, certificate: Certificate) -> Dict[str, Any]:
    doc = _envelope_fields('certify', P)
    doc.update({
        'centers': _matrix_list(X),
        'status': certificate.status,
        'is_local': certificate.is_local,
        'is_singleton': list(certificate.is_singleton),
        'per_center_residual': certificate.per_center_residual,
        'local_values': certificate.local_values,
        'single_source_values': certificate.single_source_values,
        'ambiguous': list(certificate.ambiguous),
        'value': certificate.value,
        'tol': certificate.tol,
    })
    return validate_document('certify', doc)


def oracle_document(P: ProblemInstance, X, value: float) -> Dict[str, Any]:
    doc = _envelope_fields('oracle', P)
    doc.update({'centers': _matrix_list(X), 'value': value})
    return validate_document('oracle', doc)


def compare_document(P: ProblemInstance, report: CompareReport, cfg: CompareConfig) -> Dict[str, Any]:
    doc = _envelope_fields('compare', P)
    doc.update({
        'runs': cfg.runs,
        'seed': int(cfg.seed),
        'variants': list(cfg.variants),
        'params': cfg.params.to_dict(),
        'mean_iterations': report.mean_iterations,
        'mean_time_ns': report.mean_time_ns,
        'iter_ratio': report.iter_ratio,
        'time_ratio': report.time_ratio,
        'failed': report.failed,
        'valid': report.valid,
        'per_run': [
            {
                'run_index': run.run_index,
                'x0_hash': run.x0_hash,
                'results': {
                    variant: {'iterations': r.iterations, 'value': r.value, 'time_ns': r.time_ns,
                              'failed': r.failed, 'error': r.error}
                    for variant, r in run.results.items()
                },
            }
            for run in report.runs
        ],
        'lambda_traces': report.lambda_traces,
    })
    return validate_document('compare', doc)


# =============================================================================
# FILES
# =============================================================================

def dumps(document: Dict[str, Any]) -> str:
    return json.dumps(document, indent=2, allow_nan=False)


def write_json(document: Dict[str, Any], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(document) + '\n')
    logger.info("result_written", path=str(path), command=document.get('command'))
    return path


def trace_frame(trace: Sequence[IterationRecord]) -> pd.DataFrame:
    rows = [
        [r.stage, r.iteration, r.mu, r.tau, r.lambda_trial, r.lambda_accepted,
         r.backtracks, r.f_value, r.step_fro, int(r.skipped), r.wall_ns]
        for r in trace
    ]
    return pd.DataFrame(rows, columns=TRACE_COLUMNS)


def write_trace_csv(trace: Sequence[IterationRecord], path: Union[str, Path]) -> Path:
    """One row per inner iteration, TRACE_COLUMNS order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    trace_frame(trace).to_csv(path, index=False, float_format='%.17g')
    return path


def write_ratio_csv(report: CompareReport, P: ProblemInstance, dataset: str,
                    path: Union[str, Path], append: bool = False) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(ratio_rows(report, P, dataset), columns=RATIO_COLUMNS)
    write_header = not (append and path.exists())
    frame.to_csv(path, index=False, float_format='%.17g', mode='a' if append else 'w', header=write_header)
    return path


def load_result(path: Union[str, Path], kind: Optional[str] = None) -> Dict[str, Any]:
    """Read a result document back and re-validate it.

    Raises:
        ParseError: Missing file or invalid JSON
        InvalidInputError: Schema violation
    """
    path = Path(path)
    if not path.exists():
        raise ParseError("File not found", path=str(path))
    try:
        document = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ParseError(f"Invalid JSON: {e.msg}", path=str(path), row=e.lineno, column=e.colno) from e
    kind = kind or document.get('command')
    return validate_document(kind, document)
