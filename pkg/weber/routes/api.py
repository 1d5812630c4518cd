"""JSON API: evaluate, solve, certify and oracle over posted instances."""
from typing import Any, Dict

import jsonschema
import numpy as np
from flask import Blueprint, jsonify, request

from weber.config import SOLVER_DEFAULTS, get_logger
from weber.exceptions import InvalidInputError, ParseError
from weber.models import VARIANTS, ProblemInstance, SolverParams
from weber.services import analysis, exporter
from weber.services.gauge import GaugeSet
from weber.services.harness import random_init
from weber.services.loaders import parse_constraints
from weber.services.solver import solve

bp = Blueprint('api', __name__, url_prefix='/api')
logger = get_logger()

_matrix = {'type': 'array', 'items': {'type': 'array', 'items': {'type': 'number'}, 'minItems': 1}, 'minItems': 1}

INSTANCE_REQUEST_SCHEMA = {
    'type': 'object',
    'required': ['points', 'k'],
    'properties': {
        'name': {'type': 'string'},
        'points': _matrix,
        'k': {'type': 'integer', 'minimum': 1},
        'gauge': {'type': 'string'},
        'radius': {'type': 'number', 'exclusiveMinimum': 0},
        'constraints': {'type': 'array', 'items': {'type': 'array', 'items': {'type': 'string'}}},
        'params': {'type': 'object'},
        'variant': {'enum': list(VARIANTS)},
        'centers': _matrix,
        'x0': _matrix,
        'seed': {'type': 'integer'},
        'mu': {'type': 'number', 'exclusiveMinimum': 0},
        'tau': {'type': 'number', 'minimum': 0},
        'tol': {'type': 'number', 'exclusiveMinimum': 0},
    },
    'additionalProperties': False,
}


def _payload(require_centers: bool = False) -> Dict[str, Any]:
    body = request.get_json(silent=True)
    if body is None:
        raise ParseError("Request body must be a JSON object", path='<request>')
    try:
        jsonschema.validate(body, INSTANCE_REQUEST_SCHEMA)
    except jsonschema.ValidationError as e:
        field = '/'.join(str(p) for p in e.absolute_path) or None
        raise ParseError(e.message, path='<request>', column=field) from e
    if require_centers and 'centers' not in body:
        raise ParseError("'centers' is a required property", path='<request>')
    return body


def _instance(body: Dict[str, Any]) -> ProblemInstance:
    for key in ('points', 'centers', 'x0'):
        if key in body and len({len(row) for row in body[key]}) != 1:
            raise InvalidInputError(f"'{key}' rows must all have the same length")
    constraints, _ = parse_constraints({'constraints': body.get('constraints', [])})
    return ProblemInstance(
        A=np.asarray(body['points'], dtype=float),
        k=body['k'],
        gauge=GaugeSet(body.get('gauge', 'euclidean-ball'), body.get('radius', 1.0)),
        constraints=constraints,
        name=body.get('name', 'request'),
    )


def _params(body: Dict[str, Any]) -> SolverParams:
    merged = dict(SOLVER_DEFAULTS)
    merged.update(body.get('params', {}))
    return SolverParams.from_mapping(merged)


@bp.route('/health')
def health():
    """Health check endpoint."""
    return {'status': 'ok'}


@bp.route('/evaluate', methods=['POST'])
def evaluate():
    """Objective values and natural clustering for posted centers."""
    body = _payload(require_centers=True)
    P = _instance(body)
    X = np.asarray(body['centers'], dtype=float)
    evaluation = analysis.evaluate(P, X, mu=body.get('mu', SOLVER_DEFAULTS['mu_f']), tau=body.get('tau', 0.0))
    return jsonify(exporter.evaluate_document(P, X, evaluation))


@bp.route('/solve', methods=['POST'])
def solve_instance():
    """Run one solver variant from x0 (or a seeded random start)."""
    body = _payload()
    P = _instance(body)
    params = _params(body)
    if 'x0' in body:
        X0 = np.asarray(body['x0'], dtype=float)
    else:
        X0 = random_init(P, None, body.get('seed', 0), 0)
    variant = body.get('variant', 'abdca')

    report = solve(P, X0, params, variant=variant)
    clustering = analysis.natural_clustering(P, report.X)
    logger.info("api_solve", instance=P.name, variant=variant, value=report.value,
                iterations=report.total_iterations)
    return jsonify(exporter.solve_document(P, report, params.to_dict(), clustering))


@bp.route('/certify', methods=['POST'])
def certify():
    """Local-optimality certificate for posted centers."""
    body = _payload(require_centers=True)
    P = _instance(body)
    X = np.asarray(body['centers'], dtype=float)
    if X.shape != (P.k, P.n):
        raise InvalidInputError(f"centers has shape {X.shape}, expected {(P.k, P.n)}")
    certificate = analysis.local_certificate(P, X, **({'tol': body['tol']} if 'tol' in body else {}))
    return jsonify(exporter.certificate_document(P, X, certificate))


@bp.route('/oracle', methods=['POST'])
def oracle():
    """Brute-force global optimum, refused above the size guard."""
    body = _payload()
    P = _instance(body)
    X_star, value = analysis.brute_force_global(P)
    return jsonify(exporter.oracle_document(P, X_star, value))
