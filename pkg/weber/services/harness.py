"""Seeded multi-start comparison of the DCA variants.

Every run draws one initial center matrix from a generator keyed on
(seed, run_index) and solves it with each requested variant, so runs are
independent and reproducible in any order.
"""
import hashlib
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from weber.config import MAX_FAILED_RUN_SHARE, get_logger
from weber.exceptions import InvalidParameterError, SolverDivergedError
from weber.models import CenterMatrix, CompareConfig, CompareReport, ProblemInstance, RunRecord, VariantResult
from weber.services.solver import solve

logger = get_logger()

RATIO_COLUMNS = ['dataset', 'gauge', 'm', 'n', 'k', 'variant', 'mean_iters', 'mean_time_ns', 'iter_ratio', 'time_ratio']


def random_init(P: ProblemInstance, init_box: Optional[Tuple[Sequence[float], Sequence[float]]],
                seed: int, run_index: int) -> CenterMatrix:
    """Uniform k x n center matrix inside init_box (bounding box of A when None)."""
    if init_box is None:
        lo, hi = P.bounding_box()
    else:
        lo, hi = (np.broadcast_to(np.asarray(b, dtype=float), (P.n,)) for b in init_box)
    if np.any(lo > hi):
        raise InvalidParameterError("init_box must satisfy lo <= hi componentwise")
    rng = np.random.default_rng([int(seed) % 2 ** 64, int(run_index)])
    return rng.uniform(lo, hi, size=(P.k, P.n))


def hash_centers(X: np.ndarray) -> str:
    """Short content hash of a center matrix, used to prove shared starts."""
    return hashlib.sha256(np.ascontiguousarray(X, dtype=np.float64).tobytes()).hexdigest()[:16]


def _run_once(P: ProblemInstance, cfg: CompareConfig, run_index: int):
    X0 = random_init(P, cfg.init_box, cfg.seed, run_index)
    results: Dict[str, VariantResult] = {}
    traces: Dict[str, List[Dict[str, Any]]] = {}
    for variant in cfg.variants:
        started = time.perf_counter_ns()
        try:
            report = solve(P, X0, cfg.params, variant=variant)
        except SolverDivergedError as e:
            logger.warning("run_failed", run=run_index, variant=variant, error=str(e))
            results[variant] = VariantResult(iterations=None, value=None, time_ns=None, failed=True, error=str(e))
            continue
        elapsed = time.perf_counter_ns() - started
        results[variant] = VariantResult(iterations=report.total_iterations, value=report.value, time_ns=elapsed)
        if variant != 'dca':
            traces[variant] = [
                {
                    'stage': r.stage,
                    'iteration': r.iteration,
                    'lambda_trial': r.lambda_trial,
                    'lambda_accepted': r.lambda_accepted,
                    'skipped': r.skipped,
                }
                for r in report.trace
            ]
    return RunRecord(run_index=run_index, x0_hash=hash_centers(X0), results=results), traces


def _mean(values: List[float]) -> Optional[float]:
    return float(np.mean(values)) if values else None


def compare(P: ProblemInstance, cfg: CompareConfig) -> CompareReport:
    """Solve cfg.runs shared random starts with every variant and aggregate.

    Ratios are DCA mean divided by the variant mean; they are None when DCA
    is not among the variants or a mean is unavailable. A variant with more
    than MAX_FAILED_RUN_SHARE failed runs makes the report invalid.
    """
    log = logger.bind(instance=P.name, runs=cfg.runs, seed=cfg.seed, variants=list(cfg.variants))
    log.info("compare_started", workers=cfg.workers)

    indices = range(cfg.runs)
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(lambda i: _run_once(P, cfg, i), indices))
    else:
        outcomes = [_run_once(P, cfg, i) for i in indices]
    outcomes.sort(key=lambda o: o[0].run_index)

    runs = [record for record, _ in outcomes]
    lambda_traces = outcomes[0][1]

    mean_iterations: Dict[str, Optional[float]] = {}
    mean_time_ns: Dict[str, Optional[float]] = {}
    failed: Dict[str, int] = {}
    for variant in cfg.variants:
        ok = [r.results[variant] for r in runs if not r.results[variant].failed]
        failed[variant] = cfg.runs - len(ok)
        mean_iterations[variant] = _mean([v.iterations for v in ok])
        mean_time_ns[variant] = _mean([v.time_ns for v in ok])

    def ratio(means: Dict[str, Optional[float]], variant: str) -> Optional[float]:
        base, other = means.get('dca'), means[variant]
        if base is None or not other:
            return None
        return base / other

    iter_ratio = {v: ratio(mean_iterations, v) for v in cfg.variants}
    time_ratio = {v: ratio(mean_time_ns, v) for v in cfg.variants}
    valid = all(count <= MAX_FAILED_RUN_SHARE * cfg.runs for count in failed.values())
    if not valid:
        log.warning("compare_invalid", failed=failed)

    log.info("compare_finished", mean_iterations=mean_iterations, iter_ratio=iter_ratio, valid=valid)
    return CompareReport(
        runs=runs,
        mean_iterations=mean_iterations,
        mean_time_ns=mean_time_ns,
        iter_ratio=iter_ratio,
        time_ratio=time_ratio,
        failed=failed,
        valid=valid,
        lambda_traces=lambda_traces,
    )


def ratio_rows(report: CompareReport, P: ProblemInstance, dataset: str) -> List[Dict[str, Any]]:
    """Rows of the ratio table, one per variant, in RATIO_COLUMNS order."""
    return [
        {
            'dataset': dataset,
            'gauge': P.gauge.kind,
            'm': P.m,
            'n': P.n,
            'k': P.k,
            'variant': variant,
            'mean_iters': report.mean_iterations[variant],
            'mean_time_ns': report.mean_time_ns[variant],
            'iter_ratio': report.iter_ratio[variant],
            'time_ratio': report.time_ratio[variant],
        }
        for variant in report.mean_iterations
    ]


def sweep_lambda_skip(P: ProblemInstance, cfg: CompareConfig, values: Iterable[int]) -> List[Dict[str, Any]]:
    """Rerun the comparison for each lambda_skip and collect the skip variant's ratios."""
    rows = []
    for value in values:
        params = replace(cfg.params, lambda_skip=int(value))
        variants = tuple(dict.fromkeys(('dca', *cfg.variants)))
        report = compare(P, replace(cfg, params=params, variants=variants))
        for variant in variants:
            if variant == 'dca':
                continue
            rows.append({
                'lambda_skip': int(value),
                'variant': variant,
                'mean_iters': report.mean_iterations[variant],
                'iter_ratio': report.iter_ratio[variant],
                'time_ratio': report.time_ratio[variant],
                'valid': report.valid,
            })
        logger.debug("sweep_point", lambda_skip=int(value))
    return rows
