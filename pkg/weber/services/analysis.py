"""Structural analysis of candidate solutions.

Natural clustering, attraction and level index sets, the local-optimality
certificate based on single-source subproblems, and a brute-force global
oracle for small instances. Indices are 0-based throughout.
"""
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, FrozenSet, Iterator, List, Tuple

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from weber.config import CERTIFICATE_TOL, ORACLE_SIZE_GUARD, SINGLE_SOURCE_MAX_ITER, SINGLETON_WARNING_BAND, get_logger
from weber.exceptions import ConvergenceError, InvalidInputError, SizeGuardError
from weber.models import Certificate, CenterMatrix, Clustering, ProblemInstance
from weber.services.gauge import GaugeSet, gauge_value
from weber.services.objective import dc_components, gauge_matrix, objective_penalized, objective_true, smoothed_objective

logger = get_logger()


# =============================================================================
# CLUSTERING
# =============================================================================

def attraction_sets(R: np.ndarray) -> List[FrozenSet[int]]:
    """A[x^l]: points whose minimal gauge distance is attained at center l."""
    mins = R.min(axis=0)
    return [frozenset(np.flatnonzero(R[ell] == mins).tolist()) for ell in range(R.shape[0])]


def level_sets_by_attraction(R: np.ndarray) -> List[FrozenSet[int]]:
    """L_i = {l : a^i in A[x^l]}."""
    mins = R.min(axis=0)
    return [frozenset(np.flatnonzero(R[:, i] == mins[i]).tolist()) for i in range(R.shape[1])]


def level_sets_by_max_sum(R: np.ndarray) -> List[FrozenSet[int]]:
    """L_i = {l : h_{i,l} = max_r h_{i,r}}, h_{i,l} = sum_{r != l} R[r, i]."""
    h = R.sum(axis=0)[None, :] - R
    maxima = h.max(axis=0)
    return [frozenset(np.flatnonzero(h[:, i] == maxima[i]).tolist()) for i in range(R.shape[1])]


def level_index_sets(P: ProblemInstance, X) -> List[FrozenSet[int]]:
    """Level index sets L_i(X), computed both ways and cross-checked."""
    R = gauge_matrix(P, X)
    by_attraction = level_sets_by_attraction(R)
    by_max_sum = level_sets_by_max_sum(R)
    if by_attraction != by_max_sum:
        mismatched = [i for i, (a, b) in enumerate(zip(by_attraction, by_max_sum)) if a != b]
        logger.warning("level_sets_disagree", points=mismatched)
    return by_attraction


def natural_clustering(P: ProblemInstance, X) -> Clustering:
    """Inductive clustering: A^l = A[x^l] minus points taken by earlier centers."""
    R = gauge_matrix(P, X)
    attraction = attraction_sets(R)
    clusters = []
    assigned: set = set()
    for members in attraction:
        cluster = frozenset(members - assigned)
        clusters.append(cluster)
        assigned |= cluster
    return Clustering(
        clusters=clusters,
        attraction=attraction,
        level_sets=level_sets_by_attraction(R),
    )


def evaluate(P: ProblemInstance, X, mu: float = 1e-6, tau: float = 0.0) -> dict:
    """Objective values and natural clustering of a given center matrix."""
    g, h = dc_components(P, X)
    return {
        'value': objective_true(P, X),
        'g': g,
        'h': h,
        'penalized': objective_penalized(P, X, tau),
        'smoothed': smoothed_objective(P, X, mu, tau),
        'mu': float(mu),
        'tau': float(tau),
        'clustering': natural_clustering(P, X),
    }


# =============================================================================
# SINGLE-SOURCE PROBLEM
# =============================================================================

def _weiszfeld(points: np.ndarray, tol: float, max_iter: int, radius: float = 1.0) -> np.ndarray:
    """Euclidean single-source minimiser with data-point (anchor) handling.

    Starts from the best data point. At a data point the optimality test
    ||sum of unit vectors from the other points|| <= multiplicity is checked
    directly; otherwise the iterate is pushed off the anchor along the
    descent direction. tol is relative: the returned point has a gauge
    value gap below tol * (1 + f) for a ball of the given radius.
    """
    diam = float(np.max(np.linalg.norm(points[:, None, :] - points[None, :, :], axis=-1)))
    scale = max(diam, 1.0)
    values = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=-1).sum(axis=1)
    x = points[int(np.argmin(values))].copy()

    for _ in range(max_iter):
        dist = np.linalg.norm(points - x, axis=1)
        on = dist <= 1e-14 * scale
        others = ~on
        if not others.any():
            return x
        units = (x - points[others]) / dist[others, None]
        grad = units.sum(axis=0)
        grad_norm = float(np.linalg.norm(grad))
        weights = 1.0 / dist[others]

        if on.any():
            multiplicity = int(on.sum())
            if grad_norm <= multiplicity:
                return x
            step = (grad_norm - multiplicity) / weights.sum()
            x = x - step * grad / grad_norm
            continue

        # convexity bound: f(x) - f* <= ||grad|| * diam, in Euclidean units
        if grad_norm * diam <= tol * (radius + float(dist.sum())):
            return x
        x = (weights[:, None] * points[others]).sum(axis=0) / weights.sum()

    raise ConvergenceError(f"Weiszfeld iteration did not reach tol={tol} in {max_iter} iterations")


def _linf_linprog(points: np.ndarray, radius: float) -> np.ndarray:
    """Exact linf single-source minimiser as a linear program.

    Variables (x, t) with x free and t >= 0; minimise sum_i t_i subject to
    -r t_i <= x_j - a_ij <= r t_i for every point i and coordinate j.
    """
    m, n = points.shape
    rows = np.arange(m * n)
    point_of_row = np.repeat(np.arange(m), n)
    coord_of_row = np.tile(np.arange(n), m)
    # x_j - r t_i <= a_ij
    upper = sparse.coo_matrix(
        (np.concatenate([np.ones(m * n), np.full(m * n, -radius)]),
         (np.concatenate([rows, rows]), np.concatenate([coord_of_row, n + point_of_row]))),
        shape=(m * n, n + m),
    )
    # -x_j - r t_i <= -a_ij
    lower = sparse.coo_matrix(
        (np.concatenate([-np.ones(m * n), np.full(m * n, -radius)]),
         (np.concatenate([rows, rows]), np.concatenate([coord_of_row, n + point_of_row]))),
        shape=(m * n, n + m),
    )
    A_ub = sparse.vstack([upper, lower]).tocsr()
    b_ub = np.concatenate([points.ravel(), -points.ravel()])
    c = np.concatenate([np.zeros(n), np.ones(m)])
    bounds = [(None, None)] * n + [(0, None)] * m

    result = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method='highs',
                     options={'primal_feasibility_tolerance': 1e-10,
                              'dual_feasibility_tolerance': 1e-10})
    if not result.success:
        raise ConvergenceError(f"linf single-source LP failed: {result.message}")
    return np.asarray(result.x[:n], dtype=float)


def single_source_solve(points, gauge: GaugeSet, tol: float = 1e-9,
                        max_iter: int = SINGLE_SOURCE_MAX_ITER) -> Tuple[np.ndarray, float]:
    """Minimise sum_i rho_F(x - a^i) over x.

    l1 gauges (and any gauge in one dimension) separate into coordinate
    medians; the 2-D linf gauge becomes an l1 problem after rotating by 45
    degrees; linf in higher dimensions is solved as a linear program; the
    Euclidean gauge uses Weiszfeld with relative tolerance tol.

    Returns:
        (minimiser, optimal value)

    Raises:
        InvalidInputError: If no points are given
        ConvergenceError: If Weiszfeld hits its cap or the LP fails
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0:
        raise InvalidInputError("single_source_solve needs at least one point")
    if len(pts) == 1:
        return pts[0].copy(), 0.0

    n = pts.shape[1]
    if gauge.kind == 'l1-ball' or n == 1:
        x = np.median(pts, axis=0)
    elif gauge.kind == 'linf-ball' and n == 2:
        # max(|z1|, |z2|) = (|z1 + z2| + |z1 - z2|) / 2
        u = np.median(pts[:, 0] + pts[:, 1])
        v = np.median(pts[:, 0] - pts[:, 1])
        x = np.array([(u + v) / 2.0, (u - v) / 2.0])
    elif gauge.kind == 'linf-ball':
        x = _linf_linprog(pts, gauge.radius)
    elif gauge.kind == 'euclidean-ball':
        x = _weiszfeld(pts, tol, max_iter, radius=gauge.radius)
    else:
        raise InvalidInputError(f"No single-source solver for gauge kind '{gauge.kind}'")

    return x, float(gauge_value(gauge, x - pts).sum())


# =============================================================================
# LOCAL CERTIFICATE
# =============================================================================

def local_certificate(P: ProblemInstance, X, tol: float = CERTIFICATE_TOL) -> Certificate:
    """Check the single-source characterisation of local optimality.

    (i) every level set L_i(X) is a singleton, and (ii) every center with a
    nonempty attraction set solves the single-source problem on it, up to
    tol relative. When (i) fails the result is 'inconclusive'.
    """
    R = gauge_matrix(P, X)
    X = np.asarray(X, dtype=float)
    attraction = attraction_sets(R)
    level_sets = level_sets_by_attraction(R)
    is_singleton = [len(L) == 1 for L in level_sets]

    ambiguous = []
    if P.k > 1:
        two_smallest = np.sort(R, axis=0)[:2]
        gaps = two_smallest[1] - two_smallest[0]
        ambiguous = [i for i in range(P.m) if is_singleton[i] and gaps[i] < SINGLETON_WARNING_BAND]
        if ambiguous:
            logger.warning("level_sets_ambiguous", points=ambiguous, band=SINGLETON_WARNING_BAND)

    residuals, local_values, ss_values = [], [], []
    centers_ok = True
    for ell, members in enumerate(attraction):
        if not members:
            residuals.append(None)
            local_values.append(None)
            ss_values.append(None)
            continue
        idx = sorted(members)
        local = float(R[ell, idx].sum())
        _, best = single_source_solve(P.A[idx], P.gauge, tol=tol * 1e-3)
        residual = local - best
        residuals.append(residual)
        local_values.append(local)
        ss_values.append(best)
        if residual > tol * (1.0 + abs(best)):
            centers_ok = False

    if not all(is_singleton):
        status = 'inconclusive'
    elif centers_ok:
        status = 'local'
    else:
        status = 'not-local'

    value = objective_true(P, X)
    logger.info("certificate_computed", instance=P.name, status=status, value=value)
    return Certificate(
        status=status,
        is_singleton=is_singleton,
        per_center_residual=residuals,
        local_values=local_values,
        single_source_values=ss_values,
        ambiguous=ambiguous,
        value=value,
        tol=tol,
    )


# =============================================================================
# BRUTE-FORCE ORACLE
# =============================================================================

def surjective_partitions(m: int, k: int) -> Iterator[Tuple[int, ...]]:
    """All labelings of m points into exactly k nonempty blocks, as restricted growth strings."""
    labels = [0] * m

    def extend(i: int, used: int) -> Iterator[Tuple[int, ...]]:
        if m - i < k - used:
            return
        if i == m:
            yield tuple(labels)
            return
        for block in range(min(used + 1, k)):
            labels[i] = block
            yield from extend(i + 1, max(used, block + 1))

    yield from extend(1, 1)


def brute_force_global(P: ProblemInstance, tol: float = 1e-9, size_guard: int = ORACLE_SIZE_GUARD,
                       workers: int = 1) -> Tuple[CenterMatrix, float]:
    """Global optimum of a small unconstrained instance by enumeration.

    Every surjective assignment of points to k clusters is scored by the
    single-source optima of its blocks; distinct blocks are solved once.

    Returns:
        (X*, f*) with f* = objective_true(X*)

    Raises:
        SizeGuardError: If k**m exceeds size_guard
        InvalidInputError: For constrained instances
    """
    if P.k ** P.m > size_guard:
        logger.warning("oracle_refused", m=P.m, k=P.k, guard=size_guard)
        raise SizeGuardError(
            f"Enumeration needs k**m = {P.k}**{P.m} assignments, above the guard of {size_guard}")
    if P.constrained:
        raise InvalidInputError("The brute-force oracle handles unconstrained instances only")

    partitions = list(surjective_partitions(P.m, P.k))
    blocks = sorted({
        frozenset(i for i, label in enumerate(labels) if label == b)
        for labels in partitions for b in range(P.k)
    }, key=sorted)

    def solve_block(block: FrozenSet[int]):
        return block, single_source_solve(P.A[sorted(block)], P.gauge, tol=tol)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            solved: Dict[FrozenSet[int], Tuple[np.ndarray, float]] = dict(pool.map(solve_block, blocks))
    else:
        solved = dict(solve_block(b) for b in blocks)

    best_total, best_labels = np.inf, None
    for labels in partitions:
        total = sum(
            solved[frozenset(i for i, label in enumerate(labels) if label == b)][1]
            for b in range(P.k)
        )
        if total < best_total:
            best_total, best_labels = total, labels

    X_star = np.array([
        solved[frozenset(i for i, label in enumerate(best_labels) if label == b)][0]
        for b in range(P.k)
    ])
    f_star = objective_true(P, X_star)
    logger.info("oracle_finished", instance=P.name, partitions=len(partitions),
                blocks=len(blocks), value=f_star)
    return X_star, f_star
