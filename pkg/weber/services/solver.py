"""DCA and adaptive boosted DCA with mu/tau continuation.

Variants:
    dca         X_{p+1} = Z_p, no line search
    abdca       Armijo search along d_p = Z_p - X_p with self-adaptive trial steps
    abdca-skip  as abdca, but once the accepted step falls below lambda_f the
                search is suppressed for lambda_skip - 1 iterations, then a
                single search (trial reset to lambda_start) decides whether to
                keep searching
"""
import time
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from weber.config import get_logger
from weber.exceptions import InvalidParameterError, SolverDivergedError
from weber.models import (
    VARIANTS,
    CenterMatrix,
    IterationRecord,
    ProblemInstance,
    SolverParams,
    SolverReport,
    StageRecord,
    as_center_matrix,
    frobenius_norm,
)
from weber.services.objective import (
    grad_G_conj,
    grad_H1,
    grad_Htau,
    merit_value,
    objective_penalized,
    objective_true,
    subgrad_H2,
)

logger = get_logger()

# Skipping variant returns Z_p directly below this DCA step length
SKIP_STEP_THRESHOLD = 1e-6

Merit = Union[str, Callable[[np.ndarray], float]]
IterationCallback = Callable[[IterationRecord, np.ndarray, np.ndarray], None]


def dca_step(P: ProblemInstance, X, mu: float, tau: float = 0.0) -> Tuple[CenterMatrix, np.ndarray]:
    """One DCA step: Y in the subdifferential of H at X, Z = grad G*(Y).

    Returns:
        (Z, Y)
    """
    X = as_center_matrix(X, P.k, P.n)
    tau = tau if P.constrained else 0.0
    Y = grad_H1(P, X, mu) + subgrad_H2(P, X)
    if tau > 0:
        Y = Y + grad_Htau(P, X, tau)
    return grad_G_conj(P, Y, mu, tau), Y


def adaptive_trial(history: Sequence[Tuple[float, float]], gamma: float, lambda_start: float) -> float:
    """Self-adaptive trial step.

    Args:
        history: (trial, accepted) pairs of previous line searches, oldest first
        gamma: Growth factor (> 1)
        lambda_start: Trial used while fewer than two searches are recorded

    Returns:
        gamma * lambda_{p-1} if both previous searches accepted their trial,
        lambda_{p-1} otherwise
    """
    if gamma <= 1:
        raise InvalidParameterError(f"gamma must exceed 1, got {gamma}")
    if len(history) < 2:
        return lambda_start
    (trial2, accepted2), (trial1, accepted1) = history[-2], history[-1]
    if accepted2 == trial2 and accepted1 == trial1:
        return gamma * accepted1
    return accepted1


def _merit(P: ProblemInstance, X: np.ndarray, merit: Merit, mu: float, tau: float) -> float:
    if callable(merit):
        return float(merit(X))
    return merit_value(P, X, merit, mu, tau)


def armijo_search(P: Optional[ProblemInstance], Z, d, lambda_trial: float, alpha: float, beta: float,
                  merit: Merit = 'penalized-objective', tau: float = 0.0, mu: float = 1.0,
                  lambda_min_guard: float = 1e-10, merit_at_Z: Optional[float] = None) -> Tuple[float, int]:
    """Backtracking search for merit(Z + lam d) <= merit(Z) - alpha lam^2 ||d||^2.

    Tries lam = trial, beta*trial, beta^2*trial, ... and gives up with lam = 0
    once lam drops below lambda_min_guard.

    Returns:
        (accepted step, number of backtracks)
    """
    Z = np.asarray(Z, dtype=float)
    d = np.asarray(d, dtype=float)
    dd = frobenius_norm(d) ** 2
    if lambda_trial <= 0 or dd == 0:
        return 0.0, 0

    f0 = merit_at_Z if merit_at_Z is not None else _merit(P, Z, merit, mu, tau)
    lam = lambda_trial
    backtracks = 0
    while lam >= lambda_min_guard:
        f = _merit(P, Z + lam * d, merit, mu, tau)
        if np.isfinite(f) and f <= f0 - alpha * lam * lam * dd:
            return lam, backtracks
        lam *= beta
        backtracks += 1

    logger.debug("line_search_exhausted", trial=lambda_trial, backtracks=backtracks)
    return 0.0, backtracks


def solve(P: ProblemInstance, X0, params: Optional[SolverParams] = None, variant: str = 'abdca',
          on_iteration: Optional[IterationCallback] = None) -> SolverReport:
    """Run the continuation loop for one variant from X0.

    Each stage iterates at fixed (mu, tau) until the Frobenius step drops
    below tol or N iterations pass; then mu <- delta mu and, for
    constrained instances, tau <- sigma tau. Stages run while mu > mu_f
    (and tau < tau_f when constrained).

    Args:
        P: Problem instance
        X0: Initial k x n center matrix
        params: Hyperparameters (defaults when omitted)
        variant: 'dca', 'abdca' or 'abdca-skip'
        on_iteration: Optional hook called with (record, Z_p, X_{p+1})

    Returns:
        SolverReport with the final centers, true objective value and trace

    Raises:
        InvalidParameterError: Unknown variant
        SolverDivergedError: The objective became non-finite
    """
    params = params or SolverParams()
    if variant not in VARIANTS:
        raise InvalidParameterError(f"Unknown variant '{variant}', expected one of {', '.join(VARIANTS)}")

    X = as_center_matrix(X0, P.k, P.n).copy()
    constrained = P.constrained
    mu = params.mu0
    tau = params.tau0 if constrained else 0.0
    log = logger.bind(instance=P.name, variant=variant, m=P.m, n=P.n, k=P.k, q=P.q)

    trace: List[IterationRecord] = []
    stages: List[StageRecord] = []
    stage = 0

    while mu > params.mu_f and (not constrained or tau < params.tau_f):
        history: List[Tuple[float, float]] = []
        skip_left = 0
        converged = False
        iterations = 0

        for p in range(params.N):
            started = time.perf_counter_ns()
            Z, _ = dca_step(P, X, mu, tau)
            d = Z - X
            d_norm = frobenius_norm(d)

            trial = accepted = 0.0
            backtracks = 0
            skipped = False

            if variant == 'dca':
                X_new = Z
            elif variant == 'abdca-skip' and d_norm <= SKIP_STEP_THRESHOLD:
                X_new = Z
                skipped = True
            elif variant == 'abdca-skip' and skip_left > 0:
                X_new = Z
                skipped = True
                skip_left -= 1
                if skip_left == 0:
                    # next search restarts from lambda_start
                    history = []
                    log.debug("skip_window_closed", stage=stage, iteration=p + 1)
            elif d_norm == 0:
                X_new = Z
            else:
                trial = adaptive_trial(history, params.gamma, params.lambda_start)
                accepted, backtracks = armijo_search(
                    P, Z, d, trial, params.alpha, params.beta,
                    merit=params.merit, tau=tau, mu=mu,
                    lambda_min_guard=params.lambda_min_guard,
                )
                history.append((trial, accepted))
                X_new = Z + accepted * d if accepted > 0 else Z
                if variant == 'abdca-skip' and accepted < params.lambda_f and params.lambda_skip > 1:
                    skip_left = params.lambda_skip - 1
                    log.debug("line_search_suspended", stage=stage, iteration=p, accepted=accepted)

            step = frobenius_norm(X_new - X)
            f_value = objective_penalized(P, X_new, tau) if np.all(np.isfinite(X_new)) else float('nan')
            record = IterationRecord(
                stage=stage,
                iteration=p,
                mu=mu,
                tau=tau,
                lambda_trial=trial,
                lambda_accepted=accepted,
                backtracks=backtracks,
                f_value=f_value,
                step_fro=step,
                skipped=skipped,
                wall_ns=time.perf_counter_ns() - started,
            )
            trace.append(record)
            iterations += 1

            if not np.isfinite(f_value):
                log.error("solve_diverged", stage=stage, iteration=p, mu=mu, tau=tau)
                raise SolverDivergedError(
                    f"Non-finite objective at stage {stage}, iteration {p}", trace=trace)

            if on_iteration is not None:
                on_iteration(record, Z, X_new)

            X = X_new
            if step < params.tol:
                converged = True
                break

        value = objective_true(P, X)
        stages.append(StageRecord(
            index=stage, mu=mu, tau=tau, iterations=iterations, converged=converged, value=value,
        ))
        log.debug("stage_finished", stage=stage, mu=mu, tau=tau,
                  iterations=iterations, converged=converged, value=value)
        if not converged:
            log.warning("stage_iteration_cap", stage=stage, mu=mu, tau=tau, N=params.N)

        mu *= params.delta
        if constrained:
            tau *= params.sigma
        stage += 1

    value = objective_true(P, X)
    log.info("solve_finished", stages=len(stages), iterations=len(trace), value=value)
    return SolverReport(
        X=X,
        value=value,
        total_iterations=len(trace),
        variant=variant,
        stages=stages,
        trace=trace,
    )
