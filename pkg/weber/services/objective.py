"""Objective functions, DC decomposition and smoothed surrogates.

Notation follows the continuation solver: G_mu/H_mu split the smoothed
objective, G_tau/H_tau split the quadratic penalty, and H2 is the
nonsmooth max-sum part shared by both. Differences x^l - a^i are evaluated
as one (k, m, n) array.
"""
from typing import Tuple

import numpy as np

from weber.config import get_logger
from weber.exceptions import InvalidParameterError
from weber.models import CenterMatrix, MERITS, ProblemInstance, as_center_matrix
from weber.services.gauge import gauge_subgradient, gauge_value, polar_distance, polar_projection, smoothed_gauge_value
from weber.services.sets import region_distance, region_projection

logger = get_logger()


def _check_mu(mu: float):
    if not mu > 0:
        raise InvalidParameterError(f"Smoothing parameter mu must be positive, got {mu}")


def _check_tau(tau: float):
    if not tau >= 0:
        raise InvalidParameterError(f"Penalty parameter tau must be nonnegative, got {tau}")


def differences(P: ProblemInstance, X) -> np.ndarray:
    """All x^l - a^i as a (k, m, n) array."""
    X = as_center_matrix(X, P.k, P.n)
    return X[:, None, :] - P.A[None, :, :]


def gauge_matrix(P: ProblemInstance, X) -> np.ndarray:
    """R[l, i] = rho_F(x^l - a^i), shape (k, m)."""
    return gauge_value(P.gauge, differences(P, X))


def objective_true(P: ProblemInstance, X) -> float:
    """Sum over demand points of the gauge distance to the nearest center."""
    return float(gauge_matrix(P, X).min(axis=0).sum())


def penalty_sum(P: ProblemInstance, X) -> float:
    """Sum over centers and their regions of the squared distance."""
    if not P.constrained:
        return 0.0
    X = as_center_matrix(X, P.k, P.n)
    total = 0.0
    for ell, regions in enumerate(P.constraints):
        for region in regions:
            total += region_distance(region, X[ell]) ** 2
    return float(total)


def objective_penalized(P: ProblemInstance, X, tau: float) -> float:
    """f_tau = f_F + (tau/2) sum_l sum_j d(x^l; Omega_j^l)^2."""
    _check_tau(tau)
    return objective_true(P, X) + 0.5 * tau * penalty_sum(P, X)


def dc_components(P: ProblemInstance, X) -> Tuple[float, float]:
    """(g, h) with g - h equal to the true objective.

    g = sum_i sum_r rho(x^r - a^i); h = sum_i max_l sum_{r != l} rho(x^r - a^i).
    """
    R = gauge_matrix(P, X)
    totals = R.sum(axis=0)
    g = float(totals.sum())
    h = float((totals - R.min(axis=0)).sum())
    return g, h


def H2_value(P: ProblemInstance, X) -> float:
    """The nonsmooth part sum_i max_r sum_{l != r} rho(x^l - a^i)."""
    return dc_components(P, X)[1]


def G_value(P: ProblemInstance, X, mu: float, tau: float = 0.0) -> float:
    """G_mu + G_tau = (1/2mu) sum ||x^l - a^i||^2 + (tau q / 2) ||X||_F^2."""
    _check_mu(mu)
    _check_tau(tau)
    D = differences(P, X)
    X = np.asarray(X, dtype=float)
    return float(np.sum(D * D) / (2.0 * mu) + 0.5 * tau * P.q * np.sum(X * X))


def H1_value(P: ProblemInstance, X, mu: float) -> float:
    """H1_mu = (mu/2) sum_i sum_l d((x^l - a^i)/mu; F°)^2."""
    _check_mu(mu)
    dist = polar_distance(P.gauge, differences(P, X) / mu)
    return float(0.5 * mu * np.sum(np.square(dist)))


def H_tau_value(P: ProblemInstance, X, tau: float) -> float:
    """H_tau = (tau/2) sum_l sum_j phi(x^l) with phi = ||x||^2 - d^2."""
    _check_tau(tau)
    if not P.constrained or tau == 0:
        return 0.0
    X = as_center_matrix(X, P.k, P.n)
    total = 0.0
    for ell, regions in enumerate(P.constraints):
        sq = float(X[ell] @ X[ell])
        for region in regions:
            total += sq - region_distance(region, X[ell]) ** 2
    return 0.5 * tau * total


def H_value(P: ProblemInstance, X, mu: float, tau: float = 0.0) -> float:
    """H_mu + H_tau, the concave part of the smoothed objective."""
    return H1_value(P, X, mu) + H2_value(P, X) + H_tau_value(P, X, tau)


def smoothed_objective(P: ProblemInstance, X, mu: float, tau: float = 0.0) -> float:
    """f_mu (tau = 0) or f_{tau,mu}: smoothed gauge sum minus H2 plus penalty.

    Evaluated as sum rho_mu(x^l - a^i) - H2 + (tau/2) sum d^2, which equals
    G - H without the cancellation of the two large quadratic terms.
    """
    _check_mu(mu)
    _check_tau(tau)
    D = differences(P, X)
    smooth = float(smoothed_gauge_value(P.gauge, D, mu).sum())
    return smooth - H2_value(P, X) + 0.5 * tau * penalty_sum(P, X)


def grad_G(P: ProblemInstance, X, mu: float, tau: float = 0.0) -> np.ndarray:
    """(m/mu) X - B/mu + tau q X."""
    _check_mu(mu)
    _check_tau(tau)
    X = as_center_matrix(X, P.k, P.n)
    return (P.m / mu) * X - P.B / mu + tau * P.q * X


def grad_G_conj(P: ProblemInstance, Y, mu: float, tau: float = 0.0) -> CenterMatrix:
    """Gradient of the conjugate of G: (B + mu Y) / (m + mu tau q)."""
    _check_mu(mu)
    _check_tau(tau)
    Y = np.asarray(Y, dtype=float)
    return (P.B + mu * Y) / (P.m + mu * tau * P.q)


def grad_H1(P: ProblemInstance, X, mu: float) -> np.ndarray:
    """Row l is sum_i [(x^l - a^i)/mu - P((x^l - a^i)/mu; F°)]."""
    _check_mu(mu)
    scaled = differences(P, X) / mu
    return (scaled - polar_projection(P.gauge, scaled)).sum(axis=1)


def nearest_centers(P: ProblemInstance, X) -> np.ndarray:
    """For each demand point, the smallest index attaining min_l rho(x^l - a^i)."""
    return np.argmin(gauge_matrix(P, X), axis=0)


def subgrad_H2(P: ProblemInstance, X) -> np.ndarray:
    """A subgradient of H2: sum_i V_i.

    Row l* of V_i is zero, where l* is the smallest index maximising
    Q^{i,r} (equivalently minimising rho(x^r - a^i)); every other row j is a
    gauge subgradient at x^j - a^i (zero when x^j = a^i).
    """
    D = differences(P, X)
    S = gauge_subgradient(P.gauge, D)
    star = np.argmin(gauge_value(P.gauge, D), axis=0)
    mask = np.ones(S.shape[:2], dtype=bool)
    mask[star, np.arange(P.m)] = False
    return (S * mask[:, :, None]).sum(axis=1)


def grad_Htau(P: ProblemInstance, X, tau: float) -> np.ndarray:
    """tau U, row l of U being sum_j P(x^l; Omega_j^l)."""
    _check_tau(tau)
    X = as_center_matrix(X, P.k, P.n)
    U = np.zeros_like(X)
    if not P.constrained or tau == 0:
        return U
    for ell, regions in enumerate(P.constraints):
        for region in regions:
            U[ell] += region_projection(region, X[ell])
    return tau * U


def merit_value(P: ProblemInstance, X, merit: str, mu: float, tau: float) -> float:
    """The function tested by the Armijo line search."""
    if merit == 'true-objective':
        return objective_true(P, X)
    if merit == 'penalized-objective':
        return objective_penalized(P, X, tau)
    if merit == 'smoothed-objective':
        return smoothed_objective(P, X, mu, tau)
    raise InvalidParameterError(f"Unknown merit '{merit}', expected one of {', '.join(MERITS)}")
