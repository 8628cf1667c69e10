"""Shared numerical primitives.

Scalar minimization rides on scipy's bounded Brent implementation; the
min-norm quadratic program is handed to cvxopt's interior-point solver with a
KKT certificate computed here (the contract is the certificate, not the
algorithm). The binomial shortest-interval search and the order-statistic
quantile are implemented directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize, special, stats

from .errors import ConvergenceError, InfeasibleProblemError, InvalidInputError

try:  # cvxopt prints nothing once options are set per solve
    from cvxopt import matrix as _cvxmatrix
    from cvxopt import solvers as _cvxsolvers
except ImportError as exc:  # pragma: no cover - hard dependency
    raise ImportError("rankrepro requires cvxopt for the min-norm QP") from exc


def brent_minimize(f, bracket, tol: float = 1e-8, max_iter: int = 500):
    """Minimize a unimodal scalar function on a bracket.

    Golden-section / parabolic-interpolation search (Brent). For unimodal f
    the minimizer is located to within ``tol``; multimodal input yields some
    local minimum, which is the caller's lookout.

    Returns
    -------
    (x_min, f_min)

    Raises
    ------
    ConvergenceError
        If the iteration budget is exhausted; carries the best iterate.
    """
    a, b = float(bracket[0]), float(bracket[1])
    if not a < b:
        raise InvalidInputError(f"bracket must satisfy a < b, got ({a}, {b})")
    res = optimize.minimize_scalar(
        f,
        bounds=(a, b),
        method="bounded",
        options={"xatol": tol * 0.5, "maxiter": max_iter},
    )
    if not res.success:
        raise ConvergenceError(
            f"scalar minimization did not converge in {max_iter} iterations",
            best=(float(res.x), float(res.fun)),
        )
    return float(res.x), float(res.fun)


def shortest_binomial_interval(n: int, zeta: float, level: float) -> tuple[int, int]:
    """Shortest integer interval with Binomial(n, zeta) mass at least ``level``.

    Among intervals ``i..j`` with ``sum_r C(n,r) zeta^r (1-zeta)^(n-r) >=
    level`` the one minimizing ``j - i`` is returned; ties are broken by
    larger covered mass, then smaller ``i``. Masses within 1e-12 of each
    other count as tied (symmetric cases are analytically equal but float
    summation order would otherwise pick arbitrarily).
    """
    if n < 1:
        raise InvalidInputError(f"n must be >= 1, got {n}")
    if not 0.0 < zeta < 1.0:
        raise InvalidInputError(f"zeta must lie in (0,1), got {zeta}")
    if not 0.0 < level < 1.0:
        raise InvalidInputError(f"level must lie in (0,1), got {level}")
    pmf = stats.binom.pmf(np.arange(n + 1), n, zeta)
    prefix = np.concatenate([[0.0], np.cumsum(pmf)])  # prefix[j+1] - prefix[i]
    for width in range(n + 1):
        i = np.arange(0, n - width + 1)
        mass = prefix[i + width + 1] - prefix[i]
        ok = mass >= level
        if np.any(ok):
            masses = np.where(ok, mass, -np.inf)
            best = int(np.argmax(masses >= masses.max() - 1e-12))
            return best, best + width
    return 0, n  # unreachable: the full interval has mass 1


def beta_order_statistic_quantile(t: int, T: int, p: float, tol: float = 1e-10) -> float:
    """Quantile of the t-th order statistic of T independent uniforms.

    That order statistic is Beta(t, T - t + 1); the quantile is found by
    bisection on the regularized incomplete beta function, to ``tol``.
    """
    if not 1 <= t <= T:
        raise InvalidInputError(f"need 1 <= t <= T, got t={t}, T={T}")
    if not 0.0 < p < 1.0:
        raise InvalidInputError(f"p must lie in (0,1), got {p}")
    a, b = float(t), float(T - t + 1)
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if special.betainc(a, b, mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class QpSolution:
    """Solution of the min-norm simplex QP with its KKT certificate."""

    theta: np.ndarray
    objective: float
    kkt: dict

    @property
    def max_kkt_residual(self) -> float:
        return max(self.kkt.values())


_CVX_OPTIONS = {
    "show_progress": False,
    "abstol": 1e-11,
    "reltol": 1e-11,
    "feastol": 1e-11,
    "maxiters": 200,
}


def _kkt_residuals(theta, z, y, G_all):
    """Stationarity / feasibility / complementarity residuals for the QP."""
    slack = G_all @ theta  # must be <= 0
    grad = 2.0 * theta + G_all.T @ z + y * np.ones_like(theta)
    return {
        "stationarity": float(np.max(np.abs(grad))),
        "primal_ineq": float(max(0.0, np.max(slack, initial=0.0))),
        "primal_eq": float(abs(np.sum(theta) - 1.0)),
        "dual": float(max(0.0, -np.min(z, initial=0.0))),
        "complementarity": float(np.max(np.abs(z * slack), initial=0.0)),
    }


def _phase1_max_violation(G: np.ndarray, K: int) -> tuple[float, np.ndarray]:
    """min over the simplex of max(G theta); > 0 certifies infeasibility."""
    rows = G.shape[0]
    # variables (theta, s): minimize s subject to G theta <= s, theta >= 0, sum = 1
    c = _cvxmatrix(np.concatenate([np.zeros(K), [1.0]]))
    G_lp = np.zeros((rows + K, K + 1))
    G_lp[:rows, :K] = G
    G_lp[:rows, K] = -1.0
    G_lp[rows:, :K] = -np.eye(K)
    h = np.zeros(rows + K)
    A = np.concatenate([np.ones(K), [0.0]]).reshape(1, -1)
    try:
        sol = _cvxsolvers.lp(
            c,
            _cvxmatrix(G_lp),
            _cvxmatrix(h),
            _cvxmatrix(A),
            _cvxmatrix(np.array([1.0])),
            options=_CVX_OPTIONS,
        )
    except (ValueError, ArithmeticError, ZeroDivisionError) as exc:
        raise ConvergenceError(f"phase-1 feasibility LP failed: {exc}") from exc
    if sol["x"] is None:
        raise ConvergenceError("phase-1 feasibility LP failed to solve")
    x = np.array(sol["x"]).ravel()
    return float(x[K]), x[:K]


def solve_min_norm_qp(G, K: int | None = None, tol: float = 1e-6) -> QpSolution:
    """Minimum-norm point of ``{theta >= 0, G theta <= 0, sum(theta) = 1}``.

    Parameters
    ----------
    G : array-like (rows, K) or None/empty
        Inequality rows; an empty system leaves only the simplex, whose
        min-norm point is the uniform vector.
    tol : float
        Ceiling for every KKT residual of the returned certificate.

    Raises
    ------
    InfeasibleProblemError
        When a phase-1 pass certifies the constraints admit no simplex point;
        the certificate records the best achievable max violation.
    ConvergenceError
        When the solver stalls on a feasible problem; carries residuals.
    """
    if G is None:
        if K is None:
            raise InvalidInputError("K is required when G is empty")
        G = np.empty((0, K))
    G = np.asarray(G, dtype=float)
    if G.ndim != 2:
        raise InvalidInputError(f"G must be 2-D, got shape {G.shape}")
    if K is None:
        K = G.shape[1]
    if G.shape[1] != K or K < 2:
        raise InvalidInputError(f"G has {G.shape[1]} columns, expected K={K} >= 2")
    if not np.all(np.isfinite(G)):
        raise InvalidInputError("G contains non-finite entries")

    G_all = np.vstack([G, -np.eye(K)])
    P = _cvxmatrix(2.0 * np.eye(K))
    q = _cvxmatrix(np.zeros(K))
    h = _cvxmatrix(np.zeros(G_all.shape[0]))
    A = _cvxmatrix(np.ones((1, K)))
    b = _cvxmatrix(np.array([1.0]))

    # the contract is the certificate, not the solver status: accept any
    # iterate whose KKT residuals clear the tolerance, retrying once with a
    # more forgiving configuration before classifying the system
    attempts = (
        dict(_CVX_OPTIONS),
        {**_CVX_OPTIONS, "abstol": 1e-9, "reltol": 1e-9, "feastol": 1e-9, "maxiters": 400},
    )
    best_kkt = None
    best_theta = None
    for attempt, options in enumerate(attempts):
        kwargs = {"options": options}
        if attempt == 1:
            kwargs["kktsolver"] = "ldl"
        try:
            sol = _cvxsolvers.qp(P, q, _cvxmatrix(G_all), h, A, b, **kwargs)
        except (ValueError, ArithmeticError, ZeroDivisionError):
            # interior-point scaling can blow up on (near-)infeasible systems;
            # classify via phase 1 below
            continue
        if sol["x"] is None or sol["z"] is None or sol["y"] is None:
            continue
        theta = np.array(sol["x"]).ravel()
        z = np.array(sol["z"]).ravel()
        y = float(np.array(sol["y"]).ravel()[0])
        if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(z)) and np.isfinite(y)):
            continue
        kkt = _kkt_residuals(theta, z, y, G_all)
        if max(kkt.values()) <= tol:
            return QpSolution(theta=theta, objective=float(theta @ theta), kkt=kkt)
        if best_kkt is None or max(kkt.values()) < max(best_kkt.values()):
            best_kkt, best_theta = kkt, theta

    max_violation, witness = _phase1_max_violation(G, K)
    if max_violation > tol:
        raise InfeasibleProblemError(
            f"constraint system infeasible: best simplex point still violates "
            f"G theta <= 0 by {max_violation:.3e}",
            certificate={"max_violation": max_violation, "witness": witness},
        )
    raise ConvergenceError(
        "QP solver stalled on a feasible problem",
        best=best_theta,
        residuals=best_kkt,
    )
