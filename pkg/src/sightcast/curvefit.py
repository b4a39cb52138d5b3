"""Bounded nonlinear least squares via Levenberg-Marquardt.

The engine follows the classical Marquardt schedule: damping starts at
1e-3, grows tenfold on a rejected step and shrinks tenfold on an accepted
one, with the damping term scaled by the diagonal of J'J. Box constraints
are enforced by projecting trial steps onto the box, so returned parameters
satisfy the bounds exactly. Derivatives come from central finite
differences; no analytic gradients are required.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .exceptions import InsufficientDataError, NumericError

DEFAULT_MAX_ITER = 200
DEFAULT_TOL = 1e-10

COND_LIMIT = 1e12

_LAMBDA_START = 1e-3
_LAMBDA_MIN = 1e-12
_LAMBDA_MAX = 1e12


@dataclass(frozen=True, eq=False)
class Bounds:
    """Per-parameter box constraints; entries may be +-inf."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError("lower and upper must be 1-d vectors of equal length")
        if np.any(lower > upper):
            raise ValueError("every lower bound must be <= its upper bound")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def unbounded(cls, n: int) -> "Bounds":
        return cls(np.full(n, -np.inf), np.full(n, np.inf))

    @classmethod
    def nonnegative(cls, n: int) -> "Bounds":
        return cls(np.zeros(n), np.full(n, np.inf))

    def clip(self, params: np.ndarray) -> np.ndarray:
        return np.clip(params, self.lower, self.upper)

    def contains(self, params: np.ndarray) -> bool:
        return bool(np.all(params >= self.lower) and np.all(params <= self.upper))


@dataclass(frozen=True, eq=False)
class ParametricModel:
    """A parametric curve y(params, t), vectorized over t."""

    arity: int
    evaluate: Callable

    def predict(self, params: np.ndarray, t) -> np.ndarray:
        return np.asarray(self.evaluate(np.asarray(params, dtype=float), t), dtype=float)


@dataclass(frozen=True, eq=False)
class FitResult:
    """Outcome of a least-squares fit.

    ``sse_path`` holds the objective after the initial guess and each
    accepted step, so monotonicity is checkable after the fact.
    ``covariance`` is the Gauss-Newton approximation sse/(n-p) * inv(J'J),
    omitted when J'J is ill-conditioned.
    """

    params: np.ndarray
    sse: float
    iterations: int
    converged: bool
    covariance: np.ndarray | None = None
    sse_path: np.ndarray | None = None


def _fd_step(value: float) -> float:
    return max(1e-6, 1e-6 * abs(value))


def numerical_jacobian(model: ParametricModel, params, t) -> np.ndarray:
    """Central-difference Jacobian of model predictions.

    Entry (j, i) approximates d evaluate(params, t[j]) / d params[i] using
    step max(1e-6, 1e-6 * |params[i]|).
    """
    params = np.asarray(params, dtype=float)
    if params.shape != (model.arity,):
        raise ValueError(f"expected {model.arity} parameters, got shape {params.shape}")
    if not np.all(np.isfinite(params)):
        raise ValueError("parameters must be finite")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    jac = np.empty((t.size, model.arity))
    for i in range(model.arity):
        h = _fd_step(params[i])
        bumped = params.copy()
        bumped[i] = params[i] + h
        hi = model.predict(bumped, t)
        bumped[i] = params[i] - h
        lo = model.predict(bumped, t)
        if not (np.all(np.isfinite(hi)) and np.all(np.isfinite(lo))):
            raise NumericError(f"model output not finite while differentiating parameter {i}")
        jac[:, i] = (hi - lo) / (2.0 * h)
    return jac


def _residual_jacobian(residual_fn, params: np.ndarray, n_resid: int) -> np.ndarray:
    jac = np.empty((n_resid, params.size))
    for i in range(params.size):
        h = _fd_step(params[i])
        bumped = params.copy()
        bumped[i] = params[i] + h
        hi = np.asarray(residual_fn(bumped), dtype=float)
        bumped[i] = params[i] - h
        lo = np.asarray(residual_fn(bumped), dtype=float)
        if not (np.all(np.isfinite(hi)) and np.all(np.isfinite(lo))):
            raise NumericError(f"residuals not finite while differentiating parameter {i}")
        jac[:, i] = (hi - lo) / (2.0 * h)
    return jac


def minimize_least_squares(
    residual_fn,
    p0,
    bounds: Bounds | None = None,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
) -> FitResult:
    """Minimize ||residual_fn(p)||^2 over the box, starting from p0.

    Accepts only improving steps, so the objective is non-increasing and the
    returned sse never exceeds sse(p0). Convergence means the relative sse
    decrease of an accepted step fell below ``tol`` or the gradient norm did.
    """
    # extreme trial steps overflow to inf/nan and are rejected by the sse
    # comparison below; the transient numpy warnings carry no information
    with np.errstate(over="ignore", invalid="ignore"):
        return _minimize_least_squares(residual_fn, p0, bounds, max_iter, tol)


def _minimize_least_squares(residual_fn, p0, bounds, max_iter, tol) -> FitResult:
    params = np.array(p0, dtype=float)
    if params.ndim != 1:
        raise ValueError("p0 must be a 1-d vector")
    if not np.all(np.isfinite(params)):
        raise NumericError("initial guess is not finite")
    if bounds is None:
        bounds = Bounds.unbounded(params.size)
    if not bounds.contains(params):
        raise ValueError("initial guess lies outside the bounds")

    resid = np.asarray(residual_fn(params), dtype=float)
    if not np.all(np.isfinite(resid)):
        raise NumericError("residuals are not finite at the initial guess")
    sse = float(resid @ resid)
    path = [sse]
    lam = _LAMBDA_START
    converged = sse == 0.0
    iterations = 0

    while iterations < max_iter and not converged:
        iterations += 1
        jac = _residual_jacobian(residual_fn, params, resid.size)
        grad = jac.T @ resid
        if np.max(np.abs(grad)) < tol:
            converged = True
            break
        jtj = jac.T @ jac
        damping = np.maximum(np.diag(jtj), _LAMBDA_MIN)

        accepted = False
        while lam <= _LAMBDA_MAX:
            try:
                step = np.linalg.solve(jtj + lam * np.diag(damping), -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = bounds.clip(params + step)
            trial_resid = np.asarray(residual_fn(trial), dtype=float)
            if np.all(np.isfinite(trial_resid)):
                trial_sse = float(trial_resid @ trial_resid)
                if trial_sse < sse:
                    relative_drop = (sse - trial_sse) / sse
                    params, resid, sse = trial, trial_resid, trial_sse
                    path.append(sse)
                    lam = max(lam / 10.0, _LAMBDA_MIN)
                    accepted = True
                    if sse == 0.0 or relative_drop < tol:
                        converged = True
                    break
            lam *= 10.0
        if not accepted:
            break  # stalled against the box or a flat surface

    return FitResult(
        params=params,
        sse=sse,
        iterations=iterations,
        converged=converged,
        covariance=None,
        sse_path=np.asarray(path),
    )


def _gauss_newton_covariance(model: ParametricModel, result: FitResult, t, n: int):
    jac = numerical_jacobian(model, result.params, t)
    jtj = jac.T @ jac
    if not np.all(np.isfinite(jtj)) or np.linalg.cond(jtj) > COND_LIMIT:
        return None
    scale = result.sse / (n - model.arity)
    cov = scale * np.linalg.inv(jtj)
    return (cov + cov.T) / 2.0


def levenberg_marquardt(
    model: ParametricModel,
    t,
    y,
    p0,
    bounds: Bounds | None = None,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
) -> FitResult:
    """Fit a parametric curve to (t, y) by damped least squares."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if t.shape != y.shape:
        raise ValueError(f"t and y must have equal length, got {t.size} and {y.size}")
    if y.size < model.arity + 1:
        raise InsufficientDataError(
            f"fitting {model.arity} parameters needs at least {model.arity + 1} points, got {y.size}"
        )
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(y))):
        raise NumericError("t and y must be finite")

    def residuals(params):
        return model.predict(params, t) - y

    result = minimize_least_squares(residuals, p0, bounds=bounds, max_iter=max_iter, tol=tol)
    return replace(result, covariance=_gauss_newton_covariance(model, result, t, y.size))
