"""Binary logit estimation by Newton-Raphson with inference statistics and rho-squared fit measures."""

import logging
from typing import Sequence

import numpy as np
from pydantic import BaseModel, root_validator
from scipy.special import expit, log_expit, xlogy
from scipy.stats import norm

from .exceptions import (
    CollinearDesignError,
    DesignMatrixError,
    QuasiSeparationError,
)
from .geo import check_recipe, derive_features
from .models import FusedObservation, LogitSpec

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 100
LL_TOLERANCE = 1e-12
MAX_HALVINGS = 30
SEPARATION_BOUND = 30.0


class DesignData(BaseModel):
    """Outcomes y (0/1) and design matrix X whose first column is the intercept."""

    y: np.ndarray
    X: np.ndarray
    feature_names: list[str]

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    @root_validator(skip_on_failure=True)
    def check_design(cls, values):
        y = np.asarray(values["y"], dtype=float)
        X = np.asarray(values["X"], dtype=float)
        names = values["feature_names"]
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise ValueError("X must be N x (K+1) and y must have N entries")
        if len(names) != X.shape[1]:
            raise ValueError("one feature name per design column is required")
        if not np.all(np.isin(y, (0.0, 1.0))):
            raise ValueError("outcomes must be 0 or 1")
        if not np.all(np.isfinite(X)):
            raise ValueError("the design matrix has non-finite entries")
        if not np.all(X[:, 0] == 1.0):
            raise ValueError("column 0 must be the intercept of ones")
        if X.shape[0] <= X.shape[1]:
            raise ValueError(
                f"need more observations ({X.shape[0]}) than parameters ({X.shape[1]})"
            )
        values["y"], values["X"] = y, X
        return values

    @property
    def n_obs(self) -> int:
        return self.X.shape[0]

    @property
    def n_params(self) -> int:
        return self.X.shape[1]


class LogitFit(BaseModel):
    """Estimates and fit statistics of one binary logit model; coefficient lists follow `feature_names`."""

    outcome_name: str
    feature_names: list[str]
    beta: list[float]
    std_errors: list[float]
    t_stats: list[float]
    p_values: list[float]
    ll: float
    ll_null: float
    ll_intercept: float
    rho_sq: float
    adjusted_rho_sq: float
    n_obs: int
    iterations: int
    converged: bool

    class Config:
        allow_mutation = False

    @property
    def n_params(self) -> int:
        return len(self.beta)


def predict_prob(beta: np.ndarray, x: np.ndarray) -> float:
    """Logistic probability exp(b.x) / (1 + exp(b.x)), saturating instead of overflowing."""
    beta, x = np.asarray(beta, dtype=float), np.asarray(x, dtype=float)
    if beta.shape != x.shape:
        raise DesignMatrixError("beta and x must have the same length")
    if not (np.all(np.isfinite(beta)) and np.all(np.isfinite(x))):
        raise DesignMatrixError("beta and x must be finite")
    return float(expit(beta @ x))


def log_likelihood(data: DesignData, beta: np.ndarray) -> float:
    """Bernoulli log-likelihood sum(y ln p + (1 - y) ln(1 - p)) evaluated through log-sigmoids."""
    eta = data.X @ beta
    return float(np.sum(data.y * log_expit(eta) + (1 - data.y) * log_expit(-eta)))


def gradient(data: DesignData, beta: np.ndarray) -> np.ndarray:
    """Score X^T (y - p)."""
    return data.X.T @ (data.y - expit(data.X @ beta))


def hessian(data: DesignData, beta: np.ndarray) -> np.ndarray:
    """-X^T W X with W = diag(p (1 - p))."""
    p = expit(data.X @ beta)
    return -(data.X.T * (p * (1 - p))) @ data.X


def null_log_likelihood(n_obs: int) -> float:
    """Log-likelihood of the all-zero-coefficient model (p = 0.5 everywhere): -N ln 2."""
    if n_obs < 1:
        raise ValueError("n_obs must be at least 1")
    return -n_obs * np.log(2.0)


def intercept_only_log_likelihood(y: np.ndarray) -> float:
    """Maximised log-likelihood of the intercept-only model, N (ybar ln ybar + (1 - ybar) ln(1 - ybar))."""
    y = np.asarray(y, dtype=float)
    share = y.mean()
    return float(len(y) * (xlogy(share, share) + xlogy(1 - share, 1 - share)))


def adjusted_rho_squared(ll: float, k_params: int, ll_null: float) -> float:
    """1 - (ll - k) / ll_null, with k counting every estimated coefficient including the constant."""
    if ll_null == 0:
        raise ValueError("ll_null must be negative")
    if k_params < 0:
        raise ValueError("k_params must be non-negative")
    return 1.0 - (ll - k_params) / ll_null


def fit(
    data: DesignData,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    outcome_name: str = "y",
) -> LogitFit:
    """
    Maximum-likelihood fit by Newton-Raphson from beta = 0.

    A step is halved (up to 30 times) whenever it would lower the log-likelihood.
    Iteration stops when max|gradient| < tol or the log-likelihood changes by less than 1e-12.
    Standard errors come from the inverse of the negative Hessian at the optimum.

    Parameters
    ----------
    data : DesignData
        Outcomes and design matrix.
    tol : float, optional
        Gradient tolerance, by default 1e-8.
    max_iter : int, optional
        Maximum number of Newton steps, by default 100. Hitting it returns a fit with converged=False.
    outcome_name : str, optional
        Label carried into the result.

    Returns
    -------
    LogitFit

    Raises
    ------
    CollinearDesignError
        The Hessian is singular.
    QuasiSeparationError
        A coefficient exceeded 30 in absolute value while iterating.
    """
    if np.linalg.matrix_rank(data.X) < data.n_params:
        raise CollinearDesignError("collinear design")

    beta = np.zeros(data.n_params)
    ll = log_likelihood(data, beta)
    converged = False
    iterations = 0

    for iterations in range(1, max_iter + 1):
        score = gradient(data, beta)
        if np.max(np.abs(score)) < tol:
            converged = True
            iterations -= 1
            break
        try:
            step = np.linalg.solve(-hessian(data, beta), score)
        except np.linalg.LinAlgError as exc:
            raise CollinearDesignError("collinear design") from exc

        step_size = 1.0
        for _ in range(MAX_HALVINGS + 1):
            candidate = beta + step_size * step
            candidate_ll = log_likelihood(data, candidate)
            if candidate_ll >= ll:
                break
            step_size /= 2
        else:
            logger.info("Step halving exhausted at iteration %d", iterations)
            break

        if np.any(np.abs(candidate) > SEPARATION_BOUND):
            raise QuasiSeparationError("quasi-separation detected")

        change = candidate_ll - ll
        beta, ll = candidate, candidate_ll
        if abs(change) < LL_TOLERANCE:
            converged = True
            break

    information = -hessian(data, beta)
    try:
        covariance = np.linalg.inv(information)
    except np.linalg.LinAlgError as exc:
        raise CollinearDesignError("collinear design") from exc
    variances = np.diag(covariance)
    if np.any(variances <= 0) or not np.all(np.isfinite(variances)):
        raise CollinearDesignError("collinear design")

    std_errors = np.sqrt(variances)
    t_stats = beta / std_errors
    ll_null = null_log_likelihood(data.n_obs)
    if not converged:
        logger.warning(
            "Logit for %s did not converge in %d iterations", outcome_name, max_iter
        )

    return LogitFit(
        outcome_name=outcome_name,
        feature_names=data.feature_names,
        beta=beta.tolist(),
        std_errors=std_errors.tolist(),
        t_stats=t_stats.tolist(),
        p_values=(2 * norm.sf(np.abs(t_stats))).tolist(),
        ll=ll,
        ll_null=ll_null,
        ll_intercept=intercept_only_log_likelihood(data.y),
        rho_sq=1.0 - ll / ll_null,
        adjusted_rho_sq=adjusted_rho_squared(ll, data.n_params, ll_null),
        n_obs=data.n_obs,
        iterations=iterations,
        converged=converged,
    )


def build_design(
    observations: Sequence[FusedObservation], spec: LogitSpec
) -> DesignData:
    """
    Builds y (category == spec.target_category) and X (intercept plus the recipe's features).

    Rank-deficient designs, including constant feature columns, are rejected.
    """
    check_recipe(spec.features)
    if not observations:
        raise DesignMatrixError(f"{spec.name}: no observations to model")

    y = np.array(
        [float(obs.category == spec.target_category) for obs in observations]
    )
    rows = [derive_features(obs, spec.features) for obs in observations]
    X = np.column_stack(
        [np.ones(len(observations))]
        + [np.array([row[f.name] for row in rows]) for f in spec.features]
    )

    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise CollinearDesignError(
            f"{spec.name}: collinear design (a feature is constant or a combination of others)"
        )
    try:
        return DesignData(y=y, X=X, feature_names=spec.feature_names)
    except ValueError as exc:
        raise DesignMatrixError(f"{spec.name}: {exc}") from exc


def fit_models(
    observations: Sequence[FusedObservation],
    specs: Sequence[LogitSpec],
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> dict[str, LogitFit]:
    """Fits every model in the given order; keys are the model names."""
    fits = {}
    for spec in specs:
        data = build_design(observations, spec)
        fits[spec.name] = fit(data, tol, max_iter, outcome_name=spec.outcome_name)
        logger.info(
            "Fitted %s: LL %.3f, adjusted rho-squared %.3f",
            spec.name,
            fits[spec.name].ll,
            fits[spec.name].adjusted_rho_sq,
        )
    return fits
