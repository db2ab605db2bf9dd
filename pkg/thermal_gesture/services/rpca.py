"""Robust PCA by Principal Component Pursuit with alternating directions"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from pydantic import Field, field_validator

from thermal_gesture.config.config import RunConfig
from thermal_gesture.config.settings import settings
from thermal_gesture.services.errors import RpcaError

logger = logging.getLogger(__name__)


class SvdConvergenceError(RpcaError):
    """Exception raised when the SVD iteration does not converge"""
    pass


class RpcaConfig(RunConfig):
    """Solver parameters; `None` means derive from the input matrix

    lam: sparsity weight, 1/sqrt(max(n1, n2)) when unset
    mu: initial augmented-Lagrangian parameter, n1*n2 / (4*||M||_1) when unset
    mu_growth: factor applied to mu after every iteration; the default 1.0
        keeps mu fixed, larger values trade accuracy for fewer iterations
    tol: stop once ||M - L - S||_F <= tol * ||M||_F
    """
    lam: Optional[float] = None
    mu: Optional[float] = None
    mu_growth: float = Field(default=1.0, ge=1.0)
    tol: float = Field(default=1e-7, gt=0.0)
    max_iter: int = Field(default=100, ge=1)

    @field_validator("lam", "mu")
    @classmethod
    def _positive(cls, value: Optional[float]) -> Optional[float]:
        if value is not None and value <= 0:
            raise ValueError("must be positive")
        return value

    @classmethod
    def from_settings(cls, **overrides) -> "RpcaConfig":
        values = {"lam": settings.RPCA_LAMBDA, "max_iter": settings.RPCA_MAX_ITER}
        values.update(overrides)
        return cls(**values)


@dataclass(frozen=True)
class RpcaResult:
    L: np.ndarray
    S: np.ndarray
    iterations: int
    converged: bool
    residual: float  # relative: ||M - L - S||_F / ||M||_F
    objective_first: float = 0.0
    objective_final: float = 0.0


def shrink(x, tau: float):
    """Elementwise soft threshold sign(x) * max(|x| - tau, 0)"""
    if tau < 0:
        raise RpcaError(f"Shrinkage threshold must be non-negative, got {tau}")
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)


def svd(M: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD with M = U diag(s) V^T

    The largest-magnitude entry of every column of U is made positive so
    the factors are reproducible.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise RpcaError(f"SVD needs a 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise RpcaError("SVD input holds non-finite values")
    try:
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as e:
        raise SvdConvergenceError(f"SVD did not converge on a {M.shape[0]}x{M.shape[1]} matrix: {e}")

    if U.size:
        pivots = np.argmax(np.abs(U), axis=0)
        signs = np.sign(U[pivots, np.arange(U.shape[1])])
        signs[signs == 0] = 1.0
        U = U * signs
        Vt = Vt * signs[:, None]
    return U, s, Vt.T


def _svt(M: np.ndarray, tau: float) -> Tuple[np.ndarray, np.ndarray]:
    U, s, V = svd(M)
    s = shrink(s, tau)
    rank = int(np.count_nonzero(s))
    return (U[:, :rank] * s[:rank]) @ V[:, :rank].T, s


def svt(M: np.ndarray, tau: float) -> np.ndarray:
    """Singular value thresholding U diag(shrink(s, tau)) V^T"""
    if tau < 0:
        raise RpcaError(f"SVT threshold must be non-negative, got {tau}")
    return _svt(M, tau)[0]


def pcp(M: np.ndarray, cfg: Optional[RpcaConfig] = None) -> RpcaResult:
    """Split M into low-rank L and sparse S

    Returns the iterate with the smallest residual; `converged` is False
    when max_iter ran out first.
    """
    cfg = cfg or RpcaConfig()
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.size == 0:
        raise RpcaError(f"R-PCA needs a non-empty 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise RpcaError("R-PCA input holds non-finite values")

    n1, n2 = M.shape
    lam = cfg.lam if cfg.lam is not None else 1.0 / np.sqrt(max(n1, n2))
    l1 = np.abs(M).sum()
    mu = cfg.mu if cfg.mu is not None else (n1 * n2 / (4.0 * l1) if l1 > 0 else 1.0)
    mu_max = mu * 1e7
    norm_m = np.linalg.norm(M, "fro")
    threshold = cfg.tol * norm_m

    S = np.zeros_like(M)
    Y = np.zeros_like(M)
    best = None
    objective_first = 0.0
    converged = False
    iterations = 0

    for iterations in range(1, cfg.max_iter + 1):
        L, sigma = _svt(M - S + Y / mu, 1.0 / mu)
        S = shrink(M - L + Y / mu, lam / mu)
        residual_matrix = M - L - S
        residual = np.linalg.norm(residual_matrix, "fro")
        objective = float(sigma.sum() + lam * np.abs(S).sum())
        if iterations == 1:
            objective_first = objective

        if best is None or residual <= best[2]:
            best = (L, S, residual, objective)
        if residual <= threshold:
            converged = True
            break

        Y = Y + mu * residual_matrix
        mu = min(mu * cfg.mu_growth, mu_max)

    L, S, residual, objective = best
    relative = float(residual / norm_m) if norm_m > 0 else float(residual)

    if not converged:
        logger.warning(
            f"R-PCA did not converge in {cfg.max_iter} iterations (relative residual {relative:.3e})"
        )
    else:
        logger.debug(f"R-PCA converged in {iterations} iterations (relative residual {relative:.3e})")
    if objective > objective_first * (1 + 1e-9) + 1e-12:
        logger.debug(
            f"R-PCA objective rose from {objective_first:.6g} to {objective:.6g}"
        )

    return RpcaResult(
        L=L,
        S=S,
        iterations=iterations,
        converged=converged,
        residual=relative,
        objective_first=objective_first,
        objective_final=objective,
    )
