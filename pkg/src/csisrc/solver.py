"""Complex-valued l1 minimisation (basis pursuit denoising) and
per-class residuals.

The ADMM iteration lives in a compiled extension (``_solver_core``) with
a pure-NumPy twin (``_solver_py``); whichever is available is selected at
import, overridable through the CSISRC_SOLVER environment variable
("compiled" or "python").
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor

from .model import CoefficientVector, CsiVector, Dictionary, DimensionError
from . import _solver_py

try:
    from . import _solver_core
except ImportError:  # pragma: no cover - depends on the build
    _solver_core = None


def _select_backend():
    forced = os.environ.get("CSISRC_SOLVER", "").strip().lower()
    if forced == "python":
        return "python", _solver_py.admm_bpdn
    if forced == "compiled":
        if _solver_core is None:
            raise ImportError(
                "CSISRC_SOLVER=compiled but the extension is not built")
        return "compiled", _solver_core.admm_bpdn
    if _solver_core is not None:
        return "compiled", _solver_core.admm_bpdn
    return "python", _solver_py.admm_bpdn


BACKEND, _admm = _select_backend()


@dataclass(frozen=True)
class SolverConfig:
    """BPDN solve parameters; epsilon=None means epsilon_scale * ||y||_2."""

    epsilon: float | None = None
    epsilon_scale: float = 0.1
    max_iters: int = 2000
    tol: float = 1e-6
    rho: float = 1.0

    def __post_init__(self):
        if self.epsilon is not None and self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.epsilon_scale <= 0:
            raise ValueError("epsilon_scale must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol <= 0 or self.rho <= 0:
            raise ValueError("tol and rho must be > 0")

    def resolve_epsilon(self, y: np.ndarray) -> float:
        if self.epsilon is not None:
            return self.epsilon
        return self.epsilon_scale * float(np.linalg.norm(y))


@dataclass(frozen=True, eq=False)
class SolveResult:
    x_hat: CoefficientVector
    iterations: int
    residual_norm: float
    converged: bool


def _factorization(D: Dictionary):
    """Cached lower Cholesky factor of I_m + D D^H and D^H."""
    cache = getattr(D, "_solver_cache", None)
    if cache is None:
        # writable copies: the compiled kernel takes non-const memoryviews
        atoms = np.array(D.atoms, dtype=np.complex128, order="C")
        Dh = np.ascontiguousarray(atoms.conj().T)
        gram = np.eye(D.n_rows, dtype=np.complex128) + atoms @ atoms.conj().T
        chol, _ = cho_factor(gram, lower=True)
        chol = np.ascontiguousarray(np.tril(chol))
        cache = (atoms, Dh, chol)
        object.__setattr__(D, "_solver_cache", cache)
    return cache


def _polish_feasibility(atoms, z, y, eps):
    """Scale a least-squares step on the support of z so the residual
    lands on the eps-ball boundary. Leaves z unchanged when already
    feasible or when the support cannot reach the ball."""
    residual = y - atoms @ z
    r_norm = np.linalg.norm(residual)
    if r_norm <= eps or eps <= 0.0:
        return z
    support = np.flatnonzero(np.abs(z) > 0)
    if len(support) == 0:
        return z
    sub = atoms[:, support]
    step, *_ = np.linalg.lstsq(sub, residual, rcond=None)
    proj = sub @ step
    p = float(np.real(np.vdot(proj, proj)))
    if p <= 0.0:
        return z
    target = eps * (1.0 - 1e-12)
    disc = (p - r_norm ** 2 + target ** 2) / p
    if disc < 0.0:
        t = 1.0  # full step; support cannot reach the ball
    else:
        t = 1.0 - np.sqrt(disc)
    z = z.copy()
    z[support] += t * step
    return z


def solve_bpdn(D: Dictionary, y: CsiVector | np.ndarray,
               cfg: SolverConfig = SolverConfig()) -> SolveResult:
    """min ||x||_1 subject to ||y - D x||_2 <= eps, complex-valued."""
    y_vec = y.values if isinstance(y, CsiVector) else np.asarray(y)
    y_vec = np.array(y_vec, dtype=np.complex128, order="C")
    if y_vec.ndim != 1 or len(y_vec) != D.n_rows:
        raise DimensionError(
            f"y length {y_vec.shape} != dictionary rows {D.n_rows}")
    if D.n_columns < 1:
        raise DimensionError("dictionary has no columns")
    eps = cfg.resolve_epsilon(y_vec)
    atoms, Dh, chol = _factorization(D)
    z, iters, converged = _admm(atoms, Dh, chol, y_vec, eps, cfg.rho,
                                cfg.max_iters, cfg.tol)
    z = np.asarray(z)
    z = _polish_feasibility(atoms, z, y_vec, eps)
    residual_norm = float(np.linalg.norm(y_vec - atoms @ z))
    feasible = residual_norm <= eps * (1.0 + cfg.tol) + 1e-14
    return SolveResult(
        x_hat=CoefficientVector(coeffs=z),
        iterations=int(iters),
        residual_norm=residual_norm,
        converged=bool(converged) and feasible,
    )


def class_residuals(D: Dictionary, y: CsiVector | np.ndarray,
                    x_hat: CoefficientVector | np.ndarray) -> np.ndarray:
    """||y - D masked(x)||_2 per class, masking coefficients outside the
    class's column range. Order follows the dictionary's class offsets."""
    y_vec = y.values if isinstance(y, CsiVector) else np.asarray(y)
    coeffs = (x_hat.coeffs if isinstance(x_hat, CoefficientVector)
              else np.asarray(x_hat, dtype=np.complex128))
    if len(coeffs) != D.n_columns:
        raise DimensionError(
            f"coefficient length {len(coeffs)} != columns {D.n_columns}")
    if len(y_vec) != D.n_rows:
        raise DimensionError(
            f"y length {len(y_vec)} != dictionary rows {D.n_rows}")
    out = np.empty(len(D.class_offsets))
    for c, (_, start, count) in enumerate(D.class_offsets):
        block = D.atoms[:, start:start + count] @ coeffs[start:start + count]
        out[c] = np.linalg.norm(y_vec - block)
    return out
