"""Solvers and spectral tools for symmetric positive definite systems ``A x = b``.

Every solver works on a single right-hand side of shape ``(n,)`` or on a block
of right-hand sides of shape ``(n, m)``; the block form is what the link
simulator uses to equalize a whole frame that shares one channel.

Multiplication counts are real multiplications of the detection arithmetic.
Divisions producing a diagonal reciprocal are not counted, and neither is
the diagnostic work that fills ``SolveTrace.residual_norms``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.linalg import solve_triangular

from .errors import (
    DimensionError,
    DomainError,
    FactorizationError,
    PreconditionerError,
    UnsupportedRowError,
)

# relative pivot threshold used when no explicit tolerance is given
PIVOT_RTOL = 1e-10
POWER_TOL = 1e-6
POWER_MAX_STEPS = 500

METHODS = ("richardson", "neumann", "exact")


@dataclass(frozen=True)
class SpdMatrix:
    """Square real matrix whose symmetry is checked bit-exactly on construction.

    Positive definiteness is not verified here (it costs a factorization);
    call :func:`is_spd` when it matters.
    """

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {a.shape}")
        if not np.array_equal(a, a.T):
            raise DomainError("matrix is not exactly symmetric")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.entries
        return self.entries.astype(dtype)

    @classmethod
    def symmetrized(cls, a) -> "SpdMatrix":
        """Build from ``(a + a.T) / 2``, which is exactly symmetric in floating point."""
        a = np.asarray(a, dtype=np.float64)
        return cls(0.5 * (a + a.T))


@dataclass
class SolveTrace:
    """Iterates ``x^(0) .. x^(i)`` with residual norms and the multiplication tally."""

    iterates: list[np.ndarray] = field(default_factory=list)
    residual_norms: list[float] = field(default_factory=list)
    mult_count: int = 0

    @property
    def solution(self) -> np.ndarray:
        return self.iterates[-1]

    @property
    def iterations(self) -> int:
        return len(self.iterates) - 1


class LambdaEstimate(NamedTuple):
    value: float
    converged: bool
    steps: int


def _square(A) -> np.ndarray:
    a = np.asarray(A, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    return a


def _rhs(b, n: int, name: str = "b") -> np.ndarray:
    v = np.asarray(b, dtype=np.float64)
    if v.ndim not in (1, 2) or v.shape[0] != n:
        raise DimensionError(f"{name} has shape {v.shape}, expected ({n},) or ({n}, m)")
    return v


def _columns(v: np.ndarray) -> int:
    return 1 if v.ndim == 1 else v.shape[1]


def _cholesky(a: np.ndarray, pivot_tol: float) -> np.ndarray:
    """Left-looking Cholesky; raises on the first pivot not exceeding ``pivot_tol``."""
    n = a.shape[0]
    L = np.zeros_like(a)
    for j in range(n):
        row = L[j, :j]
        pivot = a[j, j] - row @ row
        if not pivot > pivot_tol:
            raise FactorizationError(j, float(pivot))
        d = math.sqrt(pivot)
        L[j, j] = d
        L[j + 1 :, j] = (a[j + 1 :, j] - L[j + 1 :, :j] @ row) / d
    return L


def is_spd(A, tol: float = 0.0) -> bool:
    """True iff ``A`` is symmetric within ``tol`` and every Cholesky pivot exceeds ``tol``."""
    if tol < 0:
        raise DomainError("tol must be non-negative")
    a = _square(A)
    if not np.all(np.isfinite(a)):
        return False
    if np.max(np.abs(a - a.T), initial=0.0) > tol:
        return False
    try:
        _cholesky(a, tol)
    except FactorizationError:
        return False
    return True


def cholesky_solve(A, b) -> np.ndarray:
    """Exact solve via Cholesky factorization and two triangular substitutions.

    Raises:
        FactorizationError: a pivot is not above ``1e-10 * max|A|``; the
            exception carries the failing index.
    """
    a = _square(A)
    v = _rhs(b, a.shape[0])
    L = _cholesky(a, PIVOT_RTOL * np.max(np.abs(a), initial=0.0))
    z = solve_triangular(L, v, lower=True, check_finite=False)
    return solve_triangular(L.T, z, lower=False, check_finite=False)


def richardson_solve(A, b, w: float, iters: int, x0=None) -> SolveTrace:
    """Run ``iters`` Richardson steps ``x <- x + w (b - A x)`` from ``x0`` (zero by default).

    Divergence is recorded in the trace, never raised. Each step costs
    ``n**2 + n`` multiplications per right-hand side.
    """
    a = _square(A)
    n = a.shape[0]
    v = _rhs(b, n)
    if iters < 0:
        raise DomainError("iters must be non-negative")
    if not w > 0:
        raise DomainError(f"relaxation parameter must be positive, got {w}")
    x = np.zeros_like(v) if x0 is None else _rhs(x0, n, "x0").astype(np.float64, copy=True)
    if x.shape != v.shape:
        raise DimensionError(f"x0 shape {x.shape} does not match b shape {v.shape}")

    cols = _columns(v)
    trace = SolveTrace()
    trace.iterates.append(x)
    for _ in range(iters):
        r = v - a @ x
        trace.residual_norms.append(float(np.linalg.norm(r)))
        x = x + w * r
        trace.mult_count += (n * n + n) * cols
        trace.iterates.append(x)
    trace.residual_norms.append(float(np.linalg.norm(v - a @ x)))
    return trace


def neumann_solve(A, b, iters: int) -> SolveTrace:
    """Truncated Neumann series about the diagonal splitting ``X = diag(A)``.

    The approximate inverse ``sum_{m<iters} (-X^-1 E)^m X^-1`` (with
    ``E = A - X``) is materialized and then applied to ``b``. The series
    terms ``T_m = (X^-1 E)^m X^-1`` obey ``T_{m+1} = (X^-1 E) T_m``, so order
    three and above need one dense matrix product each.

    Multiplications are charged per the tabulated cost model: ``n(n-1)`` for
    ``X^-1 E``, ``n(n-1)`` for ``T_1`` (both hollow), ``n(n-1)**2`` per dense
    product, ``n**2`` per applied column. From ``T_3`` on the factor ``T_m``
    carries a diagonal whose extra ``n(n-1)`` column scaling the model
    ignores; the counter follows the model.

    ``iterates[k]`` is the ``k``-term partial sum applied to ``b`` (a
    diagnostic, not charged).
    """
    a = _square(A)
    n = a.shape[0]
    v = _rhs(b, n)
    if iters < 1:
        raise DomainError("Neumann series needs at least one term")
    diag = np.diag(a).copy()
    if not np.all(diag > 0):
        raise PreconditionerError(f"diagonal entry {int(np.argmin(diag))} is not positive")

    cols = _columns(v)
    inv_d = 1.0 / diag
    scale = inv_d if v.ndim == 1 else inv_d[:, None]
    trace = SolveTrace()
    partial = np.zeros_like(v)
    trace.iterates.append(partial)
    partial = partial + scale * v
    trace.iterates.append(partial)

    if iters == 1:
        trace.mult_count = n * cols
    else:
        hollow = a - np.diag(diag)
        m = inv_d[:, None] * hollow
        term = m * inv_d[None, :]
        mults = 2 * n * (n - 1)
        approx = np.diag(inv_d) - term
        partial = partial - term @ v
        trace.iterates.append(partial)
        sign = -1.0
        for _ in range(2, iters):
            term = m @ term
            mults += n * (n - 1) ** 2
            sign = -sign
            approx += sign * term
            partial = partial + sign * (term @ v)
            trace.iterates.append(partial)
        x = approx @ v
        mults += n * n * cols
        # the applied approximate inverse is authoritative for the final iterate
        trace.iterates[-1] = x
        trace.mult_count = mults

    trace.residual_norms = [float(np.linalg.norm(v - a @ x)) for x in trace.iterates]
    return trace


def estimate_lambda_max(
    A, tol: float = POWER_TOL, max_steps: int = POWER_MAX_STEPS
) -> LambdaEstimate:
    """Power iteration from the normalized all-ones vector.

    Returns the Rayleigh quotient once its relative change between two steps
    drops below ``tol``. For symmetric ``A`` the estimate never exceeds the
    true largest eigenvalue. A seed orthogonal to the top eigenvector stalls
    on a lower eigenvalue; random SPD matrices essentially never do that.
    """
    a = _square(A)
    if not tol > 0 or max_steps < 1:
        raise DomainError("tol must be positive and max_steps at least 1")
    n = a.shape[0]
    v = np.full(n, 1.0 / math.sqrt(n))
    prev = None
    lam = 0.0
    for step in range(1, max_steps + 1):
        av = a @ v
        lam = float(v @ av)
        if prev is not None and abs(lam - prev) < tol * abs(lam):
            return LambdaEstimate(lam, True, step)
        prev = lam
        norm = np.linalg.norm(av)
        if norm == 0.0:
            return LambdaEstimate(lam, False, step)
        v = av / norm
    return LambdaEstimate(lam, False, max_steps)


def convergence_interval(lambda_max: float) -> tuple[float, float]:
    """Open interval ``(0, 2 / lambda_max)`` of relaxation parameters that converge."""
    if not lambda_max > 0:
        raise DomainError(f"lambda_max must be positive, got {lambda_max}")
    return 0.0, 2.0 / lambda_max


def spectral_radius_of_iteration_matrix(A, w: float) -> float:
    """``max |1 - w * lambda_n|`` over the full spectrum of ``A`` (dense eigensolve)."""
    lam = np.linalg.eigvalsh(_square(A))
    return float(np.max(np.abs(1.0 - w * lam)))


def _neumann_row(K: int, iters: int) -> int:
    rows = {
        2: 12 * K**2 - 4 * K,
        3: 8 * K**3 + 4 * K**2 - 2 * K,
        4: 16 * K**3 - 4 * K**2,
        5: 24 * K**3 - 12 * K**2 + 2 * K,
    }
    if iters not in rows:
        raise UnsupportedRowError(f"no tabulated Neumann count for {iters} iterations")
    return rows[iters]


def _cholesky_count(n: int) -> int:
    # factorization: sum_j j(n-j) products + n(n-1)/2 scalings by 1/L_jj
    # two substitutions: n(n-1) products + 2n scalings
    return (n**3 - n) // 6 + n * (n - 1) // 2 + n * n + n


def count_multiplications(method: str, K: int, iters: int) -> int:
    """Closed-form real multiplications per detection for ``K`` users (dimension ``2K``).

    ``exact`` ignores ``iters`` and counts a Cholesky factorization plus
    two triangular solves, divisions by pivots included.
    """
    if K < 1:
        raise DomainError("K must be at least 1")
    if method == "richardson":
        if iters < 1:
            raise DomainError("iters must be positive")
        return iters * (4 * K * K + 2 * K)
    if method == "neumann":
        return _neumann_row(K, iters)
    if method == "exact":
        return _cholesky_count(2 * K)
    raise DomainError(f"unknown method {method!r}; expected one of {METHODS}")
