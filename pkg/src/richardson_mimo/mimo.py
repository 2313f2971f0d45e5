"""Uplink channel model, real-valued conversion, MMSE filtering system and detectors.

Conventions (shared with :mod:`richardson_mimo.sim`):

* transmitted complex symbols have unit average energy;
* complex receiver noise has variance ``sigma2_c`` per antenna;
* in the real model each dimension carries symbol energy 1/2 and noise
  ``sigma2_c / 2``, so the MMSE regularizer (noise-to-symbol-energy ratio
  per real dimension) equals ``sigma2_c``. :class:`RealSystem` stores that
  regularizer as ``sigma2``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ConvergenceError, DimensionError, DomainError
from .linsolve import (
    SolveTrace,
    SpdMatrix,
    cholesky_solve,
    estimate_lambda_max,
    neumann_solve,
    richardson_solve,
)

AUTO_SAFETY = 0.9


@dataclass(frozen=True)
class ChannelMatrix:
    """Complex ``N x K`` flat-fading channel, one column per user."""

    entries: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.entries, dtype=np.complex128)
        if h.ndim != 2:
            raise DimensionError(f"channel must be 2-D, got shape {h.shape}")
        if not np.all(np.isfinite(h)):
            raise DomainError("channel has non-finite entries")
        object.__setattr__(self, "entries", h)

    @property
    def n_rx(self) -> int:
        return self.entries.shape[0]

    @property
    def n_users(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class RealSystem:
    h_real: np.ndarray
    y_real: np.ndarray
    sigma2: float = 0.0


@dataclass(frozen=True)
class FilteringSystem:
    """``W = H^T H + sigma2 I`` together with the matched-filter output ``H^T y``."""

    w_matrix: SpdMatrix
    y_matched: np.ndarray
    sigma2: float = 0.0

    @property
    def n(self) -> int:
        return self.w_matrix.n

    @property
    def gram(self) -> np.ndarray:
        return self.w_matrix.entries - self.sigma2 * np.eye(self.n)


def generate_channel(n_rx: int, n_users: int, rng_seed) -> ChannelMatrix:
    """I.i.d. Rayleigh channel with unit-variance complex entries.

    ``rng_seed`` is an integer seed or an existing ``numpy.random.Generator``.
    """
    if n_users < 1 or n_rx <= n_users:
        raise ConfigurationError(
            f"need n_rx > n_users >= 1, got n_rx={n_rx}, n_users={n_users}"
        )
    rng = np.random.default_rng(rng_seed)
    g = rng.standard_normal((n_rx, n_users, 2)) * np.sqrt(0.5)
    return ChannelMatrix(g[..., 0] + 1j * g[..., 1])


def realify(s) -> np.ndarray:
    """Stack real over imaginary parts along the first axis."""
    s = np.asarray(s)
    return np.concatenate([s.real, s.imag], axis=0).astype(np.float64)


def complexify(x) -> np.ndarray:
    """Inverse of :func:`realify`."""
    x = np.asarray(x, dtype=np.float64)
    half = x.shape[0] // 2
    return x[:half] + 1j * x[half:]


def complex_to_real(H: ChannelMatrix, y, sigma2: float = 0.0) -> RealSystem:
    """Map ``y = H s + n`` to the equivalent real model of twice the size.

    ``y`` may be a single received vector ``(N,)`` or a block ``(N, T)``.
    """
    h = H.entries if isinstance(H, ChannelMatrix) else np.asarray(H, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    if y.ndim not in (1, 2) or y.shape[0] != h.shape[0]:
        raise DimensionError(f"y has shape {y.shape}, channel has {h.shape[0]} rows")
    h_real = np.block([[h.real, -h.imag], [h.imag, h.real]])
    return RealSystem(h_real, realify(y), float(sigma2))


def build_filtering_system(sys: RealSystem) -> FilteringSystem:
    h = sys.h_real
    gram = h.T @ h
    w = gram + sys.sigma2 * np.eye(h.shape[1])
    return FilteringSystem(SpdMatrix.symmetrized(w), h.T @ sys.y_real, sys.sigma2)


def detect_exact(fs: FilteringSystem) -> np.ndarray:
    return cholesky_solve(fs.w_matrix, fs.y_matched)


def detect_richardson(
    fs: FilteringSystem, w: float, iters: int
) -> tuple[np.ndarray, SolveTrace]:
    """Richardson detection from the zero vector; returns the last iterate and the trace."""
    if iters < 1:
        raise DomainError("Richardson detection needs at least one iteration")
    trace = richardson_solve(fs.w_matrix, fs.y_matched, w, iters)
    return trace.solution, trace


def detect_neumann(fs: FilteringSystem, iters: int) -> tuple[np.ndarray, SolveTrace]:
    trace = neumann_solve(fs.w_matrix, fs.y_matched, iters)
    return trace.solution, trace


def auto_relaxation(
    fs: FilteringSystem, safety: float = AUTO_SAFETY, strict: bool = False
) -> float:
    """Relaxation parameter ``safety * 2 / lambda_max`` from a power-iteration estimate.

    An unconverged estimate raises :class:`ConvergenceError` when ``strict``
    and otherwise emits a ``RuntimeWarning`` and uses the best estimate.
    """
    if not 0 < safety <= 1:
        raise DomainError(f"safety must lie in (0, 1], got {safety}")
    est = estimate_lambda_max(fs.w_matrix)
    if not est.converged:
        msg = f"largest-eigenvalue estimate unconverged after {est.steps} steps"
        if strict:
            raise ConvergenceError(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return safety * 2.0 / est.value
