"""
Truncated Fourier representation of 2pi-periodic functions.

Conventions: u(x) = sum_n u_hat(n) e^{inx}, ||u||_{L^2} = sqrt(2 pi) ||u_hat||_{l^2},
and the free Schrodinger group acts by e^{-i n^2 t} on mode n.
"""

import math
from typing import Optional, Tuple, Union

import numpy as np

from strichartz.models import FourierVector, GridSamples, ParameterError

TWO_PI = 2.0 * math.pi


def scale(u: FourierVector, factor: complex) -> FourierVector:
    """Multiply every coefficient by a scalar."""
    return FourierVector(u.n_min, u.coeffs * factor)


def embed(u: FourierVector, n_min: int, width: int) -> FourierVector:
    """Restrict or zero-pad u to the window [n_min, n_min + width - 1]."""
    if width < 1:
        raise ParameterError("Window width must be >= 1")
    out = np.zeros(width, dtype=np.complex128)
    lo = max(n_min, u.n_min)
    hi = min(n_min + width - 1, u.n_max)
    if lo <= hi:
        out[lo - n_min : hi - n_min + 1] = u.coeffs[lo - u.n_min : hi - u.n_min + 1]
    return FourierVector(n_min, out)


def common_window(u: FourierVector, v: FourierVector) -> Tuple[int, int]:
    """Smallest window (n_min, width) containing both supports."""
    lo = min(u.n_min, v.n_min)
    hi = max(u.n_max, v.n_max)
    return lo, hi - lo + 1


def add(u: FourierVector, v: FourierVector, alpha: complex = 1.0) -> FourierVector:
    """u + alpha * v on the union window."""
    lo, width = common_window(u, v)
    return FourierVector(lo, embed(u, lo, width).coeffs + alpha * embed(v, lo, width).coeffs)


def real_inner(u: FourierVector, v: FourierVector) -> float:
    """The real L^2 pairing Re int u conj(v) dx = 2 pi Re sum u_hat conj(v_hat)."""
    lo, width = common_window(u, v)
    a = embed(u, lo, width).coeffs
    b = embed(v, lo, width).coeffs
    return float(TWO_PI * np.real(np.vdot(b, a)))


def l2_norm(u: FourierVector) -> float:
    """L^2(T) norm via Parseval."""
    return math.sqrt(TWO_PI * float(np.sum(np.abs(u.coeffs) ** 2)))


def lp_coeff_norm(u: FourierVector, p: Union[int, float, str]) -> float:
    """
    l^p norm of the coefficient sequence.

    Args:
        u: operand
        p: 1, 2, 4, or infinity (math.inf or the string "inf")

    Raises:
        ParameterError: for any other p
    """
    mags = np.abs(u.coeffs)
    if p in ("inf", math.inf):
        return float(np.max(mags))
    if p in (1, 2, 4):
        return float(np.sum(mags**p) ** (1.0 / p))
    raise ParameterError(f"Unsupported coefficient norm p={p!r}")


def h1_seminorm(u: FourierVector) -> float:
    """(sum n^2 |u_hat(n)|^2)^{1/2}."""
    n = u.indices.astype(np.float64)
    return math.sqrt(float(np.sum(n * n * np.abs(u.coeffs) ** 2)))


def _reduce_time(t: float) -> float:
    # T_t has period 2 pi; fmod is exact so t = 2 pi maps to 0.
    return math.fmod(float(t), TWO_PI)


def phase_factors(indices: np.ndarray, t: float) -> np.ndarray:
    """e^{-i n^2 t} for the given mode indices."""
    n = indices.astype(np.float64)
    return np.exp(-1j * n * n * _reduce_time(t))


def evolve(u: FourierVector, t: float) -> FourierVector:
    """Apply T_t: multiply mode n by e^{-i n^2 t}."""
    if not math.isfinite(t):
        raise ParameterError("Evolution time must be finite")
    return FourierVector(u.n_min, u.coeffs * phase_factors(u.indices, t))


def grid_exponentials(indices: np.ndarray, M: int, sign: int = 1) -> np.ndarray:
    """e^{sign i n x_j} on x_j = 2 pi j / M, shape (M, len(indices)).

    Phases are reduced mod M in integer arithmetic before exponentiation.
    """
    j = np.arange(M, dtype=np.int64)
    k = np.mod(np.outer(j, indices.astype(np.int64)), M)
    return np.exp(sign * 2j * math.pi * k / M)


def sample_on_grid(u: FourierVector, M: int, t: float = 0.0) -> GridSamples:
    """Values of T_t u at x_j = 2 pi j / M by direct summation over the support."""
    if M < 1:
        raise ParameterError("Grid size M must be >= 1")
    moved = u.coeffs * phase_factors(u.indices, t)
    return GridSamples(grid_exponentials(u.indices, M) @ moved, float(t))


def analyze_grid(samples: GridSamples, n_min: int, width: int) -> FourierVector:
    """
    Discrete Fourier analysis of grid samples onto the window [n_min, n_min + width - 1].

    Exact for trigonometric polynomials supported in the window when M >= width.
    """
    M = samples.size
    spectrum = np.fft.fft(samples.values) / M
    idx = np.mod(np.arange(n_min, n_min + width), M)
    return FourierVector(n_min, spectrum[idx])


def translate_phys(u: FourierVector, x0: float) -> FourierVector:
    """v(x) = u(x - x0): mode n picks up e^{-i n x0}."""
    n = u.indices.astype(np.float64)
    return FourierVector(u.n_min, u.coeffs * np.exp(-1j * n * float(x0)))


def translate_freq(u: FourierVector, m: int) -> FourierVector:
    """w_hat(n) = u_hat(n - m)."""
    return FourierVector(u.n_min + int(m), u.coeffs)


def trim(u: FourierVector) -> FourierVector:
    """Drop exactly-zero coefficients at both ends of the window."""
    nz = np.flatnonzero(u.coeffs)
    if nz.size == 0:
        return FourierVector(u.n_min, [0j])
    return FourierVector(u.n_min + int(nz[0]), u.coeffs[nz[0] : nz[-1] + 1])


def dilation_params(L: float) -> Tuple[float, float]:
    """(delta, B) = (L / 2 pi, (2 pi / L)^2) linking period L to the torus."""
    if not (math.isfinite(L) and L > 0):
        raise ParameterError("Period L must be positive")
    return L / TWO_PI, (TWO_PI / L) ** 2


def constant_unit() -> FourierVector:
    """The unit-norm constant function 1/sqrt(2 pi)."""
    return FourierVector(0, [1.0 / math.sqrt(TWO_PI)])


def random_vector(
    rng: np.random.Generator, width: int, n_min: int = 0, real: bool = False
) -> FourierVector:
    """Coefficients drawn uniformly from the complex unit disc (or [-1, 1] if real)."""
    if real:
        return FourierVector(n_min, rng.uniform(-1.0, 1.0, size=width))
    radius = np.sqrt(rng.uniform(0.0, 1.0, size=width))
    angle = rng.uniform(0.0, TWO_PI, size=width)
    return FourierVector(n_min, radius * np.exp(1j * angle))


def normalized(u: FourierVector, target_norm: float = 1.0) -> FourierVector:
    """u scaled to the given L^2 norm."""
    norm = l2_norm(u)
    if norm == 0.0:
        raise ParameterError("Cannot normalize the zero vector")
    return scale(u, target_norm / norm)


def mass_centroid(u: FourierVector) -> Optional[int]:
    """Mode index nearest the |u_hat|^2-weighted mean index (None for zero u)."""
    weights = np.abs(u.coeffs) ** 2
    total = float(np.sum(weights))
    if total == 0.0:
        return None
    return int(np.rint(float(np.sum(weights * u.indices)) / total))


def sample_many(u: FourierVector, M: int, times: np.ndarray) -> np.ndarray:
    """Rows of T_t u on the M-point grid, one row per time in `times`."""
    if M < 1:
        raise ParameterError("Grid size M must be >= 1")
    n = u.indices.astype(np.float64)
    times = np.mod(np.asarray(times, dtype=np.float64), TWO_PI)
    moved = u.coeffs[None, :] * np.exp(-1j * np.outer(times, n * n))
    return moved @ grid_exponentials(u.indices, M).T
