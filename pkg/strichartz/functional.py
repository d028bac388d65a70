"""
Evaluation of the Strichartz functional W_B and its building blocks.

W_B(u) = int_0^B int_T |T_t u|^4 dx dt is computed exactly from the quartic
coefficient sums a_{p,l}(u) and the averaged kernel b_{p,l}:

    W_B(u) = 2 pi B sum_{p,l} a_{p,l}(u) b_{p,l},

with an independent space-time quadrature oracle for cross-checking.
"""

import logging
import math
from functools import lru_cache
from typing import Tuple

import numpy as np

from strichartz.models import (
    ConsistencyError,
    DecompositionReport,
    FourierVector,
    ParameterError,
    QuadratureSpec,
)
from strichartz.spectral_core import TWO_PI, l2_norm, sample_many, scale

logger = logging.getLogger(__name__)

IMAG_TOLERANCE = 1e-10
DECOMPOSITION_TOLERANCE = 1e-10


def _check_B(B: float):
    if not (math.isfinite(B) and B > 0):
        raise ParameterError(f"B must be positive, got {B!r}")


def kernel_b(p: int, l: int, B: float) -> complex:
    """b_{p,l} = (1/B) int_0^B e^{-2 i l p t} dt in closed form."""
    _check_B(B)
    theta = l * p
    if theta == 0:
        return 1.0 + 0j
    z = 2j * theta * B
    return complex(-np.expm1(-z) / z)


def kernel_table(width: int, B: float) -> np.ndarray:
    """b_{p,l} for p, l in [-(W-1), W-1]; entry [p + W - 1, l + W - 1]."""
    _check_B(B)
    s = np.arange(-(width - 1), width, dtype=np.float64)
    theta = np.outer(s, s)
    z = 2j * theta * B
    safe = np.where(theta == 0, 1.0, z)
    return np.where(theta == 0, 1.0 + 0j, -np.expm1(-safe) / safe)


@lru_cache(maxsize=64)
def _quartic_indices(width: int) -> Tuple[int, np.ndarray, np.ndarray]:
    # Offsets into a zero-padded copy of the coefficients for k - l and k - p - l.
    off = 2 * width - 2
    k = np.arange(width)
    s = np.arange(-(width - 1), width)
    idx_shift = off + k[None, :] - s[:, None]
    idx_double = off + k[None, None, :] - s[:, None, None] - s[None, :, None]
    return off, idx_shift, idx_double


def quartic_table(coeffs: np.ndarray) -> np.ndarray:
    """
    All a_{p,l} for coefficient arrays of shape (..., W).

    Returns an array of shape (..., 2W - 1, 2W - 1) with a_{p,l} at
    [..., p + W - 1, l + W - 1]; a_{p,l} vanishes outside that window.
    """
    c = np.asarray(coeffs, dtype=np.complex128)
    width = c.shape[-1]
    off, idx_shift, idx_double = _quartic_indices(width)
    padded = np.zeros(c.shape[:-1] + (5 * width - 4,), dtype=np.complex128)
    padded[..., off : off + width] = c
    shifted = np.conj(padded[..., idx_shift])
    doubled = padded[..., idx_double]
    terms = (
        c[..., None, None, :]
        * shifted[..., None, :, :]
        * shifted[..., :, None, :]
        * doubled
    )
    return terms.sum(axis=-1)


def a_table(u: FourierVector) -> np.ndarray:
    """a_{p,l}(u) on the window |p|, |l| < W."""
    return quartic_table(u.coeffs)


def quartic_a(u: FourierVector, p: int, l: int) -> complex:
    """a_{p,l}(u) = sum_n u(n) conj(u(n-l)) conj(u(n-p)) u(n-p-l)."""
    W = u.width
    if abs(p) >= W or abs(l) >= W:
        return 0j
    return complex(a_table(u)[p + W - 1, l + W - 1])


def _real_part(value: complex, magnitude: float, what: str) -> float:
    if magnitude == 0.0:
        return 0.0
    if abs(value.imag) > IMAG_TOLERANCE * magnitude:
        raise ConsistencyError(
            f"{what}: imaginary residue {value.imag:.3e} exceeds tolerance "
            f"(scale {magnitude:.3e})"
        )
    return float(value.real)


def strichartz_W(u: FourierVector, B: float) -> float:
    """W_B(u) from the exact triple sum."""
    _check_B(B)
    A = a_table(u)
    total = complex(TWO_PI * B * np.sum(A * kernel_table(u.width, B)))
    return _real_part(total, TWO_PI * B * float(np.sum(np.abs(A))), "W_B")


def _offdiagonal_mask(width: int) -> np.ndarray:
    s = np.arange(-(width - 1), width)
    return (s[:, None] != 0) & (s[None, :] != 0)


def d_functional(u: FourierVector, B: float) -> float:
    """D_B(u): the part of the triple sum with l != 0 and p != 0."""
    _check_B(B)
    A = a_table(u)
    mask = _offdiagonal_mask(u.width)
    total = complex(TWO_PI * B * np.sum((A * kernel_table(u.width, B))[mask]))
    return _real_part(total, TWO_PI * B * float(np.sum(np.abs(A[mask]))), "D_B")


def _ell4_fourth(u: FourierVector) -> float:
    return float(np.sum(np.abs(u.coeffs) ** 4))


def _ell2_fourth(u: FourierVector) -> float:
    return float(np.sum(np.abs(u.coeffs) ** 2)) ** 2


def a_functional(u: FourierVector, B: float) -> float:
    """A_B(u) = D_B(u) / (2 pi B) - ||u_hat||_{l^4}^4."""
    _check_B(B)
    if u.is_zero():
        raise ParameterError("A_B is undefined for the zero vector")
    return d_functional(u, B) / (TWO_PI * B) - _ell4_fourth(u)


def _sinc(x: np.ndarray) -> np.ndarray:
    # sin(x)/x; numpy's sinc is normalized by pi
    return np.sinc(np.asarray(x) / math.pi)


def a_functional_real(u: FourierVector, B: float) -> float:
    """
    A_B(u) for real coefficients:

        4 sum_p a_{p,p} sinc(2 p^2 B) + 8 sum_{p>l>=1} a_{p,l} sinc(2 p l B) - a_{0,0}

    Raises:
        ParameterError: if any coefficient has a nonzero imaginary part, or u = 0
    """
    _check_B(B)
    if not u.is_real():
        raise ParameterError("a_functional_real needs real coefficients")
    if u.is_zero():
        raise ParameterError("A_B is undefined for the zero vector")
    W = u.width
    A = a_table(u).real
    if W == 1:
        return -float(A[0, 0])
    pos = np.arange(1, W)
    block = A[W:, W:]
    theta = np.outer(pos, pos).astype(np.float64)
    weights = _sinc(2.0 * theta * B)
    diagonal = 4.0 * float(np.sum(np.diag(block) * np.diag(weights)))
    lower = np.tril(np.ones_like(theta, dtype=bool), k=-1)
    off = 8.0 * float(np.sum((block * weights)[lower]))
    return diagonal + off - float(A[W - 1, W - 1])


def a_functional_folded(u: FourierVector, B: float) -> float:
    """A_B(u) = 4 Re(sum_p a_pp b_pp + 2 sum_{p>l>=1} a_pl b_pl) - a_00 for complex u."""
    _check_B(B)
    if u.is_zero():
        raise ParameterError("A_B is undefined for the zero vector")
    W = u.width
    A = a_table(u)
    if W == 1:
        return -float(A[0, 0].real)
    prod = (A * kernel_table(W, B))[W:, W:]
    lower = np.tril(np.ones(prod.shape, dtype=bool), k=-1)
    folded = np.trace(prod) + 2.0 * np.sum(prod[lower])
    return 4.0 * float(folded.real) - float(A[W - 1, W - 1].real)


def g_functional(u: FourierVector, B: float) -> float:
    """G_B(u) = sum |u(n) u(n-l) u(n-p) u(n-p-l)| / (1 + |lp| B)."""
    _check_B(B)
    W = u.width
    A = quartic_table(np.abs(u.coeffs)).real
    s = np.arange(-(W - 1), W, dtype=np.float64)
    return float(np.sum(A / (1.0 + np.abs(np.outer(s, s)) * B)))


def decomposition(u: FourierVector, B: float) -> DecompositionReport:
    """W_B = 4 pi B ||u||_2^4 - 2 pi B ||u||_4^4 + D_B, checked against strichartz_W."""
    _check_B(B)
    mass_term = 2.0 * TWO_PI * B * _ell2_fourth(u)
    ell4_term = -TWO_PI * B * _ell4_fourth(u)
    d_term = d_functional(u, B)
    total = mass_term + ell4_term + d_term
    direct = strichartz_W(u, B)
    if abs(total - direct) > DECOMPOSITION_TOLERANCE * max(abs(direct), 1e-300):
        raise ConsistencyError(
            f"Decomposition total {total!r} disagrees with W_B {direct!r}"
        )
    return DecompositionReport(mass_term, ell4_term, d_term, total)


def gauss_legendre_nodes(
    a: float, b: float, panels: int, order: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the composite Gauss-Legendre rule on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def strichartz_W_oracle(u: FourierVector, B: float, q: QuadratureSpec) -> float:
    """
    W_B(u) by space-time quadrature.

    Trapezoid in x on M = q.grid_size(W) points (exact for |T_t u|^4 once
    M > 2(W - 1)), composite Gauss-Legendre in t.
    """
    _check_B(B)
    M = q.grid_size(u.width)
    nodes, weights = gauss_legendre_nodes(0.0, B, q.time_panels, q.gauss_order)
    values = sample_many(u, M, nodes)
    x_integrals = (TWO_PI / M) * np.sum(np.abs(values) ** 4, axis=1)
    return float(np.dot(weights, x_integrals))


def lower_bound(B: float) -> float:
    """min of W_B on the unit sphere, attained at the constant."""
    _check_B(B)
    return B / TWO_PI


def vanishing_level(B: float) -> float:
    """B/pi: the limit of W_B along vanishing unit-norm sequences."""
    _check_B(B)
    return B / math.pi


def sphere_value(u: FourierVector, B: float, lam: float = 1.0) -> float:
    """W_B of u rescaled to ||u||^2 = lam (so J_{B,lam} = lam^2 J_{B,1})."""
    if lam <= 0:
        raise ParameterError("lam must be positive")
    norm = l2_norm(u)
    if norm == 0.0:
        raise ParameterError("Cannot rescale the zero vector")
    return strichartz_W(scale(u, math.sqrt(lam) / norm), B)
