"""
Gradients of W_B, projected ascent on the unit L^2 sphere, the four test
families and the threshold search for the existence criterion A_B > 0.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, TypeVar

import numpy as np
from scipy import ndimage, optimize

from strichartz.functional import (
    _check_B,
    _offdiagonal_mask,
    gauss_legendre_nodes,
    kernel_table,
    quartic_table,
    strichartz_W,
)
from strichartz.models import (
    FAMILY_ARITY,
    AscentConfig,
    FamilyPoint,
    FourierVector,
    OptResult,
    ParameterError,
    QuadratureSpec,
    ThresholdNotFoundError,
    ThresholdScan,
)
from strichartz.spectral_core import (
    TWO_PI,
    add,
    embed,
    l2_norm,
    mass_centroid,
    real_inner,
    sample_many,
    scale,
    translate_freq,
)

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

SQRT2_OVER_2 = math.sqrt(2.0) / 2.0


def map_ordered(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> List[R]:
    """Apply fn to items, in parallel if workers > 1, keeping input order."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _target_window(
    u: FourierVector, n_min: Optional[int], width: Optional[int]
) -> Tuple[int, int]:
    if n_min is None or width is None:
        return u.n_min, u.width
    if width < 1:
        raise ParameterError("Gradient window width must be >= 1")
    return int(n_min), int(width)


def grad_W_spectral(
    u: FourierVector, B: float, n_min: Optional[int] = None, width: Optional[int] = None
) -> FourierVector:
    """
    L^2 gradient of W_B at u, restricted to a coefficient window.

    g_hat(m) = 4 B sum_{p,l} b_{p,l} u(m+p) conj(u(m+p-l)) u(m-l), so that
    <g, h> = d/de W_B(u + e h) for every h supported in the window. The window
    defaults to the support window of u.
    """
    _check_B(B)
    t_lo, t_width = _target_window(u, n_min, width)
    lo = min(u.n_min, t_lo)
    hi = max(u.n_max, t_lo + t_width - 1)
    Wc = hi - lo + 1
    c = embed(u, lo, Wc).coeffs

    off = 2 * Wc - 2
    padded = np.zeros(5 * Wc - 4, dtype=np.complex128)
    padded[off : off + Wc] = c
    k = np.arange(Wc)
    s = np.arange(-(Wc - 1), Wc)
    first = padded[off + k[None, :] + s[:, None]]
    middle = np.conj(padded[off + k[None, None, :] + s[:, None, None] - s[None, :, None]])
    last = padded[off + k[None, :] - s[:, None]]
    b = kernel_table(Wc, B)
    terms = b[:, :, None] * first[:, None, :] * middle * last[None, :, :]
    g = 4.0 * B * terms.sum(axis=(0, 1))
    return embed(FourierVector(lo, g), t_lo, t_width)


def grad_W_quadrature(
    u: FourierVector,
    B: float,
    q: QuadratureSpec,
    n_min: Optional[int] = None,
    width: Optional[int] = None,
) -> FourierVector:
    """
    Gradient of W_B as 4 int_0^B T_{-t}(|T_t u|^2 T_t u) dt.

    Each Gauss node samples T_t u on a grid, applies the cubic nonlinearity,
    analyses back to coefficients and evolves backwards.
    """
    _check_B(B)
    t_lo, t_width = _target_window(u, n_min, width)
    # |v|^2 v lives on [2a - b, 2b - a]; the grid must not alias it onto the window
    span_lo = min(2 * u.n_min - u.n_max, t_lo)
    span_hi = max(2 * u.n_max - u.n_min, t_lo + t_width - 1)
    M = max(q.grid_size(u.width), span_hi - span_lo + 1)

    nodes, weights = gauss_legendre_nodes(0.0, B, q.time_panels, q.gauss_order)
    values = sample_many(u, M, nodes)
    cubic = np.abs(values) ** 2 * values
    spectrum = np.fft.fft(cubic, axis=1) / M
    modes = np.arange(t_lo, t_lo + t_width)
    picked = spectrum[:, np.mod(modes, M)]
    n2 = modes.astype(np.float64) ** 2
    back = np.exp(1j * np.outer(np.mod(nodes, TWO_PI), n2))
    g = 4.0 * np.sum(weights[:, None] * back * picked, axis=0)
    return FourierVector(t_lo, g)


def project_sphere(u: FourierVector, target_norm: float = 1.0) -> FourierVector:
    """Scale u onto the sphere ||u||_{L^2} = target_norm."""
    if target_norm <= 0:
        raise ParameterError("target_norm must be positive")
    norm = l2_norm(u)
    if norm == 0.0:
        raise ParameterError("Cannot project the zero vector onto the sphere")
    return scale(u, target_norm / norm)


def tangent_component(g: FourierVector, u: FourierVector) -> FourierVector:
    """g minus its radial part along u."""
    return add(g, u, -real_inner(g, u) / real_inner(u, u))


def _ascend(u: FourierVector, B: float, cfg: AscentConfig) -> OptResult:
    norm = l2_norm(u)
    value = strichartz_W(u, B)
    trace = [(0, value)]
    converged = False
    gnorm = float("inf")
    iteration = 0

    for iteration in range(1, cfg.max_iters + 1):
        direction = tangent_component(grad_W_spectral(u, B), u)
        gnorm = math.sqrt(real_inner(direction, direction))
        if gnorm <= cfg.grad_tol:
            converged = True
            iteration -= 1
            break

        alpha = cfg.step_init
        accepted = False
        while alpha > 1e-14 * cfg.step_init:
            candidate = project_sphere(add(u, direction, alpha), norm)
            cand_value = strichartz_W(candidate, B)
            if cand_value >= value + cfg.armijo * alpha * gnorm * gnorm:
                accepted = True
                break
            alpha *= cfg.backtrack_factor

        if not accepted:
            # improvement below round-off; stop at the current point
            iteration -= 1
            break
        u, value = candidate, cand_value
        trace.append((iteration, value))

    return OptResult(
        argmax=u,
        value=value,
        iterations=iteration,
        converged=converged,
        trace=trace,
        grad_norm=gnorm,
    )


def ascend_from(u0: FourierVector, B: float, cfg: AscentConfig) -> OptResult:
    """Projected gradient ascent of W_B from u0 on the sphere of radius ||u0||."""
    _check_B(B)
    if u0.is_zero():
        raise ParameterError("Ascent needs a nonzero starting vector")
    return _ascend(u0, B, cfg)


def random_start(seed: int, index: int, halfwidth: int) -> FourierVector:
    """Unit-norm random start on [-h, h]; one RNG stream per (seed, index)."""
    rng = np.random.default_rng([seed, index])
    width = 2 * halfwidth + 1
    radius = np.sqrt(rng.uniform(0.0, 1.0, size=width))
    angle = rng.uniform(0.0, TWO_PI, size=width)
    return project_sphere(FourierVector(-halfwidth, radius * np.exp(1j * angle)))


def maximize_W(
    B: float, support_halfwidth: int, cfg: AscentConfig, workers: int = 1
) -> OptResult:
    """
    Best-found value of W_B on the unit sphere over coefficients in [-h, h].

    Runs cfg.restarts seeded ascents and returns the best; ties go to the
    lowest start index so the result does not depend on scheduling.
    """
    _check_B(B)
    if support_halfwidth < 1:
        raise ParameterError("support_halfwidth must be >= 1")

    def run(index: int) -> OptResult:
        return _ascend(random_start(cfg.seed, index, support_halfwidth), B, cfg)

    results = map_ordered(run, range(cfg.restarts), workers)
    best = results[0]
    for result in results[1:]:
        if result.value > best.value:
            best = result
    if not best.converged:
        logger.warning(
            "Ascent at B=%.6g, h=%d stopped after %d iterations with |grad|=%.3e",
            B,
            support_halfwidth,
            best.iterations,
            best.grad_norm,
        )
    return best


def vanishing_sequence(j: int) -> FourierVector:
    """Unit-norm flat block u_j(n) = 1/sqrt(2 pi (2j + 1)) for |n| <= j."""
    if j < 0:
        raise ParameterError("j must be >= 0")
    width = 2 * j + 1
    return FourierVector(-j, np.full(width, 1.0 / math.sqrt(TWO_PI * width)))


def canonicalize(u: FourierVector) -> FourierVector:
    """
    Fix the symmetry gauge of a maximizer: frequency-translate the mass
    centroid to mode 0 and rotate the phase so that mode is real positive.
    """
    centroid = mass_centroid(u)
    if centroid is None:
        return u
    moved = translate_freq(u, -centroid)
    anchor = moved.coefficient(0)
    if anchor == 0:
        anchor = complex(moved.coeffs[int(np.argmax(np.abs(moved.coeffs)))])
    return scale(moved, abs(anchor) / anchor)


# -- test families ---------------------------------------------------------


def _family_coeffs(family_id: int, params: np.ndarray) -> Tuple[int, np.ndarray]:
    # params has shape (..., arity); returns (n_min, coefficients of shape (..., W))
    params = np.asarray(params, dtype=np.float64)
    one = np.ones(params.shape[:-1], dtype=np.complex128)
    if family_id == 1:
        r = params[..., 0]
        return -1, np.stack([r, one, r], axis=-1).astype(np.complex128)
    if family_id == 2:
        r, s = params[..., 0], params[..., 1]
        return -2, np.stack([s, r, one, r, s], axis=-1).astype(np.complex128)
    z = params[..., 0] + 1j * params[..., 1]
    if family_id == 3:
        return -1, np.stack([z, one, z], axis=-1)
    if family_id == 4:
        return -2, np.stack([z, z, one, z, z], axis=-1)
    raise ParameterError(f"Unknown family {family_id}")


def family_vector(fp: FamilyPoint) -> FourierVector:
    """Coefficients of the family member (not normalized)."""
    n_min, coeffs = _family_coeffs(fp.family_id, np.array(fp.params))
    return FourierVector(n_min, coeffs)


def a_family_grid(family_id: int, B: float, params: np.ndarray) -> np.ndarray:
    """A_B over an array of parameter vectors of shape (..., arity)."""
    _check_B(B)
    _, coeffs = _family_coeffs(family_id, params)
    W = coeffs.shape[-1]
    A = quartic_table(coeffs)
    weighted = A * kernel_table(W, B)
    d_part = np.sum(weighted[..., _offdiagonal_mask(W)], axis=-1)
    return d_part.real - np.sum(np.abs(coeffs) ** 4, axis=-1)


def _sinc(x):
    return np.sinc(np.asarray(x, dtype=np.float64) / math.pi)


def a_closed_w1(r, B: float):
    """A_B(w_1) = 4 r^2 sinc(2B) - (1 + 2 r^4)."""
    _check_B(B)
    r = np.asarray(r, dtype=np.float64)
    result = 4.0 * r**2 * _sinc(2.0 * B) - (1.0 + 2.0 * r**4)
    return float(result) if result.ndim == 0 else result


def a_closed_w2(r, s, B: float):
    """Closed form of A_B(w_2) with sinc(2B), sinc(4B), sinc(6B), sinc(8B) terms."""
    _check_B(B)
    r = np.asarray(r, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    result = (
        4.0 * r**2 * (1.0 + 2.0 * s) * _sinc(2.0 * B)
        + 16.0 * r**2 * s * _sinc(4.0 * B)
        + 8.0 * r**2 * s**2 * _sinc(6.0 * B)
        + 4.0 * s**2 * _sinc(8.0 * B)
        - (1.0 + 2.0 * r**4 + 2.0 * s**4)
    )
    return float(result) if result.ndim == 0 else result


def canonical_params(fp: FamilyPoint) -> FamilyPoint:
    """
    Representative under the half-period translation x -> x + pi, which flips
    the sign of odd modes: r -> -r for families 1 and 2, (p, q) -> (-p, -q)
    for family 3. Family 4 mixes odd and even modes and is left alone.
    """
    params = list(fp.params)
    if fp.family_id in (1, 2) and params[0] < 0:
        params[0] = -params[0]
    elif fp.family_id == 3 and (params[0] < 0 or (params[0] == 0 and params[1] < 0)):
        params = [-params[0], -params[1]]
    return FamilyPoint(fp.family_id, tuple(params))


def _grid_starts(
    family_id: int, B: float, grid_step: float, grid_limit: float, count: int
) -> List[np.ndarray]:
    if family_id not in FAMILY_ARITY:
        raise ParameterError(f"Unknown family {family_id}")
    arity = FAMILY_ARITY[family_id]
    axis = np.linspace(-grid_limit, grid_limit, int(round(2 * grid_limit / grid_step)) + 1)
    mesh = np.stack(np.meshgrid(*([axis] * arity), indexing="ij"), axis=-1)
    values = a_family_grid(family_id, B, mesh)
    peaks = ndimage.maximum_filter(values, size=3, mode="nearest") == values
    flat = np.flatnonzero(peaks.ravel())
    order = flat[np.argsort(-values.ravel()[flat], kind="stable")]
    points = mesh.reshape(-1, arity)
    return [points[i].copy() for i in order[:count]]


def _refine_coordinates(fn: Callable[[np.ndarray], float], x: np.ndarray, step: float) -> np.ndarray:
    # one sweep of bounded 1-D maximization along each coordinate
    x = x.copy()
    for i in range(x.size):

        def along(t, i=i):
            y = x.copy()
            y[i] = t
            return -fn(y)

        res = optimize.minimize_scalar(
            along, bounds=(x[i] - step, x[i] + step), method="bounded",
            options={"xatol": 1e-8},
        )
        if -res.fun > fn(x):
            x[i] = res.x
    return x


def maximize_A_family(
    family_id: int,
    B: float,
    cfg: AscentConfig,
    grid_step: float = 0.1,
    grid_limit: float = 2.0,
    nm_starts: Optional[int] = None,
) -> OptResult:
    """
    max A_B over one family's parameters.

    Grid search on [-grid_limit, grid_limit] per coordinate picks the best
    local peaks as starts; each is refined coordinate-wise and then polished
    with Nelder-Mead on -A_B, kept inside the same box.
    """
    _check_B(B)
    if family_id not in FAMILY_ARITY:
        raise ParameterError(f"Unknown family {family_id}")
    starts = nm_starts if nm_starts is not None else cfg.restarts
    bounds = [(-grid_limit, grid_limit)] * FAMILY_ARITY[family_id]

    def objective(x: np.ndarray) -> float:
        return float(a_family_grid(family_id, B, np.asarray(x)[None, :])[0])

    best_x: Optional[np.ndarray] = None
    best_value = -math.inf
    evaluations = 0
    converged = True
    trace: List[Tuple[int, float]] = []

    for index, x0 in enumerate(_grid_starts(family_id, B, grid_step, grid_limit, starts)):
        x1 = np.clip(_refine_coordinates(objective, x0, grid_step), -grid_limit, grid_limit)
        res = optimize.minimize(
            lambda x: -objective(x),
            x1,
            method="Nelder-Mead",
            bounds=bounds,
            options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000},
        )
        evaluations += int(res.nfev)
        value = -float(res.fun)
        if value > best_value:
            best_value, best_x = value, np.asarray(res.x)
            converged = bool(res.success)
        trace.append((index, best_value))

    point = canonical_params(FamilyPoint(family_id, tuple(best_x)))
    return OptResult(
        argmax=point,
        value=best_value,
        iterations=evaluations,
        converged=converged,
        trace=trace,
    )


def solve_B0() -> float:
    """Root of sin(2B)/(2B) = sqrt(2)/2 on [0.1, 1.5]."""
    return float(
        optimize.bisect(lambda B: _sinc(2.0 * B) - SQRT2_OVER_2, 0.1, 1.5, xtol=1e-10)
    )


def sweep_family(
    family_id: int,
    Bs: Sequence[float],
    cfg: AscentConfig,
    grid_step: float = 0.1,
    grid_limit: float = 2.0,
    nm_starts: Optional[int] = None,
    workers: int = 1,
) -> List[Tuple[float, OptResult]]:
    """max A_B over the family for each B, in the order given."""
    results = map_ordered(
        lambda B: maximize_A_family(family_id, B, cfg, grid_step, grid_limit, nm_starts),
        Bs,
        workers,
    )
    return list(zip(Bs, results))


def threshold_scan(
    family_id: int,
    cfg: AscentConfig,
    scan_step: float = 0.05,
    scan_max: float = 4.0,
    bisection_width: float = 1e-4,
    grid_step: float = 0.1,
    grid_limit: float = 2.0,
    nm_starts: Optional[int] = None,
    workers: int = 1,
) -> ThresholdScan:
    """
    Sweep max A_B over B = scan_step, 2 scan_step, ... <= scan_max and refine
    the end of the initial interval where the maximum stays positive.
    """
    if not 0 < scan_step <= 0.05:
        raise ParameterError("scan_step must lie in (0, 0.05]")

    def m(B: float) -> OptResult:
        return maximize_A_family(family_id, B, cfg, grid_step, grid_limit, nm_starts)

    count = int(math.floor(scan_max / scan_step + 1e-9))
    Bs = [k * scan_step for k in range(1, count + 1)]
    rows = sweep_family(family_id, Bs, cfg, grid_step, grid_limit, nm_starts, workers)
    values = [r.value for _, r in rows]

    crossing = None
    for k in range(1, len(values)):
        if values[k - 1] > 0 >= values[k]:
            crossing = k
            break
    if values[0] <= 0 or crossing is None:
        return ThresholdScan(family_id, rows, None)

    anomalies = [
        Bs[k] for k in range(crossing + 1, len(values)) if values[k - 1] <= 0 < values[k]
    ]
    for B in anomalies:
        logger.warning("Family %d: max A_B turns positive again near B=%.4f", family_id, B)

    lo, hi = Bs[crossing - 1], Bs[crossing]
    while hi - lo > bisection_width:
        mid = 0.5 * (lo + hi)
        if m(mid).value > 0:
            lo = mid
        else:
            hi = mid
    threshold = 0.5 * (lo + hi)
    logger.info("Family %d threshold B = %.5f", family_id, threshold)
    return ThresholdScan(family_id, rows, threshold, anomalies)


def threshold_B(
    family_id: int, cfg: AscentConfig, scan_step: float = 0.05, **kwargs
) -> float:
    """
    Supremum of the initial B-interval on which max A_B over the family is positive.

    Raises:
        ThresholdNotFoundError: if no downward sign change occurs in (0, scan_max]
    """
    scan = threshold_scan(family_id, cfg, scan_step, **kwargs)
    if scan.threshold is None:
        raise ThresholdNotFoundError(
            f"No sign change of max A_B found for family {family_id}"
        )
    return scan.threshold
