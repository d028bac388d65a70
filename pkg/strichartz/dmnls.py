"""
Periodic dispersion-managed NLS flow u_t = -i grad H_L(u).

A PeriodicField of period L carries the same coefficient vector as its
dilation M_delta u on the torus, so every quantity here is computed through
the torus functionals at B = (2 pi / L)^2:

    H_L(u) = -(1/B) W_B(M_delta u),   grad H_L = -(2 pi / (L B)) grad W_B.

Mass is P(u) = 1/2 int_0^L |u|^2 dx = (L/2) sum |c_n|^2; with this convention a
field of mass lam dilates to a torus function with ||v||^2 = 2 lam / delta.
"""

import logging
import math
from typing import List, Optional, Tuple

import numpy as np
from scipy import optimize

from strichartz.functional import gauss_legendre_nodes, strichartz_W
from strichartz.gradient_opt import grad_W_quadrature, grad_W_spectral
from strichartz.models import (
    ConsistencyError,
    FourierVector,
    GroundStateError,
    ParameterError,
    PeriodicField,
    QuadratureSpec,
    StabilityReport,
    Trajectory,
)
from strichartz.spectral_core import (
    TWO_PI,
    add,
    common_window,
    dilation_params,
    embed,
    grid_exponentials,
    scale,
)

logger = logging.getLogger(__name__)

HAMILTONIAN_TOLERANCE = 1e-8
DRIFT_WARNING = 1e-5


def to_field(u: FourierVector, L: float) -> PeriodicField:
    """Attach a period to a coefficient vector."""
    return PeriodicField(L, u)


def field_to_dict(u: PeriodicField) -> dict:
    return u.to_dict()


def field_from_dict(data: dict) -> PeriodicField:
    return PeriodicField.from_dict(data)


def wavenumbers(u: PeriodicField) -> np.ndarray:
    """k_n = 2 pi n / L over the coefficient window."""
    return TWO_PI * u.coeffs.indices.astype(np.float64) / u.L


def field_norm(u: PeriodicField) -> float:
    """||u||_{L^2(0, L)}."""
    return math.sqrt(u.L * float(np.sum(np.abs(u.coeffs.coeffs) ** 2)))


def field_inner(u: PeriodicField, v: PeriodicField) -> float:
    """Real pairing Re int_0^L u conj(v) dx."""
    lo, width = common_window(u.coeffs, v.coeffs)
    a = embed(u.coeffs, lo, width).coeffs
    b = embed(v.coeffs, lo, width).coeffs
    return float(u.L * np.real(np.vdot(b, a)))


def evolve_linear_L(u: PeriodicField, t: float) -> PeriodicField:
    """T^L_t: mode n picks up e^{-i (2 pi n / L)^2 t}."""
    k = wavenumbers(u)
    return u.with_coeffs(FourierVector(u.coeffs.n_min, u.coeffs.coeffs * np.exp(-1j * k * k * t)))


def mass_P(u: PeriodicField) -> float:
    """P(u) = 1/2 int_0^L |u|^2 dx."""
    return 0.5 * u.L * float(np.sum(np.abs(u.coeffs.coeffs) ** 2))


def period_for_B(B: float) -> float:
    """The period L with (2 pi / L)^2 = B."""
    if B <= 0:
        raise ParameterError("B must be positive")
    return TWO_PI / math.sqrt(B)


def nonexistence_period(N: int) -> float:
    """L = 2 sqrt(pi / N), where B = N pi and no ground state exists."""
    if N < 1:
        raise ParameterError("N must be a positive integer")
    return 2.0 * math.sqrt(math.pi / N)


def stability_period_bound(B4: float = 2.60) -> float:
    """Periods above 2 pi / sqrt(B4) map to B < B4, where ground states exist."""
    return period_for_B(B4)


def hamiltonian_H(
    u: PeriodicField, q: Optional[QuadratureSpec] = None, verify: bool = False
) -> float:
    """
    H_L(u) through the dilation identity H_L(u) = -(1/B) W_B(M_delta u).

    With verify=True the direct space-time quadrature is evaluated as well and a
    ConsistencyError is raised if the two differ by more than 1e-8 relative.
    """
    _, B = dilation_params(u.L)
    value = -strichartz_W(u.coeffs, B) / B
    if verify:
        spec = q or QuadratureSpec.for_problem(B, u.coeffs.width)
        direct = hamiltonian_H_quadrature(u, spec)
        if abs(direct - value) > HAMILTONIAN_TOLERANCE * max(abs(value), 1e-300):
            raise ConsistencyError(f"H_L paths disagree: {value!r} vs {direct!r}")
    return value


def hamiltonian_H_quadrature(u: PeriodicField, q: QuadratureSpec) -> float:
    """H_L(u) = -(2 pi / L) int_0^L int_0^1 |T^L_t u|^4 dt dx by direct quadrature."""
    M = q.grid_size(u.coeffs.width)
    nodes, weights = gauss_legendre_nodes(0.0, 1.0, q.time_panels, q.gauss_order)
    k = wavenumbers(u)
    moved = u.coeffs.coeffs[None, :] * np.exp(-1j * np.outer(nodes, k * k))
    values = moved @ grid_exponentials(u.coeffs.indices, M).T
    x_integrals = (u.L / M) * np.sum(np.abs(values) ** 4, axis=1)
    return -(TWO_PI / u.L) * float(np.dot(weights, x_integrals))


def grad_H(
    u: PeriodicField, q: Optional[QuadratureSpec] = None, method: str = "quadrature"
) -> PeriodicField:
    """
    grad H_L(u) = -(8 pi / L) int_0^1 T^L_{-t}(|T^L_t u|^2 T^L_t u) dt on the
    coefficient window of u.

    method="quadrature" uses Gauss-Legendre in t; "spectral" the exact sum.
    """
    _, B = dilation_params(u.L)
    if method == "quadrature":
        spec = q or QuadratureSpec.for_problem(B, u.coeffs.width)
        g = grad_W_quadrature(u.coeffs, B, spec)
    elif method == "spectral":
        g = grad_W_spectral(u.coeffs, B)
    else:
        raise ParameterError(f"Unknown gradient method {method!r}")
    return u.with_coeffs(scale(g, -TWO_PI / (u.L * B)))


def single_mode_rotation(u: PeriodicField, t: float) -> PeriodicField:
    """Exact DMNLS solution for single-mode data: e^{+i (8 pi / L) |c|^2 t} u."""
    nonzero = np.flatnonzero(u.coeffs.coeffs)
    if nonzero.size != 1:
        raise ParameterError("single_mode_rotation needs exactly one nonzero mode")
    c = u.coeffs.coeffs[nonzero[0]]
    omega = 4.0 * TWO_PI * abs(c) ** 2 / u.L
    return u.with_coeffs(scale(u.coeffs, complex(np.exp(1j * omega * t))))


def _rhs(u: PeriodicField, q: Optional[QuadratureSpec], method: str) -> np.ndarray:
    return -1j * grad_H(u, q, method).coeffs.coeffs


def evolve_dmnls(
    u0: PeriodicField,
    dt: float,
    T_end: float,
    q: Optional[QuadratureSpec] = None,
    method: str = "quadrature",
    record_stride: int = 1,
    drift_warning: float = DRIFT_WARNING,
) -> Trajectory:
    """
    Classical RK4 for u_t = -i grad H_L(u) on the coefficient window of u0.

    Runs |T_end / dt| steps; a negative dt integrates backwards. Trajectory
    times record elapsed integration time. States and the (H_L, P) ledger are
    kept every record_stride steps and at the end.
    """
    if dt == 0 or T_end <= 0 or abs(dt) > T_end:
        raise ParameterError("Need 0 < |dt| <= T_end")
    if record_stride < 1:
        raise ParameterError("record_stride must be >= 1")
    steps = max(1, int(round(T_end / abs(dt))))
    h = math.copysign(T_end / steps, dt)
    if q is None and method == "quadrature":
        q = QuadratureSpec.for_problem(dilation_params(u0.L)[1], u0.coeffs.width)

    n_min = u0.coeffs.n_min
    c = np.array(u0.coeffs.coeffs)

    def field(values: np.ndarray) -> PeriodicField:
        return PeriodicField(u0.L, FourierVector(n_min, values))

    times = [0.0]
    states = [u0]
    ledger = [(hamiltonian_H(u0), mass_P(u0))]
    warnings: List[str] = []
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(1, steps + 1):
            try:
                k1 = _rhs(field(c), q, method)
                k2 = _rhs(field(c + 0.5 * h * k1), q, method)
                k3 = _rhs(field(c + 0.5 * h * k2), q, method)
                k4 = _rhs(field(c + h * k3), q, method)
                c_next = c + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            except ParameterError:
                c_next = np.full_like(c, np.nan)
            if not np.all(np.isfinite(c_next)):
                message = f"Integration diverged at step {step} (dt={dt}, T={T_end})"
                warnings.append(message)
                logger.warning(message)
                break
            c = c_next
            if step % record_stride == 0 or step == steps:
                state = field(c)
                times.append(step * abs(h))
                states.append(state)
                ledger.append((hamiltonian_H(state), mass_P(state)))

    trajectory = Trajectory(times, states, ledger, warnings)
    dH, dP = trajectory.relative_drift()
    for name, drift in (("Mass", dP), ("Hamiltonian", dH)):
        if not drift <= drift_warning:
            message = f"{name} drift {drift:.3e} exceeds {drift_warning:.1e} (dt={dt}, T={T_end})"
            trajectory.warnings.append(message)
            logger.warning(message)
    return trajectory


def ground_state_from_maximizer(v: FourierVector, L: float, lam: float) -> PeriodicField:
    """
    Undo the dilation of a torus maximizer and rescale to mass P = lam.

    Dilation leaves coefficients unchanged, so only the mass normalization acts.
    """
    if lam <= 0:
        raise ParameterError("lam must be positive")
    if v.is_zero():
        raise ParameterError("Cannot build a ground state from the zero vector")
    field = PeriodicField(L, v)
    return field.with_coeffs(scale(v, math.sqrt(lam / mass_P(field))))


def omega_residual(
    phi: PeriodicField, q: Optional[QuadratureSpec] = None, method: str = "quadrature"
) -> Tuple[float, float]:
    """
    Lagrange multiplier and relative residual of grad H_L(phi) = omega phi.

    Returns:
        (omega, ||grad H_L(phi) - omega phi|| / ||phi||)
    """
    if phi.coeffs.is_zero():
        raise ParameterError("omega_residual needs a nonzero field")
    g = grad_H(phi, q, method)
    omega = field_inner(g, phi) / field_inner(phi, phi)
    r = phi.with_coeffs(add(g.coeffs, phi.coeffs, -omega))
    return omega, field_norm(r) / field_norm(phi)


def orbit_distance(u: PeriodicField, phi: PeriodicField, shift_grid: int = 64) -> float:
    """
    min ||u - e^{i theta} psi|| over phases, spatial shifts and frequency
    translations psi of phi.

    The phase is optimal in closed form. Spatial shifts are scanned on
    shift_grid points of [0, L) and the best one is refined locally; frequency
    translations m run over [-shift_grid, shift_grid].
    """
    if not math.isclose(u.L, phi.L, rel_tol=1e-12):
        raise ParameterError(f"Period mismatch: {u.L} vs {phi.L}")
    if shift_grid < 1:
        raise ParameterError("shift_grid must be >= 1")
    L = u.L
    norm2 = field_norm(u) ** 2 + field_norm(phi) ** 2
    m_lo = max(-shift_grid, u.coeffs.n_min - phi.coeffs.n_max)
    m_hi = min(shift_grid, u.coeffs.n_max - phi.coeffs.n_min)
    if m_lo > m_hi:
        return math.sqrt(norm2)

    k_phi = phi.coeffs.indices
    grid = np.arange(shift_grid) * (L / shift_grid)
    best_overlap, best = -1.0, None
    for m in range(m_lo, m_hi + 1):
        # overlap(x0) = L sum_k u_{k+m} conj(phi_k) e^{-i 2 pi k x0 / L}
        d = L * np.array([u.coeffs.coefficient(k + m) for k in k_phi]) * np.conj(
            phi.coeffs.coeffs
        )
        overlaps = np.abs(np.exp(-1j * TWO_PI * np.outer(grid, k_phi) / L) @ d)
        j = int(np.argmax(overlaps))
        if overlaps[j] > best_overlap:
            best_overlap, best = float(overlaps[j]), (d, grid[j])

    d, x0 = best
    spacing = L / shift_grid

    def negative_overlap(x: float) -> float:
        return -abs(complex(np.dot(np.exp(-1j * TWO_PI * k_phi * x / L), d)))

    refined = optimize.minimize_scalar(
        negative_overlap, bounds=(x0 - spacing, x0 + spacing), method="bounded",
        options={"xatol": 1e-12 * L},
    )
    best_overlap = max(best_overlap, -float(refined.fun))
    return math.sqrt(max(0.0, norm2 - 2.0 * best_overlap))


def perturb(
    phi: PeriodicField, epsilon: float, rng: np.random.Generator
) -> PeriodicField:
    """phi plus a random field of L^2 size epsilon on phi's window, rescaled to P(phi)."""
    if epsilon < 0:
        raise ParameterError("epsilon must be >= 0")
    if epsilon == 0:
        return phi
    width = phi.coeffs.width
    noise = rng.standard_normal(width) + 1j * rng.standard_normal(width)
    noise_field = phi.with_coeffs(FourierVector(phi.coeffs.n_min, noise))
    noise = noise * (epsilon / field_norm(noise_field))
    moved = phi.with_coeffs(FourierVector(phi.coeffs.n_min, phi.coeffs.coeffs + noise))
    return moved.with_coeffs(scale(moved.coeffs, math.sqrt(mass_P(phi) / mass_P(moved))))


def stability_experiment(
    phi: PeriodicField,
    epsilon: float,
    horizon: float,
    dt: float,
    q: Optional[QuadratureSpec],
    seed: int,
    shift_grid: int = 64,
    sample_stride: int = 10,
    residual_gate: float = 1e-3,
) -> StabilityReport:
    """
    Perturb a numerical ground state, run the flow and track the distance to
    its symmetry orbit.

    Raises:
        GroundStateError: if phi's Euler-Lagrange residual is not below residual_gate
    """
    _, residual = omega_residual(phi, q)
    if not residual < residual_gate:
        raise GroundStateError(
            f"Euler-Lagrange residual {residual:.3e} is not below {residual_gate:.1e}"
        )
    u0 = perturb(phi, epsilon, np.random.default_rng(seed))
    trajectory = evolve_dmnls(u0, dt, horizon, q, record_stride=sample_stride)
    distances = [orbit_distance(state, phi, shift_grid) for state in trajectory.states]
    logger.info(
        "Stability run: eps=%.3e, horizon=%.3g, max orbit distance %.3e",
        epsilon,
        horizon,
        max(distances),
    )
    return StabilityReport(
        epsilon0=distances[0],
        max_drift=max(distances),
        horizon=horizon,
        conserved_drift=trajectory.relative_drift(),
        trajectory=trajectory,
        orbit_distances=distances,
    )
