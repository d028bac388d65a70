"""
Data models for the torus Strichartz toolkit.

Value types shared by the numerical modules and the command line, plus the
package exception hierarchy. All models are immutable once constructed.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np


class StrichartzError(Exception):
    """Base exception for the toolkit."""

    pass


class ParameterError(StrichartzError):
    """Raised when an operation receives an input outside its domain."""

    pass


class ConsistencyError(StrichartzError):
    """Raised when two code paths that must agree do not (implementation bug)."""

    pass


class ThresholdNotFoundError(StrichartzError):
    """Raised when a threshold scan finds no sign change."""

    pass


class ConservationError(StrichartzError):
    """Raised in strict mode when conserved quantities drift too far."""

    pass


class GroundStateError(StrichartzError):
    """Raised when a field fails the Euler-Lagrange residual gate."""

    pass


def _freeze(values) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FourierVector:
    """
    Finitely supported Fourier coefficient sequence on the integers.

    coeffs[k] holds the coefficient of e^{i(n_min + k)x}; everything outside the
    window [n_min, n_min + width - 1] is zero.
    """

    n_min: int
    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "n_min", int(self.n_min))
        object.__setattr__(self, "coeffs", _freeze(self.coeffs))
        if self.coeffs.size < 1:
            raise ParameterError("FourierVector needs at least one coefficient")
        if not np.all(np.isfinite(self.coeffs)):
            raise ParameterError("FourierVector coefficients must be finite")

    @property
    def width(self) -> int:
        return int(self.coeffs.size)

    @property
    def n_max(self) -> int:
        return self.n_min + self.width - 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_min + self.width)

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    def is_real(self) -> bool:
        return not np.any(self.coeffs.imag)

    def coefficient(self, n: int) -> complex:
        """Coefficient at mode n (zero outside the window)."""
        k = n - self.n_min
        if 0 <= k < self.width:
            return complex(self.coeffs[k])
        return 0j

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_min": self.n_min,
            "coeffs": [[float(c.real), float(c.imag)] for c in self.coeffs],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "FourierVector":
        """Build from the JSON form {"n_min": int, "coeffs": [[re, im], ...]}."""
        try:
            n_min = data["n_min"]
            pairs = data["coeffs"]
            if isinstance(n_min, bool) or int(n_min) != n_min:
                raise ParameterError(f"n_min must be an integer, got {n_min!r}")
            values = [complex(float(re), float(im)) for re, im in pairs]
        except (KeyError, TypeError, ValueError) as e:
            raise ParameterError(f"Malformed FourierVector data: {e}") from e
        return cls(int(n_min), values)

    @classmethod
    def zeros(cls, n_min: int, width: int) -> "FourierVector":
        return cls(n_min, np.zeros(width, dtype=np.complex128))


@dataclass(frozen=True, eq=False)
class GridSamples:
    """Samples of T_t u at M equispaced points of [0, 2pi)."""

    values: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "values", _freeze(self.values))
        if self.values.size < 1:
            raise ParameterError("GridSamples needs at least one point")

    @property
    def size(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class QuadratureSpec:
    """Time panels / Gauss order for t-integrals and x-grid size for the oracle."""

    time_panels: int = 8
    gauss_order: int = 10
    x_points: Union[int, str] = "auto"

    def __post_init__(self):
        if int(self.time_panels) < 1:
            raise ParameterError("time_panels must be >= 1")
        if not 2 <= int(self.gauss_order) <= 20:
            raise ParameterError("gauss_order must lie in [2, 20]")
        if self.x_points != "auto" and int(self.x_points) < 1:
            raise ParameterError("x_points must be >= 1 or 'auto'")

    def grid_size(self, width: int) -> int:
        """x-grid size for an operand of the given support width."""
        if self.x_points == "auto":
            return 4 * width + 1
        return int(self.x_points)

    @classmethod
    def for_problem(cls, B: float, width: int, gauss_order: int = 10) -> "QuadratureSpec":
        """Panel count that resolves t-frequencies up to 2(W - 1)^2 on [0, B]."""
        panels = max(8, int(np.ceil(B * width * width)))
        return cls(time_panels=panels, gauss_order=gauss_order, x_points="auto")


@dataclass(frozen=True)
class DecompositionReport:
    """Split of W_B into the mass term, the l4 term and D_B."""

    mass_term: float
    ell4_term: float
    d_term: float
    total: float

    def to_dict(self) -> Dict[str, float]:
        return {
            "mass_term": self.mass_term,
            "ell4_term": self.ell4_term,
            "d_term": self.d_term,
            "total": self.total,
        }


FAMILY_ARITY = {1: 1, 2: 2, 3: 2, 4: 2}


@dataclass(frozen=True)
class FamilyPoint:
    """A point of one of the four small-support test families."""

    family_id: int
    params: Tuple[float, ...]

    def __post_init__(self):
        if self.family_id not in FAMILY_ARITY:
            raise ParameterError(f"Unknown family {self.family_id}")
        params = tuple(float(p) for p in np.atleast_1d(self.params))
        if len(params) != FAMILY_ARITY[self.family_id]:
            raise ParameterError(
                f"Family {self.family_id} takes {FAMILY_ARITY[self.family_id]} "
                f"parameter(s), got {len(params)}"
            )
        object.__setattr__(self, "params", params)


@dataclass(frozen=True)
class AscentConfig:
    """Settings for projected ascent and the family searches."""

    step_init: float = 1.0
    backtrack_factor: float = 0.5
    grad_tol: float = 1e-9
    max_iters: int = 5000
    restarts: int = 16
    seed: int = 0
    armijo: float = 1e-4

    def __post_init__(self):
        if self.step_init <= 0:
            raise ParameterError("step_init must be positive")
        if not 0 < self.backtrack_factor < 1:
            raise ParameterError("backtrack_factor must lie in (0, 1)")
        if self.grad_tol <= 0:
            raise ParameterError("grad_tol must be positive")
        if self.max_iters < 1 or self.restarts < 1:
            raise ParameterError("max_iters and restarts must be >= 1")


@dataclass
class OptResult:
    """Outcome of an ascent or a family search."""

    argmax: Union[FourierVector, FamilyPoint]
    value: float
    iterations: int
    converged: bool
    trace: List[Tuple[int, float]] = field(default_factory=list)
    grad_norm: float = float("nan")

    def to_dict(self) -> Dict[str, Any]:
        if isinstance(self.argmax, FourierVector):
            argmax = self.argmax.to_dict()
        else:
            argmax = {"family_id": self.argmax.family_id, "params": list(self.argmax.params)}
        return {
            "argmax": argmax,
            "value": self.value,
            "iterations": self.iterations,
            "converged": self.converged,
            "grad_norm": self.grad_norm,
        }


@dataclass(frozen=True, eq=False)
class PeriodicField:
    """Function of period L given by coefficients against e^{i(2 pi n / L) x}."""

    L: float
    coeffs: FourierVector

    def __post_init__(self):
        if not (np.isfinite(self.L) and self.L > 0):
            raise ParameterError("Period L must be positive")
        object.__setattr__(self, "L", float(self.L))

    def with_coeffs(self, coeffs: FourierVector) -> "PeriodicField":
        return PeriodicField(self.L, coeffs)

    def to_dict(self) -> Dict[str, Any]:
        data = {"L": self.L}
        data.update(self.coeffs.to_dict())
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PeriodicField":
        try:
            L = float(data["L"])
        except (KeyError, TypeError, ValueError) as e:
            raise ParameterError(f"Malformed PeriodicField data: {e}") from e
        return cls(L, FourierVector.from_dict(data))


@dataclass
class Trajectory:
    """Time-stamped DMNLS states with the (H_L, P) ledger."""

    times: List[float]
    states: List[PeriodicField]
    ledger: List[Tuple[float, float]]
    warnings: List[str] = field(default_factory=list)

    def relative_drift(self) -> Tuple[float, float]:
        """Largest relative departure of H and P from their initial values."""
        H = np.array([h for h, _ in self.ledger])
        P = np.array([p for _, p in self.ledger])
        dH = float(np.max(np.abs(H - H[0])) / max(abs(H[0]), 1e-300))
        dP = float(np.max(np.abs(P - P[0])) / max(abs(P[0]), 1e-300))
        return dH, dP


@dataclass(frozen=True)
class StabilityReport:
    """Orbit-distance statistics of a perturbed ground state."""

    epsilon0: float
    max_drift: float
    horizon: float
    conserved_drift: Tuple[float, float]
    trajectory: Optional[Trajectory] = field(default=None, compare=False, repr=False)
    orbit_distances: List[float] = field(default_factory=list, compare=False, repr=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "epsilon0": self.epsilon0,
            "max_drift": self.max_drift,
            "horizon": self.horizon,
            "conserved_drift": {"H": self.conserved_drift[0], "P": self.conserved_drift[1]},
        }


@dataclass
class RunManifest:
    """Provenance record written next to every output file."""

    command: str
    config: Dict[str, Any]
    seed: Optional[int]
    tool_version: str
    wall_time: float = 0.0
    created_at: Optional[str] = None
    outputs: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "outputs": list(self.outputs),
            "config": self.config,
            "seed": self.seed,
            "tool_version": self.tool_version,
            "wall_time": self.wall_time,
            "created_at": self.created_at,
        }


@dataclass
class ThresholdScan:
    """Sweep of max A_B over B for one family plus the refined threshold."""

    family_id: int
    rows: List[Tuple[float, OptResult]]
    threshold: Optional[float]
    anomalies: List[float] = field(default_factory=list)
