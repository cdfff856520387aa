"""Floquet stability of the milling model and ground-truth grid labels.

The delayed oscillator is written in state space with one-period coefficients
and discretized over a single delay period by the semi-discretization method:
the coefficients are frozen on each subinterval and the delayed displacement
is approximated by the mean of the two bracketing history nodes.  The product
of the subinterval transition matrices maps the sampled state history over one
period; its dominant eigenvalue decides stability and the bifurcation type.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
import numpy as np
from scipy.linalg import expm

from .milling import GridPoint, ProcessParams, delay_period, specific_force

STABLE = "stable"
HOPF = "hopf"
PERIOD_DOUBLING = "period_doubling"
CHATTER = "chatter"
UNDETERMINED = "undetermined"
FAILED = "failed"

CLASS3_VALUES = (STABLE, HOPF, PERIOD_DOUBLING)


class EigenSolverError(RuntimeError):
    """Raised when the eigenvalue computation does not converge."""


class UndeterminedBifurcationError(ValueError):
    """Unstable point whose dominant eigenvalue is real and positive.

    Such exits match neither a complex-pair (Hopf) nor a negative-real
    (period-doubling) crossing, so no bifurcation label applies; callers
    are expected to exclude the point and record it.
    """


@dataclass(frozen=True)
class MonodromyResult:
    dominant_eigenvalue: complex
    spectral_radius: float
    discretization_order: int

    def __post_init__(self):
        if abs(abs(self.dominant_eigenvalue) - self.spectral_radius) > 1e-12 * max(
            1.0, self.spectral_radius
        ):
            raise ValueError("spectral_radius must equal |dominant_eigenvalue|")


@dataclass(frozen=True)
class StabilityLabel:
    """Three-class label plus the derived two-class (chatter) collapse."""

    class3: str

    def __post_init__(self):
        if self.class3 not in CLASS3_VALUES:
            raise ValueError(f"class3 must be one of {CLASS3_VALUES}")

    @property
    def class2(self) -> str:
        return STABLE if self.class3 == STABLE else CHATTER


@dataclass(frozen=True)
class GridSpec:
    """Rectangular (speed, depth) grid.

    Speeds are rev/min and must be positive with a non-degenerate range;
    depths are meters, non-negative, and may be degenerate (constant depth).
    """

    speed_range: tuple
    depth_range: tuple
    speed_count: int
    depth_count: int

    def __post_init__(self):
        lo_s, hi_s = self.speed_range
        lo_d, hi_d = self.depth_range
        if not (0 < lo_s < hi_s):
            raise ValueError("speed_range must be positive and increasing")
        if lo_d < 0 or hi_d < lo_d:
            raise ValueError("depth_range must be non-negative and ordered")
        if self.speed_count < 2 or self.depth_count < 2:
            raise ValueError("grid counts must be >= 2")

    def speeds(self) -> np.ndarray:
        return np.linspace(self.speed_range[0], self.speed_range[1], self.speed_count)

    def depths(self) -> np.ndarray:
        return np.linspace(self.depth_range[0], self.depth_range[1], self.depth_count)


def _interval_coefficients(params: ProcessParams, grid_point: GridPoint,
                           order: int, quad_points: int = 64) -> np.ndarray:
    """Mean of the periodic force coefficient h(t) on each subinterval."""
    tau = delay_period(grid_point.spindle_speed, params.teeth_count)
    dt = tau / order
    # Midpoint rule with quad_points nodes per subinterval, all at once.
    offsets = (np.arange(quad_points) + 0.5) / quad_points
    t = (np.arange(order)[:, None] + offsets[None, :]) * dt
    h = np.asarray(specific_force(t.ravel(), params, grid_point.spindle_speed))
    return h.reshape(order, quad_points).mean(axis=1)


DEFAULT_ORDER = 320


def monodromy_matrix(params: ProcessParams, grid_point: GridPoint,
                     order: int) -> np.ndarray:
    """The discretized one-period state map as a dense (order+2) matrix."""
    tau = delay_period(grid_point.spindle_speed, params.teeth_count)
    dt = tau / order
    wn = params.natural_frequency
    zeta = params.damping_ratio
    b_over_m = grid_point.depth_of_cut / params.modal_mass
    h_bar = _interval_coefficients(params, grid_point, order)

    # Exact subinterval transition of the frozen-coefficient oscillator plus
    # the response to a constant delayed displacement, via one augmented expm.
    transitions = np.empty((order, 2, 2))
    responses = np.empty((order, 2))
    aug = np.zeros((3, 3))
    aug[0, 1] = 1.0
    for i in range(order):
        w = b_over_m * h_bar[i]
        aug[1, 0] = -(wn * wn) - w
        aug[1, 1] = -2.0 * zeta * wn
        aug[1, 2] = w
        e = expm(aug * dt)
        transitions[i] = e[:2, :2]
        responses[i] = e[:2, 2]

    # Propagate all basis vectors of the extended state (x_i, v_i,
    # x_{i-1}, ..., x_{i-order}) through one period at once.  The history is a
    # circular buffer over absolute node index modulo (order + 1).
    dim = order + 2
    xv = np.zeros((2, dim))
    xv[0, 0] = 1.0
    xv[1, 1] = 1.0
    hist = np.zeros((order + 1, dim))
    hist[0, 0] = 1.0                      # node 0 is the current displacement
    for j in range(1, order + 1):
        hist[(-j) % (order + 1), j + 1] = 1.0
    for i in range(order):
        older = hist[(i - order) % (order + 1)]
        newer = hist[(i - order + 1) % (order + 1)]
        delayed = 0.5 * (older + newer)
        xv = transitions[i] @ xv + np.outer(responses[i], delayed)
        hist[(i + 1) % (order + 1)] = xv[0]

    u = np.empty((dim, dim))
    u[0] = xv[0]
    u[1] = xv[1]
    for k in range(order):
        u[2 + k] = hist[(order - 1 - k) % (order + 1)]
    return u


def build_monodromy(params: ProcessParams, grid_point: GridPoint,
                    order: int = DEFAULT_ORDER) -> MonodromyResult:
    """Discretize the one-period state map and return its dominant eigenvalue.

    ``order`` is the number of subintervals per delay period; the returned map
    acts on the extended state (x, x', and the ``order`` most recent history
    samples of x).  The dominant eigenvalue converges as ``order`` grows.
    """
    if order < 20:
        raise ValueError("discretization order must be >= 20")
    u = monodromy_matrix(params, grid_point, order)
    try:
        eigenvalues = np.linalg.eigvals(u)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"eigenvalue solver failed: {exc}") from exc
    moduli = np.abs(eigenvalues)
    # Deterministic pick among equal-modulus candidates.
    best = max(range(len(eigenvalues)),
               key=lambda k: (moduli[k], eigenvalues[k].real, eigenvalues[k].imag))
    lam = complex(eigenvalues[best])
    return MonodromyResult(dominant_eigenvalue=lam, spectral_radius=abs(lam),
                           discretization_order=order)


def classify_eigenvalue(mr: MonodromyResult, tol: float = 1e-6) -> StabilityLabel:
    """Stability label from the dominant Floquet multiplier.

    Modulus <= 1 is stable (boundary ties count as stable).  Unstable points
    are Hopf when the multiplier has a relative imaginary part above ``tol``,
    period-doubling when it is real and negative.  A real positive unstable
    multiplier raises :class:`UndeterminedBifurcationError`.
    """
    if tol < 0:
        raise ValueError("tol must be non-negative")
    lam = mr.dominant_eigenvalue
    if mr.spectral_radius <= 1.0:
        return StabilityLabel(STABLE)
    if abs(lam.imag) > tol * abs(lam):
        return StabilityLabel(HOPF)
    if lam.real < 0:
        return StabilityLabel(PERIOD_DOUBLING)
    raise UndeterminedBifurcationError(
        f"real positive multiplier {lam} with modulus > 1"
    )


@dataclass
class LabeledGrid:
    """Stability labels and dominant eigenvalues over a (speed, depth) grid.

    ``class3`` holds one of the three stability classes, or "undetermined" /
    "failed" for points excluded from datasets.  Arrays are indexed
    [speed_index, depth_index].
    """

    speeds: np.ndarray
    depths: np.ndarray
    eigenvalues: np.ndarray
    class3: np.ndarray
    discretization_order: int

    def class2(self) -> np.ndarray:
        out = np.array(self.class3, dtype=object)
        mask = (self.class3 != STABLE) & self._valid_mask()
        out[mask] = CHATTER
        return out

    def _valid_mask(self) -> np.ndarray:
        return np.isin(self.class3, CLASS3_VALUES)

    def valid_mask(self) -> np.ndarray:
        return self._valid_mask()

    def excluded_count(self) -> int:
        return int(np.sum(~self._valid_mask()))

    def counts(self) -> dict:
        values, counts = np.unique(self.class3, return_counts=True)
        return dict(zip(values.tolist(), counts.tolist()))

    def to_rows(self) -> list:
        rows = []
        class2 = self.class2()
        for i, speed in enumerate(self.speeds):
            for j, depth in enumerate(self.depths):
                lam = self.eigenvalues[i, j]
                rows.append({
                    "speed_index": i,
                    "depth_index": j,
                    "speed_rpm": float(speed),
                    "depth_m": float(depth),
                    "eig_real": float(lam.real),
                    "eig_imag": float(lam.imag),
                    "spectral_radius": float(abs(lam)),
                    "class3": str(self.class3[i, j]),
                    "class2": str(class2[i, j]),
                })
        return rows

    def to_csv(self, path) -> None:
        rows = self.to_rows()
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)


def label_grid(params: ProcessParams, grid_spec: GridSpec, order: int = 40,
               tol: float = 1e-6) -> LabeledGrid:
    """Label every grid point independently; per-point failures do not abort.

    Points whose dominant multiplier admits no bifurcation label are marked
    "undetermined"; eigensolver failures are marked "failed".  Both are meant
    to be excluded from downstream datasets.
    """
    speeds = grid_spec.speeds()
    depths = grid_spec.depths()
    eigenvalues = np.zeros((speeds.size, depths.size), dtype=np.complex128)
    class3 = np.empty((speeds.size, depths.size), dtype=object)
    for i, speed in enumerate(speeds):
        for j, depth in enumerate(depths):
            gp = GridPoint(spindle_speed=float(speed), depth_of_cut=float(depth))
            try:
                mr = build_monodromy(params, gp, order)
                eigenvalues[i, j] = mr.dominant_eigenvalue
                class3[i, j] = classify_eigenvalue(mr, tol).class3
            except UndeterminedBifurcationError:
                eigenvalues[i, j] = mr.dominant_eigenvalue
                class3[i, j] = UNDETERMINED
            except EigenSolverError:
                eigenvalues[i, j] = complex(np.nan, np.nan)
                class3[i, j] = FAILED
    return LabeledGrid(speeds=speeds, depths=depths, eigenvalues=eigenvalues,
                       class3=class3, discretization_order=order)
