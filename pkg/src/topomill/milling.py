"""Single degree of freedom milling vibration model with regenerative delay.

The tool is modeled as a damped oscillator in one direction, driven by a
cutting force that depends on the current and one-delay-period-old tool
position (surface regeneration).  The force coefficient is periodic in time
because the cutting teeth enter and leave the material once per revolution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

UP = "up"
DOWN = "down"
MILLING_MODES = (UP, DOWN)


@dataclass(frozen=True)
class ProcessParams:
    """Modal and cutting parameters of the milling process.

    Attributes
    ----------
    modal_mass : float
        Modal mass of the tool mode, kg.
    natural_frequency : float
        Angular natural frequency, rad/s.
    damping_ratio : float
        Dimensionless damping ratio, in (0, 1).
    tangential_coefficient : float
        Linearized tangential cutting coefficient, N/m^2.
    normal_coefficient_ratio : float
        Ratio of normal to tangential cutting coefficient (dimensionless).
    teeth_count : int
        Number of evenly spaced straight cutting teeth.
    radial_immersion : float
        Radial depth of cut over tool diameter, in (0, 1].
    milling_mode : str
        "up" or "down".
    feed_per_tooth : float
        Feed per tooth, m.
    """

    modal_mass: float
    natural_frequency: float
    damping_ratio: float
    tangential_coefficient: float
    normal_coefficient_ratio: float
    teeth_count: int
    radial_immersion: float
    milling_mode: str
    feed_per_tooth: float

    def __post_init__(self):
        if not self.modal_mass > 0:
            raise ValueError("modal_mass must be positive")
        if not self.natural_frequency > 0:
            raise ValueError("natural_frequency must be positive")
        if not 0 < self.damping_ratio < 1:
            raise ValueError("damping_ratio must lie in (0, 1)")
        if self.teeth_count < 1:
            raise ValueError("teeth_count must be >= 1")
        if not 0 < self.radial_immersion <= 1:
            raise ValueError("radial_immersion must lie in (0, 1]")
        if self.milling_mode not in MILLING_MODES:
            raise ValueError(f"milling_mode must be one of {MILLING_MODES}")
        if self.feed_per_tooth < 0:
            raise ValueError("feed_per_tooth must be non-negative")


@dataclass(frozen=True)
class GridPoint:
    """One (spindle speed, depth of cut) pair of the parameter plane.

    Speed is in rev/min, depth in meters.  Depth zero means no cutting and is
    allowed so that grids can include the trivially stable free oscillator.
    """

    spindle_speed: float
    depth_of_cut: float

    def __post_init__(self):
        if not self.spindle_speed > 0:
            raise ValueError("spindle_speed must be positive")
        if self.depth_of_cut < 0:
            raise ValueError("depth_of_cut must be non-negative")


def delay_period(spindle_speed: float, teeth_count: int) -> float:
    """Tooth passing period tau = 60 / (z * rpm) in seconds."""
    if spindle_speed <= 0:
        raise ValueError("spindle_speed must be positive")
    if teeth_count < 1:
        raise ValueError("teeth_count must be >= 1")
    return 60.0 / (teeth_count * spindle_speed)


@dataclass(frozen=True)
class SimConfig:
    """Discretization and duration settings for one simulation.

    ``samples_per_delay_period`` sets the output sampling rate relative to the
    tooth passing period; the integrator internally runs ``oversample`` steps
    per output sample so the delay is always an integer number of steps.
    ``perturbation`` is the initial displacement (m) on top of an otherwise
    zero history, used to excite unstable growth deterministically.
    """

    samples_per_delay_period: int = 64
    total_periods: int = 40
    transient_periods_discarded: int = 20
    perturbation: float = 1e-6
    oversample: int = 48
    include_forcing: bool = True
    blowup_guard: float = 1.0

    def __post_init__(self):
        if self.samples_per_delay_period < 1:
            raise ValueError("samples_per_delay_period must be positive")
        if self.total_periods < 1:
            raise ValueError("total_periods must be positive")
        if not 0 <= self.transient_periods_discarded < self.total_periods:
            raise ValueError("transient periods must be in [0, total_periods)")
        if self.total_periods - self.transient_periods_discarded < 10:
            raise ValueError("retained duration must cover >= 10 delay periods")
        if self.oversample < 1:
            raise ValueError("oversample must be >= 1")
        if not self.perturbation >= 0:
            raise ValueError("perturbation must be non-negative")
        if not self.blowup_guard > 0:
            raise ValueError("blowup_guard must be positive")


@dataclass
class TimeSeries:
    """Uniformly sampled tool displacement record.

    ``saturated`` marks series truncated by the blow-up guard; such series end
    where |x| first exceeded the guard and keep whatever label they were given.
    """

    samples: np.ndarray
    sample_interval: float
    grid_point: GridPoint
    label: object = None
    snr_db: Optional[float] = None
    saturated: bool = False
    series_id: Optional[str] = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1 or self.samples.size < 2:
            raise ValueError("samples must be a 1-d sequence of length >= 2")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("samples must be finite")
        if not self.sample_interval > 0:
            raise ValueError("sample_interval must be positive")


def tooth_angle(t, n: int, spindle_speed: float, teeth_count: int):
    """Angular position of tooth ``n`` at time ``t``, reduced to [0, 2*pi).

    Teeth are numbered 1..teeth_count and evenly spaced; tooth 1 starts at
    angle zero at t = 0.  ``t`` may be a scalar or an array of times (s).
    """
    if not 1 <= n <= teeth_count:
        raise ValueError(f"tooth index {n} out of range 1..{teeth_count}")
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0):
        raise ValueError("time must be non-negative")
    theta = (2.0 * np.pi * spindle_speed / 60.0) * t + 2.0 * np.pi * (n - 1) / teeth_count
    return np.mod(theta, 2.0 * np.pi)


def cut_arc(milling_mode: str, radial_immersion: float):
    """Entry and exit angles of the arc of cut for the given immersion.

    Upmilling cuts from the top of the workpiece: entry at angle 0, exit at
    arccos(1 - 2*RI).  Downmilling mirrors this about the horizontal: entry at
    arccos(2*RI - 1), exit at pi.  Both arcs have measure arccos(1 - 2*RI).
    """
    if not 0 < radial_immersion <= 1:
        raise ValueError("radial_immersion must lie in (0, 1]")
    if milling_mode == UP:
        return 0.0, float(np.arccos(1.0 - 2.0 * radial_immersion))
    if milling_mode == DOWN:
        return float(np.arccos(2.0 * radial_immersion - 1.0)), float(np.pi)
    raise ValueError(f"milling_mode must be one of {MILLING_MODES}")


def engagement(theta, milling_mode: str, radial_immersion: float):
    """1 if a tooth at angle ``theta`` is inside the arc of cut, else 0."""
    entry, exit_ = cut_arc(milling_mode, radial_immersion)
    theta = np.mod(np.asarray(theta, dtype=np.float64), 2.0 * np.pi)
    inside = (theta >= entry) & (theta <= exit_)
    if inside.ndim == 0:
        return int(inside)
    return inside.astype(np.int64)


def specific_force(t, params: ProcessParams, spindle_speed: float):
    """Directional cutting force coefficient h(t), N/m^2 per unit depth.

    Sums, over engaged teeth, the projection of the tangential-plus-normal
    cutting force onto the compliant direction per unit chip width.  Periodic
    with the tooth passing period.  ``t`` may be scalar or array.
    """
    t = np.asarray(t, dtype=np.float64)
    kt = params.tangential_coefficient
    tg = params.normal_coefficient_ratio
    total = np.zeros_like(t, dtype=np.float64)
    for n in range(1, params.teeth_count + 1):
        theta = tooth_angle(t, n, spindle_speed, params.teeth_count)
        g = engagement(theta, params.milling_mode, params.radial_immersion)
        total = total + g * (np.cos(theta) + tg * np.sin(theta)) * np.sin(theta)
    result = kt * total
    if result.ndim == 0:
        return float(result)
    return result


@njit(cache=True, nogil=True)
def _integrate_dde(x, v, n_steps, steps_per_delay, dt, two_zeta_wn, wn_sq,
                   coef_half, forcing_half, guard):
    """Fixed-step RK4 for the delayed oscillator; returns valid node count.

    ``coef_half`` and ``forcing_half`` hold the periodic coefficients sampled
    at half-step resolution over one delay period (length 2*steps_per_delay).
    The delayed displacement at stage midpoints is cubic-Hermite interpolated
    from the stored (x, v) nodes one delay period back.
    """
    n_half = coef_half.shape[0]
    for i in range(n_steps):
        j0 = (2 * i) % n_half
        jm = (2 * i + 1) % n_half
        j1 = (2 * i + 2) % n_half

        ia = i - steps_per_delay
        ib = ia + 1
        if ia >= 0:
            xa, va = x[ia], v[ia]
        else:
            xa, va = 0.0, 0.0
        if ib >= 0:
            xb, vb = x[ib], v[ib]
        else:
            xb, vb = 0.0, 0.0
        xd0 = xa
        xdm = 0.5 * (xa + xb) + dt * (va - vb) / 8.0
        xd1 = xb

        xi, vi = x[i], v[i]

        a1 = -two_zeta_wn * vi - wn_sq * xi - coef_half[j0] * (xi - xd0) - forcing_half[j0]
        k1x, k1v = vi, a1

        x2 = xi + 0.5 * dt * k1x
        v2 = vi + 0.5 * dt * k1v
        a2 = -two_zeta_wn * v2 - wn_sq * x2 - coef_half[jm] * (x2 - xdm) - forcing_half[jm]
        k2x, k2v = v2, a2

        x3 = xi + 0.5 * dt * k2x
        v3 = vi + 0.5 * dt * k2v
        a3 = -two_zeta_wn * v3 - wn_sq * x3 - coef_half[jm] * (x3 - xdm) - forcing_half[jm]
        k3x, k3v = v3, a3

        x4 = xi + dt * k3x
        v4 = vi + dt * k3v
        a4 = -two_zeta_wn * v4 - wn_sq * x4 - coef_half[j1] * (x4 - xd1) - forcing_half[j1]
        k4x, k4v = v4, a4

        x[i + 1] = xi + dt * (k1x + 2.0 * k2x + 2.0 * k3x + k4x) / 6.0
        v[i + 1] = vi + dt * (k1v + 2.0 * k2v + 2.0 * k3v + k4v) / 6.0

        if abs(x[i + 1]) > guard:
            return i + 2
    return n_steps + 1


def simulate(params: ProcessParams, grid_point: GridPoint, cfg: SimConfig) -> TimeSeries:
    """Integrate the regenerative milling equation at one grid point.

    The equation of motion

        x'' + 2*zeta*wn*x' + wn^2*x = -(b*h(t)/m)*(x(t) - x(t-tau)) - b*h(t)*f/m

    is integrated by the method of steps with a classical fixed-step
    fourth-order scheme.  The delay tau equals an integer number of steps, so
    delayed values at nodes are exact and stage midpoints use cubic Hermite
    interpolation of the stored history.  The history is zero with an initial
    displacement ``cfg.perturbation`` at t = 0.

    Returns the retained series: the last (total - transient) delay periods,
    sampled ``cfg.samples_per_delay_period`` times per period.  If |x| exceeds
    ``cfg.blowup_guard`` the series is truncated there, flagged ``saturated``,
    and the last samples up to the nominal retained length are kept.
    """
    tau = delay_period(grid_point.spindle_speed, params.teeth_count)
    steps_per_period = cfg.samples_per_delay_period * cfg.oversample
    if steps_per_period < 32:
        raise ValueError(
            "delay period must be resolved by >= 32 integration steps; "
            f"got {steps_per_period} (increase samples_per_delay_period or oversample)"
        )
    dt = tau / steps_per_period
    n_steps = cfg.total_periods * steps_per_period

    # Periodic coefficients at half-step resolution over one delay period.
    t_half = np.arange(2 * steps_per_period) * (dt / 2.0)
    h_half = np.asarray(specific_force(t_half, params, grid_point.spindle_speed))
    b_over_m = grid_point.depth_of_cut / params.modal_mass
    coef_half = b_over_m * h_half
    if cfg.include_forcing:
        forcing_half = coef_half * params.feed_per_tooth
    else:
        forcing_half = np.zeros_like(coef_half)

    x = np.zeros(n_steps + 1, dtype=np.float64)
    v = np.zeros(n_steps + 1, dtype=np.float64)
    x[0] = cfg.perturbation

    wn = params.natural_frequency
    n_valid = _integrate_dde(
        x, v, n_steps, steps_per_period, dt,
        2.0 * params.damping_ratio * wn, wn * wn,
        coef_half, forcing_half, cfg.blowup_guard,
    )
    saturated = n_valid < n_steps + 1

    sampled = x[:n_valid:cfg.oversample]
    retained_count = (cfg.total_periods - cfg.transient_periods_discarded) \
        * cfg.samples_per_delay_period + 1
    retained = sampled[max(0, sampled.size - retained_count):]
    if retained.size < 2:
        retained = sampled[-2:]

    return TimeSeries(
        samples=np.ascontiguousarray(retained),
        sample_interval=tau / cfg.samples_per_delay_period,
        grid_point=grid_point,
        saturated=saturated,
    )
