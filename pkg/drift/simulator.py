"""Synthetic drift campaigns from the force model.

Wind and current speeds are a mean plus a slow sinusoidal gust plus smooth
seeded noise, clipped to a band; directions veer sinusoidally. Fields are
continuous functions of time, so refining the time step samples the same
environment.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.interpolate import CubicSpline

from drift.exceptions import SimulationBlowUpError
from drift.physics import (
    ANEMOMETER_HEIGHT,
    REFERENCE_HEIGHT,
    RHO_AIR,
    RHO_WATER,
    WIND_SHEAR_EXPONENT,
    forces,
    lift_force,
    wind_power_law,
)

logger = logging.getLogger(__name__)

SERIES_COLUMNS = ("t", "v_a_x", "v_a_y", "v_w_x", "v_w_y", "d_x", "d_y")
WIND_BAND = (0.894, 2.235)
CURRENT_BAND = (0.061, 0.122)


@dataclass
class FieldConfig:
    mean_speed: float
    direction_deg: float = 0.0
    gust: float = 0.25
    gust_period_s: float = 420.0
    veer_deg: float = 25.0
    veer_period_s: float = 900.0
    noise: float = 0.08
    noise_scale_s: float = 30.0
    band: tuple = None
    seed: int = 0

    def __post_init__(self):
        if self.mean_speed < 0:
            raise ValueError("mean speed must be non-negative")
        if self.band is not None:
            low, high = self.band
            if not 0 <= low <= high:
                raise ValueError(f"invalid speed band {self.band}")
            self.band = (float(low), float(high))

    def sample(self, t, horizon):
        """(len(t), 2) velocities; ``horizon`` bounds the noise knots."""
        t = np.asarray(t, dtype=float)
        rng = np.random.default_rng(self.seed)
        phases = rng.uniform(0.0, 2.0 * np.pi, size=2)
        speed = self.mean_speed * (
            1.0 + self.gust * np.sin(2.0 * np.pi * t / self.gust_period_s + phases[0])
        )
        if self.noise > 0:
            knots = np.arange(0.0, horizon + 2 * self.noise_scale_s, self.noise_scale_s)
            values = rng.normal(0.0, self.noise * max(self.mean_speed, 1e-12), size=len(knots))
            speed = speed + CubicSpline(knots, values)(t)
        if self.band is not None:
            speed = np.clip(speed, *self.band)
        else:
            speed = np.maximum(speed, 0.0)
        heading = np.deg2rad(
            self.direction_deg
            + self.veer_deg * np.sin(2.0 * np.pi * t / self.veer_period_s + phases[1])
        )
        return np.column_stack([speed * np.sin(heading), speed * np.cos(heading)])


def default_wind(seed=0):
    return FieldConfig(mean_speed=1.55, direction_deg=60.0, band=WIND_BAND, seed=seed)


def default_current(seed=0):
    return FieldConfig(
        mean_speed=0.09,
        direction_deg=150.0,
        gust=0.15,
        gust_period_s=600.0,
        veer_deg=15.0,
        veer_period_s=1300.0,
        band=CURRENT_BAND,
        seed=seed + 1,
    )


@dataclass
class ScenarioConfig:
    duration: float = 1500.0
    timestep: float = 1.0
    substeps: int = 10
    wind: FieldConfig = field(default_factory=default_wind)
    current: FieldConfig = field(default_factory=default_current)
    initial_position: tuple = (0.0, 0.0)
    initial_velocity: tuple = (0.0, 0.0)
    anemometer_height: float = ANEMOMETER_HEIGHT
    reference_height: float = REFERENCE_HEIGHT
    shear_exponent: float = WIND_SHEAR_EXPONENT
    object_id: str = ""

    def __post_init__(self):
        if self.timestep <= 0:
            raise ValueError("timestep must be positive")
        if self.duration < self.timestep:
            raise ValueError("duration must be at least one timestep")
        if self.substeps < 1:
            raise ValueError("substeps must be at least 1")

    @property
    def steps(self):
        return int(math.floor(self.duration / self.timestep + 1e-9))

    @classmethod
    def seeded(cls, seed, **overrides):
        return cls(wind=default_wind(seed), current=default_current(seed), **overrides)

    def environment(self, t):
        """Wind at the reference height and current at ``t``."""
        measured = self.wind.sample(t, self.duration)
        v_a = wind_power_law(
            measured, self.anemometer_height, self.reference_height, self.shear_exponent
        )
        return v_a, self.current.sample(t, self.duration)


@dataclass
class DriftSeries:
    """Recorded series in the exchange schema: times, wind, current, drift."""

    t: np.ndarray
    v_a: np.ndarray
    v_w: np.ndarray
    d: np.ndarray
    object_id: str = ""

    def __len__(self):
        return len(self.t)

    def frame(self):
        return pd.DataFrame(
            np.column_stack([self.t, self.v_a, self.v_w, self.d]), columns=SERIES_COLUMNS
        )


@dataclass
class Trajectory(DriftSeries):
    v: np.ndarray = None
    D_a: np.ndarray = None
    D_w: np.ndarray = None
    L_a: np.ndarray = None
    L_w: np.ndarray = None
    gamma: float = 0.0

    def series(self):
        return DriftSeries(self.t, self.v_a, self.v_w, self.d, self.object_id)


def _drag_gain(rho, coefficient, area, v_rel):
    return 0.5 * rho * coefficient * area * math.hypot(v_rel[0], v_rel[1])


def _advance(v, env, obj, h):
    """One sub-step; drag is linearly implicit, lift explicit."""
    v_a, v_w = env
    k_a = _drag_gain(RHO_AIR, obj.C_D_air, obj.A_a, v - v_a)
    k_w = _drag_gain(RHO_WATER, obj.C_D_water, obj.A_w, v - v_w)
    lift = lift_force(v - v_a, RHO_AIR, obj.C_L_air, obj.A_a)
    if obj.A_w > 0:
        lift = lift + lift_force(v - v_w, RHO_WATER, obj.C_L_water, obj.A_w)
    return (obj.m_o * v + h * (k_a * v_a + k_w * v_w + lift)) / (obj.m_o + h * (k_a + k_w))


def simulate(config, obj):
    steps = config.steps
    h = config.timestep / config.substeps
    t = np.arange(steps) * config.timestep
    fine_t = np.arange(steps * config.substeps) * h
    fine_v_a, fine_v_w = config.environment(fine_t)
    v_a, v_w = fine_v_a[:: config.substeps], fine_v_w[:: config.substeps]

    d = np.empty((steps, 2))
    v = np.empty((steps, 2))
    position = np.array(config.initial_position, dtype=float)
    velocity = np.array(config.initial_velocity, dtype=float)
    for step in range(steps):
        d[step] = position
        v[step] = velocity
        if step + 1 == steps:
            break
        for sub in range(step * config.substeps, (step + 1) * config.substeps):
            velocity = _advance(velocity, (fine_v_a[sub], fine_v_w[sub]), obj, h)
            position = position + h * velocity
        if not (np.isfinite(velocity).all() and np.isfinite(position).all()):
            raise SimulationBlowUpError(step + 1, obj.id)

    state = forces(v_a, v_w, obj, v)
    logger.debug(
        "simulated %s: %d steps, final drift (%.2f, %.2f) m",
        obj.id,
        steps,
        d[-1, 0],
        d[-1, 1],
    )
    return Trajectory(
        t=t,
        v_a=v_a,
        v_w=v_w,
        d=d,
        object_id=obj.id,
        v=v,
        D_a=state.D_a,
        D_w=state.D_w,
        L_a=state.L_a,
        L_w=state.L_w,
        gamma=state.gamma,
    )


def simulate_campaign(objects, config):
    """All objects drift through the same environment at the same time."""
    return {obj.id: simulate(config, obj) for obj in objects}


def export_series(series, path):
    if len(series) == 0:
        raise ValueError("cannot export an empty series")
    series.frame().to_csv(path, index=False, float_format="%.17g")
    return path


def import_series(path, object_id="", wind_height=None, shear_exponent=WIND_SHEAR_EXPONENT):
    """Read a series CSV; ``wind_height`` extrapolates measured wind to 10 m."""
    frame = pd.read_csv(path, float_precision="round_trip")
    missing = [column for column in SERIES_COLUMNS if column not in frame.columns]
    if missing:
        raise ValueError(f"{path}: missing columns {missing}")
    v_a = frame[["v_a_x", "v_a_y"]].to_numpy(dtype=float)
    if wind_height is not None:
        v_a = wind_power_law(v_a, wind_height, REFERENCE_HEIGHT, shear_exponent)
    t = frame["t"].to_numpy(dtype=float)
    if len(t) > 1 and not (np.diff(t) > 0).all():
        raise ValueError(f"{path}: time column must be strictly increasing")
    return DriftSeries(
        t=t,
        v_a=v_a,
        v_w=frame[["v_w_x", "v_w_y"]].to_numpy(dtype=float),
        d=frame[["d_x", "d_y"]].to_numpy(dtype=float),
        object_id=object_id,
    )
