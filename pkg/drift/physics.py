"""Wind profile, drag/lift decomposition and the 15 numeric input features.

Vectors are (east, north) pairs; every force function also accepts stacked
arrays of shape (..., 2). The relative velocity is the object's velocity
relative to the fluid, so drag pulls the object toward the fluid velocity.
"""
from dataclasses import asdict, dataclass, field

import numpy as np

RHO_AIR = 1.225
RHO_WATER = 1025.0

ANEMOMETER_HEIGHT = 2.0066
REFERENCE_HEIGHT = 10.0
WIND_SHEAR_EXPONENT = 0.10

FEATURE_NAMES = (
    "v_a_x",
    "v_a_y",
    "v_w_x",
    "v_w_y",
    "D_a_x",
    "D_a_y",
    "D_w_x",
    "D_w_y",
    "L_a_x",
    "L_a_y",
    "L_w_x",
    "L_w_y",
    "T",
    "m_o",
    "gamma",
)
NUMERIC_WIDTH = len(FEATURE_NAMES)


def _vector(value):
    value = np.asarray(value, dtype=float)
    if value.shape[-1:] != (2,):
        raise ValueError(f"expected (east, north) vectors, got shape {value.shape}")
    return value


@dataclass(frozen=True)
class EnvSample:
    t: float
    v_a: tuple
    v_w: tuple

    def __post_init__(self):
        values = np.concatenate([[self.t], _vector(self.v_a), _vector(self.v_w)])
        if not np.isfinite(values).all():
            raise ValueError("environment sample must be finite")
        if self.t < 0:
            raise ValueError("sample time must be non-negative")


@dataclass
class ObjectSpec:
    id: str
    m_o: float
    A_a: float
    A_w: float
    C_D_air: float
    C_L_air: float
    C_D_water: float
    C_L_water: float
    description: str = ""
    name: str = ""
    silhouette: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.m_o <= 0:
            raise ValueError(f"{self.id}: mass must be positive")
        if self.A_a <= 0 or self.A_w < 0:
            raise ValueError(f"{self.id}: A_a must be positive and A_w non-negative")
        coefficients = (self.C_D_air, self.C_L_air, self.C_D_water, self.C_L_water)
        if min(coefficients) < 0:
            raise ValueError(f"{self.id}: coefficients must be non-negative")

    @property
    def gamma(self):
        return submersion_rate(self.A_w, self.A_a)

    def with_coefficients(self, drag, lift):
        """Copy with one drag/lift pair used for both media."""
        values = asdict(self)
        values.update(C_D_air=drag, C_L_air=lift, C_D_water=drag, C_L_water=lift)
        return ObjectSpec(**values)

    def as_dict(self):
        return asdict(self)


@dataclass
class ForceState:
    D_a: np.ndarray
    D_w: np.ndarray
    L_a: np.ndarray
    L_w: np.ndarray
    gamma: float

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("submersion rate must lie in [0, 1]")

    @property
    def net(self):
        return self.D_a + self.D_w + self.L_a + self.L_w


def wind_power_law(v_ref, z_ref=ANEMOMETER_HEIGHT, z=REFERENCE_HEIGHT, beta=WIND_SHEAR_EXPONENT):
    """Extrapolate wind measured at ``z_ref`` to height ``z``, componentwise."""
    if z_ref <= 0 or z <= 0:
        raise ValueError("heights must be positive")
    return np.asarray(v_ref, dtype=float) * (z / z_ref) ** beta


def _check_medium(rho, coefficient, area):
    if rho <= 0 or area <= 0:
        raise ValueError("density and area must be positive")
    if coefficient < 0:
        raise ValueError("force coefficient must be non-negative")


def drag_force(v_rel, rho, c_d, area):
    v_rel = _vector(v_rel)
    _check_medium(rho, c_d, area)
    speed = np.linalg.norm(v_rel, axis=-1, keepdims=True)
    return -0.5 * rho * c_d * area * speed * v_rel


def lift_force(v_rel, rho, c_l, area):
    v_rel = _vector(v_rel)
    _check_medium(rho, c_l, area)
    speed = np.linalg.norm(v_rel, axis=-1, keepdims=True)
    normal = np.stack([-v_rel[..., 1], v_rel[..., 0]], axis=-1)
    return 0.5 * rho * c_l * area * speed * normal


def submersion_rate(A_w, A_a):
    total = A_w + A_a
    if total <= 0 or A_w < 0 or A_a < 0:
        raise ValueError("areas must be non-negative with a positive sum")
    return A_w / total


def _water_forces(v_rel, obj):
    # A fully emerged object feels no water force.
    if obj.A_w == 0:
        zero = np.zeros_like(v_rel)
        return zero, zero
    return (
        drag_force(v_rel, RHO_WATER, obj.C_D_water, obj.A_w),
        lift_force(v_rel, RHO_WATER, obj.C_L_water, obj.A_w),
    )


def forces(v_a, v_w, obj, v_obj):
    """Drag and lift from both media for object velocity ``v_obj``."""
    v_obj = _vector(v_obj)
    air_rel = v_obj - _vector(v_a)
    water_rel = v_obj - _vector(v_w)
    D_w, L_w = _water_forces(water_rel, obj)
    return ForceState(
        D_a=drag_force(air_rel, RHO_AIR, obj.C_D_air, obj.A_a),
        D_w=D_w,
        L_a=lift_force(air_rel, RHO_AIR, obj.C_L_air, obj.A_a),
        L_w=L_w,
        gamma=obj.gamma,
    )


def feature_row(sample, obj, v_obj):
    state = forces(sample.v_a, sample.v_w, obj, v_obj)
    return np.concatenate(
        [
            _vector(sample.v_a),
            _vector(sample.v_w),
            state.D_a,
            state.D_w,
            state.L_a,
            state.L_w,
            [sample.t, obj.m_o, state.gamma],
        ]
    )


def object_velocity(t, d):
    """Backward differences of recorded positions; row 0 is at rest.

    Row k only uses positions up to k, so features never see later drift.
    """
    t = np.asarray(t, dtype=float)
    d = np.asarray(d, dtype=float)
    velocity = np.zeros_like(d)
    if len(d) > 1:
        velocity[1:] = np.diff(d, axis=0) / np.diff(t)[:, None]
    return velocity


def feature_matrix(t, v_a, v_w, obj, v_obj):
    """Vectorized ``feature_row`` over a whole series, (N, 15)."""
    t = np.asarray(t, dtype=float)
    v_a = _vector(v_a)
    v_w = _vector(v_w)
    state = forces(v_a, v_w, obj, v_obj)
    count = len(t)
    return np.column_stack(
        [
            v_a,
            v_w,
            state.D_a,
            state.D_w,
            state.L_a,
            state.L_w,
            t,
            np.full(count, obj.m_o),
            np.full(count, state.gamma),
        ]
    )
