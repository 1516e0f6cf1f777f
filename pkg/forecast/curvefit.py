"""Integral-form leeway curve fit.

Per axis j the drift is modelled as
``d_j(t) = c1 * int v_w,j + c2 * int v_a,j + c3 * t``
with trapezoidal cumulative integrals from the first sample. The model is
linear in the coefficients, so it is solved by least squares.
"""
import logging
from dataclasses import asdict, dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from forecast.exceptions import RankDeficientError, ShapeError

logger = logging.getLogger(__name__)

CONDITION_LIMIT = 1e12
AXES = ("x", "y")


@dataclass
class CurveFitCoeffs:
    c1_x: float
    c2_x: float
    c3_x: float
    c1_y: float
    c2_y: float
    c3_y: float

    def axis(self, name):
        return np.array([getattr(self, f"c{i}_{name}") for i in (1, 2, 3)])

    def scaled(self, factor):
        return CurveFitCoeffs(**{key: value * factor for key, value in asdict(self).items()})

    def as_dict(self):
        return asdict(self)


def cumulative_integral(t, values):
    return cumulative_trapezoid(values, t, axis=0, initial=0.0)


def design_matrix(t, v_w, v_a, axis):
    t = np.asarray(t, dtype=float)
    t0 = t - t[0]
    return np.column_stack(
        [
            cumulative_integral(t, np.asarray(v_w, dtype=float)[:, axis]),
            cumulative_integral(t, np.asarray(v_a, dtype=float)[:, axis]),
            t0,
        ]
    )


def solve_least_squares(design, target, axis_name=""):
    """Normal equations, falling back to QR when they are poorly conditioned."""
    condition = np.linalg.cond(design)
    if not np.isfinite(condition) or condition > CONDITION_LIMIT:
        if np.allclose(target, 0.0):
            return np.zeros(design.shape[1])
        raise RankDeficientError(condition, axis_name)
    gram = design.T @ design
    if np.linalg.cond(gram) < 1e8:
        return np.linalg.solve(gram, design.T @ target)
    q, r = np.linalg.qr(design)
    return np.linalg.solve(r, q.T @ target)


def curvefit_fit(segments):
    """Fit on one or more series; each segment is (t, v_w, v_a, d) starting at its own origin."""
    if isinstance(segments, tuple):
        segments = [segments]
    coefficients = {}
    for axis, name in enumerate(AXES):
        designs, targets = [], []
        for t, v_w, v_a, d in segments:
            if len(t) < 3:
                raise ShapeError("curvefit_fit needs at least 3 rows", np.shape(t))
            designs.append(design_matrix(t, v_w, v_a, axis))
            d = np.asarray(d, dtype=float)
            targets.append(d[:, axis] - d[0, axis])
        solution = solve_least_squares(np.vstack(designs), np.concatenate(targets), name)
        for index, value in enumerate(solution, start=1):
            coefficients[f"c{index}_{name}"] = float(value)
    coeffs = CurveFitCoeffs(**coefficients)
    logger.debug("curve fit coefficients %s", coeffs)
    return coeffs


def curvefit_predict(coeffs, t, v_w, v_a):
    """Drift relative to the first sample, (N, 2)."""
    return np.column_stack(
        [design_matrix(t, v_w, v_a, axis) @ coeffs.axis(name) for axis, name in enumerate(AXES)]
    )
