"""Central finite-difference verification of reverse-mode gradients."""
import logging
from dataclasses import dataclass, field

import numpy as np

from forecast.tensor import no_grad

logger = logging.getLogger(__name__)


@dataclass
class GradCheckReport:
    max_rel_error: float
    tol: float
    checked: int
    per_parameter: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.max_rel_error <= self.tol

    def __str__(self):
        verdict = "ok" if self.passed else "FAILED"
        return (
            f"gradcheck {verdict}: max relative error {self.max_rel_error:.3e} "
            f"over {self.checked} entries (tol {self.tol:.0e})"
        )


def relative_error(analytic, numeric, floor=1e-6):
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def finite_diff_check(
    f, params, h=1e-5, tol=1e-4, floor=1e-6, max_entries=None, seed=0
):
    """Compare the gradients of ``f()`` to central differences.

    ``f`` takes no arguments and returns a scalar Tensor built from
    ``params`` (a dict of name to Parameter). When ``max_entries`` is set,
    that many entries per parameter are sampled with ``seed``.
    """
    params = dict(params)
    for param in params.values():
        param.grad = None
    f().backward()
    analytic = {
        name: (param.grad.copy() if param.grad is not None else np.zeros_like(param.data))
        for name, param in params.items()
    }
    for param in params.values():
        param.grad = None

    rng = np.random.default_rng(seed)
    per_parameter = {}
    checked = 0
    with no_grad():
        for name, param in params.items():
            flat = param.data.reshape(-1)
            indices = np.arange(flat.size)
            if max_entries is not None and flat.size > max_entries:
                indices = rng.choice(flat.size, size=max_entries, replace=False)
            worst = 0.0
            for index in indices:
                original = flat[index]
                flat[index] = original + h
                plus = float(f().data)
                flat[index] = original - h
                minus = float(f().data)
                flat[index] = original
                numeric = (plus - minus) / (2.0 * h)
                error = relative_error(
                    analytic[name].reshape(-1)[index], numeric, floor
                )
                worst = max(worst, error)
                checked += 1
            per_parameter[name] = worst

    report = GradCheckReport(
        max_rel_error=max(per_parameter.values(), default=0.0),
        tol=tol,
        checked=checked,
        per_parameter=per_parameter,
    )
    logger.debug("%s", report)
    return report
