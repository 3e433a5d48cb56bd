import math
from collections.abc import Callable
from functools import partial

import numpy as np
from scipy.optimize import bisect

from oppenheim_lab.domain.exceptions import InputError, ModelError

INVERSE_RTOL = 1e-12
INVERSE_MAXITER = 200


def _identity(x):
    return x


def _quadratic_cdf(x):
    return x * (1.0 + x) / 2.0


def _quadratic_inverse(p):
    # root of x^2 + x - 2p = 0, written without cancellation for small p
    return 4.0 * p / (1.0 + np.sqrt(1.0 + 8.0 * p))


def _blend_cdf(x, weight: float, power: float):
    return weight * x + (1.0 - weight) * np.power(x, power)


def _bisect_vector(cdf: Callable, p: np.ndarray) -> np.ndarray:
    lo = np.zeros_like(p)
    hi = np.ones_like(p)
    for _ in range(INVERSE_MAXITER):
        mid = 0.5 * (lo + hi)
        below = cdf(mid) < p
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= INVERSE_RTOL * hi):
            break
    return 0.5 * (lo + hi)


class DistributionSpec:
    """Distribution function F on [0, 1] with F(x)/x bounded in [C1, C2].

    ``cdf`` and ``inverse`` must accept scalars and numpy arrays. When no
    closed-form inverse is given, it is computed by bisection to relative
    tolerance 1e-12 in at most 200 steps.
    """

    def __init__(
        self,
        cdf: Callable,
        c1: float,
        c2: float,
        alpha: float | None = None,
        inverse: Callable | None = None,
        kind: str = "custom",
        params: dict | None = None,
    ):
        if not (0 < c1 <= c2):
            raise ModelError(f"need 0 < C1 <= C2, got C1={c1}, C2={c2}")
        if alpha is not None and not (c1 <= alpha <= c2):
            raise ModelError(f"alpha={alpha} must lie in [C1, C2]")
        self._cdf = cdf
        self._inverse = inverse
        self.c1 = float(c1)
        self.c2 = float(c2)
        self.alpha = None if alpha is None else float(alpha)
        self.kind = kind
        self.params = dict(params or {})

    @classmethod
    def identity(cls) -> "DistributionSpec":
        return cls(_identity, 1.0, 1.0, alpha=1.0, inverse=_identity, kind="identity")

    @classmethod
    def quadratic(cls) -> "DistributionSpec":
        return cls(_quadratic_cdf, 0.5, 1.0, alpha=0.5, inverse=_quadratic_inverse,
                   kind="quadratic")

    @classmethod
    def blend(cls, weight: float, power: float = 2.0) -> "DistributionSpec":
        if not (0 < weight <= 1) or power <= 1:
            raise ModelError(f"blend needs 0 < weight <= 1 and power > 1, got {weight}, {power}")
        return cls(partial(_blend_cdf, weight=weight, power=power), weight, 1.0,
                   alpha=weight, kind="blend", params={"weight": weight, "power": power})

    @property
    def has_closed_form_inverse(self) -> bool:
        return self._inverse is not None

    def cdf(self, x):
        return self._cdf(x)

    def inverse(self, p):
        if isinstance(p, np.ndarray):
            if self._inverse is not None:
                return self._inverse(p)
            return _bisect_vector(self._cdf, p.astype(np.float64))

        p = float(p)
        if not (0.0 <= p <= 1.0):
            raise InputError(f"p must lie in [0, 1], got {p}")
        if self._inverse is not None:
            return float(self._inverse(p))
        if p in (0.0, 1.0):
            return p
        return bisect(lambda x: self._cdf(x) - p, 0.0, 1.0,
                      xtol=np.finfo(float).tiny, rtol=INVERSE_RTOL, maxiter=INVERSE_MAXITER)

    def tail_at(self, lam):
        """F(1/λ), reading F(1/0) as 1."""
        if isinstance(lam, np.ndarray):
            lam = lam.astype(np.float64)
            safe = np.where(lam > 0, lam, 1.0)
            return np.where(lam > 0, self._cdf(1.0 / safe), 1.0)
        if lam <= 0:
            return 1.0
        return float(self._cdf(1.0 / lam))

    def validate(self, grid_size: int = 10_000, tol: float = 1e-12) -> None:
        """Check F(0)=0, F(1)=1, monotonicity, the C1/C2 band and the inverse."""
        if abs(float(self._cdf(0.0))) > tol or abs(float(self._cdf(1.0)) - 1.0) > tol:
            raise ModelError(f"{self.kind}: F(0) must be 0 and F(1) must be 1")

        x = np.unique(np.concatenate([np.linspace(1.0 / grid_size, 1.0, grid_size),
                                      np.geomspace(1e-9, 1.0, grid_size)]))
        fx = self._cdf(x)
        if np.any(np.diff(fx) < -tol):
            raise ModelError(f"{self.kind}: F is not nondecreasing")
        ratio = fx / x
        if ratio.min() < self.c1 - 1e-9 or ratio.max() > self.c2 + 1e-9:
            raise ModelError(
                f"{self.kind}: F(x)/x ranges over [{ratio.min()}, {ratio.max()}], "
                f"outside [C1, C2] = [{self.c1}, {self.c2}]"
            )

        p = np.linspace(1.0 / grid_size, 1.0 - 1.0 / grid_size, grid_size)
        err = np.abs(self._cdf(self.inverse(p)) - p)
        worst = float(err.max())
        if not math.isfinite(worst) or worst > tol:
            raise ModelError(f"{self.kind}: F(F_inv(p)) misses p by {worst}")

    def describe(self) -> dict:
        return {"kind": self.kind, "params": self.params, "C1": self.c1, "C2": self.c2,
                "alpha": self.alpha}
