import math
from abc import ABC, abstractmethod
from collections.abc import Callable

import numpy as np
from scipy.special import digamma

from oppenheim_lab.domain.exceptions import InputError, ModelError
from oppenheim_lab.utils import compensated_sum


def _check_u(u: float) -> float:
    u = float(u)
    if not math.isfinite(u):
        raise InputError(f"u must be finite, got {u}")
    if u < 0:
        raise InputError(f"u must be >= 0, got {u}")
    return u


class GoodSequence(ABC):
    """Discretization grid Λ: λ_0 = 0, strictly increasing, gaps bounded by ``ell``."""

    kind: str = "custom"
    has_closed_form_phi: bool = False

    def __init__(self, ell: float):
        if not math.isfinite(ell) or ell <= 0:
            raise ModelError(f"gap bound must be positive and finite, got {ell}")
        self.ell = float(ell)

    @abstractmethod
    def value(self, j: int) -> float:
        """Return λ_j."""

    def values(self, js: np.ndarray) -> np.ndarray:
        js = np.asarray(js, dtype=np.int64)
        return np.fromiter((self.value(int(j)) for j in js.ravel()), dtype=np.float64,
                           count=js.size).reshape(js.shape)

    def index_above(self, u: float) -> int:
        """Index j_u of the smallest element of Λ strictly greater than ``u``."""
        u = _check_u(u)
        lo, hi = 0, 1
        while self.value(hi) <= u:
            lo, hi = hi, hi * 2
        # invariant: value(lo) <= u < value(hi)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.value(mid) <= u:
                lo = mid
            else:
                hi = mid
        return hi

    def indices_above(self, us: np.ndarray) -> np.ndarray:
        us = np.asarray(us, dtype=np.float64)
        return np.fromiter((self.index_above(u) for u in us.ravel()), dtype=np.int64,
                           count=us.size).reshape(us.shape)

    def phi(self, u: float) -> float:
        """Σ_{j=2}^{j_u-1} (λ_j - λ_{j-1}) / λ_{j-1}; zero when the range is empty."""
        j_u = self.index_above(u)
        if j_u <= 2:
            return 0.0
        lam = self.values(np.arange(1, j_u))
        return compensated_sum(np.diff(lam) / lam[:-1])

    def phis(self, us: np.ndarray) -> np.ndarray:
        us = np.asarray(us, dtype=np.float64)
        return np.array([self.phi(u) for u in us.ravel()]).reshape(us.shape)

    def check_prefix(self, count: int = 10_000) -> None:
        lam = self.values(np.arange(count + 1))
        if lam[0] != 0.0:
            raise ModelError(f"λ_0 must be 0, got {lam[0]}")
        if count >= 1 and lam[1] < 1.0:
            raise ModelError(f"λ_1 must be >= 1, got {lam[1]}")
        gaps = np.diff(lam)
        if np.any(gaps <= 0):
            raise ModelError("sequence is not strictly increasing")
        widest = float(gaps.max()) if gaps.size else 0.0
        if widest > self.ell:
            raise ModelError(f"observed gap {widest} exceeds the declared bound {self.ell}")

    def describe(self) -> dict:
        return {"kind": self.kind, "ell": self.ell}


class ScaledIntegerSequence(GoodSequence):
    """λ_j = c·j for an integer c >= 1; c = 1 gives the integers."""

    has_closed_form_phi = True

    def __init__(self, scale: int = 1):
        if int(scale) != scale or scale < 1:
            raise ModelError(f"scale must be an integer >= 1, got {scale}")
        super().__init__(ell=float(scale))
        self.scale = int(scale)
        self.kind = "integers" if self.scale == 1 else "scaled"

    def value(self, j: int) -> float:
        return float(self.scale * j)

    def values(self, js: np.ndarray) -> np.ndarray:
        return np.asarray(js, dtype=np.float64) * self.scale

    def index_above(self, u: float) -> int:
        u = _check_u(u)
        j = math.floor(u / self.scale) + 1
        # float division can land one step off at exact multiples
        if self.scale * (j - 1) > u:
            j -= 1
        elif self.scale * j <= u:
            j += 1
        return j

    def indices_above(self, us: np.ndarray) -> np.ndarray:
        us = np.asarray(us, dtype=np.float64)
        if not np.all(np.isfinite(us)) or np.any(us < 0):
            raise InputError("all u must be finite and >= 0")
        j = np.floor(us / self.scale).astype(np.int64) + 1
        j = np.where(self.scale * (j - 1).astype(np.float64) > us, j - 1, j)
        j = np.where(self.scale * j.astype(np.float64) <= us, j + 1, j)
        return j

    def phi(self, u: float) -> float:
        # increments are 1/(j-1), so φ(u) is the harmonic number H_{j_u - 2}
        j_u = self.index_above(u)
        if j_u <= 2:
            return 0.0
        return max(0.0, float(digamma(float(j_u - 1)) + np.euler_gamma))

    def phis(self, us: np.ndarray) -> np.ndarray:
        j_u = self.indices_above(us).astype(np.float64)
        out = np.zeros_like(j_u)
        mask = j_u > 2
        out[mask] = digamma(j_u[mask] - 1.0) + np.euler_gamma
        return np.maximum(out, 0.0)

    def describe(self) -> dict:
        return {"kind": self.kind, "ell": self.ell, "scale": self.scale}


class RuleSequence(GoodSequence):
    """User sequence given by an explicit rule j -> λ_j and a certified gap bound."""

    kind = "custom"

    def __init__(self, rule: Callable[[int], float], ell: float, name: str = "custom"):
        super().__init__(ell=ell)
        self.rule = rule
        self.name = name

    def value(self, j: int) -> float:
        if j == 0:
            return 0.0
        return float(self.rule(j))

    def describe(self) -> dict:
        return {"kind": self.kind, "ell": self.ell, "name": self.name}
