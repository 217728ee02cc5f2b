import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Sequence, Tuple

import numpy as np

from tailoredbell.exceptions import PoleError, ScenarioError
from tailoredbell.utils.util import omega_power

logger = logging.getLogger(__name__)

# relative distance to an integer below which the cotangent argument is a pole
POLE_TOL = 1e-12


class CoefficientSource(str, Enum):
    TAILORED = "tailored"
    CGLMP = "cglmp"
    CUSTOM = "custom"


@dataclass(frozen=True)
class Scenario:
    """
    Bipartite Bell scenario: each party picks one of m settings, each with d outcomes.
    Settings are numbered 1..m, outcomes 0..d-1.
    """
    m: int
    d: int

    def __post_init__(self):
        for name in ("m", "d"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise ScenarioError(f"{name} must be an integer, got {value!r}")
            if value < 2:
                raise ScenarioError(f"{name} must be at least 2, got {value}")
            object.__setattr__(self, name, int(value))

    @property
    def half(self) -> int:
        return self.d // 2

    @property
    def omega(self) -> complex:
        return complex(omega_power(self.d, 1))

    def theta(self, x: int) -> float:
        """Phase of Alice's x-th optimal CGLMP measurement."""
        return (x - 0.5) / self.m

    def zeta(self, y: int) -> float:
        """Phase of Bob's y-th optimal CGLMP measurement."""
        return y / self.m

    def check_setting(self, x: int, name: str = "setting") -> int:
        if not 1 <= x <= self.m:
            raise ScenarioError(f"{name} must lie in 1..{self.m}, got {x}")
        return x - 1

    def check_outcome(self, a: int, name: str = "outcome") -> int:
        if not 0 <= a < self.d:
            raise ScenarioError(f"{name} must lie in 0..{self.d - 1}, got {a}")
        return a

    def to_dict(self) -> Dict[str, int]:
        return {"m": self.m, "d": self.d}


@dataclass(frozen=True)
class CoefficientSet:
    """Weights alpha_k, beta_k (k = 0..floor(d/2)-1) of the probability-form expression."""
    alpha: Tuple[float, ...]
    beta: Tuple[float, ...]
    source: CoefficientSource = CoefficientSource.CUSTOM

    def __post_init__(self):
        alpha = tuple(float(a) for a in self.alpha)
        beta = tuple(float(b) for b in self.beta)
        if len(alpha) != len(beta):
            raise ScenarioError(f"alpha and beta differ in length: {len(alpha)} != {len(beta)}")
        if not alpha:
            raise ScenarioError("a coefficient set needs at least one alpha/beta pair")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "source", CoefficientSource(self.source))
        if self.source is CoefficientSource.TAILORED:
            # a tailored fold w = (alpha_0, ..., -beta_0) falls strictly
            if np.any(np.diff(alpha) >= 0) or np.any(np.diff(beta) >= 0):
                raise ScenarioError("tailored coefficients need strictly decreasing alpha and beta")

    @property
    def half(self) -> int:
        return len(self.alpha)

    def check(self, s: Scenario) -> "CoefficientSet":
        if self.half != s.half:
            raise ScenarioError(f"coefficient set has {self.half} pairs, scenario d={s.d} needs {s.half}")
        return self

    def to_dict(self) -> Dict:
        return {"alpha": list(self.alpha), "beta": list(self.beta), "source": self.source.value}


def g_func(s: Scenario, x: float) -> float:
    """g(x) = cot(pi (x + 1/2m) / d)."""
    turns = (x + 1.0 / (2 * s.m)) / s.d
    if abs(turns - round(turns)) < POLE_TOL:
        raise PoleError(f"g({x}) hits a cotangent pole for m={s.m}, d={s.d}")
    return 1.0 / math.tan(math.pi * turns)


def hatted_alpha(s: Scenario) -> np.ndarray:
    """The unscaled weights alpha-hat_k = g(k) for k = 0..d-1."""
    return np.array([g_func(s, k) for k in range(s.d)])


def tailored_coefficients(s: Scenario) -> CoefficientSet:
    prefactor = math.tan(math.pi / (2 * s.m)) / (2 * s.d)
    g_half = g_func(s, s.half)
    alpha = [prefactor * (g_func(s, k) - g_half) for k in range(s.half)]
    beta = [prefactor * (g_func(s, k + 1 - 1.0 / s.m) + g_half) for k in range(s.half)]
    return CoefficientSet(tuple(alpha), tuple(beta), CoefficientSource.TAILORED)


def cglmp_coefficients(d: int) -> CoefficientSet:
    """alpha_k = beta_k = 1 - 2k/(d-1); the CGLMP expression when m = 2."""
    if d < 2:
        raise ScenarioError(f"d must be at least 2, got {d}")
    weights = tuple(1 - 2 * k / (d - 1) for k in range(d // 2))
    return CoefficientSet(weights, weights, CoefficientSource.CGLMP)


def custom_coefficients(alpha: Sequence[float], beta: Sequence[float]) -> CoefficientSet:
    return CoefficientSet(tuple(alpha), tuple(beta), CoefficientSource.CUSTOM)


def m2_coefficients(d: int) -> CoefficientSet:
    """
    Closed forms of the tailored coefficients for two settings,
    alpha_k = [cot(pi(k+1/4)/d) + (-1)^d tan(pi/4d)] / 2d and
    beta_k = [cot(pi(k+1/2+1/4)/d) - (-1)^d tan(pi/4d)] / 2d.
    """
    s = Scenario(2, d)
    sign = (-1) ** d
    shift = math.tan(math.pi / (4 * d))
    alpha = [(g_func(s, k) + sign * shift) / (2 * d) for k in range(s.half)]
    beta = [(g_func(s, k + 0.5) - sign * shift) / (2 * d) for k in range(s.half)]
    return CoefficientSet(tuple(alpha), tuple(beta), CoefficientSource.TAILORED)


def s_value(s: Scenario) -> float:
    return 0.5 * (1 - math.tan(math.pi / (2 * s.m)) * g_func(s, s.half))


def coefficient_sum(c: CoefficientSet) -> float:
    """S = sum_k (alpha_k - beta_k) of an arbitrary coefficient set."""
    return float(sum(c.alpha) - sum(c.beta))


def folded_weights(s: Scenario, c: CoefficientSet) -> np.ndarray:
    """
    Weights w_k, k = 0..d-1, of P(A = B + k): w_k = alpha_k below floor(d/2),
    w_{d-1-k} = -beta_k; the middle entry of odd d stays 0.
    """
    c.check(s)
    w = np.zeros(s.d)
    w[:s.half] = c.alpha
    for k, b in enumerate(c.beta):
        w[s.d - 1 - k] -= b
    return w


def coefficient_weights(s: Scenario, c: CoefficientSet) -> np.ndarray:
    """
    a_l = sum_k w_k omega^(-kl) for l = 0..d-1, for any coefficient set.
    a_0 is the coefficient sum S.
    """
    return np.fft.fft(folded_weights(s, c))


def correlator_weights(s: Scenario) -> np.ndarray:
    """
    a_1..a_{d-1} of the tailored expression (entry l-1 holds a_l).
    a_l = omega^((2l-d)/4m) / (2 cos(pi/2m)) for l <= floor(d/2), a_l = conj(a_{d-l}) above.
    """
    a = np.zeros(s.d, dtype=complex)
    scale = 2 * math.cos(math.pi / (2 * s.m))
    for l in range(1, s.half + 1):
        a[l] = omega_power(s.d, (2 * l - s.d) / (4 * s.m)) / scale
    for l in range(s.half + 1, s.d):
        a[l] = np.conj(a[s.d - l])
    return a[1:]


class ScenarioAPIMixin:
    """API for the scenario parameters and the coefficient formulas."""

    def get_coefficients(self, source: str = "tailored") -> CoefficientSet:
        """
        :param source: "tailored" or "cglmp"
        :return: CoefficientSet
        """
        if source == CoefficientSource.TAILORED.value:
            return tailored_coefficients(self.scenario)
        if source == CoefficientSource.CGLMP.value:
            return cglmp_coefficients(self.scenario.d)
        raise ScenarioError(f"Unknown coefficient source {source!r}")

    def get_correlator_weights(self) -> np.ndarray:
        return correlator_weights(self.scenario)

    def get_s_value(self) -> float:
        return s_value(self.scenario)

    def get_coefficient_report(self) -> Dict:
        """
        Everything the coeffs command prints.
        :return: dict
        """
        s = self.scenario
        c = tailored_coefficients(s)
        weights = correlator_weights(s)
        return {
            **s.to_dict(),
            "alpha": list(c.alpha),
            "beta": list(c.beta),
            "folded": folded_weights(s, c).tolist(),
            "S": s_value(s),
            "a_real": weights.real.tolist(),
            "a_imag": weights.imag.tolist(),
        }
