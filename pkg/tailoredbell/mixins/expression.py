import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from tailoredbell.exceptions import NumericalError, ScenarioError
from tailoredbell.mixins.kernel import (Behaviour, ObservableSet, Side, cglmp_observables, correlator,
                                        correlator_tensor)
from tailoredbell.mixins.scenario import (CoefficientSet, Scenario, coefficient_weights, correlator_weights,
                                          folded_weights, tailored_coefficients)
from tailoredbell.utils.util import omega_power

logger = logging.getLogger(__name__)

# imaginary residue tolerated when reading a correlator-form value
IMAGINARY_TOL = 1e-10


class Units(str, Enum):
    PROBABILITY = "probability"
    CORRELATOR = "correlator"


@dataclass(frozen=True, eq=False)
class ProbabilityForm:
    """
    sum_k w_k sum_i [P(A_i = B_i + k) + P(B_i = A_{i+1} + k)] with A_{m+1} = A_1 + 1.
    """
    scenario: Scenario
    weights: np.ndarray
    coefficients: CoefficientSet

    def tensor(self) -> np.ndarray:
        """
        Full coefficient tensor I[x, y, a, b] (0-based settings) such that the
        expression equals sum I * p.
        """
        s = self.scenario
        a = np.arange(s.d)[:, None]
        b = np.arange(s.d)[None, :]
        w = self.weights
        out = np.zeros((s.m, s.m, s.d, s.d))
        for i in range(s.m):
            out[i, i] += w[(a - b) % s.d]
        for i in range(s.m - 1):
            out[i + 1, i] += w[(b - a) % s.d]
        # B_m = A_{m+1} + k reads B_m = A_1 + 1 + k
        out[0, s.m - 1] += w[(b - a - 1) % s.d]
        return out


@dataclass(frozen=True, eq=False)
class CorrelatorForm:
    """
    Complex weights terms[x, y, l-1] on <A_x^l B_y^(d-l)>, l = 1..d-1, 0-based settings.
    a holds a_1..a_{d-1}.
    """
    scenario: Scenario
    a: np.ndarray
    terms: np.ndarray

    def value(self, b: Behaviour) -> float:
        return correlator_form_value(self.scenario, b, form=self)


def _check_match(s: Scenario, b: Behaviour) -> None:
    if b.scenario != s:
        raise ScenarioError(f"behaviour is for m={b.scenario.m}, d={b.scenario.d}, expression for m={s.m}, d={s.d}")


def probability_form(s: Scenario, c: CoefficientSet) -> ProbabilityForm:
    return ProbabilityForm(s, folded_weights(s, c), c)


def evaluate_probability_form(f: ProbabilityForm, b: Behaviour) -> float:
    _check_match(f.scenario, b)
    return float(np.sum(f.tensor() * b.p))


def _weights_for(s: Scenario, c: Optional[CoefficientSet]) -> np.ndarray:
    if c is None:
        return correlator_weights(s)
    return coefficient_weights(s, c)[1:]


def correlator_form(s: Scenario, c: Optional[CoefficientSet] = None) -> CorrelatorForm:
    """
    Correlator form of a coefficient set, tailored when c is None. The pair (A_i, B_i) carries a_l,
    the pair (A_i, B_{i-1}) carries conj(a_l) and the wrap pair (A_1, B_m) carries conj(a_l) omega^l.
    """
    a = _weights_for(s, c)
    l = np.arange(1, s.d)
    terms = np.zeros((s.m, s.m, s.d - 1), dtype=complex)
    for i in range(s.m):
        terms[i, i] += a
    for i in range(1, s.m):
        terms[i, i - 1] += a.conj()
    terms[0, s.m - 1] += a.conj() * omega_power(s.d, l)
    return CorrelatorForm(s, a, terms)


def correlator_form_value(s: Scenario, b: Behaviour, c: Optional[CoefficientSet] = None,
                          form: Optional[CorrelatorForm] = None) -> float:
    """
    Value of the correlator form on a behaviour.
    :param c: coefficient set, tailored when omitted
    :param form: prebuilt form, overrides c
    :return: real value
    """
    _check_match(s, b)
    form = form or correlator_form(s, c)
    l = np.arange(1, s.d)
    correlators = correlator_tensor(b)[:, :, l, (s.d - l) % s.d]
    value = complex(np.sum(form.terms * correlators))
    if abs(value.imag) > IMAGINARY_TOL:
        raise NumericalError(f"correlator form has imaginary part {value.imag!r}")
    return value.real


def barred_observable(s: Scenario, bob: ObservableSet, i: int, l: int,
                      c: Optional[CoefficientSet] = None) -> np.ndarray:
    """
    a_l B_i^(d-l) + conj(a_l) B_{i-1}^(d-l), and for i = 1 the wrap
    a_l B_1^(d-l) + conj(a_l) omega^l B_m^(d-l).
    """
    s.check_setting(i, "i")
    if not 1 <= l <= s.d - 1:
        raise ScenarioError(f"l must lie in 1..{s.d - 1}, got {l}")
    if bob.m != s.m or bob.d != s.d:
        raise ScenarioError(f"observables are for m={bob.m}, d={bob.d}, scenario is m={s.m}, d={s.d}")
    a = _weights_for(s, c)[l - 1]
    if i == 1:
        partner = np.conj(a) * omega_power(s.d, l) * bob.power(s.m, s.d - l)
    else:
        partner = np.conj(a) * bob.power(i - 1, s.d - l)
    return a * bob.power(i, s.d - l) + partner


def check_conjugation_conditions(s: Scenario, c: Optional[CoefficientSet] = None) -> float:
    """
    Largest entrywise distance between the barred observables and the complex conjugates of
    Alice's observables, both built from the optimal CGLMP measurements.
    """
    alice = cglmp_observables(s, Side.ALICE)
    bob = cglmp_observables(s, Side.BOB)
    worst = 0.0
    for i in range(1, s.m + 1):
        for l in range(1, s.d):
            deviation = np.max(np.abs(barred_observable(s, bob, i, l, c) - alice.power(i, l).conj()))
            worst = max(worst, float(deviation))
    logger.debug("conjugation conditions for m=%d, d=%d deviate by %.3e", s.m, s.d, worst)
    return worst


def chained_correlator_value(m: int, b: Behaviour) -> float:
    """The d = 2 chained expression, normalised by 1/(2 cos(pi/2m))."""
    if b.scenario.d != 2 or b.scenario.m != m:
        raise ScenarioError(f"chained expression needs d=2 and m={m}, got {b.scenario.to_dict()}")
    total = correlator(b, 1, 1, 1, 1) - correlator(b, 1, m, 1, 1)
    for i in range(2, m + 1):
        total += correlator(b, i, i, 1, 1) + correlator(b, i, i - 1, 1, 1)
    return float(total.real) / (2 * math.cos(math.pi / (2 * m)))


def expression_value(s: Scenario, b: Behaviour, units: str = Units.CORRELATOR.value,
                     c: Optional[CoefficientSet] = None) -> float:
    units = Units(units)
    if units is Units.PROBABILITY:
        return evaluate_probability_form(probability_form(s, c or tailored_coefficients(s)), b)
    return correlator_form_value(s, b, c)


class ExpressionAPIMixin:
    """API for building and evaluating the Bell expression."""

    def get_probability_form(self, source: str = "tailored") -> ProbabilityForm:
        return probability_form(self.scenario, self.get_coefficients(source))

    def get_correlator_form(self, source: str = "tailored") -> CorrelatorForm:
        c = None if source == "tailored" else self.get_coefficients(source)
        return correlator_form(self.scenario, c)

    def get_expression_value(self, behaviour: Behaviour, units: str = Units.CORRELATOR.value) -> float:
        """
        :param behaviour: Behaviour of the handler's scenario
        :param units: "correlator" or "probability"
        :return: value of the tailored expression
        """
        return expression_value(self.scenario, behaviour, units)

    def get_barred_observable(self, i: int, l: int) -> np.ndarray:
        return barred_observable(self.scenario, self.get_observables("bob"), i, l)

    def get_conjugation_deviation(self) -> float:
        return check_conjugation_conditions(self.scenario)
