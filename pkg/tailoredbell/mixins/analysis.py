import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg
from scipy.stats import entropy

from tailoredbell.exceptions import ScenarioError
from tailoredbell.mixins.bounds import classical_bound, ns_bound, quantum_bound
from tailoredbell.mixins.expression import correlator_form_value
from tailoredbell.mixins.kernel import (Behaviour, Ket, Side, behaviour_from_quantum, cglmp_observables,
                                        joint_distribution, max_entangled, schmidt_state, white_noise_mix)
from tailoredbell.mixins.scenario import Scenario
from tailoredbell.utils.util import parallel_map

logger = logging.getLogger(__name__)

ZERO_ENTROPY_TOL = 1e-9


class RatioKind(str, Enum):
    QC = "qc"
    NSQ = "nsq"

    @property
    def label(self) -> str:
        return {"qc": "quantum_over_classical", "nsq": "ns_over_quantum"}[self.value]


class KeyConvention(str, Enum):
    CONJUGATE = "conjugate"
    IDENTICAL = "identical"


@dataclass(frozen=True, eq=False)
class RatioTable:
    """Bound ratios with one row per d and one column per m."""
    kind: RatioKind
    d_values: Tuple[int, ...]
    m_values: Tuple[int, ...]
    entries: np.ndarray

    def rounded(self, decimals: int = 3) -> np.ndarray:
        return np.round(self.entries, decimals)

    def entry(self, d: int, m: int) -> float:
        try:
            return float(self.entries[self.d_values.index(d), self.m_values.index(m)])
        except ValueError:
            raise ScenarioError(f"(d={d}, m={m}) is outside the table")


@dataclass(frozen=True)
class NoisePoint:
    eta: float
    value: float
    predicted: float

    @property
    def deviation(self) -> float:
        return abs(self.value - self.predicted)


def _ratio(kind: RatioKind, m: int, d: int) -> float:
    s = Scenario(m, d)
    if kind is RatioKind.QC:
        return quantum_bound(s) / classical_bound(s)
    return ns_bound(s) / quantum_bound(s)


def ratio_table(kind: Union[RatioKind, str], m_values: Sequence[int], d_values: Sequence[int]) -> RatioTable:
    kind = RatioKind(kind)
    m_values, d_values = tuple(m_values), tuple(d_values)
    if not m_values or not d_values:
        raise ScenarioError("a ratio table needs at least one m and one d")
    entries = np.array([[_ratio(kind, m, d) for m in m_values] for d in d_values])
    return RatioTable(kind, d_values, m_values, entries)


def ratio_tables(m_max: int, d_max: int, m_min: int = 2, d_min: int = 2) -> Tuple[RatioTable, RatioTable]:
    """Q/C and NS/Q over m_min..m_max and d_min..d_max."""
    m_values = range(m_min, m_max + 1)
    d_values = range(d_min, d_max + 1)
    return ratio_table(RatioKind.QC, m_values, d_values), ratio_table(RatioKind.NSQ, m_values, d_values)


def asymptotic_limits(m: int) -> Dict[str, float]:
    """
    Large-d limits of the ratios:
    Q/C -> (2m-1) pi cot(pi/2m) / (4m(m-1)) and NS/Q -> (2/pi) m tan(pi/2m).
    """
    if m < 2:
        raise ScenarioError(f"m must be at least 2, got {m}")
    half = math.pi / (2 * m)
    return {
        "lim_qc": (2 * m - 1) * math.pi / math.tan(half) / (4 * m * (m - 1)),
        "lim_nsq": 2 / math.pi * m * math.tan(half),
    }


def ratio_expansion(m: int, d: int) -> Dict[str, float]:
    """Second-order expansion of both ratios in 1/m."""
    pi2 = math.pi ** 2
    return {
        "qc": 1 + 1 / (2 * m) - (pi2 - 6) / (12 * m ** 2),
        "nsq": 1 + (pi2 / 12 - pi2 / (12 * d ** 2)) / m ** 2,
    }


def critical_visibility(s: Scenario) -> float:
    """White-noise fraction at which the optimal quantum value falls to the classical bound."""
    return 1 - classical_bound(s) / quantum_bound(s)


def violation_vs_noise(s: Scenario, etas: Sequence[float], workers: Optional[int] = None) -> List[NoisePoint]:
    """
    The correlator form on the noisy optimal state next to the line (1 - eta) m(d-1).
    """
    alice = cglmp_observables(s, Side.ALICE)
    bob = cglmp_observables(s, Side.BOB)
    state = max_entangled(s.d)
    top = quantum_bound(s)

    def point(eta: float) -> NoisePoint:
        b = behaviour_from_quantum(white_noise_mix(state, eta), alice, bob)
        return NoisePoint(float(eta), correlator_form_value(s, b), (1 - eta) * top)

    return parallel_map(point, list(etas), workers)


def shannon_entropy(probabilities: np.ndarray, base: float) -> float:
    # round-off leaves entries of order -1e-17, which scipy maps to -inf
    return float(entropy(np.clip(np.ravel(probabilities), 0, None), base=base))


def conditional_entropy_table(joint: np.ndarray, base: float) -> float:
    """H(A|B) = H(A, B) - H(B) for a table joint[a, b]."""
    joint = np.asarray(joint, dtype=float)
    return shannon_entropy(joint, base) - shannon_entropy(joint.sum(axis=0), base)


def mutual_information_table(joint: np.ndarray, base: float) -> float:
    joint = np.asarray(joint, dtype=float)
    return (shannon_entropy(joint.sum(axis=1), base) + shannon_entropy(joint.sum(axis=0), base)
            - shannon_entropy(joint, base))


def conditional_entropy(b: Behaviour, x: int, y: int, base: Optional[float] = None) -> float:
    """H(A_x|B_y) in base d unless another base is given."""
    return conditional_entropy_table(b.table(x, y), base or b.scenario.d)


def mutual_information(b: Behaviour, x: int, y: int, base: Optional[float] = None) -> float:
    return mutual_information_table(b.table(x, y), base or b.scenario.d)


def entanglement_entropy(state: Ket, base: Optional[float] = None) -> float:
    """Entropy of the reduced state, from the Schmidt vector when the state carries one."""
    if state.schmidt is not None:
        spectrum = state.schmidt ** 2
    else:
        psi = state.matrix()
        spectrum = np.clip(linalg.eigvalsh(psi @ psi.conj().T), 0, None)
    return shannon_entropy(spectrum, base or state.d)


def cglmp_optimal_state() -> Ket:
    """The d = 3 state maximally violating CGLMP, gamma = (1, (sqrt(11) - sqrt(3))/2, 1) normalised."""
    return schmidt_state([1, (math.sqrt(11) - math.sqrt(3)) / 2, 1])


def key_observables(s: Scenario, convention: Union[KeyConvention, str] = KeyConvention.CONJUGATE
                    ) -> Tuple[np.ndarray, np.ndarray]:
    """
    Projectors of Alice's A_1 and of Bob's key measurement B_{m+1}, which copies A_1 either
    entrywise conjugated or unchanged.
    """
    convention = KeyConvention(convention)
    alice = cglmp_observables(s, Side.ALICE).projectors[0]
    bob = alice.conj() if convention is KeyConvention.CONJUGATE else alice
    return alice, bob


def key_entropy_report(s: Scenario, state: Optional[Ket] = None) -> Dict:
    """
    H(A_1|B_key) on a state under both conventions, and the convention that gives zero on the
    maximally entangled state.
    """
    state = state or max_entangled(s.d)
    reference = max_entangled(s.d)
    report = {**s.to_dict(), "base": s.d}
    zero = []
    for convention in KeyConvention:
        alice, bob = key_observables(s, convention)
        report[convention.value] = conditional_entropy_table(joint_distribution(state, alice, bob), s.d)
        on_reference = conditional_entropy_table(joint_distribution(reference, alice, bob), s.d)
        if abs(on_reference) <= ZERO_ENTROPY_TOL:
            zero.append(convention.value)
    if not zero:
        logger.warning("no key convention gives zero conditional entropy for d=%d", s.d)
    report["zero_on_max_entangled"] = zero
    return report


def ideal_key_rate(h_cond: float, guessing_probability: float, base: float) -> float:
    """-log P_guess - H(A|B), logarithms in the given base."""
    if not 0 < guessing_probability <= 1:
        raise ScenarioError(f"guessing probability must lie in (0, 1], got {guessing_probability}")
    return -math.log(guessing_probability, base) - h_cond


class AnalysisAPIMixin:
    """API for noise robustness and entropy quantities of the handler's scenario."""

    def get_critical_visibility(self) -> float:
        return critical_visibility(self.scenario)

    def get_asymptotic_limits(self) -> Dict[str, float]:
        return asymptotic_limits(self.scenario.m)

    def get_violation_vs_noise(self, etas: Sequence[float]) -> List[NoisePoint]:
        """
        :param etas: noise levels in [0, 1]
        :return: list of NoisePoint
        """
        return violation_vs_noise(self.scenario, etas, self.workers)

    def get_key_entropy_report(self, state: Optional[Ket] = None) -> Dict:
        """
        :param state: state to report on, the CGLMP-optimal state for d = 3 and the
            maximally entangled state otherwise
        :return: dict with the conditional entropies and the key rates
        """
        s = self.scenario
        if state is None:
            state = cglmp_optimal_state() if s.d == 3 else max_entangled(s.d)
        report = key_entropy_report(s, state)
        report["entanglement_entropy"] = entanglement_entropy(state)
        report["key_rate"] = ideal_key_rate(report[KeyConvention.CONJUGATE.value], 1.0 / s.d, s.d)
        return report
