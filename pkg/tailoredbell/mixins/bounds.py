import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from tailoredbell.exceptions import BudgetExceededError, CertificationError, ScenarioError
from tailoredbell.mixins.expression import correlator_form_value
from tailoredbell.mixins.kernel import Behaviour, Side, behaviour_from_quantum, cglmp_observables, max_entangled
from tailoredbell.mixins.scenario import (CoefficientSet, Scenario, coefficient_sum, folded_weights, g_func,
                                          hatted_alpha, tailored_coefficients)
from tailoredbell.utils.util import parallel_map

logger = logging.getLogger(__name__)

DEFAULT_BUDGET = 10 ** 8
# largest suffix block enumerated in one numpy pass
CHUNK_SIZE = 2 ** 20
TIE_TOL = 1e-9


@dataclass(frozen=True)
class DeterministicStrategy:
    """
    Output differences q_1..q_{2m-1} of a local deterministic strategy,
    q_1 = a_1 - b_1, q_2 = b_1 - a_2, ..., q_{2m-1} = a_m - b_m (mod d).
    The last difference follows from q_{2m} = -1 - sum q_i (mod d).
    """
    d: int
    q: Tuple[int, ...]

    def __post_init__(self):
        q = tuple(int(v) for v in self.q)
        if len(q) % 2 == 0 or len(q) < 3:
            raise ScenarioError(f"a strategy has 2m-1 >= 3 differences, got {len(q)}")
        if any(not 0 <= v < self.d for v in q):
            raise ScenarioError(f"differences must lie in 0..{self.d - 1}, got {q}")
        object.__setattr__(self, "q", q)

    @property
    def m(self) -> int:
        return (len(self.q) + 1) // 2

    @property
    def last(self) -> int:
        return (-1 - sum(self.q)) % self.d

    def full(self) -> Tuple[int, ...]:
        return self.q + (self.last,)


@dataclass(frozen=True)
class BruteForceResult:
    value: float
    probability_value: float
    argmax: DeterministicStrategy
    evaluated: int


@dataclass(frozen=True)
class BoundsReport:
    scenario: Scenario
    classical: float
    quantum: float
    no_signalling: float
    algebraic_probability_form: float
    bruteforce: Optional[float] = None
    notes: List[str] = field(default_factory=list)

    @property
    def ratio_qc(self) -> float:
        return self.quantum / self.classical

    @property
    def ratio_nsq(self) -> float:
        return self.no_signalling / self.quantum

    @property
    def ordered(self) -> bool:
        return self.classical < self.quantum < self.no_signalling

    def check_ordering(self) -> "BoundsReport":
        if not self.ordered:
            record = {"check": "bound-ordering", **self.to_dict()}
            raise CertificationError(f"bounds are not strictly ordered for {self.scenario.to_dict()}", record)
        return self

    def to_dict(self) -> Dict:
        out = {
            **self.scenario.to_dict(),
            "classical": self.classical,
            "quantum": self.quantum,
            "no_signalling": self.no_signalling,
            "algebraic": self.algebraic_probability_form,
            "ratio_qc": self.ratio_qc,
            "ratio_nsq": self.ratio_nsq,
            "ordered": self.ordered,
        }
        if self.bruteforce is not None:
            out["bruteforce"] = self.bruteforce
        return out


def _tan_half(s: Scenario) -> float:
    return math.tan(math.pi / (2 * s.m))


def classical_bound(s: Scenario) -> float:
    """(1/2) tan(pi/2m) [(2m-1) g(0) - g(1 - 1/m)] - m."""
    return 0.5 * _tan_half(s) * ((2 * s.m - 1) * g_func(s, 0) - g_func(s, 1 - 1.0 / s.m)) - s.m


def hatted_to_correlator(s: Scenario, hatted: float) -> float:
    return 0.5 * _tan_half(s) * hatted - s.m


def probability_to_correlator(s: Scenario, value: float, c: CoefficientSet) -> float:
    """Convert a probability-form value through I~ = d I - 2m S."""
    return s.d * value - 2 * s.m * coefficient_sum(c)


def strategy_value(s: Scenario, q: DeterministicStrategy, weights: Sequence[float]) -> float:
    """sum of weights over all 2m differences; weights may be hatted or folded."""
    weights = np.asarray(weights, dtype=float)
    return float(sum(weights[v] for v in q.full()))


def strategy_from_outputs(s: Scenario, alice: Sequence[int], bob: Sequence[int]) -> DeterministicStrategy:
    """Reduce raw outputs a_1..a_m, b_1..b_m to the chained differences."""
    if len(alice) != s.m or len(bob) != s.m:
        raise ScenarioError(f"need {s.m} outputs per party, got {len(alice)} and {len(bob)}")
    q = []
    for i in range(s.m):
        q.append((alice[i] - bob[i]) % s.d)
        if i < s.m - 1:
            q.append((bob[i] - alice[i + 1]) % s.d)
    strategy = DeterministicStrategy(s.d, tuple(q))
    # the closing pair reads B_m = A_1 + 1 + q_2m
    if (bob[-1] - alice[0] - 1) % s.d != strategy.last:
        raise ScenarioError("outputs are inconsistent with the difference reduction")
    return strategy


def deterministic_behaviour(s: Scenario, alice: Sequence[int], bob: Sequence[int]) -> Behaviour:
    """p(a, b | x, y) = [a = alice[x]] [b = bob[y]]."""
    if len(alice) != s.m or len(bob) != s.m:
        raise ScenarioError(f"need {s.m} outputs per party, got {len(alice)} and {len(bob)}")
    p = np.zeros((s.m, s.m, s.d, s.d))
    for x, a in enumerate(alice):
        for y, b in enumerate(bob):
            p[x, y, s.check_outcome(a, "a"), s.check_outcome(b, "b")] = 1
    return Behaviour(s, p)


def _suffix_tables(d: int, length: int, weights: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Weight sums and digit sums of every suffix of the given length, in lexicographic order."""
    values = np.zeros((d,) * length)
    sums = np.zeros((d,) * length, dtype=np.int64)
    for j in range(length):
        shape = [1] * length
        shape[j] = d
        values = values + weights.reshape(shape)
        sums = sums + np.arange(d).reshape(shape)
    return values.reshape(-1), sums.reshape(-1)


def classical_bound_bruteforce(s: Scenario, c: Optional[CoefficientSet] = None, budget: int = DEFAULT_BUDGET,
                               workers: Optional[int] = None) -> BruteForceResult:
    """
    Exhaustive maximum of the probability form over the reduced strategy space Z_d^(2m-1).
    Ties resolve to the lexicographically smallest difference vector.
    :param c: coefficient set, tailored when omitted
    :param budget: largest number of strategies allowed
    :param workers: threads used for the prefix blocks
    :return: BruteForceResult with the value converted to correlator units
    """
    c = c or tailored_coefficients(s)
    weights = folded_weights(s, c)
    free = 2 * s.m - 1
    total = s.d ** free
    if total > budget:
        raise BudgetExceededError(f"{total} strategies for m={s.m}, d={s.d} exceed the budget {budget}")

    suffix_len = free
    while s.d ** suffix_len > CHUNK_SIZE and suffix_len > 1:
        suffix_len -= 1
    prefix_len = free - suffix_len
    suffix_values, suffix_sums = _suffix_tables(s.d, suffix_len, weights)
    logger.debug("enumerating %d strategies in %d blocks", total, s.d ** prefix_len)

    def block(index: int) -> Tuple[float, int]:
        prefix = np.unravel_index(index, (s.d,) * prefix_len) if prefix_len else ()
        head = float(sum(weights[v] for v in prefix))
        closing = weights[(-1 - int(sum(prefix)) - suffix_sums) % s.d]
        values = head + suffix_values + closing
        best = float(values.max())
        return best, int(np.argmax(values >= best - TIE_TOL))

    results = parallel_map(block, range(s.d ** prefix_len), workers)
    best_value, best_index = -math.inf, 0
    for index, (value, offset) in enumerate(results):
        if value > best_value + TIE_TOL:
            best_index = index * suffix_values.size + offset
        best_value = max(best_value, value)

    digits = np.unravel_index(best_index, (s.d,) * free)
    argmax = DeterministicStrategy(s.d, tuple(int(v) for v in digits))
    return BruteForceResult(value=probability_to_correlator(s, best_value, c), probability_value=best_value,
                            argmax=argmax, evaluated=total)


def classical_bound_dp(s: Scenario, hatted: bool = False, c: Optional[CoefficientSet] = None) -> float:
    """
    Chain of single-variable maximisations. F starts as the closing weight w[-1 - t] and absorbs
    one difference per step, F(t) <- max_q w[q] + F(t + q); the answer is F(0).
    :param hatted: return the raw value over the unscaled weights g(k)
    :param c: custom coefficient set, evaluated over its folded weights instead
    :return: the classical bound
    """
    if c is not None:
        weights = folded_weights(s, c)
    else:
        weights = hatted_alpha(s)
    t = np.arange(s.d)
    best = weights[(-1 - t) % s.d]
    for _ in range(2 * s.m - 1):
        best = np.max(weights[None, :] + best[(t[:, None] + t[None, :]) % s.d], axis=1)
    value = float(best[0])
    if c is not None:
        return probability_to_correlator(s, value, c)
    return value if hatted else hatted_to_correlator(s, value)


def h_function(s: Scenario, weights: Optional[Sequence[float]] = None) -> np.ndarray:
    """h(x) = max_y w_y + w_{-1-x-y}, over the hatted weights by default."""
    weights = hatted_alpha(s) if weights is None else np.asarray(weights, dtype=float)
    x = np.arange(s.d)[:, None]
    y = np.arange(s.d)[None, :]
    return np.max(weights[y] + weights[(-1 - x - y) % s.d], axis=1)


def quantum_bound(s: Scenario) -> float:
    return float(s.m * (s.d - 1))


def quantum_value_at_optimal(s: Scenario) -> float:
    """The correlator form on the maximally entangled state with the CGLMP measurements."""
    b = behaviour_from_quantum(max_entangled(s.d), cglmp_observables(s, Side.ALICE), cglmp_observables(s, Side.BOB))
    return correlator_form_value(s, b)


def ns_bound(s: Scenario) -> float:
    """m tan(pi/2m) g(0) - m."""
    return s.m * _tan_half(s) * g_func(s, 0) - s.m


def algebraic_bound(s: Scenario, c: Optional[CoefficientSet] = None) -> float:
    """Largest probability-form value with every term at its best weight, 2m alpha_0 for the tailored set."""
    c = c or tailored_coefficients(s)
    return 2 * s.m * float(np.max(folded_weights(s, c)))


def ns_extremal_behaviour(s: Scenario) -> Behaviour:
    """
    Perfect correlations on (A_y, B_y) and (A_{y+1}, B_y), b = a + 1 on (A_1, B_m), uniform elsewhere.
    """
    eye = np.eye(s.d) / s.d
    p = np.full((s.m, s.m, s.d, s.d), 1.0 / s.d ** 2)
    for y in range(s.m):
        p[y, y] = eye
    for y in range(s.m - 1):
        p[y + 1, y] = eye
    p[0, s.m - 1] = np.roll(eye, 1, axis=1)
    return Behaviour(s, p)


def chained_bounds(m: int) -> Tuple[float, float, float]:
    """Classical, quantum and no-signalling bounds for d = 2."""
    cos = math.cos(math.pi / (2 * m))
    return (m - 1) / cos, float(m), m / cos


def two_setting_bounds(d: int) -> Tuple[float, float, float]:
    """Classical, quantum and no-signalling bounds for m = 2."""
    def cot(v):
        return 1.0 / math.tan(v)

    classical = 0.5 * (3 * cot(math.pi / (4 * d)) - cot(3 * math.pi / (4 * d))) - 2
    return classical, 2.0 * (d - 1), 2 * cot(math.pi / (4 * d)) - 2


def bounds_report(s: Scenario, budget: Optional[int] = None, workers: Optional[int] = None,
                  strict: bool = False) -> BoundsReport:
    """
    Closed-form bounds; with a budget the classical bound is also enumerated when the
    strategy space fits in it. Without strict an oversized space only leaves a note.
    """
    notes = []
    bruteforce = None
    if budget is not None:
        try:
            bruteforce = classical_bound_bruteforce(s, budget=budget, workers=workers).value
        except BudgetExceededError as e:
            if strict:
                raise
            logger.info("skipping brute-force cross-check: %s", e)
            notes.append(str(e))
    return BoundsReport(s, classical_bound(s), quantum_bound(s), ns_bound(s), algebraic_bound(s),
                        bruteforce, notes)


class BoundsAPIMixin:
    """API for the classical, quantum, no-signalling and algebraic bounds."""
    DEFAULT_BUDGET = DEFAULT_BUDGET

    def get_classical_bound(self) -> float:
        return classical_bound(self.scenario)

    def get_classical_bound_bruteforce(self, source: str = "tailored",
                                       budget: Optional[int] = None) -> BruteForceResult:
        """
        Enumerate the local deterministic strategies.
        :param source: "tailored" or "cglmp"
        :param budget: strategy budget, the handler's budget when omitted
        :return: BruteForceResult
        """
        return classical_bound_bruteforce(self.scenario, self.get_coefficients(source),
                                          budget or self.budget, self.workers)

    def get_classical_bound_dp(self, hatted: bool = False) -> float:
        return classical_bound_dp(self.scenario, hatted)

    def get_quantum_bound(self) -> float:
        return quantum_bound(self.scenario)

    def get_ns_bound(self) -> float:
        return ns_bound(self.scenario)

    def get_ns_extremal_behaviour(self) -> Behaviour:
        return ns_extremal_behaviour(self.scenario)

    def get_bounds_report(self, cross_check: bool = False) -> BoundsReport:
        """
        :param cross_check: also enumerate the classical bound within the handler's budget
        :return: BoundsReport, ordering verified
        """
        report = bounds_report(self.scenario, self.budget if cross_check else None, self.workers, strict=True)
        if report.bruteforce is not None and abs(report.bruteforce - report.classical) > self.tolerance:
            raise CertificationError("brute-force classical bound disagrees with the closed form",
                                     {"check": "classical-bound", **report.to_dict()})
        return report.check_ordering()
