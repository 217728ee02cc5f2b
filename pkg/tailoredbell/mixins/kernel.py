import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from scipy.stats import unitary_group

from tailoredbell.exceptions import NonProjectiveError, NumericalError, ScenarioError
from tailoredbell.mixins.scenario import Scenario
from tailoredbell.utils.util import SeedLike, make_rng, omega_power

logger = logging.getLogger(__name__)

OPERATOR_TOL = 1e-10
NORMALIZATION_TOL = 1e-12
NEGATIVITY_TOL = 1e-12
SIGNALLING_TOL = 1e-9


class Side(str, Enum):
    ALICE = "alice"
    BOB = "bob"


def _dimension_from_size(size: int) -> int:
    d = int(round(math.sqrt(size)))
    if d * d != size or d < 2:
        raise ScenarioError(f"a bipartite state needs d*d amplitudes with d >= 2, got {size}")
    return d


@dataclass(frozen=True, eq=False)
class Ket:
    """
    Pure two-qudit state, amplitudes in the row-major |i>|j> product basis.
    schmidt is set when the state is sum_q gamma_q |qq>.
    """
    amplitudes: np.ndarray
    schmidt: Optional[np.ndarray] = None

    def __post_init__(self):
        amplitudes = np.array(self.amplitudes, dtype=complex).reshape(-1)
        d = _dimension_from_size(amplitudes.size)
        norm = np.linalg.norm(amplitudes)
        if abs(norm - 1) > NORMALIZATION_TOL:
            raise NumericalError(f"state is not normalised: norm = {norm!r}")
        amplitudes.setflags(write=False)
        object.__setattr__(self, "amplitudes", amplitudes)
        if self.schmidt is not None:
            schmidt = np.array(self.schmidt, dtype=float).reshape(-1)
            if schmidt.size != d:
                raise ScenarioError(f"Schmidt vector has {schmidt.size} entries, expected {d}")
            expected = np.zeros((d, d))
            np.fill_diagonal(expected, schmidt)
            if np.max(np.abs(self.matrix() - expected)) > OPERATOR_TOL:
                raise ScenarioError("Schmidt vector does not match the amplitudes")
            schmidt.setflags(write=False)
            object.__setattr__(self, "schmidt", schmidt)

    @property
    def d(self) -> int:
        return _dimension_from_size(self.amplitudes.size)

    def matrix(self) -> np.ndarray:
        """Coefficient matrix psi[i, j] (Alice row, Bob column)."""
        return self.amplitudes.reshape(self.d, self.d)

    def density(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())


class ObservableSet:
    """
    d-outcome projective measurements of one party, projectors[x][a] for setting x (0-based
    storage, 1-based API). The unitary observables A_x^k = sum_a omega^(ak) P_a are derived on
    demand and cached.
    """

    def __init__(self, side: Union[Side, str], projectors: Sequence[Sequence[np.ndarray]],
                 validate: bool = True, tol: float = OPERATOR_TOL):
        self.side = Side(side)
        stack = np.array(projectors, dtype=complex)
        if stack.ndim != 4 or stack.shape[1] != stack.shape[2] or stack.shape[2] != stack.shape[3]:
            raise ScenarioError(f"projectors must have shape (m, d, d, d), got {stack.shape}")
        stack.setflags(write=False)
        self.projectors = stack
        self._powers: Dict[tuple, np.ndarray] = {}
        if validate:
            self.validate(tol)

    @property
    def m(self) -> int:
        return self.projectors.shape[0]

    @property
    def d(self) -> int:
        return self.projectors.shape[1]

    def validate(self, tol: float = OPERATOR_TOL) -> None:
        """
        Raise NonProjectiveError unless every setting is a complete family of
        orthogonal Hermitian projectors.
        """
        identity = np.eye(self.d)
        for x, family in enumerate(self.projectors, start=1):
            total = family.sum(axis=0)
            if np.max(np.abs(total - identity)) > tol:
                raise NonProjectiveError(f"{self.side.value} setting {x}: projectors do not sum to identity")
            for a, p in enumerate(family):
                if np.max(np.abs(p - p.conj().T)) > tol:
                    raise NonProjectiveError(f"{self.side.value} setting {x}, outcome {a}: not Hermitian")
                for b, q in enumerate(family):
                    target = p if a == b else np.zeros_like(p)
                    if np.max(np.abs(p @ q - target)) > tol:
                        raise NonProjectiveError(
                            f"{self.side.value} setting {x}: outcomes {a} and {b} are not orthogonal projectors")

    def power(self, x: int, k: int) -> np.ndarray:
        """A_x^k for setting x in 1..m and 0 <= k <= d."""
        if not 1 <= x <= self.m:
            raise ScenarioError(f"setting must lie in 1..{self.m}, got {x}")
        if not 0 <= k <= self.d:
            raise ScenarioError(f"power must lie in 0..{self.d}, got {k}")
        key = (x, k % self.d)
        if key not in self._powers:
            phases = omega_power(self.d, np.arange(self.d) * key[1])
            self._powers[key] = np.tensordot(phases, self.projectors[x - 1], axes=1)
        return self._powers[key]

    def conjugated(self) -> "ObservableSet":
        return ObservableSet(self.side, self.projectors.conj(), validate=False)

    def rotated(self, unitary: np.ndarray) -> "ObservableSet":
        """Every projector conjugated by the same unitary, P -> U P U^dagger."""
        rotated = np.einsum("ij,xajk,lk->xail", unitary, self.projectors, unitary.conj())
        return ObservableSet(self.side, rotated, validate=False)


@dataclass(frozen=True, eq=False)
class Behaviour:
    """Joint probabilities p[x, y, a, b] = P(A_x = a, B_y = b), settings stored 0-based."""
    scenario: Scenario
    p: np.ndarray

    def __post_init__(self):
        s = self.scenario
        p = np.array(self.p, dtype=float)
        if p.size != (s.m * s.d) ** 2:
            raise ScenarioError(f"behaviour needs {(s.m * s.d) ** 2} entries, got {p.size}")
        p = p.reshape(s.m, s.m, s.d, s.d)
        if p.min() < -NEGATIVITY_TOL:
            raise NumericalError(f"behaviour has a negative probability {p.min()!r}")
        totals = p.sum(axis=(2, 3))
        if np.max(np.abs(totals - 1)) > OPERATOR_TOL:
            worst = totals.flat[np.argmax(np.abs(totals - 1))]
            raise NumericalError(f"behaviour is not normalised, worst total {worst!r}")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    def table(self, x: int, y: int) -> np.ndarray:
        """d x d table P(A_x = a, B_y = b) for 1-based settings."""
        return self.p[self.scenario.check_setting(x, "x"), self.scenario.check_setting(y, "y")]

    def flat(self) -> np.ndarray:
        return self.p.reshape(-1)

    def mix(self, other: "Behaviour", weight: float) -> "Behaviour":
        """weight * self + (1 - weight) * other."""
        if other.scenario != self.scenario:
            raise ScenarioError("cannot mix behaviours of different scenarios")
        return Behaviour(self.scenario, weight * self.p + (1 - weight) * other.p)


@dataclass(frozen=True)
class NoSignallingReport:
    max_violation: float
    alice_violation: float
    bob_violation: float
    ok: bool


def fourier_matrix(d: int) -> np.ndarray:
    """F[i, j] = omega^(ij) / sqrt(d)."""
    if d < 2:
        raise ScenarioError(f"d must be at least 2, got {d}")
    idx = np.arange(d)
    return omega_power(d, np.outer(idx, idx)) / math.sqrt(d)


def cglmp_observables(s: Scenario, side: Union[Side, str]) -> ObservableSet:
    """
    Optimal CGLMP measurements. Outcome a is the eigenvector of eigenvalue omega^a:
    U_x^dagger F e_a for Alice and V_y F^dagger e_a for Bob, with U_x = diag(omega^(j theta_x))
    and V_y = diag(omega^(j zeta_y)).
    """
    side = Side(side)
    f = fourier_matrix(s.d)
    j = np.arange(s.d)
    families = []
    for x in range(1, s.m + 1):
        if side is Side.ALICE:
            basis = omega_power(s.d, -j * s.theta(x))[:, None] * f
        else:
            basis = omega_power(s.d, j * s.zeta(x))[:, None] * f.conj()
        families.append([np.outer(basis[:, a], basis[:, a].conj()) for a in range(s.d)])
    return ObservableSet(side, families)


def closed_form_power(s: Scenario, side: Union[Side, str], x: int, l: int) -> np.ndarray:
    """Explicit generalized-permutation form of the CGLMP observable power A_x^l or B_y^l."""
    side = Side(side)
    s.check_setting(x)
    if not 0 <= l <= s.d:
        raise ScenarioError(f"power must lie in 0..{s.d}, got {l}")
    phase = s.theta(x) if side is Side.ALICE else s.zeta(x)
    wrapped = omega_power(s.d, -(s.d - l) * phase)
    shifted = omega_power(s.d, l * phase)
    matrix = np.zeros((s.d, s.d), dtype=complex)
    for n in range(l):
        if side is Side.ALICE:
            matrix[s.d - l + n, n] = wrapped
        else:
            matrix[n, s.d - l + n] = wrapped
    for n in range(l, s.d):
        if side is Side.ALICE:
            matrix[n - l, n] = shifted
        else:
            matrix[n, n - l] = shifted
    return matrix


def observable_power(obs: ObservableSet, x: int, k: int) -> np.ndarray:
    return obs.power(x, k)


def random_observables(d: int, m: int, side: Union[Side, str] = Side.BOB, seed: SeedLike = None) -> ObservableSet:
    """Rank-one projective measurements in Haar-random bases."""
    rng = make_rng(seed)
    families = []
    for _ in range(m):
        u = unitary_group.rvs(d, random_state=rng)
        families.append([np.outer(u[:, a], u[:, a].conj()) for a in range(d)])
    return ObservableSet(side, families)


def schmidt_state(gamma: Sequence[float]) -> Ket:
    """sum_q gamma_q |qq>, normalised."""
    gamma = np.asarray(gamma, dtype=float).reshape(-1)
    norm = np.linalg.norm(gamma)
    if norm == 0:
        raise ScenarioError("Schmidt vector must not be zero")
    gamma = gamma / norm
    d = gamma.size
    amplitudes = np.zeros(d * d, dtype=complex)
    amplitudes[np.arange(d) * (d + 1)] = gamma
    return Ket(amplitudes, schmidt=gamma)


def max_entangled(d: int) -> Ket:
    return schmidt_state(np.ones(d))


def product_state(d: int, i: int = 0, j: int = 0) -> Ket:
    amplitudes = np.zeros(d * d, dtype=complex)
    amplitudes[i * d + j] = 1
    return Ket(amplitudes)


def density_operator(state: Ket) -> np.ndarray:
    return state.density()


def _checked_real(values: np.ndarray, what: str) -> np.ndarray:
    residue = np.max(np.abs(values.imag)) if values.size else 0.0
    if residue > OPERATOR_TOL:
        raise NumericalError(f"{what} has imaginary part {residue!r}; input is not Hermitian")
    return values.real


def _joint_probabilities(state: Union[Ket, np.ndarray], alice: np.ndarray, bob: np.ndarray) -> np.ndarray:
    """alice: (m, d, d, d), bob: (m, d, d, d) -> p[x, y, a, b]."""
    if isinstance(state, Ket):
        psi = state.matrix()
        values = np.einsum("ij,xaik,kl,ybjl->xyab", psi.conj(), alice, psi, bob, optimize=True)
    else:
        rho = np.asarray(state, dtype=complex)
        d = alice.shape[-1]
        if rho.shape != (d * d, d * d):
            raise ScenarioError(f"density operator must be {d * d}x{d * d}, got {rho.shape}")
        values = np.einsum("ijkl,xaki,yblj->xyab", rho.reshape(d, d, d, d), alice, bob, optimize=True)
    return _checked_real(values, "probability")


def behaviour_from_quantum(state: Union[Ket, np.ndarray], alice: ObservableSet, bob: ObservableSet) -> Behaviour:
    """
    P(A_x = a, B_y = b) = <psi| P_a^(x) (x) P_b^(y) |psi>, or Tr[rho P_a^(x) (x) P_b^(y)]
    when a density operator is passed.
    """
    if alice.d != bob.d or alice.m != bob.m:
        raise ScenarioError(f"Alice has (m={alice.m}, d={alice.d}) but Bob has (m={bob.m}, d={bob.d})")
    if isinstance(state, Ket) and state.d != alice.d:
        raise ScenarioError(f"state has local dimension {state.d}, measurements act on {alice.d}")
    p = _joint_probabilities(state, alice.projectors, bob.projectors)
    return Behaviour(Scenario(alice.m, alice.d), p)


def behaviour_from_density(rho: np.ndarray, alice: ObservableSet, bob: ObservableSet) -> Behaviour:
    return behaviour_from_quantum(rho, alice, bob)


def joint_distribution(state: Union[Ket, np.ndarray], alice: Sequence[np.ndarray],
                       bob: Sequence[np.ndarray]) -> np.ndarray:
    """d x d table P(a, b) for one measurement per party, given as lists of projectors."""
    alice = np.asarray(alice, dtype=complex)[None]
    bob = np.asarray(bob, dtype=complex)[None]
    return _joint_probabilities(state, alice, bob)[0, 0]


def closed_form_probability(s: Scenario, gamma: Sequence[float], x: int, y: int, a: int, b: int) -> float:
    """
    P(A_x = a, B_y = b) for the CGLMP measurements on sum_q gamma_q |qq>,
    |(1/d) sum_q gamma_q exp(2 pi i q (a - b - theta_x + zeta_y) / d)|^2.
    """
    s.check_setting(x, "x")
    s.check_setting(y, "y")
    s.check_outcome(a, "a")
    s.check_outcome(b, "b")
    gamma = np.asarray(gamma, dtype=float)
    q = np.arange(s.d)
    amplitude = np.sum(gamma * omega_power(s.d, q * (a - b - s.theta(x) + s.zeta(y)))) / s.d
    return float(abs(amplitude) ** 2)


def correlator(b: Behaviour, x: int, y: int, k: int, l: int) -> complex:
    """<A_x^k B_y^l> = sum_ab omega^(ak + bl) P(A_x = a, B_y = b)."""
    table = b.table(x, y)
    d = b.scenario.d
    if k % d == 0 and l % d == 0:
        return complex(1.0)
    idx = np.arange(d)
    phases = omega_power(d, np.add.outer(idx * k, idx * l))
    return complex(np.sum(phases * table))


def correlator_tensor(b: Behaviour) -> np.ndarray:
    """C[x, y, k, l] = <A_x^k B_y^l> for all settings and powers (0-based settings)."""
    d = b.scenario.d
    return np.fft.ifft2(b.p, axes=(2, 3)) * d * d


def behaviour_from_correlators(s: Scenario, correlators: np.ndarray) -> Behaviour:
    """Inverse of correlator_tensor."""
    p = np.fft.fft2(np.asarray(correlators, dtype=complex), axes=(2, 3)) / (s.d * s.d)
    return Behaviour(s, _checked_real(p, "recovered probability"))


def uniform_behaviour(s: Scenario) -> Behaviour:
    return Behaviour(s, np.full((s.m, s.m, s.d, s.d), 1.0 / s.d ** 2))


def check_no_signalling(b: Behaviour, tol: float = SIGNALLING_TOL) -> NoSignallingReport:
    """
    Largest change of a marginal under a change of the remote setting:
    Alice's marginals must not depend on y, Bob's not on x.
    """
    alice_marginals = b.p.sum(axis=3)
    bob_marginals = b.p.sum(axis=2)
    alice = float(np.max(alice_marginals.max(axis=1) - alice_marginals.min(axis=1)))
    bob = float(np.max(bob_marginals.max(axis=0) - bob_marginals.min(axis=0)))
    worst = max(alice, bob)
    return NoSignallingReport(max_violation=worst, alice_violation=alice, bob_violation=bob, ok=worst <= tol)


def white_noise_mix(state: Ket, eta: float) -> np.ndarray:
    """(1 - eta)|psi><psi| + eta I/d^2."""
    if not 0 <= eta <= 1:
        raise ScenarioError(f"noise level must lie in [0, 1], got {eta}")
    size = state.amplitudes.size
    return (1 - eta) * state.density() + eta * np.eye(size) / size


def transfer_identity_residual(m_op: np.ndarray, n_op: np.ndarray) -> float:
    """|| (M (x) N)|psi+> - (1 (x) N M^T)|psi+> ||, zero for every M and N."""
    d = m_op.shape[0]
    psi = max_entangled(d).amplitudes
    left = np.kron(m_op, n_op) @ psi
    right = np.kron(np.eye(d), n_op @ m_op.T) @ psi
    return float(np.linalg.norm(left - right))


def local_marginals(b: Behaviour) -> List[np.ndarray]:
    """Single-party marginals [alice[x, a], bob[y, b]] averaged over the remote setting (0-based settings)."""
    return [b.p.sum(axis=(1, 3)) / b.scenario.m, b.p.sum(axis=(0, 2)) / b.scenario.m]


class KernelAPIMixin:
    """API for the optimal state, the optimal measurements and the behaviours they produce."""

    def get_observables(self, side: str = "alice") -> ObservableSet:
        """
        Optimal CGLMP measurements of one party, built once per handler.
        :param side: "alice" or "bob"
        :return: ObservableSet
        """
        side = Side(side)
        if side not in self._observables:
            self._observables[side] = cglmp_observables(self.scenario, side)
            logger.debug("built %s observables for m=%d, d=%d", side.value, self.scenario.m, self.scenario.d)
        return self._observables[side]

    def get_optimal_state(self) -> Ket:
        return max_entangled(self.scenario.d)

    def get_optimal_behaviour(self) -> Behaviour:
        return behaviour_from_quantum(self.get_optimal_state(), self.get_observables("alice"),
                                      self.get_observables("bob"))

    def get_noisy_behaviour(self, eta: float) -> Behaviour:
        """
        Optimal measurements on the maximally entangled state mixed with white noise.
        :param eta: noise fraction in [0, 1]
        :return: Behaviour
        """
        rho = white_noise_mix(self.get_optimal_state(), eta)
        return behaviour_from_quantum(rho, self.get_observables("alice"), self.get_observables("bob"))

    def get_random_observables(self, side: str = "bob", seed: SeedLike = None) -> ObservableSet:
        """Haar-random measurements, seeded with the handler's seed unless another is given."""
        return random_observables(self.scenario.d, self.scenario.m, side, self.seed if seed is None else seed)

    def check_behaviour(self, behaviour: Behaviour, tol: float = SIGNALLING_TOL) -> NoSignallingReport:
        return check_no_signalling(behaviour, tol)

