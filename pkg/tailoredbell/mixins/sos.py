import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import linalg
from scipy.stats import unitary_group

from tailoredbell.exceptions import CertificationError, ScenarioError
from tailoredbell.mixins.expression import barred_observable
from tailoredbell.mixins.kernel import Ket, ObservableSet, Side, cglmp_observables, random_observables
from tailoredbell.mixins.scenario import Scenario, correlator_weights
from tailoredbell.utils.util import SeedLike, make_rng, omega_power, parallel_map

logger = logging.getLogger(__name__)

SOS_TOL = 1e-9


class Provenance(str, Enum):
    CGLMP = "cglmp"
    RANDOM = "random"


@dataclass(frozen=True)
class SosCertificate:
    """
    Residual of Q I - B - 1/2 sum P^dagger P - 1/2 sum T^dagger T for one pair of measurement sets.
    """
    scenario: Scenario
    residual_norm: float
    residual_frobenius: float
    min_eigenvalue_shifted: float
    measurement_provenance: Provenance
    tolerance: float = SOS_TOL

    @property
    def valid(self) -> bool:
        return self.residual_norm <= self.tolerance

    def to_dict(self) -> Dict:
        return {
            **self.scenario.to_dict(),
            "residual_norm": self.residual_norm,
            "residual_frobenius": self.residual_frobenius,
            "min_eigenvalue_shifted": self.min_eigenvalue_shifted,
            "provenance": self.measurement_provenance.value,
            "tolerance": self.tolerance,
            "valid": self.valid,
        }


def _check_sets(s: Scenario, *sets: ObservableSet) -> None:
    for obs in sets:
        if obs.m != s.m or obs.d != s.d:
            raise ScenarioError(f"{obs.side.value} observables are for m={obs.m}, d={obs.d}, "
                                f"scenario is m={s.m}, d={s.d}")


def _bob_index(s: Scenario, j: int) -> int:
    """Bob setting j resolved into 1..m."""
    return (j - 1) % s.m + 1


def sos_t_coefficients(s: Scenario) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    mu, nu, tau of T_ik = mu B_2^(d-k) + nu B_(i+2)^(d-k) + tau B_(i+3)^(d-k), indexed [i-1, k-1]
    for i = 1..m-2 and k = 1..d-1. Rows below m-2 share one formula, the last row has its own;
    there are no rows for m = 2.
    """
    rows = s.m - 2
    mu = np.zeros((rows, s.d - 1), dtype=complex)
    nu = np.zeros_like(mu)
    tau = np.zeros_like(mu)
    if rows == 0:
        return mu, nu, tau

    c = 1 / (2 * math.cos(math.pi / (2 * s.m)))
    k = np.arange(1, s.d)
    phi = omega_power(s.d, (s.d - 2 * k) / (2 * s.m))

    def sin(j):
        return math.sin(math.pi * j / s.m)

    for i in range(1, s.m - 2):
        mu[i - 1] = phi ** (i + 1) * c * sin(1) / math.sqrt(sin(i) * sin(i + 1))
        nu[i - 1] = -phi * c * math.sqrt(sin(i + 1) / sin(i))
        tau[i - 1] = c * math.sqrt(sin(i) / sin(i + 1))

    root = math.sqrt(2 * math.cos(math.pi / s.m))
    mu[rows - 1] = -c / (phi * root)
    nu[rows - 1] = -omega_power(s.d, k) * phi * c / root
    tau[rows - 1] = c * root
    return mu, nu, tau


def bell_operator(s: Scenario, alice: ObservableSet, bob: ObservableSet) -> np.ndarray:
    """sum over i and k = 1..d-1 of A_i^k (x) barred B_i^k."""
    _check_sets(s, alice, bob)
    size = s.d * s.d
    out = np.zeros((size, size), dtype=complex)
    for i in range(1, s.m + 1):
        for k in range(1, s.d):
            out += np.kron(alice.power(i, k), barred_observable(s, bob, i, k))
    return out


def p_operator(s: Scenario, alice: ObservableSet, bob: ObservableSet, i: int, k: int) -> np.ndarray:
    """1 (x) barred B_i^k - (A_i^k)^dagger (x) 1."""
    _check_sets(s, alice, bob)
    eye = np.eye(s.d)
    return np.kron(eye, barred_observable(s, bob, i, k)) - np.kron(alice.power(i, k).conj().T, eye)


def t_operator(s: Scenario, bob: ObservableSet, i: int, k: int,
               coefficients: Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]] = None) -> np.ndarray:
    """1 (x) T_ik, Bob settings above m wrapping back to 1."""
    if not 1 <= i <= s.m - 2:
        raise ScenarioError(f"T_ik exists for i in 1..{s.m - 2}, got {i}")
    if not 1 <= k <= s.d - 1:
        raise ScenarioError(f"k must lie in 1..{s.d - 1}, got {k}")
    mu, nu, tau = coefficients or sos_t_coefficients(s)
    power = s.d - k
    local = (mu[i - 1, k - 1] * bob.power(2, power)
             + nu[i - 1, k - 1] * bob.power(_bob_index(s, i + 2), power)
             + tau[i - 1, k - 1] * bob.power(_bob_index(s, i + 3), power))
    return np.kron(np.eye(s.d), local)


def _sos_terms(s: Scenario, alice: ObservableSet, bob: ObservableSet) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    coefficients = sos_t_coefficients(s)
    ps = [p_operator(s, alice, bob, i, k) for i in range(1, s.m + 1) for k in range(1, s.d)]
    ts = [t_operator(s, bob, i, k, coefficients) for i in range(1, s.m - 1) for k in range(1, s.d)]
    return ps, ts


def sos_residual(s: Scenario, alice: ObservableSet, bob: ObservableSet,
                 provenance: Provenance = Provenance.CGLMP, tol: float = SOS_TOL) -> SosCertificate:
    """
    Compare the shifted Bell operator with its sum-of-squares decomposition.
    :param alice: Alice's projective measurements
    :param bob: Bob's projective measurements
    :param provenance: where the measurements came from, recorded in the certificate
    :param tol: spectral-norm tolerance of a valid certificate
    :return: SosCertificate
    """
    _check_sets(s, alice, bob)
    alice.validate()
    bob.validate()
    bell = bell_operator(s, alice, bob)
    shifted = s.m * (s.d - 1) * np.eye(s.d * s.d) - bell
    ps, ts = _sos_terms(s, alice, bob)
    squares = sum(p.conj().T @ p for p in ps) + sum((t.conj().T @ t for t in ts), np.zeros_like(shifted))
    residual = shifted - squares / 2
    certificate = SosCertificate(
        scenario=s,
        residual_norm=float(linalg.norm(residual, 2)),
        residual_frobenius=float(linalg.norm(residual, "fro")),
        min_eigenvalue_shifted=float(linalg.eigvalsh((shifted + shifted.conj().T) / 2)[0]),
        measurement_provenance=Provenance(provenance),
        tolerance=tol,
    )
    if not certificate.valid:
        logger.warning("SOS residual %.3e above tolerance %.1e for m=%d, d=%d (%s)",
                       certificate.residual_norm, tol, s.m, s.d, certificate.measurement_provenance.value)
    return certificate


def sos_constant(s: Scenario) -> float:
    """sum_k m|a_k|^2 + 1/2 sum_i (|mu|^2 + |nu|^2 + |tau|^2); equals m(d-1)/2."""
    a = correlator_weights(s)
    mu, nu, tau = sos_t_coefficients(s)
    squares = np.abs(mu) ** 2 + np.abs(nu) ** 2 + np.abs(tau) ** 2
    return float(s.m * np.sum(np.abs(a) ** 2) + 0.5 * np.sum(squares))


def sos_scalar_gap(s: Scenario, alice: ObservableSet, bob: ObservableSet, state: Ket) -> Tuple[float, float]:
    """
    Both sides of the decomposition read on one state:
    (1/2 sum ||P|psi>||^2 + 1/2 sum ||T|psi>||^2, Q - <psi|B|psi>).
    """
    psi = state.amplitudes
    ps, ts = _sos_terms(s, alice, bob)
    squares = 0.5 * sum(np.linalg.norm(op @ psi) ** 2 for op in ps + ts)
    value = np.vdot(psi, bell_operator(s, alice, bob) @ psi)
    return float(squares), float(s.m * (s.d - 1) - value.real)


def certify_random(s: Scenario, count: int, seed: SeedLike = None, tol: float = SOS_TOL,
                   conjugate: bool = False, workers: Optional[int] = None) -> List[SosCertificate]:
    """
    Certificates for seeded Haar-random measurement sets. With conjugate, Bob's projectors are
    additionally rotated by one random unitary per set.
    """
    rng = make_rng(seed)
    pairs = []
    for _ in range(count):
        alice = random_observables(s.d, s.m, Side.ALICE, rng)
        bob = random_observables(s.d, s.m, Side.BOB, rng)
        if conjugate:
            bob = bob.rotated(unitary_group.rvs(s.d, random_state=rng))
        pairs.append((alice, bob))
    return parallel_map(lambda pair: sos_residual(s, pair[0], pair[1], Provenance.RANDOM, tol), pairs, workers)


def chsh_sos_residual(alice: ObservableSet, bob: ObservableSet) -> float:
    """
    Spectral norm of 2 sqrt(2) - B_CHSH - (P_1^dagger P_1 + P_2^dagger P_2)/sqrt(2)
    with P_1 = A_1 - (B_1 + B_2)/sqrt(2) and P_2 = A_2 - (B_1 - B_2)/sqrt(2).
    """
    if alice.d != 2 or bob.d != 2 or alice.m != 2 or bob.m != 2:
        raise ScenarioError("the CHSH decomposition needs two settings with two outcomes")
    eye = np.eye(2)
    a1, a2 = alice.power(1, 1), alice.power(2, 1)
    b1, b2 = bob.power(1, 1), bob.power(2, 1)
    chsh = np.kron(a1, b1) + np.kron(a1, b2) + np.kron(a2, b1) - np.kron(a2, b2)
    p1 = np.kron(a1, eye) - np.kron(eye, b1 + b2) / math.sqrt(2)
    p2 = np.kron(a2, eye) - np.kron(eye, b1 - b2) / math.sqrt(2)
    residual = 2 * math.sqrt(2) * np.eye(4) - chsh - (p1.conj().T @ p1 + p2.conj().T @ p2) / math.sqrt(2)
    return float(linalg.norm(residual, 2))


class SosAPIMixin:
    """API for sum-of-squares certification of the quantum bound."""
    DEFAULT_RANDOM_COUNT = 20

    def certify_sos(self, strict: bool = True) -> SosCertificate:
        """
        Certify the decomposition for the optimal CGLMP measurements.
        :param strict: raise CertificationError when the residual exceeds the tolerance
        :return: SosCertificate
        """
        s = self.scenario
        certificate = sos_residual(s, self.get_observables("alice"), self.get_observables("bob"),
                                   Provenance.CGLMP, self.tolerance)
        if strict and not certificate.valid:
            raise CertificationError("SOS residual above tolerance", {"check": "sos", **certificate.to_dict()})
        return certificate

    def certify_sos_random(self, count: Optional[int] = None, seed: SeedLike = None,
                           strict: bool = True) -> List[SosCertificate]:
        """
        :param count: number of random measurement sets
        :param seed: RNG seed, the handler's seed when omitted
        :param strict: raise CertificationError on the first invalid certificate
        :return: list of SosCertificate
        """
        count = self.DEFAULT_RANDOM_COUNT if count is None else count
        seed = self.seed if seed is None else seed
        certificates = certify_random(self.scenario, count, seed, self.tolerance, workers=self.workers)
        failed = [c for c in certificates if not c.valid]
        if strict and failed:
            raise CertificationError(f"{len(failed)} of {count} random certificates failed",
                                     {"check": "sos-random", "seed": seed, **failed[0].to_dict()})
        return certificates
