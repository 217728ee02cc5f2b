import logging
from typing import Any, Dict, Optional

from tailoredbell.exceptions import BellError, CertificationError, ScenarioError
from tailoredbell.handlers.report_handler import Report
from tailoredbell.mixins.analysis import AnalysisAPIMixin
from tailoredbell.mixins.bounds import DEFAULT_BUDGET, BoundsAPIMixin
from tailoredbell.mixins.expression import ExpressionAPIMixin
from tailoredbell.mixins.kernel import KernelAPIMixin, check_no_signalling
from tailoredbell.mixins.scenario import Scenario, ScenarioAPIMixin
from tailoredbell.mixins.sos import SOS_TOL, SosAPIMixin

logger = logging.getLogger(__name__)


class BellHandler(ScenarioAPIMixin,
                  KernelAPIMixin,
                  ExpressionAPIMixin,
                  BoundsAPIMixin,
                  SosAPIMixin,
                  AnalysisAPIMixin):
    """
    The BellHandler class is the backend part of the API, the actual computations
    are implemented in Mixins.
    One handler is bound to one (m, d) scenario and caches its optimal measurements.
    """

    def __init__(self, m: int, d: int, tolerance: float = SOS_TOL, budget: int = DEFAULT_BUDGET,
                 seed: Optional[int] = None, workers: Optional[int] = None):
        """
        Initialise the handler for one scenario
        :param m: settings per party
        :param d: outcomes per setting
        :param tolerance: tolerance of the mathematical checks
        :param budget: largest brute-force enumeration allowed
        :param seed: seed of the random measurement sets
        :param workers: threads for enumerations and scans, serial when None
        """
        if tolerance <= 0:
            raise ScenarioError(f"tolerance must be positive, got {tolerance}")
        if budget <= 0:
            raise ScenarioError(f"budget must be positive, got {budget}")
        self.scenario = Scenario(m, d)
        self.tolerance = tolerance
        self.budget = budget
        self.seed = seed
        self.workers = workers
        self._observables = {}

    def setup(self) -> bool:
        """
        Build the optimal measurements of both parties.
        :return: bool
        """
        self.get_observables("alice")
        self.get_observables("bob")
        logger.info("workbench ready for m=%d, d=%d", self.scenario.m, self.scenario.d)
        return True

    def _ns_point(self) -> Dict:
        b = self.get_ns_extremal_behaviour()
        report = check_no_signalling(b, self.tolerance)
        value = self.get_expression_value(b)
        bound = self.get_ns_bound()
        record = {
            **self.scenario.to_dict(),
            "value": value,
            "ns_bound": bound,
            "probability_value": self.get_expression_value(b, "probability"),
            "max_signalling": report.max_violation,
            "behaviour": Report.serialize_behaviour(b),
        }
        if not report.ok or abs(value - bound) > self.tolerance:
            raise CertificationError("no-signalling point check failed", {"check": "ns-point", **record})
        return record

    def _noise_scan(self, etas) -> Dict:
        points = self.get_violation_vs_noise(etas)
        record = {
            **self.scenario.to_dict(),
            "critical_visibility": self.get_critical_visibility(),
            "points": [{"eta": p.eta, "value": p.value, "predicted": p.predicted} for p in points],
        }
        worst = max((p.deviation for p in points), default=0.0)
        if worst > self.tolerance:
            raise CertificationError("noise scan deviates from the linear prediction",
                                     {"check": "noise-scan", "max_deviation": worst, **record})
        return record

    def _certify(self, random: int = 0, seed: Optional[int] = None) -> Dict:
        seed = self.seed if seed is None else seed
        record = {**self.scenario.to_dict(), "seed": seed, "tolerance": self.tolerance,
                  "cglmp": self.certify_sos().to_dict()}
        if random:
            certificates = self.certify_sos_random(random, seed)
            record["random"] = [c.residual_norm for c in certificates]
            record["max_random_residual"] = max(record["random"])
        return record

    def _execute_command(self, command: str, params: Optional[Dict[str, Any]] = None) -> Dict:
        """
        Run one workbench command for the handler's scenario.
        :param command: coeffs, bounds, certify-sos, noise-scan, entropy or ns-point
        :param params: command options
        :return: the command's report as a dict
        """
        params = params or {}
        try:
            if command == "coeffs":
                return self.get_coefficient_report()
            if command == "bounds":
                return self.get_bounds_report(cross_check=params.get("cross_check", False)).to_dict()
            if command == "certify-sos":
                return self._certify(params.get("random", 0), params.get("seed"))
            if command == "noise-scan":
                return self._noise_scan(params.get("etas", [0.0, 1.0]))
            if command == "entropy":
                return self.get_key_entropy_report()
            if command == "ns-point":
                return self._ns_point()
            raise ScenarioError(f"Unknown command {command!r}")
        except BellError as e:
            logger.error("Command %s failed for m=%d, d=%d: %s", command, self.scenario.m, self.scenario.d, e)
            raise
