from typing import Optional

from tailoredbell.handlers.api_handler import BellHandler
from tailoredbell.mixins.bounds import DEFAULT_BUDGET
from tailoredbell.mixins.sos import SOS_TOL


class Workbench(BellHandler):

    def __init__(self, m: int,
                 d: int,
                 tolerance: float = SOS_TOL,
                 budget: int = DEFAULT_BUDGET,
                 seed: Optional[int] = None,
                 workers: Optional[int] = None,
                 defer_setup: bool = False):
        """
        Initialise the Workbench object by passing the number of settings and outcomes.
        The optimal measurements are built right away; pass defer_setup = True to build them
        on first use instead.
        :param m: settings per party, at least 2
        :param d: outcomes per setting, at least 2
        :param tolerance: tolerance of the certificate and consistency checks
        :param budget: cap on the number of strategies a brute-force search may enumerate
        :param seed: seed for random measurement sets
        :param workers: number of threads for enumerations and scans
        :param defer_setup: defer building the measurements
        """
        BellHandler.__init__(self, m, d, tolerance=tolerance, budget=budget, seed=seed, workers=workers)

        if not defer_setup:
            super().setup()
