import os
from configparser import RawConfigParser

import numpy as np

from tailoredbell.mixins.kernel import Behaviour, Ket
from tailoredbell.mixins.scenario import Scenario

HERE = os.path.dirname(os.path.abspath(__file__))


def read_config(props_path: str = os.path.join(HERE, "tolerances.cfg")) -> RawConfigParser:
    """Reads in a properties file into variables.

    The structure of this file is such:
    # tolerances.cfg
        [tolerance]
        identity={float}
        operator={float}
    """
    config = RawConfigParser()
    assert os.path.exists(props_path), f"Path does not exist: {props_path}"
    config.read(props_path)
    return config


def random_behaviour(s: Scenario, rng: np.random.Generator) -> Behaviour:
    """Arbitrary (generally signalling) behaviour, every setting pair normalised."""
    p = rng.random((s.m, s.m, s.d, s.d))
    return Behaviour(s, p / p.sum(axis=(2, 3), keepdims=True))


def random_ket(d: int, rng: np.random.Generator) -> Ket:
    v = rng.standard_normal(d * d) + 1j * rng.standard_normal(d * d)
    return Ket(v / np.linalg.norm(v))
