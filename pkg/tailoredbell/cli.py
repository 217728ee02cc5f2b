import argparse
import logging
import sys
from dataclasses import dataclass, fields
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import yaml

from tailoredbell import __version__
from tailoredbell.exceptions import (BudgetExceededError, CertificationError, NumericalError,
                                     ScenarioError)
from tailoredbell.handlers.report_handler import Report
from tailoredbell.mixins.analysis import RatioKind, ratio_table
from tailoredbell.mixins.bounds import DEFAULT_BUDGET
from tailoredbell.mixins.sos import SOS_TOL
from tailoredbell.workbench import Workbench

logger = logging.getLogger(__name__)

COMMANDS = ("coeffs", "bounds", "certify-sos", "table", "noise-scan", "entropy", "ns-point")
OUTPUTS = ("json", "csv", "text")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CHECK_FAILED = 2

Range = Tuple[int, int]


def parse_range(text: Any) -> Range:
    """'N' or 'A..B' (inclusive) into (A, B)."""
    if isinstance(text, int) and not isinstance(text, bool):
        return text, text
    parts = str(text).strip().split("..")
    try:
        values = [int(p) for p in parts]
    except ValueError:
        raise ScenarioError(f"malformed range {text!r}, expected N or A..B")
    if len(values) == 1:
        return values[0], values[0]
    if len(values) != 2 or values[0] > values[1]:
        raise ScenarioError(f"malformed range {text!r}, expected N or A..B with A <= B")
    return values[0], values[1]


def parse_etas(text: Any) -> Tuple[float, ...]:
    """A comma list '0,0.1,0.5' or a grid 'start:stop:num'."""
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    text = str(text).strip()
    try:
        if ":" in text:
            start, stop, num = text.split(":")
            return tuple(float(v) for v in np.linspace(float(start), float(stop), int(num)))
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise ScenarioError(f"malformed noise grid {text!r}, expected a comma list or start:stop:num")


@dataclass(frozen=True)
class RunConfig:
    command: str
    m: Range = (2, 2)
    d: Range = (2, 2)
    kind: str = RatioKind.QC.value
    etas: Tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 1.0)
    random: int = 0
    seed: int = 0
    tol: float = SOS_TOL
    budget: int = DEFAULT_BUDGET
    output: str = "json"
    cross_check: bool = False
    verbose: bool = False

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ScenarioError(f"unknown command {self.command!r}, expected one of {', '.join(COMMANDS)}")
        if self.output not in OUTPUTS:
            raise ScenarioError(f"unknown output {self.output!r}, expected one of {', '.join(OUTPUTS)}")
        if self.kind not in {k.value for k in RatioKind}:
            raise ScenarioError(f"unknown table kind {self.kind!r}, expected qc or nsq")
        for name in ("m", "d"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ScenarioError(f"--{name} range is empty")
        if self.tol <= 0:
            raise ScenarioError(f"--tol must be positive, got {self.tol}")
        if self.budget <= 0:
            raise ScenarioError(f"--budget must be positive, got {self.budget}")
        if self.random < 0:
            raise ScenarioError(f"--random must not be negative, got {self.random}")
        if any(not 0 <= eta <= 1 for eta in self.etas):
            raise ScenarioError("noise levels must lie in [0, 1]")

    def scenarios(self) -> List[Tuple[int, int]]:
        return [(m, d) for m in range(self.m[0], self.m[1] + 1) for d in range(self.d[0], self.d[1] + 1)]


class _Parser(argparse.ArgumentParser):

    def error(self, message):
        raise ScenarioError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tailoredbell", description="Bell inequalities tailored to maximally entangled states")
    parser.add_argument("command", help=", ".join(COMMANDS))
    parser.add_argument("--m", help="settings per party, N or A..B")
    parser.add_argument("--d", help="outcomes per setting, N or A..B")
    parser.add_argument("--kind", help="ratio table: qc or nsq")
    parser.add_argument("--eta", dest="etas", help="noise grid, comma list or start:stop:num")
    parser.add_argument("--random", type=int, help="number of random measurement sets to certify")
    parser.add_argument("--seed", type=int, help="seed of the random measurement sets")
    parser.add_argument("--tol", type=float, help="tolerance of the mathematical checks")
    parser.add_argument("--budget", type=int, help="largest brute-force enumeration")
    parser.add_argument("--output", help="json, csv or text")
    parser.add_argument("--cross-check", dest="cross_check", action="store_const", const=True,
                        help="enumerate the classical bound next to the closed form")
    parser.add_argument("--config", help="YAML file with default values for the flags")
    parser.add_argument("--verbose", action="store_const", const=True, help="log at DEBUG level")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser


def load_config_file(path: str) -> Dict[str, Any]:
    try:
        with open(path, encoding="utf-8") as f:
            values = yaml.safe_load(f) or {}
    except (OSError, yaml.YAMLError) as e:
        raise ScenarioError(f"cannot read config file {path}: {e}")
    if not isinstance(values, dict):
        raise ScenarioError(f"config file {path} must hold a mapping")
    return {str(k).replace("-", "_"): v for k, v in values.items()}


def config_from_args(argv: Optional[Sequence[str]] = None) -> RunConfig:
    """
    Flags on top of the optional YAML file on top of the RunConfig defaults.
    :param argv: command line without the program name
    :return: RunConfig
    """
    args = vars(build_parser().parse_args(argv))
    values = load_config_file(args["config"]) if args.get("config") else {}
    values.update({k: v for k, v in args.items() if v is not None and k != "config"})
    if "eta" in values:
        values["etas"] = values.pop("eta")
    known = {f.name for f in fields(RunConfig)}
    unknown = set(values) - known
    if unknown:
        raise ScenarioError(f"unknown configuration keys {sorted(unknown)}")
    if values.get("command") == "table":
        values.setdefault("m", "2..6")
        values.setdefault("d", "2..6")
    for name in ("m", "d"):
        if name not in values:
            raise ScenarioError(f"--{name} is required for {values.get('command')}")
        values[name] = parse_range(values[name])
    if "etas" in values:
        values["etas"] = parse_etas(values["etas"])
    return RunConfig(**values)


def _render(config: RunConfig, records: List[Dict]) -> str:
    document = records[0] if len(records) == 1 else records
    if config.output == "json":
        return Report.to_json(document) + "\n"
    if config.output == "csv":
        return Report.records_to_csv(records)
    return Report.to_text(document)


def _run_table(config: RunConfig) -> str:
    table = ratio_table(config.kind, range(config.m[0], config.m[1] + 1), range(config.d[0], config.d[1] + 1))
    if config.output == "csv":
        return Report.to_csv(table)
    if config.output == "text":
        return Report.table_to_text(table)
    return Report.to_json({"kind": table.kind.label, "d": list(table.d_values), "m": list(table.m_values),
                           "entries": table.entries, "rounded": table.rounded(Report.table_decimals)}) + "\n"


def run(config: RunConfig) -> Tuple[int, str]:
    """
    Execute one configuration.
    :param config: RunConfig
    :return: exit code and the text to print
    """
    try:
        if config.command == "table":
            return EXIT_OK, _run_table(config)
        params = {"cross_check": config.cross_check, "random": config.random, "seed": config.seed,
                  "etas": list(config.etas)}
        records = []
        for m, d in config.scenarios():
            bench = Workbench(m, d, tolerance=config.tol, budget=config.budget, seed=config.seed, defer_setup=True)
            records.append(bench._execute_command(config.command, params))
        return EXIT_OK, _render(config, records)
    except CertificationError as e:
        return EXIT_CHECK_FAILED, Report.to_json({"error": str(e), "record": e.record}) + "\n"
    except NumericalError as e:
        return EXIT_CHECK_FAILED, Report.to_json({"error": str(e), "record": {"check": "numerical"}}) + "\n"
    except (ScenarioError, BudgetExceededError) as e:
        return EXIT_USAGE, f"error: {e}\n"


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        config = config_from_args(argv)
    except ScenarioError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if config.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    code, text = run(config)
    (sys.stdout if code != EXIT_USAGE else sys.stderr).write(text)
    return code
