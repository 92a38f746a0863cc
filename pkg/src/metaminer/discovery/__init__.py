"""The five discovery algorithms that serve as recommendation targets, plus timing."""
from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, field
from typing import Dict

from ..eventlog import EventLog
from ..petrinet import PetriNet
from .alpha import FootprintMatrix, alpha_miner
from .heuristics import dependency, dependency_graph, heuristic_miner
from .inductive import IM, IMD, IMF, inductive_miner, inductive_tree

AM, HM = "AM", "HM"
ROSTER = (AM, HM, IM, IMF, IMD)

DEFAULT_PARAMETERS: Dict[str, Dict[str, float]] = {
    AM: {},
    HM: {"dependency_threshold": 0.9, "and_threshold": 0.65},
    IM: {},
    IMF: {"noise_threshold": 0.2},
    IMD: {},
}


@dataclass(frozen=True)
class DiscoveryAlgorithm:
    identifier: str
    parameters: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        ident = parse_identifier(self.identifier)
        object.__setattr__(self, "identifier", ident)
        params = dict(DEFAULT_PARAMETERS[ident])
        unknown = set(self.parameters) - set(params)
        if unknown:
            raise ValueError(f"{ident} does not take parameters {sorted(unknown)}")
        params.update(self.parameters)
        for name, value in params.items():
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{ident} parameter {name} must lie in [0, 1], got {value}")
        object.__setattr__(self, "parameters", params)

    def __hash__(self):
        return hash((self.identifier, tuple(sorted(self.parameters.items()))))

    def discover(self, log: EventLog) -> PetriNet:
        p = self.parameters
        if self.identifier == AM:
            return alpha_miner(log)
        if self.identifier == HM:
            return heuristic_miner(log, p["dependency_threshold"], p["and_threshold"])
        if self.identifier == IMF:
            return inductive_miner(log, IMF, p["noise_threshold"])
        return inductive_miner(log, self.identifier)


def parse_identifier(name: str) -> str:
    lookup = {a.lower(): a for a in ROSTER}
    try:
        return lookup[str(name).strip().lower()]
    except KeyError:
        raise ValueError(f"unknown discovery algorithm {name!r}; expected one of {', '.join(ROSTER)}") from None


def as_algorithm(algo) -> DiscoveryAlgorithm:
    return algo if isinstance(algo, DiscoveryAlgorithm) else DiscoveryAlgorithm(algo)


@dataclass(frozen=True)
class TimedDiscoveryResult:
    net: PetriNet
    duration: float


def timed_discovery(log: EventLog, algo, repetitions: int = 3) -> TimedDiscoveryResult:
    """Median wall-clock time of ``repetitions`` discovery calls on an already parsed log."""
    algo = as_algorithm(algo)
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    durations = []
    net = None
    for _ in range(repetitions):
        t0 = time.perf_counter()
        net = algo.discover(log)
        durations.append(time.perf_counter() - t0)
    return TimedDiscoveryResult(net, max(0.0, statistics.median(durations)))


def discover(log: EventLog, algo) -> PetriNet:
    return as_algorithm(algo).discover(log)


__all__ = [
    "AM", "HM", "IM", "IMF", "IMD", "ROSTER", "DiscoveryAlgorithm", "TimedDiscoveryResult",
    "FootprintMatrix", "alpha_miner", "heuristic_miner", "inductive_miner", "inductive_tree",
    "dependency", "dependency_graph", "discover", "timed_discovery", "parse_identifier", "as_algorithm",
]
