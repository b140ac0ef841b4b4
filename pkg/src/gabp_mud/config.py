"""Run configuration for ``gabp-mud simulate``.

Config files are INI documents with four sections; every key is optional::

    [scenario]
    k = 4
    n = 16
    spreading = random-binary     # or a path to a rectangular matrix file
    sigma2 = 0.5                  # uniform chip variance
    noise_file =                  # per-chip variances, overrides sigma2
    symbols = binary              # binary | gaussian
    num_frames = 200
    seed = 1

    [solver]
    tolerance = 1e-10
    max_iterations = 10000
    schedule = synchronous        # synchronous | sequential
    damping = 0.0

    [detectors]
    kinds = mf, zf, mmse          # any of mf, zf, mmse, pinv
    clipping = sign               # sign | identity

    [output]
    csv = results.csv
    plot_prefix = results         # gnuplot data go to <prefix>_<detector>.dat
"""
from __future__ import annotations

import configparser
import dataclasses
import os
from dataclasses import dataclass, field

import numpy as np

from .detectors import DetectorSpec
from .gabp import SolverConfig
from .io import read_rectangular, read_vector
from .simulator import Scenario


class ConfigError(ValueError):
    pass


@dataclass
class ScenarioSection:
    k: int = 4
    n: int = 16
    spreading: str = "random-binary"
    sigma2: float = 1.0
    noise_file: str = ""
    symbols: str = "binary"
    num_frames: int = 100
    seed: int = 0


@dataclass
class SolverSection:
    tolerance: float = 1e-10
    max_iterations: int = 10_000
    schedule: str = "synchronous"
    damping: float = 0.0


@dataclass
class DetectorsSection:
    kinds: list = field(default_factory=lambda: ["mf", "zf", "mmse"])
    clipping: str = "sign"


@dataclass
class OutputSection:
    csv: str = "results.csv"
    plot_prefix: str = ""


@dataclass
class RunConfig:
    scenario: ScenarioSection = field(default_factory=ScenarioSection)
    solver: SolverSection = field(default_factory=SolverSection)
    detectors: DetectorsSection = field(default_factory=DetectorsSection)
    output: OutputSection = field(default_factory=OutputSection)
    base_dir: str = "."

    def make_scenario(self) -> Scenario:
        sc = self.scenario
        spreading = sc.spreading
        if spreading != "random-binary":
            spreading = read_rectangular(self._path(spreading))
        noise = sc.sigma2
        if sc.noise_file:
            noise = read_vector(self._path(sc.noise_file))
        return Scenario(k=sc.k, n=sc.n, spreading=spreading, noise=noise, symbols=sc.symbols,
                        num_frames=sc.num_frames, rng_seed=sc.seed)

    def make_solver(self, workers=1) -> SolverConfig:
        s = self.solver
        return SolverConfig(s.tolerance, s.max_iterations, s.schedule, s.damping, workers)

    def make_detectors(self):
        return [DetectorSpec(kind, self.detectors.clipping) for kind in self.detectors.kinds]

    def _path(self, p):
        return p if os.path.isabs(p) else os.path.join(self.base_dir, p)


_SECTION_TYPES = {
    "scenario": ScenarioSection,
    "solver": SolverSection,
    "detectors": DetectorsSection,
    "output": OutputSection,
}

#: Keys accepted by ``--sweep``, mapped to their section.
SWEEP_KEYS = {"sigma2": "scenario", "k": "scenario", "n": "scenario",
              "num_frames": "scenario", "seed": "scenario",
              "damping": "solver", "tolerance": "solver"}


def _convert(cls, key, raw):
    default = getattr(cls(), key)
    try:
        if isinstance(default, bool):
            return raw.lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, list):
            return [item.strip() for item in raw.split(",") if item.strip()]
    except ValueError:
        raise ConfigError(f"invalid value for {key}: {raw!r}") from None
    return raw.strip()


def set_value(config: RunConfig, section, key, raw):
    cls = _SECTION_TYPES.get(section)
    if cls is None:
        raise ConfigError(f"unknown section [{section}]; valid sections: {', '.join(_SECTION_TYPES)}")
    valid = [f.name for f in dataclasses.fields(cls)]
    if key not in valid:
        raise ConfigError(f"unknown key {key!r} in [{section}]; valid keys: {', '.join(valid)}")
    value = raw if not isinstance(raw, str) else _convert(cls, key, raw)
    setattr(getattr(config, section), key, value)


def load_config(path) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    config = RunConfig(base_dir=os.path.dirname(os.path.abspath(path)))
    for section in parser.sections():
        for key, raw in parser.items(section):
            set_value(config, section, key, raw)
    try:
        config.make_detectors()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return config


def parse_sweep(spec):
    """``key=start:stop:count`` (inclusive linspace) or ``key=v1,v2,...``."""
    if "=" not in spec:
        raise ConfigError("sweep must look like key=start:stop:count or key=v1,v2,...")
    key, values = spec.split("=", 1)
    key = key.strip()
    if key not in SWEEP_KEYS:
        raise ConfigError(f"cannot sweep {key!r}; valid sweep keys: {', '.join(SWEEP_KEYS)}")
    try:
        if ":" in values:
            start, stop, count = values.split(":")
            points = np.linspace(float(start), float(stop), int(count)).tolist()
        else:
            points = [float(v) for v in values.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"malformed sweep values {values!r}") from None
    if not points:
        raise ConfigError("sweep has no values")
    cls = _SECTION_TYPES[SWEEP_KEYS[key]]
    if isinstance(getattr(cls(), key), int):
        points = [int(round(p)) for p in points]
    return key, points
