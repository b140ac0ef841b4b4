"""Monte Carlo harness for synchronous CDMA detection.

Random numbers come from numpy's PCG64 generator; Gaussian samples use
numpy's ziggurat transform. The spreading matrix is drawn from the stream
seeded by ``[seed, 0]`` and frame ``f`` from ``[seed, 1, f]``, so frames can
be processed in any order or in parallel with identical results.
"""
from __future__ import annotations

import csv
import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.stats import binomtest

from .detectors import DetectorSpec, dense_oracle, detect
from .gabp import SolveResult, SolverConfig, check_system, run
from .matrix import (SparseSymmetricMatrix, as_noise, as_rectangular, build_augmented,
                     build_augmented_rhs)

RNG_ALGORITHM = "numpy.random.PCG64"
NORMAL_TRANSFORM = "ziggurat (numpy Generator.standard_normal)"

CSV_COLUMNS = ["scenario_hash", "batch", "detector", "ber", "ber_ci_low", "ber_ci_high",
               "mean_iterations", "convergence_rate", "message_slots", "wall_time_s"]


@dataclass(frozen=True)
class Scenario:
    """A CDMA detection setup.

    ``spreading`` is ``"random-binary"`` (entries +-1/sqrt(n)) or an explicit
    (n, k) matrix. ``noise`` is a uniform variance or one variance per chip.
    """

    k: int = 4
    n: int = 16
    spreading: object = "random-binary"
    noise: object = 1.0
    symbols: str = "binary"
    num_frames: int = 100
    rng_seed: int = 0

    def __post_init__(self):
        if self.k < 1 or self.n < 1:
            raise ValueError("k and n must be positive")
        if self.symbols not in ("binary", "gaussian"):
            raise ValueError(f"unknown symbol alphabet {self.symbols!r}")
        if self.num_frames < 0:
            raise ValueError("num_frames must be nonnegative")
        if not isinstance(self.spreading, str):
            S = as_rectangular(self.spreading)
            if S.shape != (self.n, self.k):
                raise ValueError(f"spreading matrix has shape {S.shape}, expected {(self.n, self.k)}")
        elif self.spreading != "random-binary":
            raise ValueError(f"unknown spreading {self.spreading!r}")
        as_noise(self.noise, self.n)

    def noise_vector(self):
        return as_noise(self.noise, self.n)

    def scenario_hash(self):
        spreading = self.spreading if isinstance(self.spreading, str) \
            else np.asarray(self.spreading, dtype=float).tolist()
        doc = dict(k=self.k, n=self.n, spreading=spreading,
                   noise=np.asarray(self.noise, dtype=float).tolist(),
                   symbols=self.symbols, num_frames=self.num_frames, rng_seed=self.rng_seed)
        blob = json.dumps(doc, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


class ScenarioData(NamedTuple):
    S: np.ndarray
    psi: np.ndarray
    x: np.ndarray  # (frames, k)
    y: np.ndarray  # (frames, n)


def random_binary_spreading(n, k, rng):
    return rng.choice(np.array([-1.0, 1.0]), size=(n, k)) / np.sqrt(n)


def spreading_matrix(cfg: Scenario):
    if isinstance(cfg.spreading, str):
        return random_binary_spreading(cfg.n, cfg.k, np.random.default_rng([cfg.rng_seed, 0]))
    return as_rectangular(cfg.spreading).copy()


def generate_frame(cfg: Scenario, S, psi, frame):
    rng = np.random.default_rng([cfg.rng_seed, 1, frame])
    if cfg.symbols == "binary":
        x = rng.choice(np.array([-1.0, 1.0]), size=cfg.k)
    else:
        x = rng.standard_normal(cfg.k)
    y = S @ x + np.sqrt(psi) * rng.standard_normal(cfg.n)
    return x, y


def generate_scenario(cfg: Scenario) -> ScenarioData:
    S = spreading_matrix(cfg)
    psi = cfg.noise_vector()
    x = np.empty((cfg.num_frames, cfg.k))
    y = np.empty((cfg.num_frames, cfg.n))
    for f in range(cfg.num_frames):
        x[f], y[f] = generate_frame(cfg, S, psi, f)
    return ScenarioData(S, psi, x, y)


@dataclass(frozen=True)
class TrialRecord:
    frame: int
    detector: str
    bit_errors: int
    bits_sent: int
    iterations: int
    converged: bool
    wall_time: float = field(compare=False)
    message_slots: int
    oracle_error: float


def message_accounting(A: SparseSymmetricMatrix):
    """Directed message slots of ``A`` and the count a dense (k+n) system would need."""
    return A.num_directed_edges, 2 * A.dim * A.dim


def _oracle(kind, S, psi, y):
    try:
        return dense_oracle(kind, S, psi, y)
    except np.linalg.LinAlgError:
        return None


def _run_frame(f, data, detectors, config):
    out = []
    x, y = data.x[f], data.y[f]
    for spec in detectors:
        t0 = time.perf_counter()
        det = detect(spec, data.S, data.psi, y, config)
        elapsed = time.perf_counter() - t0
        ref = _oracle(spec.kind, data.S, data.psi, y)
        err = float(np.max(np.abs(det.raw - ref))) if ref is not None else float("nan")
        res = det.result
        out.append(TrialRecord(
            frame=f,
            detector=spec.kind,
            bit_errors=int(np.sum(np.sign(det.estimates) != np.where(x >= 0, 1.0, -1.0))),
            bits_sent=int(x.size),
            iterations=res.iterations if res else 0,
            converged=res.converged if res else True,
            wall_time=elapsed,
            message_slots=res.messages.precision.size if res else 0,
            oracle_error=err,
        ))
    return out


def run_trials(scenario: Scenario, detectors, config=None, workers=1, data=None):
    """Detect every frame with every detector.

    Bit errors compare the sign of each decision with the sign of the sent
    symbol (for Gaussian symbols this is a sign-error rate). Each record
    carries the max-abs gap between the raw estimate and a dense direct
    solve.
    """
    detectors = [d if isinstance(d, DetectorSpec) else DetectorSpec(d) for d in detectors]
    if not detectors:
        raise ValueError("at least one detector is required")
    config = config or SolverConfig()
    data = data or generate_scenario(scenario)
    frames = range(data.x.shape[0])
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(lambda f: _run_frame(f, data, detectors, config), frames))
    else:
        chunks = [_run_frame(f, data, detectors, config) for f in frames]
    return [r for chunk in chunks for r in chunk]


def wilson_interval(errors, trials, confidence=0.95):
    if trials == 0:
        return 0.0, 1.0
    ci = binomtest(errors, trials).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def summarize(records, scenario_hash, batch=0):
    """One CSV row per detector, in first-seen order."""
    rows = []
    for kind in dict.fromkeys(r.detector for r in records):
        rs = [r for r in records if r.detector == kind]
        errors = sum(r.bit_errors for r in rs)
        bits = sum(r.bits_sent for r in rs)
        low, high = wilson_interval(errors, bits)
        rows.append(dict(
            scenario_hash=scenario_hash,
            batch=batch,
            detector=kind,
            ber=errors / bits if bits else 0.0,
            ber_ci_low=low,
            ber_ci_high=high,
            mean_iterations=float(np.mean([r.iterations for r in rs])),
            convergence_rate=float(np.mean([r.converged for r in rs])),
            message_slots=max(r.message_slots for r in rs),
            wall_time_s=sum(r.wall_time for r in rs),
        ))
    return rows


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return v


def write_csv(path, rows, columns=None):
    columns = columns or list(rows[0].keys())
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({c: _cell(row[c]) for c in columns})


def write_plot_data(path, points, xlabel="x", ylabel="ber"):
    """Two whitespace-separated columns, readable by gnuplot's ``plot 'file'``."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# {xlabel} {ylabel}\n")
        for x, y in points:
            fh.write(f"{format(float(x), '.17g')} {format(float(y), '.17g')}\n")


def run_metadata(scenario: Scenario):
    meta = {k: v for k, v in asdict(scenario).items() if k != "spreading"}
    meta["noise"] = np.asarray(scenario.noise, dtype=float).tolist()
    meta["spreading"] = scenario.spreading if isinstance(scenario.spreading, str) else "user-supplied"
    meta.update(rng=RNG_ALGORITHM, normal_transform=NORMAL_TRANSFORM,
                scenario_hash=scenario.scenario_hash())
    return meta


def jacobi_baseline(A: SparseSymmetricMatrix, b, config=None) -> SolveResult:
    """Jacobi iteration ``x <- (b - (A - D) x) / D`` starting from ``D^{-1} b``.

    Uses the same scaled-change stopping rule as GaBP. Diverging runs stop
    early with ``converged=False`` once the iterate blows up.
    """
    config = config or SolverConfig()
    b = check_system(A, b)
    d = A.diagonal
    x = b / d
    history = []
    converged = False
    it = 0
    with np.errstate(over="ignore", invalid="ignore"):
        while it < config.max_iterations:
            it += 1
            off = np.bincount(A.src, weights=A.weight * x[A.dst], minlength=A.dim)
            new = (b - off) / d
            r = float(np.max(np.abs(new - x) / np.maximum(1.0, np.abs(new))))
            x = new
            history.append(r)
            if r <= config.tolerance:
                converged = True
                break
            if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > 1e150:
                break
    return SolveResult(x, d.copy(), converged, it, history)


def baseline_comparison(systems, config=None):
    """GaBP vs Jacobi on augmented MMSE systems.

    ``systems`` yields ``(S, psi, y)``. Returns one row per system with both
    iteration counts and, when both converged, the max-abs gap between their
    user estimates.
    """
    config = config or SolverConfig()
    rows = []
    for case, (S, psi, y) in enumerate(systems):
        S = as_rectangular(S)
        n, k = S.shape
        A = build_augmented(S, psi)
        b = build_augmented_rhs(y, k)
        g = run(A, b, config)
        j = jacobi_baseline(A, b, config)
        both = g.converged and j.converged
        gap = float(np.max(np.abs(g.means[:k] - j.means[:k]))) if both else float("nan")
        rows.append(dict(case=case, k=k, n=n,
                         gabp_iterations=g.iterations, gabp_converged=g.converged,
                         jacobi_iterations=j.iterations, jacobi_converged=j.converged,
                         max_abs_diff=gap))
    return rows
