"""Monte Carlo batches, table reproduction and trajectory export.

A batch runs replicate ``r`` on the random stream keyed by ``(seed, r)``, so
its result does not depend on execution order. The summary JSON holds no
timestamps; wall-clock information goes to a ``.manifest.json`` sidecar.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import time
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, families
from .dynamics import ExtinctionRecord, run_replicate, simulate
from .graph import enumerate_limit_sets, count_limit_sets, MAX_ENUMERATION_SIZE
from .model import Mode, ModelSpec, PopulationState, SurvivorSet, as_state, check_model, model_to_dict
from .spectral import Regime, classify_regime, full_spectrum, min_real_eigenpair, perron_root

log = logging.getLogger(__name__)

SUPERCRITICAL_CAP = 10**6
DEFAULT_CAP = 10**7
QUANTILES = (0.1, 0.25, 0.5, 0.75, 0.9)
SPECTRAL_TOL = 1e-9
SCHEMA_VERSION = 1


class SupportViolation(AssertionError):
    """A run froze on a survivor set that the enumeration says is impossible."""


def default_step_cap(spec: ModelSpec) -> int:
    """``10**6`` for supercritical and urn models, ``10**7`` otherwise."""
    if spec.mode is Mode.URN:
        return SUPERCRITICAL_CAP
    if spec.alpha > 0 and classify_regime(spec.alpha, spec.matrix) is Regime.SUPERCRITICAL:
        return SUPERCRITICAL_CAP
    return DEFAULT_CAP


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelSpec
    initial: PopulationState
    replicates: int
    step_cap: Optional[int] = None
    seed: int = 0
    summary_path: Optional[Path] = None
    trajectory_path: Optional[Path] = None

    def __post_init__(self):
        object.__setattr__(self, "initial", as_state(self.initial, self.model.n))
        if self.replicates < 0:
            raise ValueError("replicates must be nonnegative")
        if self.step_cap is not None and self.step_cap < 1:
            raise ValueError("step_cap must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def cap(self) -> int:
        return self.step_cap if self.step_cap is not None else default_step_cap(self.model)

    def to_dict(self) -> dict:
        return {
            "model": model_to_dict(self.model),
            "initial": list(self.initial.counts),
            "replicates": self.replicates,
            "step_cap": self.cap,
            "seed": self.seed,
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class BatchSummary:
    """Aggregated extinction steps and survivor sets of one batch.

    ``sigma_samples[r]`` is the first extinction step of replicate ``r``,
    or None when censored. Statistics are over uncensored runs only; the
    censored count sits alongside. ``survivor_frequencies`` counts frozen
    runs; runs that hit the cap or overflowed are in ``unresolved_count``.
    """

    config: ExperimentConfig
    sigma_samples: list
    survivor_frequencies: dict
    unresolved_count: int
    errors: dict = field(default_factory=dict)

    @property
    def uncensored(self) -> np.ndarray:
        return np.array([s for s in self.sigma_samples if s is not None], dtype=float)

    @property
    def censored_count(self) -> int:
        return sum(s is None for s in self.sigma_samples)

    @property
    def sigma_mean(self) -> Optional[float]:
        u = self.uncensored
        return float(u.mean()) if u.size else None

    @property
    def sigma_median(self) -> Optional[float]:
        u = self.uncensored
        return float(np.median(u)) if u.size else None

    @property
    def sigma_quantiles(self) -> dict:
        u = self.uncensored
        if not u.size:
            return {}
        return {str(q): float(np.quantile(u, q)) for q in QUANTILES}

    def survivor_fraction(self, members) -> float:
        key = members if isinstance(members, SurvivorSet) else SurvivorSet.of(members)
        total = self.config.replicates
        return self.survivor_frequencies.get(key, 0) / total if total else 0.0

    def manifest(self) -> dict:
        return {"seed": self.config.seed, "config_sha256": self.config.digest(), "version": __version__}

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config.to_dict(),
            "replicates": self.config.replicates,
            "sigma_samples": self.sigma_samples,
            "censored_count": self.censored_count,
            "sigma_mean": self.sigma_mean,
            "sigma_median": self.sigma_median,
            "sigma_quantiles": self.sigma_quantiles,
            "survivor_frequencies": {str(k): v for k, v in sorted(self.survivor_frequencies.items())},
            "unresolved_count": self.unresolved_count,
            "errors": {str(k): v for k, v in sorted(self.errors.items())},
            "manifest": self.manifest(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _fold(config: ExperimentConfig, records) -> BatchSummary:
    catalog = None
    if config.model.n <= MAX_ENUMERATION_SIZE and config.model.mode is not Mode.URN and not config.model.has_immigration:
        catalog = enumerate_limit_sets(config.model.matrix)
    freq = Counter()
    errors = {}
    unresolved = 0
    samples = []
    for r, rec in enumerate(records):
        samples.append(rec.sigma)
        if rec.error is not None:
            errors[r] = rec.error
        if rec.survivor_set is None:
            unresolved += 1
            continue
        if catalog is not None and config.initial.positive and rec.survivor_set not in catalog:
            raise SupportViolation(f"replicate {r} froze on {rec.survivor_set}, not an admissible limit set")
        freq[rec.survivor_set] += 1
    return BatchSummary(config, samples, dict(freq), unresolved, errors)


def run_batch(config: ExperimentConfig, progress=None) -> BatchSummary:
    """Run every replicate to freeze (or the cap) and aggregate.

    Writes the summary JSON and its manifest sidecar when
    ``config.summary_path`` is set.
    """
    check_model(config.model)
    started = time.time()
    records = []
    for r in range(config.replicates):
        records.append(run_replicate(config.model, config.initial, config.cap, config.seed, r))
        if progress is not None:
            progress(r + 1, config.replicates)
    summary = _fold(config, records)
    if config.summary_path is not None:
        write_summary(summary, config.summary_path, elapsed=time.time() - started)
    return summary


def write_summary(summary: BatchSummary, path, elapsed: Optional[float] = None, extra: Optional[dict] = None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(summary.to_json() + "\n", encoding="utf-8")
    side = dict(summary.manifest())
    side["step_cap"] = summary.config.cap
    side["written_at"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    if elapsed is not None:
        side["elapsed_seconds"] = round(elapsed, 3)
    if extra:
        side.update(extra)
    manifest_path(path).write_text(json.dumps(side, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def manifest_path(summary_path) -> Path:
    p = Path(summary_path)
    return p.with_name(p.stem + ".manifest.json")


def calibrate_cap(spec: ModelSpec, initial, pilot=200, seed=0, target=0.99, ceiling=10**8) -> int:
    """Pilot-calibrated step cap: twice the ``target`` quantile of pilot extinction steps.

    Pilot runs use stream keys ``(seed, 10**9 + r)`` so they never overlap a
    batch that starts at replicate 0. The result is rounded up to a power of
    ten times 1, 2 or 5.
    """
    steps = []
    for r in range(pilot):
        rec = run_replicate(spec, initial, ceiling, seed, 10**9 + r)
        steps.append(rec.sigma if rec.sigma is not None else ceiling)
    raw = 2 * float(np.quantile(steps, target))
    exp = 10 ** max(0, math.floor(math.log10(max(raw, 1))))
    for m in (1, 2, 5, 10):
        if m * exp >= raw:
            return int(min(m * exp, ceiling))
    return ceiling


# ------------------------------------------------------------------ tables


@dataclass(frozen=True)
class TableCell:
    family: str
    n: int
    quantity: str
    computed: float
    expected: float
    beta: Optional[float] = None

    @property
    def passed(self) -> bool:
        if self.quantity == "count":
            return self.computed == self.expected
        return abs(self.computed - self.expected) <= SPECTRAL_TOL

    def to_dict(self):
        return {
            "family": self.family,
            "n": self.n,
            "beta": self.beta,
            "quantity": self.quantity,
            "computed": self.computed,
            "expected": self.expected,
            "status": "PASS" if self.passed else "FAIL",
        }


FAMILY_MIN_N = {"line": 1, "cycle": 3, "star": 2}


def _min_real(a, lam1):
    if lam1 > 0:
        return min_real_eigenpair(a)[0].real
    return float(full_spectrum(a)[-1].real)


def reproduce_tables(n_min=1, n_max=12, betas=("1/2", "1", "2"), family_names=("line", "cycle", "star")):
    """Limit-set counts and extreme eigenvalues of the standard families against their closed forms."""
    from fractions import Fraction

    cells = []
    for fam in family_names:
        for n in range(max(n_min, FAMILY_MIN_N.get(fam, 1)), n_max + 1):
            a = families.BUILDERS[fam](n, 1)
            cells.append(TableCell(fam, n, "count", count_limit_sets(a), families.limit_count_closed_form(fam, n)))
            for b in betas:
                beta = Fraction(b)
                a = families.BUILDERS[fam](n, beta)
                lam1, _ = perron_root(a)
                cells.append(TableCell(fam, n, "lambda1", lam1, families.perron_closed_form(fam, n, beta), float(beta)))
                cells.append(
                    TableCell(fam, n, "lambdaN", _min_real(a, lam1), families.min_real_closed_form(fam, n, beta), float(beta))
                )
    return cells


# ------------------------------------------------------------------ export

def _fmt_time(t):
    return "" if t is None else repr(float(t))


def trajectory_rows(config: ExperimentConfig, max_steps: int):
    """CSV rows (without header) of every replicate's event log.

    Each replicate starts with a row for its initial state (step 0, empty
    component and delta). Components are 1-based. Urn deltas are the full
    change vector joined with ``;``.
    """
    spec = config.model
    for r in range(config.replicates):
        tr = simulate(spec, config.initial, max_steps=max_steps, seed=config.seed, replicate=r)
        state = list(config.initial.counts)
        t0 = 0.0 if spec.mode is Mode.LCP else None
        yield [r, 0, _fmt_time(t0), "", ""] + state
        times = tr.times if tr.times is not None else [None] * tr.steps
        for k, (comp, d, t) in enumerate(zip(tr.components.tolist(), tr.deltas(), times)):
            state = [a + b for a, b in zip(state, d)]
            if spec.mode is Mode.URN:
                delta = ";".join(str(v) for v in d)
            else:
                delta = str(d[comp])
            yield [r, k + 1, _fmt_time(t), comp + 1, delta] + state


def trajectory_header(n):
    return ["replicate", "step", "time", "component", "delta"] + [f"state_{i}" for i in range(n)]


def export_trajectories(config: ExperimentConfig, path=None, max_steps: Optional[int] = None) -> Path:
    """Write the event series of every replicate to CSV; zero replicates give a header-only file."""
    path = Path(path or config.trajectory_path or "trajectories.csv")
    path.parent.mkdir(parents=True, exist_ok=True)
    steps = max_steps if max_steps is not None else config.cap
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(trajectory_header(config.model.n))
        for row in trajectory_rows(config, steps):
            w.writerow(row)
    return path
