"""Trial ensembles, sweeps, threshold extraction and result serialization.

Trials are embarrassingly parallel: every trial's random stream is derived
from (master seed, grid index, trial index) alone, so results are identical
for any worker count or scheduling, and failure counts plus integer clock
sums aggregate without float-order effects.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .decoder import DecodeInput, TrialDecoder
from .lattice import build_lattice, build_syndrome_graph
from .noise import NoiseParams

CHANNELS = {
    "loss": "p_loss",
    "branching": "p_b",
    "spin_depol": "p_dep",
    "photon_x": "p_X_photon",
    "photon_z": "p_Z_photon",
    "gs_dephasing": "p_Z_spin",
    "blinking": "p_blink",
    "laser": "kappa_bar",
}


class PlanError(ValueError):
    pass


class NoThresholdInRange(RuntimeError):
    """The failure curves of the two largest lattices do not cross the grid."""


@dataclass(frozen=True)
class ExperimentPlan:
    channel: str
    grid: tuple
    lattice_sizes: tuple = (3, 5)
    n_attempts: int = 8
    trials: int = 2000
    master_seed: int = 2024
    base_noise: NoiseParams = field(default_factory=NoiseParams)
    bias_after_loss: bool = True
    reinit_after_zz_only: bool = False
    buffer_noise: bool = True
    matcher: str = "exact"

    def __post_init__(self):
        if self.channel not in CHANNELS:
            raise PlanError(f"unknown channel {self.channel!r}; choose from {sorted(CHANNELS)}")
        if self.trials < 1:
            raise PlanError("trials must be >= 1")
        if len(self.grid) < 1 or any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise PlanError("grid must be strictly increasing")
        if len(self.lattice_sizes) < 1:
            raise PlanError("at least one lattice size required")

    def noise_at(self, value: float) -> NoiseParams:
        return self.base_noise.replace(**{CHANNELS[self.channel]: value})

    def flags(self) -> np.ndarray:
        return np.array([int(self.bias_after_loss), int(self.reinit_after_zz_only),
                         int(self.buffer_noise)], dtype=np.int64)


@dataclass
class PointResult:
    L: int
    n_attempts: int
    value: float
    trials: int
    failures: int
    erasures: int
    errors: int
    tau_sum: int

    @property
    def rate(self) -> float:
        return self.failures / self.trials

    @property
    def wilson(self) -> tuple:
        return wilson_interval(self.failures, self.trials)

    @property
    def mean_tau(self) -> float:
        return self.tau_sum / self.trials


@dataclass
class SweepResult:
    plan: ExperimentPlan
    points: list

    def curve(self, L: int):
        pts = sorted((p for p in self.points if p.L == L), key=lambda p: p.value)
        return [p.value for p in pts], [p.rate for p in pts], [p.trials for p in pts]


def wilson_interval(k: int, n: int, z: float = 1.96) -> tuple:
    """95% Wilson score interval for a binomial proportion."""
    if n == 0:
        return (0.0, 1.0)
    p = k / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return (max(0.0, centre - half), min(1.0, centre + half))


class TrialEngine:
    """Per-lattice simulation context with reusable buffers."""

    def __init__(self, L: int, matcher: str = "exact"):
        self.spec = build_lattice(L)
        self.graph = build_syndrome_graph(self.spec)
        self.decoder = TrialDecoder(self.graph, matcher=matcher)
        self.edges_by_colour = np.stack(
            [np.nonzero(self.spec.edge_colour == c)[0] for c in range(3)]).astype(np.int32)
        self.endpoints = self.spec.edge_endpoints.astype(np.int32)
        s, v, t = self.spec.n_slots, self.spec.n_emitters, self.spec.layers
        self._xxf = np.zeros(s, np.uint8)
        self._xxe = np.zeros(s, np.uint8)
        self._zzf = np.zeros(s, np.uint8)
        self._zze = np.zeros(s, np.uint8)
        self._lnm = np.zeros(t, np.int32)
        self._sx = np.zeros(v, np.uint8)
        self._sz = np.zeros(v, np.uint8)
        self._blink = np.zeros(v, np.uint8)
        self._first = np.zeros(v, np.uint8)
        self._slot_attempts = np.zeros(s, np.int32)

    def run_trial(self, seed: int, noise_vec: np.ndarray, n_attempts: int,
                  flags: np.ndarray):
        kernels.run_trial(np.uint64(seed), self.spec.L, n_attempts, flags,
                          self.edges_by_colour, self.endpoints, noise_vec,
                          self._xxf, self._xxe, self._zzf, self._zze, self._lnm,
                          self._sx, self._sz, self._blink, self._first,
                          self._slot_attempts)
        verdict = self.decoder.decode(DecodeInput(
            self.graph, self._xxf, self._xxe, self._zzf, self._zze))
        tau = int(np.sum(2 * self._lnm + 1))
        return verdict, tau, self._lnm.copy()


def trial_seed(master_seed: int, point_index: int, trial_index: int) -> int:
    ss = np.random.SeedSequence(entropy=master_seed,
                                spawn_key=(point_index, trial_index))
    return int(ss.generate_state(1, np.uint64)[0])


_ENGINES: dict = {}


def _engine(L: int, matcher: str) -> TrialEngine:
    key = (L, matcher)
    if key not in _ENGINES:
        _ENGINES[key] = TrialEngine(L, matcher)
    return _ENGINES[key]


def _run_batch(args):
    (L, matcher, n_attempts, noise_vec, flags, master_seed, point_index,
     trial_lo, trial_hi) = args
    eng = _engine(L, matcher)
    failures = erasures = errors = 0
    tau_sum = 0
    for t in range(trial_lo, trial_hi):
        verdict, tau, _ = eng.run_trial(trial_seed(master_seed, point_index, t),
                                        noise_vec, n_attempts, flags)
        failures += verdict.failed
        erasures += verdict.logical_erasure
        errors += bool(verdict.logical_error)
        tau_sum += tau
    return failures, erasures, errors, tau_sum


def default_workers() -> int:
    env = os.environ.get("SFFCC_WORKERS")
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


def run_point(plan: ExperimentPlan, L: int, value: float, point_index: int,
              workers: int = 1, executor=None) -> PointResult:
    noise_vec = plan.noise_at(value).as_vector()
    flags = plan.flags()
    n = plan.trials
    batches = []
    n_chunks = max(1, min(workers * 4, n)) if workers > 1 else 1
    step = (n + n_chunks - 1) // n_chunks
    for lo in range(0, n, step):
        batches.append((L, plan.matcher, plan.n_attempts, noise_vec, flags,
                        plan.master_seed, point_index, lo, min(lo + step, n)))
    if executor is None or workers <= 1:
        parts = [_run_batch(b) for b in batches]
    else:
        parts = list(executor.map(_run_batch, batches))
    failures = sum(p[0] for p in parts)
    erasures = sum(p[1] for p in parts)
    errors = sum(p[2] for p in parts)
    tau_sum = sum(p[3] for p in parts)
    return PointResult(L=L, n_attempts=plan.n_attempts, value=value, trials=n,
                       failures=failures, erasures=erasures, errors=errors,
                       tau_sum=tau_sum)


def run_sweep(plan: ExperimentPlan, workers: int | None = None,
              progress=None) -> SweepResult:
    workers = default_workers() if workers is None else workers
    points = []
    jobs = [(L, gi, value) for L in plan.lattice_sizes
            for gi, value in enumerate(plan.grid)]
    executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for L, gi, value in jobs:
            point_index = L * 100003 + gi
            res = run_point(plan, L, value, point_index, workers=workers,
                            executor=executor)
            points.append(res)
            if progress:
                progress(res)
    finally:
        if executor is not None:
            executor.shutdown()
    return SweepResult(plan=plan, points=points)


def _crossing(grid, diff):
    for i in range(len(grid) - 1):
        a, b = diff[i], diff[i + 1]
        if a == 0.0:
            return grid[i]
        if a * b < 0:
            frac = a / (a - b)
            return grid[i] + frac * (grid[i + 1] - grid[i])
    if diff and diff[-1] == 0.0:
        return grid[-1]
    return None


def find_threshold(sweep: SweepResult, bootstrap: int = 200,
                   seed: int = 11) -> tuple:
    """Crossing point of the two largest lattice sizes' failure curves.

    Returns (threshold, sigma) with the uncertainty from a binomial
    bootstrap of every grid point.  Raises :class:`NoThresholdInRange`
    when the curves do not cross inside the grid.
    """
    sizes = sorted(set(p.L for p in sweep.points))
    if len(sizes) < 2:
        raise PlanError("threshold extraction needs at least two lattice sizes")
    l_small, l_big = sizes[-2], sizes[-1]
    grid, small, n_small = sweep.curve(l_small)
    grid2, big, n_big = sweep.curve(l_big)
    if grid != grid2:
        raise PlanError("lattice sizes were swept over different grids")
    diff = [a - b for a, b in zip(small, big)]
    est = _crossing(grid, diff)
    if est is None:
        raise NoThresholdInRange(
            f"no crossing of L={l_small} and L={l_big} curves within the grid")
    rng = np.random.default_rng(seed)
    samples = []
    for _ in range(bootstrap):
        d = [rng.binomial(ns, ps) / ns - rng.binomial(nb, pb) / nb
             for ps, ns, pb, nb in zip(small, n_small, big, n_big)]
        c = _crossing(grid, d)
        if c is not None:
            samples.append(c)
    sigma = float(np.std(samples)) if len(samples) >= 2 else float("nan")
    return float(est), sigma


def sweep_n(channel: str, n_values, grid, lattice_sizes=(2, 3), trials=1000,
            master_seed: int = 7, base_noise: NoiseParams | None = None,
            workers: int | None = None, **plan_kw):
    """Threshold versus attempt budget N; returns (rows, peak_n).

    Rows are (N, threshold, sigma) with None threshold when the curves do
    not cross inside the grid.
    """
    rows = []
    for n in n_values:
        plan = ExperimentPlan(channel=channel, grid=tuple(grid),
                              lattice_sizes=tuple(lattice_sizes),
                              n_attempts=int(n), trials=trials,
                              master_seed=master_seed,
                              base_noise=base_noise or NoiseParams(), **plan_kw)
        sweep = run_sweep(plan, workers=workers)
        try:
            th, sigma = find_threshold(sweep)
        except NoThresholdInRange:
            th, sigma = None, None
        rows.append((int(n), th, sigma))
    usable = [(n, t) for n, t, _ in rows if t is not None]
    peak_n = max(usable, key=lambda r: r[1])[0] if usable else None
    return rows, peak_n


CSV_COLUMNS = ["channel", "L", "n_attempts", "value", "trials", "failures",
               "erasures", "errors", "failure_rate", "wilson_low", "wilson_high",
               "mean_tau_echo_units"]


def sweep_to_csv(sweep: SweepResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for p in sorted(sweep.points, key=lambda p: (p.L, p.value)):
        lo, hi = p.wilson
        w.writerow([sweep.plan.channel, p.L, p.n_attempts, f"{p.value:.10g}",
                    p.trials, p.failures, p.erasures, p.errors,
                    f"{p.rate:.10g}", f"{lo:.10g}", f"{hi:.10g}",
                    f"{p.mean_tau:.10g}"])
    return buf.getvalue()


def sweep_manifest(sweep: SweepResult, config_hash: str | None = None,
                   timestamp: str | None = None) -> str:
    plan = sweep.plan
    payload = {
        "channel": plan.channel,
        "grid": list(plan.grid),
        "lattice_sizes": list(plan.lattice_sizes),
        "n_attempts": plan.n_attempts,
        "trials": plan.trials,
        "master_seed": plan.master_seed,
        "policy": {
            "bias_after_loss": plan.bias_after_loss,
            "reinit_after_zz_only": plan.reinit_after_zz_only,
            "buffer_noise": plan.buffer_noise,
            "matcher": plan.matcher,
        },
        "base_noise": {k: getattr(plan.base_noise, k) for k in (
            "p_loss", "p_b", "p_dep", "p_Z_spin", "p_X_photon", "p_Z_photon",
            "p_blink", "blink_rate", "kappa_bar")},
    }
    if config_hash:
        payload["config_hash"] = config_hash
    if timestamp:
        payload["timestamp"] = timestamp
    return json.dumps(payload, indent=2, sort_keys=True)
