"""Experiment harness: seeded problem generation, single solves, and the
table/phase-transition sweeps, all file-based and deterministic.

Ground-truth matrices are products of i.i.d. Gaussian factors, so their
rank equals the requested target.  Noise, when asked for, is scaled so
the measurement SNR is hit exactly.  Every sweep writes append-safe CSV
with a header and a spec-hash column; per-trial seeds are derived from
(seed, trial), so results do not depend on worker count.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .analysis import snr_recon
from .baseline import SvtDivergenceError, default_config, svt_solve
from .operators import GaussianOperator, SamplingOperator, _rng
from .solver import SolverConfig, admira_solve


@dataclasses.dataclass(frozen=True)
class ProblemSpec:
    """A random recovery instance: dimensions, true rank, operator kind
    ("gaussian" or "sampling"), measurement count, optional measurement
    SNR in dB (None means noiseless), and the seed that pins it all down."""

    m: int
    n: int
    rank: int
    operator: str
    p: int
    snr_meas_db: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.operator not in ("gaussian", "sampling"):
            raise ValueError(f"unknown operator kind: {self.operator!r}")
        if self.rank < 1 or self.rank > min(self.m, self.n):
            raise ValueError("rank must be in [1, min(m, n)]")
        if self.operator == "sampling" and self.p > self.m * self.n:
            raise ValueError("cannot sample more entries than the matrix has")
        if self.p < 1:
            raise ValueError("p must be positive")

    def hash(self):
        """Short stable digest of the spec for CSV provenance columns."""
        payload = json.dumps(dataclasses.asdict(self), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:12]


@dataclasses.dataclass(frozen=True)
class TrialRecord:
    """One CSV row of a sweep: which spec, which trial, how it went."""

    spec_hash: str
    trial: int
    algo: str
    snr_recon_db: float
    iterations: int
    stop_reason: str
    wall_time: float


def degrees_of_freedom(m, n, r):
    """Parameter count of a real rank-r m-by-n matrix: r (m + n - r)."""
    return r * (m + n - r)


def table1_measurement_count(n, r):
    """Sample budget 10 ceil(n^1.2 r log10 n) used for the completion table."""
    return 10 * math.ceil(n**1.2 * r * math.log10(n))


def generate_problem(spec):
    """Instantiate a :class:`ProblemSpec`.

    Returns ``(op, b, X0, nu)``.  The ground truth is ``Y_L @ Y_R.T``
    with i.i.d. standard normal factors of width ``spec.rank``; noise is
    a Gaussian direction rescaled so the measurement SNR matches
    ``spec.snr_meas_db`` exactly.  Bit-identical across calls with the
    same spec.
    """
    if spec.operator == "gaussian":
        op = GaussianOperator(spec.m, spec.n, spec.p, seed=spec.seed)
    else:
        op = SamplingOperator.random(spec.m, spec.n, spec.p, seed=spec.seed)
    rng = _rng(spec.seed, 1)
    YL = rng.standard_normal((spec.m, spec.rank))
    YR = rng.standard_normal((spec.n, spec.rank))
    X0 = YL @ YR.T
    b_clean = op.apply(X0)
    if spec.snr_meas_db is None:
        return op, b_clean, X0, np.zeros(spec.p)
    direction = _rng(spec.seed, 2).standard_normal(spec.p)
    direction /= np.linalg.norm(direction)
    nu = direction * (np.linalg.norm(b_clean) * 10.0 ** (-spec.snr_meas_db / 20.0))
    return op, b_clean + nu, X0, nu


def run_trial(spec, algo="admira", solver_config=None, svt_config=None,
              trial_index=0):
    """Generate the instance, solve it, and score it.

    Returns ``(record, report)``.  SVT divergence is captured as a
    failed record rather than raised, so sweeps keep going.
    """
    op, b, X0, _nu = generate_problem(spec)
    start = time.perf_counter()
    if algo == "admira":
        cfg = solver_config or SolverConfig(rank=spec.rank, seed=spec.seed)
        report = admira_solve(op, b, cfg)
    elif algo == "svt":
        if spec.snr_meas_db is not None:
            raise ValueError("svt supports noiseless measurements only")
        cfg = svt_config or default_config(spec.m, spec.n, spec.p)
        try:
            report = svt_solve(op, b, cfg)
        except SvtDivergenceError as exc:
            report = exc.report
    else:
        raise ValueError(f"unknown algorithm: {algo!r}")
    wall = time.perf_counter() - start
    record = TrialRecord(spec.hash(), trial_index, algo,
                         round(snr_recon(X0, report.solution), 4),
                         report.iterations, report.stop_reason, round(wall, 4))
    return record, report


def _trial_star(args):
    return run_trial(*args)[0]


def _map_trials(jobs, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_trial_star, jobs))
    return [_trial_star(j) for j in jobs]


def _write_csv(path, header, rows):
    # Append-safe: the header is only written when the file is new/empty.
    fresh = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a") as fh:
        if fresh:
            fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")


def run_table1(n_list, trials=20, out_csv=None, seed=0, workers=1,
               rank=2, solver_config=None):
    """Completion of square random matrices at the n^1.2-law sample
    budget, noiseless and at 20 dB measurement SNR.

    One CSV row per n: sampling density, oversampling factor over the
    degrees of freedom, and mean reconstruction SNR / iteration count
    for both noise settings.
    """
    header = ["n", "p_over_n2", "p_over_dr", "snr_noiseless_db",
              "iters_noiseless", "snr_noisy_db", "iters_noisy",
              "trials", "spec_hash"]
    rows = []
    for n in n_list:
        # the published budget exceeds n^2 below n ~ 100; cap at full
        # observation so small smoke runs remain valid sampling problems
        p = min(table1_measurement_count(n, rank), n * n)
        cells = {}
        for label, noise in (("noiseless", None), ("noisy", 20.0)):
            specs = [ProblemSpec(n, n, rank, "sampling", p, noise,
                                 seed=_trial_seed(seed, n, label, t))
                     for t in range(trials)]
            jobs = [(s, "admira", solver_config, None, t)
                    for t, s in enumerate(specs)]
            recs = _map_trials(jobs, workers)
            cells[label] = (np.mean([r.snr_recon_db for r in recs]),
                            np.mean([r.iterations for r in recs]))
        base = ProblemSpec(n, n, rank, "sampling", p, None, seed=seed)
        rows.append([n, round(p / n**2, 4),
                     round(p / degrees_of_freedom(n, n, rank), 2),
                     round(cells["noiseless"][0], 2), round(cells["noiseless"][1], 2),
                     round(cells["noisy"][0], 2), round(cells["noisy"][1], 2),
                     trials, base.hash()])
    if out_csv:
        _write_csv(out_csv, header, rows)
    return header, rows


def run_table2(r_list=(2, 5, 10), density_list=(0.05, 0.10, 0.15, 0.20, 0.25, 0.30),
               n=1000, trials=20, out_csv=None, seed=0, workers=1,
               solver_config=None, svt_config=None):
    """Head-to-head completion comparison on noiseless instances: one CSV
    row per (rank, sampling density) with mean SNR and iterations for
    both algorithms on the same instances.  Failures (including SVT
    divergence) are recorded, not raised."""
    header = ["r", "p_over_n2", "p_over_dr", "admira_snr_db", "svt_snr_db",
              "admira_iters", "svt_iters", "trials", "spec_hash"]
    rows = []
    for r in r_list:
        for density in density_list:
            p = int(round(density * n * n))
            specs = [ProblemSpec(n, n, r, "sampling", p, None,
                                 seed=_trial_seed(seed, n, r, density, t))
                     for t in range(trials)]
            cfg = solver_config or SolverConfig(rank=r)
            recs_a = _map_trials([(s, "admira", dataclasses.replace(cfg, rank=r), None, t)
                                  for t, s in enumerate(specs)], workers)
            recs_s = _map_trials([(s, "svt", None, svt_config, t)
                                  for t, s in enumerate(specs)], workers)
            rows.append([r, round(p / n**2, 4),
                         round(p / degrees_of_freedom(n, n, r), 2),
                         round(np.mean([x.snr_recon_db for x in recs_a]), 2),
                         round(np.mean([x.snr_recon_db for x in recs_s]), 2),
                         round(np.mean([x.iterations for x in recs_a]), 2),
                         round(np.mean([x.iterations for x in recs_s]), 2),
                         trials, specs[0].hash()])
    if out_csv:
        _write_csv(out_csv, header, rows)
    return header, rows


SUCCESS_SNR_DB = 70.0


def run_phase(p_grid, r_grid, n=100, trials=10, out_csv=None, seed=0,
              workers=1):
    """Phase-transition grid: for each (p, r) cell, how many of the
    trials each algorithm completes to at least 70 dB."""
    header = ["p", "r", "p_over_n2", "p_over_dr", "admira_successes",
              "svt_successes", "trials", "spec_hash"]
    rows = []
    for r in r_grid:
        for p in p_grid:
            specs = [ProblemSpec(n, n, r, "sampling", int(p), None,
                                 seed=_trial_seed(seed, n, r, p, t))
                     for t in range(trials)]
            recs_a = _map_trials([(s, "admira", SolverConfig(rank=r, seed=s.seed), None, t)
                                  for t, s in enumerate(specs)], workers)
            recs_s = _map_trials([(s, "svt", None, None, t)
                                  for t, s in enumerate(specs)], workers)
            rows.append([int(p), r, round(p / n**2, 4),
                         round(p / degrees_of_freedom(n, n, r), 2),
                         sum(x.snr_recon_db >= SUCCESS_SNR_DB for x in recs_a),
                         sum(x.snr_recon_db >= SUCCESS_SNR_DB for x in recs_s),
                         trials, specs[0].hash()])
    if out_csv:
        _write_csv(out_csv, header, rows)
    return header, rows


def _trial_seed(seed, *key):
    """Stable per-trial seed from the base seed and the cell coordinates."""
    payload = json.dumps([seed, *[str(k) for k in key]])
    return int.from_bytes(hashlib.sha256(payload.encode()).digest()[:6], "big")


TRIAL_CSV_HEADER = ["spec_hash", "trial", "algo", "snr_recon_db",
                    "iterations", "stop_reason", "wall_time"]


def solve_once(op, b, algo, out_dir, X0=None, solver_config=None,
               svt_config=None, rank=None, spec_hash="", trial_index=0):
    """Solve one instance and persist the outcome.

    Writes ``solution.txt`` (factored matrix), ``report.json`` (stop
    reason plus the residual trace, and the error trace and SNR when a
    ground truth is given), and appends one row to ``trials.csv``.
    Returns the :class:`TrialRecord`.
    """
    from . import fileio  # local import keeps bench usable without file output

    os.makedirs(out_dir, exist_ok=True)
    start = time.perf_counter()
    if algo == "admira":
        cfg = solver_config or SolverConfig(rank=rank if rank else 1)
        report = admira_solve(op, b, cfg, ground_truth=X0)
    elif algo == "svt":
        cfg = svt_config or default_config(op.m, op.n, op.p)
        try:
            report = svt_solve(op, b, cfg, ground_truth=X0)
        except SvtDivergenceError as exc:
            report = exc.report
    else:
        raise ValueError(f"unknown algorithm: {algo!r}")
    wall = time.perf_counter() - start

    snr = round(snr_recon(X0, report.solution), 4) if X0 is not None else float("nan")
    record = TrialRecord(spec_hash, trial_index, algo, snr,
                         report.iterations, report.stop_reason, round(wall, 4))
    fileio.write_factored_matrix(os.path.join(out_dir, "solution.txt"),
                                 report.solution)
    payload = {
        "algo": algo,
        "spec_hash": spec_hash,
        "iterations": report.iterations,
        "stop_reason": report.stop_reason,
        "solution_residual": report.solution_residual,
        "residual_trace": report.residual_trace.tolist(),
        "error_trace": (report.error_trace.tolist()
                        if report.error_trace is not None else None),
        "snr_recon_db": None if X0 is None else snr,
        "wall_time": record.wall_time,
    }
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        json.dump(payload, fh, indent=2)
    _write_csv(os.path.join(out_dir, "trials.csv"), TRIAL_CSV_HEADER,
               [[record.spec_hash, record.trial, record.algo,
                 record.snr_recon_db, record.iterations, record.stop_reason,
                 record.wall_time]])
    return record
