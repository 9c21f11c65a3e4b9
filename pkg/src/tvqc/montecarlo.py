"""Monte Carlo word-error-rate estimation and threshold extraction.

Each block draws a multi-qubit Pauli error, extracts the syndrome,
decodes with MWPM and checks for a logical failure.  A cell (one code
distance at one mean depolarizing probability) runs blocks until the
failure target is reached (default 100, the N_blocks = 100/WER rule of
thumb) or a block cap is hit.  When the target is met the quoted 95%
confidence interval is the nominal multiplicative one,
(0.8 WER, 1.25 WER); an exact Clopper-Pearson interval is always
attached, and low-failure cells are flagged and quote Clopper-Pearson
bounds instead.

Blocks are independent: block b of a cell draws from the Philox stream
(cell_seed, b), and blocks are evaluated in fixed-size batches consumed
in index order, so results are byte-identical for any worker count.
Cell seeds derive from (master seed, d, mode, p-index).
"""

from __future__ import annotations

import json
import math
import multiprocessing as mp
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import beta as _beta

from .channels import (MODELS, MODES, DecoherenceSpec, block_pauli_probs,
                       sample_letters, solve_t_algo)
from .errors import NumericalError, UsageError
from .pauli import PauliOperator
from .planar import PlanarCode, build_planar, is_logical_failure, \
    mwpm_decode, syndrome
from .rng import RngStream, derive_seed

BATCH_BLOCKS = 250
FAILURE_TARGET = 100

CSV_COLUMNS = ("d", "mode", "model", "p_bar", "cv", "wer", "ci_low",
               "ci_high", "failures", "blocks", "seed")


@dataclass(frozen=True)
class WerEstimate:
    """Word-error-rate estimate for one cell."""

    wer_hat: float
    failures: int
    blocks: int
    ci_low: float
    ci_high: float
    seed: int
    cp_low: float
    cp_high: float
    flagged: bool


@dataclass(frozen=True)
class SweepRow:
    d: int
    mode: str
    model: str
    p_bar: float
    cv: float
    estimate: WerEstimate


@dataclass(frozen=True)
class SweepResult:
    rows: tuple

    def filter(self, mode: str | None = None, d: int | None = None):
        keep = [r for r in self.rows
                if (mode is None or r.mode == mode)
                and (d is None or r.d == d)]
        return SweepResult(tuple(keep))

    @property
    def modes(self):
        return sorted({r.mode for r in self.rows})

    @property
    def distances(self):
        return sorted({r.d for r in self.rows})


def clopper_pearson(failures: int, blocks: int, level: float = 0.95):
    """Exact binomial confidence interval."""
    alpha = 1.0 - level
    lo = 0.0 if failures == 0 else float(
        _beta.ppf(alpha / 2.0, failures, blocks - failures + 1))
    hi = 1.0 if failures == blocks else float(
        _beta.ppf(1.0 - alpha / 2.0, failures + 1, blocks - failures))
    return lo, hi


# --- worker plumbing -------------------------------------------------------

_CELL = {}


def _init_cell(d, mode, model, spec, cell_seed):
    _CELL["code"] = build_planar(d)
    _CELL["mode"] = mode
    _CELL["model"] = model
    _CELL["spec"] = spec
    _CELL["seed"] = cell_seed
    if mode == "static":
        gen = RngStream(cell_seed, 0).generator()  # no draws in static mode
        _CELL["static_probs"] = block_pauli_probs(_CELL["code"].n, mode,
                                                  spec, model, gen)
    else:
        _CELL["static_probs"] = None


def _run_batch(args):
    start, size = args
    code: PlanarCode = _CELL["code"]
    spec = _CELL["spec"]
    mode, model = _CELL["mode"], _CELL["model"]
    probs = _CELL["static_probs"]
    cell_seed = _CELL["seed"]
    failures = 0
    for b in range(start, start + size):
        gen = RngStream(cell_seed, b).generator()
        p = probs if probs is not None else block_pauli_probs(
            code.n, mode, spec, model, gen)
        letters = sample_letters(p, gen)
        x_bits = ((letters == 1) | (letters == 2)).astype(np.uint8)
        z_bits = ((letters == 2) | (letters == 3)).astype(np.uint8)
        error = PauliOperator(code.n, x_bits, z_bits)
        correction = mwpm_decode(code, syndrome(code, error))
        if is_logical_failure(code, error, correction):
            failures += 1
    return failures


def estimate_wer(code: PlanarCode, mode: str, model: str,
                 spec: DecoherenceSpec, seed: int,
                 target_wer_floor: float | None = None,
                 max_blocks: int = 200_000,
                 failure_target: int = FAILURE_TARGET,
                 workers: int = 1) -> WerEstimate:
    """Estimate the WER of one cell with the stop-at-N-failures rule.

    Blocks run in batches of BATCH_BLOCKS consumed in index order; the
    run stops at the end of the first batch where cumulative failures
    reach failure_target, or at max_blocks.  target_wer_floor, when
    given, additionally caps the block count at
    failure_target / target_wer_floor.
    """
    if mode not in MODES:
        raise UsageError(f"mode must be one of {MODES}, got {mode!r}")
    if model not in MODELS:
        raise UsageError(f"model must be one of {MODELS}, got {model!r}")
    if max_blocks < 1:
        raise UsageError("max_blocks must be >= 1")
    if target_wer_floor is not None:
        if not 0.0 < target_wer_floor < 1.0:
            raise UsageError("target_wer_floor must lie in (0, 1)")
        max_blocks = min(max_blocks,
                         math.ceil(failure_target / target_wer_floor))

    batches = []
    start = 0
    while start < max_blocks:
        size = min(BATCH_BLOCKS, max_blocks - start)
        batches.append((start, size))
        start += size

    failures = 0
    blocks = 0
    init_args = (code.d, mode, model, spec, seed)
    if workers <= 1:
        _init_cell(*init_args)
        for batch in batches:
            failures += _run_batch(batch)
            blocks += batch[1]
            if failures >= failure_target:
                break
    else:
        ctx = mp.get_context()
        with ctx.Pool(workers, initializer=_init_cell,
                      initargs=init_args) as pool:
            for batch, got in zip(batches,
                                  pool.imap(_run_batch, batches)):
                failures += got
                blocks += batch[1]
                if failures >= failure_target:
                    break

    wer_hat = failures / blocks
    cp_low, cp_high = clopper_pearson(failures, blocks)
    if failures >= failure_target:
        return WerEstimate(wer_hat, failures, blocks,
                           0.8 * wer_hat, 1.25 * wer_hat, seed,
                           cp_low, cp_high, flagged=False)
    # under-powered cell: quote the exact wide interval and flag it
    return WerEstimate(wer_hat, failures, blocks, cp_low, cp_high, seed,
                       cp_low, cp_high, flagged=True)


def sweep(ds, modes, model: str, p_grid, cv: float, seed: int,
          mu_t1: float = 100.0, mu_t2: float | None = None,
          cv_t2: float = 0.0, max_blocks: int = 200_000,
          failure_target: int = FAILURE_TARGET, workers: int = 1,
          target_wer_floor: float | None = None,
          progress=None) -> SweepResult:
    """Run the (d, mode, p_bar) grid and collect one row per cell.

    Cell seeds derive deterministically from (seed, d, mode, p-index),
    so any sub-grid rerun reproduces its cells bit-exactly.
    """
    ds = [int(d) for d in ds]
    modes = list(modes)
    p_grid = [float(p) for p in p_grid]
    cv = float(cv)
    if not ds or not modes or not p_grid:
        raise UsageError("sweep grids must be non-empty")
    if mu_t2 is None:
        mu_t2 = 2.0 * mu_t1
    solver_model = "cta_apd" if model.endswith("apd") else "cta_ad"
    rows = []
    for d in ds:
        code = build_planar(d)
        for mode in modes:
            for p_index, p_bar in enumerate(p_grid):
                t_algo = solve_t_algo(mu_t1, p_bar, solver_model, mu_t2)
                sigma_t1 = 0.0 if mode == "static" else cv * mu_t1
                sigma_t2 = 0.0 if mode == "static" else cv_t2 * mu_t2
                spec = DecoherenceSpec(mu_t1, sigma_t1, mu_t2, sigma_t2,
                                       t_algo)
                cell_seed = derive_seed(seed, d, mode, p_index)
                est = estimate_wer(code, mode, model, spec, cell_seed,
                                   target_wer_floor=target_wer_floor,
                                   max_blocks=max_blocks,
                                   failure_target=failure_target,
                                   workers=workers)
                rows.append(SweepRow(d, mode, model, p_bar, cv, est))
                if progress is not None:
                    progress(rows[-1])
    return SweepResult(tuple(rows))


# --- threshold extraction --------------------------------------------------

@dataclass(frozen=True)
class ThresholdEstimate:
    """Crossing-point estimate: mean of pairwise crossings +/- spread."""

    value: float
    spread: float
    crossings: dict = field(hash=False, default_factory=dict)


def estimate_threshold(result: SweepResult) -> ThresholdEstimate:
    """Locate the WER crossing of successive code distances.

    For each adjacent distance pair, the crossing of log(WER) against
    p_bar is found by piecewise-linear interpolation; the estimate is
    the mean of the pairwise crossings and the spread is their maximum
    deviation from that mean.
    """
    if len(result.modes) != 1:
        raise UsageError("threshold estimation needs a single-mode sweep; "
                         f"got modes {result.modes} (use .filter)")
    ds = result.distances
    if len(ds) < 2:
        raise UsageError("need at least two code distances")
    curves = {}
    for d in ds:
        rows = sorted(result.filter(d=d).rows, key=lambda r: r.p_bar)
        ps = [r.p_bar for r in rows]
        wers = [r.estimate.wer_hat for r in rows]
        if len(ps) < 4:
            raise UsageError("need at least 4 grid points per distance")
        curves[d] = (ps, wers)

    crossings = {}
    for d1, d2 in zip(ds[:-1], ds[1:]):
        ps1, w1 = curves[d1]
        ps2, w2 = curves[d2]
        if ps1 != ps2:
            raise UsageError("distances were swept on different p grids")
        delta = []
        for a, b in zip(w1, w2):
            delta.append(math.log(b) - math.log(a)
                         if a > 0 and b > 0 else math.nan)
        p_cross = _first_upcrossing(ps1, delta)
        if p_cross is None:
            raise NumericalError(
                f"no WER crossing for d={d1} vs d={d2} in window "
                f"[{ps1[0]}, {ps1[-1]}]")
        crossings[(d1, d2)] = p_cross

    values = list(crossings.values())
    mean = sum(values) / len(values)
    spread = max(abs(v - mean) for v in values)
    return ThresholdEstimate(mean, spread, crossings)


def _first_upcrossing(ps, delta):
    """First sign change of delta from negative to positive, interpolated."""
    for k in range(len(ps) - 1):
        a, b = delta[k], delta[k + 1]
        if math.isnan(a) or math.isnan(b):
            continue
        if a < 0.0 <= b:
            if b == a:
                return ps[k]
            return ps[k] + (0.0 - a) * (ps[k + 1] - ps[k]) / (b - a)
    return None


# --- serialization ---------------------------------------------------------

def sweep_to_csv(result: SweepResult, path):
    """Write the stable CSV schema (one row per cell)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for r in result.rows:
            e = r.estimate
            fh.write(",".join([
                str(r.d), r.mode, r.model, repr(r.p_bar), repr(r.cv),
                repr(e.wer_hat), repr(e.ci_low), repr(e.ci_high),
                str(e.failures), str(e.blocks), str(e.seed)]) + "\n")


def sweep_to_json(result: SweepResult, path):
    """JSON twin of the CSV with the exact intervals and flags included."""
    payload = []
    for r in result.rows:
        e = r.estimate
        payload.append({
            "d": r.d, "mode": r.mode, "model": r.model, "p_bar": r.p_bar,
            "cv": r.cv, "wer": e.wer_hat, "ci_low": e.ci_low,
            "ci_high": e.ci_high, "cp_low": e.cp_low, "cp_high": e.cp_high,
            "failures": e.failures, "blocks": e.blocks, "seed": e.seed,
            "flagged": e.flagged})
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")
