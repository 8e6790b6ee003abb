"""Matrix constants and per-iteration contraction-rate bounds, plus
Monte-Carlo machinery to compare empirical contraction against them.

Coherence extremes (delta, Delta and their column analogs) come from an
exact pairwise scan up to a size cap; tau quantities are the Frobenius
norm squared minus extreme row/column norms; lambda_min is the smallest
nonzero eigenvalue of the Gram matrix.  Rates that evaluate below zero
(vacuous bounds, possible for near-orthogonal systems) are clamped to 0
and flagged by name rather than reported silently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .linalg import gram_extreme_eigenvalues
from .problems import range_split
from .solvers import (
    CONSISTENT_KINDS,
    SolverKind,
    SolverState,
    StopConfig,
    build_caches,
    step,
)

PAIRWISE_CAP = 4000
_BLOCK = 256


class ConstantsTooLargeError(ValueError):
    """Exact pairwise coherence scan refused beyond the size cap."""


@dataclass(frozen=True)
class TheoryConstants:
    delta: float
    Delta: float
    delta_t: float
    Delta_t: float
    tau_min: float
    tau_max: float
    tau_t_min: float
    tau_t_max: float
    t: float
    lambda_min: float
    lambda_max: float
    D: float
    D_t: float
    rows_have_parallel_pair: bool
    cols_have_parallel_pair: bool
    approximate: bool = False


@dataclass(frozen=True)
class BoundRates:
    thm1_beta: float
    thm2_alpha: float
    thm2_beta: float
    thm2_prefactor: float
    thm3_beta_hat: float
    thm4_alpha_hat: float
    thm4_beta_hat: float
    thm4_prefactor: float
    thm7_alpha1: float
    thm7_beta1: float
    thm8_alpha1_t: float | None
    thm8_beta1_t: float | None
    vacuous: tuple = ()
    raw: dict = field(default_factory=dict)


def _coherence_extremes(dense, sample=None, rng=None):
    """(min, max) |cos angle| over distinct nonzero rows of a dense array."""
    norms = np.linalg.norm(dense, axis=1)
    keep = np.flatnonzero(norms > 0)
    if sample is not None and keep.size > sample:
        keep = np.sort(rng.choice(keep, size=sample, replace=False))
    if keep.size < 2:
        return 0.0, 0.0
    unit = dense[keep] / norms[keep][:, None]
    lo, hi = np.inf, 0.0
    for start in range(0, unit.shape[0], _BLOCK):
        block = unit[start : start + _BLOCK]
        prods = np.abs(block @ unit.T)
        # Mask the self-pairs on this block's diagonal strip.
        for bi in range(block.shape[0]):
            prods[bi, start + bi] = np.nan
        lo = min(lo, np.nanmin(prods))
        hi = max(hi, np.nanmax(prods))
    return float(min(lo, 1.0)), float(min(hi, 1.0))


def _coherence_combination(lo, hi):
    return min(lo * lo * (1 - lo) / (1 + lo), hi * hi * (1 - hi) / (1 + hi))


def compute_constants(A, cache, sample=None, seed=0):
    """Exact TheoryConstants, or a flagged sampled approximation.

    sample=None scans all row/column pairs (O(m^2 + n^2) pairs, capped);
    an integer subsamples that many rows/columns uniformly and marks the
    result approximate.
    """
    m, n = A.shape
    if sample is None and (m > PAIRWISE_CAP or n > PAIRWISE_CAP):
        raise ConstantsTooLargeError(
            f"{m}x{n} exceeds the {PAIRWISE_CAP} pairwise-scan cap; "
            "pass a sample size for an approximate scan"
        )
    rng = rngmod.stream(seed, rngmod.method_tag("constants_sample"))
    dense = A.to_dense()
    delta, Delta = _coherence_extremes(dense, sample, rng)
    delta_t, Delta_t = _coherence_extremes(dense.T, sample, rng)
    row_sq = cache.row_sq_norms[cache.row_sq_norms > 0]
    col_sq = cache.col_sq_norms[cache.col_sq_norms > 0]
    lam_min, lam_max = gram_extreme_eigenvalues(A)
    return TheoryConstants(
        delta=delta,
        Delta=Delta,
        delta_t=delta_t,
        Delta_t=Delta_t,
        tau_min=float(cache.frob_sq - row_sq.max()) if row_sq.size else 0.0,
        tau_max=float(cache.frob_sq - row_sq.min()) if row_sq.size else 0.0,
        tau_t_min=float(cache.frob_sq - col_sq.max()) if col_sq.size else 0.0,
        tau_t_max=float(cache.frob_sq - col_sq.min()) if col_sq.size else 0.0,
        t=float(row_sq.min()) if row_sq.size else 0.0,
        lambda_min=lam_min,
        lambda_max=lam_max,
        D=_coherence_combination(delta, Delta),
        D_t=_coherence_combination(delta_t, Delta_t),
        rows_have_parallel_pair=bool(Delta >= 1.0 - 1e-12),
        cols_have_parallel_pair=bool(Delta_t >= 1.0 - 1e-12),
        approximate=sample is not None,
    )


def rate_thm1(c, cache):
    """Greedy column-projection contraction factor.

    1 - (|A|_F^2 / tau~_max + 1) * lambda_min / (2 |A|_F^2); 0 for the
    degenerate single-column case tau~_max = 0.
    """
    if c.tau_t_max <= 0.0:
        return 0.0
    return 1.0 - 0.5 * (cache.frob_sq / c.tau_t_max + 1.0) * c.lambda_min / cache.frob_sq


def rates_all(c, cache, c_omega_rows=None, c_omega_cols=None):
    """All computable bound rates and prefactors.

    Bounds whose constants are purely existential (no computable value)
    are excluded; the data-informed rates thm8_* are evaluated only when
    an empirical (c, omega) pair is supplied for the respective axis.
    """
    frob_sq = cache.frob_sq
    raw = {}
    raw["thm1_beta"] = rate_thm1(c, cache)
    raw["thm2_beta"] = raw["thm1_beta"]
    raw["thm2_alpha"] = (
        1.0 - 0.5 * (frob_sq / c.tau_max + 1.0) * c.lambda_min / frob_sq
        if c.tau_max > 0
        else 0.0
    )
    raw["thm2_prefactor"] = 1.0 + 2.0 * frob_sq / c.t if c.t > 0 else math.inf
    raw["thm3_beta_hat"] = 1.0 - c.lambda_min / c.tau_t_max if c.tau_t_max > 0 else 0.0
    raw["thm4_alpha_hat"] = 1.0 - c.lambda_min / c.tau_max if c.tau_max > 0 else 0.0
    raw["thm4_beta_hat"] = raw["thm3_beta_hat"]
    raw["thm4_prefactor"] = 1.0 + 2.0 * c.tau_max / c.t if c.t > 0 else math.inf
    raw["thm7_alpha1"] = (
        1.0 - (1.0 / (1.0 + c.Delta)) * (frob_sq / c.tau_max + 1.0) * c.lambda_min / frob_sq
        if c.tau_max > 0
        else 0.0
    )
    raw["thm7_beta1"] = (
        1.0 - (1.0 / (1.0 + c.Delta_t)) * (frob_sq / c.tau_t_max + 1.0) * c.lambda_min / frob_sq
        if c.tau_t_max > 0
        else 0.0
    )

    def _thm8(tau, delta, c_omega):
        if c_omega is None or tau <= 0:
            return None
        c_val, omega = c_omega
        denom = c_val * c_val * (1.0 - delta * delta)
        if denom <= 0:
            return None
        return 1.0 - c.lambda_min / tau - (c.lambda_min / tau) * (omega / denom)

    raw["thm8_alpha1_t"] = _thm8(c.tau_max, c.delta, c_omega_rows)
    raw["thm8_beta1_t"] = _thm8(c.tau_t_max, c.delta_t, c_omega_cols)

    vacuous = tuple(
        name
        for name, val in raw.items()
        if val is not None and not name.endswith("prefactor") and val < 0.0
    )
    clamped = {
        name: (max(0.0, val) if val is not None and not name.endswith("prefactor") else val)
        for name, val in raw.items()
    }
    return BoundRates(vacuous=vacuous, raw=raw, **clamped)


def empirical_contraction(kind, problem, trials, steps, seed=0, fraction=0.01):
    """Per-step mean error-contraction ratios with standard errors.

    The error is z - b_perp for projection/extended methods and x - x_star
    for consistent-system row methods; ratios are |e_j|^2 / |e_{j-1}|^2
    averaged over trials (steps where the previous error already vanished
    are skipped).
    """
    kind = SolverKind(kind)
    config = StopConfig(fraction=fraction)
    caches = build_caches(problem.A)
    if kind in CONSISTENT_KINDS:
        if problem.x_star is None:
            raise ValueError("consistent-method contraction needs x_star")
        target = ("x", np.asarray(problem.x_star, dtype=np.float64))
    else:
        b_perp = problem.r
        if b_perp is None:
            b_perp = range_split(problem.A, problem.b).b_perp
        target = ("z", np.asarray(b_perp, dtype=np.float64))
    ratios = np.full((steps, trials), np.nan)
    for trial in range(trials):
        state = SolverState.initial(kind, problem, rngmod.cell_seed(seed, kind.value, 0, trial))
        vec = state.x if target[0] == "x" else state.z
        prev = float(np.sum((vec - target[1]) ** 2))
        for j in range(steps):
            step(kind, state, problem, caches, config)
            vec = state.x if target[0] == "x" else state.z
            cur = float(np.sum((vec - target[1]) ** 2))
            if prev > 1e-300:
                ratios[j, trial] = cur / prev
            prev = cur
    means = np.full(steps, np.nan)
    stderrs = np.full(steps, np.nan)
    for j in range(steps):
        vals = ratios[j][~np.isnan(ratios[j])]
        if vals.size:
            means[j] = vals.mean()
            stderrs[j] = (vals.std(ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else 0.0
    return means, stderrs
