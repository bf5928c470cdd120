"""Trial-averaged rate estimation and the experiment sweeps.

Each trial draws its randomness from a Philox stream keyed by (seed, trial
index), so estimates are bit-identical for a fixed seed regardless of worker
count, chunking, or evaluation order. Aggregation stores per-trial values
positionally and reduces with numpy's pairwise summation.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import association as assoc
from .channel import draw_channels
from .config import NormalizedConfig, SystemConfig, normalize
from .geometry import sample_realization

ENV_THREADS = "FDCRAN_THREADS"

DUPLEX_FD = "fd"
DUPLEX_HD = "hd"

# Scheme/design combinations reported by the sweep commands.
FD_COMBOS = (
    (assoc.SCHEME_ARA, assoc.DESIGN_MRC_MRT),
    (assoc.SCHEME_ARA, assoc.DESIGN_ZF_MRT),
    (assoc.SCHEME_SRA, assoc.DESIGN_MRC_MRT),
    (assoc.SCHEME_SRA, assoc.DESIGN_ZF_MRT),
    (assoc.SCHEME_SRA, assoc.DESIGN_OPTIMAL),
)


@dataclass
class RateEstimate:
    mean: float
    std_error: float
    trials: int
    direction: str


def resolve_workers(workers: int | None = None) -> int:
    """Worker count: explicit argument, else the env cap, else serial."""
    cap = os.environ.get(ENV_THREADS)
    cap_val = max(int(cap), 1) if cap else None
    if workers is None:
        return cap_val if cap_val is not None else 1
    if cap_val is not None:
        return max(min(workers, cap_val), 1)
    return max(workers, 1)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Counter-based stream for one trial; independent across trials."""
    return np.random.Generator(np.random.Philox(key=[seed & (2 ** 64 - 1), trial]))


def run_trial(ncfg: NormalizedConfig, scheme: str, design: str, duplex: str,
              trial: int) -> tuple[float, float]:
    rng = trial_rng(ncfg.seed, trial)
    realization = sample_realization(ncfg, rng)
    channels = draw_channels(realization, ncfg, rng)
    if duplex == DUPLEX_HD:
        if scheme == assoc.SCHEME_SRA:
            return assoc.hd_rates_sra(realization, channels, ncfg)
        return assoc.hd_rates(realization, channels, ncfg)
    return assoc.instantaneous_rates(realization, channels, ncfg, scheme, design)


def _simulate_chunk(args) -> tuple[int, np.ndarray, np.ndarray]:
    ncfg, scheme, design, duplex, lo, hi = args
    ul = np.empty(hi - lo)
    dl = np.empty(hi - lo)
    for k in range(lo, hi):
        ul[k - lo], dl[k - lo] = run_trial(ncfg, scheme, design, duplex, k)
    return lo, ul, dl


def trial_rate_arrays(config: SystemConfig | NormalizedConfig, scheme: str,
                      design: str, trials: int | None = None,
                      duplex: str = DUPLEX_FD,
                      workers: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Per-trial (UL, DL) rate arrays, indexed by trial number."""
    ncfg = config if isinstance(config, NormalizedConfig) else normalize(config)
    n = int(trials) if trials is not None else ncfg.trials
    if n < 1:
        raise ValueError("trials must be >= 1")
    nw = resolve_workers(workers)
    ul = np.empty(n)
    dl = np.empty(n)
    if nw <= 1 or n < 256:
        _, ul[:], dl[:] = _simulate_chunk((ncfg, scheme, design, duplex, 0, n))
        return ul, dl
    bounds = np.linspace(0, n, 4 * nw + 1, dtype=int)
    jobs = [(ncfg, scheme, design, duplex, int(a), int(b))
            for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with ProcessPoolExecutor(max_workers=nw) as pool:
        for lo, part_ul, part_dl in pool.map(_simulate_chunk, jobs):
            ul[lo:lo + part_ul.size] = part_ul
            dl[lo:lo + part_dl.size] = part_dl
    return ul, dl


def _estimate_from_array(values: np.ndarray, direction: str) -> RateEstimate:
    n = values.size
    mean = float(np.sum(values) / n)
    if n > 1:
        var = float(np.sum((values - mean) ** 2) / (n - 1))
        se = math.sqrt(var / n)
    else:
        se = 0.0
    return RateEstimate(mean=mean, std_error=se, trials=n, direction=direction)


def estimate(config: SystemConfig | NormalizedConfig, scheme: str, design: str,
             trials: int | None = None, duplex: str = DUPLEX_FD,
             workers: int | None = None) -> tuple[RateEstimate, RateEstimate, RateEstimate]:
    """Average (UL, DL, sum) rates with standard errors."""
    ul, dl = trial_rate_arrays(config, scheme, design, trials, duplex, workers)
    return (_estimate_from_array(ul, "ul"),
            _estimate_from_array(dl, "dl"),
            _estimate_from_array(ul + dl, "sum"))


def _row(scheme, design, duplex, param_name, param_value, est_ul, est_dl, est_sum):
    return {
        "scheme": scheme,
        "design": design,
        "duplex": duplex,
        param_name: param_value,
        "rate_ul": est_ul.mean,
        "rate_dl": est_dl.mean,
        "rate_sum": est_sum.mean,
        "std_error": est_sum.std_error,
        "trials": est_sum.trials,
    }


def rate_region(config: SystemConfig, designs=None, p_grid=None,
                trials: int | None = None, workers: int | None = None) -> list[dict]:
    """UL/DL rate pairs while sweeping the downlink share of RRHs.

    Full-duplex rows cover both association schemes and the requested
    designs; half-duplex rows are design-independent (matched filtering is
    optimal without interference) and appear once per scheme.
    """
    if p_grid is None:
        p_grid = np.linspace(0.0, 1.0, 21)
    rows = []
    for p_d in p_grid:
        cfg = config.replace(p_d=float(p_d))
        combos = FD_COMBOS if designs is None else [
            (s, d) for s, d in FD_COMBOS if d in designs]
        for scheme, design in combos:
            est_ul, est_dl, est_sum = estimate(cfg, scheme, design, trials,
                                               DUPLEX_FD, workers)
            rows.append(_row(scheme, design, DUPLEX_FD, "p_d", float(p_d),
                             est_ul, est_dl, est_sum))
        for scheme in assoc.SCHEMES:
            est_ul, est_dl, est_sum = estimate(cfg, scheme, assoc.DESIGN_MRC_MRT,
                                               trials, DUPLEX_HD, workers)
            rows.append(_row(scheme, assoc.DESIGN_MRC_MRT, DUPLEX_HD, "p_d",
                             float(p_d), est_ul, est_dl, est_sum))
    return rows


def phi_sweep(config: SystemConfig, designs=None, phi_grid=None,
              trials: int | None = None, workers: int | None = None) -> list[dict]:
    """Sum rate of the single-RRH designs while sweeping the sector half-angle."""
    if phi_grid is None:
        phi_grid = np.linspace(0.0, math.pi, 16)
    if designs is None:
        designs = (assoc.DESIGN_MRC_MRT, assoc.DESIGN_ZF_MRT, assoc.DESIGN_OPTIMAL)
    rows = []
    for phi in phi_grid:
        cfg = config.replace(phi=float(phi))
        for design in designs:
            est_ul, est_dl, est_sum = estimate(cfg, assoc.SCHEME_SRA, design,
                                               trials, DUPLEX_FD, workers)
            rows.append(_row(assoc.SCHEME_SRA, design, DUPLEX_FD, "phi",
                             float(phi), est_ul, est_dl, est_sum))
    return rows


def fd_hd_gain(config: SystemConfig,
               designs=(assoc.DESIGN_OPTIMAL, assoc.DESIGN_ZF_MRT),
               p_grid=None, trials: int | None = None,
               workers: int | None = None) -> dict[str, dict]:
    """Best full-duplex over half-duplex sum-rate ratio across the DL share.

    Common random numbers (shared per-trial streams) sharpen the pointwise
    ratios; the half-duplex baseline is the single-RRH time-shared system.
    """
    if p_grid is None:
        p_grid = np.linspace(0.1, 0.9, 9)
    out = {d: {"gain": 0.0, "p_d": None, "fd_sum": 0.0, "hd_sum": 0.0}
           for d in designs}
    for p_d in p_grid:
        cfg = config.replace(p_d=float(p_d))
        hd_ul, hd_dl = trial_rate_arrays(cfg, assoc.SCHEME_SRA,
                                         assoc.DESIGN_MRC_MRT, trials,
                                         DUPLEX_HD, workers)
        hd_sum = float(np.sum(hd_ul + hd_dl) / hd_ul.size)
        if hd_sum <= 0:
            continue
        for design in designs:
            fd_ul, fd_dl = trial_rate_arrays(cfg, assoc.SCHEME_SRA, design,
                                             trials, DUPLEX_FD, workers)
            fd_sum = float(np.sum(fd_ul + fd_dl) / fd_ul.size)
            gain = fd_sum / hd_sum
            if gain > out[design]["gain"]:
                out[design] = {"gain": gain, "p_d": float(p_d),
                               "fd_sum": fd_sum, "hd_sum": hd_sum}
    return out
