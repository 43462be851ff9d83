"""Correlated Monte Carlo estimation of unavailability curves and error rates.

Each trial draws one shared noise realization (so the per-server decode
indicators keep their cross-server correlation), one completion time per
server, and reuses both across the whole time grid; the estimated curve
is therefore exactly nonincreasing in t, not just statistically.

Trials are partitioned into fixed-size chunks, chunk k seeded from
(seed, k), and per-chunk integer counts are reduced in chunk order, so
results are bit-identical for any worker-thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bounds import SystemConfig
from .latency import sample_completion_times

# Fixed chunk sizes (trials per RNG stream); changing them changes the
# sampled values, so they are constants of the implementation.
WEIGHT_CHUNK = 1 << 13
BITS_CHUNK = 1 << 9
# Weight-based sampling materializes all 2**K per-bit patterns.
MAX_PATTERN_BLOCKS = 16


@dataclass(frozen=True)
class FupCurve:
    """Estimated unavailability over a time grid with 95% half-widths."""

    time_grid: tuple
    estimates: tuple
    half_widths: tuple
    trials: int
    seed: int


def _half_width(p_hat: float, trials: int) -> float:
    hw = 1.96 * np.sqrt(p_hat * (1.0 - p_hat) / trials)
    if p_hat in (0.0, 1.0):
        hw = max(hw, 3.0 / trials)  # rule-of-three floor at the extremes
    return float(hw)


def _check_simulation_inputs(cfg, trials, seed):
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if seed < 0:
        raise ValueError(f"seed must be a nonnegative integer, got {seed}")
    if not cfg.decoder.supports_realizations:
        raise ValueError(
            f"decoder kind {cfg.decoder.kind!r} is analytic-only; "
            "Monte Carlo needs per-realization decisions"
        )


def _pattern_tables(cfg):
    """All 2**K per-bit-position noise patterns: probabilities and the
    resulting per-server noise bits (parity of the masked pattern)."""
    K = cfg.code.k_blocks
    N = cfg.n_servers
    delta = cfg.channel.delta
    masks = [cfg.code.generator.column_int(i) for i in range(N)]
    pats = np.arange(1 << K, dtype=np.uint64)
    wts = np.bitwise_count(pats).astype(np.int64)
    probs = delta**wts * (1.0 - delta) ** (K - wts)
    probs = probs / probs.sum()
    bits = np.zeros((1 << K, N), dtype=np.int64)
    for i, m in enumerate(masks):
        bits[:, i] = np.bitwise_count(pats & np.uint64(m)) & np.uint64(1)
    return probs, bits


def _use_weight_path(cfg) -> bool:
    return (
        cfg.decoder.weight_threshold is not None
        and cfg.code.k_blocks <= MAX_PATTERN_BLOCKS
    )


def _decode_indicators_weight(cfg, probs, bits, size, rng):
    """Success indicators via per-pattern multinomial counts (exact law,
    independent of the blocklength)."""
    counts = rng.multinomial(cfg.latency.n, probs, size=size)
    weights = counts @ bits  # (size, N) per-server noise weights
    return weights <= cfg.decoder.weight_threshold


def _decode_indicators_bits(cfg, size, rng):
    """Success indicators by materializing noise bits and running the decoder."""
    n = cfg.latency.n
    K = cfg.code.k_blocks
    N = cfg.n_servers
    Z = (rng.random((size, n, K)) < cfg.channel.delta).astype(np.int64)
    G = cfg.code.generator.to_array().astype(np.int64)
    noise = (Z @ G) & 1  # (size, n, N)
    D = np.zeros((size, N), dtype=bool)
    dec = cfg.decoder
    for i in range(N):
        server_noise = noise[:, :, i]
        if hasattr(dec, "decode_batch"):
            D[:, i] = dec.decode_batch(server_noise, cfg.gammas[i])
        elif dec.weight_threshold is not None:
            D[:, i] = server_noise.sum(axis=1) <= dec.weight_threshold
        else:
            D[:, i] = [dec.decode_success(row, gamma=cfg.gammas[i]) for row in server_noise]
    return D


def _chunk_ranges(trials, chunk):
    return [(k, lo, min(lo + chunk, trials)) for k, lo in enumerate(range(0, trials, chunk))]


def _run_chunks(worker, trials, chunk, threads):
    ranges = _chunk_ranges(trials, chunk)
    if threads <= 1 or len(ranges) == 1:
        return [worker(*r) for r in ranges]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda r: worker(*r), ranges))


def simulate_fup(cfg: SystemConfig, time_grid, trials: int, seed: int,
                 threads: int = 1) -> FupCurve:
    """Estimate the unavailability curve over a strictly increasing grid.

    Per trial: one shared noise draw -> per-server success indicators,
    one completion time per server; the frame is unavailable at t while
    fewer than N - d_min + 1 successful servers have finished.
    """
    _check_simulation_inputs(cfg, trials, seed)
    grid = np.asarray(list(time_grid), dtype=float)
    if grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("time grid must be nonempty and strictly increasing")
    m = cfg.n_servers - cfg.d_min + 1
    weight_path = _use_weight_path(cfg)
    if weight_path:
        probs, bits = _pattern_tables(cfg)
        chunk = WEIGHT_CHUNK
    else:
        chunk = BITS_CHUNK

    def worker(k, lo, hi):
        rng = np.random.default_rng(np.random.SeedSequence([seed, k]))
        size = hi - lo
        if weight_path:
            D = _decode_indicators_weight(cfg, probs, bits, size, rng)
        else:
            D = _decode_indicators_bits(cfg, size, rng)
        T = sample_completion_times(cfg.latency, (size, cfg.n_servers), rng)
        qualified = np.where(D, T, np.inf)
        qualified.sort(axis=1)
        avail_time = qualified[:, m - 1]
        avail_time.sort()
        # unavailable at t  <=>  the m-th qualified completion is still ahead
        return size - np.searchsorted(avail_time, grid, side="right")

    unavail = sum(_run_chunks(worker, trials, chunk, threads))
    estimates = unavail / trials
    return FupCurve(
        time_grid=tuple(grid.tolist()),
        estimates=tuple(estimates.tolist()),
        half_widths=tuple(_half_width(p, trials) for p in estimates),
        trials=trials,
        seed=seed,
    )


def decode_indicator_matrix(cfg: SystemConfig, trials: int, seed: int,
                            threads: int = 1) -> np.ndarray:
    """Per-trial, per-server success indicators (trials, N) with the shared-
    noise correlation structure; used by the queueing simulator for FER."""
    _check_simulation_inputs(cfg, trials, seed)
    weight_path = _use_weight_path(cfg)
    if weight_path:
        probs, bits = _pattern_tables(cfg)
        chunk = WEIGHT_CHUNK
    else:
        chunk = BITS_CHUNK

    def worker(k, lo, hi):
        rng = np.random.default_rng(np.random.SeedSequence([seed, k]))
        size = hi - lo
        if weight_path:
            return _decode_indicators_weight(cfg, probs, bits, size, rng)
        return _decode_indicators_bits(cfg, size, rng)

    return np.concatenate(_run_chunks(worker, trials, chunk, threads), axis=0)


def estimate_fer(cfg: SystemConfig, trials: int, seed: int,
                 threads: int = 1) -> tuple[float, float]:
    """Estimate the frame error rate: the frame fails when at least d_min
    servers fail decoding, regardless of timing."""
    _check_simulation_inputs(cfg, trials, seed)
    thresh = cfg.n_servers - cfg.d_min
    weight_path = _use_weight_path(cfg)
    if weight_path:
        probs, bits = _pattern_tables(cfg)
        chunk = WEIGHT_CHUNK
    else:
        chunk = BITS_CHUNK

    def worker(k, lo, hi):
        rng = np.random.default_rng(np.random.SeedSequence([seed, k]))
        size = hi - lo
        if weight_path:
            D = _decode_indicators_weight(cfg, probs, bits, size, rng)
        else:
            D = _decode_indicators_bits(cfg, size, rng)
        return int((D.sum(axis=1) <= thresh).sum())

    failures = sum(_run_chunks(worker, trials, chunk, threads))
    p_hat = failures / trials
    return p_hat, _half_width(p_hat, trials)
