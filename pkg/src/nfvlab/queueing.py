"""Random frame arrivals: analytic mean latency and event-driven simulation.

Per-frame decoding serializes the system into an M/G/1 queue whose
service time is the m-th order statistic of N exponential packet times
(m = N - d_min + 1), so its mean latency follows from the
Pollaczek-Khinchin formula.  Continuous decoding lets each server run
its own FCFS packet queue, with all of a frame's leftover packets
evicted the moment the frame completes; that policy is evaluated by
discrete-event simulation.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .latency import ServiceModel, order_statistic_mean_and_second_moment
from .montecarlo import decode_indicator_matrix

WARMUP_FRACTION = 0.1
LATENCY_BATCHES = 20


class UnstableQueueError(ValueError):
    """Arrival rate at or beyond the service capacity; carries the utilization."""

    def __init__(self, utilization):
        self.utilization = utilization
        super().__init__(f"unstable queue: utilization rho = {utilization:.6g} >= 1")


@dataclass(frozen=True)
class QueueConfig:
    """One queueing experiment: Poisson(lambda) arrivals into N servers."""

    arrival_rate: float
    service: ServiceModel
    policy: str = "per_frame"
    frames: int = 100_000
    seed: int = 0
    abort_in_service: bool = True  # eviction also aborts packets mid-service

    def __post_init__(self):
        if self.arrival_rate <= 0:
            raise ValueError(f"arrival rate must be > 0, got {self.arrival_rate}")
        if self.frames < 1:
            raise ValueError(f"frames must be >= 1, got {self.frames}")
        if self.policy not in ("per_frame", "continuous"):
            raise ValueError(f"policy must be 'per_frame' or 'continuous', got {self.policy!r}")


@dataclass(frozen=True)
class QueueStats:
    mean_latency: float
    latency_half_width: float
    completed: int
    policy: str
    fer: float | None = None
    fer_half_width: float | None = None


def pfd_mean_latency(cfg: QueueConfig) -> float:
    """Pollaczek-Khinchin mean latency of per-frame decoding.

    T = E[S] + lambda E[S^2] / (2 (1 - lambda E[S])) with S the
    (N - d_min + 1)-th order statistic of N Exp(nu) packet times.
    Raises UnstableQueueError when lambda E[S] >= 1.
    """
    es, es2 = order_statistic_mean_and_second_moment(cfg.service)
    rho = cfg.arrival_rate * es
    if rho >= 1.0:
        raise UnstableQueueError(rho)
    return es + cfg.arrival_rate * es2 / (2.0 * (1.0 - rho))


def sample_arrivals(rate: float, frames: int, rng: np.random.Generator) -> np.ndarray:
    return np.cumsum(rng.exponential(1.0 / rate, frames))


def per_frame_completion_times(arrivals: np.ndarray, services: np.ndarray) -> np.ndarray:
    """FCFS single-station completions via the Lindley recursion
    done_r = max(arrival_r, done_{r-1}) + service_r, vectorized."""
    csum = np.cumsum(services)
    slack = arrivals - np.concatenate(([0.0], csum[:-1]))
    return csum + np.maximum.accumulate(slack)


def continuous_completion_times(arrivals, nu, n_servers, needed, rng,
                                abort_in_service=True, check_invariants=False):
    """Event-driven simulation of continuous decoding.

    Every frame puts one packet in each server's FCFS queue; a server
    starts its next packet the moment it finishes (or is evicted from)
    the current one; frame r completes at its `needed`-th per-server
    completion, at which instant its remaining packets are evicted.
    Event ties break on (time, frame, server).  Returns (completions,
    floor) where floor[r] is the largest service draw among frame r's
    completed packets (a lower bound witness on the frame latency).
    """
    frames = len(arrivals)
    completions = np.full(frames, np.inf)
    floor = np.zeros(frames)
    queues = [list() for _ in range(n_servers)]  # used as FIFO via heads index
    heads = [0] * n_servers
    current = [-1] * n_servers
    current_draw = [0.0] * n_servers
    epoch = [0] * n_servers
    done_count = [0] * frames
    remaining = [set(range(n_servers)) for _ in range(frames)]

    # kind 0 = arrival, 1 = completion; arrivals carry server index -1
    events = [(t, r, -1, 0, 0) for r, t in enumerate(arrivals)]
    heapq.heapify(events)

    def start_next(i, now):
        while heads[i] < len(queues[i]):
            r = queues[i][heads[i]]
            heads[i] += 1
            if completions[r] < np.inf:
                continue  # evicted while queued; defensive, normally pre-removed
            current[i] = r
            epoch[i] += 1
            s = rng.exponential(1.0 / nu)
            current_draw[i] = s
            heapq.heappush(events, (now + s, r, i, 1, epoch[i]))
            return
        current[i] = -1

    def evict(r, now):
        for i in sorted(remaining[r]):
            if current[i] == r:
                if abort_in_service:
                    epoch[i] += 1  # invalidate the in-flight completion event
                    start_next(i, now)
                # else: let the packet finish; completion frees the server
            elif heads[i] < len(queues[i]) and queues[i][heads[i]] == r:
                heads[i] += 1
        remaining[r].clear()

    while events:
        t, r, i, kind, ev_epoch = heapq.heappop(events)
        if kind == 0:
            for j in range(n_servers):
                queues[j].append(r)
                if current[j] == -1:
                    start_next(j, t)
        else:
            if ev_epoch != epoch[i]:
                continue  # aborted packet
            finished = current[i]
            current[i] = -1
            if completions[finished] == np.inf:
                remaining[finished].discard(i)
                done_count[finished] += 1
                floor[finished] = max(floor[finished], current_draw[i])
                if done_count[finished] == needed:
                    completions[finished] = t
                    evict(finished, t)
            start_next(i, t)
        if check_invariants:
            for j in range(n_servers):
                assert not (current[j] == -1 and heads[j] < len(queues[j])), \
                    "idle server with nonempty queue"
    return completions, floor


def _latency_stats(latencies: np.ndarray) -> tuple[float, float]:
    """Mean and a batch-means 95% half-width over warm-up-trimmed frames."""
    start = int(len(latencies) * WARMUP_FRACTION)
    kept = latencies[start:]
    mean = float(kept.mean())
    nb = min(LATENCY_BATCHES, len(kept))
    if nb < 2:
        return mean, float("inf")
    batches = np.array_split(kept, nb)
    bm = np.array([b.mean() for b in batches])
    hw = 1.96 * bm.std(ddof=1) / np.sqrt(nb)
    return mean, float(hw)


def simulate_queue(cfg: QueueConfig, system=None, check_invariants=False) -> QueueStats:
    """Run one policy for cfg.frames frames and report latency (and FER when
    a system config with a realization-capable decoder is attached).

    Decode outcomes never alter timing: the service discipline counts
    completions, and correctness is scored separately at t -> infinity.
    Arrival and service streams are seeded separately so the two policies
    can be compared on identical arrival processes.
    """
    arr_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0]))
    srv_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
    arrivals = sample_arrivals(cfg.arrival_rate, cfg.frames, arr_rng)
    sv = cfg.service
    if cfg.policy == "per_frame":
        draws = srv_rng.exponential(1.0 / sv.nu, (cfg.frames, sv.n_servers))
        m = sv.completions_needed
        services = np.partition(draws, m - 1, axis=1)[:, m - 1]
        completions = per_frame_completion_times(arrivals, services)
    else:
        completions, _ = continuous_completion_times(
            arrivals, sv.nu, sv.n_servers, sv.completions_needed, srv_rng,
            abort_in_service=cfg.abort_in_service, check_invariants=check_invariants,
        )
    latencies = completions - arrivals
    mean, hw = _latency_stats(latencies)
    fer = fer_hw = None
    if system is not None:
        D = decode_indicator_matrix(system, cfg.frames, seed=cfg.seed + 2)
        failures = (D.sum(axis=1) <= sv.n_servers - sv.d_min).mean()
        fer = float(failures)
        fer_hw = 1.96 * np.sqrt(max(fer * (1 - fer), 0.0) / cfg.frames)
        if fer in (0.0, 1.0):
            fer_hw = max(fer_hw, 3.0 / cfg.frames)
    return QueueStats(
        mean_latency=mean,
        latency_half_width=hw,
        completed=int(np.isfinite(completions).sum()),
        policy=cfg.policy,
        fer=fer,
        fer_half_width=fer_hw,
    )


def latency_vs_rate_sweep(service: ServiceModel, lambda_list, frames: int,
                          seed: int, system=None) -> list[dict]:
    """Per arrival rate: analytic per-frame latency (None when unstable)
    plus simulated per-frame and continuous latencies with half-widths."""
    rows = []
    for idx, lam in enumerate(lambda_list):
        row = {"lambda": float(lam)}
        base = QueueConfig(arrival_rate=float(lam), service=service,
                           frames=frames, seed=seed + 1000 * idx)
        try:
            row["pfd_analytic"] = pfd_mean_latency(base)
        except UnstableQueueError:
            row["pfd_analytic"] = None
        pfd = simulate_queue(base, system=system)
        cd = simulate_queue(
            QueueConfig(arrival_rate=float(lam), service=service, policy="continuous",
                        frames=frames, seed=base.seed), system=system)
        row.update(pfd_sim=pfd.mean_latency, pfd_hw=pfd.latency_half_width,
                   cd_sim=cd.mean_latency, cd_hw=cd.latency_half_width)
        if system is not None:
            row.update(fer=pfd.fer, fer_hw=pfd.fer_half_width)
        rows.append(row)
    return rows
