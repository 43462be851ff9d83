"""Frame-unavailability analysis: tail bounds, exact formulas, and a
brute-force oracle.

The frame is unavailable at deadline t when fewer than N - d_min + 1
servers have both finished (probability F(t) each, independent) and
decoded correctly (dependent Bernoulli indicators coupled through shared
noise).  The dependency-graph tail bound controls such sums of dependent
indicators through the chromatic number of the code's dependency graph;
everything here is assembled from that one inequality plus direct
enumeration.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import BscChannel, DecoderModel, flip_probability
from .gf2 import BitMatrix, NfvCode
from .latency import LatencyModel, completion_cdf, completion_cdf_inverse
from .structure import dependency_graph, chromatic_number, resolve_chromatic_number

# Brute-force enumeration walks 2**(n*K) noise matrices.
MAX_ENUM_BITS = 22
# Subset enumeration in the union bound walks up to 2**N subsets.
MAX_UNION_SERVERS = 16


def phi(x: float) -> float:
    """(1+x)*ln(1+x) - x, the rate function of Bennett/Janson-type bounds.

    Evaluated by series below 1e-4 where the direct form loses precision.
    """
    if x < 0:
        raise ValueError(f"phi is defined for x >= 0, got {x}")
    if x < 1e-4:
        return x * x / 2.0 - x**3 / 6.0 + x**4 / 12.0
    return (1.0 + x) * math.log1p(x) - x


def janson_tail(S: float, b: float, chi: float, tau: float) -> float:
    """Dependency-graph tail bound exp(-(S / (b^2 chi)) phi(4 b tau / (5 S))).

    Bounds Pr[X <= E X - tau] (and the upper tail with the matching b)
    for a sum of dependent Bernoulli terms with total variance S, a.s.
    deviation bound b, and dependency-graph chromatic number chi.
    Degenerate cases: tau = 0 gives the trivial bound 1; S = 0 with
    tau > 0 gives 0 (a deterministic sum cannot deviate).
    """
    if S < 0 or tau < 0 or b < 0:
        raise ValueError(f"negative inputs rejected: S={S}, b={b}, tau={tau}")
    if chi < 1:
        raise ValueError(f"chromatic number must be >= 1, got {chi}")
    if tau == 0.0:
        return 1.0
    if S == 0.0:
        return 0.0
    if b == 0.0:
        raise ValueError("b must be positive when the bound is evaluated")
    return math.exp(-(S / (b * b * chi)) * phi(4.0 * b * tau / (5.0 * S)))


@dataclass(frozen=True)
class BoundValue:
    """A bound that may be inapplicable; value is present iff applicable."""

    value: float | None
    applicable: bool
    reason: str | None = None

    def __post_init__(self):
        if self.applicable != (self.value is not None):
            raise ValueError("value must be present exactly when applicable")


@dataclass(frozen=True)
class SystemConfig:
    """Everything needed to evaluate one coded-decoding system.

    Derived per-server fields: gamma_i from the column weights, the
    decoding error probabilities P_i, and the dependency-graph chromatic
    number (exact when feasible, else the best analytic upper bound).
    """

    code: NfvCode
    channel: BscChannel
    decoder: DecoderModel
    latency: LatencyModel
    gammas: tuple = field(init=False)
    error_probs: tuple = field(init=False)
    chi: int = field(init=False)
    chi_source: str = field(init=False)

    def __post_init__(self):
        if getattr(self.decoder, "n", self.latency.n) != self.latency.n:
            raise ValueError(
                f"decoder blocklength {self.decoder.n} != latency blocklength {self.latency.n}"
            )
        gammas = tuple(
            flip_probability(self.channel.delta, d) for d in self.code.column_weights
        )
        probs = tuple(self.decoder.error_probability(g) for g in gammas)
        if any(not 0.0 <= p < 1.0 for p in probs):
            raise ValueError(f"decoding error probabilities must lie in [0, 1), got {probs}")
        chi, source = resolve_chromatic_number(self.code.generator)
        object.__setattr__(self, "gammas", gammas)
        object.__setattr__(self, "error_probs", probs)
        object.__setattr__(self, "chi", chi)
        object.__setattr__(self, "chi_source", source)

    @property
    def n_servers(self) -> int:
        return self.code.n_servers

    @property
    def d_min(self) -> int:
        return self.code.d_min


def _as_count(value, label):
    if abs(value - round(value)) > 1e-9 or round(value) < 1:
        raise ValueError(f"{label} must be a positive integer, got {value}")
    return int(round(value))


def build_system(code: NfvCode, L: int, r: float, delta: float,
                 inv_mu1: float, mu2: float, a: float,
                 decoder_kind: str = "bounded-distance", **decoder_kwargs) -> SystemConfig:
    """Assemble a SystemConfig from frame-level parameters.

    The frame of L bits splits into K = code.k_blocks packets, so each
    server handles an (n, k) = (L/(r K), L/K) code block; n drives both
    the decoder model and the latency model.
    """
    from .channel import make_decoder  # local import to avoid cycle at module load

    K = code.k_blocks
    n = _as_count(L / (r * K), "blocklength n = L/(r*K)")
    k = _as_count(L / K, "message length k = L/K")
    decoder = make_decoder(decoder_kind, n=n, k=k, **decoder_kwargs)
    latency = LatencyModel(inv_mu1=inv_mu1, mu2=mu2, a=a, n=n)
    return SystemConfig(code=code, channel=BscChannel(delta), decoder=decoder, latency=latency)


def ldb_fup(cfg: SystemConfig, t: float) -> BoundValue:
    """Large-deviation upper bound on the unavailability at deadline t.

    Valid once F(t) >= (N - d_min) / (N - sum_i P_i), i.e. once the
    expected number of useful servers exceeds the decodability threshold;
    below that the bound is reported as not applicable.
    """
    N = cfg.n_servers
    d = cfg.d_min
    P = cfg.error_probs
    sumP = sum(P)
    F = completion_cdf(cfg.latency, t)
    tau = F * (N - sumP) - (N - d)
    if tau < 0:
        p_req = (N - d) / (N - sumP)
        if p_req >= 1.0:
            reason = (
                f"never applicable: requires sum of error probabilities < d_min, "
                f"got {sumP:.6g} >= {d}"
            )
        else:
            t_min = completion_cdf_inverse(cfg.latency, p_req)
            reason = f"t below validity threshold {t_min:.6g}"
        return BoundValue(None, False, reason)
    b = F * (1.0 - min(P))
    S = sum(F * (1.0 - p) * (1.0 - F * (1.0 - p)) for p in P)
    return BoundValue(janson_tail(S, b, cfg.chi, tau), True)


def ldb_asymptote(cfg: SystemConfig) -> BoundValue:
    """Limit of the large-deviation bound as t -> infinity.

    Uses the pessimistic error probability at gamma(d_max) for every
    server; applicable when d_min/N exceeds that probability.
    """
    N = cfg.n_servers
    d = cfg.d_min
    gamma = flip_probability(cfg.channel.delta, cfg.code.d_max)
    P = cfg.decoder.error_probability(gamma)
    tau = d - N * P
    if tau <= 0 and P > 0:
        return BoundValue(None, False, f"d_min/N = {d / N:.6g} <= P = {P:.6g}")
    S = N * P * (1.0 - P)
    return BoundValue(janson_tail(S, 1.0 - P, cfg.chi, tau), True)


class UnionBoundEvaluator:
    """Union bound over completion subsets, precomputed once per config.

    For each subset A of servers that could carry the frame, the inner
    tail bound on "too many decoding failures inside A" depends only on
    the P_i and the chromatic number of the induced dependency subgraph,
    not on t, so the subset sums are evaluated once and reused across a
    whole time grid.
    """

    def __init__(self, cfg: SystemConfig):
        N = cfg.n_servers
        if N > MAX_UNION_SERVERS:
            raise ValueError(
                f"subset budget exceeded: N={N} > {MAX_UNION_SERVERS}"
            )
        self.cfg = cfg
        d = cfg.d_min
        P = cfg.error_probs
        graph = dependency_graph(cfg.code.generator)
        chi_cache = {}

        def chi_of(subset):
            key = frozenset(subset)
            if key not in chi_cache:
                sub = graph.induced(subset)
                chi_cache[key] = chromatic_number(sub, "exact").chromatic_number
            return chi_cache[key]

        # inner_sum[l] = sum over |A| = l of (1 - tail bound on failures in A)
        self.inner_sums = {}
        for l in range(N - d + 1, N + 1):
            total = 0.0
            for A in itertools.combinations(range(N), l):
                tau = l - N + d - sum(P[i] for i in A)
                if tau < 0:
                    inner = 1.0  # the tail inequality needs tau >= 0; keep the bound valid
                else:
                    S = sum(P[i] * (1.0 - P[i]) for i in A)
                    if S == 0.0:
                        inner = 1.0 if tau == 0.0 else 0.0
                    else:
                        b = 1.0 - min(P[i] for i in A)
                        inner = janson_tail(S, b, chi_of(A), tau)
                total += 1.0 - inner
            self.inner_sums[l] = total

    def __call__(self, t: float) -> float:
        F = completion_cdf(self.cfg.latency, t)
        success = 0.0
        for l, inner_sum in self.inner_sums.items():
            # F^l (1-F)^(N-l) is the probability that one specific l-subset
            # is exactly the completed set.
            success += F**l * (1.0 - F) ** (self.cfg.n_servers - l) * inner_sum
        return min(1.0, max(0.0, 1.0 - success))


def ub_fup(cfg: SystemConfig, t: float) -> float:
    """Union upper bound on the unavailability at deadline t (valid for all t)."""
    return UnionBoundEvaluator(cfg)(t)


def fer_bound(cfg: SystemConfig) -> BoundValue:
    """Tail bound on the frame error rate (the t -> infinity unavailability).

    Applicable when d_min exceeds the expected number of decoding
    failures sum_i P_i.
    """
    P = cfg.error_probs
    sumP = sum(P)
    d = cfg.d_min
    if d <= sumP:
        return BoundValue(None, False, f"d_min = {d} <= sum of error probabilities {sumP:.6g}")
    S = sum(p * (1.0 - p) for p in P)
    b = 1.0 - min(P)
    return BoundValue(janson_tail(S, b, cfg.chi, d - sumP), True)


def _is_identity(G: BitMatrix) -> bool:
    return G.rows == G.cols and all(G.row_ints[i] == 1 << i for i in range(G.rows))


def exact_fup(cfg: SystemConfig, scheme: str, t: float) -> float:
    """Closed-form unavailability for the three analytically solvable schemes.

    single:     one server carries the whole frame.
    repetition: every server sees the same noise, so one completion and one
                decode attempt decide the frame.
    parallel:   all servers must finish and decode, independently.
    """
    G = cfg.code.generator
    F = completion_cdf(cfg.latency, t)
    P = cfg.decoder.error_probability(cfg.channel.delta)
    N = cfg.n_servers
    if scheme == "single":
        if not (G.rows == 1 and G.cols == 1):
            raise ValueError(f"scheme 'single' needs a 1x1 generator, got {G.rows}x{G.cols}")
        return 1.0 - F * (1.0 - P)
    if scheme == "repetition":
        if not (G.rows == 1 and G.row_ints[0] == (1 << G.cols) - 1):
            raise ValueError("scheme 'repetition' needs a 1xN all-ones generator")
        return 1.0 - (1.0 - (1.0 - F) ** N) * (1.0 - P)
    if scheme == "parallel":
        if not _is_identity(G):
            raise ValueError("scheme 'parallel' needs an identity generator")
        return 1.0 - (F * (1.0 - P)) ** N
    raise ValueError(f"no closed form for scheme {scheme!r}")


def _success_count_distribution(cfg: SystemConfig) -> np.ndarray:
    """Exact distribution of the number of successful decoders.

    Enumerates every noise matrix (2**(n K) of them), counting outcomes
    per (total noise weight, success count) cell in exact integers, then
    weights each cell by its Bernoulli probability.  Requires the
    weight-threshold decoder so success is a deterministic function of
    the per-server noise weights.
    """
    dec = cfg.decoder
    if dec.weight_threshold is None:
        raise ValueError(
            f"brute force needs a weight-threshold decoder, got kind {dec.kind!r}"
        )
    n = cfg.latency.n
    K = cfg.code.k_blocks
    N = cfg.n_servers
    bits = n * K
    if bits > MAX_ENUM_BITS:
        raise ValueError(f"enumeration budget exceeded: n*K = {bits} > {MAX_ENUM_BITS}")
    t0 = dec.weight_threshold
    masks = [cfg.code.generator.column_int(i) for i in range(N)]
    colmask = np.uint64((1 << n) - 1)
    shifts = [np.uint64(n * j) for j in range(K)]
    # counts[w, c] = number of noise matrices with total weight w and c successes
    counts = np.zeros((bits + 1) * (N + 1), dtype=np.int64)
    chunk = 1 << 20
    for lo in range(0, 1 << bits, chunk):
        hi = min(lo + chunk, 1 << bits)
        idx = np.arange(lo, hi, dtype=np.uint64)
        cols = [(idx >> s) & colmask for s in shifts]
        w_total = np.zeros(len(idx), dtype=np.int64)
        for c in cols:
            w_total += np.bitwise_count(c).astype(np.int64)
        succ = np.zeros(len(idx), dtype=np.int64)
        for i in range(N):
            noise = np.zeros(len(idx), dtype=np.uint64)
            for j in range(K):
                if (masks[i] >> j) & 1:
                    noise ^= cols[j]
            succ += np.bitwise_count(noise).astype(np.int64) <= t0
        counts += np.bincount(w_total * (N + 1) + succ, minlength=counts.size)
    counts = counts.reshape(bits + 1, N + 1)
    delta = cfg.channel.delta
    q = np.zeros(N + 1)
    for c in range(N + 1):
        q[c] = math.fsum(
            int(counts[w, c]) * delta**w * (1.0 - delta) ** (bits - w)
            for w in range(bits + 1)
            if counts[w, c]
        )
    return q


def _binom_cdf(k: int, m: int, p: float) -> float:
    """Pr[Binomial(m, p) <= k], exact small-m summation."""
    if k >= m:
        return 1.0
    if k < 0:
        return 0.0
    return math.fsum(math.comb(m, j) * p**j * (1.0 - p) ** (m - j) for j in range(k + 1))


def brute_force_fup(cfg: SystemConfig, t) -> float | np.ndarray:
    """Exact unavailability by full noise enumeration (tiny instances only).

    Accepts a scalar t or a grid; the noise enumeration is shared across
    the grid.  Success indicators come from the weight-threshold decoder;
    completions are independent Bern(F(t)), folded in by exact binomial
    convolution over the success count.
    """
    q = _success_count_distribution(cfg)
    thresh = cfg.n_servers - cfg.d_min
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(len(ts))
    for i, ti in enumerate(ts):
        F = completion_cdf(cfg.latency, float(ti))
        out[i] = math.fsum(q[c] * _binom_cdf(thresh, c, F) for c in range(cfg.n_servers + 1))
    if np.isscalar(t) or np.asarray(t).ndim == 0:
        return float(out[0])
    return out
