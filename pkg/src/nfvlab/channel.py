"""BSC noise, its propagation through the combining code, and decoder models.

A server whose input combines d source packets sees i.i.d. Bern(gamma(d))
noise, where gamma(d) is the off-diagonal entry of the d-th power of the
BSC transition matrix.  Decoder models turn a noise level into a block
error probability and (where meaningful) a per-realization success
decision; the bounded-distance model keeps the two exactly consistent,
which makes it the reference surrogate for oracle-grade validation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

from .gf2 import BitMatrix, NfvCode


@dataclass(frozen=True)
class BscChannel:
    """Binary symmetric channel with crossover probability delta in (0, 0.5)."""

    delta: float

    def __post_init__(self):
        if not 0.0 < self.delta < 0.5:
            raise ValueError(f"delta must lie in (0, 0.5), got {self.delta}")


def flip_probability(delta: float, d: int) -> float:
    """Effective flip probability after XOR-combining d independent Bern(delta) bits.

    Equals entry (1,2) of Q**d for the BSC transition matrix Q, in closed
    form (1 - (1-2*delta)**d) / 2.  Strictly increasing in d, bounded by 0.5.
    """
    if not isinstance(d, (int, np.integer)) or d < 1:
        raise ValueError(f"d must be a positive integer, got {d!r}")
    if not 0.0 <= delta <= 0.5:
        raise ValueError(f"delta must lie in [0, 0.5], got {delta}")
    return (1.0 - (1.0 - 2.0 * delta) ** d) / 2.0


def sample_noise(channel: BscChannel, n: int, K: int, rng: np.random.Generator) -> BitMatrix:
    """n x K matrix of i.i.d. Bern(delta) bits from the given generator."""
    bits = (rng.random((n, K)) < channel.delta).astype(np.uint8)
    return BitMatrix.from_array(bits)


def combined_noise(Z: BitMatrix, code: NfvCode) -> list[np.ndarray]:
    """Per-server noise vectors: server i gets the XOR of the source-noise
    columns selected by column i of the generator.

    Marginally each vector is i.i.d. Bern(gamma(d_i)); vectors of servers
    that are nonadjacent in the dependency graph are independent.
    """
    if Z.cols != code.k_blocks:
        raise ValueError(
            f"dimension mismatch: noise has {Z.cols} columns, "
            f"code combines {code.k_blocks} packets"
        )
    Za = Z.to_array().astype(np.int64)
    Ga = code.generator.to_array().astype(np.int64)
    S = (Za @ Ga) & 1
    return [S[:, i].astype(np.uint8) for i in range(code.n_servers)]


class DecoderModel:
    """Common surface for the decoding-error-probability models.

    Subclasses provide error_probability(); those with per-realization
    semantics also provide decode_success().  weight_threshold is the
    correction radius for weight-decidable models (None otherwise).
    """

    kind = "abstract"
    supports_realizations = False
    weight_threshold = None

    def error_probability(self, gamma: float) -> float:
        raise NotImplementedError

    def decode_success(self, noise, gamma: float | None = None) -> bool:
        raise ValueError(f"analytic-only model {self.kind!r} has no per-realization decisions")

    def _check_gamma(self, gamma):
        if not 0.0 <= gamma < 0.5:
            raise ValueError(f"gamma must lie in [0, 0.5), got {gamma}")


@dataclass(frozen=True)
class BoundedDistanceDecoder(DecoderModel):
    """Succeeds exactly when the noise weight is at most the radius t0.

    The analytic error probability is then the exact binomial upper tail,
    so Monte Carlo decisions and closed-form probabilities agree by
    construction.
    """

    n: int
    k: int
    t0: int

    kind = "bounded-distance"
    supports_realizations = True

    def __post_init__(self):
        if not self.n >= self.k >= 1:
            raise ValueError(f"need n >= k >= 1, got n={self.n}, k={self.k}")
        if self.t0 < 0:
            raise ValueError(f"correction radius must be >= 0, got {self.t0}")

    @property
    def weight_threshold(self):
        return self.t0

    def error_probability(self, gamma: float) -> float:
        self._check_gamma(gamma)
        if gamma == 0.0:
            return 0.0
        # Survival function of Binomial(n, gamma) beyond t0; scipy evaluates
        # it through the regularized incomplete beta, stable in both tails.
        return float(binom.sf(self.t0, self.n, gamma))

    def decode_success(self, noise, gamma: float | None = None) -> bool:
        noise = np.asarray(noise)
        if noise.shape != (self.n,):
            raise ValueError(f"noise must have length {self.n}, got shape {noise.shape}")
        return int(noise.sum()) <= self.t0


@dataclass(frozen=True)
class NormalApproximationDecoder(DecoderModel):
    """Gaussian channel-dispersion approximation of the block error probability.

    Analytic only: it models no specific decoder, so per-realization
    decisions are undefined.
    """

    n: int
    k: int

    kind = "normal-approximation"
    supports_realizations = False

    def __post_init__(self):
        if not self.n >= self.k >= 1:
            raise ValueError(f"need n >= k >= 1, got n={self.n}, k={self.k}")

    def error_probability(self, gamma: float) -> float:
        self._check_gamma(gamma)
        if gamma == 0.0:
            return 0.0
        h2 = -gamma * math.log2(gamma) - (1 - gamma) * math.log2(1 - gamma)
        capacity = 1.0 - h2
        dispersion = gamma * (1 - gamma) * math.log2((1 - gamma) / gamma) ** 2
        if dispersion <= 0.0:
            return 0.0 if self.n * capacity > self.k else 1.0
        x = (self.n * capacity - self.k) / math.sqrt(self.n * dispersion)
        p = 0.5 * math.erfc(x / math.sqrt(2.0))
        return min(1.0, max(0.0, p))


def _regular_tanner_graph(n, dv, dc, rng):
    """Edge lists of a (dv, dc)-regular Tanner graph via socket matching.

    Permutations are redrawn (bounded retries) until the graph is simple;
    as a last resort duplicate edges are collapsed.
    """
    if (n * dv) % dc:
        raise ValueError(f"n*dv must be divisible by dc, got n={n}, dv={dv}, dc={dc}")
    m = n * dv // dc
    var_sockets = np.repeat(np.arange(n), dv)
    chk_sockets = np.repeat(np.arange(m), dc)
    for _ in range(200):
        perm = rng.permutation(n * dv)
        pairs = var_sockets * m + chk_sockets[perm]
        if np.unique(pairs).size == pairs.size:
            return var_sockets.copy(), chk_sockets[perm].copy(), m
    pairs = np.unique(pairs)
    return (pairs // m).astype(np.int64), (pairs % m).astype(np.int64), m


class BeliefPropagationDecoder(DecoderModel):
    """Sum-product decoding of a randomly constructed (dv, dc)-regular
    sparse-parity code over the BSC.

    Noise-only simulation under the all-zero codeword: decode_success runs
    BP on a noise realization and succeeds iff the hard decision returns
    the all-zero word.  error_probability is a seeded Monte Carlo estimate
    (deterministic for fixed construction), so this model is for empirical
    comparison, not for oracle-grade checks.
    """

    kind = "empirical"
    supports_realizations = True

    def __init__(self, n, dv=3, dc=6, max_iterations=50,
                 construction_seed=0, estimate_trials=2000):
        rng = np.random.default_rng(np.random.SeedSequence([construction_seed, n, dv, dc]))
        v_of_e, c_of_e, m = _regular_tanner_graph(n, dv, dc, rng)
        order = np.lexsort((c_of_e, v_of_e))
        self.v_of_e = v_of_e[order]
        self.c_of_e = c_of_e[order]
        self.n = n
        self.k = n - m
        self.dv = dv
        self.dc = dc
        self.m = m
        self.max_iterations = max_iterations
        self.construction_seed = construction_seed
        self.estimate_trials = estimate_trials
        # reduceat segment starts in variable order and in check order
        self.var_starts = np.searchsorted(self.v_of_e, np.arange(n))
        self.perm_c = np.argsort(self.c_of_e, kind="stable")
        self.inv_perm_c = np.argsort(self.perm_c, kind="stable")
        self.chk_starts = np.searchsorted(self.c_of_e[self.perm_c], np.arange(m))

    def _syndrome_ok(self, bits):
        # bits: (B, n) uint8; returns (B,) bool of all-checks-satisfied
        par = np.bitwise_xor.reduceat(bits[:, self.v_of_e[self.perm_c]], self.chk_starts, axis=1)
        return ~par.any(axis=1)

    def decode_batch(self, noise_bits, gamma):
        """Decode a (B, n) batch of noise realizations; returns (B,) success bools."""
        noise_bits = np.asarray(noise_bits, dtype=np.uint8)
        if noise_bits.ndim != 2 or noise_bits.shape[1] != self.n:
            raise ValueError(f"batch must have shape (B, {self.n})")
        gamma = min(max(float(gamma), 1e-12), 0.5 - 1e-12)
        L = math.log((1.0 - gamma) / gamma)
        lam = (1.0 - 2.0 * noise_bits.astype(np.float64)) * L
        # Words that already satisfy every check are accepted as decoded:
        # success only if they are the all-zero word (else undetected error).
        settled = self._syndrome_ok(noise_bits)
        success = settled & (noise_bits.sum(axis=1) == 0)
        active = ~settled
        if not active.any():
            return success
        lam_a = lam[active]
        msg = lam_a[:, self.v_of_e]
        for _ in range(self.max_iterations):
            # check update (extrinsic tanh product), in check-sorted edge order
            t = np.tanh(np.clip(msg[:, self.perm_c], -35, 35) / 2.0)
            t = np.clip(t, -1 + 1e-15, 1 - 1e-15)
            logs = np.log(np.abs(t))
            neg = (t < 0).astype(np.int8)
            tot_log = np.add.reduceat(logs, self.chk_starts, axis=1)
            tot_neg = np.add.reduceat(neg, self.chk_starts, axis=1)
            ext_log = tot_log[:, self.c_of_e[self.perm_c]] - logs
            ext_neg = (tot_neg[:, self.c_of_e[self.perm_c]] - neg) & 1
            prod = np.where(ext_neg == 1, -1.0, 1.0) * np.exp(ext_log)
            c2v = 2.0 * np.arctanh(np.clip(prod, -1 + 1e-15, 1 - 1e-15))
            c2v = c2v[:, self.inv_perm_c]  # back to variable-sorted order
            # variable update and hard decision
            sums = np.add.reduceat(c2v, self.var_starts, axis=1)
            posterior = lam_a + sums
            bits = (posterior < 0).astype(np.uint8)
            done = self._syndrome_ok(bits)
            msg_next = posterior[:, self.v_of_e] - c2v
            if done.any():
                idx = np.flatnonzero(active)
                ok = done & ~bits.any(axis=1)
                success[idx[ok]] = True
                keep = ~done
                if not keep.any():
                    return success
                active[idx[done]] = False
                lam_a = lam_a[keep]
                msg = msg_next[keep]
            else:
                msg = msg_next
        return success

    def decode_success(self, noise, gamma: float | None = None) -> bool:
        if gamma is None:
            raise ValueError("belief-propagation decoding needs the channel gamma")
        noise = np.asarray(noise, dtype=np.uint8).reshape(1, -1)
        return bool(self.decode_batch(noise, gamma)[0])

    def error_probability(self, gamma: float) -> float:
        self._check_gamma(gamma)
        if gamma == 0.0:
            return 0.0
        seed_material = [self.construction_seed, np.float64(gamma).view(np.uint64).item()]
        rng = np.random.default_rng(np.random.SeedSequence(seed_material))
        noise = (rng.random((self.estimate_trials, self.n)) < gamma).astype(np.uint8)
        ok = self.decode_batch(noise, gamma)
        return 1.0 - ok.mean()


def make_decoder(kind: str, n: int, k: int, **kwargs) -> DecoderModel:
    """Factory used by config loading; kwargs per kind (t0 / dv, dc, ...)."""
    if kind in ("bounded-distance", "bounded_distance"):
        if "t0" in kwargs:
            t0 = int(kwargs["t0"])
        elif "d_u" in kwargs:
            t0 = (int(kwargs["d_u"]) - 1) // 2
        elif "relative_radius" in kwargs:
            t0 = int(math.floor(float(kwargs["relative_radius"]) * n))
        else:
            raise ValueError("bounded-distance decoder needs t0, d_u, or relative_radius")
        return BoundedDistanceDecoder(n=n, k=k, t0=t0)
    if kind in ("normal-approximation", "normal_approximation"):
        return NormalApproximationDecoder(n=n, k=k)
    if kind == "empirical":
        return BeliefPropagationDecoder(
            n=n,
            dv=int(kwargs.get("dv", 3)),
            dc=int(kwargs.get("dc", 6)),
            max_iterations=int(kwargs.get("max_iterations", 50)),
            construction_seed=int(kwargs.get("construction_seed", 0)),
            estimate_trials=int(kwargs.get("estimate_trials", 2000)),
        )
    raise ValueError(f"unknown decoder kind {kind!r}")


def error_probability(model: DecoderModel, gamma: float) -> float:
    return model.error_probability(gamma)


def decode_success(model: DecoderModel, noise, gamma: float | None = None) -> bool:
    return model.decode_success(noise, gamma=gamma)
