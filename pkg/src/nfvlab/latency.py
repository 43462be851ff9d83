"""Server completion-time distribution and order-statistic service moments.

A server's time to decode an n-bit packet is T = T1 + T2: T1 is an
exponential delay independent of the workload (unavailability periods),
and T2 is a shifted exponential in the packet size, with shift a*n and
rate mu2/n.  The closed-form convolution below, its inverse, and the
m-th order-statistic moments feed both the unavailability bounds and
the queueing analysis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_BISECT_TOL = 1e-10


@dataclass(frozen=True)
class LatencyModel:
    """Completion time T = Exp(1/inv_mu1) + a*n + Exp(n/mu2).

    inv_mu1 = 0 drops the workload-independent term entirely.
    """

    inv_mu1: float
    mu2: float
    a: float
    n: int

    def __post_init__(self):
        if self.inv_mu1 < 0:
            raise ValueError(f"inv_mu1 must be >= 0, got {self.inv_mu1}")
        if self.mu2 <= 0:
            raise ValueError(f"mu2 must be > 0, got {self.mu2}")
        if self.a < 0:
            raise ValueError(f"a must be >= 0, got {self.a}")
        if self.n < 1:
            raise ValueError(f"blocklength must be >= 1, got {self.n}")

    @property
    def shift(self) -> float:
        return self.a * self.n

    @property
    def rate(self) -> float:
        """Rate of the workload-dependent exponential part."""
        return self.mu2 / self.n


def completion_cdf(model: LatencyModel, t: float) -> float:
    """F(t) = Pr[T <= t], the convolution of the two delay components.

    Zero for t <= a*n.  For mu1 != mu' the convolution is
    1 - e^{-mu1 x} - (mu1/(mu1-mu'))(e^{-mu' x} - e^{-mu1 x}) with
    x = t - a*n; the removable singularity mu1 = mu' is the Gamma(2)
    limit 1 - e^{-mu' x}(1 + mu' x).
    """
    x = t - model.shift
    if x <= 0.0:
        return 0.0
    mup = model.rate
    if model.inv_mu1 == 0.0:
        return -math.expm1(-mup * x)
    mu1 = 1.0 / model.inv_mu1
    d = mu1 - mup
    dx = d * x
    if abs(dx) < 700.0:
        # expm1 keeps the difference of exponentials exact through dx -> 0
        scale = x if d == 0.0 else math.expm1(dx) / d
        return 1.0 - math.exp(-mu1 * x) * (1.0 + mu1 * scale)
    return 1.0 - math.exp(-mu1 * x) - (mu1 / d) * (math.exp(-mup * x) - math.exp(-mu1 * x))


def completion_cdf_inverse(model: LatencyModel, p: float) -> float:
    """Smallest t with F(t) >= p, by bisection to absolute tolerance 1e-10.

    p = 0 returns the support boundary a*n; p >= 1 is rejected because
    the CDF never reaches 1 at finite time.
    """
    if not 0.0 <= p < 1.0:
        raise ValueError(f"p must lie in [0, 1), got {p}")
    if p == 0.0:
        return model.shift
    lo = model.shift
    step = model.inv_mu1 + 1.0 / model.rate
    hi = lo + step
    while completion_cdf(model, hi) < p:
        step *= 2.0
        hi = lo + step
    while hi - lo > _BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if completion_cdf(model, mid) >= p:
            hi = mid
        else:
            lo = mid
    return hi


def subset_completion_prob(model: LatencyModel, N: int, l: int, t: float) -> float:
    """Probability that exactly l of N i.i.d. servers have finished by t."""
    if not 0 <= l <= N:
        raise ValueError(f"need 0 <= l <= N, got l={l}, N={N}")
    F = completion_cdf(model, t)
    return math.comb(N, l) * F**l * (1.0 - F) ** (N - l)


def sample_completion_time(model: LatencyModel, rng: np.random.Generator) -> float:
    """One draw of T = T1 + a*n + Exp-part."""
    return float(sample_completion_times(model, 1, rng)[0])


def sample_completion_times(model: LatencyModel, size, rng: np.random.Generator) -> np.ndarray:
    """Vectorized draws; T1 drawn first, then the shifted part."""
    t1 = rng.exponential(model.inv_mu1, size) if model.inv_mu1 > 0 else np.zeros(size)
    return t1 + model.shift + rng.exponential(1.0 / model.rate, size)


def harmonic(M: int) -> float:
    """H_M = sum_{i=1..M} 1/i (0 for M <= 0)."""
    return sum(1.0 / i for i in range(1, M + 1))


def harmonic2(M: int) -> float:
    """Second-order generalized harmonic number sum_{i=1..M} 1/i**2."""
    return sum(1.0 / (i * i) for i in range(1, M + 1))


@dataclass(frozen=True)
class ServiceModel:
    """Per-server exponential service at rate nu; a frame is served once
    m = N - d_min + 1 of its N packets complete."""

    nu: float
    n_servers: int
    d_min: int

    def __post_init__(self):
        if self.nu <= 0:
            raise ValueError(f"nu must be > 0, got {self.nu}")
        if not 1 <= self.d_min <= self.n_servers:
            raise ValueError(
                f"need 1 <= d_min <= N, got d_min={self.d_min}, N={self.n_servers}"
            )

    @property
    def completions_needed(self) -> int:
        return self.n_servers - self.d_min + 1


def order_statistic_mean_and_second_moment(service: ServiceModel) -> tuple[float, float]:
    """First two moments of the m-th order statistic of N i.i.d. Exp(nu).

    E[S]  = (H_N - H_{d-1}) / nu
    E[S2] = ((H_N - H_{d-1})**2 + (H2_N - H2_{d-1})) / nu**2
    with d = d_min, H = harmonic and H2 = second-order harmonic numbers.
    """
    N, d, nu = service.n_servers, service.d_min, service.nu
    h = harmonic(N) - harmonic(d - 1)
    h2 = harmonic2(N) - harmonic2(d - 1)
    mean = h / nu
    second = (h * h + h2) / (nu * nu)
    return mean, second
