"""Coded decoding over unreliable servers: code structure, unavailability
bounds, Monte Carlo estimation, and queueing of per-frame vs continuous
decoding."""

__version__ = "0.1.0"

from .gf2 import (
    BitMatrix,
    NfvCode,
    column_weights,
    encode,
    load_generator,
    make_code,
    min_distance,
    reference_code,
    save_generator,
)
from .structure import (
    ChromaticBounds,
    ColoringResult,
    DependencyGraph,
    chromatic_bounds,
    chromatic_number,
    dependency_graph,
    resolve_chromatic_number,
)
from .channel import (
    BeliefPropagationDecoder,
    BoundedDistanceDecoder,
    BscChannel,
    NormalApproximationDecoder,
    combined_noise,
    decode_success,
    error_probability,
    flip_probability,
    make_decoder,
    sample_noise,
)
from .latency import (
    LatencyModel,
    ServiceModel,
    completion_cdf,
    completion_cdf_inverse,
    harmonic,
    harmonic2,
    order_statistic_mean_and_second_moment,
    sample_completion_time,
    sample_completion_times,
    subset_completion_prob,
)
from .bounds import (
    BoundValue,
    SystemConfig,
    UnionBoundEvaluator,
    brute_force_fup,
    build_system,
    exact_fup,
    fer_bound,
    janson_tail,
    ldb_asymptote,
    ldb_fup,
    phi,
    ub_fup,
)
from .montecarlo import FupCurve, decode_indicator_matrix, estimate_fer, simulate_fup
from .queueing import (
    QueueConfig,
    QueueStats,
    UnstableQueueError,
    latency_vs_rate_sweep,
    pfd_mean_latency,
    simulate_queue,
)
