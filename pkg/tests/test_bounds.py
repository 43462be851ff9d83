import math

import numpy as np
import pytest

from nfvlab import (
    BitMatrix,
    BoundedDistanceDecoder,
    BscChannel,
    BoundValue,
    LatencyModel,
    NfvCode,
    NormalApproximationDecoder,
    SystemConfig,
    UnionBoundEvaluator,
    brute_force_fup,
    build_system,
    completion_cdf,
    completion_cdf_inverse,
    exact_fup,
    fer_bound,
    janson_tail,
    ldb_asymptote,
    ldb_fup,
    make_code,
    phi,
    reference_code,
    ub_fup,
)

from conftest import random_code


def tiny_system(code, delta=0.05, t0=1, n=4, inv_mu1=0.5, mu2=2.0, a=0.2):
    return SystemConfig(
        code=code,
        channel=BscChannel(delta),
        decoder=BoundedDistanceDecoder(n=n, k=max(1, n // 2), t0=t0),
        latency=LatencyModel(inv_mu1=inv_mu1, mu2=mu2, a=a, n=n),
    )


class TestPhi:
    def test_at_zero(self):
        assert phi(0.0) == 0.0

    def test_at_one(self):
        assert phi(1.0) == pytest.approx(2 * math.log(2) - 1, abs=1e-15)

    def test_at_e_minus_one(self):
        assert phi(math.e - 1) == pytest.approx(1.0, abs=1e-12)

    def test_series_joins_direct_branch_smoothly(self):
        for x in (9.999e-5, 1.0001e-4, 1e-6, 1e-8):
            direct = (1.0 + x) * math.log1p(x) - x
            assert phi(x) == pytest.approx(direct, rel=1e-9)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            phi(-0.1)


class TestJansonTail:
    def test_zero_tau_is_trivial(self):
        assert janson_tail(1.0, 1.0, 1, 0.0) == 1.0
        assert janson_tail(0.0, 1.0, 1, 0.0) == 1.0

    def test_degenerate_sum_cannot_deviate(self):
        assert janson_tail(0.0, 1.0, 1, 0.5) == 0.0

    def test_unit_arguments(self):
        # 4*b*tau/(5*S) = 1 -> exp(-phi(1)) = exp(1 - 2 ln 2)
        val = janson_tail(1.0, 1.0, 1, 5.0 / 4.0)
        assert val == math.exp(-(2 * math.log(2) - 1))
        assert val == pytest.approx(0.6794, abs=5e-4)

    def test_larger_chromatic_number_weakens_the_bound(self):
        vals = [janson_tail(2.0, 1.0, chi, 1.0) for chi in (1, 2, 4, 8)]
        assert all(a < b for a, b in zip(vals, vals[1:]))

    def test_rejects_negative_inputs(self):
        with pytest.raises(ValueError):
            janson_tail(-1.0, 1.0, 1, 1.0)
        with pytest.raises(ValueError):
            janson_tail(1.0, 1.0, 1, -1.0)
        with pytest.raises(ValueError):
            janson_tail(1.0, 1.0, 0, 1.0)


class TestBoundValue:
    def test_value_present_iff_applicable(self):
        BoundValue(0.5, True)
        BoundValue(None, False, "below threshold")
        with pytest.raises(ValueError):
            BoundValue(None, True)
        with pytest.raises(ValueError):
            BoundValue(0.5, False)


class TestSystemConfig:
    def test_derived_fields(self):
        cfg = tiny_system(reference_code())
        assert cfg.gammas == tuple(
            (1 - (1 - 2 * 0.05) ** d) / 2 for d in reference_code().column_weights
        )
        assert cfg.chi == 3
        assert cfg.chi_source == "exact"
        assert all(0 <= p < 1 for p in cfg.error_probs)

    def test_blocklength_mismatch_rejected(self):
        with pytest.raises(ValueError, match="blocklength"):
            SystemConfig(
                code=reference_code(),
                channel=BscChannel(0.05),
                decoder=BoundedDistanceDecoder(n=4, k=2, t0=1),
                latency=LatencyModel(inv_mu1=0.0, mu2=1.0, a=0.1, n=5),
            )

    def test_build_system_computes_block_sizes(self):
        cfg = build_system(reference_code(), L=504, r=0.5, delta=0.01,
                           inv_mu1=0.0, mu2=10.0, a=1.0,
                           decoder_kind="bounded_distance", relative_radius=0.03)
        assert cfg.latency.n == 252
        assert cfg.decoder.k == 126
        assert cfg.decoder.t0 == 7

    def test_build_system_rejects_fractional_blocklength(self):
        with pytest.raises(ValueError, match="positive integer"):
            build_system(reference_code(), L=100, r=0.3, delta=0.01,
                         inv_mu1=0.0, mu2=10.0, a=1.0,
                         decoder_kind="bounded_distance", t0=2)


class TestLdb:
    def test_below_threshold_reports_reason(self):
        cfg = tiny_system(make_code("parallel", 4))
        bv = ldb_fup(cfg, cfg.latency.shift + 1e-9)
        assert not bv.applicable
        assert "threshold" in bv.reason

    def test_threshold_matches_inverse_cdf(self):
        cfg = tiny_system(make_code("parallel", 4))
        N, d = 4, 1
        p_req = (N - d) / (N - sum(cfg.error_probs))
        t_min = completion_cdf_inverse(cfg.latency, p_req)
        assert not ldb_fup(cfg, t_min - 1e-6).applicable
        assert ldb_fup(cfg, t_min + 1e-6).applicable

    def test_sound_against_brute_force(self, rng):
        for _ in range(5):
            cfg = tiny_system(random_code(rng, 2, 4))
            bf = brute_force_fup(cfg, np.linspace(0.5, 50, 30))
            for t, exact in zip(np.linspace(0.5, 50, 30), bf):
                bv = ldb_fup(cfg, float(t))
                if bv.applicable:
                    assert exact <= bv.value + 1e-12

    def test_converges_to_asymptote_for_uniform_weights(self, rng):
        # asymptote uses the worst-case gamma for every server, so it equals
        # the limit exactly when all column weights agree
        for code in (make_code("split_repetition", 6), make_code("parallel", 5),
                     make_code("repetition", 4)):
            cfg = tiny_system(code, delta=0.08, n=5, t0=1)
            t_far = completion_cdf_inverse(cfg.latency, 1 - 1e-10)
            far = ldb_fup(cfg, t_far)
            asym = ldb_asymptote(cfg)
            assert far.applicable and asym.applicable
            assert abs(far.value - asym.value) / asym.value < 1e-6

    def test_never_applicable_when_errors_swamp_distance(self):
        code = make_code("parallel", 4)
        cfg = SystemConfig(
            code=code, channel=BscChannel(0.4),
            decoder=BoundedDistanceDecoder(n=4, k=2, t0=0),
            latency=LatencyModel(inv_mu1=0.0, mu2=1.0, a=0.0, n=4))
        assert sum(cfg.error_probs) > cfg.d_min
        bv = ldb_fup(cfg, 1e9)
        assert not bv.applicable
        assert "never applicable" in bv.reason


class TestAsymptote:
    def test_perfect_decoders_drive_the_bound_to_zero(self):
        code = make_code("parallel", 4)
        cfg = SystemConfig(
            code=code, channel=BscChannel(1e-9),
            decoder=BoundedDistanceDecoder(n=4, k=2, t0=4),
            latency=LatencyModel(inv_mu1=0.0, mu2=1.0, a=0.0, n=4))
        bv = ldb_asymptote(cfg)
        assert bv.applicable and bv.value == 0.0

    def test_not_applicable_when_distance_ratio_below_error(self):
        code = make_code("parallel", 8)  # d_min/N = 1/8
        cfg = SystemConfig(
            code=code, channel=BscChannel(0.4),
            decoder=BoundedDistanceDecoder(n=4, k=2, t0=0),
            latency=LatencyModel(inv_mu1=0.0, mu2=1.0, a=0.0, n=4))
        assert not ldb_asymptote(cfg).applicable

    def test_nonincreasing_in_d_min_at_fixed_error_and_chi(self):
        # the limiting expression through the shared tail-bound kernel
        N, P, chi = 8, 0.05, 3
        vals = [
            janson_tail(N * P * (1 - P), 1 - P, chi, d - N * P)
            for d in range(1, N + 1)
        ]
        assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))

    def test_increasing_in_chromatic_number(self):
        N, P, d = 8, 0.05, 3
        vals = [
            janson_tail(N * P * (1 - P), 1 - P, chi, d - N * P)
            for chi in range(1, 9)
        ]
        assert all(b > a for a, b in zip(vals, vals[1:]))


class TestUnionBound:
    def test_perfect_decoders_vanish_at_large_t(self):
        code = make_code("parallel", 4)
        cfg = SystemConfig(
            code=code, channel=BscChannel(1e-12),
            decoder=BoundedDistanceDecoder(n=4, k=2, t0=4),
            latency=LatencyModel(inv_mu1=0.0, mu2=2.0, a=0.1, n=4))
        assert ub_fup(cfg, 1e6) == pytest.approx(0.0, abs=1e-9)

    def test_dominates_brute_force(self, rng):
        for _ in range(5):
            cfg = tiny_system(random_code(rng, 2, 4))
            ub = UnionBoundEvaluator(cfg)
            grid = np.linspace(0.5, 50, 30)
            bf = brute_force_fup(cfg, grid)
            for t, exact in zip(grid, bf):
                assert exact <= ub(float(t)) + 1e-12

    def test_limit_equals_fer_bound(self):
        cfg = tiny_system(reference_code(), delta=0.02, n=6, t0=1)
        fb = fer_bound(cfg)
        assert fb.applicable
        assert ub_fup(cfg, 1e9) == pytest.approx(fb.value, rel=1e-9)

    def test_subset_budget(self):
        code = make_code("parallel", 17)
        cfg = SystemConfig(
            code=code, channel=BscChannel(0.01),
            decoder=BoundedDistanceDecoder(n=4, k=2, t0=1),
            latency=LatencyModel(inv_mu1=0.0, mu2=1.0, a=0.0, n=4))
        with pytest.raises(ValueError, match="subset budget"):
            UnionBoundEvaluator(cfg)

    def test_probabilities_stay_in_unit_interval(self, rng):
        cfg = tiny_system(random_code(rng, 3, 5), delta=0.2, t0=0)
        ub = UnionBoundEvaluator(cfg)
        for t in np.linspace(0, 60, 50):
            assert 0.0 <= ub(float(t)) <= 1.0


class TestFerBound:
    def test_zero_error_probabilities_give_zero(self):
        code = make_code("parallel", 4)
        cfg = SystemConfig(
            code=code, channel=BscChannel(1e-12),
            decoder=BoundedDistanceDecoder(n=4, k=2, t0=4),
            latency=LatencyModel(inv_mu1=0.0, mu2=1.0, a=0.0, n=4))
        fb = fer_bound(cfg)
        assert fb.applicable and fb.value == 0.0

    def test_not_applicable_when_distance_too_small(self):
        code = make_code("parallel", 8)
        cfg = SystemConfig(
            code=code, channel=BscChannel(0.4),
            decoder=BoundedDistanceDecoder(n=4, k=2, t0=0),
            latency=LatencyModel(inv_mu1=0.0, mu2=1.0, a=0.0, n=4))
        fb = fer_bound(cfg)
        assert not fb.applicable
        assert "d_min" in fb.reason


class TestExactFup:
    def test_all_complete_perfect_decoding(self):
        for kind in ("single", "repetition", "parallel"):
            code = make_code(kind, 1 if kind == "single" else 4)
            cfg = SystemConfig(
                code=code, channel=BscChannel(1e-12),
                decoder=BoundedDistanceDecoder(n=4, k=2, t0=4),
                latency=LatencyModel(inv_mu1=0.0, mu2=2.0, a=0.1, n=4))
            assert exact_fup(cfg, kind, 1e9) == pytest.approx(0.0, abs=1e-9)

    def test_repetition_floor_is_the_decoding_error(self):
        code = make_code("repetition", 5)
        cfg = tiny_system(code, delta=0.1, n=6, t0=1)
        floor = cfg.decoder.error_probability(0.1)
        assert exact_fup(cfg, "repetition", 1e9) == pytest.approx(floor, rel=1e-9)

    def test_parallel_with_one_server_equals_single(self):
        cfg_p = tiny_system(make_code("parallel", 1))
        cfg_s = tiny_system(make_code("single"))
        for t in (0.5, 2.0, 10.0):
            assert exact_fup(cfg_p, "parallel", t) == pytest.approx(
                exact_fup(cfg_s, "single", t), abs=1e-15)

    def test_scheme_mismatch_is_rejected(self):
        cfg = tiny_system(reference_code())
        for scheme in ("single", "repetition", "parallel"):
            with pytest.raises(ValueError):
                exact_fup(cfg, scheme, 1.0)


class TestBruteForce:
    def test_vanishing_noise_reduces_to_completion_binomial(self):
        code = make_code("parallel", 4)
        cfg = SystemConfig(
            code=code, channel=BscChannel(1e-300),
            decoder=BoundedDistanceDecoder(n=3, k=1, t0=0),
            latency=LatencyModel(inv_mu1=0.5, mu2=2.0, a=0.2, n=3))
        for t in (1.0, 2.0, 5.0):
            F = completion_cdf(cfg.latency, t)
            expect = sum(
                math.comb(4, j) * F**j * (1 - F) ** (4 - j) for j in range(0, 4)
            )  # fewer than N - d_min + 1 = 4 completions
            assert brute_force_fup(cfg, t) == pytest.approx(expect, abs=1e-12)

    def test_parallel_matches_closed_form(self):
        code = make_code("parallel", 3)
        cfg = SystemConfig(
            code=code, channel=BscChannel(0.07),
            decoder=BoundedDistanceDecoder(n=5, k=2, t0=1),
            latency=LatencyModel(inv_mu1=0.4, mu2=2.0, a=0.1, n=5))
        for t in np.linspace(0.2, 30, 25):
            assert brute_force_fup(cfg, float(t)) == pytest.approx(
                exact_fup(cfg, "parallel", float(t)), abs=1e-12)

    def test_repetition_matches_closed_form(self):
        code = make_code("repetition", 5)
        cfg = SystemConfig(
            code=code, channel=BscChannel(0.11),
            decoder=BoundedDistanceDecoder(n=7, k=3, t0=1),
            latency=LatencyModel(inv_mu1=0.4, mu2=2.0, a=0.1, n=7))
        for t in np.linspace(0.2, 40, 25):
            assert brute_force_fup(cfg, float(t)) == pytest.approx(
                exact_fup(cfg, "repetition", float(t)), abs=1e-12)

    def test_monotone_nonincreasing_in_t(self, rng):
        cfg = tiny_system(random_code(rng, 2, 5))
        vals = brute_force_fup(cfg, np.linspace(0.1, 60, 40))
        assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))

    def test_enumeration_budget(self):
        code = make_code("parallel", 4)
        cfg = SystemConfig(
            code=code, channel=BscChannel(0.05),
            decoder=BoundedDistanceDecoder(n=6, k=3, t0=1),
            latency=LatencyModel(inv_mu1=0.0, mu2=1.0, a=0.0, n=6))
        with pytest.raises(ValueError, match="enumeration budget"):
            brute_force_fup(cfg, 1.0)

    def test_requires_weight_threshold_decoder(self):
        cfg = SystemConfig(
            code=make_code("parallel", 3), channel=BscChannel(0.05),
            decoder=NormalApproximationDecoder(n=4, k=2),
            latency=LatencyModel(inv_mu1=0.0, mu2=1.0, a=0.0, n=4))
        with pytest.raises(ValueError, match="weight-threshold"):
            brute_force_fup(cfg, 1.0)
