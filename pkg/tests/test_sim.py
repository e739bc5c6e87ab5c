"""Tests for the Monte Carlo renewal-reward simulator.

The simulator is validated against the analytic solvers it exists to check:
empirical throughput must track the fixed points, probe counts must follow
the geometric stopping law, and reports must be bit-reproducible from the
seed alone, serial or parallel.
"""

import json
import math

import pytest

from dos_lab import (ChannelParams, ContentionParams, DomainError,
                     GeneralBackoffPolicy, LinearBackoffPolicy,
                     PerfectCsiPolicy, SimConfig, StarvationError,
                     lambda_hat_prime_linear, phi_general, phi_linear,
                     run_replications, run_simulation, solve_fixed_point_general,
                     solve_perfect_csi)
from conftest import DELTA, PS, solved_backoff

BENCH_CH = ChannelParams.from_alpha(1.0, 1.0)


def benchmark_policy() -> LinearBackoffPolicy:
    sigma, x_star = solved_backoff(1.0, 1.0).final
    return LinearBackoffPolicy(sigma=sigma, threshold_x=x_star)


def make_config(policy, channel=BENCH_CH, episodes=100_000, seed=7, reps=1,
                **kwargs):
    return SimConfig(
        channel=channel,
        contention=ContentionParams.from_ratios(delta=DELTA, p_s=PS),
        policy=policy,
        num_transmissions=episodes,
        seed=seed,
        num_replications=reps,
        **kwargs,
    )


def test_throughput_matches_fixed_point():
    sigma, x_star = solved_backoff(1.0, 1.0).final
    report = run_simulation(make_config(benchmark_policy(), episodes=300_000))
    assert abs(report.empirical_throughput - x_star) / x_star < 0.01


def test_zero_threshold_matches_phi_at_zero(cont):
    policy = LinearBackoffPolicy(sigma=0.285, threshold_x=0.0)
    expected = phi_linear(0.0, 0.285, BENCH_CH, cont)
    report = run_simulation(make_config(policy, episodes=300_000))
    assert abs(report.empirical_throughput - expected) / expected < 0.01
    # every first successful contention transmits
    assert report.mean_probes_per_transmission == 1.0


def test_perfect_csi_simulation_matches_threshold(cont):
    x_star = solve_perfect_csi(1.0, DELTA, PS)
    policy = PerfectCsiPolicy(threshold_x=x_star)
    report = run_simulation(make_config(policy, channel=ChannelParams(rho=1.0),
                                        episodes=300_000))
    assert abs(report.empirical_throughput - x_star) / x_star < 0.01
    assert report.outage_fraction == 0.0


def test_general_policy_simulation_matches_quadrature(cont):
    # capped linear backoff exercises the general-policy code path end to end
    def capped(lh):
        return 0.3 * BENCH_CH.rho_eff * min(lh, 2.0)

    x_star = solve_fixed_point_general(
        GeneralBackoffPolicy(capped, threshold_x=0.0, ch=BENCH_CH), BENCH_CH, cont)
    policy = GeneralBackoffPolicy(capped, threshold_x=x_star, ch=BENCH_CH)
    report = run_simulation(make_config(policy, episodes=150_000))
    assert abs(report.empirical_throughput - x_star) / x_star < 0.02
    assert phi_general(x_star, policy, BENCH_CH, cont) == pytest.approx(x_star,
                                                                        abs=1e-8)


def test_mean_probes_follow_geometric_law():
    policy = benchmark_policy()
    lam_p = lambda_hat_prime_linear(policy.threshold_x, policy.sigma, BENCH_CH)
    report = run_simulation(make_config(policy, episodes=200_000))
    assert report.mean_probes_per_transmission == pytest.approx(math.exp(lam_p),
                                                                rel=0.02)


def test_outage_fraction_matches_success_factor():
    # for linear backoff the no-outage probability is constant in the estimate
    policy = benchmark_policy()
    c = -math.expm1(-(1.0 / policy.sigma - 1.0) / (BENCH_CH.alpha * BENCH_CH.rho_eff))
    report = run_simulation(make_config(policy, episodes=200_000))
    se = math.sqrt(c * (1.0 - c) / 200_000)
    assert abs(report.outage_fraction - (1.0 - c)) < 3.0 * se


def test_probe_count_increases_with_threshold():
    sigma = 0.285
    reports = [
        run_simulation(make_config(LinearBackoffPolicy(sigma=sigma, threshold_x=x),
                                   episodes=30_000))
        for x in (0.1, 0.3, 0.5)
    ]
    probes = [r.mean_probes_per_transmission for r in reports]
    assert probes[0] < probes[1] < probes[2]


def test_reports_are_deterministic():
    cfg = make_config(benchmark_policy(), episodes=20_000, seed=123, reps=4)
    first = run_replications(cfg)
    second = run_replications(cfg)
    assert first == second
    assert json.dumps(first.as_dict()) == json.dumps(second.as_dict())


def test_parallel_equals_serial():
    cfg = make_config(benchmark_policy(), episodes=20_000, seed=123, reps=6)
    serial = run_replications(cfg, parallel=False)
    threaded = run_replications(cfg, parallel=True, max_workers=3)
    assert serial == threaded
    assert json.dumps(serial.as_dict()) == json.dumps(threaded.as_dict())


def test_different_seeds_agree_statistically():
    reports = [
        run_replications(make_config(benchmark_policy(), episodes=20_000,
                                     seed=seed, reps=8))
        for seed in (1, 2)
    ]
    gap = abs(reports[0].empirical_throughput - reports[1].empirical_throughput)
    assert gap < 3.0 * (reports[0].ci_halfwidth_95 + reports[1].ci_halfwidth_95)


def test_ci_shrinks_with_more_replications():
    small = run_replications(make_config(benchmark_policy(), episodes=5_000,
                                         seed=5, reps=4))
    large = run_replications(make_config(benchmark_policy(), episodes=5_000,
                                         seed=5, reps=32))
    assert large.ci_halfwidth_95 < small.ci_halfwidth_95


def test_starvation_guard():
    policy = LinearBackoffPolicy(sigma=0.285, threshold_x=1e9)
    with pytest.raises(StarvationError):
        run_simulation(make_config(policy, episodes=100))
    modest = LinearBackoffPolicy(sigma=0.285, threshold_x=2.0)
    with pytest.raises(StarvationError):
        run_simulation(make_config(modest, episodes=100, max_expected_probes=10.0))


def test_starvation_guard_perfect_csi():
    with pytest.raises(StarvationError):
        run_simulation(make_config(PerfectCsiPolicy(threshold_x=1e9),
                                   channel=ChannelParams(rho=1.0), episodes=100))


def test_report_invariants():
    report = run_simulation(make_config(benchmark_policy(), episodes=10_000))
    assert report.empirical_throughput >= 0.0
    assert 0.0 <= report.outage_fraction <= 1.0
    assert report.mean_probes_per_transmission >= 1.0
    assert report.total_rounds >= 10_000


def test_config_validation(cont):
    with pytest.raises(DomainError):
        make_config(benchmark_policy(), episodes=0)
    with pytest.raises(DomainError):
        make_config(benchmark_policy(), reps=0)
    with pytest.raises(DomainError):
        # perfect-CSI policy on a noisy channel
        make_config(PerfectCsiPolicy(threshold_x=0.5), channel=BENCH_CH)
    with pytest.raises(DomainError):
        # backoff policy on a perfect channel
        make_config(benchmark_policy(), channel=ChannelParams(rho=1.0))
