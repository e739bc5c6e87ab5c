"""Monte Carlo renewal-reward simulator for the scheduling protocol.

Each transmission episode replays the protocol faithfully: contend for the
channel (a Geometric(p_s) number of mini-slots per probe), observe a channel
estimate, stop at the first probe whose conditional expected rate reaches
the policy threshold, then transmit at the nominated rate.  The transmission
succeeds only if the nominated SNR does not exceed the actual SNR; an outage
earns zero reward but still costs the full data slot.  Throughput is the
ratio of summed rewards to summed episode times, which is the renewal-reward
estimate of the long-run rate of return.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import (ChannelParams, ContentionParams, RngStream,
                      sample_contention, sample_error, sample_estimate)
from .errors import DomainError, StarvationError
from .threshold import (GeneralBackoffPolicy, LinearBackoffPolicy,
                        PerfectCsiPolicy, _locate_threshold_general,
                        _success_factor, lambda_hat_prime_linear)


@dataclass(frozen=True)
class SimConfig:
    """Everything a simulation run needs, including its random seed."""

    channel: ChannelParams
    contention: ContentionParams
    policy: object
    num_transmissions: int
    seed: int
    num_replications: int = 1
    max_expected_probes: float = 1e7

    def __post_init__(self):
        if self.num_transmissions < 1:
            raise DomainError("num_transmissions must be >= 1")
        if self.num_replications < 1:
            raise DomainError("num_replications must be >= 1")
        if not math.isfinite(self.policy.threshold_x):
            raise DomainError("policy threshold must be finite")
        if isinstance(self.policy, PerfectCsiPolicy):
            if self.channel.beta != 0.0:
                raise DomainError("perfect-CSI policy requires beta = 0")
        elif self.channel.alpha <= 0.0:
            raise DomainError("backoff policies require alpha > 0")


@dataclass(frozen=True)
class SimReport:
    """Aggregated simulation outcome."""

    empirical_throughput: float
    ci_halfwidth_95: float
    outage_fraction: float
    mean_probes_per_transmission: float
    total_rounds: int

    def as_dict(self) -> dict:
        return {
            "empirical_throughput": self.empirical_throughput,
            "ci_halfwidth_95": self.ci_halfwidth_95,
            "outage_fraction": self.outage_fraction,
            "mean_probes_per_transmission": self.mean_probes_per_transmission,
            "total_rounds": self.total_rounds,
        }


@dataclass(frozen=True)
class _RepResult:
    throughput: float
    probes: int
    outages: int
    minislots: int
    episodes: int


def _check_starvation(cfg: SimConfig):
    """Reject configurations whose expected probes per episode exceed the cap."""
    cap = cfg.max_expected_probes
    x = cfg.policy.threshold_x
    if isinstance(cfg.policy, PerfectCsiPolicy):
        ex = math.exp(x) if x < 700.0 else math.inf
        pass_prob = math.exp((1.0 - ex) / cfg.channel.rho) if math.isfinite(ex) else 0.0
    elif isinstance(cfg.policy, LinearBackoffPolicy):
        if cfg.policy.sigma == 0.0 or cfg.policy.sigma == 1.0:
            pass_prob = 1.0 if x == 0.0 else 0.0
        else:
            lam_p = lambda_hat_prime_linear(x, cfg.policy.sigma, cfg.channel)
            pass_prob = math.exp(-lam_p) if math.isfinite(lam_p) else 0.0
    elif isinstance(cfg.policy, GeneralBackoffPolicy):
        lam_p = _locate_threshold_general(cfg.policy, x, cfg.channel)
        pass_prob = math.exp(-lam_p) if math.isfinite(lam_p) else 0.0
    else:
        raise DomainError(f"unsupported policy type {type(cfg.policy).__name__}")
    if pass_prob <= 0.0 or 1.0 / pass_prob > cap:
        raise StarvationError(
            f"threshold {x} passes a probe with probability {pass_prob:.3e}; "
            f"expected probes per transmission exceed the cap {cap:.0e}")


def _rate_bar_batch(policy, lam_hat: np.ndarray, ch: ChannelParams) -> np.ndarray:
    if isinstance(policy, LinearBackoffPolicy):
        if policy.sigma <= 0.0 or policy.sigma >= 1.0:
            return np.zeros_like(lam_hat)
        c = _success_factor(policy.sigma, ch)
        return c * np.log1p(policy.sigma * ch.rho_eff * lam_hat)
    try:
        lam_c = np.asarray(policy.lambda_c(lam_hat), dtype=float)
        if lam_c.shape != lam_hat.shape:
            raise ValueError
    except Exception:
        lam_c = np.array([policy.lambda_c(v) for v in lam_hat])
    out = np.zeros_like(lam_hat)
    positive = lam_c > 0.0
    exponent = (lam_hat[positive] / lam_c[positive] - 1.0 / ch.rho_eff) / ch.alpha
    prob = np.where(exponent > 0.0, -np.expm1(-np.maximum(exponent, 0.0)), 0.0)
    out[positive] = np.log1p(lam_c[positive]) * prob
    return out


def _nominated_batch(policy, lam_hat: np.ndarray, ch: ChannelParams) -> np.ndarray:
    if isinstance(policy, LinearBackoffPolicy):
        return policy.sigma * ch.rho_eff * lam_hat
    try:
        lam_c = np.asarray(policy.lambda_c(lam_hat), dtype=float)
        if lam_c.shape != lam_hat.shape:
            raise ValueError
    except Exception:
        lam_c = np.array([policy.lambda_c(v) for v in lam_hat])
    return lam_c


def _run_replication(cfg: SimConfig, rng: RngStream) -> _RepResult:
    ch = cfg.channel
    cont = cfg.contention
    policy = cfg.policy
    perfect = isinstance(policy, PerfectCsiPolicy)
    threshold = policy.threshold_x
    n = cfg.num_transmissions

    times = np.zeros(n)
    rewards = np.zeros(n)
    remaining = np.arange(n)
    probes = 0
    outages = 0
    minislots = 0
    probe_budget = cfg.max_expected_probes * max(n, 1) * 20.0

    while remaining.size:
        m = remaining.size
        k = sample_contention(cont.p_s, rng, size=m)
        lam_hat = sample_estimate(rng, size=m)
        probes += m
        minislots += int(k.sum())
        times[remaining] += k * cont.tau
        if perfect:
            rate = np.log1p(ch.rho * lam_hat)
            done = rate >= threshold
            idx = remaining[done]
            rewards[idx] = cont.T * rate[done]
        else:
            rbar = _rate_bar_batch(policy, lam_hat, ch)
            done = rbar >= threshold
            idx = remaining[done]
            if idx.size:
                lh = lam_hat[done]
                z = sample_error(rng, size=idx.size)
                actual = ch.rho_eff * lh / (1.0 + ch.alpha * ch.rho_eff * z)
                nominated = _nominated_batch(policy, lh, ch)
                ok = nominated <= actual
                rewards[idx] = np.where(ok, cont.T * np.log1p(nominated), 0.0)
                outages += int(np.count_nonzero(~ok))
        times[idx] += cont.T
        remaining = remaining[~done]
        if probes > probe_budget:
            raise StarvationError(
                f"exceeded probe budget ({probes} probes for {n} episodes)")

    return _RepResult(throughput=float(rewards.sum() / times.sum()),
                      probes=probes, outages=outages, minislots=minislots,
                      episodes=n)


def _aggregate(results: list[_RepResult]) -> SimReport:
    throughputs = np.array([r.throughput for r in results])
    mean = float(throughputs.mean())
    if len(results) >= 2:
        ci = 1.96 * float(throughputs.std(ddof=1)) / math.sqrt(len(results))
    else:
        ci = 0.0
    episodes = sum(r.episodes for r in results)
    return SimReport(
        empirical_throughput=mean,
        ci_halfwidth_95=ci,
        outage_fraction=sum(r.outages for r in results) / episodes,
        mean_probes_per_transmission=sum(r.probes for r in results) / episodes,
        total_rounds=sum(r.minislots for r in results),
    )


def run_simulation(cfg: SimConfig) -> SimReport:
    """Run cfg.num_replications independent replications serially.

    Replication r draws from the stream keyed by (cfg.seed, r), so the
    result depends only on the configuration.
    """
    return run_replications(cfg, parallel=False)


def run_replications(cfg: SimConfig, parallel: bool = False,
                     max_workers: int | None = None) -> SimReport:
    """Replicated simulation with a 95% normal-approximation CI across
    replications.

    Each replication owns the stream keyed by (seed, replication index) and
    aggregation reduces in index order, so serial and parallel execution
    produce bit-identical reports.
    """
    _check_starvation(cfg)
    reps = cfg.num_replications
    if parallel and reps > 1:
        results: list = [None] * reps
        with ThreadPoolExecutor(max_workers=max_workers or min(reps, 8)) as pool:
            futures = {
                pool.submit(_run_replication, cfg, RngStream(cfg.seed, r)): r
                for r in range(reps)
            }
            for fut, r in futures.items():
                results[r] = fut.result()
    else:
        results = [_run_replication(cfg, RngStream(cfg.seed, r)) for r in range(reps)]
    return _aggregate(results)
