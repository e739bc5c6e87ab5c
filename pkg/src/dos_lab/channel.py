"""Channel and contention model.

A link's channel estimate and the estimation error are both unit-mean
exponentials after normalization; the actual SNR seen by the receiver is

    lam = rho_eff * lam_hat / (1 + alpha * rho_eff * z)

so the actual SNR never exceeds the estimated SNR rho_eff * lam_hat.
``rho_eff`` is the scale of the estimated SNR used by every scheduling
formula; it equals rho / (1 - beta), which reproduces the reference
operating points this package is validated against.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class ChannelParams:
    """Noisy-channel description: nominal SNR and estimation-error variance.

    beta is the MMSE error variance (estimate variance is 1 - beta);
    alpha = beta / (1 - beta) is the normalized error variance, and
    beta = 0 (alpha = 0) is the perfect-CSI case.
    """

    rho: float
    beta: float = 0.0

    def __post_init__(self):
        if not self.rho > 0.0:
            raise DomainError(f"rho must be positive, got {self.rho}")
        if not 0.0 <= self.beta < 1.0:
            raise DomainError(f"beta must lie in [0, 1), got {self.beta}")

    @property
    def alpha(self) -> float:
        return self.beta / (1.0 - self.beta)

    @property
    def rho_eff(self) -> float:
        """Estimated-SNR scale rho / (1 - beta) = rho * (1 + alpha)."""
        return self.rho / (1.0 - self.beta)

    @classmethod
    def from_alpha(cls, rho: float, alpha: float) -> "ChannelParams":
        """Construct from the normalized error variance alpha = beta/(1-beta)."""
        if alpha < 0.0:
            raise DomainError(f"alpha must be nonnegative, got {alpha}")
        return cls(rho=rho, beta=alpha / (1.0 + alpha))

    @classmethod
    def from_effective(cls, rho_eff: float, alpha: float) -> "ChannelParams":
        """Construct directly from (rho_eff, alpha); inverts rho_eff = rho*(1+alpha)."""
        if alpha < 0.0:
            raise DomainError(f"alpha must be nonnegative, got {alpha}")
        if not rho_eff > 0.0:
            raise DomainError(f"rho_eff must be positive, got {rho_eff}")
        return cls(rho=rho_eff / (1.0 + alpha), beta=alpha / (1.0 + alpha))


@dataclass(frozen=True)
class ContentionParams:
    """Random-access contention model: mini-slot tau, data slot T, and the
    probability p_s that exactly one link transmits in a mini-slot."""

    tau: float
    T: float
    p_s: float
    access_probs: tuple = None

    def __post_init__(self):
        if not self.tau > 0.0:
            raise DomainError(f"tau must be positive, got {self.tau}")
        if not self.T > 0.0:
            raise DomainError(f"T must be positive, got {self.T}")
        if not 0.0 < self.p_s <= 1.0:
            raise DomainError(f"p_s must lie in (0, 1], got {self.p_s}")
        if self.access_probs is not None:
            probs = tuple(float(p) for p in self.access_probs)
            object.__setattr__(self, "access_probs", probs)
            derived = contention_success_prob(probs)
            if abs(derived - self.p_s) > 1e-9:
                raise DomainError(
                    f"p_s={self.p_s} inconsistent with access_probs (derived {derived})")

    @property
    def delta(self) -> float:
        """Contention overhead ratio tau / T."""
        return self.tau / self.T

    @classmethod
    def from_access_probs(cls, access_probs, tau: float, T: float) -> "ContentionParams":
        probs = tuple(float(p) for p in access_probs)
        return cls(tau=tau, T=T, p_s=contention_success_prob(probs), access_probs=probs)

    @classmethod
    def homogeneous(cls, num_links: int, p: float, tau: float, T: float) -> "ContentionParams":
        if num_links < 1:
            raise DomainError("need at least one link")
        return cls.from_access_probs((p,) * num_links, tau=tau, T=T)

    @classmethod
    def from_ratios(cls, delta: float, p_s: float, T: float = 1.0) -> "ContentionParams":
        """Build from the two quantities the solvers actually consume."""
        if not delta > 0.0:
            raise DomainError(f"delta must be positive, got {delta}")
        return cls(tau=delta * T, T=T, p_s=p_s)


def contention_success_prob(access_probs) -> float:
    """Probability that exactly one link transmits: sum_m p_m prod_{i!=m} (1-p_i)."""
    probs = list(access_probs)
    if not probs:
        raise DomainError("access_probs must be nonempty")
    for p in probs:
        if not 0.0 <= p <= 1.0:
            raise DomainError(f"access probability {p} outside [0, 1]")
    total = 0.0
    for m, p_m in enumerate(probs):
        term = p_m
        for i, p_i in enumerate(probs):
            if i != m:
                term *= 1.0 - p_i
        total += term
    return total


def beta_from_training(rho: float, tau_train: float) -> float:
    """Estimation-error variance after training for tau_train at SNR rho:
    beta = 1 / (rho * tau_train + 1)."""
    if not rho > 0.0:
        raise DomainError(f"rho must be positive, got {rho}")
    if not tau_train > 0.0:
        raise DomainError(f"tau_train must be positive, got {tau_train}")
    return 1.0 / (rho * tau_train + 1.0)


def success_prob_given_estimate(lambda_c: float, lambda_hat: float,
                                ch: ChannelParams) -> float:
    """P(actual SNR >= lambda_c | estimate lambda_hat) for a noisy channel.

    Equals max(0, 1 - exp(-(1/alpha) (lambda_hat/lambda_c - 1/rho_eff))).
    """
    if ch.alpha == 0.0:
        raise DomainError("perfect CSI (alpha=0) has no conditional success model; "
                          "use the dedicated perfect-CSI paths")
    if not lambda_c > 0.0:
        raise DomainError(f"lambda_c must be positive, got {lambda_c}")
    if lambda_hat < 0.0:
        raise DomainError(f"lambda_hat must be nonnegative, got {lambda_hat}")
    exponent = (lambda_hat / lambda_c - 1.0 / ch.rho_eff) / ch.alpha
    if exponent <= 0.0:
        return 0.0
    return -math.expm1(-exponent)


def conditional_snr_density(lam: float, lambda_hat: float, ch: ChannelParams) -> float:
    """Density of the actual SNR given the estimate; supported on (0, rho_eff*lambda_hat]."""
    if ch.alpha == 0.0:
        raise DomainError("density undefined for perfect CSI (alpha=0)")
    if not lam > 0.0:
        raise DomainError(f"lam must be positive, got {lam}")
    if not lambda_hat > 0.0:
        raise DomainError(f"lambda_hat must be positive, got {lambda_hat}")
    gap = lambda_hat / lam - 1.0 / ch.rho_eff
    if gap < 0.0:
        return 0.0
    return lambda_hat / (ch.alpha * lam * lam) * math.exp(-gap / ch.alpha)


def expected_rate_bar(lambda_hat: float, lambda_c: float, ch: ChannelParams) -> float:
    """Conditional expected rate log(1+lambda_c) * P(no outage | estimate).

    This is the quantity the threshold rule compares; it is zero when the
    nominated SNR lambda_c is zero.
    """
    if lambda_c < 0.0:
        raise DomainError(f"lambda_c must be nonnegative, got {lambda_c}")
    if lambda_c == 0.0:
        return 0.0
    return math.log1p(lambda_c) * success_prob_given_estimate(lambda_c, lambda_hat, ch)


class RngStream:
    """Counter-based random stream keyed by (seed, stream_id).

    Distinct stream ids give statistically independent streams, and a given
    key always reproduces the same sample sequence, so parallel replications
    stay deterministic.  A stream is single-owner: never sample one stream
    from two concurrent contexts.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        key = np.array([self.seed & _MASK64, self.stream_id & _MASK64], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def random(self, size=None):
        """Uniform draws on [0, 1)."""
        return self._gen.random(size)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


def sample_estimate(rng: RngStream, size=None):
    """Unit-mean exponential channel-estimate draws via inverse transform."""
    u = rng.random(size)
    if size is None:
        return -math.log1p(-u)
    return -np.log1p(-u)


def sample_error(rng: RngStream, size=None):
    """Unit-mean exponential estimation-error draws via inverse transform."""
    return sample_estimate(rng, size)


def sample_contention(p_s: float, rng: RngStream, size=None):
    """Number of mini-slots until a successful contention: Geometric(p_s)
    on support {1, 2, ...} via inverse transform."""
    if not 0.0 < p_s <= 1.0:
        raise DomainError(f"p_s must lie in (0, 1], got {p_s}")
    if p_s == 1.0:
        return 1 if size is None else np.ones(size, dtype=np.int64)
    u = rng.random(size)
    log_q = math.log1p(-p_s)
    if size is None:
        return max(int(math.ceil(math.log1p(-u) / log_q)), 1)
    k = np.ceil(np.log1p(-u) / log_q).astype(np.int64)
    return np.maximum(k, 1)
