"""Analytic solvers for optimal scheduling thresholds and rate backoff.

The scheduler stops probing at the first estimate whose conditional
expected rate reaches the threshold x*.  x* is the fixed point of the
throughput map Phi, and for the linear backoff family the optimal ratio
sigma* is found by fractional programming: alternate an argmax of
U - x V over sigma with the update x <- U / V until x settles.
"""

import math
import warnings
from dataclasses import dataclass, field

from scipy.integrate import IntegrationWarning, quad

from .channel import (ChannelParams, ContentionParams, beta_from_training,
                      expected_rate_bar)
from .errors import (BracketError, ConvergenceError, DomainError, PolicyError,
                     SolverError)
from .specfun import DEFAULT_TOL, Tolerance, find_root, maximize_1d, scaled_e1

# The inner argmax never touches sigma in {0, 1}: both endpoints give zero
# throughput and the estimate-domain threshold is singular at sigma = 1.
SIGMA_GRID_MARGIN = 1e-4

# Bracket expansion limit for fixed-point solvers.
_MAX_DOUBLINGS = 60

# Estimates beyond this never matter: exp(-lam_hat) underflows long before.
_LAMBDA_HAT_CAP = 1024.0


@dataclass(frozen=True)
class LinearBackoffPolicy:
    """Back off the estimated SNR by a constant ratio sigma and transmit
    whenever the conditional expected rate reaches threshold_x."""

    sigma: float
    threshold_x: float

    def __post_init__(self):
        if not 0.0 <= self.sigma <= 1.0:
            raise DomainError(f"sigma must lie in [0, 1], got {self.sigma}")
        if self.threshold_x < 0.0:
            raise DomainError(f"threshold_x must be nonnegative, got {self.threshold_x}")

    def nominated_snr(self, lambda_hat: float, ch: ChannelParams) -> float:
        return self.sigma * ch.rho_eff * lambda_hat


@dataclass(frozen=True)
class PerfectCsiPolicy:
    """Perfect-CSI stopping rule: transmit at the first probe whose exact
    rate log(1 + rho * lam_hat) reaches threshold_x.  No backoff, no outage."""

    threshold_x: float

    def __post_init__(self):
        if self.threshold_x < 0.0:
            raise DomainError(f"threshold_x must be nonnegative, got {self.threshold_x}")


class GeneralBackoffPolicy:
    """Arbitrary nonnegative backoff function lambda_hat -> lambda_c.

    The induced expected rate must be nondecreasing in the estimate; this is
    checked on a grid at construction and again while solvers bracket the
    estimate-domain threshold.
    """

    def __init__(self, lambda_c, threshold_x: float, ch: ChannelParams,
                 check_grid=None):
        if threshold_x < 0.0:
            raise DomainError(f"threshold_x must be nonnegative, got {threshold_x}")
        if ch.alpha <= 0.0:
            raise DomainError("general backoff policies require alpha > 0")
        self.lambda_c = lambda_c
        self.threshold_x = threshold_x
        if check_grid is None:
            check_grid = [0.05 * k for k in range(0, 601)]
        prev = -math.inf
        for lh in check_grid:
            lc = lambda_c(lh)
            if lc < 0.0:
                raise PolicyError(f"lambda_c({lh}) = {lc} is negative")
            r = expected_rate_bar(lh, lc, ch)
            if r < prev - 1e-9:
                raise PolicyError(
                    f"expected rate decreases near lambda_hat={lh}: {r} < {prev}")
            prev = max(prev, r)

    def rate_bar(self, lambda_hat: float, ch: ChannelParams) -> float:
        return expected_rate_bar(lambda_hat, self.lambda_c(lambda_hat), ch)


@dataclass
class SolverTrace:
    """Iterate record of the backoff optimizer.

    iterates holds (k, x_k, sigma_k) rows; row 0 is the starting point and
    carries no sigma.  final is (sigma_star, x_star).
    """

    iterates: list = field(default_factory=list)
    converged: bool = False
    final: tuple = (math.nan, math.nan)

    @property
    def x_values(self) -> list:
        return [x for _, x, _ in self.iterates]

    @property
    def num_updates(self) -> int:
        return len(self.iterates) - 1


def _perfect_rhs(x: float, rho: float, delta: float, p_s: float) -> float:
    # e^{1/rho} E1(e^x / rho) p_s / delta, in overflow-safe scaled form:
    # exp((1 - e^x)/rho) * scaled_e1(e^x / rho) * p_s / delta
    ex = math.exp(x) if x < 700.0 else math.inf
    if math.isinf(ex):
        return 0.0
    return math.exp((1.0 - ex) / rho) * scaled_e1(ex / rho) * p_s / delta


def solve_perfect_csi(rho: float, delta: float, p_s: float,
                      tol: Tolerance = DEFAULT_TOL) -> float:
    """Optimal threshold (= throughput) under perfect CSI.

    Solves x = e^{1/rho} E1(e^x / rho) p_s / delta by bisection on a bracket
    [0, B] with B doubled until the residual turns negative.
    """
    if not rho > 0.0:
        raise DomainError(f"rho must be positive, got {rho}")
    if not delta > 0.0:
        raise DomainError(f"delta must be positive, got {delta}")
    if not 0.0 < p_s <= 1.0:
        raise DomainError(f"p_s must lie in (0, 1], got {p_s}")

    def g(x):
        return _perfect_rhs(x, rho, delta, p_s) - x

    hi = 1.0
    for _ in range(_MAX_DOUBLINGS):
        if g(hi) < 0.0:
            break
        hi *= 2.0
    else:
        raise SolverError("could not bracket the perfect-CSI fixed point")
    return find_root(g, 0.0, hi, tol)


def phi_perfect_csi(x: float, rho: float, cont: ContentionParams) -> float:
    """Throughput of the perfect-CSI threshold rule at threshold x."""
    if x < 0.0:
        raise DomainError(f"x must be nonnegative, got {x}")
    ex = math.exp(x) if x < 700.0 else math.inf
    if math.isinf(ex):
        return 0.0
    q = math.exp((1.0 - ex) / rho)  # P(rate >= x)
    return q * (x + scaled_e1(ex / rho)) / (cont.delta / cont.p_s + q)


def optimize_perfect_csi(rho: float, cont: ContentionParams, x0: float = 0.5,
                         eps: float = 1e-6, max_iter: int = 100) -> SolverTrace:
    """Iterate x <- Phi_perfect(x) from x0; the perfect-CSI analogue of the
    backoff optimizer (there is no sigma to tune, so rows carry sigma = 1)."""
    if not x0 > 0.0:
        raise DomainError(f"x0 must be positive, got {x0}")
    if not eps > 0.0:
        raise DomainError(f"eps must be positive, got {eps}")
    iterates = [(0, x0, None)]
    x_prev = x0
    for k in range(1, max_iter + 1):
        x_k = phi_perfect_csi(x_prev, rho, cont)
        iterates.append((k, x_k, 1.0))
        if abs(x_k - x_prev) <= eps:
            return SolverTrace(iterates=iterates, converged=True, final=(1.0, x_k))
        x_prev = x_k
    raise ConvergenceError(
        f"perfect-CSI iteration did not settle within {max_iter} steps",
        best=x_prev,
        trace=SolverTrace(iterates=iterates, converged=False, final=(1.0, x_prev)))


def _success_factor(sigma: float, ch: ChannelParams) -> float:
    # P(no outage) for linear backoff; constant in the estimate.
    return -math.expm1(-(1.0 / sigma - 1.0) / (ch.alpha * ch.rho_eff))


def lambda_hat_prime_linear(x: float, sigma: float, ch: ChannelParams) -> float:
    """Estimate-domain threshold for linear backoff: the smallest estimate
    whose conditional expected rate reaches x.

    Returns math.inf when sigma = 1 (the success factor vanishes) or when
    the threshold overflows; the caller treats that as "never transmit".
    """
    if ch.alpha <= 0.0:
        raise DomainError("linear-backoff threshold requires alpha > 0")
    if not 0.0 < sigma <= 1.0:
        raise DomainError(f"sigma must lie in (0, 1], got {sigma}")
    if x < 0.0:
        raise DomainError(f"x must be nonnegative, got {x}")
    if x == 0.0:
        return 0.0
    c = _success_factor(sigma, ch)
    if c <= 0.0:
        return math.inf
    arg = x / c
    if arg > 700.0:
        return math.inf
    return math.expm1(arg) / (sigma * ch.rho_eff)


def _linear_uv(x: float, sigma: float, ch: ChannelParams,
               cont: ContentionParams) -> tuple[float, float]:
    # U = expected per-episode reward rate contribution, V = expected
    # per-episode time in units of T; Phi = U / V.
    base_v = cont.delta / cont.p_s
    lam_p = lambda_hat_prime_linear(x, sigma, ch)
    if math.isinf(lam_p):
        return 0.0, base_v
    c = _success_factor(sigma, ch)
    s_rho = sigma * ch.rho_eff
    weight = math.exp(-lam_p)
    u = c * weight * (math.log1p(s_rho * lam_p) + scaled_e1(lam_p + 1.0 / s_rho))
    return u, base_v + weight


def dinkelbach_u(sigma: float, x: float, ch: ChannelParams,
                 cont: ContentionParams) -> float:
    """Numerator of the fractional objective at (sigma, x)."""
    return _linear_uv(x, sigma, ch, cont)[0]


def dinkelbach_v(sigma: float, x: float, ch: ChannelParams,
                 cont: ContentionParams) -> float:
    """Denominator of the fractional objective at (sigma, x); always >= delta/p_s."""
    return _linear_uv(x, sigma, ch, cont)[1]


def phi_linear(x: float, sigma: float, ch: ChannelParams,
               cont: ContentionParams) -> float:
    """Throughput map for linear backoff; x* solves x = phi_linear(x, sigma).

    Zero at both sigma endpoints: sigma = 0 nominates zero rate, sigma = 1
    leaves no outage margin so every transmission fails.
    """
    if not 0.0 <= sigma <= 1.0:
        raise DomainError(f"sigma must lie in [0, 1], got {sigma}")
    if x < 0.0:
        raise DomainError(f"x must be nonnegative, got {x}")
    if sigma == 0.0 or sigma == 1.0:
        return 0.0
    u, v = _linear_uv(x, sigma, ch, cont)
    return u / v


def solve_fixed_point_linear(sigma: float, ch: ChannelParams,
                             cont: ContentionParams,
                             tol: Tolerance = DEFAULT_TOL) -> float:
    """Unique fixed point of x = phi_linear(x, sigma), by bracketed bisection."""
    if not 0.0 < sigma < 1.0:
        raise DomainError(f"sigma must lie in (0, 1), got {sigma}")

    def g(x):
        return phi_linear(x, sigma, ch, cont) - x

    phi0 = phi_linear(0.0, sigma, ch, cont)
    if phi0 == 0.0:
        return 0.0
    hi = phi0 + 1.0
    for _ in range(_MAX_DOUBLINGS):
        if g(hi) < 0.0:
            break
        hi *= 2.0
    else:
        raise SolverError("could not bracket the linear-backoff fixed point")
    return find_root(g, 0.0, hi, tol)


def _locate_threshold_general(policy: GeneralBackoffPolicy, x: float,
                              ch: ChannelParams,
                              tol: Tolerance = DEFAULT_TOL) -> float:
    """Smallest estimate whose expected rate reaches x; inf if unreachable."""
    if x <= 0.0 or policy.rate_bar(0.0, ch) >= x:
        return 0.0
    lo, r_lo = 0.0, policy.rate_bar(0.0, ch)
    hi = 1.0
    while hi <= _LAMBDA_HAT_CAP:
        r_hi = policy.rate_bar(hi, ch)
        if r_hi < r_lo - 1e-9:
            raise PolicyError(
                f"expected rate decreases between lambda_hat={lo} and {hi}")
        if r_hi >= x:
            return find_root(lambda lh: policy.rate_bar(lh, ch) - x, lo, hi, tol)
        lo, r_lo = hi, r_hi
        hi *= 2.0
    return math.inf


def phi_general(x: float, policy: GeneralBackoffPolicy, ch: ChannelParams,
                cont: ContentionParams, quad_abs_tol: float = 1e-10) -> float:
    """Throughput map for an arbitrary backoff policy, by adaptive quadrature.

    The integral over estimates is mapped to a finite interval with
    u = exp(-lambda_hat) before integrating.  Returns 0 when no estimate can
    reach the threshold.
    """
    if ch.alpha <= 0.0:
        raise DomainError("phi_general requires alpha > 0")
    if x < 0.0:
        raise DomainError(f"x must be nonnegative, got {x}")
    lam_p = _locate_threshold_general(policy, x, ch)
    if math.isinf(lam_p):
        return 0.0
    weight = math.exp(-lam_p)
    if weight == 0.0:
        return 0.0

    def integrand(u):
        return policy.rate_bar(-math.log(u), ch)

    with warnings.catch_warnings():
        # tolerance is judged from the returned error estimate instead
        warnings.simplefilter("ignore", IntegrationWarning)
        value, abserr = quad(integrand, 0.0, weight,
                             epsabs=quad_abs_tol, epsrel=1e-12, limit=400)
    if abserr > max(100.0 * quad_abs_tol, 1e-8 * abs(value)):
        raise SolverError(
            f"quadrature failed to converge (estimate {value}, error {abserr})")
    return value / (cont.delta / cont.p_s + weight)


def solve_fixed_point_general(policy: GeneralBackoffPolicy, ch: ChannelParams,
                              cont: ContentionParams,
                              tol: Tolerance = DEFAULT_TOL) -> float:
    """Fixed point of x = phi_general(x, policy); lets callers evaluate
    candidate backoff functions numerically."""

    def g(x):
        return phi_general(x, policy, ch, cont) - x

    phi0 = phi_general(0.0, policy, ch, cont)
    if phi0 == 0.0:
        return 0.0
    hi = phi0 + 1.0
    for _ in range(_MAX_DOUBLINGS):
        if g(hi) < 0.0:
            break
        hi *= 2.0
    else:
        raise SolverError("could not bracket the general-backoff fixed point")
    return find_root(g, 0.0, hi, tol)


def optimize_backoff(ch: ChannelParams, cont: ContentionParams, x0: float = 0.5,
                     eps: float = 1e-6, max_iter: int = 100,
                     num_grid: int = 1024) -> SolverTrace:
    """Jointly optimize the backoff ratio and threshold for linear backoff.

    Fractional-programming iteration: sigma_k maximizes U(sigma, x_k) -
    x_k V(sigma, x_k) over the interior sigma grid, then x_{k+1} = U/V at
    sigma_k; stop when successive thresholds differ by at most eps.
    """
    if ch.alpha <= 0.0:
        raise DomainError("optimize_backoff requires alpha > 0; "
                          "use solve_perfect_csi / optimize_perfect_csi for alpha = 0")
    if not x0 > 0.0:
        raise DomainError(f"x0 must be positive, got {x0}")
    if not eps > 0.0:
        raise DomainError(f"eps must be positive, got {eps}")
    iterates = [(0, x0, None)]
    x_prev = x0
    sigma = math.nan
    for k in range(1, max_iter + 1):

        def objective(s):
            u, v = _linear_uv(x_prev, s, ch, cont)
            return u - x_prev * v

        sigma, _ = maximize_1d(objective, SIGMA_GRID_MARGIN, 1.0 - SIGMA_GRID_MARGIN,
                               num_grid=num_grid)
        u, v = _linear_uv(x_prev, sigma, ch, cont)
        x_k = u / v
        iterates.append((k, x_k, sigma))
        if abs(x_k - x_prev) <= eps:
            return SolverTrace(iterates=iterates, converged=True, final=(sigma, x_k))
        x_prev = x_k
    raise ConvergenceError(
        f"backoff optimization did not settle within {max_iter} iterations",
        best=x_prev,
        trace=SolverTrace(iterates=iterates, converged=False, final=(sigma, x_prev)))


def throughput_gain(ch: ChannelParams, cont: ContentionParams,
                    x0: float = 0.5, eps: float = 1e-6) -> tuple[float, float, float]:
    """Optimal throughput x*, the no-scheduling baseline x_L = Phi(0, sigma*)
    (transmit at the first successful contention), and the relative gain."""
    trace = optimize_backoff(ch, cont, x0=x0, eps=eps)
    sigma_star, x_star = trace.final
    x_l = phi_linear(0.0, sigma_star, ch, cont)
    return x_star, x_l, (x_star - x_l) / x_l


def throughput_gain_perfect_csi(rho: float, cont: ContentionParams) -> tuple[float, float, float]:
    """Perfect-CSI counterpart of throughput_gain (baseline transmits at the
    first success, scheduler uses the optimal threshold)."""
    x_star = solve_perfect_csi(rho, cont.delta, cont.p_s)
    x_l = phi_perfect_csi(0.0, rho, cont)
    return x_star, x_l, (x_star - x_l) / x_l


@dataclass(frozen=True)
class TrainingPoint:
    """One point of a training-time sweep."""

    tau: float
    beta: float
    x_star: float
    sigma_star: float


def sweep_training_time(rho: float, T: float, tau_grid, p_s: float,
                        x0: float = 0.5, eps: float = 1e-6) -> tuple[list, float]:
    """Optimal throughput across training times.

    Longer training lowers the estimation error (beta = 1/(rho tau + 1)) but
    raises the per-probe overhead delta = tau / T, so the curve peaks at an
    interior tau.  T is held fixed across the sweep.  Returns (points,
    tau_star) with tau_star the grid argmax.
    """
    points = []
    for tau in tau_grid:
        beta = beta_from_training(rho, tau)
        ch = ChannelParams(rho=rho, beta=beta)
        cont = ContentionParams(tau=tau, T=T, p_s=p_s)
        trace = optimize_backoff(ch, cont, x0=x0, eps=eps)
        sigma_star, x_star = trace.final
        points.append(TrainingPoint(tau=tau, beta=beta, x_star=x_star,
                                    sigma_star=sigma_star))
    best = max(points, key=lambda pt: pt.x_star)
    return points, best.tau
