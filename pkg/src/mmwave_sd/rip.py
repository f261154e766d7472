"""Concentration bounds for the random sounder ensemble and Monte Carlo checks."""

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np
from scipy import stats

from .sounding import forward, generate

# Two-sided 3-sigma coverage, used for Wilson intervals on tail frequencies.
THREE_SIGMA = 1.0 - 2.0 * stats.norm.sf(3.0)


@dataclass
class RIPReport:
    alpha_grid: list
    empirical_tail: list
    theoretical_tail: list
    tail_ci_low: list
    tail_ci_high: list
    delta_hat: float
    trials: int
    dims: dict

    def to_dict(self):
        return asdict(self)

    def rows(self):
        """One flat dict per alpha, for CSV output."""
        for i, a in enumerate(self.alpha_grid):
            yield {
                **self.dims,
                "trials": self.trials,
                "alpha": a,
                "empirical_tail": self.empirical_tail[i],
                "tail_ci_low": self.tail_ci_low[i],
                "tail_ci_high": self.tail_ci_high[i],
                "theoretical_tail": self.theoretical_tail[i],
                "delta_hat": self.delta_hat,
            }


class MomentCheck(NamedTuple):
    lhs: float
    rhs: float
    lhs_stderr: float
    rhs_stderr: float

    @property
    def stderr(self):
        """Standard error of ``rhs - lhs``."""
        return math.hypot(self.lhs_stderr, self.rhs_stderr)


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


def normalized_energy(S, H):
    """``||sqrt(Nr*Nt/M) A(H)||^2``; batched over leading dimensions of H."""
    y = forward(S, H)
    return (S.Nr * S.Nt / S.M) * np.sum(np.abs(y) ** 2, axis=-1)


def tail_bound(alpha, M):
    """``2 exp(-(M/2)(alpha^2/2 - alpha^3/3))``."""
    _check_alpha(alpha)
    return 2.0 * math.exp(-(M / 2.0) * (alpha**2 / 2.0 - alpha**3 / 3.0))


def clt_tail(alpha, M):
    """Large-dimension Gaussian approximation ``2 exp(-M alpha^2 / 4)``."""
    _check_alpha(alpha)
    return 2.0 * math.exp(-M * alpha**2 / 4.0)


def rip_exponent(alpha, delta):
    """``q = alpha^2/4 - alpha^3/6 - ln(36 sqrt(2)/delta)/2``."""
    _check_alpha(alpha)
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return alpha**2 / 4.0 - alpha**3 / 6.0 - math.log(36.0 * math.sqrt(2.0) / delta) / 2.0


def rip_success_probability(alpha, delta, M):
    """Return ``(1 - 2 exp(-q M), vacuous)``.

    The value is not clamped.  ``vacuous`` is set when ``q <= 0``, in which case
    the expression is <= -1 (possibly -inf) and carries no information.
    """
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    q = rip_exponent(alpha, delta)
    with np.errstate(over="ignore"):
        value = 1.0 - 2.0 * float(np.exp(-q * M))
    return value, q <= 0.0


def min_observations(L, Nr, Nt):
    """Observation count ``2 L (Nt + Nr + 1)`` sufficient for the L-RIP."""
    return 2 * L * (Nt + Nr + 1)


def min_observations_bound(d, Nr, Nt):
    """Observation count ``4 d (Nt + Nr + 1)`` assumed by the error bound."""
    return 4 * d * (Nt + Nr + 1)


def channel_uses(M, N):
    return -(-M // N)


def random_low_rank(Nr, Nt, L, rng, size=None):
    """Unit-Frobenius rank-L matrices ``G1 G2^H / ||G1 G2^H||_F`` with Gaussian factors."""
    batch = () if size is None else (size,)

    def cn(*shape):
        return rng.standard_normal(batch + shape) + 1j * rng.standard_normal(batch + shape)

    H = cn(Nr, L) @ np.swapaxes(cn(Nt, L), -1, -2).conj()
    return H / np.linalg.norm(H, axis=(-2, -1), keepdims=True)


def estimate_delta(S, L, trials, rng, chunk=256):
    """Empirical lower bound on the L-RIP constant of the normalized map.

    Probes are drawn sequentially from ``rng``, so with the same seed the
    result for ``n`` probes never exceeds the result for ``n' > n``.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    worst = 0.0
    left = trials
    while left > 0:
        n = min(chunk, left)
        H = random_low_rank(S.Nr, S.Nt, L, rng, size=n)
        worst = max(worst, float(np.max(np.abs(normalized_energy(S, H) - 1.0))))
        left -= n
    return worst


def wilson_interval(count, n, confidence=THREE_SIGMA):
    ci = stats.binomtest(int(count), int(n)).proportion_ci(confidence, method="wilson")
    return ci.low, ci.high


def tail_frequencies(Nr, Nt, N, K, L, alphas, trials, seed):
    """Monte Carlo frequency of ``|normalized_energy - 1| >= alpha``.

    Each trial draws a fresh sounder set and an independent unit-norm rank-L
    channel from its own stream ``SeedSequence([seed, trial])``.
    """
    dev = np.empty(trials)
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        S = generate(K, N, Nr, Nt, rng)
        H = random_low_rank(Nr, Nt, L, rng)
        dev[t] = abs(normalized_energy(S, H) - 1.0)
    counts = [int(np.count_nonzero(dev >= a)) for a in alphas]
    return counts, dev


def rip_report(Nr, Nt, N, K, L, alphas, trials, seed, delta_probes=None):
    for a in alphas:
        _check_alpha(a)
    counts, _ = tail_frequencies(Nr, Nt, N, K, L, alphas, trials, seed)
    cis = [wilson_interval(c, trials) for c in counts]
    M = K * N
    rng = np.random.default_rng([seed, trials, 1])
    S = generate(K, N, Nr, Nt, rng)
    delta_hat = estimate_delta(S, L, delta_probes or trials, rng)
    return RIPReport(
        alpha_grid=list(alphas),
        empirical_tail=[c / trials for c in counts],
        theoretical_tail=[tail_bound(a, M) for a in alphas],
        tail_ci_low=[lo for lo, _ in cis],
        tail_ci_high=[hi for _, hi in cis],
        delta_hat=delta_hat,
        trials=trials,
        dims={"Nr": Nr, "Nt": Nt, "N": N, "K": K, "L": L},
    )


def moment_check(u, Nr, Nt, x, trials, rng, chunk=4096):
    """Monte Carlo estimates of ``E|a x|^(2u)`` and ``E|b |x||^(2u)``.

    ``a`` has i.i.d. entries ``exp(j theta)/sqrt(Nr Nt)`` (one sensing row) and
    ``b`` has i.i.d. entries ``+-1/sqrt(Nr Nt)``.
    """
    if u not in (1, 2):
        raise ValueError(f"moment order must be 1 or 2, got {u}")
    x = np.asarray(x, dtype=complex)
    n = Nr * Nt
    if x.shape != (n,):
        raise ValueError(f"x must have length {n}")
    if abs(np.linalg.norm(x) - 1.0) > 1e-10:
        raise ValueError("x must have unit Euclidean norm")
    xa = np.abs(x)
    lhs = np.empty(trials)
    rhs = np.empty(trials)
    scale = 1.0 / np.sqrt(n)
    for start in range(0, trials, chunk):
        m = min(chunk, trials - start)
        a = np.exp(1j * rng.uniform(0.0, 2 * np.pi, (m, n))) * scale
        b = rng.choice([-scale, scale], size=(m, n))
        lhs[start:start + m] = np.abs(a @ x) ** (2 * u)
        rhs[start:start + m] = np.abs(b @ xa) ** (2 * u)

    def sem(v):
        return float(np.std(v, ddof=1) / np.sqrt(len(v)))

    return MomentCheck(float(lhs.mean()), float(rhs.mean()), sem(lhs), sem(rhs))
