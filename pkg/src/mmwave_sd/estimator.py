"""Low-rank subspace decomposition (SD) estimator and the matrix factorization baseline.

SD fits ``H_hat = U diag(sigma) V^H`` to the observations under the relaxed
budgets ``tr(U^H U) <= d``, ``tr(V^H V) <= d`` and ``||sigma||^2 <= beta``, by
block coordinate descent over U, V and sigma.  Each block update is a least
squares problem over a ball, solved exactly by :func:`spherical_ls`.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .channel import truncate
from .sounding import adjoint, forward


@dataclass(frozen=True)
class SDConfig:
    d: int
    beta: float
    max_iters: int = 50
    stagnation_tol: float = 1e-8
    kkt_tol: float = 1e-8

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if not self.beta > 0:
            raise ValueError("beta must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not (self.stagnation_tol > 0 and self.kkt_tol > 0):
            raise ValueError("tolerances must be > 0")


@dataclass(frozen=True)
class EstimateTriple:
    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    @property
    def matrix(self):
        return (self.U * self.sigma) @ self.V.conj().T


@dataclass
class IterationTrace:
    initial_objective: float
    objectives: list = field(default_factory=list)
    step_objectives: list = field(default_factory=list)
    iterations_run: int = 0
    stop_reason: str = "max_iters"


def _as_finite(a, name):
    a = np.asarray(a, dtype=complex)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite values")
    return a


def spherical_ls(G, y, budget, kkt_tol=1e-8, full_output=False):
    """Minimize ``||y - G x||^2`` subject to ``||x||^2 <= budget``.

    If the minimum-norm least squares solution is feasible it is returned with
    ``mu = 0``.  Otherwise the solution is the ridge estimate
    ``(G^H G + mu I)^-1 G^H y`` with ``mu > 0`` chosen so that its squared norm
    equals the budget; the squared norm ``g(mu)`` is strictly decreasing, so
    the root is bracketed and found to full floating point resolution, always
    landing on the feasible side.

    Returns ``x``, or ``(x, mu)`` when ``full_output`` is set.
    """
    G = _as_finite(G, "G")
    y = _as_finite(y, "y")
    if not budget > 0:
        raise ValueError(f"budget must be > 0, got {budget}")
    u, s, vh = np.linalg.svd(G, full_matrices=False)
    keep = s > max(G.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    u, s, vh = u[:, keep], s[keep], vh[keep]
    c = u.conj().T @ y
    sc2 = (s * np.abs(c)) ** 2
    s2 = s**2

    def g(mu):
        return float(np.sum(sc2 / (s2 + mu) ** 2))

    mu = 0.0
    if g(0.0) > budget:
        # g(mu) <= ||G^H y||^2 / mu^2, so this mu is feasible.
        hi = np.sqrt(np.sum(sc2) / budget)
        mu = brentq(lambda m: g(m) - budget, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps)
        while g(mu) > budget:
            mu = np.nextafter(mu, np.inf)
        if budget - g(mu) > kkt_tol * budget:
            raise RuntimeError(f"ridge multiplier search stalled: g(mu)={g(mu)}, budget={budget}")
    x = vh.conj().T @ (s * c / (s2 + mu))
    return (x, mu) if full_output else x


def objective(S, y, est):
    """``||y - A(U diag(sigma) V^H)||^2``."""
    return float(np.sum(np.abs(y - forward(S, est.matrix)) ** 2))


def _left_design(S, B):
    """Matrix G with ``A(X B) = G vec(X)`` for X of shape (Nr, r); B is (r, Nt).

    Channel use k contributes the block ``(B f_k)^T kron W_k^H``.
    """
    a = S.precoders @ B.T  # (K, r): row k is B f_k
    G = np.einsum("kj,kri->kijr", a, S.combiners.conj())
    return G.reshape(S.M, B.shape[0] * S.Nr)


def _right_design(S, C):
    """Matrix G with ``A(C X^H) = G vec(X^H)`` for X of shape (Nt, r); C is (Nr, r).

    Channel use k contributes the block ``f_k^T kron (W_k^H C)``.
    """
    WC = np.einsum("kri,rj->kij", S.combiners.conj(), C)  # (K, N, r)
    G = np.einsum("kn,kij->kinj", S.precoders, WC)
    return G.reshape(S.M, S.Nt * C.shape[1])


def _from_vec_col(x, rows, cols):
    # inverse of column-major vec
    return x.reshape(cols, rows).T


def _from_vec_conj_transpose(x, rows, cols):
    # X with vec(X^H) = x; X is rows x cols
    return x.reshape(rows, cols).conj()


def solve_U(S, y, sigma, V, d, kkt_tol=1e-8):
    """Column subspace update: best U with ``tr(U^H U) <= d`` for fixed sigma, V."""
    G = _left_design(S, np.asarray(sigma)[:, None] * V.conj().T)
    x = spherical_ls(G, y, d, kkt_tol)
    return _from_vec_col(x, S.Nr, V.shape[1])


def solve_V(S, y, U, sigma, d, kkt_tol=1e-8):
    """Row subspace update: best V with ``tr(V^H V) <= d`` for fixed U, sigma.

    Uses ``W_k^H U Sigma V^H f_k = (f_k^T kron W_k^H U Sigma) vec(V^H)``.
    """
    G = _right_design(S, U * np.asarray(sigma))
    x = spherical_ls(G, y, d, kkt_tol)
    return _from_vec_conj_transpose(x, S.Nt, U.shape[1])


def power_design(S, U, V):
    """Columns ``A(u_i v_i^H)``, shape (M, d)."""
    WU = np.einsum("kri,rj->kij", S.combiners.conj(), U)  # (K, N, d)
    vf = S.precoders @ V.conj()  # (K, d): entry (k, j) is v_j^H f_k
    return (WU * vf[:, None, :]).reshape(S.M, U.shape[1])


def solve_Sigma(S, y, U, V, beta, kkt_tol=1e-8):
    """Power allocation update: best complex diagonal with ``||sigma||^2 <= beta``."""
    if not beta > 0:
        raise ValueError("beta must be > 0")
    return spherical_ls(power_design(S, U, V), y, beta, kkt_tol)


def _check_rank(S, d):
    if not 1 <= d <= min(S.Nr, S.Nt):
        raise ValueError(f"rank must be in [1, {min(S.Nr, S.Nt)}], got {d}")


def _phase_fix(u, vh):
    """Rotate singular pairs so each left vector's largest-modulus entry is real >= 0."""
    idx = np.argmax(np.abs(u), axis=0)
    ph = u[idx, np.arange(u.shape[1])]
    mag = np.abs(ph)
    rot = np.where(mag > 0, ph.conj() / np.where(mag > 0, mag, 1.0), 1.0)
    return u * rot, vh * rot.conj()[:, None]


def spectral_init(S, y, d):
    """Top-d SVD of ``A*(y)`` as ``(U, sigma, V)``."""
    H0 = adjoint(S, y)
    u, s, vh = np.linalg.svd(H0, full_matrices=False)
    u, vh = _phase_fix(u[:, :d], vh[:d])
    return u, s[:d].astype(complex), vh.conj().T


def sd_estimate(S, y, config):
    """Alternating minimization for the relaxed subspace decomposition problem.

    Starts from the top-d SVD of ``A*(y)`` and cycles U -> V -> sigma until
    ``config.max_iters`` sweeps or until a sweep decreases the objective by
    less than ``config.stagnation_tol`` relative.  Returns
    ``(EstimateTriple, IterationTrace)``.
    """
    y = _as_finite(y, "y")
    d = config.d
    _check_rank(S, d)
    U, sigma, V = spectral_init(S, y, d)
    # Start feasible so that every block update is non-increasing.
    power = float(np.sum(np.abs(sigma) ** 2))
    if power > config.beta:
        sigma = sigma * np.sqrt(config.beta / power)
        while np.sum(np.abs(sigma) ** 2) > config.beta:
            sigma = sigma * (1.0 - np.finfo(float).eps)
    est = EstimateTriple(U, sigma, V)
    prev = objective(S, y, est)
    trace = IterationTrace(initial_objective=prev)
    for it in range(1, config.max_iters + 1):
        U = solve_U(S, y, sigma, V, d, config.kkt_tol)
        trace.step_objectives.append(objective(S, y, EstimateTriple(U, sigma, V)))
        V = solve_V(S, y, U, sigma, d, config.kkt_tol)
        trace.step_objectives.append(objective(S, y, EstimateTriple(U, sigma, V)))
        sigma = solve_Sigma(S, y, U, V, config.beta, config.kkt_tol)
        est = EstimateTriple(U, sigma, V)
        cur = objective(S, y, est)
        trace.step_objectives.append(cur)
        trace.objectives.append(cur)
        trace.iterations_run = it
        if cur == 0.0 or prev - cur < config.stagnation_tol * prev:
            trace.stop_reason = "stagnation"
            break
        prev = cur
    return est, trace


def mf_estimate(S, y, L, iters=50, rng=None, full_output=False):
    """Matrix factorization baseline ``H_hat = Lf R^H`` by alternating least squares.

    Both factors are unconstrained; each half-sweep is an exact minimum-norm
    least squares solve.  The initialization is the top-L SVD of ``A*(y)``
    (shared with :func:`sd_estimate`); ``rng`` is only used to draw a random
    right factor if ``A*(y)`` vanishes.

    Returns ``H_hat``, or ``(H_hat, objectives)`` with one objective value per
    half-sweep when ``full_output`` is set.
    """
    y = _as_finite(y, "y")
    _check_rank(S, L)
    U, s, R = spectral_init(S, y, L)
    Lf = U * s
    if not np.any(s) and rng is not None:
        R = rng.standard_normal(R.shape) + 1j * rng.standard_normal(R.shape)
    objs = []
    for _ in range(iters):
        x = np.linalg.lstsq(_left_design(S, R.conj().T), y, rcond=None)[0]
        Lf = _from_vec_col(x, S.Nr, L)
        objs.append(float(np.sum(np.abs(y - forward(S, Lf @ R.conj().T)) ** 2)))
        x = np.linalg.lstsq(_right_design(S, Lf), y, rcond=None)[0]
        R = _from_vec_conj_transpose(x, S.Nt, L)
        objs.append(float(np.sum(np.abs(y - forward(S, Lf @ R.conj().T)) ** 2)))
    H_hat = Lf @ R.conj().T
    return (H_hat, objs) if full_output else H_hat


def _check_delta(delta2d):
    if not 0.0 <= delta2d < 1.0:
        raise ValueError(f"RIP constant must lie in [0, 1), got {delta2d}")


def realized_error_bound(H, d, delta2d, S, noise_vector, beta):
    """``min(4 Nt Nr ||A(H - H_d) + n_eff||^2 / ((1 - delta) M), 2 beta)``."""
    _check_delta(delta2d)
    _, resid = truncate(H, d)
    r = forward(S, resid) + np.asarray(noise_vector)
    first = 4 * S.Nt * S.Nr * float(np.sum(np.abs(r) ** 2)) / ((1.0 - delta2d) * S.M)
    return min(first, 2.0 * beta)


def mse_bound(sigma2, Nr, Nt, delta2d, beta):
    """``min(4 Nt Nr sigma^2 / (1 - delta), 2 beta)``."""
    _check_delta(delta2d)
    return min(4 * Nt * Nr * sigma2 / (1.0 - delta2d), 2.0 * beta)
