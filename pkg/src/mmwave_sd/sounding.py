"""Random constant-modulus sounders and the affine measurement map.

A sounder set holds K analog combiners ``W_k`` (Nr x N) and K analog precoders
``f_k`` (Nt).  Channel use k yields N observations ``W_k^H H f_k``, stacked into
a length ``M = K*N`` vector.  Observation ``m = k*N + i`` (0-based) equals
``tr(X_m^H H)`` with the rank-one factor ``X_m = W_k[:, i] f_k^H``.
"""

from dataclasses import dataclass

import numpy as np

# Default cap on the materialized sensing matrix (bytes).
MATRIX_BUDGET_BYTES = 512 * 2**20


class SensingMatrixTooLarge(MemoryError):
    pass


@dataclass(frozen=True)
class SounderSet:
    combiners: np.ndarray  # (K, Nr, N)
    precoders: np.ndarray  # (K, Nt)

    @property
    def K(self):
        return self.combiners.shape[0]

    @property
    def Nr(self):
        return self.combiners.shape[1]

    @property
    def N(self):
        return self.combiners.shape[2]

    @property
    def Nt(self):
        return self.precoders.shape[1]

    @property
    def M(self):
        return self.K * self.N


@dataclass(frozen=True)
class Observation:
    """Noisy samples ``y = A(H) + n_eff``.

    ``noise`` keeps the effective noise ``W_k^H n_k`` so that realized error
    bounds can be evaluated; estimators only ever see ``y``.
    """

    y: np.ndarray
    noise_var: float
    noise: np.ndarray


def snr_db_to_noise_var(snr_db):
    """SNR per channel use is ``1/sigma^2``."""
    return 10.0 ** (-np.asarray(snr_db, dtype=float) / 10.0)


def _unit_phases(rng, shape):
    return np.exp(1j * rng.uniform(0.0, 2 * np.pi, shape))


def generate(K, N, Nr, Nt, rng):
    """Draw K sounders with i.i.d. uniform phases on [0, 2*pi)."""
    for name, val in (("K", K), ("N", N), ("Nr", Nr), ("Nt", Nt)):
        if val < 1:
            raise ValueError(f"{name} must be >= 1, got {val}")
    combiners = _unit_phases(rng, (K, Nr, N)) / np.sqrt(Nr)
    precoders = _unit_phases(rng, (K, Nt)) / np.sqrt(Nt)
    return SounderSet(combiners=combiners, precoders=precoders)


def factors(S):
    """All rank-one factors as an (M, Nr, Nt) array; ``[m] = W_k[:, i] f_k^H``."""
    X = np.einsum("kri,kt->kirt", S.combiners, S.precoders.conj())
    return X.reshape(S.M, S.Nr, S.Nt)


def _check_channel(S, H):
    H = np.asarray(H)
    if H.shape[-2:] != (S.Nr, S.Nt):
        raise ValueError(f"channel shape {H.shape[-2:]} does not match sounders ({S.Nr}, {S.Nt})")
    return H


def forward(S, H):
    """Apply the affine map: entry m is ``tr(X_m^H H)``.

    ``H`` may carry leading batch dimensions; the output then has shape
    ``batch + (M,)``.
    """
    H = _check_channel(S, H)
    Hf = np.einsum("...rt,kt->...kr", H, S.precoders)
    y = np.einsum("kri,...kr->...ki", S.combiners.conj(), Hf)
    return y.reshape(H.shape[:-2] + (S.M,))


def adjoint(S, y):
    """``sum_m y[m] X_m`` as an Nr x Nt matrix."""
    y = np.asarray(y)
    if y.shape != (S.M,):
        raise ValueError(f"expected a length-{S.M} vector, got shape {y.shape}")
    Wy = np.einsum("kri,ki->kr", S.combiners, y.reshape(S.K, S.N))
    return Wy.T @ S.precoders.conj()


def observe(S, H, noise_var, rng):
    """Sample ``y = A(H) + [W_1^H n_1; ...; W_K^H n_K]`` with ``n_k ~ CN(0, noise_var I)``."""
    if noise_var < 0:
        raise ValueError(f"noise variance must be >= 0, got {noise_var}")
    clean = forward(S, H)
    shape = (S.K, S.Nr)
    n = np.sqrt(noise_var / 2) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    noise = np.einsum("kri,kr->ki", S.combiners.conj(), n).reshape(S.M)
    return Observation(y=clean + noise, noise_var=float(noise_var), noise=noise)


def to_matrix(S, max_bytes=MATRIX_BUDGET_BYTES):
    """Materialize the M x (Nr*Nt) sensing matrix with rows ``vec(X_m)^H``.

    ``vec`` stacks columns, so ``to_matrix(S) @ H.flatten(order="F")`` equals
    ``forward(S, H)``.
    """
    nbytes = S.M * S.Nr * S.Nt * np.dtype(np.complex128).itemsize
    if nbytes > max_bytes:
        raise SensingMatrixTooLarge(
            f"sensing matrix needs {nbytes} bytes, budget is {max_bytes}; use forward/adjoint"
        )
    X = factors(S)
    return X.transpose(0, 2, 1).reshape(S.M, S.Nr * S.Nt).conj()
