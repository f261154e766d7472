"""Estimation accuracy and achievable rate metrics."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PrecoderPair:
    W: np.ndarray  # combiner, Nr x d
    F: np.ndarray  # precoder, Nt x d


def nmse(H_ref, H_hat):
    """``||H_ref - H_hat||_F^2 / ||H_ref||_F^2`` for one realization."""
    H_ref = np.asarray(H_ref)
    H_hat = np.asarray(H_hat)
    if H_ref.shape != H_hat.shape:
        raise ValueError(f"shape mismatch: {H_ref.shape} vs {H_hat.shape}")
    ref = np.linalg.norm(H_ref) ** 2
    if ref == 0:
        raise ValueError("reference channel has zero norm")
    return float(np.linalg.norm(H_ref - H_hat) ** 2 / ref)


def precoders_from_estimate(H_hat, d):
    """Fully digital SVD precoding: top-d left/right singular vectors of the estimate."""
    H_hat = np.asarray(H_hat)
    if not 1 <= d <= min(H_hat.shape):
        raise ValueError(f"d must be in [1, {min(H_hat.shape)}], got {d}")
    u, _, vh = np.linalg.svd(H_hat, full_matrices=False)
    return PrecoderPair(W=u[:, :d], F=vh[:d].conj().T)


def spectrum_efficiency(H, P, sigma2):
    """``log2 det(I + R_n^-1 Ht Ht^H / sigma2)`` with ``Ht = W^H H F`` and ``R_n = W^H W``."""
    if not sigma2 > 0:
        raise ValueError("noise variance must be > 0")
    Ht = P.W.conj().T @ np.asarray(H) @ P.F
    Rn = P.W.conj().T @ P.W
    A = np.eye(Ht.shape[0]) + np.linalg.solve(Rn, Ht @ Ht.conj().T) / sigma2
    sign, logdet = np.linalg.slogdet(A)
    if sign.real <= 0:
        raise np.linalg.LinAlgError("rate matrix is not positive definite")
    return float(logdet / np.log(2.0))
