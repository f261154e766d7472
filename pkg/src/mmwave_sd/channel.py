"""Sparse geometric mmWave channels and their rank-d truncations."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PathSet:
    """Complex gains, angles of departure and angles of arrival of L paths (radians)."""

    gains: np.ndarray
    aod: np.ndarray
    aoa: np.ndarray

    def __post_init__(self):
        n = len(self.gains)
        if n < 1 or len(self.aod) != n or len(self.aoa) != n:
            raise ValueError("gains, aod and aoa must share a length L >= 1")
        half = np.pi / 2
        for name in ("aod", "aoa"):
            ang = np.asarray(getattr(self, name), dtype=float)
            if np.any(np.abs(ang) > half):
                raise ValueError(f"{name} must lie in [-pi/2, pi/2]")

    @property
    def L(self):
        return len(self.gains)


@dataclass(frozen=True)
class TruthDecomposition:
    """Top-d singular triplets of a channel: ``H_d = left @ diag(singvals) @ right^H``."""

    left: np.ndarray
    singvals: np.ndarray
    right: np.ndarray

    @property
    def d(self):
        return len(self.singvals)

    def reconstruct(self):
        return (self.left * self.singvals) @ self.right.conj().T


def steering_vector(count, angle):
    """Half-wavelength ULA response with unit Euclidean norm.

    Entry ``n`` is ``exp(j*pi*n*sin(angle)) / sqrt(count)``.
    """
    if count < 1:
        raise ValueError(f"antenna count must be >= 1, got {count}")
    if not np.isfinite(angle):
        raise ValueError("angle must be finite")
    n = np.arange(count)
    return np.exp(1j * np.pi * n * np.sin(angle)) / np.sqrt(count)


def draw_paths(L, rng):
    """Draw L paths with CN(0, 1) gains and angles uniform on [-pi/2, pi/2]."""
    if L < 1:
        raise ValueError(f"number of paths must be >= 1, got {L}")
    gains = (rng.standard_normal(L) + 1j * rng.standard_normal(L)) / np.sqrt(2)
    aod = rng.uniform(-np.pi / 2, np.pi / 2, L)
    aoa = rng.uniform(-np.pi / 2, np.pi / 2, L)
    return PathSet(gains=gains, aod=aod, aoa=aoa)


def synthesize(paths, Nr, Nt):
    """Build the Nr x Nt channel ``sqrt(Nr*Nt/L) * sum_l g_l a_r(aoa_l) a_t(aod_l)^H``."""
    if Nr < 1 or Nt < 1:
        raise ValueError("Nr and Nt must be >= 1")
    ar = np.stack([steering_vector(Nr, a) for a in paths.aoa], axis=1)  # Nr x L
    at = np.stack([steering_vector(Nt, a) for a in paths.aod], axis=1)  # Nt x L
    scale = np.sqrt(Nr * Nt / paths.L)
    return scale * (ar * np.asarray(paths.gains)) @ at.conj().T


def truncate(H, d):
    """Split H into its top-d SVD part and the residual ``H - H_d``.

    Returns ``(TruthDecomposition, residual)``.
    """
    H = np.asarray(H)
    if not 1 <= d <= min(H.shape):
        raise ValueError(f"d must be in [1, {min(H.shape)}], got {d}")
    u, s, vh = np.linalg.svd(H, full_matrices=False)
    truth = TruthDecomposition(left=u[:, :d], singvals=s[:d], right=vh[:d].conj().T)
    return truth, H - truth.reconstruct()
