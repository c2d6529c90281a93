"""Random channel generation and the small complex linear algebra kit.

Channels are IID circularly-symmetric complex Gaussian with unit total
variance per entry (0.5 per real/imaginary part).  Generation is backed
by counter-based Philox streams so that trial t of a run is always drawn
from the substream (master_seed, t-block) regardless of how trials are
batched or parallelised.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SystemParams",
    "ChannelSet",
    "BeamformerMatrix",
    "draw_channels",
    "draw_channel_batch",
    "substream",
    "project_complement",
    "null_space_basis",
    "null_space_basis_batch",
]

ORTHO_TOL = 1e-10


@dataclass(frozen=True)
class SystemParams:
    """Antenna count M, user count K, total power P (linear), target r."""

    M: int
    K: int
    P: float
    r: int

    def __post_init__(self):
        if not (self.K >= self.M >= 1):
            raise ValueError(f"need K >= M >= 1, got K={self.K}, M={self.M}")
        if not (1 <= self.r <= self.M):
            raise ValueError(f"need 1 <= r <= M, got r={self.r}")
        if self.P <= 0:
            raise ValueError("P must be positive (linear scale)")


@dataclass(frozen=True)
class ChannelSet:
    """K x M complex channel matrix, one row per user."""

    H: np.ndarray
    seed: tuple = (0, 0)

    def __post_init__(self):
        H = np.asarray(self.H, dtype=complex)
        if H.ndim != 2:
            raise ValueError("H must be a K x M matrix")
        if not np.all(np.isfinite(H)):
            raise ValueError("channel entries must be finite")
        object.__setattr__(self, "H", H)

    @property
    def K(self) -> int:
        return self.H.shape[0]

    @property
    def M(self) -> int:
        return self.H.shape[1]


@dataclass(frozen=True)
class BeamformerMatrix:
    """M x n matrix with orthonormal columns (n <= M)."""

    W: np.ndarray

    def __post_init__(self):
        W = np.asarray(self.W, dtype=complex)
        if W.ndim != 2 or W.shape[1] > W.shape[0]:
            raise ValueError("W must be M x n with n <= M")
        gram = W.conj().T @ W
        if np.max(np.abs(gram - np.eye(W.shape[1]))) > ORTHO_TOL:
            raise ValueError("columns are not orthonormal")
        object.__setattr__(self, "W", W)

    @property
    def n(self) -> int:
        return self.W.shape[1]


def substream(seed: int, index: int) -> np.random.Generator:
    """Deterministic child stream ``index`` of a master seed."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(index)])))


def draw_channel_batch(K: int, M: int, rng: np.random.Generator, count: int = 1) -> np.ndarray:
    """Draw ``count`` IID K x M unit-variance complex Gaussian channels."""
    shape = (count, K, M)
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) / np.sqrt(2.0)


def draw_channels(params: SystemParams, seed: int, stream: int = 0) -> ChannelSet:
    """Draw one ChannelSet from substream ``stream`` of ``seed``."""
    rng = substream(seed, stream)
    H = draw_channel_batch(params.K, params.M, rng, count=1)[0]
    return ChannelSet(H=H, seed=(int(seed), int(stream)))


def project_complement(W, h: np.ndarray) -> np.ndarray:
    """Project h onto the orthogonal complement of span(W): (I - W W^H) h.

    W may be a BeamformerMatrix, an M x n array, or None/empty for the
    identity projector.
    """
    h = np.asarray(h, dtype=complex)
    if isinstance(W, BeamformerMatrix):
        W = W.W
    if W is None or (hasattr(W, "size") and W.size == 0):
        return h.copy()
    W = np.asarray(W, dtype=complex)
    if W.shape[0] != h.shape[0]:
        raise ValueError("dimension mismatch between W and h")
    return h - W @ (W.conj().T @ h)


def null_space_basis(v: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the complement of a unit vector v.

    Deterministic Gram-Schmidt against the canonical basis, skipping the
    canonical vector with the largest overlap with v; column order follows
    ascending canonical index.  No phase rotation is applied beyond the
    normalisation itself.
    """
    v = np.asarray(v, dtype=complex)
    M = v.shape[0]
    nv = np.linalg.norm(v)
    if nv == 0:
        raise ValueError("zero vector has no well-defined complement")
    if abs(nv - 1.0) > 1e-12:
        raise ValueError("v must be unit norm")
    skip = int(np.argmax(np.abs(v)))
    cols = []
    for j in range(M):
        if j == skip:
            continue
        e = np.zeros(M, dtype=complex)
        e[j] = 1.0
        u = e - v * np.conj(v[j])
        for b in cols:
            u = u - b * (b.conj() @ e)
        u = u / np.linalg.norm(u)
        cols.append(u)
    return np.stack(cols, axis=1)


def null_space_basis_batch(V: np.ndarray) -> np.ndarray:
    """Vectorised null_space_basis for a batch of unit vectors (B, M).

    Produces exactly the same basis per row as the single-vector version.
    """
    V = np.asarray(V, dtype=complex)
    B, M = V.shape
    skip = np.argmax(np.abs(V), axis=1)
    # canonical indices in ascending order with the skipped one removed
    idx = np.broadcast_to(np.arange(M), (B, M)).copy()
    idx[np.arange(B), skip] = M  # push skipped index past the end
    order = np.sort(idx, axis=1)[:, : M - 1]
    out = np.empty((B, M, M - 1), dtype=complex)
    for c in range(M - 1):
        j = order[:, c]
        e = np.zeros((B, M), dtype=complex)
        e[np.arange(B), j] = 1.0
        u = e - V * np.conj(V[np.arange(B), j])[:, None]
        for p in range(c):
            b = out[:, :, p]
            coef = np.conj(b[np.arange(B), j])
            u = u - b * coef[:, None]
        u = u / np.linalg.norm(u, axis=1, keepdims=True)
        out[:, :, c] = u
    return out
