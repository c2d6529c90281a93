"""Vectorised trial kernels.

Each kernel processes a whole batch of channel draws (B, K, M) at once
and reproduces, trial for trial, what the single-channel schedulers in
``schedulers`` compute.  The greedy loops run over scheduling steps
(at most M of them); everything across trials and users is numpy.
"""

from __future__ import annotations

import numpy as np

from .channel import null_space_basis_batch

__all__ = [
    "batch_adaptive_obf",
    "batch_olbf",
    "batch_zfs",
    "batch_zfdp",
    "batch_random_obf",
    "batch_random_olbf",
]


def _normalize_rows(H: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    gains = np.sum(np.abs(H) ** 2, axis=2)
    return gains, H / np.sqrt(gains)[:, :, None]


def _take_users(H: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Select one row per trial: (B, K, M)[arange, idx] -> (B, M)."""
    return H[np.arange(H.shape[0]), idx]


def batch_adaptive_obf(H: np.ndarray, P: float, r: int):
    """Adaptive OBF, fixed-r mode (r-way power split at every step).

    Returns (users, sinrs, rates): (B, r) int, (B, r) float, (B,) float.
    """
    B, K, M = H.shape
    if not (1 <= r <= min(K, M)):
        raise ValueError("need 1 <= r <= min(K, M)")
    gains, Hbar = _normalize_rows(H)
    noise = r / P

    users = np.empty((B, r), dtype=np.int64)
    p2_sched = np.empty((B, r))
    scheduled = np.zeros((B, K), dtype=bool)
    W = np.zeros((B, M, r), dtype=complex)

    k1 = np.argmax(gains, axis=1)
    users[:, 0] = k1
    p2_sched[:, 0] = 1.0
    scheduled[np.arange(B), k1] = True
    W[:, :, 0] = _take_users(Hbar, k1)

    interf = np.abs(np.einsum("bkm,bm->bk", np.conj(Hbar), W[:, :, 0])) ** 2
    for n in range(2, r + 1):
        p2 = np.clip(1.0 - interf, 0.0, 1.0)
        cand = gains * p2 / (gains * (1.0 - p2) + noise)
        cand = np.where(scheduled, -np.inf, cand)
        u = np.argmax(cand, axis=1)
        users[:, n - 1] = u
        p2_sched[:, n - 1] = np.clip(1.0 - interf[np.arange(B), u], 0.0, 1.0)
        scheduled[np.arange(B), u] = True
        hu = _take_users(Hbar, u)
        coeffs = np.einsum("bmn,bm->bn", np.conj(W[:, :, : n - 1]), hu)
        w = hu - np.einsum("bmn,bn->bm", W[:, :, : n - 1], coeffs)
        w = w / np.linalg.norm(w, axis=1, keepdims=True)
        W[:, :, n - 1] = w
        if n < r:
            interf = interf + np.abs(np.einsum("bkm,bm->bk", np.conj(Hbar), w)) ** 2

    g = np.take_along_axis(gains, users, axis=1)
    sinrs = g * p2_sched / (g * (1.0 - p2_sched) + noise)
    return users, sinrs, np.sum(np.log1p(sinrs), axis=1)


def batch_olbf(H: np.ndarray, P: float):
    """OLBF over a batch; always schedules exactly M users."""
    B, K, M = H.shape
    if K < M:
        raise ValueError("OLBF requires K >= M")
    gains, Hbar = _normalize_rows(H)
    noise = M / P

    users = np.empty((B, M), dtype=np.int64)
    sinrs = np.empty((B, M))
    scheduled = np.zeros((B, K), dtype=bool)

    k1 = np.argmax(gains, axis=1)
    users[:, 0] = k1
    sinrs[:, 0] = gains[np.arange(B), k1] * P / M
    scheduled[np.arange(B), k1] = True
    W2 = null_space_basis_batch(_take_users(Hbar, k1))

    for beam in range(M - 1):
        q2 = np.abs(np.einsum("bkm,bm->bk", Hbar, np.conj(W2[:, :, beam]))) ** 2
        cand = gains * q2 / (gains * (1.0 - q2) + noise)
        cand = np.where(scheduled, -np.inf, cand)
        u = np.argmax(cand, axis=1)
        users[:, beam + 1] = u
        sinrs[:, beam + 1] = cand[np.arange(B), u]
        scheduled[np.arange(B), u] = True
    return users, sinrs, np.sum(np.log1p(sinrs), axis=1)


def batch_zfdp(H: np.ndarray, P: float, r: int):
    """Greedy ZF dirty-paper baseline over a batch."""
    B, K, M = H.shape
    if not (1 <= r <= min(K, M)):
        raise ValueError("need 1 <= r <= min(K, M)")
    gains = np.sum(np.abs(H) ** 2, axis=2)

    users = np.empty((B, r), dtype=np.int64)
    gsel = np.empty((B, r))
    scheduled = np.zeros((B, K), dtype=bool)
    Q = np.zeros((B, M, r), dtype=complex)
    resid = gains.copy()

    for n in range(r):
        masked = np.where(scheduled, -np.inf, resid)
        u = np.argmax(masked, axis=1)
        users[:, n] = u
        gsel[:, n] = np.maximum(resid[np.arange(B), u], 0.0)
        scheduled[np.arange(B), u] = True
        hu = _take_users(H, u)
        coeffs = np.einsum("bmn,bm->bn", np.conj(Q[:, :, :n]), hu)
        q = hu - np.einsum("bmn,bn->bm", Q[:, :, :n], coeffs)
        nq = np.linalg.norm(q, axis=1, keepdims=True)
        Q[:, :, n] = np.where(nq > 0, q / np.where(nq == 0, 1.0, nq), 0.0)
        if n + 1 < r:
            resid = resid - np.abs(np.einsum("bkm,bm->bk", np.conj(H), Q[:, :, n])) ** 2
    sinrs = P / r * gsel
    return users, sinrs, np.sum(np.log1p(sinrs), axis=1)


def batch_zfs(H: np.ndarray, P: float, r: int):
    """Zero-forcing with greedy selection over a batch.

    Candidate evaluation inverts the (n x n) Gram matrix of the grown
    user set for every candidate; with r <= M <= a handful this is a
    batched small-matrix inverse.
    """
    B, K, M = H.shape
    if not (1 <= r <= min(K, M)):
        raise ValueError("need 1 <= r <= min(K, M)")

    users = np.empty((B, r), dtype=np.int64)
    scheduled = np.zeros((B, K), dtype=bool)

    for n in range(1, r + 1):
        S = np.stack([_take_users(H, users[:, i]) for i in range(n - 1)], axis=1) \
            if n > 1 else np.zeros((B, 0, M), dtype=complex)
        # grown set per candidate: (B, K, n, M)
        A = np.concatenate(
            [np.broadcast_to(S[:, None], (B, K, n - 1, M)), H[:, :, None, :]], axis=2
        )
        G = np.einsum("bknm,bkpm->bknp", A, np.conj(A))
        with np.errstate(all="ignore"):
            try:
                inv_diag = np.real(np.diagonal(np.linalg.inv(G), axis1=2, axis2=3))
            except np.linalg.LinAlgError:
                inv_diag = np.real(np.diagonal(np.linalg.pinv(G), axis1=2, axis2=3))
        bad = ~np.all(np.isfinite(inv_diag) & (inv_diag > 0), axis=2)
        rate = np.where(bad, -np.inf,
                        np.sum(np.log1p(P / r / np.where(inv_diag <= 0, 1.0, inv_diag)), axis=2))
        rate = np.where(scheduled, -np.inf, rate)
        u = np.argmax(rate, axis=1)
        users[:, n - 1] = u
        scheduled[np.arange(B), u] = True

    A = np.stack([_take_users(H, users[:, i]) for i in range(r)], axis=1)
    G = np.einsum("bnm,bpm->bnp", A, np.conj(A))
    inv_diag = np.real(np.diagonal(np.linalg.inv(G), axis1=1, axis2=2))
    sinrs = P / r / inv_diag
    return users, sinrs, np.sum(np.log1p(sinrs), axis=1)


def _random_distinct(rng: np.random.Generator, B: int, K: int, count: int) -> np.ndarray:
    """(B, count) distinct user indices, uniform over ordered selections."""
    u = rng.random((B, K))
    return np.argsort(u, axis=1)[:, :count]


def batch_random_obf(H: np.ndarray, P: float, r: int, rng: np.random.Generator) -> np.ndarray:
    """Unordered candidacy SINR vectors (B, r) under random OBF selection."""
    B, K, M = H.shape
    picks = _random_distinct(rng, B, K, r)
    gains, Hbar = _normalize_rows(H)
    noise = r / P

    W = np.zeros((B, M, r - 1), dtype=complex)
    for j in range(r - 1):
        hu = _take_users(Hbar, picks[:, j])
        coeffs = np.einsum("bmn,bm->bn", np.conj(W[:, :, :j]), hu)
        w = hu - np.einsum("bmn,bn->bm", W[:, :, :j], coeffs)
        W[:, :, j] = w / np.linalg.norm(w, axis=1, keepdims=True)

    probe = picks[:, r - 1]
    g = gains[np.arange(B), probe]
    hp = _take_users(Hbar, probe)
    comp = np.abs(np.einsum("bmn,bm->bn", np.conj(W), hp)) ** 2  # (B, r-1)
    vs = np.empty((B, r))
    vs[:, 0] = g * P / r
    interf = np.zeros(B)
    for n in range(2, r + 1):
        interf = interf + comp[:, n - 2]
        p2 = np.clip(1.0 - interf, 0.0, 1.0)
        vs[:, n - 1] = g * p2 / (g * (1.0 - p2) + noise)
    return vs


def batch_random_olbf(H: np.ndarray, P: float, rng: np.random.Generator) -> np.ndarray:
    """Unordered candidacy SINR vectors (B, M) under random OLBF selection."""
    B, K, M = H.shape
    picks = _random_distinct(rng, B, K, 2)
    probe, basis_user = picks[:, 0], picks[:, 1]
    gains, Hbar = _normalize_rows(H)
    noise = M / P

    W2 = null_space_basis_batch(_take_users(Hbar, basis_user))
    g = gains[np.arange(B), probe]
    hp = _take_users(Hbar, probe)
    q2 = np.abs(np.einsum("bmn,bm->bn", np.conj(W2), hp)) ** 2  # (B, M-1)
    vs = np.empty((B, M))
    vs[:, 0] = g * P / M
    vs[:, 1:] = g[:, None] * q2 / (g[:, None] * (1.0 - q2) + noise)
    return vs
