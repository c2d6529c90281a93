"""Greedy user scheduling algorithms (single-channel reference versions).

Four schedulers are provided:

* ``adaptive_obf`` -- greedy orthogonal beamforming where each new beam is
  the normalised projection of the winning user's channel direction onto
  the complement of the beams already assigned.  Supports an adaptive
  stopping rule (stop once the sum rate would decrease) or a forced
  number of scheduled users.
* ``olbf`` -- the first user fixes the whole orthonormal beam set (its
  channel direction plus a null-space basis); the remaining beams are
  assigned greedily, one user per beam.
* ``zfs_schedule`` / ``greedy_zfdp_schedule`` -- zero-forcing and
  zero-forcing dirty-paper baselines with greedy user selection.

``random_selection_obf`` / ``random_selection_olbf`` produce the
*unordered* candidacy SINR vectors of a randomly chosen probe user, the
raw object the analytic joint densities describe: beams are built from
other randomly selected users and the probe's candidacy SINR is recorded
at every scheduling position.

All SINRs are the scheduler's own metric (interference counted from the
beams known at the evaluation step), which is exactly the quantity the
analytic distributions model.  Rates are natural-log throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet, null_space_basis

__all__ = [
    "ScheduleOutcome",
    "adaptive_obf",
    "olbf",
    "zfs_schedule",
    "greedy_zfdp_schedule",
    "random_selection_obf",
    "random_selection_olbf",
    "sum_rate",
]


@dataclass(frozen=True)
class ScheduleOutcome:
    users: tuple          # scheduled user indices, in scheduling order
    W: np.ndarray         # M x n beamforming matrix (columns follow users)
    sinrs: np.ndarray     # linear SINRs, one per scheduled user
    sum_rate: float       # sum ln(1 + sinr), nats
    n_scheduled: int

    def __post_init__(self):
        if len(set(self.users)) != len(self.users):
            raise ValueError("scheduled users must be distinct")
        if len(self.users) != self.n_scheduled or self.W.shape[1] != self.n_scheduled:
            raise ValueError("inconsistent scheduled-user count")


def sum_rate(sinrs) -> float:
    """Sum rate sum_i ln(1 + sinr_i) in nats."""
    sinrs = np.asarray(sinrs, dtype=float)
    if sinrs.size and sinrs.min() < 0:
        raise ValueError("SINRs must be nonnegative")
    return float(np.sum(np.log1p(sinrs)))


def _table_sinr(gain: float, p2: float, noise: float) -> float:
    """SINR = ||h||^2 p^2 / (||h||^2 (1 - p^2) + noise)."""
    p2 = min(max(p2, 0.0), 1.0)
    return gain * p2 / (gain * (1.0 - p2) + noise)


def _argmax_lowest_index(values: np.ndarray, allowed: np.ndarray) -> int:
    """Index of the maximum among allowed entries; ties go to the lowest index."""
    masked = np.where(allowed, values, -np.inf)
    return int(np.argmax(masked))


def adaptive_obf(channels: ChannelSet, P: float, force_r: int | None = None) -> ScheduleOutcome:
    """Adaptive orthogonal beamforming with greedy user selection.

    With ``force_r=None`` the candidate SINR at step n uses the n-way
    power split n/P and the algorithm stops as soon as adding a user
    would not increase the sum rate.  With ``force_r=r`` exactly r users
    are scheduled and the r-way split r/P is used at every evaluation,
    matching the fixed-r setting the analytic distributions assume.
    """
    H = channels.H
    K, M = H.shape
    if force_r is not None and not (1 <= force_r <= min(K, M)):
        raise ValueError("force_r must satisfy 1 <= r <= min(K, M)")

    gains = np.sum(np.abs(H) ** 2, axis=1)
    norms = np.sqrt(gains)
    Hbar = H / norms[:, None]

    remaining = np.ones(K, dtype=bool)
    k1 = _argmax_lowest_index(gains, remaining)
    remaining[k1] = False
    users = [k1]
    W = Hbar[k1][:, None].copy()
    p2s = [1.0]
    max_users = min(K, M) if force_r is None else force_r

    def rates_at(n: int) -> float:
        noise = (n if force_r is None else force_r) / P
        return sum_rate([_table_sinr(gains[u], p2s[i], noise) for i, u in enumerate(users[:n])])

    best_rate = rates_at(1)
    while len(users) < max_users:
        n = len(users) + 1
        noise = (n if force_r is None else force_r) / P
        proj = W.conj().T @ Hbar.T                       # (n-1, K)
        p2 = 1.0 - np.sum(np.abs(proj) ** 2, axis=0)     # residual fraction per user
        p2 = np.clip(p2, 0.0, 1.0)
        cand = gains * p2 / (gains * (1.0 - p2) + noise)
        u = _argmax_lowest_index(cand, remaining)
        users.append(u)
        p2s.append(float(p2[u]))
        remaining[u] = False
        w = Hbar[u] - W @ (W.conj().T @ Hbar[u])
        W = np.concatenate([W, (w / np.linalg.norm(w))[:, None]], axis=1)
        new_rate = rates_at(n)
        if force_r is None and new_rate <= best_rate:
            users.pop()
            p2s.pop()
            W = W[:, :-1]
            break
        best_rate = new_rate

    n = len(users)
    noise = (n if force_r is None else force_r) / P
    sinrs = np.array([_table_sinr(gains[u], p2s[i], noise) for i, u in enumerate(users)])
    return ScheduleOutcome(tuple(users), W, sinrs, sum_rate(sinrs), n)


def olbf(channels: ChannelSet, P: float) -> ScheduleOutcome:
    """Orthogonal linear beamforming: fixed beam set, greedy assignment."""
    H = channels.H
    K, M = H.shape
    if K < M:
        raise ValueError("OLBF requires K >= M")

    gains = np.sum(np.abs(H) ** 2, axis=1)
    Hbar = H / np.sqrt(gains)[:, None]
    remaining = np.ones(K, dtype=bool)
    k1 = _argmax_lowest_index(gains, remaining)
    remaining[k1] = False
    W2 = null_space_basis(Hbar[k1])
    noise = M / P

    users = [k1]
    sinrs = [gains[k1] * P / M]
    for beam in range(M - 1):
        q2 = np.abs(Hbar @ np.conj(W2[:, beam])) ** 2
        cand = gains * q2 / (gains * (1.0 - q2) + noise)
        u = _argmax_lowest_index(cand, remaining)
        remaining[u] = False
        users.append(u)
        sinrs.append(float(cand[u]))
    W = np.concatenate([Hbar[k1][:, None], W2], axis=1)
    sinrs = np.asarray(sinrs)
    return ScheduleOutcome(tuple(users), W, sinrs, sum_rate(sinrs), M)


def zfs_schedule(channels: ChannelSet, P: float, r: int) -> ScheduleOutcome:
    """Zero-forcing beamforming with greedy user selection.

    Each step adds the user maximising the zero-forcing sum rate of the
    grown set under pseudo-inverse beamformers and a uniform P/r split.
    Runs exactly r steps; numerically rank-deficient candidates are
    skipped.
    """
    H = channels.H
    K, M = H.shape
    if not (1 <= r <= min(K, M)):
        raise ValueError("need 1 <= r <= min(K, M)")

    def zf_gains(rows: list[int]) -> np.ndarray | None:
        A = H[rows]
        G = A @ A.conj().T
        try:
            inv_diag = np.real(np.diagonal(np.linalg.inv(G)))
        except np.linalg.LinAlgError:
            return None
        if np.any(inv_diag <= 0) or not np.all(np.isfinite(inv_diag)):
            return None
        return 1.0 / inv_diag

    users: list[int] = []
    for _ in range(r):
        best_u, best_rate = -1, -np.inf
        for u in range(K):
            if u in users:
                continue
            g = zf_gains(users + [u])
            if g is None:
                continue
            rate = sum_rate(P / r * g)
            if rate > best_rate:
                best_u, best_rate = u, rate
        users.append(best_u)

    g = zf_gains(users)
    sinrs = P / r * g
    A = H[users]
    Wraw = A.conj().T @ np.linalg.inv(A @ A.conj().T)
    W = Wraw / np.linalg.norm(Wraw, axis=0, keepdims=True)
    return ScheduleOutcome(tuple(users), W, sinrs, sum_rate(sinrs), r)


def greedy_zfdp_schedule(channels: ChannelSet, P: float, r: int) -> ScheduleOutcome:
    """Greedy zero-forcing dirty-paper baseline with uniform power P/r.

    Successive encoding removes interference from earlier users, so user
    i's effective gain is the squared norm of its channel component
    orthogonal to the previously scheduled channels (the squared R
    diagonal of the QR factorisation in scheduling order).
    """
    H = channels.H
    K, M = H.shape
    if not (1 <= r <= min(K, M)):
        raise ValueError("need 1 <= r <= min(K, M)")

    users: list[int] = []
    Q = np.zeros((M, 0), dtype=complex)
    gains_sched: list[float] = []
    for _ in range(r):
        proj = Q.conj().T @ H.T                        # (n, K)
        resid = np.sum(np.abs(H) ** 2, axis=1) - np.sum(np.abs(proj) ** 2, axis=0)
        resid = np.maximum(resid, 0.0)
        allowed = np.ones(K, dtype=bool)
        allowed[users] = False
        u = _argmax_lowest_index(resid, allowed)
        users.append(u)
        gains_sched.append(float(resid[u]))
        q = H[u] - Q @ (Q.conj().T @ H[u])
        nq = np.linalg.norm(q)
        if nq > 0:
            Q = np.concatenate([Q, (q / nq)[:, None]], axis=1)
    sinrs = P / r * np.asarray(gains_sched)
    return ScheduleOutcome(tuple(users), Q, sinrs, sum_rate(sinrs), r)


def random_selection_obf(
    channels: ChannelSet, P: float, r: int, rng: np.random.Generator
) -> np.ndarray:
    """Unordered candidacy SINRs (v_1 .. v_r) under random selection.

    r distinct users are drawn uniformly; the first r-1 build the
    orthogonal beams exactly as the greedy scheduler would, and the last
    one acts as the probe whose candidacy SINR is evaluated at every
    step with the r-way power split.  The output is non-increasing by
    construction.
    """
    H = channels.H
    K, M = H.shape
    if not (1 <= r <= min(K, M)):
        raise ValueError("need 1 <= r <= min(K, M)")
    picks = rng.permutation(K)[:r]
    beam_users, probe = picks[: r - 1], picks[r - 1]
    gains = np.sum(np.abs(H) ** 2, axis=1)
    Hbar = H / np.sqrt(gains)[:, None]

    W = np.zeros((M, 0), dtype=complex)
    for u in beam_users:
        w = Hbar[u] - W @ (W.conj().T @ Hbar[u])
        W = np.concatenate([W, (w / np.linalg.norm(w))[:, None]], axis=1)

    g = gains[probe]
    noise = r / P
    vs = [g * P / r]
    for n in range(2, r + 1):
        interf = float(np.sum(np.abs(W[:, : n - 1].conj().T @ Hbar[probe]) ** 2))
        p2 = min(max(1.0 - interf, 0.0), 1.0)
        vs.append(_table_sinr(g, p2, noise))
    return np.asarray(vs)


def random_selection_olbf(
    channels: ChannelSet, P: float, rng: np.random.Generator
) -> np.ndarray:
    """Unordered candidacy SINRs (v_1 .. v_M) for OLBF under random selection.

    The first drawn user is the probe: v_1 is its SINR in the first-user
    role (beam aligned with its own channel).  A second drawn user fixes
    the orthonormal beam set, and v_n for n >= 2 is the probe's SINR on
    beam n of that set.  In the z = v/(1+v) domain the output always
    satisfies z_2 + ... + z_M <= z_1.
    """
    H = channels.H
    K, M = H.shape
    if K < 2:
        raise ValueError("need at least two users (probe + basis user)")
    probe, basis_user = rng.permutation(K)[:2]
    gains = np.sum(np.abs(H) ** 2, axis=1)
    Hbar = H / np.sqrt(gains)[:, None]
    W2 = null_space_basis(Hbar[basis_user])

    g = gains[probe]
    noise = M / P
    vs = [g * P / M]
    for beam in range(M - 1):
        q2 = float(np.abs(np.conj(W2[:, beam]) @ Hbar[probe]) ** 2)
        vs.append(_table_sinr(g, q2, noise))
    return np.asarray(vs)
