"""Pure numpy implementations of the hot kernels.

Same contracts as the compiled extension: lexicographic composition
enumeration, worst grid eigenvalue of the double convex sum, and dwell-switched
closed-loop simulation.  The compiled module is preferred at import time when
available; this module is the fallback and the reference for equivalence
tests.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

BACKEND_NAME = "python"
# largest block size the compiled eigenvalue kernel handles; the dispatcher
# routes anything bigger here, so the cap is shared
MAX_COMPILED_N = 12

_CHUNK = 65536


def compositions(r: int, m: int):
    """All length-r tuples of non-negative ints summing to m, lex ascending.

    Stars-and-bars off itertools.combinations, which already yields cut
    positions in the order that makes the counts lexicographic.
    """
    for cuts in itertools.combinations(range(m + r - 1), r - 1):
        prev = -1
        out = []
        for c in cuts:
            out.append(c - prev - 1)
            prev = c
        out.append(m + r - 2 - prev)
        yield tuple(out)


def composition_count(r: int, m: int) -> int:
    return math.comb(m + r - 1, r - 1)


def _stacked_max_eig(mats: np.ndarray) -> np.ndarray:
    """Largest eigenvalue of each symmetric matrix in a (c, n, n) stack."""
    n = mats.shape[-1]
    if n == 1:
        return mats[:, 0, 0].copy()
    if n == 2:
        half_tr = (mats[:, 0, 0] + mats[:, 1, 1]) / 2.0
        half_gap = (mats[:, 0, 0] - mats[:, 1, 1]) / 2.0
        return half_tr + np.sqrt(half_gap * half_gap + mats[:, 0, 1] * mats[:, 0, 1])
    return np.linalg.eigvalsh(mats)[:, -1]


def grid_worst(phi: np.ndarray, m: int):
    """Scan the order-m simplex grid for the worst max eigenvalue of Phi(h).

    phi is the (r, r, n, n) block array.  Returns (worst_value, worst_counts,
    points_checked) with worst_counts the integer composition k of the first
    point attaining the maximum (h = k/m).
    """
    r = phi.shape[0]
    # fold the double sum into r diagonal terms and r(r-1)/2 symmetrized pairs
    diag = np.stack([phi[i, i] for i in range(r)])
    pair_idx = [(i, j) for i in range(r) for j in range(i + 1, r)]
    pairs = (
        np.stack([phi[i, j] + phi[j, i] for i, j in pair_idx])
        if pair_idx
        else np.zeros((0,) + phi.shape[2:])
    )
    pi = np.array([i for i, _ in pair_idx], dtype=np.intp)
    pj = np.array([j for _, j in pair_idx], dtype=np.intp)

    best = -np.inf
    best_counts = None
    npts = 0
    gen = compositions(r, m)
    while True:
        chunk = list(itertools.islice(gen, _CHUNK))
        if not chunk:
            break
        counts = np.array(chunk, dtype=np.int64)
        h = counts / float(m)
        g = np.einsum("cr,rab->cab", h * h, diag)
        if len(pair_idx):
            g += np.einsum("cp,pab->cab", h[:, pi] * h[:, pj], pairs)
        vals = _stacked_max_eig(g)
        k = int(np.argmax(vals))
        if vals[k] > best:
            best = float(vals[k])
            best_counts = tuple(int(v) for v in counts[k])
        npts += len(chunk)
    return best, best_counts, npts


def simulate_dwell(A, B, K, schedule, x0, dt: float, steps: int):
    """Integrate the switched closed loop x' = (A(h) + B(h) K(h)) x.

    schedule holds one membership row per dwell interval; within a dwell the
    dynamics are constant, so fixed-step fourth-order integration is exactly
    the degree-4 Taylor step matrix applied `steps` times.  Returns the states
    at the dwell boundaries, shape (len(schedule) + 1, n_x).
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    K = np.asarray(K, dtype=float)
    schedule = np.asarray(schedule, dtype=float)
    nx = A.shape[1]
    eye = np.eye(nx)
    states = np.empty((schedule.shape[0] + 1, nx))
    x = np.asarray(x0, dtype=float).reshape(nx).copy()
    states[0] = x
    for d in range(schedule.shape[0]):
        h = schedule[d]
        M = np.tensordot(h, A, axes=1) + np.tensordot(h, B, axes=1) @ np.tensordot(h, K, axes=1)
        step = eye + dt * (M @ (eye + (dt / 2.0) * (M @ (eye + (dt / 3.0) * (M @ (eye + (dt / 4.0) * M))))))
        x = np.linalg.matrix_power(step, steps) @ x
        states[d + 1] = x
    return states
