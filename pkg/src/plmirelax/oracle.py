"""Brute-force and randomized auditing tools.

Nothing here trusts the relaxations: the grid oracle evaluates the double
convex sum directly on a dense simplex grid, the randomized trials compare the
two relaxations against each other and against the grid, and the small
analytic checks (Young's inequality, the membership-square exchange identity)
guard the algebra the pattern relaxation is built on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .plmi import ConstantPlmi, SimplexPoint, counterexample_instance
from .relaxation import check_constant, generate_theorem1, generate_tuan

MAX_GRID_POINTS = 10**8


@dataclass(frozen=True, eq=False)
class GridReport:
    """Outcome of a dense grid scan of max-eigenvalue negativity.

    points_checked is C(m + r - 1, r - 1); worst_point attains worst_value
    (first hit in lexicographic order); passed means worst_value < 0.
    """

    grid_order: int
    points_checked: int
    worst_value: float
    worst_point: SimplexPoint
    passed: bool


def _grid_size(r: int, m: int) -> int:
    if r < 2:
        raise ValueError(f"need r >= 2, got {r}")
    if m < 1:
        raise ValueError(f"grid order m must be >= 1, got {m}")
    count = math.comb(m + r - 1, r - 1)
    if count > MAX_GRID_POINTS:
        raise ValueError(
            f"grid of order {m} at r={r} has {count} points, over the {MAX_GRID_POINTS} cap"
        )
    return count


def simplex_grid(r: int, m: int) -> list:
    """All points (k_1/m, ..., k_r/m), k non-negative ints summing to m.

    Lexicographic order in k; C(m + r - 1, r - 1) points.
    """
    _grid_size(r, m)
    inv = 1.0 / m
    return [
        SimplexPoint(np.array(k, dtype=float) * inv) for k in kernels.compositions(r, m)
    ]


def verify_plmi_on_grid(p: ConstantPlmi, m: int) -> GridReport:
    """Scan Phi(h) over the order-m grid for the worst max eigenvalue."""
    if not isinstance(p, ConstantPlmi):
        raise TypeError(f"expected ConstantPlmi, got {type(p).__name__}")
    expected = _grid_size(p.r, m)
    worst, counts, npts = kernels.grid_worst(p.phi, m)
    if npts != expected:
        raise AssertionError(f"grid kernel visited {npts} points, expected {expected}")
    point = SimplexPoint(np.array(counts, dtype=float) / m)
    return GridReport(m, npts, worst, point, worst < 0.0)


def _sample_array(rng: np.random.Generator, r: int, count: int) -> np.ndarray:
    """(count, r) array of simplex points: exponential variates, normalized."""
    g = rng.exponential(1.0, size=(count, r))
    return g / g.sum(axis=1, keepdims=True)


def sample_simplex(r: int, count: int, seed: int) -> list:
    """Pseudo-random interior points, deterministic in seed."""
    if r < 2:
        raise ValueError(f"need r >= 2, got {r}")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    h = _sample_array(np.random.default_rng(seed), r, count)
    return [SimplexPoint(row) for row in h]


class YoungCheck(NamedTuple):
    lhs: float
    rhs: float
    holds: bool
    equality: bool


def young_check(a: float, b: float, lam1: float) -> YoungCheck:
    """Young's inequality ab <= a^p/p + b^q/q with conjugate q = p/(p-1).

    equality is flagged when a^p and b^q agree to 1e-9 relative, the exact
    equality condition of the inequality.
    """
    if not lam1 > 1:
        raise ValueError(f"lam1 must be > 1, got {lam1}")
    if a < 0 or b < 0:
        raise ValueError(f"a and b must be >= 0, got a={a}, b={b}")
    lam2 = lam1 / (lam1 - 1.0)
    lhs = a * b
    ap = a**lam1
    bq = b**lam2
    rhs = ap / lam1 + bq / lam2
    holds = lhs <= rhs + 1e-12 * max(1.0, rhs)
    equality = abs(ap - bq) <= 1e-9 * max(1.0, ap)
    return YoungCheck(lhs, rhs, holds, equality)


def lemma3_residual(r: int, xi, h) -> float:
    """Frobenius gap of the membership-square exchange identity.

    With S_ij = Xi_ij + Xi_ji, the sums over j != i of h_i^2 S_ij and of
    h_j^2 S_ij coincide; the return value is ||LHS - RHS||_F, zero up to
    rounding for any square blocks.  Diagonal blocks never enter.
    """
    if r < 2:
        raise ValueError(f"need r >= 2, got {r}")
    rows = list(xi)
    if len(rows) != r or any(len(list(row)) != r for row in rows):
        raise ValueError(f"xi must be an {r} x {r} grid of square blocks")
    blocks = [[np.asarray(getattr(b, "a", b), dtype=float) for b in row] for row in rows]
    n = blocks[0][0].shape[0]
    for row in blocks:
        for b in row:
            if b.shape != (n, n):
                raise ValueError(f"blocks must all be {n} x {n}, got {b.shape}")
    if not isinstance(h, SimplexPoint):
        h = SimplexPoint(np.asarray(h, dtype=float))
    if h.r != r:
        raise ValueError(f"h has length {h.r}, expected r = {r}")
    w = h.h
    lhs = np.zeros((n, n))
    rhs = np.zeros((n, n))
    for i in range(r):
        for j in range(r):
            if j == i:
                continue
            s = blocks[i][j] + blocks[j][i]
            lhs += w[i] * w[i] * s
            rhs += w[j] * w[j] * s
    return float(np.linalg.norm(lhs - rhs))


def random_plmi(rng: np.random.Generator, r: int, n: int, stabilize_prob: float = 0.5) -> ConstantPlmi:
    """Random instance: entries uniform in [-1, 1], blocks symmetrized.

    With probability stabilize_prob the diagonal blocks are shifted by
    -0.2 I; unshifted draws are almost never feasible for the pair family,
    which would starve implication trials of interesting cases.
    """
    raw = rng.uniform(-1.0, 1.0, size=(r, r, n, n))
    phi = (raw + raw.swapaxes(2, 3)) / 2.0
    if rng.random() < stabilize_prob:
        idx = np.arange(r)
        phi[idx, idx] -= 0.2 * np.eye(n)
    return ConstantPlmi(phi)


@dataclass(frozen=True, eq=False)
class TrialOutcome:
    """One randomized comparison: both relaxation verdicts plus the grid audit.

    seed is None for the forced (non-sampled) counterexample trial; instance
    is kept so anomalies can be serialized and replayed.
    """

    tuan_feasible: bool
    thm1_feasible: bool
    oracle_pass: bool
    seed: int | None
    instance: ConstantPlmi


def _trial_for(inst: ConstantPlmi, seed: int | None, grid_order: int, tol: float) -> TrialOutcome:
    tuan = check_constant(generate_tuan(inst), tol)
    thm1 = check_constant(generate_theorem1(inst), tol)
    grid = verify_plmi_on_grid(inst, grid_order)
    return TrialOutcome(tuan.feasible, thm1.feasible, grid.passed, seed, inst)


def implication_trial(seed: int, r: int, n: int, grid_order: int = 60, tol: float = 1e-9) -> TrialOutcome:
    """Sample one instance and compare pair verdict, pattern verdict, grid."""
    if not 2 <= r <= 6:
        raise ValueError(f"r must be in 2..6, got {r}")
    if not 1 <= n <= 4:
        raise ValueError(f"n must be in 1..4, got {n}")
    inst = random_plmi(np.random.default_rng(seed), r, n)
    return _trial_for(inst, seed, grid_order, tol)


def counterexample_trial(grid_order: int = 60, tol: float = 1e-9) -> TrialOutcome:
    """The embedded separating instance, run through the same trial pipeline."""
    return _trial_for(counterexample_instance(), None, grid_order, tol)


def run_trials(
    trials: int,
    seed: int,
    r_values=(2, 3, 4),
    n_values=(1, 2, 3),
    grid_order: int = 60,
    tol: float = 1e-9,
) -> list:
    """Cycle (r, n) combinations; trial index t uses seed + t."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    combos = [(r, n) for r in r_values for n in n_values]
    out = []
    for t in range(trials):
        r, n = combos[t % len(combos)]
        out.append(implication_trial(seed + t, r, n, grid_order, tol))
    return out


def quadrant_counts(outcomes) -> dict:
    """Counts keyed by (tuan_feasible, thm1_feasible) truth pattern."""
    counts = {"tt": 0, "tf": 0, "ft": 0, "ff": 0}
    for o in outcomes:
        key = ("t" if o.tuan_feasible else "f") + ("t" if o.thm1_feasible else "f")
        counts[key] += 1
    return counts


def soundness_violations(outcomes) -> list:
    """Trials where the pattern relaxation accepted but the grid refused."""
    return [o for o in outcomes if o.thm1_feasible and not o.oracle_pass]


def implication_violations(outcomes) -> list:
    """Trials where the pair relaxation accepted but the pattern one refused."""
    return [o for o in outcomes if o.tuan_feasible and not o.thm1_feasible]


def young_suite() -> dict:
    """Deterministic inequality sweep plus constructed equality cases.

    Lattice: a, b in {0, 0.1, ..., 5}, p in {1.1, 1.5, 2, 3, 10}.  For each
    lattice a the pair (a, b = a^(p-1)) satisfies a^p = b^q exactly, so the
    equality flag must fire there.
    """
    values = [k / 10.0 for k in range(51)]
    lams = [1.1, 1.5, 2.0, 3.0, 10.0]
    violations = []
    equality_errors = []
    checked = 0
    for lam1 in lams:
        for a in values:
            for b in values:
                res = young_check(a, b, lam1)
                checked += 1
                if not res.holds:
                    violations.append((a, b, lam1, res))
        for a in values:
            b = a ** (lam1 - 1.0)
            res = young_check(a, b, lam1)
            checked += 1
            if not res.holds or not res.equality:
                equality_errors.append((a, b, lam1, res))
    return {"checked": checked, "violations": violations, "equality_errors": equality_errors}


def lemma3_suite(draws: int, seed: int, r_max: int = 5, n_max: int = 4) -> dict:
    """Random draws of the exchange identity; reports the worst relative gap."""
    if draws < 1:
        raise ValueError(f"draws must be >= 1, got {draws}")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(draws):
        r = int(rng.integers(2, r_max + 1))
        n = int(rng.integers(1, n_max + 1))
        raw = rng.uniform(-1.0, 1.0, size=(r, r, n, n))
        xi = (raw + raw.swapaxes(2, 3)) / 2.0
        h = _sample_array(rng, r, 1)[0]
        scale = max(1.0, max(float(np.linalg.norm(xi[i, j])) for i in range(r) for j in range(r)))
        rel = lemma3_residual(r, xi, h) / scale
        worst = max(worst, rel)
    return {"draws": draws, "worst_relative_residual": worst}
