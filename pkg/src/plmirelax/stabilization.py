"""State-feedback synthesis for rule-blended linear systems.

Blocks Phi_ij = (A_i Q + B_i F_j)' + A_i Q + B_i F_j are affine in the packed
decision vector (Q upper triangle row-major, then F_1..F_r row-major), so the
relaxation families from the relaxation module become semidefinite
feasibility problems; Q > 0 shares the margin variable with the negativity
constraints.  Includes the two-parameter benchmark system, the (a, b) plane
sweep, and controller validation by sampling and switched simulation.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from ._kernels_py import _stacked_max_eig
from .oracle import _sample_array
from .plmi import AffinePlmi, SymMat
from .relaxation import generate_naive, generate_theorem1, generate_tuan
from .sdp import (
    AffineSymExpr,
    FeasibilityResult,
    SdpProblem,
    SolverOptions,
    Status,
    default_eps_feas,
    solve_feasibility,
    verify_solution,
)

PACKING = "Q-upper-then-F-rowmajor"

KINDS = {"tuan": "tuan", "thm1": "thm1", "theorem1": "thm1", "naive": "naive"}

_GENERATORS = {"tuan": generate_tuan, "thm1": generate_theorem1, "naive": generate_naive}


def normalize_kind(kind: str) -> str:
    try:
        return KINDS[str(kind).strip().lower()]
    except KeyError:
        raise ValueError(f"unknown relaxation kind {kind!r}; use tuan, thm1 or naive") from None


@dataclass(frozen=True, eq=False)
class FuzzySystem:
    """Rule-blended plant x' = sum_i h_i (A_i x + B_i u)."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.ascontiguousarray(self.A, dtype=float)
        B = np.ascontiguousarray(self.B, dtype=float)
        if A.ndim != 3 or A.shape[1] != A.shape[2]:
            raise ValueError(f"A must have shape (r, n_x, n_x), got {A.shape}")
        if B.ndim != 3 or B.shape[:2] != A.shape[:2]:
            raise ValueError(f"B must have shape (r, n_x, n_u), got {B.shape}")
        if A.shape[0] < 2:
            raise ValueError(f"need r >= 2 rules, got {A.shape[0]}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
            raise ValueError("system matrices must be finite")
        A.flags.writeable = False
        B.flags.writeable = False
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def r(self) -> int:
        return self.A.shape[0]

    @property
    def state_dim(self) -> int:
        return self.A.shape[1]

    @property
    def input_dim(self) -> int:
        return self.B.shape[2]


def example_system(a: float, b: float) -> FuzzySystem:
    """The three-rule, two-state benchmark with tunable third rule."""
    A = np.array(
        [
            [[1.59, -7.29], [0.01, 0.0]],
            [[0.02, -4.64], [0.35, 0.21]],
            [[-float(a), -4.33], [0.0, 0.0]],
        ]
    )
    B = np.array(
        [
            [[1.0], [0.0]],
            [[8.0], [0.0]],
            [[-float(b) + 6.0], [-1.0]],
        ]
    )
    return FuzzySystem(A, B)


def q_entry_order(nx: int) -> list:
    """Upper-triangle coordinates in packing order."""
    return [(u, v) for u in range(nx) for v in range(u, nx)]


def num_decision_vars(nx: int, nu: int, r: int) -> int:
    return nx * (nx + 1) // 2 + r * nu * nx


def pack_decision(Q, F) -> np.ndarray:
    """Pack (Q, F_1..F_r) into the flat decision vector."""
    Qa = Q.a if isinstance(Q, SymMat) else np.asarray(Q, dtype=float)
    nx = Qa.shape[0]
    parts = [np.array([Qa[u, v] for u, v in q_entry_order(nx)])]
    parts += [np.asarray(f, dtype=float).reshape(-1) for f in F]
    return np.concatenate(parts)


def unpack_decision(x, nx: int, nu: int, r: int):
    """Inverse of pack_decision: (Q as SymMat, tuple of F_j)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != num_decision_vars(nx, nu, r):
        raise ValueError(
            f"x has length {x.size}, expected {num_decision_vars(nx, nu, r)}"
        )
    Qa = np.zeros((nx, nx))
    for t, (u, v) in enumerate(q_entry_order(nx)):
        Qa[u, v] = x[t]
        Qa[v, u] = x[t]
    nq = nx * (nx + 1) // 2
    F = tuple(
        x[nq + j * nu * nx : nq + (j + 1) * nu * nx].reshape(nu, nx) for j in range(r)
    )
    return SymMat(Qa), F


def _q_basis(nx: int, num_vars: int) -> np.ndarray:
    """Coefficients of Q itself: symmetric unit basis in the Q slots."""
    coeff = np.zeros((num_vars, nx, nx))
    for t, (u, v) in enumerate(q_entry_order(nx)):
        coeff[t, u, v] = 1.0
        coeff[t, v, u] = 1.0
    return coeff


def q_positivity_expr(nx: int, nu: int, r: int) -> AffineSymExpr:
    """Q as an affine expression of the packed vector, for the Q > 0 side."""
    return AffineSymExpr(np.zeros((nx, nx)), _q_basis(nx, num_decision_vars(nx, nu, r)))


def build_phi(sys: FuzzySystem) -> AffinePlmi:
    """The closed-loop blocks as affine expressions, zero constant term."""
    r, nx, nu = sys.r, sys.state_dim, sys.input_dim
    m = num_decision_vars(nx, nu, r)
    nq = nx * (nx + 1) // 2
    order = q_entry_order(nx)
    zero = np.zeros((nx, nx))
    grid = []
    for i in range(r):
        Ai, Bi = sys.A[i], sys.B[i]
        # Q-slot coefficients depend only on i
        q_coeff = np.zeros((nq, nx, nx))
        for t, (u, v) in enumerate(order):
            g = np.zeros((nx, nx))
            g[:, v] += Ai[:, u]
            if v != u:
                g[:, u] += Ai[:, v]
            q_coeff[t] = g + g.T
        row = []
        for j in range(r):
            coeff = np.zeros((m, nx, nx))
            coeff[:nq] = q_coeff
            base = nq + j * nu * nx
            for p in range(nu):
                for q in range(nx):
                    g = np.zeros((nx, nx))
                    g[:, q] = Bi[:, p]
                    coeff[base + p * nx + q] = g + g.T
            row.append(AffineSymExpr(zero, coeff))
        grid.append(tuple(row))
    return AffinePlmi(tuple(grid))


@dataclass(frozen=True, eq=False)
class SynthesisResult:
    """A certified controller: Lyapunov-shape Q, pre-gains F, gains K = F Q^-1.

    x is the packed decision vector the solver returned, kept so the result
    can be re-verified against the original constraints.
    """

    Q: SymMat
    F: tuple
    K: tuple
    margin: float
    x: np.ndarray


@dataclass(frozen=True, eq=False)
class SynthesisOutcome:
    """Status plus the result when feasible; margin kept for all statuses."""

    status: Status
    result: SynthesisResult | None = None
    margin: float | None = None
    detail: str = ""


def synthesis_problem(sys: FuzzySystem, kind: str, var_bound: float = 1e4) -> SdpProblem:
    """The labeled SDP for one relaxation kind, Q-positivity included."""
    lmi = _GENERATORS[normalize_kind(kind)](build_phi(sys))
    q_pd = q_positivity_expr(sys.state_dim, sys.input_dim, sys.r)
    return SdpProblem(lmi.constraints, (("Q_pd", q_pd),), var_bound)


def synthesize(sys: FuzzySystem, kind: str, opts: SolverOptions | None = None) -> SynthesisOutcome:
    """Solve the chosen relaxation and recover the controller on success."""
    if opts is None:
        opts = SolverOptions()
    prob = synthesis_problem(sys, kind, opts.var_bound if opts.var_bound is not None else 1e4)
    res: FeasibilityResult = solve_feasibility(prob, opts)
    if res.status is not Status.Feasible:
        return SynthesisOutcome(res.status, None, res.margin, res.detail)
    eps = opts.eps_feas if opts.eps_feas is not None else default_eps_feas(prob)
    if not verify_solution(prob, res.x, eps / 10.0):
        return SynthesisOutcome(
            Status.NumericalFailure, None, res.margin, "solution failed re-verification"
        )
    Q, F = unpack_decision(res.x, sys.state_dim, sys.input_dim, sys.r)
    K = tuple(np.linalg.solve(Q.a, f.T).T for f in F)
    return SynthesisOutcome(
        Status.Feasible,
        SynthesisResult(Q, F, K, float(res.margin), res.x),
        res.margin,
        res.detail,
    )


@dataclass(frozen=True, eq=False)
class FeasibilityMap:
    """Full sweep grid: cells[(ia, ib)][kind] is a SynthesisOutcome."""

    a_values: np.ndarray
    b_values: np.ndarray
    kinds: tuple
    cells: dict

    def outcome(self, ia: int, ib: int, kind: str) -> SynthesisOutcome:
        return self.cells[(ia, ib)][normalize_kind(kind)]


def _parse_range(rng) -> np.ndarray:
    lo, hi, steps = rng
    steps = int(steps)
    if steps < 1:
        raise ValueError(f"range needs at least 1 step, got {steps}")
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise ValueError(f"range bounds must be finite, got {rng}")
    return np.linspace(float(lo), float(hi), steps)


def _sweep_cell(args):
    ia, ib, a, b, kinds, opts = args
    sys = example_system(a, b)
    out = {}
    for kind in kinds:
        try:
            out[kind] = synthesize(sys, kind, opts)
        except Exception as e:  # record, never abort the sweep
            out[kind] = SynthesisOutcome(Status.NumericalFailure, None, None, f"error: {e}")
    return ia, ib, out


def sweep(
    a_range=(0.0, 5.0, 26),
    b_range=(0.0, 5.0, 26),
    kinds=("tuan", "thm1"),
    opts: SolverOptions | None = None,
    jobs: int = 1,
    progress=None,
) -> FeasibilityMap:
    """Synthesize every (a, b) cell under every kind; failures are recorded.

    jobs > 1 distributes cells over worker processes.
    """
    a_values = _parse_range(a_range)
    b_values = _parse_range(b_range)
    kinds = tuple(dict.fromkeys(normalize_kind(k) for k in kinds))
    if not kinds:
        raise ValueError("no relaxation kinds selected")
    if opts is None:
        opts = SolverOptions()
    tasks = [
        (ia, ib, float(a), float(b), kinds, opts)
        for ia, a in enumerate(a_values)
        for ib, b in enumerate(b_values)
    ]
    cells = {}
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for ia, ib, out in pool.map(_sweep_cell, tasks, chunksize=8):
                cells[(ia, ib)] = out
                if progress is not None:
                    progress(len(cells), len(tasks))
    else:
        for task in tasks:
            ia, ib, out = _sweep_cell(task)
            cells[(ia, ib)] = out
            if progress is not None:
                progress(len(cells), len(tasks))
    return FeasibilityMap(a_values, b_values, kinds, cells)


def write_sweep_csv(fmap: FeasibilityMap, path) -> None:
    """One row per (cell, kind): a,b,kind,status,margin (margin empty if unknown)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("a,b,kind,status,margin\n")
        for ia, a in enumerate(fmap.a_values):
            for ib, b in enumerate(fmap.b_values):
                for kind in fmap.kinds:
                    o = fmap.cells[(ia, ib)][kind]
                    margin = "" if o.margin is None else f"{o.margin:.17g}"
                    fh.write(f"{float(a)!r},{float(b)!r},{kind},{o.status.value},{margin}\n")


def write_feasible_points(fmap: FeasibilityMap, out_dir) -> list:
    """Per kind, a plotting-friendly `a b` points file of the feasible cells."""
    import os

    paths = []
    for kind in fmap.kinds:
        path = os.path.join(str(out_dir), f"feasible_{kind}.dat")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("# a b\n")
            for ia, a in enumerate(fmap.a_values):
                for ib, b in enumerate(fmap.b_values):
                    if fmap.cells[(ia, ib)][kind].status is Status.Feasible:
                        fh.write(f"{float(a)!r} {float(b)!r}\n")
        paths.append(path)
    return paths


def synthesis_to_json(res: SynthesisResult) -> dict:
    """Row-major flat lists; Q first, then one list per rule for F and K."""
    return {
        "Q": [float(v) for v in res.Q.a.reshape(-1)],
        "F": [[float(v) for v in f.reshape(-1)] for f in res.F],
        "K": [[float(v) for v in k.reshape(-1)] for k in res.K],
        "margin": float(res.margin),
        "packing": PACKING,
    }


class SimCheck(NamedTuple):
    finite: bool
    v_decreasing: bool
    final_ratio: float


@dataclass(frozen=True, eq=False)
class ValidationReport:
    """Sampling audit plus switched-simulation audit of one controller.

    sampling_worst_h is the sampled membership attaining sampling_worst, the
    offending point whenever the sampling check fails.
    """

    sampling_passed: bool
    sampling_worst: float
    sampling_worst_h: np.ndarray
    sim_checks: tuple
    sim_passed: bool

    @property
    def passed(self) -> bool:
        return self.sampling_passed and self.sim_passed


def closed_loop_blocks(sys: FuzzySystem, Q, F) -> np.ndarray:
    """Phi_ij rebuilt directly from (Q, F), independent of the affine packing."""
    Qa = Q.a if isinstance(Q, SymMat) else np.asarray(Q, dtype=float)
    r, nx = sys.r, sys.state_dim
    phi = np.empty((r, r, nx, nx))
    for i in range(r):
        for j in range(r):
            g = sys.A[i] @ Qa + sys.B[i] @ np.asarray(F[j], dtype=float)
            phi[i, j] = g + g.T
    return phi


def validate_controller(
    sys: FuzzySystem,
    res: SynthesisResult,
    samples: int = 10000,
    seed: int = 0,
    n_states: int = 8,
    dwell: float = 0.05,
    horizon: float = 10.0,
    dt: float = 1e-3,
    decay_ratio: float = 1e-3,
) -> ValidationReport:
    """Audit a synthesized controller without trusting the solver.

    Sampling side: the double convex sum of the rebuilt blocks must have a
    strictly negative max eigenvalue at every sampled membership.  Simulation
    side: from n_states random unit initial states, under a fresh random
    piecewise-constant membership schedule, V = x' Q^-1 x must strictly
    decrease across consecutive dwell boundaries and the final state must
    shrink below decay_ratio of the initial norm.
    """
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    rng = np.random.default_rng(seed)
    r, nx = sys.r, sys.state_dim

    phi = closed_loop_blocks(sys, res.Q, res.F)
    H = _sample_array(rng, r, samples)
    g = np.einsum("ci,cj,ijab->cab", H, H, phi)
    vals = _stacked_max_eig(g)
    worst_idx = int(np.argmax(vals))
    sampling_worst = float(vals[worst_idx])
    sampling_passed = bool(sampling_worst < 0.0)

    ndwell = int(round(horizon / dwell))
    steps = int(round(dwell / dt))
    K = np.stack([np.asarray(k, dtype=float) for k in res.K])
    checks = []
    for _ in range(n_states):
        x0 = rng.standard_normal(nx)
        x0 /= np.linalg.norm(x0)
        schedule = _sample_array(rng, r, ndwell)
        with np.errstate(over="ignore", invalid="ignore", under="ignore"):
            states = kernels.simulate_dwell(sys.A, sys.B, K, schedule, x0, dt, steps)
            finite = bool(np.all(np.isfinite(states)))
            if finite:
                y = np.linalg.solve(res.Q.a, states.T)
                v = np.einsum("kn,nk->k", states, y)
                v_dec = bool(np.all(np.diff(v) < 0.0))
                ratio = float(np.linalg.norm(states[-1]) / np.linalg.norm(states[0]))
            else:
                v_dec = False
                ratio = float("inf")
        checks.append(SimCheck(finite, v_dec, ratio))
    sim_passed = all(c.finite and c.v_decreasing and c.final_ratio < decay_ratio for c in checks)
    return ValidationReport(sampling_passed, sampling_worst, H[worst_idx], tuple(checks), sim_passed)
