"""Feasibility SDP layer: affine symmetric expressions and a margin solver.

A problem is a list of labeled affine matrix expressions required negative
definite (and optionally positive definite), all in one shared decision
vector x.  We solve the margin program

    maximize t  s.t.  E(x) + t I <= 0 for each negative-side expression,
                      E(x) - t I >= 0 for each positive-side expression,
                      ||x||_2 <= R,

with cvxopt's conelp, and classify by the margin measured from eigenvalues at
the returned point rather than by solver status alone: a point whose measured
margin beats the threshold is Feasible no matter what the solver said, an
optimal solve whose margin falls short is Infeasible, and everything else is
NumericalFailure, never a silent Infeasible.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .plmi import SymMat, _symmetrized


@dataclass(frozen=True, eq=False)
class AffineSymExpr:
    """Affine symmetric-matrix expression c0 + sum_k x_k coeff[k].

    c0 is n x n and coeff stacks the num_vars coefficient matrices as a
    (num_vars, n, n) array; every slice must be symmetric.
    """

    c0: np.ndarray
    coeff: np.ndarray

    def __post_init__(self):
        c0 = np.asarray(self.c0, dtype=float)
        if c0.ndim != 2:
            raise ValueError(f"c0 must be 2-d, got ndim {c0.ndim}")
        c0 = _symmetrized(c0, "AffineSymExpr c0")
        coeff = np.asarray(self.coeff, dtype=float)
        if coeff.size == 0:
            coeff = coeff.reshape(0, c0.shape[0], c0.shape[0])
        if coeff.ndim != 3 or coeff.shape[1:] != c0.shape:
            raise ValueError(
                f"coeff must have shape (num_vars, {c0.shape[0]}, {c0.shape[0]}), "
                f"got {coeff.shape}"
            )
        coeff = _symmetrized(coeff, "AffineSymExpr coeff")
        object.__setattr__(self, "c0", c0)
        object.__setattr__(self, "coeff", coeff)

    @property
    def n(self) -> int:
        return self.c0.shape[0]

    @property
    def num_vars(self) -> int:
        return self.coeff.shape[0]

    def at(self, x) -> SymMat:
        return evaluate_expr(self, x)

    def __add__(self, other):
        if isinstance(other, AffineSymExpr):
            if other.n != self.n or other.num_vars != self.num_vars:
                raise ValueError("operands must share n and num_vars")
            return AffineSymExpr(self.c0 + other.c0, self.coeff + other.coeff)
        return NotImplemented

    def __mul__(self, s):
        if np.isscalar(s):
            return AffineSymExpr(float(s) * self.c0, float(s) * self.coeff)
        return NotImplemented

    __rmul__ = __mul__


def constant_expr(m, num_vars: int = 0) -> AffineSymExpr:
    """Wrap a constant matrix as an affine expression with zero coefficients."""
    a = m.a if isinstance(m, SymMat) else np.asarray(m, dtype=float)
    return AffineSymExpr(a, np.zeros((num_vars, a.shape[0], a.shape[0])))


def evaluate_expr(e: AffineSymExpr, x) -> SymMat:
    """c0 + sum_k x_k coeff[k] at a concrete decision vector."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != e.num_vars:
        raise ValueError(f"x has length {x.size}, expression has num_vars = {e.num_vars}")
    if e.num_vars == 0:
        return SymMat(e.c0)
    return SymMat(e.c0 + np.tensordot(x, e.coeff, axes=1))


class Status(enum.Enum):
    Feasible = "feasible"
    Infeasible = "infeasible"
    NumericalFailure = "numfail"


@dataclass(frozen=True)
class SolverOptions:
    """Knobs for solve_feasibility.

    eps_feas None picks a data-scaled threshold: 1e-7 times the largest
    constant-term Frobenius norm; if every constant term is zero, 1e-7 times
    var_bound times the largest coefficient norm; 1e-7 if that is also zero.
    var_bound None defers to the problem's own var_bound field.
    """

    eps_feas: float | None = None
    max_iter: int = 100
    var_bound: float | None = None
    seed: int = 0


def _as_labeled(items) -> tuple:
    out = []
    for item in items:
        label, e = item
        if not isinstance(e, AffineSymExpr):
            raise TypeError(f"constraint {label!r} must be an AffineSymExpr, got {type(e).__name__}")
        out.append((str(label), e))
    return tuple(out)


@dataclass(frozen=True, eq=False)
class SdpProblem:
    """Joint feasibility system over one decision vector.

    constraints: (label, expr) pairs required negative definite.
    psd_constraints: (label, expr) pairs required positive definite.
    var_bound: radius R of the ball searched; a returned x has ||x||_2 <= R.
    """

    constraints: tuple
    psd_constraints: tuple = ()
    var_bound: float = 1e4

    def __post_init__(self):
        neg = _as_labeled(self.constraints)
        pos = _as_labeled(self.psd_constraints)
        if not neg and not pos:
            raise ValueError("problem has no constraints")
        m = (neg + pos)[0][1].num_vars
        for _, e in neg + pos:
            if e.num_vars != m:
                raise ValueError("all constraints must share num_vars")
        if not self.var_bound > 0:
            raise ValueError(f"var_bound must be positive, got {self.var_bound}")
        object.__setattr__(self, "constraints", neg)
        object.__setattr__(self, "psd_constraints", pos)

    @property
    def num_vars(self) -> int:
        return ((self.constraints + self.psd_constraints)[0][1]).num_vars


@dataclass(frozen=True)
class FeasibilityResult:
    """Outcome of solve_feasibility.

    x is present exactly when status is Feasible.  margin is measured from
    eigenvalues at the solver's point: the minimum over constraints of the
    spectrum's distance from zero on the required side, negative if violated.
    """

    status: Status
    margin: float | None = None
    x: np.ndarray | None = None
    detail: str = ""


def default_eps_feas(p: SdpProblem, var_bound: float | None = None) -> float:
    """Feasibility threshold scaled to the problem data; see SolverOptions."""
    R = p.var_bound if var_bound is None else var_bound
    exprs = [e for _, e in p.constraints + p.psd_constraints]
    c0_scale = max(float(np.linalg.norm(e.c0)) for e in exprs)
    if c0_scale > 0:
        return 1e-7 * c0_scale
    coeff_scale = max(
        (float(np.linalg.norm(c)) for e in exprs for c in e.coeff), default=0.0
    )
    if coeff_scale > 0:
        return 1e-7 * R * coeff_scale
    return 1e-7


def measured_margin(p: SdpProblem, x) -> float:
    """Worst signed definiteness margin at x, from eigenvalues.

    Negative-side constraints contribute -lambda_max(E(x)); positive-side
    constraints contribute +lambda_min(E(x)).  The minimum over all of them is
    positive exactly when x strictly satisfies everything.
    """
    worst = np.inf
    for _, e in p.constraints:
        worst = min(worst, -float(np.linalg.eigvalsh(e.at(x).a)[-1]))
    for _, e in p.psd_constraints:
        worst = min(worst, float(np.linalg.eigvalsh(e.at(x).a)[0]))
    return worst


def verify_solution(p: SdpProblem, x, tol: float = 1e-9) -> bool:
    """Strict independent check: every constraint holds with margin > tol."""
    if tol < 0:
        raise ValueError(f"tol must be >= 0, got {tol}")
    return measured_margin(p, x) > tol


def solve_feasibility(p: SdpProblem, opts: SolverOptions | None = None) -> FeasibilityResult:
    """Margin maximization via cvxopt conelp; classification is certificate-first."""
    from cvxopt import matrix, solvers

    if opts is None:
        opts = SolverOptions()
    if opts.max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {opts.max_iter}")
    R = float(p.var_bound if opts.var_bound is None else opts.var_bound)
    if not R > 0:
        raise ValueError(f"var_bound must be positive, got {R}")
    eps = opts.eps_feas if opts.eps_feas is not None else default_eps_feas(p, R)

    m = p.num_vars
    exprs = [(e, -1.0) for _, e in p.constraints] + [(e, +1.0) for _, e in p.psd_constraints]

    if m == 0:
        # no decision variables: the margin is determined, no solver needed
        margin = measured_margin(p, np.zeros(0))
        if margin > eps:
            return FeasibilityResult(Status.Feasible, margin, np.zeros(0), "constant problem")
        return FeasibilityResult(Status.Infeasible, margin, None, "constant problem")

    # scale the data so the cone blocks are O(1); conelp variables are
    # y = (x/R, t/gamma)
    gamma = max(
        max(float(np.linalg.norm(e.c0)) for e, _ in exprs),
        R * max((float(np.linalg.norm(c)) for e, _ in exprs for c in e.coeff), default=0.0),
    )
    if gamma <= 0:
        gamma = 1.0

    c = matrix([0.0] * m + [-1.0])

    # cone blocks in order: one second-order cone ||x/R|| <= 1, then one PSD
    # block per expression; cvxopt wants h - G y in the cone, columns of G in
    # column-major matrix layout
    soc = np.zeros((m + 1, m + 1))
    for k in range(m):
        soc[k + 1, k] = -1.0
    G_blocks = [soc]
    h_vals: list[float] = [1.0] + [0.0] * m

    sdp_dims = []
    for e, sign in exprs:
        n = e.n
        sdp_dims.append(n)
        # sign -1 encodes E(x) + tI <= 0, sign +1 encodes E(x) - tI >= 0;
        # both become (sign * E(x) - t I)/gamma in the PSD cone via h - G y
        blk = np.empty((n * n, m + 1))
        for k in range(m):
            blk[:, k] = (-sign * R / gamma) * e.coeff[k].reshape(-1, order="F")
        blk[:, m] = np.eye(n).reshape(-1, order="F")
        G_blocks.append(blk)
        h_vals.extend((sign / gamma) * e.c0.reshape(-1, order="F"))

    G = matrix(np.vstack(G_blocks))
    h = matrix(h_vals)
    dims = {"l": 0, "q": [m + 1], "s": sdp_dims}

    old = dict(solvers.options)
    try:
        solvers.options.update({"show_progress": False, "maxiters": int(opts.max_iter)})
        try:
            sol = solvers.conelp(c, G, h, dims)
        except (ValueError, ArithmeticError, ZeroDivisionError) as e:
            return FeasibilityResult(Status.NumericalFailure, None, None, f"solver raised: {e}")
    finally:
        solvers.options.clear()
        solvers.options.update(old)

    if sol.get("x") is None:
        return FeasibilityResult(
            Status.NumericalFailure, None, None, f"solver returned no point (status {sol['status']})"
        )
    y = np.asarray(sol["x"]).reshape(-1)
    x = R * y[:m]
    margin = measured_margin(p, x)
    if margin > eps:
        return FeasibilityResult(Status.Feasible, margin, x, f"solver status {sol['status']}")
    if sol["status"] == "optimal":
        return FeasibilityResult(Status.Infeasible, margin, None, "optimal, margin below threshold")
    return FeasibilityResult(
        Status.NumericalFailure, margin, None, f"solver status {sol['status']}, margin {margin:.3g}"
    )
