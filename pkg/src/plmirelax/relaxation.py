"""LMI families relaxing the double convex-sum condition.

Three generators, ordered from crude to published: the naive family drops the
memberships entirely (every block negative definite), the pair family couples
each diagonal block with one symmetrized off-diagonal pair, and the pattern
family takes, for each row index i, every sign pattern from a binary table
over the remaining indices.  Constant families are decided here by eigenvalue
checks; affine families are handed to the sdp module.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .plmi import ConstantPlmi, AffinePlmi, SymMat, _check_index
from .sdp import AffineSymExpr

MAX_TABLE_R = 16


@dataclass(frozen=True, eq=False)
class PatternTable:
    """All binary rows of width r-1; row k (1-based) is k-1 in binary, MSB first."""

    r: int
    rows: np.ndarray

    def row(self, k: int) -> np.ndarray:
        """Row k, 1-based."""
        if not 1 <= k <= self.rows.shape[0]:
            raise ValueError(f"row index k={k} out of range 1..{self.rows.shape[0]}")
        return self.rows[k - 1]


def binary_table(r: int) -> PatternTable:
    """The 2^(r-1) x (r-1) sign-pattern table."""
    if not isinstance(r, (int, np.integer)) or not 2 <= r <= MAX_TABLE_R:
        raise ValueError(
            f"r must be an integer in 2..{MAX_TABLE_R}; the table has 2^(r-1) rows, "
            f"so r={r} is out of the practical range"
        )
    count, width = 2 ** (r - 1), r - 1
    rows = ((np.arange(count)[:, None] >> np.arange(width - 1, -1, -1)) & 1).astype(np.uint8)
    rows.flags.writeable = False
    return PatternTable(int(r), rows)


def col_index(i: int, j: int) -> int:
    """Column of the pattern table that row index i reads for partner j.

    Skips the diagonal: j if j < i, else j - 1.  All indices 1-based.
    """
    if j == i:
        raise ValueError(f"j == i == {i}: the diagonal has no table column")
    return j if j < i else j - 1


@dataclass(frozen=True, eq=False)
class LmiSet:
    """Ordered labeled constraints, each required negative definite.

    Labels encode the family and the generating indices, e.g. tuan(1,3) or
    thm1(2,4).  All expressions share n, and num_vars in the affine case.
    """

    constraints: tuple

    def __post_init__(self):
        cons = tuple((str(label), e) for label, e in self.constraints)
        labels = [label for label, _ in cons]
        if len(set(labels)) != len(labels):
            raise ValueError("constraint labels must be unique")
        object.__setattr__(self, "constraints", cons)

    def __len__(self) -> int:
        return len(self.constraints)

    def __iter__(self):
        return iter(self.constraints)

    @property
    def labels(self) -> tuple:
        return tuple(label for label, _ in self.constraints)

    def get(self, label: str):
        for lab, e in self.constraints:
            if lab == label:
                return e
        raise KeyError(label)


def _accessors(p):
    """Block getter and result wrapper giving the generators one code path.

    Constant blocks are plain arrays (wrapped back into SymMat at the end);
    affine blocks are AffineSymExpr.  Both support + and scalar *.
    """
    if isinstance(p, ConstantPlmi):
        return (lambda i, j: p.phi[i - 1, j - 1]), SymMat
    if isinstance(p, AffinePlmi):
        return (lambda i, j: p.phi[i - 1][j - 1]), (lambda e: e)
    raise TypeError(f"expected ConstantPlmi or AffinePlmi, got {type(p).__name__}")


def generate_naive(p) -> LmiSet:
    """One constraint per ordered pair: every block negative definite.

    Sufficient but crude: it ignores that the memberships tie the blocks
    together.  r*r constraints labeled naive(i,j).
    """
    blk, wrap = _accessors(p)
    cons = []
    for i in range(1, p.r + 1):
        for j in range(1, p.r + 1):
            cons.append((f"naive({i},{j})", wrap(blk(i, j))))
    return LmiSet(tuple(cons))


def generate_tuan(p) -> LmiSet:
    """Pair family: diagonals, and each diagonal against one symmetrized pair.

    tuan(i,i) is Phi_ii; tuan(i,j) for j != i is (2/(r-1)) Phi_ii + Phi_ij +
    Phi_ji.  r*r constraints, i ascending then j ascending.
    """
    blk, wrap = _accessors(p)
    w = 2.0 / (p.r - 1)
    cons = []
    for i in range(1, p.r + 1):
        for j in range(1, p.r + 1):
            if j == i:
                cons.append((f"tuan({i},{i})", wrap(blk(i, i))))
            else:
                cons.append((f"tuan({i},{j})", wrap(w * blk(i, i) + blk(i, j) + blk(j, i))))
    return LmiSet(tuple(cons))


def generate_theorem1(p) -> LmiSet:
    """Pattern family: each diagonal under every on/off pattern of its partners.

    thm1(i,k) is Phi_ii + (1/2) sum_{j != i} s[k, l(i,j)] (Phi_ij + Phi_ji)
    with s the binary table and l = col_index.  r * 2^(r-1) constraints,
    i ascending then k ascending.
    """
    blk, wrap = _accessors(p)
    table = binary_table(p.r)
    cons = []
    for i in range(1, p.r + 1):
        for k in range(1, table.rows.shape[0] + 1):
            row = table.rows[k - 1]
            e = blk(i, i)
            for j in range(1, p.r + 1):
                if j == i:
                    continue
                if row[col_index(i, j) - 1]:
                    e = e + 0.5 * (blk(i, j) + blk(j, i))
            cons.append((f"thm1({i},{k})", wrap(e)))
    return LmiSet(tuple(cons))


@dataclass(frozen=True, eq=False)
class Verdict:
    """Result of a constant-family check.

    per_constraint pairs each label with its max eigenvalue; worst is the pair
    with the largest value (first occurrence on ties); feasible means
    worst value < -tol.
    """

    feasible: bool
    per_constraint: tuple
    worst: tuple

    def to_json(self) -> dict:
        return {
            "feasible": self.feasible,
            "constraints": [
                {"label": label, "max_eig": value} for label, value in self.per_constraint
            ],
            "worst": {"label": self.worst[0], "max_eig": self.worst[1]},
        }


def check_constant(lmi_set: LmiSet, tol: float = 1e-9) -> Verdict:
    """Eigenvalue check of a constant family: feasible iff all max eigs < -tol."""
    if tol < 0:
        raise ValueError(f"tol must be >= 0, got {tol}")
    if len(lmi_set) == 0:
        raise ValueError("empty constraint set")
    mats = []
    for label, e in lmi_set:
        if isinstance(e, AffineSymExpr):
            raise ValueError(
                f"constraint {label} is affine; decide it with the sdp module"
            )
        if not isinstance(e, SymMat):
            raise TypeError(f"constraint {label} has unexpected type {type(e).__name__}")
        mats.append(e.a)
    # one stacked LAPACK call, all constraints share n
    values = np.linalg.eigvalsh(np.stack(mats))[:, -1]
    per = tuple((label, float(v)) for (label, _), v in zip(lmi_set, values))
    worst_idx = int(np.argmax(values))
    worst = per[worst_idx]
    return Verdict(bool(worst[1] < -tol), per, worst)
