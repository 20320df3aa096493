"""Data model for parameterized LMIs in double convex-sum form.

A PLMI instance is the family of symmetric blocks Phi_ij, i, j = 1..r, and the
constraint is sum_i sum_j h_i h_j Phi_ij < 0 (negative definite) for every
membership vector h in the probability simplex.  Indices in the public API and
in all messages are 1-based; the underlying numpy storage is 0-based.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

# max allowed asymmetry at construction, relative to max(1, |entries|)
SYM_TOL = 1e-10
# allowed deviation of sum(h) from 1
SIMPLEX_TOL = 1e-12


class SchemaError(ValueError):
    """Malformed serialized instance; the message names the offending entry."""


def _symmetrized(a: np.ndarray, what: str) -> np.ndarray:
    """Validate symmetry of a square matrix and return (A + A')/2, read-only."""
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ValueError(f"{what}: expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{what}: entries must be finite")
    t = a.swapaxes(-1, -2)
    if a.size == 0:
        out = a.copy()
        out.flags.writeable = False
        return out
    dev = float(np.abs(a - t).max())
    scale = max(1.0, float(np.abs(a).max()))
    if dev > SYM_TOL * scale:
        raise ValueError(
            f"{what}: not symmetric, max |A - A'| = {dev:.3g} exceeds "
            f"tolerance {SYM_TOL:g} (relative to max(1, |entries|))"
        )
    out = (a + t) / 2.0
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class SymMat:
    """Symmetric n x n matrix; symmetrized to (A + A')/2 at construction.

    Asymmetry beyond SYM_TOL (relative to entry magnitude) is a hard error.
    """

    a: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        if a.ndim != 2:
            raise ValueError(f"expected a 2-d matrix, got ndim {a.ndim}")
        object.__setattr__(self, "a", _symmetrized(a, "SymMat"))

    @property
    def n(self) -> int:
        return self.a.shape[0]

    def __add__(self, other):
        if isinstance(other, SymMat):
            return SymMat(self.a + other.a)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, SymMat):
            return SymMat(self.a - other.a)
        return NotImplemented

    def __mul__(self, s):
        if np.isscalar(s):
            return SymMat(float(s) * self.a)
        return NotImplemented

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class ConstantPlmi:
    """Constant-coefficient PLMI: phi is an (r, r, n, n) array, blocks symmetric.

    r >= 2: with a single rule the double sum degenerates to one block and the
    pattern table below it is empty.
    """

    phi: np.ndarray

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        if phi.ndim != 4 or phi.shape[0] != phi.shape[1] or phi.shape[2] != phi.shape[3]:
            raise ValueError(
                f"phi must have shape (r, r, n, n), got {phi.shape}"
            )
        if phi.shape[0] < 2:
            raise ValueError(f"need r >= 2 rules, got r = {phi.shape[0]}")
        object.__setattr__(self, "phi", _symmetrized(phi, "ConstantPlmi blocks"))

    @property
    def r(self) -> int:
        return self.phi.shape[0]

    @property
    def n(self) -> int:
        return self.phi.shape[2]

    def block(self, i: int, j: int) -> SymMat:
        """Phi_ij with 1-based indices."""
        _check_index(self.r, i, "i")
        _check_index(self.r, j, "j")
        return SymMat(self.phi[i - 1, j - 1])


@dataclass(frozen=True, eq=False)
class AffinePlmi:
    """PLMI whose blocks are affine expressions in a shared decision vector.

    phi is an r x r nested sequence of AffineSymExpr (see the sdp module);
    all entries must share n and num_vars.
    """

    phi: tuple

    def __post_init__(self):
        rows = tuple(tuple(row) for row in self.phi)
        r = len(rows)
        if r < 2 or any(len(row) != r for row in rows):
            raise ValueError("phi must be a square r x r grid with r >= 2")
        n = rows[0][0].n
        m = rows[0][0].num_vars
        for row in rows:
            for e in row:
                if e.n != n or e.num_vars != m:
                    raise ValueError(
                        f"all blocks must share n={n} and num_vars={m}, "
                        f"found n={e.n}, num_vars={e.num_vars}"
                    )
        object.__setattr__(self, "phi", rows)

    @property
    def r(self) -> int:
        return len(self.phi)

    @property
    def n(self) -> int:
        return self.phi[0][0].n

    @property
    def num_vars(self) -> int:
        return self.phi[0][0].num_vars

    def block(self, i: int, j: int):
        """Phi_ij as an affine expression, 1-based indices."""
        _check_index(self.r, i, "i")
        _check_index(self.r, j, "j")
        return self.phi[i - 1][j - 1]


@dataclass(frozen=True, eq=False)
class SimplexPoint:
    """Membership vector: h_i in [0, 1], sum h_i = 1 within SIMPLEX_TOL."""

    h: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float)
        if h.ndim != 1 or h.size < 1:
            raise ValueError(f"h must be a 1-d vector, got shape {h.shape}")
        if not np.all(np.isfinite(h)):
            raise ValueError("h entries must be finite")
        if h.min() < 0.0 or h.max() > 1.0 + SIMPLEX_TOL:
            raise ValueError(f"h entries must lie in [0, 1], got {h}")
        dev = abs(float(h.sum()) - 1.0)
        if dev > SIMPLEX_TOL:
            raise ValueError(f"sum(h) deviates from 1 by {dev:.3g} > {SIMPLEX_TOL:g}")
        h = h.copy()
        h.flags.writeable = False
        object.__setattr__(self, "h", h)

    @property
    def r(self) -> int:
        return self.h.size

    def __len__(self) -> int:
        return self.h.size


def _check_index(r: int, i: int, name: str) -> None:
    if not isinstance(i, (int, np.integer)) or not 1 <= i <= r:
        raise ValueError(f"index {name}={i} out of range 1..{r}")


def _as_point(h, r: int) -> SimplexPoint:
    if not isinstance(h, SimplexPoint):
        h = SimplexPoint(np.asarray(h, dtype=float))
    if h.r != r:
        raise ValueError(f"h has length {h.r}, instance has r = {r}")
    return h


def evaluate(p: ConstantPlmi, h) -> SymMat:
    """The double convex sum sum_i sum_j h_i h_j Phi_ij at a simplex point."""
    if not isinstance(p, ConstantPlmi):
        raise TypeError("evaluate works on constant instances; evaluate affine "
                        "blocks through the sdp module")
    hp = _as_point(h, p.r)
    return SymMat(np.einsum("i,j,ijuv->uv", hp.h, hp.h, p.phi))


def symmetric_pair(p: ConstantPlmi, i: int, j: int) -> SymMat:
    """Phi_ij + Phi_ji with 1-based indices, i != j."""
    if not isinstance(p, ConstantPlmi):
        raise TypeError("symmetric_pair works on constant instances")
    _check_index(p.r, i, "i")
    _check_index(p.r, j, "j")
    if i == j:
        raise ValueError(f"i == j == {i}: the diagonal block is handled separately")
    return SymMat(p.phi[i - 1, j - 1] + p.phi[j - 1, i - 1])


def max_eigenvalue(m) -> float:
    """Largest eigenvalue of a symmetric matrix (LAPACK symmetric solver)."""
    a = m.a if isinstance(m, SymMat) else np.asarray(m, dtype=float)
    return float(np.linalg.eigvalsh(a)[-1])


def is_negative_definite(m, tol: float = 1e-9) -> bool:
    """True iff max_eigenvalue(m) < -tol; the boundary is not definite."""
    if tol < 0:
        raise ValueError(f"tol must be >= 0, got {tol}")
    return max_eigenvalue(m) < -tol


def counterexample_instance() -> ConstantPlmi:
    """The embedded r=3, n=1 instance separating the two relaxations.

    Every pattern-relaxation constraint is strictly negative while the pair
    relaxation hits an exact zero at tuan(1,3), so the converse implication
    fails.  Used by the demo-counterexample command and the regression tests.
    """
    vals = {
        (1, 1): -2.0, (1, 2): 0.0, (1, 3): 2.0,
        (2, 1): 0.0, (2, 2): -1.0, (2, 3): -1.0,
        (3, 1): 0.0, (3, 2): 0.0, (3, 3): -2.0,
    }
    phi = np.zeros((3, 3, 1, 1))
    for (i, j), v in vals.items():
        phi[i - 1, j - 1, 0, 0] = v
    return ConstantPlmi(phi)


def load_instance(text: str) -> ConstantPlmi:
    """Parse the JSON instance form; see save_instance for the schema."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"not valid JSON: {e}") from e
    if not isinstance(obj, dict):
        raise SchemaError("top level must be an object with keys r, n, phi")
    for key in ("r", "n", "phi"):
        if key not in obj:
            raise SchemaError(f"missing key '{key}'")
    r, n = obj["r"], obj["n"]
    if not isinstance(r, int) or isinstance(r, bool) or r < 2:
        raise SchemaError(f"r must be an integer >= 2, got {r!r}")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise SchemaError(f"n must be an integer >= 1, got {n!r}")
    rows = obj["phi"]
    if not isinstance(rows, list) or len(rows) != r:
        raise SchemaError(f"phi must be a list of r = {r} rows")
    phi = np.empty((r, r, n, n))
    for i, row in enumerate(rows, start=1):
        if not isinstance(row, list) or len(row) != r:
            raise SchemaError(f"phi row i={i} must be a list of r = {r} blocks")
        for j, blk in enumerate(row, start=1):
            where = f"phi block (i={i}, j={j})"
            if not isinstance(blk, list) or len(blk) != n * n:
                raise SchemaError(f"{where}: expected {n * n} row-major entries")
            try:
                m = np.array(blk, dtype=float).reshape(n, n)
            except (TypeError, ValueError) as e:
                raise SchemaError(f"{where}: entries must be real numbers ({e})")
            try:
                phi[i - 1, j - 1] = _symmetrized(m, where)
            except ValueError as e:
                raise SchemaError(str(e)) from e
    return ConstantPlmi(phi)


def save_instance(p: ConstantPlmi) -> str:
    """Serialize to JSON: {"r", "n", "phi"} with blocks as row-major flat lists.

    Floats are emitted at full precision (shortest round-trip form), so
    load_instance(save_instance(p)) reproduces p exactly.
    """
    obj = {
        "r": p.r,
        "n": p.n,
        "phi": [
            [[float(v) for v in p.phi[i, j].reshape(-1)] for j in range(p.r)]
            for i in range(p.r)
        ],
    }
    return json.dumps(obj)
