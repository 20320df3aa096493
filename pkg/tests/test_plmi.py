import json

import numpy as np
import pytest

from plmirelax.plmi import (
    AffinePlmi,
    ConstantPlmi,
    SchemaError,
    SimplexPoint,
    SymMat,
    counterexample_instance,
    evaluate,
    is_negative_definite,
    load_instance,
    max_eigenvalue,
    save_instance,
    symmetric_pair,
)
from plmirelax.sdp import AffineSymExpr


def rand_instance(rng, r, n):
    raw = rng.uniform(-1.0, 1.0, size=(r, r, n, n))
    return ConstantPlmi((raw + raw.swapaxes(2, 3)) / 2.0)


class TestSymMat:
    def test_symmetrizes_small_deviation(self):
        m = SymMat(np.array([[1.0, 2.0 + 1e-12], [2.0, 3.0]]))
        assert m.a[0, 1] == m.a[1, 0]

    def test_rejects_large_deviation(self):
        with pytest.raises(ValueError, match="not symmetric"):
            SymMat(np.array([[1.0, 2.0], [2.1, 3.0]]))

    def test_tolerance_is_relative_to_scale(self):
        # 1e-6 absolute skew on a 1e9-scale matrix is within relative tolerance
        m = SymMat(np.array([[1e9, 5e8 + 1e-6], [5e8, 1e9]]))
        assert m.a[0, 1] == m.a[1, 0]
        with pytest.raises(ValueError):
            SymMat(np.array([[1.0, 1e-6], [0.0, 1.0]]))

    def test_rejects_nonsquare_and_bad_ndim(self):
        with pytest.raises(ValueError):
            SymMat(np.zeros((2, 3)))
        with pytest.raises(ValueError):
            SymMat(np.zeros(4))

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError, match="finite"):
            SymMat(np.array([[np.nan, 0.0], [0.0, 1.0]]))

    def test_read_only(self):
        m = SymMat(np.eye(2))
        with pytest.raises(ValueError):
            m.a[0, 0] = 5.0

    def test_arithmetic(self):
        a = SymMat(np.array([[1.0, 0.0], [0.0, 2.0]]))
        b = SymMat(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert np.array_equal((a + b).a, [[1.0, 1.0], [1.0, 2.0]])
        assert np.array_equal((a - b).a, [[1.0, -1.0], [-1.0, 2.0]])
        assert np.array_equal((3 * a).a, [[3.0, 0.0], [0.0, 6.0]])
        assert np.array_equal((a * 3).a, (3 * a).a)
        assert a.n == 2


class TestConstantPlmi:
    def test_shape_and_props(self):
        p = rand_instance(np.random.default_rng(0), 3, 2)
        assert p.r == 3 and p.n == 2

    def test_rejects_r1(self):
        with pytest.raises(ValueError, match="r >= 2"):
            ConstantPlmi(np.zeros((1, 1, 2, 2)))

    def test_rejects_bad_shapes(self):
        with pytest.raises(ValueError):
            ConstantPlmi(np.zeros((2, 3, 2, 2)))
        with pytest.raises(ValueError):
            ConstantPlmi(np.zeros((2, 2, 2, 3)))
        with pytest.raises(ValueError):
            ConstantPlmi(np.zeros((2, 2, 2)))

    def test_rejects_asymmetric_block(self):
        phi = np.zeros((2, 2, 2, 2))
        phi[0, 1] = [[0.0, 1.0], [0.0, 0.0]]
        with pytest.raises(ValueError, match="not symmetric"):
            ConstantPlmi(phi)

    def test_block_accessor_one_based(self):
        p = counterexample_instance()
        assert p.block(1, 3).a[0, 0] == 2.0
        assert p.block(3, 2).a[0, 0] == 0.0
        with pytest.raises(ValueError, match="out of range"):
            p.block(0, 1)
        with pytest.raises(ValueError, match="out of range"):
            p.block(1, 4)


class TestAffinePlmi:
    def _expr(self, rng, n, m):
        raw = rng.uniform(-1, 1, size=(m + 1, n, n))
        sym = (raw + raw.swapaxes(1, 2)) / 2
        return AffineSymExpr(sym[0], sym[1:])

    def test_builds_and_accessors(self):
        rng = np.random.default_rng(1)
        grid = [[self._expr(rng, 2, 3) for _ in range(2)] for _ in range(2)]
        p = AffinePlmi(tuple(tuple(row) for row in grid))
        assert p.r == 2 and p.n == 2 and p.num_vars == 3
        assert p.block(1, 2) is grid[0][1]

    def test_rejects_mismatched_blocks(self):
        rng = np.random.default_rng(2)
        bad = ((self._expr(rng, 2, 3), self._expr(rng, 2, 3)),
               (self._expr(rng, 2, 3), self._expr(rng, 2, 4)))
        with pytest.raises(ValueError, match="share"):
            AffinePlmi(bad)

    def test_rejects_r1_and_ragged(self):
        rng = np.random.default_rng(3)
        with pytest.raises(ValueError):
            AffinePlmi(((self._expr(rng, 2, 1),),))
        with pytest.raises(ValueError):
            AffinePlmi(((self._expr(rng, 2, 1), self._expr(rng, 2, 1)),
                        (self._expr(rng, 2, 1),)))


class TestSimplexPoint:
    def test_valid(self):
        h = SimplexPoint(np.array([0.2, 0.8]))
        assert h.r == 2 and len(h) == 2

    def test_rejects_bad_sum(self):
        with pytest.raises(ValueError, match="deviates"):
            SimplexPoint(np.array([0.5, 0.5 + 1e-11]))

    def test_rejects_out_of_range_entries(self):
        with pytest.raises(ValueError):
            SimplexPoint(np.array([-0.1, 1.1]))
        with pytest.raises(ValueError):
            SimplexPoint(np.array([1.5, -0.5]))

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            SimplexPoint(np.array([np.inf, -np.inf]))

    def test_read_only(self):
        h = SimplexPoint(np.array([1.0, 0.0]))
        with pytest.raises(ValueError):
            h.h[0] = 0.5


class TestEvaluate:
    def test_vertices_give_diagonal_blocks(self):
        rng = np.random.default_rng(4)
        p = rand_instance(rng, 4, 3)
        for i in range(4):
            e = np.zeros(4)
            e[i] = 1.0
            assert np.array_equal(evaluate(p, e).a, p.phi[i, i])

    def test_counterexample_midpoint(self):
        p = counterexample_instance()
        v = evaluate(p, np.array([0.5, 0.0, 0.5]))
        # (1/4)(-2) + (1/4)(2 + 0) + (1/4)(-2) = -0.5
        assert v.a[0, 0] == -0.5

    def test_transpose_swap_invariance(self):
        rng = np.random.default_rng(5)
        p = rand_instance(rng, 3, 2)
        swapped = ConstantPlmi(p.phi.swapaxes(0, 1))
        h = np.array([0.3, 0.2, 0.5])
        assert np.allclose(evaluate(p, h).a, evaluate(swapped, h).a, atol=1e-14)

    def test_quadratic_form_expansion(self):
        rng = np.random.default_rng(6)
        p = rand_instance(rng, 3, 2)
        h = rng.dirichlet(np.ones(3))
        g = rng.dirichlet(np.ones(3))
        for alpha in (0.0, 0.25, 0.7, 1.0):
            mix = alpha * h + (1 - alpha) * g
            direct = evaluate(p, mix).a
            expanded = np.einsum("i,j,ijuv->uv", mix, mix, p.phi)
            assert np.allclose(direct, expanded, atol=1e-12)

    def test_input_validation(self):
        p = counterexample_instance()
        with pytest.raises(ValueError, match="length"):
            evaluate(p, np.array([0.5, 0.5]))
        with pytest.raises(TypeError):
            evaluate(object(), np.array([1.0, 0.0]))


class TestSymmetricPair:
    def test_values_and_errors(self):
        p = counterexample_instance()
        assert symmetric_pair(p, 1, 3).a[0, 0] == 2.0
        assert symmetric_pair(p, 3, 1).a[0, 0] == 2.0
        assert symmetric_pair(p, 2, 3).a[0, 0] == -1.0
        with pytest.raises(ValueError, match="i == j"):
            symmetric_pair(p, 2, 2)
        with pytest.raises(ValueError, match="out of range"):
            symmetric_pair(p, 0, 1)


class TestEigenvalues:
    def test_known_2x2(self):
        assert max_eigenvalue(np.array([[2.0, 1.0], [1.0, 2.0]])) == pytest.approx(3.0, abs=1e-12)

    def test_negation_symmetry(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            raw = rng.uniform(-1, 1, size=(4, 4))
            m = (raw + raw.T) / 2
            min_eig = float(np.linalg.eigvalsh(m)[0])
            assert max_eigenvalue(-m) == pytest.approx(-min_eig, abs=1e-9)

    def test_accepts_symmat(self):
        assert max_eigenvalue(SymMat(-np.eye(3))) == pytest.approx(-1.0)

    def test_is_negative_definite_boundary(self):
        assert is_negative_definite(-np.eye(2))
        assert not is_negative_definite(np.zeros((2, 2)))
        # tolerance boundary is exclusive
        assert not is_negative_definite(np.array([[-1e-10]]), tol=1e-9)
        assert is_negative_definite(np.array([[-1e-8]]), tol=1e-9)
        with pytest.raises(ValueError):
            is_negative_definite(np.eye(2), tol=-1.0)


class TestSerialization:
    def test_round_trip_exact(self):
        rng = np.random.default_rng(8)
        p = rand_instance(rng, 3, 2)
        q = load_instance(save_instance(p))
        assert np.array_equal(p.phi, q.phi)
        assert q.r == 3 and q.n == 2

    def test_schema_shape(self):
        text = save_instance(counterexample_instance())
        obj = json.loads(text)
        assert set(obj) == {"r", "n", "phi"}
        assert obj["r"] == 3 and obj["n"] == 1
        assert obj["phi"][0][2] == [2.0]

    def test_rejects_bad_json(self):
        with pytest.raises(SchemaError, match="JSON"):
            load_instance("{not json")

    def test_rejects_wrong_top_level(self):
        with pytest.raises(SchemaError, match="object"):
            load_instance("[1, 2]")

    def test_rejects_missing_keys(self):
        with pytest.raises(SchemaError, match="missing key 'phi'"):
            load_instance('{"r": 2, "n": 1}')

    def test_rejects_bad_r_and_n(self):
        with pytest.raises(SchemaError, match="r must be"):
            load_instance('{"r": 1, "n": 1, "phi": []}')
        with pytest.raises(SchemaError, match="r must be"):
            load_instance('{"r": "2", "n": 1, "phi": []}')
        with pytest.raises(SchemaError, match="r must be"):
            load_instance('{"r": true, "n": 1, "phi": []}')
        with pytest.raises(SchemaError, match="n must be"):
            load_instance('{"r": 2, "n": 0, "phi": []}')

    def test_error_names_offending_block(self):
        obj = json.loads(save_instance(counterexample_instance()))
        obj["phi"][1][2] = [1.0, 2.0]
        with pytest.raises(SchemaError, match=r"\(i=2, j=3\)"):
            load_instance(json.dumps(obj))

    def test_rejects_non_numeric_entry(self):
        obj = json.loads(save_instance(counterexample_instance()))
        obj["phi"][0][0] = ["x"]
        with pytest.raises(SchemaError, match=r"\(i=1, j=1\)"):
            load_instance(json.dumps(obj))

    def test_rejects_wrong_row_count(self):
        obj = json.loads(save_instance(counterexample_instance()))
        obj["phi"] = obj["phi"][:2]
        with pytest.raises(SchemaError, match="list of r = 3 rows"):
            load_instance(json.dumps(obj))

    def test_rejects_asymmetric_block_with_location(self):
        text = json.dumps(
            {"r": 2, "n": 2, "phi": [[[1, 2, 3, 4], [0, 0, 0, 0]],
                                     [[0, 0, 0, 0], [0, 0, 0, 0]]]}
        )
        with pytest.raises(SchemaError, match=r"\(i=1, j=1\)"):
            load_instance(text)


class TestCounterexample:
    def test_pinned_entries(self):
        p = counterexample_instance()
        expected = {
            (1, 1): -2.0, (1, 2): 0.0, (1, 3): 2.0,
            (2, 1): 0.0, (2, 2): -1.0, (2, 3): -1.0,
            (3, 1): 0.0, (3, 2): 0.0, (3, 3): -2.0,
        }
        for (i, j), v in expected.items():
            assert p.block(i, j).a[0, 0] == v
