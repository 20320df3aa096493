import numpy as np
import pytest

from plmirelax.plmi import AffinePlmi, ConstantPlmi, counterexample_instance, evaluate
from plmirelax.relaxation import (
    LmiSet,
    binary_table,
    check_constant,
    col_index,
    generate_naive,
    generate_theorem1,
    generate_tuan,
)
from plmirelax.sdp import AffineSymExpr


def rand_instance(rng, r, n):
    raw = rng.uniform(-1.0, 1.0, size=(r, r, n, n))
    return ConstantPlmi((raw + raw.swapaxes(2, 3)) / 2.0)


def rand_affine(rng, r, n, m):
    grid = []
    for _ in range(r):
        row = []
        for _ in range(r):
            raw = rng.uniform(-1, 1, size=(m + 1, n, n))
            sym = (raw + raw.swapaxes(1, 2)) / 2
            row.append(AffineSymExpr(sym[0], sym[1:]))
        grid.append(tuple(row))
    return AffinePlmi(tuple(grid))


class TestBinaryTable:
    def test_r2(self):
        t = binary_table(2)
        assert t.rows.tolist() == [[0], [1]]

    def test_r3(self):
        t = binary_table(3)
        assert t.rows.tolist() == [[0, 0], [0, 1], [1, 0], [1, 1]]

    def test_rows_count_binary_ascending(self):
        t = binary_table(4)
        assert t.rows.shape == (8, 3)
        for k in range(8):
            bits = [int(b) for b in format(k, "03b")]
            assert t.rows[k].tolist() == bits

    def test_row_accessor_one_based(self):
        t = binary_table(3)
        assert t.row(1).tolist() == [0, 0]
        assert t.row(4).tolist() == [1, 1]
        with pytest.raises(ValueError):
            t.row(0)
        with pytest.raises(ValueError):
            t.row(5)

    def test_rejects_r1_and_huge_r(self):
        with pytest.raises(ValueError):
            binary_table(1)
        with pytest.raises(ValueError, match=r"2\^\(r-1\)"):
            binary_table(17)

    def test_read_only(self):
        t = binary_table(2)
        with pytest.raises(ValueError):
            t.rows[0, 0] = 1


class TestColIndex:
    def test_values(self):
        # row i skips its own index; remaining indices keep their order
        assert col_index(2, 1) == 1
        assert col_index(2, 3) == 2
        assert col_index(1, 2) == 1
        assert col_index(1, 3) == 2
        assert col_index(3, 1) == 1
        assert col_index(3, 2) == 2

    def test_rejects_diagonal(self):
        with pytest.raises(ValueError, match="diagonal has no table column"):
            col_index(2, 2)


class TestGenerators:
    def test_naive_counterexample(self):
        lmis = generate_naive(counterexample_instance())
        assert len(lmis) == 9
        assert lmis.labels[:3] == ("naive(1,1)", "naive(1,2)", "naive(1,3)")
        assert lmis.get("naive(1,3)").a[0, 0] == 2.0

    def test_tuan_counterexample(self):
        lmis = generate_tuan(counterexample_instance())
        assert len(lmis) == 9
        assert lmis.get("tuan(1,1)").a[0, 0] == -2.0
        # 2/(r-1) * (-2) + 2 + 0 = 0: the blocking constraint
        assert lmis.get("tuan(1,3)").a[0, 0] == 0.0

    def test_tuan_label_order(self):
        lmis = generate_tuan(rand_instance(np.random.default_rng(0), 3, 1))
        assert lmis.labels == tuple(
            f"tuan({i},{j})" for i in (1, 2, 3) for j in (1, 2, 3)
        )

    def test_tuan_formula_r2(self):
        p = rand_instance(np.random.default_rng(1), 2, 3)
        lmis = generate_tuan(p)
        expected = 2.0 * p.phi[0, 0] + p.phi[0, 1] + p.phi[1, 0]
        assert np.allclose(lmis.get("tuan(1,2)").a, expected, atol=1e-14)

    def test_theorem1_counts(self):
        rng = np.random.default_rng(2)
        for r in range(2, 7):
            lmis = generate_theorem1(rand_instance(rng, r, 2))
            assert len(lmis) == r * 2 ** (r - 1)

    def test_theorem1_counterexample_values(self):
        lmis = generate_theorem1(counterexample_instance())
        # p11 + (p13 + p31)/2 = -2 + 1 = -1
        assert lmis.get("thm1(1,2)").a[0, 0] == -1.0
        # p33 + (p32 + p23)/2 = -2 - 0.5 = -2.5
        assert lmis.get("thm1(3,2)").a[0, 0] == -2.5

    def test_theorem1_first_row_is_diagonal_block(self):
        rng = np.random.default_rng(3)
        for r in (2, 3, 4):
            p = rand_instance(rng, r, 2)
            lmis = generate_theorem1(p)
            for i in range(1, r + 1):
                assert np.array_equal(lmis.get(f"thm1({i},1)").a, p.phi[i - 1, i - 1])

    def test_theorem1_label_order(self):
        lmis = generate_theorem1(rand_instance(np.random.default_rng(4), 3, 1))
        assert lmis.labels == tuple(
            f"thm1({i},{k})" for i in (1, 2, 3) for k in (1, 2, 3, 4)
        )

    def test_theorem1_row_formula(self):
        p = rand_instance(np.random.default_rng(5), 3, 2)
        lmis = generate_theorem1(p)
        # i=2, row k=3 of the r=3 table is (1, 0): j=1 on, j=3 off
        expected = p.phi[1, 1] + 0.5 * (p.phi[1, 0] + p.phi[0, 1])
        assert np.allclose(lmis.get("thm1(2,3)").a, expected, atol=1e-14)

    def test_generators_linear_in_instance(self):
        rng = np.random.default_rng(6)
        p = rand_instance(rng, 3, 2)
        q = rand_instance(rng, 3, 2)
        s = ConstantPlmi(p.phi + q.phi)
        for gen in (generate_naive, generate_tuan, generate_theorem1):
            combo = gen(s)
            parts = (gen(p), gen(q))
            for label in combo.labels:
                assert np.allclose(
                    combo.get(label).a,
                    parts[0].get(label).a + parts[1].get(label).a,
                    atol=1e-12,
                )

    def test_generators_commute_with_evaluation(self):
        # generating from an affine family then plugging in x must agree with
        # generating from the constant family evaluated at x
        rng = np.random.default_rng(7)
        p = rand_affine(rng, 3, 2, 4)
        x = rng.uniform(-1, 1, size=4)
        frozen = ConstantPlmi(
            np.array([[p.block(i, j).at(x).a for j in (1, 2, 3)] for i in (1, 2, 3)])
        )
        for gen in (generate_naive, generate_tuan, generate_theorem1):
            sym = gen(p)
            num = gen(frozen)
            for label in sym.labels:
                assert np.allclose(sym.get(label).at(x).a, num.get(label).a, atol=1e-12)

    def test_rejects_plain_arrays(self):
        with pytest.raises(TypeError):
            generate_tuan(np.zeros((2, 2, 1, 1)))


class TestR2Equivalence:
    def test_pairwise_proportionality(self):
        rng = np.random.default_rng(8)
        for n in (1, 2, 3):
            p = rand_instance(rng, 2, n)
            tuan = generate_tuan(p)
            thm1 = generate_theorem1(p)
            for i in (1, 2):
                assert np.array_equal(
                    thm1.get(f"thm1({i},1)").a, tuan.get(f"tuan({i},{i})").a
                )
                j = 2 if i == 1 else 1
                assert np.allclose(
                    tuan.get(f"tuan({i},{j})").a,
                    2.0 * thm1.get(f"thm1({i},2)").a,
                    atol=1e-12,
                )


class TestLmiSet:
    def test_unique_labels_enforced(self):
        from plmirelax.plmi import SymMat

        m = SymMat(-np.eye(1))
        with pytest.raises(ValueError, match="unique"):
            LmiSet((("a", m), ("a", m)))

    def test_get_unknown_label(self):
        lmis = generate_tuan(counterexample_instance())
        with pytest.raises(KeyError):
            lmis.get("tuan(9,9)")

    def test_iteration(self):
        lmis = generate_tuan(counterexample_instance())
        seen = [label for label, _ in lmis]
        assert seen == list(lmis.labels)


class TestCheckConstant:
    def test_counterexample_theorem1_feasible(self):
        verdict = check_constant(generate_theorem1(counterexample_instance()))
        assert verdict.feasible
        got = [v for _, v in verdict.per_constraint]
        assert got == [-2.0, -1.0, -2.0, -1.0, -1.0, -1.5, -1.0, -1.5,
                       -2.0, -2.5, -1.0, -1.5]
        assert verdict.worst == ("thm1(1,2)", -1.0)

    def test_counterexample_tuan_infeasible(self):
        verdict = check_constant(generate_tuan(counterexample_instance()))
        assert not verdict.feasible
        assert verdict.worst == ("tuan(1,3)", 0.0)
        got = [v for _, v in verdict.per_constraint]
        assert got == [-2.0, -2.0, 0.0, -1.0, -1.0, -2.0, 0.0, -3.0, -2.0]

    def test_all_negative_identity(self):
        phi = np.tile(-np.eye(2), (3, 3, 1, 1))
        verdict = check_constant(generate_naive(ConstantPlmi(phi)))
        assert verdict.feasible
        assert all(v == -1.0 for _, v in verdict.per_constraint)

    def test_tolerance_strictness(self):
        phi = np.full((2, 2, 1, 1), -1e-10)
        verdict = check_constant(generate_naive(ConstantPlmi(phi)), tol=1e-9)
        assert not verdict.feasible
        verdict = check_constant(generate_naive(ConstantPlmi(phi)), tol=1e-11)
        assert verdict.feasible

    def test_worst_tie_break_first(self):
        phi = np.tile(-np.eye(1), (2, 2, 1, 1))
        verdict = check_constant(generate_naive(ConstantPlmi(phi)))
        assert verdict.worst[0] == "naive(1,1)"

    def test_feasible_iff_worst_clears_tol(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            verdict = check_constant(generate_tuan(rand_instance(rng, 3, 2)))
            assert verdict.feasible == (verdict.worst[1] < -1e-9)

    def test_rejects_affine_constraints(self):
        p = rand_affine(np.random.default_rng(10), 2, 2, 3)
        with pytest.raises(ValueError, match="sdp"):
            check_constant(generate_tuan(p))

    def test_rejects_empty_set(self):
        with pytest.raises(ValueError):
            check_constant(LmiSet(()))

    def test_to_json_shape(self):
        verdict = check_constant(generate_tuan(counterexample_instance()))
        obj = verdict.to_json()
        assert set(obj) == {"feasible", "constraints", "worst"}
        assert obj["feasible"] is False
        assert obj["worst"] == {"label": "tuan(1,3)", "max_eig": 0.0}
        assert obj["constraints"][0] == {"label": "tuan(1,1)", "max_eig": -2.0}


class TestSoundnessSpot:
    def test_relaxation_implies_grid_negativity(self):
        # certified instances stay negative definite on a coarse sweep
        rng = np.random.default_rng(11)
        hits = 0
        for _ in range(200):
            p = rand_instance(rng, 3, 1)
            shifted = ConstantPlmi(p.phi - 0.6 * np.tile(np.eye(1), (3, 3, 1, 1)))
            if not check_constant(generate_theorem1(shifted)).feasible:
                continue
            hits += 1
            for a in range(11):
                for b in range(11 - a):
                    h = np.array([a, b, 10 - a - b]) / 10.0
                    assert evaluate(shifted, h).a[0, 0] < 0
        assert hits > 0
