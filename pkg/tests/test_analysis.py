import itertools
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qlll import (
    EnumCode,
    choose_N,
    code_length_bound,
    margin_bits,
    rank_bitstring,
    success_bound,
    unrank,
    verify_termination_bound,
)
from qlll.analysis import tightened_budget_bound
from qlll.solver import RunParams, enumerate_histories

from helpers import enumerable_corpus


def brute_force_rank(bits: str) -> int:
    """Oracle: position of ``bits`` among all equal-weight strings of the
    same length, enumerated in plain lexicographic order."""
    T, M = len(bits), bits.count("1")
    ordered = sorted(
        "".join(s)
        for s in itertools.product("01", repeat=T)
        if s.count("1") == M
    )
    return ordered.index(bits)


class TestRankUnrank:
    def test_weight_zero(self):
        assert rank_bitstring("0000", 0).index == 0
        assert unrank(0, 4, 0) == "0000"

    def test_weight_two_examples(self):
        # oracle: lexicographic enumeration of C(4,2)=6 strings
        ordered = sorted(
            "".join(s) for s in itertools.product("01", repeat=4) if s.count("1") == 2
        )
        assert ordered == ["0011", "0101", "0110", "1001", "1010", "1100"]
        assert rank_bitstring("0101", 2).index == ordered.index("0101") == 1
        assert rank_bitstring("1100", 2).index == ordered.index("1100") == 5
        assert unrank(1, 4, 2) == "0101"
        assert unrank(5, 4, 2) == "1100"

    def test_accepts_integer_sequences(self):
        assert rank_bitstring((0, 1, 0, 1), 2).index == 1

    def test_weight_mismatch_rejected(self):
        with pytest.raises(ValueError, match="weight"):
            rank_bitstring("0101", 1)

    def test_index_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            unrank(6, 4, 2)
        with pytest.raises(ValueError):
            EnumCode(index=6, length_T=4, weight_M=2)

    def test_exhaustive_bijection_small(self):
        for T in range(0, 11):
            for bits in itertools.product("01", repeat=T):
                s = "".join(bits)
                M = s.count("1")
                code = rank_bitstring(s, M)
                assert unrank(code.index, T, M) == s
                assert brute_force_rank(s) == code.index if T <= 8 else True

    @given(st.integers(min_value=0, max_value=2**16 - 1))
    @settings(max_examples=60, deadline=None)
    def test_roundtrip_T16(self, value):
        s = format(value, "016b")
        M = s.count("1")
        code = rank_bitstring(s, M)
        assert unrank(code.index, 16, M) == s

    def test_monotone_in_lexicographic_order(self):
        T, M = 7, 3
        ordered = sorted(
            "".join(s) for s in itertools.product("01", repeat=T) if s.count("1") == M
        )
        ranks = [rank_bitstring(s, M).index for s in ordered]
        assert ranks == list(range(math.comb(T, M)))


class TestCodeLengthBound:
    def test_zero_failures(self):
        exact, bound = code_length_bound(4, 2, 0)
        assert exact == 0.0
        assert bound == 4.0

    def test_example_m4_d2_t3(self):
        exact, bound = code_length_bound(4, 2, 3)
        assert exact == pytest.approx(math.log2(120))
        assert bound == pytest.approx(4 + 3 * math.log2(2 * math.e))
        assert exact <= bound

    def test_example_m1_d1_t1(self):
        exact, bound = code_length_bound(1, 1, 1)
        assert exact == pytest.approx(1.0)
        assert bound == pytest.approx(1 + math.log2(math.e))

    def test_full_sweep(self):
        for m in range(1, 21):
            for d in range(1, 7):
                for t in range(0, 21):
                    exact, bound = code_length_bound(m, d, t)
                    assert exact <= bound + 1e-9


class TestChooseN:
    def test_reference_point(self):
        # independent re-evaluation of the closed forms
        mu = 3 - math.log2(2 * math.e * 1)
        a = 1 / mu
        b = (10 + math.log2(1 / 0.01)) / mu
        expected_N = math.ceil(b + 3 * a * (math.log2(b) + 1))
        report = choose_N(10, 3, 2, 1, 0.01)
        assert report.N == expected_N == 62
        assert report.T == 10 + 62 * 2 == 134
        assert report.a == pytest.approx(a)
        assert report.b == pytest.approx(b)
        assert report.margin == pytest.approx(mu)

    def test_margin_violation_rejected(self):
        with pytest.raises(ValueError, match="margin"):
            choose_N(10, 2, 2, 2, 0.01)

    def test_implicit_inequality(self):
        report = choose_N(10, 3, 2, 1, 0.01)
        assert report.N >= report.a * math.log2(report.N) + report.b

    def test_monotone_in_epsilon(self):
        loose = choose_N(10, 3, 2, 1, 0.5)
        tight = choose_N(10, 3, 2, 1, 0.01)
        assert loose.N < tight.N

    def grid(self):
        points = []
        for m in (1, 2, 5, 10, 20):
            for k in (2, 3, 4, 5):
                for d, r in ((1, 1), (2, 1), (1, 2), (3, 1), (2, 2)):
                    for eps in (0.3, 0.05):
                        if margin_bits(k, d, r) > 0:
                            points.append((m, k, d, r, eps))
        return points

    def test_grid_satisfies_fixed_point(self):
        points = self.grid()
        assert len(points) >= 200
        for m, k, d, r, eps in points:
            report = choose_N(m, k, d, r, eps)
            assert report.N >= report.a * math.log2(report.N) + report.b, (m, k, d, r, eps)

    def test_grid_relaxation_chain(self):
        # pre-relaxation expression stays below the budget expression
        # wherever the budget fraction b is moderately large
        for m, k, d, r, eps in self.grid():
            report = choose_N(m, k, d, r, eps)
            if report.b >= 2.0:
                tight = tightened_budget_bound(m, k, d, r, eps)
                assert tight <= report.b + 3 * report.a * (math.log2(report.b) + 1) + 1e-9

    def test_bound_meets_epsilon(self):
        for m, k, d, r, eps in self.grid():
            report = choose_N(m, k, d, r, eps)
            assert report.success_lower_bound >= 1 - eps - 1e-12


class TestSuccessBound:
    def test_reference_point(self):
        val = success_bound(10, 3, 2, 1, 62)
        exponent = 10 + math.log2(62) - 62 * (3 - math.log2(2 * math.e))
        assert exponent == pytest.approx(-18.5987, abs=1e-3)
        assert val == pytest.approx(1 - 2**exponent)

    def test_vacuous_clamps_to_zero(self):
        assert success_bound(10, 2, 2, 2, 1) == 0.0

    def test_requires_positive_budget(self):
        with pytest.raises(ValueError):
            success_bound(1, 2, 1, 1, 0)


class TestVerifyTerminationBound:
    def test_single_qubit_hand_enumeration(self):
        from qlll import from_dimacs

        inst = from_dimacs("p cnf 1 1\n-1 0\n")
        params = RunParams(epsilon=0.5, N=2, T=inst.m + 2 * inst.d, seed=0)
        tree = enumerate_histories(inst, params, "AVERAGED")
        # forced value: start violated (1/2), resample violated again (1/2)
        assert tree.exhausted_probability() == pytest.approx(0.25)
        report = verify_termination_bound(tree, inst.m, inst.k, inst.d, inst.r, 2)
        assert report.holds
        assert report.exact_probability == pytest.approx(0.25)
        assert report.bound >= 0.25

    def test_requires_averaged_tree(self):
        from qlll import from_dimacs

        inst = from_dimacs("p cnf 1 1\n-1 0\n")
        params = RunParams(epsilon=0.5, N=2, T=inst.m + 2 * inst.d, seed=0)
        tree = enumerate_histories(inst, params, ("1", "00"))
        with pytest.raises(ValueError, match="AVERAGED"):
            verify_termination_bound(tree, inst.m, inst.k, inst.d, inst.r, 2)

    def test_budget_above_max_depth_gives_zero(self):
        from qlll import from_dimacs

        # both clauses are satisfied by every assignment refresh eventually;
        # with plenty of budget the surviving exhaustion mass is zero
        inst = from_dimacs("p cnf 2 1\n1 2 0\n")
        params = RunParams(epsilon=0.5, N=7, T=inst.m + 7 * inst.d, seed=0)
        tree = enumerate_histories(inst, params, "AVERAGED", prune_tol=0.0)
        report = verify_termination_bound(tree, inst.m, inst.k, inst.d, inst.r, 7)
        assert report.holds
        assert report.exact_probability <= report.bound

    def test_corpus_never_exceeds_bound(self):
        for inst, N in enumerable_corpus():
            params = RunParams(epsilon=0.5, N=N, T=inst.m + N * inst.d, seed=0)
            tree = enumerate_histories(inst, params, "AVERAGED")
            report = verify_termination_bound(tree, inst.m, inst.k, inst.d, inst.r, N)
            assert report.holds
