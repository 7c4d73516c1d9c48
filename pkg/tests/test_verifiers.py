import json
from math import comb, factorial, log, sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import grid_dual_critical_2d, unit_ball_volume
from systolattice import (
    Certificate,
    FlatTorus,
    Lattice,
    OptimizerOptions,
    SearchOptions,
    hexagonal,
    integer_lattice,
    random_lattice,
    search_dual_critical,
    stable_systole,
    verify_banaszczyk_general,
    verify_corollary_c,
    verify_corollary_d,
    verify_hermite,
    verify_minkowski,
    verify_theorem_81,
    verify_theorem_a,
    verify_theorem_b,
    verify_theorem_e,
    verify_transference,
)
from systolattice.verifiers import (
    ERROR,
    FAIL,
    HEURISTIC_INCONCLUSIVE,
    HEURISTIC_PASS,
    PASS,
    ConstantsStore,
    ball_volume,
    dual_critical_objective,
    gamma_constants,
    theorem_81_constant,
)

FAST = OptimizerOptions(starts=4)
PASSING = (PASS, HEURISTIC_PASS)


class TestCertificate:
    def test_json_roundtrip_bit_identical(self):
        for c in verify_transference(random_lattice(4, 2)) + [verify_corollary_c(FlatTorus(hexagonal()))]:
            text = c.dumps()
            again = Certificate.from_json(json.loads(text))
            assert again.dumps() == text

    def test_ratio(self):
        c = verify_hermite(hexagonal())
        assert c.ratio == pytest.approx(c.lhs / c.rhs)


class TestTransference:
    def test_integer(self):
        certs = verify_transference(integer_lattice(4))
        assert [c.status for c in certs] == [PASS] * 4
        assert all(c.lhs == pytest.approx(1.0) for c in certs)

    def test_hexagonal(self):
        c = verify_transference(hexagonal())[0]
        assert c.lhs == pytest.approx(2 / sqrt(3), abs=1e-12) and c.rhs == 2 and c.status == PASS

    def test_random_b6(self):
        for seed in range(20):
            assert all(c.status == PASS for c in verify_transference(random_lattice(6, seed)))


class TestBanaszczyk:
    @pytest.mark.parametrize("n", [2, 3, 5])
    def test_integer_degree_one(self, n):
        c = verify_banaszczyk_general(integer_lattice(n), 1)[0]
        assert c.lhs == pytest.approx(1.0)
        assert c.params["normalized_ratio"] == pytest.approx(1 / (n * (1 + log(n))))

    def test_degree_one_matches_transference(self):
        L = random_lattice(4, 7)
        a = [c.lhs for c in verify_banaszczyk_general(L, 1)]
        b = [c.lhs for c in verify_transference(L)]
        assert np.allclose(a, b, rtol=1e-12)

    def test_t4_degree_two(self):
        certs = verify_banaszczyk_general(random_lattice(4, 3), 2)
        assert len(certs) == 6
        assert certs[0].lhs <= 6 and all(c.status == PASS for c in certs)


class TestCorollaryC:
    def test_integer(self):
        c = verify_corollary_c(FlatTorus(integer_lattice(3)))
        assert c.lhs == pytest.approx(1.0) and c.status == PASS

    def test_hexagonal_equality_with_search(self):
        store = ConstantsStore()
        search_dual_critical(2, SearchOptions(starts=4, iters=300), store)
        c = verify_corollary_c(FlatTorus(hexagonal()), store)
        assert c.params["exact_product"] == pytest.approx(2 / sqrt(3), abs=1e-12)
        assert c.params["equality_ratio"] == pytest.approx(1.0, abs=1e-6)

    def test_random_t5(self):
        for seed in range(20):
            c = verify_corollary_c(FlatTorus(random_lattice(5, seed)))
            assert c.status == PASS and c.rhs == pytest.approx(10 / 3)

    def test_consistent_with_theorem_b(self):
        for seed in range(5):
            T = FlatTorus(random_lattice(4, seed).scaled(1.2))
            assert verify_corollary_c(T).lhs == pytest.approx(verify_theorem_b(T, 1, 3).lhs, rel=1e-9)


class TestTheoremB:
    @pytest.mark.parametrize("n,p", [(2, 1), (4, 2), (5, 2)])
    def test_integer(self, n, p):
        c = verify_theorem_b(FlatTorus(integer_lattice(n)), p)
        assert c.lhs == pytest.approx(1.0) and c.status == PASS

    def test_t4_exact(self):
        c = verify_theorem_b(FlatTorus(random_lattice(4, 5)), 2, 2)
        assert not c.heuristic and c.status == PASS

    def test_middle_degree_never_plain_pass(self):
        c = verify_theorem_b(FlatTorus(random_lattice(6, 0)), 3, 3, opts=FAST)
        assert c.heuristic and c.status in (HEURISTIC_PASS, HEURISTIC_INCONCLUSIVE)

    def test_degree_mismatch(self):
        with pytest.raises(ValueError):
            verify_theorem_b(FlatTorus(integer_lattice(4)), 1, 2)


class TestCorollaryD:
    def test_z4(self):
        c = verify_corollary_d(FlatTorus(integer_lattice(4)))
        assert (c.lhs, c.rhs, c.status) == (pytest.approx(1.0), pytest.approx(36.0), PASS)

    def test_z2(self):
        c = verify_corollary_d(FlatTorus(integer_lattice(2)))
        assert (c.lhs, c.rhs, c.status) == (pytest.approx(1.0), pytest.approx(4.0), PASS)

    def test_random_t4(self):
        for seed in range(10):
            assert verify_corollary_d(FlatTorus(random_lattice(4, seed))).status in PASSING

    def test_odd_dimension(self):
        with pytest.raises(ValueError):
            verify_corollary_d(FlatTorus(integer_lattice(3)))


class TestTheorems81AndE:
    def test_constant(self):
        # unit-volume right-hand side
        assert theorem_81_constant(6, 2) == pytest.approx((15 * factorial(6) / 8) ** (1 / 3) * 15 ** (2 / 3))

    def test_z6(self):
        c = verify_theorem_81(FlatTorus(integer_lattice(6)), 2)
        assert c.lhs == pytest.approx(1.0)
        assert c.rhs == pytest.approx((15 * factorial(6) / 8) ** (1 / 3) * 15 ** (2 / 3))
        assert c.status == PASS

    def test_scale_invariant_ratio(self):
        T = FlatTorus(random_lattice(6, 1))
        a = verify_theorem_81(T, 2).ratio
        b = verify_theorem_81(T.scaled(2.5), 2).ratio
        assert a == pytest.approx(b, rel=1e-9)

    def test_needs_n_equal_3p(self):
        with pytest.raises(ValueError):
            verify_theorem_81(FlatTorus(integer_lattice(5)), 2)

    def test_theorem_e_exact_degree(self):
        c = verify_theorem_e(FlatTorus(random_lattice(4, 2)), 2)
        assert c.status == PASS and "empirical_constant" in c.params

    def test_theorem_e_heuristic_degree(self):
        c = verify_theorem_e(FlatTorus(integer_lattice(6)), 3, FAST)
        assert c.heuristic and c.status == HEURISTIC_PASS

    def test_theorem_e_needs_divisor(self):
        with pytest.raises(ValueError):
            verify_theorem_e(FlatTorus(integer_lattice(5)), 2)


class TestTheoremA:
    def test_integer(self):
        c = verify_theorem_a(FlatTorus(integer_lattice(4)), (1, 1))
        assert c.lhs == pytest.approx(1.0) and c.params["stsys_k"] == pytest.approx(1.0)
        # 2!/(1!1!) * (4)(4) * 1
        assert c.rhs == pytest.approx(32.0) and c.status == PASS

    def test_empirical_constant(self):
        T = FlatTorus(random_lattice(3, 1).scaled(2.0))
        c = verify_theorem_a(T, (1, 1))
        expected = c.lhs / ((3 * (1 + log(3))) ** 2 * c.params["stsys_k"])
        assert c.params["empirical_constant"] == pytest.approx(expected)

    def test_scale_invariant_ratio(self):
        T = FlatTorus(random_lattice(4, 2))
        assert verify_theorem_a(T, (1, 2)).ratio == pytest.approx(verify_theorem_a(T.scaled(3.0), (1, 2)).ratio, rel=1e-9)

    def test_heuristic_factor(self):
        c = verify_theorem_a(FlatTorus(random_lattice(6, 0)), (1, 3), FAST)
        assert c.heuristic and c.status == HEURISTIC_PASS

    @pytest.mark.parametrize("degrees", [(), (0, 1), (2, 3)])
    def test_bad_degrees(self, degrees):
        with pytest.raises(ValueError):
            verify_theorem_a(FlatTorus(integer_lattice(4)), degrees)


class TestMinkowski:
    @pytest.mark.parametrize("b", [1, 2, 3, 5, 8])
    def test_integer(self, b):
        c = verify_minkowski(integer_lattice(b), 1.0)
        assert c.lhs == pytest.approx(unit_ball_volume(b)) and c.rhs == pytest.approx(2.0**b)
        assert c.status == PASS

    def test_precondition_error(self):
        c = verify_minkowski(integer_lattice(3), 0.5)
        assert c.status == ERROR and c.message

    def test_default_d(self):
        L = random_lattice(5, 3)
        c = verify_minkowski(L)
        assert c.status == PASS
        assert c.params["D"] == pytest.approx(1 / c.params["lambda_1"])

    def test_ball_volume(self):
        assert ball_volume(2) == pytest.approx(np.pi)
        assert ball_volume(3) == pytest.approx(4 * np.pi / 3)


class TestConstants:
    def test_b1(self):
        t = gamma_constants(1)
        assert t.gamma_prime_upper == 1.0 and t.gamma_prime_lower == 1.0

    @pytest.mark.parametrize("b, upper", [(2, 4 / 3), (4, 8 / 3), (5, 10 / 3)])
    def test_default_chain(self, b, upper):
        t = gamma_constants(b)
        assert t.gamma_prime_upper == pytest.approx(upper) and t.gamma_prime_lower == 1.0

    def test_search_feeds_lower(self):
        store = ConstantsStore()
        search_dual_critical(4, SearchOptions(starts=4, iters=300), store)
        t = gamma_constants(4, store)
        assert t.gamma_prime_lower == pytest.approx(sqrt(2), abs=1e-4)
        assert "search" in t.lower_provenance
        assert t.gamma_prime_upper == pytest.approx(8 / 3)  # upper untouched

    def test_upper_is_opt_in(self):
        store = ConstantsStore()
        store.record_upper(2, 2 / sqrt(3), "known")
        assert gamma_constants(2, store).gamma_prime_upper == pytest.approx(4 / 3)
        store.use_upper = True
        assert gamma_constants(2, store).gamma_prime_upper == pytest.approx(2 / sqrt(3))

    def test_bad_rank(self):
        with pytest.raises(ValueError):
            gamma_constants(0)


class TestSearch:
    def test_b1(self):
        assert search_dual_critical(1).objective == pytest.approx(1.0)

    def test_b2_matches_grid_oracle(self):
        grid = grid_dual_critical_2d(200)
        r = search_dual_critical(2, SearchOptions(starts=4, iters=300))
        assert grid == pytest.approx(2 / sqrt(3), abs=1e-4)
        assert r.objective == pytest.approx(grid, abs=1e-4)
        # optimum is hexagonal: all three shortest vectors have equal length
        G = r.lattice.gram
        a, b, ab = G[0, 0], G[1, 1], G[0, 0] + G[1, 1] - 2 * abs(G[0, 1])
        assert np.ptp([a, b, ab]) < 1e-6 * a

    def test_history_monotone(self):
        r = search_dual_critical(3, SearchOptions(starts=2, iters=100))
        h = np.asarray(r.history)
        assert np.all(np.diff(h) >= 0)
        assert h[-1] == pytest.approx(r.objective)

    def test_deterministic(self):
        a = search_dual_critical(3, SearchOptions(starts=2, iters=60, seed=5))
        b = search_dual_critical(3, SearchOptions(starts=2, iters=60, seed=5))
        assert np.array_equal(a.lattice.basis, b.lattice.basis)

    def test_objective_invariances(self):
        L = random_lattice(4, 9)
        U = np.array([[1, 2, 0, 0], [0, 1, 0, -1], [0, 0, 1, 3], [0, 0, 0, 1]])
        f = dual_critical_objective(L)
        assert dual_critical_objective(L.transformed(U)) == pytest.approx(f, rel=1e-9)
        assert dual_critical_objective(L.scaled(3.7)) == pytest.approx(f, rel=1e-9)


@settings(max_examples=15)
@given(st.integers(0, 10**6), st.integers(2, 5))
def test_theorem_instances_pass(seed, n):
    """Every theorem-instance verifier passes on valid random input."""
    L = random_lattice(n, seed)
    T = FlatTorus(L)
    certs = verify_transference(L) + [verify_corollary_c(T), verify_minkowski(L), verify_hermite(L)]
    certs += [verify_theorem_b(T, p) for p in range(1, n)]
    certs += [verify_theorem_a(T, (1, p)) for p in range(1, n) if p in (1, 2, n - 2, n - 1)]
    if n % 2 == 0:
        certs.append(verify_corollary_d(T))
    assert all(c.status == PASS for c in certs), [c.inequality_id for c in certs if c.status != PASS]


@settings(max_examples=5)
@given(st.integers(0, 10**6))
def test_soundness_heuristic_never_pass(seed):
    T = FlatTorus(random_lattice(6, seed))
    for c in (verify_theorem_e(T, 3, FAST), verify_theorem_b(T, 3, 3, opts=FAST)):
        assert c.heuristic
        assert c.status in (HEURISTIC_PASS, HEURISTIC_INCONCLUSIVE)
