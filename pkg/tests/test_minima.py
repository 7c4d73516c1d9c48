import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import well_conditioned_bases
from oracles import box_minima, box_vectors
from systolattice import (
    EUCLIDEAN,
    BudgetExceededError,
    Lattice,
    NormSpec,
    OptimizerOptions,
    dual,
    enumerate_points,
    exterior_power_lattice,
    hexagonal,
    integer_lattice,
    lll_reduce,
    minima_basis,
    random_lattice,
    shortest_vector,
    successive_minima,
    transference_products,
)
from systolattice.minima import MinimaProfile, brute_force_minima

HEX_L1 = (4 / 3) ** 0.25


def as_set(vectors):
    return {tuple(np.round(v, 9)) for v in vectors}


class TestEnumerate:
    def test_z2_radius_one(self):
        assert as_set(enumerate_points(integer_lattice(2), radius=1.0)) == {(1.0, 0.0), (0.0, 1.0)}

    def test_z2_radius_one_and_half(self):
        got = as_set(enumerate_points(integer_lattice(2), radius=1.5))
        assert got == {(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, -1.0)} or got == {
            (1.0, 0.0),
            (0.0, 1.0),
            (1.0, 1.0),
            (-1.0, 1.0),
        }

    def test_hexagonal_kissing(self):
        H = hexagonal()
        r = HEX_L1 + 1e-6
        got = enumerate_points(H, radius=r)
        _, V = box_vectors(H.basis, 3)
        expected = V[np.linalg.norm(V, axis=1) <= r]
        assert len(got) == 3 and len(expected) == 6

    def test_one_per_sign_pair(self):
        V = np.asarray(enumerate_points(random_lattice(4, 0), radius=1.6))
        for i in range(len(V)):
            for j in range(len(V)):
                assert not np.allclose(V[i], -V[j])

    def test_mass_norm_filter(self):
        E = exterior_power_lattice(random_lattice(4, 2), 2)
        spec = NormSpec("mass", p=2, n=4)
        r = 1.3
        got = np.asarray(enumerate_points(E, spec, r))
        assert np.all(spec.evaluate(got)[0] <= r + 1e-9)
        # every point of norm <= r in a generous box is present
        _, V = box_vectors(lll_reduce(E).basis, 2)
        inside = V[spec.evaluate(V)[0] <= r - 1e-9]
        assert len(inside) == 2 * len(got)

    def test_budget(self):
        with pytest.raises(BudgetExceededError) as info:
            enumerate_points(random_lattice(6, 0), radius=5.0, cap=100)
        assert info.value.partial is not None

    def test_bad_radius(self):
        with pytest.raises(ValueError):
            enumerate_points(integer_lattice(2), radius=0.0)


class TestSuccessiveMinima:
    def test_integer(self):
        for b in range(1, 6):
            assert np.allclose(successive_minima(integer_lattice(b)).values, 1.0)

    def test_diagonal(self):
        assert np.allclose(successive_minima(Lattice(np.diag([1.0, 2.0, 3.0]))).values, [1.0, 2.0, 3.0])

    def test_hexagonal_against_box(self):
        H = hexagonal()
        got = successive_minima(H).values
        assert np.allclose(got, box_minima(H.basis, 3), atol=1e-12)
        assert np.allclose(got, HEX_L1, atol=1e-12)

    def test_vectors_match_coefficients(self):
        L = random_lattice(5, 3)
        prof = successive_minima(L)
        assert np.allclose(prof.coefficients @ L.basis, prof.vectors)
        assert np.allclose(np.linalg.norm(prof.vectors, axis=1), prof.values)
        assert np.linalg.matrix_rank(prof.vectors) == 5

    def test_sign_and_tie_normalization(self):
        prof = successive_minima(integer_lattice(3))
        assert all(next(c for c in row if c) > 0 for row in prof.coefficients.tolist())
        # equal norms: lexicographically smallest coefficient vector first
        assert prof.coefficients.tolist() == sorted(prof.coefficients.tolist())
        assert successive_minima(integer_lattice(3)).coefficients.tolist() == prof.coefficients.tolist()

    def test_count(self):
        assert len(successive_minima(random_lattice(5, 1), count=2)) == 2
        with pytest.raises(ValueError):
            successive_minima(random_lattice(3, 1), count=4)

    def test_shortest_vector(self):
        L = random_lattice(4, 5)
        value, v = shortest_vector(L)
        assert value == pytest.approx(np.linalg.norm(v))
        assert value == pytest.approx(successive_minima(L, count=1).values[0])

    @pytest.mark.parametrize("seed", range(12))
    def test_matches_box_oracle(self, seed):
        b = 1 + seed % 4
        L = lll_reduce(random_lattice(b, 100 + seed))
        assert np.allclose(successive_minima(L).values, box_minima(L.basis, 3 if b == 4 else 5), atol=1e-9)

    def test_package_brute_force_agrees(self):
        L = random_lattice(3, 2)
        assert np.allclose(brute_force_minima(L, 4), successive_minima(L).values, atol=1e-9)

    def test_exact_mass_profile(self):
        E = exterior_power_lattice(random_lattice(4, 6), 2)
        prof = successive_minima(E, NormSpec("mass", p=2, n=4))
        assert not prof.heuristic
        assert np.all(np.diff(prof.values) >= -1e-12)
        assert np.array_equal(prof.lower, prof.values)

    def test_heuristic_profile_brackets(self):
        E = exterior_power_lattice(random_lattice(6, 1), 3)
        spec = NormSpec("mass", p=3, n=6, opts=OptimizerOptions(starts=4))
        prof = successive_minima(E, spec, count=1)
        assert prof.heuristic
        assert prof.lower[0] <= prof.values[0] + 1e-9 <= prof.upper[0] + 2e-9
        lam = successive_minima(E, count=1).values[0]
        assert prof.lower[0] >= lam - 1e-9

    def test_json(self):
        d = successive_minima(hexagonal()).to_json()
        assert set(d) >= {"norm", "values", "vectors", "coefficients", "heuristic"}


class TestMinimaBasis:
    def test_integer(self):
        mb = minima_basis(successive_minima(integer_lattice(4)), integer_lattice(4))
        B = np.abs(mb.basis.basis)
        assert np.allclose(B[np.lexsort(B.T)], np.eye(4)[np.lexsort(np.eye(4).T)])
        assert np.allclose(mb.norms, 1.0)

    def test_unchanged_when_already_basis(self):
        L = random_lattice(4, 8)
        prof = successive_minima(L)
        if abs(round(np.linalg.det(prof.coefficients.astype(float)))) == 1:
            mb = minima_basis(prof, L)
            assert np.array_equal(mb.coefficients, prof.coefficients)

    def test_d4_index_two(self):
        # D4: integer vectors with even coordinate sum; e1 +- e2, e3 +- e4 are minimal but
        # span an index-2 sublattice.
        D4 = Lattice([[1, -1, 0, 0], [0, 1, -1, 0], [0, 0, 1, -1], [0, 0, 1, 1]])
        vecs = np.array([[1, 1, 0, 0], [1, -1, 0, 0], [0, 0, 1, 1], [0, 0, 1, -1]], dtype=float)
        coeffs = np.rint(D4.coordinates(vecs)).astype(int)
        prof = MinimaProfile(EUCLIDEAN, np.full(4, np.sqrt(2)), vecs, coeffs, np.full(4, np.sqrt(2)), np.full(4, np.sqrt(2)))
        assert abs(round(np.linalg.det(coeffs))) == 2
        mb = minima_basis(prof, D4)
        assert abs(round(np.linalg.det(mb.coefficients.astype(float)))) == 1
        assert mb.within_bounds
        assert np.all(mb.norms <= np.maximum(1, np.arange(1, 5) / 2) * np.sqrt(2) + 1e-9)
        assert D4.contains(mb.basis.basis) and mb.basis.contains(D4.basis)

    @pytest.mark.parametrize("seed", range(15))
    def test_random_bases_unimodular(self, seed):
        L = random_lattice(2 + seed % 7, seed)
        mb = minima_basis(successive_minima(L), L)
        assert abs(np.linalg.det(mb.coefficients.astype(float))) == pytest.approx(1.0, abs=1e-6)
        assert mb.within_bounds

    def test_wrong_length(self):
        L = random_lattice(3, 0)
        with pytest.raises(ValueError):
            minima_basis(successive_minima(L, count=2), L)


class TestTransference:
    def test_integer(self):
        assert all(t.product == pytest.approx(1.0) for t in transference_products(integer_lattice(5)))

    def test_hexagonal(self):
        ts = transference_products(hexagonal())
        assert ts[0].product == pytest.approx(2 / np.sqrt(3), abs=1e-12)
        assert [t.i for t in ts] == [1, 2]

    def test_witnesses_pair_with_dual(self):
        L = random_lattice(3, 4)
        for t in transference_products(L):
            assert np.linalg.norm(t.primal) * np.linalg.norm(t.dual) == pytest.approx(t.product)
            assert dual(L).contains(t.dual)

    def test_mass_comass_pairs(self):
        E = exterior_power_lattice(random_lattice(4, 3), 2)
        ts = transference_products(E, NormSpec("mass", p=2, n=4))
        assert all(t.product >= 1 - 1e-9 for t in ts)


@settings(max_examples=25)
@given(well_conditioned_bases(1, 4, cond_max=50))
def test_oracle_property(B):
    L = Lattice(B)
    R = lll_reduce(L)
    assert np.allclose(successive_minima(L).values, box_minima(R.basis, 3), atol=1e-9)


@settings(max_examples=25)
@given(st.integers(0, 10**6), st.integers(2, 6), st.sampled_from([0.5, 2.0, 7.0]))
def test_scaling(seed, b, c):
    L = random_lattice(b, seed)
    assert np.allclose(successive_minima(L.scaled(c)).values, c * successive_minima(L).values, rtol=1e-9)


@settings(max_examples=25)
@given(st.integers(0, 10**6), st.integers(2, 6))
def test_unimodular_invariance(seed, b):
    L = random_lattice(b, seed)
    rng = np.random.default_rng(seed)
    U = np.eye(b, dtype=int)
    for _ in range(6):
        i, j = rng.choice(b, 2, replace=False)
        U[i] += int(rng.integers(-2, 3)) * U[j]
    assert np.allclose(successive_minima(L.transformed(U)).values, successive_minima(L).values, rtol=1e-9)
    assert np.allclose(successive_minima(lll_reduce(L)).values, successive_minima(L).values, rtol=1e-9)


@settings(max_examples=30)
@given(st.integers(0, 10**6), st.integers(2, 7))
def test_transference_bounds(seed, b):
    for t in transference_products(random_lattice(b, seed)):
        assert 1 - 1e-9 <= t.product <= b + 1e-9
