import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import well_conditioned_bases
from oracles import box_vectors
from systolattice import (
    DegenerateLatticeError,
    Lattice,
    LatticeFormatError,
    dual,
    hexagonal,
    integer_lattice,
    lll_reduce,
    lll_transform,
    load_lattice,
    random_lattice,
    save_lattice,
)
from systolattice.lattice import covolume, is_unimodular, lattice_from_json, lovasz_holds


def same_lattice(A: Lattice, B: Lattice, tol=1e-6):
    return A.contains(B.basis, tol) and B.contains(A.basis, tol)


class TestConstruction:
    def test_rank_deficient_rejected(self):
        with pytest.raises(DegenerateLatticeError, match="full rank"):
            Lattice([[1.0, 2.0], [2.0, 4.0]])

    def test_non_square_rejected(self):
        with pytest.raises(DegenerateLatticeError):
            Lattice([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])

    def test_nonfinite_rejected(self):
        with pytest.raises(DegenerateLatticeError):
            Lattice([[np.inf, 0.0], [0.0, 1.0]])

    def test_basis_is_read_only(self):
        L = integer_lattice(2)
        with pytest.raises(ValueError):
            L.basis[0, 0] = 5.0

    def test_gram(self):
        L = Lattice([[1.0, 1.0], [0.0, 2.0]])
        assert np.allclose(L.gram, [[2.0, 2.0], [2.0, 4.0]])


class TestCovolume:
    def test_integer_lattice(self):
        for b in range(1, 6):
            assert covolume(integer_lattice(b)) == pytest.approx(1.0)

    def test_hexagonal_by_hand(self):
        # det [[1, 0], [1/2, sqrt3/2]] = sqrt3/2
        L = Lattice([[1.0, 0.0], [0.5, np.sqrt(3) / 2]])
        assert L.covolume == pytest.approx(np.sqrt(3) / 2, rel=1e-12)

    @pytest.mark.parametrize("c", [0.5, 2.0, 7.0])
    def test_homogeneity(self, c):
        L = random_lattice(4, 3)
        assert L.scaled(c).covolume == pytest.approx(c**4 * L.covolume, rel=1e-9)

    def test_hexagonal_helper_unit_covolume(self):
        H = hexagonal()
        assert H.covolume == pytest.approx(1.0, rel=1e-12)
        assert np.linalg.norm(H.basis[0]) == pytest.approx(np.linalg.norm(H.basis[1]))


class TestDual:
    def test_integer_self_dual(self):
        assert np.allclose(dual(integer_lattice(3)).basis, np.eye(3))

    def test_diagonal(self):
        D = dual(Lattice(np.diag([2.0, 0.5])))
        assert np.allclose(D.basis, np.diag([0.5, 2.0]))

    def test_involution(self):
        L = random_lattice(5, 11)
        DD = dual(dual(L))
        assert same_lattice(L, DD)
        assert DD.covolume == pytest.approx(L.covolume, abs=1e-9)

    def test_pairing_identity(self):
        L = random_lattice(6, 2)
        assert np.allclose(dual(L).basis @ L.basis.T, np.eye(6), atol=1e-9)

    def test_ill_conditioned_rejected(self):
        with pytest.raises(DegenerateLatticeError, match="condition"):
            dual(Lattice(np.diag([1.0, 1e-13])))


class TestLLL:
    def test_integer_unchanged(self):
        assert np.allclose(np.abs(lll_reduce(integer_lattice(4)).basis), np.eye(4))

    def test_skewed_2d(self):
        L = Lattice([[1.0, 0.0], [1000.0, 1.0]])
        R = lll_reduce(L)
        _, V = box_vectors(L.basis, 3)
        # the box is far too small on the raw basis; check against the true answer
        assert np.min(np.linalg.norm(R.basis, axis=1)) == pytest.approx(1.0)
        assert np.allclose(np.sort(np.abs(R.basis).ravel()), [0, 0, 1, 1])
        assert np.min(np.linalg.norm(V, axis=1)) >= 1.0 - 1e-12

    def test_random_gaussian_covolume(self):
        B = np.random.default_rng(5).standard_normal((5, 5))
        L = Lattice(B)
        R = lll_reduce(L)
        assert R.covolume == pytest.approx(L.covolume, rel=1e-9)
        assert same_lattice(L, R)
        assert lovasz_holds(R.basis)

    def test_transform_is_unimodular(self):
        L = random_lattice(6, 4)
        B, U = lll_transform(L.basis)
        assert is_unimodular(U)
        assert np.allclose(U @ L.basis, B)

    @pytest.mark.parametrize("delta", [0.25, 1.0, 1.5])
    def test_bad_delta(self, delta):
        with pytest.raises(ValueError):
            lll_transform(np.eye(2), delta)


class TestRandom:
    def test_deterministic(self):
        assert np.array_equal(random_lattice(3, 7).basis, random_lattice(3, 7).basis)

    def test_seeds_differ(self):
        assert not np.allclose(random_lattice(3, 7).basis, random_lattice(3, 8).basis)

    @pytest.mark.parametrize("seed", range(10))
    def test_unit_covolume(self, seed):
        L = random_lattice(1 + seed % 8, seed)
        assert L.covolume == pytest.approx(1.0, abs=1e-9)
        assert dual(L).covolume == pytest.approx(1.0, abs=1e-9)


class TestJSON:
    def test_roundtrip_file(self, tmp_path):
        L = random_lattice(4, 1)
        save_lattice(L, tmp_path / "l.json")
        assert np.array_equal(load_lattice(tmp_path / "l.json").basis, L.basis)

    def test_roundtrip_dict(self):
        L = hexagonal()
        assert np.array_equal(Lattice.from_json(json.loads(json.dumps(L.to_json()))).basis, L.basis)

    @pytest.mark.parametrize(
        "payload, match",
        [
            ("{", "invalid JSON"),
            ("[1, 2]", "JSON object"),
            ('{"dim": 2}', "basis"),
            ('{"dim": 2, "basis": [[1, 0, 0], [0, 1, 0]]}', "square"),
            ('{"dim": 3, "basis": [[1, 0], [0, 1]]}', "square"),
            ('{"dim": 0, "basis": [[1]]}', "dim"),
            ('{"basis": [[1, 2], [2, 4]]}', "rank-deficient"),
            ('{"basis": [["a", 0], [0, 1]]}', "numbers"),
        ],
    )
    def test_malformed(self, payload, match):
        with pytest.raises(LatticeFormatError, match=match):
            lattice_from_json(payload)


@given(well_conditioned_bases())
def test_dual_covolume_reciprocal(B):
    L = Lattice(B)
    assert L.covolume * dual(L).covolume == pytest.approx(1.0, rel=1e-9)
    assert np.allclose(dual(L).basis @ L.basis.T, np.eye(L.dim), atol=1e-9)


@given(well_conditioned_bases(2, 6), st.floats(0.3, 0.99))
def test_lll_preserves_lattice(B, delta):
    L = Lattice(B)
    R = lll_reduce(L, delta)
    assert R.covolume == pytest.approx(L.covolume, rel=1e-9)
    assert L.contains(R.basis) and R.contains(L.basis)
    assert lovasz_holds(R.basis, delta)
