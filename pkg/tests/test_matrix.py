import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import power_iteration_spectral_norm, random_psd, random_symmetric
from privcov import (
    NumericalError,
    Projector,
    SymmetricMatrix,
    eig_sym,
    frobenius_norm,
    l11_norm,
    load_matrix,
    nuclear_norm,
    rank_k_truncation,
    save_matrix,
    spectral_norm,
)


def sym(entries):
    return SymmetricMatrix(np.array(entries, dtype=float))


class TestSymmetricMatrix:
    def test_mirror_symmetry_is_exact(self):
        gen = np.random.default_rng(0)
        a = gen.standard_normal((5, 5))  # deliberately asymmetric input
        m = SymmetricMatrix(a)
        for i in range(5):
            for j in range(5):
                assert m.entry(i, j) == m.entry(j, i)

    def test_blas_product_symmetrized(self):
        gen = np.random.default_rng(1)
        x = gen.standard_normal((8, 30))
        m = SymmetricMatrix(x @ x.T)
        arr = m.to_array()
        assert np.array_equal(arr, arr.T)

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            SymmetricMatrix(np.zeros((2, 3)))

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            SymmetricMatrix([[np.nan, 0.0], [0.0, 1.0]])
        with pytest.raises(ValueError):
            SymmetricMatrix([[np.inf, 0.0], [0.0, 1.0]])

    def test_symmetry_check_tolerance(self):
        a = np.array([[1.0, 2.0], [2.1, 1.0]])
        with pytest.raises(ValueError):
            SymmetricMatrix(a, check_symmetry_tol=1e-12)
        SymmetricMatrix(a, check_symmetry_tol=0.2)  # within tolerance

    def test_immutable(self):
        m = sym([[1.0, 0.0], [0.0, 1.0]])
        with pytest.raises(ValueError):
            m.to_array()[0, 0] = 5.0

    def test_arithmetic(self):
        a = sym([[1.0, 2.0], [2.0, 3.0]])
        b = sym([[0.5, -1.0], [-1.0, 0.5]])
        assert np.allclose((a + b).to_array(), [[1.5, 1.0], [1.0, 3.5]])
        assert np.allclose((a - b).to_array(), [[0.5, 3.0], [3.0, 2.5]])
        assert np.allclose((2.0 * a).to_array(), [[2.0, 4.0], [4.0, 6.0]])
        with pytest.raises(ValueError):
            a + sym([[1.0]])


class TestEigSym:
    def test_diagonal_is_exact(self):
        e = eig_sym(sym(np.diag([3.0, 2.0, 1.0])))
        assert e.eigenvalues.tolist() == [3.0, 2.0, 1.0]
        assert np.array_equal(e.eigenvectors, np.eye(3))

    def test_2x2_analytic(self):
        e = eig_sym(sym([[2.0, 1.0], [1.0, 2.0]]))
        assert np.allclose(e.eigenvalues, [3.0, 1.0], atol=1e-12)
        v_plus = np.array([1.0, 1.0]) / np.sqrt(2)
        v_minus = np.array([1.0, -1.0]) / np.sqrt(2)
        assert abs(abs(v_plus @ e.eigenvectors[:, 0]) - 1.0) < 1e-12
        assert abs(abs(v_minus @ e.eigenvectors[:, 1]) - 1.0) < 1e-12

    def test_reconstruction_and_orthogonality_random(self):
        gen = np.random.default_rng(2)
        for d in (1, 2, 6, 17, 40):
            a = random_symmetric(gen, d, scale=3.0)
            e = eig_sym(a)
            arr = a.to_array()
            rec = e.eigenvectors @ np.diag(e.eigenvalues) @ e.eigenvectors.T
            assert np.linalg.norm(arr - rec) <= 1e-8 * max(1.0, np.linalg.norm(arr))
            orth = np.linalg.norm(e.eigenvectors.T @ e.eigenvectors - np.eye(d))
            assert orth <= 1e-10 * d
            assert np.all(np.diff(e.eigenvalues) <= 0)

    def test_characteristic_polynomial_oracle(self):
        # independent oracle: eigenvalues are the roots of the characteristic
        # polynomial, built from traces/minors and solved by np.roots
        gen = np.random.default_rng(3)
        for _ in range(20):
            a2 = random_symmetric(gen, 2).to_array()
            tr, det = np.trace(a2), np.linalg.det(a2)
            roots = np.sort(np.roots([1.0, -tr, det]).real)[::-1]
            got = eig_sym(SymmetricMatrix(a2)).eigenvalues
            assert np.allclose(got, roots, atol=1e-8)
        for _ in range(20):
            a3 = random_symmetric(gen, 3).to_array()
            tr = np.trace(a3)
            minors = sum(
                a3[i, i] * a3[j, j] - a3[i, j] * a3[j, i]
                for i, j in itertools.combinations(range(3), 2)
            )
            det = np.linalg.det(a3)
            roots = np.sort(np.roots([1.0, -tr, minors, -det]).real)[::-1]
            got = eig_sym(SymmetricMatrix(a3)).eigenvalues
            assert np.allclose(got, roots, atol=1e-8)

    def test_deterministic(self):
        a = random_symmetric(np.random.default_rng(4), 9)
        e1, e2 = eig_sym(a), eig_sym(a)
        assert np.array_equal(e1.eigenvalues, e2.eigenvalues)
        assert np.array_equal(e1.eigenvectors, e2.eigenvectors)

    def test_repeated_eigenvalues_compared_by_projector(self):
        # individual eigenvector columns are arbitrary inside a degenerate
        # eigenspace; the projector onto it is not
        q, _ = np.linalg.qr(np.random.default_rng(14).standard_normal((4, 4)))
        a = SymmetricMatrix(q @ np.diag([2.0, 2.0, 1.0, 1.0]) @ q.T)
        e = eig_sym(a)
        v2 = e.eigenvectors[:, :2]
        want = q[:, :2] @ q[:, :2].T
        assert np.linalg.norm(v2 @ v2.T - want) <= 1e-8

    def test_nonconvergence_raises_with_residual(self):
        a = sym([[2.0, 1.0], [1.0, 2.0]])
        with pytest.raises(NumericalError) as info:
            eig_sym(a, max_sweeps=0)
        assert info.value.residual is not None
        assert info.value.residual > 0


class TestNorms:
    def test_spectral_cases(self):
        assert spectral_norm(sym(np.diag([1.0, -4.0, 2.0]))) == 4.0
        assert spectral_norm(sym(np.zeros((3, 3)))) == 0.0

    def test_spectral_power_iteration_oracle(self):
        gen = np.random.default_rng(5)
        for _ in range(5):
            a = random_symmetric(gen, 5, scale=2.0)
            want = power_iteration_spectral_norm(a.to_array())
            assert abs(spectral_norm(a) - want) < 1e-8

    def test_nuclear_cases(self):
        assert nuclear_norm(sym(np.diag([1.0, -2.0, 3.0]))) == pytest.approx(6.0, abs=1e-12)
        v = np.array([0.6, 0.8, 0.0])
        assert nuclear_norm(SymmetricMatrix(np.outer(v, v))) == pytest.approx(1.0, abs=1e-12)
        delta = (np.diag([1.0, -1.0, 0.0])) / 10.0
        assert nuclear_norm(SymmetricMatrix(delta)) == pytest.approx(0.2, abs=1e-12)

    def test_l11_cases(self):
        assert l11_norm(sym([[1.0, -1.0], [-1.0, 1.0]])) == 4.0
        assert l11_norm(sym(np.zeros((2, 2)))) == 0.0
        v = np.full(4, 0.5)  # 1/sqrt(d) with d = 4
        assert l11_norm(SymmetricMatrix(np.outer(v, v))) == pytest.approx(4.0, abs=1e-12)

    def test_frobenius_cases(self):
        assert frobenius_norm(sym(np.eye(3))) == pytest.approx(np.sqrt(3.0), abs=1e-15)
        assert frobenius_norm(sym(np.zeros((4, 4)))) == 0.0
        gen = np.random.default_rng(6)
        a = random_symmetric(gen, 4)
        want = np.sqrt(sum(x * x for x in a.to_array().ravel()))  # entrywise oracle
        assert frobenius_norm(a) == pytest.approx(want, rel=1e-14)

    @settings(max_examples=40, deadline=None)
    @given(
        st.integers(min_value=1, max_value=7),
        st.integers(min_value=0, max_value=2**32 - 1),
    )
    def test_norm_inequalities(self, d, seed):
        a = random_symmetric(np.random.default_rng(seed), d, scale=2.5)
        tol = 1e-10
        assert nuclear_norm(a) >= spectral_norm(a) - tol
        assert frobenius_norm(a) <= nuclear_norm(a) + tol
        assert l11_norm(a) >= frobenius_norm(a) - tol

    @settings(max_examples=30, deadline=None)
    @given(
        st.integers(min_value=1, max_value=6),
        st.integers(min_value=0, max_value=2**32 - 1),
    )
    def test_weyl_inequality(self, d, seed):
        gen = np.random.default_rng(seed)
        h = random_symmetric(gen, d)
        p = random_symmetric(gen, d)
        lam_h = eig_sym(h).eigenvalues
        lam_p = eig_sym(p).eigenvalues
        lam_sum = eig_sym(h + p).eigenvalues
        for i in range(d):
            assert lam_h[i] + lam_p[-1] <= lam_sum[i] + 1e-8
            assert lam_sum[i] <= lam_h[i] + lam_p[0] + 1e-8


class TestRankKTruncation:
    def test_diagonal(self):
        e = eig_sym(sym(np.diag([3.0, 2.0, 1.0])))
        got = rank_k_truncation(e, 2).to_array()
        assert np.array_equal(got, np.diag([3.0, 2.0, 0.0]))

    def test_full_rank_reconstructs(self):
        a = random_symmetric(np.random.default_rng(7), 6)
        got = rank_k_truncation(eig_sym(a), 6)
        assert np.linalg.norm(got.to_array() - a.to_array()) <= 1e-8

    def test_signed_ordering_on_indefinite(self):
        e = eig_sym(sym(np.diag([5.0, -4.0, 1.0])))
        got = rank_k_truncation(e, 1).to_array()
        assert np.allclose(got, np.diag([5.0, 0.0, 0.0]), atol=1e-12)

    def test_k_out_of_range(self):
        e = eig_sym(sym(np.eye(3)))
        for k in (0, 4, -1):
            with pytest.raises(ValueError):
                rank_k_truncation(e, k)

    def test_subset_oracle_psd(self):
        # exhaustive oracle: among all k-subsets of eigenpairs, the signed
        # top-k reconstruction minimizes the spectral error for PSD input
        gen = np.random.default_rng(8)
        for _ in range(5):
            a = random_psd(gen, 5)
            e = eig_sym(a)
            k = 2
            best_err, best_sets = None, None
            for subset in itertools.combinations(range(5), k):
                cols = list(subset)
                vk = e.eigenvectors[:, cols]
                approx = (vk * e.eigenvalues[cols]) @ vk.T
                err = spectral_norm(SymmetricMatrix(a.to_array() - approx))
                if best_err is None or err < best_err - 1e-12:
                    best_err, best_sets = err, [subset]
                elif abs(err - best_err) <= 1e-12:
                    best_sets.append(subset)
            assert tuple(range(k)) in best_sets
            top_err = spectral_norm(a - rank_k_truncation(e, k))
            assert top_err <= best_err + 1e-10


class TestProjectorType:
    def test_valid_projector(self):
        p = Projector(3, 1, sym(np.diag([1.0, 0.0, 0.0])))
        assert p.rank == 1

    def test_rejects_non_idempotent(self):
        with pytest.raises(NumericalError):
            Projector(2, 1, sym([[0.5, 0.0], [0.0, 0.7]]))

    def test_rejects_wrong_trace(self):
        with pytest.raises(NumericalError):
            Projector(2, 2, sym(np.diag([1.0, 0.0])))


class TestMatrixFile:
    def test_round_trip_exact(self, tmp_path):
        a = random_symmetric(np.random.default_rng(9), 5, scale=7.3)
        path = tmp_path / "m.mat"
        save_matrix(a, path)
        b = load_matrix(path)
        assert np.array_equal(a.to_array(), b.to_array())
        save_matrix(b, tmp_path / "m2.mat")
        assert (tmp_path / "m.mat").read_bytes() == (tmp_path / "m2.mat").read_bytes()

    def test_rejects_asymmetric(self, tmp_path):
        path = tmp_path / "bad.mat"
        path.write_text("2\n1.0 2.0\n2.5 1.0\n")
        with pytest.raises(ValueError):
            load_matrix(path)

    def test_rejects_malformed(self, tmp_path):
        cases = ["", "2\n1.0 2.0\n", "2\n1.0\n1.0 2.0\n", "x\n1.0\n", "1\nfoo\n"]
        for i, text in enumerate(cases):
            path = tmp_path / f"bad{i}.mat"
            path.write_text(text)
            with pytest.raises(ValueError):
                load_matrix(path)
