import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lptnsim.errors import ContractViolationError, ShapeError
from lptnsim.tensor_core import (
    as_tensor,
    contract,
    dagger,
    eigh,
    expm,
    qr,
    rq,
    svd,
)

from conftest import random_complex, random_hermitian


def brute_force_matmul(a, b):
    """Triple-loop reference product, the independent oracle for contract."""
    n, k = a.shape
    k2, m = b.shape
    assert k == k2
    out = np.zeros((n, m), dtype=complex)
    for i in range(n):
        for j in range(m):
            for p in range(k):
                out[i, j] += a[i, p] * b[p, j]
    return out


class TestContract:
    def test_identity_on_vector(self):
        v = contract(np.eye(2), as_tensor([1.0, 0.0]).reshape(2), [(1, 0)])
        np.testing.assert_allclose(v, [1.0, 0.0])

    def test_shape_bookkeeping(self, rng):
        a = random_complex(rng, (2, 3, 4))
        b = random_complex(rng, (4, 5))
        assert contract(a, b, [(2, 0)]).shape == (2, 3, 5)

    def test_matches_brute_force_product(self, rng):
        a = random_complex(rng, (3, 3))
        b = random_complex(rng, (3, 3))
        got = contract(a, b, [(1, 0)])
        np.testing.assert_allclose(got, brute_force_matmul(a, b), atol=1e-13)

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ShapeError):
            contract(random_complex(rng, (2, 3)), random_complex(rng, (2, 2)), [(1, 0)])

    def test_axis_out_of_range(self, rng):
        with pytest.raises(ShapeError):
            contract(random_complex(rng, (2, 2)), random_complex(rng, (2, 2)), [(5, 0)])

    def test_axis_paired_twice(self, rng):
        a = random_complex(rng, (2, 2))
        with pytest.raises(ShapeError):
            contract(a, a, [(0, 0), (0, 1)])

    @given(seed=st.integers(0, 10_000), alpha_re=st.floats(-2, 2), alpha_im=st.floats(-2, 2))
    @settings(max_examples=25, deadline=None)
    def test_bilinear(self, seed, alpha_re, alpha_im):
        rng = np.random.default_rng(seed)
        alpha = alpha_re + 1j * alpha_im
        a = random_complex(rng, (3, 4))
        b = random_complex(rng, (4, 2))
        lhs = contract(alpha * a, b, [(1, 0)])
        rhs = alpha * contract(a, b, [(1, 0)])
        np.testing.assert_allclose(lhs, rhs, atol=1e-13)


class TestSvd:
    def test_diagonal(self):
        _, s, _ = svd(np.diag([3.0, 2.0, 1.0]))
        np.testing.assert_allclose(s, [3.0, 2.0, 1.0])

    def test_unitary_has_unit_spectrum(self, rng):
        q, _ = qr(random_complex(rng, (4, 4)))
        _, s, _ = svd(q)
        np.testing.assert_allclose(s, np.ones(4), atol=1e-12)

    def test_reconstruction(self, rng):
        m = random_complex(rng, (6, 4))
        u, s, vh = svd(m)
        np.testing.assert_allclose(u @ np.diag(s) @ vh, m, atol=1e-12 * np.linalg.norm(m))
        np.testing.assert_allclose(dagger(u) @ u, np.eye(4), atol=1e-12)
        np.testing.assert_allclose(vh @ dagger(vh), np.eye(4), atol=1e-12)
        assert np.all(np.diff(s) <= 1e-15)

    @given(seed=st.integers(0, 10_000), n=st.integers(1, 64), m=st.integers(1, 64))
    @settings(max_examples=20, deadline=None)
    def test_reconstruction_property(self, seed, n, m):
        mat = random_complex(np.random.default_rng(seed), (n, m))
        u, s, vh = svd(mat)
        assert np.linalg.norm(u @ np.diag(s) @ vh - mat) <= 1e-12 * max(1.0, np.linalg.norm(mat))


class TestQr:
    def test_identity(self):
        q, r = qr(np.eye(3))
        np.testing.assert_allclose(np.abs(q), np.eye(3), atol=1e-14)
        np.testing.assert_allclose(q @ r, np.eye(3), atol=1e-14)

    def test_column_vector_norm(self):
        _, r = qr(as_tensor([[3.0], [4.0]]))
        np.testing.assert_allclose(np.abs(r), [[5.0]], atol=1e-14)

    def test_reconstruction(self, rng):
        m = random_complex(rng, (6, 3))
        q, r = qr(m)
        np.testing.assert_allclose(q @ r, m, atol=1e-12 * np.linalg.norm(m))
        np.testing.assert_allclose(dagger(q) @ q, np.eye(3), atol=1e-12)

    def test_rq_rows_orthonormal(self, rng):
        m = random_complex(rng, (3, 7))
        l, q = rq(m)
        np.testing.assert_allclose(l @ q, m, atol=1e-12 * np.linalg.norm(m))
        np.testing.assert_allclose(q @ dagger(q), np.eye(3), atol=1e-12)


class TestEigh:
    def test_identity(self):
        vals, _ = eigh(np.eye(3))
        np.testing.assert_allclose(vals, [1.0, 1.0, 1.0])

    def test_pauli_z_spectrum(self):
        vals, _ = eigh(np.diag([1.0, -1.0]))
        np.testing.assert_allclose(vals, [-1.0, 1.0])

    def test_residual(self, rng):
        m = random_hermitian(rng, 5)
        vals, vecs = eigh(m)
        np.testing.assert_allclose(m @ vecs, vecs * vals, atol=1e-11 * np.linalg.norm(m))
        np.testing.assert_allclose(dagger(vecs) @ vecs, np.eye(5), atol=1e-12)

    def test_rejects_non_hermitian(self, rng):
        with pytest.raises(ContractViolationError):
            eigh(random_complex(rng, (4, 4)))


class TestExpm:
    def test_zero(self):
        np.testing.assert_allclose(expm(np.zeros((3, 3))), np.eye(3))

    def test_diagonal(self):
        out = expm(np.diag([1.0 + 0j, -2.0]))
        np.testing.assert_allclose(out, np.diag([np.e, np.exp(-2.0)]), rtol=1e-12)

    def test_rotation_block_vs_taylor(self):
        # independent oracle: Taylor series of [[0,1],[-1,0]] to machine precision
        m = as_tensor([[0.0, 1.0], [-1.0, 0.0]])
        series = np.zeros((2, 2), dtype=complex)
        term = np.eye(2, dtype=complex)
        for k in range(1, 40):
            series += term
            term = term @ m / k
        np.testing.assert_allclose(expm(m), series, atol=1e-14)
        np.testing.assert_allclose(
            expm(m), [[np.cos(1), np.sin(1)], [-np.sin(1), np.cos(1)]], atol=1e-13
        )

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=15, deadline=None)
    def test_inverse_property(self, seed):
        rng = np.random.default_rng(seed)
        m = random_complex(rng, (5, 5))
        m *= 10.0 / max(1.0, np.linalg.norm(m, 2))
        np.testing.assert_allclose(expm(m) @ expm(-m), np.eye(5), atol=1e-10)
