"""Dense complex multi-linear algebra kernel.

Every tensor in this package is a C-contiguous ``numpy.ndarray`` of
``complex128``; the flat buffer is the row-major linearization of the index
tuple, which is also the storage convention assumed by every reshape formula
in the higher-level modules.  The functions here wrap numpy/scipy routines
behind validated, deterministic contracts:

* ``contract``  -- pairwise tensor contraction (generalized matrix product),
* ``svd``       -- thin SVD with descending singular values,
* ``qr`` / ``rq`` -- thin orthogonal factorizations for canonicalization sweeps,
* ``eigh``      -- Hermitian eigendecomposition (ascending eigenvalues),
* ``expm``      -- matrix exponential via scaling-and-squaring Pade.

All functions are pure; inputs are never mutated.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from .errors import ContractViolationError, NumericError, ShapeError

#: Type of every dense tensor handled by this package.
DenseTensor = NDArray[np.complex128]
#: A rank-2 DenseTensor.
DenseMatrix = NDArray[np.complex128]


def as_tensor(data, shape: Sequence[int] | None = None) -> DenseTensor:
    """Coerce ``data`` to a C-contiguous complex128 array, optionally reshaped."""
    arr = np.ascontiguousarray(data, dtype=np.complex128)
    if shape is not None:
        arr = arr.reshape(tuple(shape))
    return arr


def check_finite(t: DenseTensor, context: str = "tensor") -> DenseTensor:
    """Raise :class:`NumericError` if ``t`` contains NaN or Inf entries."""
    if not np.all(np.isfinite(t.view(np.float64))):
        raise NumericError(f"non-finite entries in {context}")
    return t


def dagger(m: DenseMatrix) -> DenseMatrix:
    """Conjugate transpose."""
    return m.conj().T


def frobenius(t: DenseTensor) -> float:
    """Frobenius norm (vector 2-norm of the flattened tensor)."""
    return float(np.linalg.norm(t.ravel()))


def contract(
    a: DenseTensor,
    b: DenseTensor,
    pairs: Sequence[tuple[int, int]],
) -> DenseTensor:
    """Contract ``a`` with ``b`` over the given ``(axis_of_a, axis_of_b)`` pairs.

    The result carries the uncontracted axes of ``a`` (in their original
    order) followed by the uncontracted axes of ``b``, and each entry is the
    sum over the paired indices.  ``pairs`` may be empty, in which case the
    result is the outer product.

    Raises:
        ShapeError: if an axis is out of range, an axis is paired twice, or
            paired axes have unequal dimensions.
    """
    a = as_tensor(a)
    b = as_tensor(b)
    axes_a = [p[0] for p in pairs]
    axes_b = [p[1] for p in pairs]
    for ax, t, name in ((axes_a, a, "a"), (axes_b, b, "b")):
        for i in ax:
            if not -t.ndim <= i < t.ndim:
                raise ShapeError(f"axis {i} out of range for operand {name} with rank {t.ndim}")
        norm = [i % t.ndim for i in ax]
        if len(set(norm)) != len(norm):
            raise ShapeError(f"axis paired twice for operand {name}: {ax}")
    for i, j in pairs:
        if a.shape[i] != b.shape[j]:
            raise ShapeError(
                f"cannot contract axis {i} of shape {a.shape} with axis {j} of shape {b.shape}"
            )
    out = np.tensordot(a, b, axes=(axes_a, axes_b)) if pairs else np.tensordot(a, b, axes=0)
    return as_tensor(out)


def svd(m: DenseMatrix) -> tuple[DenseMatrix, NDArray[np.float64], DenseMatrix]:
    """Thin SVD ``m = U @ diag(s) @ Vh`` with ``s`` real, nonnegative, descending.

    Falls back from the fast divide-and-conquer driver to the standard one on
    the rare LAPACK convergence failure; raises :class:`NumericError` with a
    condition summary if both fail.
    """
    m = as_tensor(m)
    if m.ndim != 2 or m.size == 0:
        raise ShapeError(f"svd expects a nonempty matrix, got shape {m.shape}")
    try:
        u, s, vh = scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        try:
            u, s, vh = scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")
        except np.linalg.LinAlgError as exc:  # pragma: no cover - pathological input
            raise NumericError(
                f"SVD did not converge for shape {m.shape}, "
                f"fro-norm {np.linalg.norm(m):.3e}, max |entry| {np.max(np.abs(m)):.3e}"
            ) from exc
    return as_tensor(u), s.astype(np.float64), as_tensor(vh)


def qr(m: DenseMatrix) -> tuple[DenseMatrix, DenseMatrix]:
    """Thin QR: ``m = Q @ R`` with isometric ``Q`` (``Q^dag Q = 1``)."""
    m = as_tensor(m)
    if m.ndim != 2 or m.size == 0:
        raise ShapeError(f"qr expects a nonempty matrix, got shape {m.shape}")
    q, r = np.linalg.qr(m, mode="reduced")
    return as_tensor(q), as_tensor(r)


def rq(m: DenseMatrix) -> tuple[DenseMatrix, DenseMatrix]:
    """Thin RQ-style split ``m = L @ Q`` with row-orthonormal ``Q`` (``Q Q^dag = 1``).

    Companion of :func:`qr` for right-to-left canonicalization sweeps.
    """
    m = as_tensor(m)
    q, r = qr(dagger(m))
    return as_tensor(dagger(r)), as_tensor(dagger(q))


def eigh(
    m: DenseMatrix, herm_tol: float = 1e-10
) -> tuple[NDArray[np.float64], DenseMatrix]:
    """Hermitian eigendecomposition with ascending eigenvalues.

    The input must be Hermitian within ``herm_tol * ||m||_F``; it is
    symmetrized internally before factorization.  Column ``i`` of the
    returned matrix is the eigenvector for eigenvalue ``i``.

    Raises:
        ContractViolationError: if ``m`` deviates from Hermiticity beyond
            tolerance.
    """
    m = as_tensor(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"eigh expects a square matrix, got shape {m.shape}")
    scale = np.linalg.norm(m)
    dev = np.linalg.norm(m - dagger(m))
    if scale > 0 and dev > herm_tol * scale:
        raise ContractViolationError(
            f"matrix is not Hermitian: deviation {dev:.3e} exceeds {herm_tol:.1e} * {scale:.3e}"
        )
    sym = 0.5 * (m + dagger(m))
    vals, vecs = np.linalg.eigh(sym)
    return vals.astype(np.float64), as_tensor(vecs)


def expm(m: DenseMatrix) -> DenseMatrix:
    """Matrix exponential by scaling-and-squaring with Pade approximants.

    Suitable for the non-normal Liouvillian superoperators this package
    exponentiates; no eigendecomposition path is used.
    """
    m = as_tensor(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"expm expects a square matrix, got shape {m.shape}")
    out = scipy.linalg.expm(m)
    return check_finite(as_tensor(out), "expm result")


def kron(a: DenseMatrix, b: DenseMatrix) -> DenseMatrix:
    """Kronecker product with row-major composite indices ((i1,i2),(j1,j2))."""
    return as_tensor(np.kron(as_tensor(a), as_tensor(b)))


def operator_norm(m: DenseMatrix) -> float:
    """Spectral norm (largest singular value)."""
    m = as_tensor(m)
    return float(np.linalg.norm(m, ord=2))
