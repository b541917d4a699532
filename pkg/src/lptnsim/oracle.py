"""Dense Liouville-space reference for validating the tensor network engine.

Everything here works on the full Hilbert space (capacity-capped), with
row-major vectorization: ``vec(M)`` concatenates the rows of ``M``, so
``vec(A M B) = (A kron B^T) vec(M)``.  The generator is assembled from the
full-space embedded operators and the Lindblad form directly, independently
of the per-term superoperator builders used by the channel compiler, so the
two routes cross-check each other in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .errors import CapacityError, ValidationError
from .models import LindbladModel, identity
from .tensor_core import DenseMatrix, as_tensor, dagger, kron

DEFAULT_DIM_CAP = 64  # product of local dims; superoperators are dim^2 x dim^2
_EXPM_DENSE_LIMIT = 1024  # above this Liouville dimension, step with expm_multiply


def vec(m: DenseMatrix) -> np.ndarray:
    """Row-major vectorization."""
    return as_tensor(m).reshape(-1)


def unvec(v: np.ndarray, dim: int | None = None) -> DenseMatrix:
    """Inverse of :func:`vec` for a square matrix."""
    v = np.asarray(v)
    if dim is None:
        dim = int(round(np.sqrt(v.size)))
    return as_tensor(v.reshape(dim, dim))


def embed(op: DenseMatrix, sites: tuple[int, ...], local_dims: list[int]) -> DenseMatrix:
    """Embed an operator acting on contiguous ``sites`` into the full chain."""
    first, last = sites[0], sites[-1]
    left = int(np.prod(local_dims[:first], dtype=object)) if first > 0 else 1
    right = int(np.prod(local_dims[last + 1:], dtype=object)) if last < len(local_dims) - 1 else 1
    out = op
    if left > 1:
        out = kron(identity(left), out)
    if right > 1:
        out = kron(out, identity(right))
    return out


@dataclass
class DenseLiouvillian:
    """Vectorized generator of a full chain; ``matrix`` acts on ``vec(rho)``."""

    dim: int  # Hilbert-space dimension; the matrix is dim^2 x dim^2
    matrix: DenseMatrix


def _check_capacity(local_dims: list[int], dim_cap: int) -> int:
    dim = int(np.prod(local_dims, dtype=object))
    if dim > dim_cap:
        raise CapacityError(
            f"total Hilbert dimension {dim} exceeds cap {dim_cap}; "
            "pass a larger dim_cap to accept the memory cost"
        )
    return dim


def assemble(model: LindbladModel, dim_cap: int = DEFAULT_DIM_CAP) -> DenseLiouvillian:
    """Assemble the dense vectorized Lindblad generator of ``model``."""
    dim = _check_capacity(model.local_dims, dim_cap)
    eye = identity(dim)
    gen = np.zeros((dim * dim, dim * dim), dtype=np.complex128)
    h_full = np.zeros((dim, dim), dtype=np.complex128)
    for bond, h in model.h_terms.items():
        h_full += embed(h, bond, model.local_dims)
    gen += -1j * (kron(h_full, eye) - kron(eye, h_full.T))
    jump_ops = [
        embed(op, (site,), model.local_dims)
        for site, ops in sorted(model.lindblads_onsite.items()) for op in ops
    ] + [
        embed(op, bond, model.local_dims)
        for bond, ops in sorted(model.lindblads_bond.items()) for op in ops
    ]
    for op in jump_ops:
        opd_op = dagger(op) @ op
        gen += kron(op, op.conj()) - 0.5 * (kron(opd_op, eye) + kron(eye, opd_op.T))
    return DenseLiouvillian(dim=dim, matrix=as_tensor(gen))


def apply_generator(liou: DenseLiouvillian, rho: DenseMatrix) -> DenseMatrix:
    """Evaluate ``L(rho)`` densely."""
    return unvec(liou.matrix @ vec(rho), liou.dim)


def _check_density(rho: DenseMatrix, psd_tol: float = 1e-9) -> DenseMatrix:
    rho = as_tensor(rho)
    scale = max(1.0, float(np.linalg.norm(rho)))
    if np.linalg.norm(rho - dagger(rho)) > 1e-9 * scale:
        raise ValidationError("density matrix is not Hermitian within tolerance")
    min_eig = float(np.linalg.eigvalsh(0.5 * (rho + dagger(rho))).min())
    if min_eig < -psd_tol * scale:
        raise ValidationError(f"density matrix has negative eigenvalue {min_eig:.3e}")
    return rho


def propagate(rho0: DenseMatrix, liou: DenseLiouvillian, t: float) -> DenseMatrix:
    """Exact evolution ``unvec(expm(t L) vec(rho0))``."""
    rho0 = _check_density(rho0)
    if rho0.shape != (liou.dim, liou.dim):
        raise ValidationError(f"state shape {rho0.shape} does not match dimension {liou.dim}")
    v = vec(rho0)
    if liou.dim**2 <= _EXPM_DENSE_LIMIT:
        out = scipy.linalg.expm(t * liou.matrix) @ v
    else:
        out = scipy.sparse.linalg.expm_multiply(t * liou.matrix, v)
    return unvec(out, liou.dim)


class Propagator:
    """Fixed-step exact propagator; caches the dense step matrix when small."""

    def __init__(self, liou: DenseLiouvillian, dt: float):
        self.liou = liou
        self.dt = dt
        self._step_matrix = (
            scipy.linalg.expm(dt * liou.matrix) if liou.dim**2 <= _EXPM_DENSE_LIMIT else None
        )

    def advance(self, rho: DenseMatrix) -> DenseMatrix:
        v = vec(rho)
        if self._step_matrix is not None:
            v = self._step_matrix @ v
        else:
            v = scipy.sparse.linalg.expm_multiply(self.dt * self.liou.matrix, v)
        return unvec(v, self.liou.dim)


@dataclass
class SteadyStateResult:
    rho: DenseMatrix
    residual: float  # ||L(rho)||_F
    degenerate: bool


def steady_state(liou: DenseLiouvillian, kernel_tol: float = 1e-9) -> SteadyStateResult:
    """Stationary state as the null vector of the generator.

    Eigenvalues within ``kernel_tol * max(1, ||L||)`` of zero count as the
    kernel.  A degenerate kernel is flagged and resolved by projecting the
    maximally mixed state onto it (least squares on the eigenvector span).
    """
    gen = liou.matrix
    scale = max(1.0, float(np.linalg.norm(gen, ord=np.inf)))
    vals, vecs = scipy.linalg.eig(gen)
    order = np.argsort(np.abs(vals))
    kernel = [i for i in order if np.abs(vals[i]) <= kernel_tol * scale]
    if not kernel:
        kernel = [order[0]]
    degenerate = len(kernel) > 1
    if degenerate:
        basis = vecs[:, kernel]
        target = vec(identity(liou.dim) / liou.dim)
        coeff, *_ = np.linalg.lstsq(basis, target, rcond=None)
        raw = basis @ coeff
    else:
        raw = vecs[:, kernel[0]]
    rho = unvec(raw, liou.dim)
    rho = 0.5 * (rho + dagger(rho))
    tr = np.trace(rho)
    if abs(tr) < 1e-12:
        raise ValidationError("steady-state candidate has vanishing trace")
    rho = as_tensor(rho / tr)
    residual = float(np.linalg.norm(apply_generator(liou, rho)))
    return SteadyStateResult(rho=rho, residual=residual, degenerate=degenerate)


# --- metric suite ---------------------------------------------------------------


def trace_norm(m: DenseMatrix) -> float:
    """``||M||_1 = Tr sqrt(M^dag M)`` (sum of singular values)."""
    return float(np.linalg.svd(as_tensor(m), compute_uv=False).sum())


def trace_distance(rho: DenseMatrix, sigma: DenseMatrix) -> float:
    """Unnormalized trace-norm distance ``||rho - sigma||_1``."""
    diff = as_tensor(rho) - as_tensor(sigma)
    if np.linalg.norm(diff - dagger(diff)) <= 1e-9 * max(1.0, np.linalg.norm(diff)):
        return float(np.abs(np.linalg.eigvalsh(0.5 * (diff + dagger(diff)))).sum())
    return trace_norm(diff)


def hs_distance(rho: DenseMatrix, sigma: DenseMatrix) -> float:
    """Frobenius (Hilbert-Schmidt) distance."""
    return float(np.linalg.norm(as_tensor(rho) - as_tensor(sigma)))


def hs_distance_rel(rho: DenseMatrix, sigma: DenseMatrix) -> float:
    """``||rho - sigma||_2 / ||sigma||_2`` (our normalization convention)."""
    return hs_distance(rho, sigma) / float(np.linalg.norm(as_tensor(sigma)))


def _psd_sqrt(m: DenseMatrix, neg_tol: float = 1e-9) -> DenseMatrix:
    m = as_tensor(m)
    vals, vecs = np.linalg.eigh(0.5 * (m + dagger(m)))
    scale = max(1.0, float(np.abs(vals).max(initial=0.0)))
    if vals.min(initial=0.0) < -neg_tol * scale:
        raise ValidationError(f"matrix is not PSD: min eigenvalue {vals.min():.3e}")
    vals = np.clip(vals, 0.0, None)
    return as_tensor((vecs * np.sqrt(vals)) @ dagger(vecs))


def fidelity(rho: DenseMatrix, sigma: DenseMatrix) -> float:
    """Uhlmann fidelity ``Tr sqrt(sqrt(sigma) rho sqrt(sigma))``."""
    rho = as_tensor(rho)
    sigma = as_tensor(sigma)
    if rho.shape != sigma.shape:
        raise ValidationError(f"shape mismatch {rho.shape} vs {sigma.shape}")
    root = _psd_sqrt(sigma)
    inner = root @ rho @ root
    vals = np.linalg.eigvalsh(0.5 * (inner + dagger(inner)))
    scale = max(1.0, float(np.abs(vals).max(initial=0.0)))
    if vals.min(initial=0.0) < -1e-9 * scale:
        raise ValidationError(f"fidelity kernel not PSD: min eigenvalue {vals.min():.3e}")
    return float(np.sqrt(np.clip(vals, 0.0, None)).sum())


def infidelity(rho: DenseMatrix, sigma: DenseMatrix) -> float:
    return 1.0 - fidelity(rho, sigma)


@dataclass
class NormTransferReport:
    """Both sides of the purification-to-state error transfer inequalities.

    For ``rho = X X^dag`` and ``sigma = Y Y^dag``:
    ``||rho - sigma||_1 <= sqrt(2) ||X - Y||_2`` and
    ``F(rho, sigma) >= (2 - ||X - Y||_2^2) / 2``; the margins are the
    (inequality-satisfying) differences and must be >= -1e-10.
    """

    two_norm_distance: float
    trace_distance: float
    fidelity: float
    trace_margin: float
    fidelity_margin: float


def norm_transfer_check(x: DenseMatrix, y: DenseMatrix) -> NormTransferReport:
    x = as_tensor(x)
    y = as_tensor(y)
    if x.shape != y.shape:
        raise ValidationError(f"purification shapes differ: {x.shape} vs {y.shape}")
    dist2 = float(np.linalg.norm(x - y))
    rho = x @ dagger(x)
    sigma = y @ dagger(y)
    dist1 = trace_distance(rho, sigma)
    fid = fidelity(rho, sigma)
    return NormTransferReport(
        two_norm_distance=dist2,
        trace_distance=dist1,
        fidelity=fid,
        trace_margin=np.sqrt(2.0) * dist2 - dist1,
        fidelity_margin=fid - 0.5 * (2.0 - dist2**2),
    )


def random_density_matrix(dim: int, rng: np.random.Generator) -> DenseMatrix:
    """Full-rank random density matrix (Wishart construction)."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = g @ dagger(g)
    return as_tensor(rho / np.trace(rho))
