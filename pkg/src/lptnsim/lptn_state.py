"""Locally purified tensor network states: rho = X X^dag, positive by construction.

A state is a chain of rank-4 tensors ``A[l]`` with fixed axis order

    (left_bond, right_bond, physical, kraus)  =  axes (0, 1, 2, 3),

so ``X[s_1..s_N; r_1..r_N] = sum over bonds of A[1][., m_1, s_1, r_1]
A[2][m_1, m_2, s_2, r_2] ...``.  Boundary tensors have bond dimension 1 on
the open side.  The density operator is never formed during evolution; all
compression happens on X, where discarded singular values translate into a
certified trace-norm error on rho.

Mixed canonical form with respect to a center ``c`` means: for every site
``l < c`` the matrix ``A[l]`` reshaped as (left, phys, kraus) x (right) is an
isometry, and for ``l > c`` the reshape (left) x (right, phys, kraus) has
orthonormal rows.  In that gauge the squared 2-norm of X is carried entirely
by the center tensor, which is what makes the discarded-weight accounting of
:meth:`LptnState.compress` exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .errors import CapacityError, ContractViolationError, ShapeError, ValidationError
from .tensor_core import DenseMatrix, DenseTensor, as_tensor, frobenius, qr, rq, svd

AXIS_LEFT, AXIS_RIGHT, AXIS_PHYS, AXIS_KRAUS = 0, 1, 2, 3
#: axis names accepted by :meth:`LptnState.compress`
BOND_AXES = ("left", "right", "kraus")

DENSITY_DIM_CAP = 4096


def two_norm_increment(delta: float) -> float:
    """Exact 2-norm error of one renormalized compression: sqrt(2(1 - sqrt(1 - delta^2)))."""
    delta = min(max(float(delta), 0.0), 1.0)
    return float(np.sqrt(2.0 * (1.0 - np.sqrt(max(0.0, 1.0 - delta * delta)))))


@dataclass
class TruncationEvent:
    layer: int
    site: int
    axis: str
    delta: float


@dataclass
class ErrorLedger:
    """Running account of every discarded weight, feeding the error certificate."""

    events: list[TruncationEvent] = field(default_factory=list)
    accumulated_two_norm: float = 0.0
    delta_max: float = 0.0
    layer_count: int = 0

    def record(self, layer: int, site: int, axis: str, delta: float) -> None:
        if not 0.0 <= delta <= 1.0:
            raise ValidationError(f"discarded weight {delta} outside [0, 1]")
        self.events.append(TruncationEvent(layer, site, axis, delta))
        self.accumulated_two_norm += two_norm_increment(delta)
        self.delta_max = max(self.delta_max, delta)

    def copy(self) -> "ErrorLedger":
        return ErrorLedger(
            events=list(self.events),
            accumulated_two_norm=self.accumulated_two_norm,
            delta_max=self.delta_max,
            layer_count=self.layer_count,
        )

    def snapshot(self) -> dict:
        return {
            "event_count": len(self.events),
            "accumulated_two_norm": self.accumulated_two_norm,
            "delta_max": self.delta_max,
            "layer_count": self.layer_count,
        }


def truncate_spectrum(
    s: NDArray[np.float64], max_dim: int, delta_cap: float
) -> tuple[int, float]:
    """Decide how many singular values survive a compression.

    Values are discarded greedily from the smallest: down to ``max_dim``
    unconditionally, then further while the cumulative normalized discarded
    weight stays within ``delta_cap``.  Returns ``(kept, delta)`` with
    ``delta = sqrt(sum discarded s^2 / sum all s^2)``.
    """
    if max_dim < 1:
        raise ValidationError(f"max_dim must be >= 1, got {max_dim}")
    s = np.asarray(s, dtype=np.float64)
    total = float(np.sum(s * s))
    if total <= 0.0:
        return 1, 0.0
    # tail[k] = normalized weight of s[k:], so tail[kept] is the discarded weight^2
    tail = np.concatenate([np.cumsum((s * s)[::-1])[::-1] / total, [0.0]])
    keep = min(len(s), max_dim)
    while keep > 1 and np.sqrt(tail[keep - 1]) <= delta_cap:
        keep -= 1
    return keep, float(np.sqrt(tail[keep]))


@dataclass
class CompressionDetail:
    """Diagnostics of a single compression, for certification and debugging."""

    delta: float
    kept_dim: int
    original_dim: int
    spectrum: NDArray[np.float64]
    #: co-isometry dropped by gauge freedom (kraus-axis compressions only)
    dropped_kraus_isometry: DenseMatrix | None = None


class LptnState:
    """A locally purified tensor network state with an error ledger.

    Operations mutate the state in place (a state is owned by one evolution
    at a time) and return ``self`` where chaining is convenient; use
    :meth:`copy` for snapshots.
    """

    def __init__(
        self,
        tensors: list[DenseTensor],
        center: int | None = None,
        ledger: ErrorLedger | None = None,
    ):
        if not tensors:
            raise ValidationError("state needs at least one site")
        self.tensors = [as_tensor(t) for t in tensors]
        for l, t in enumerate(self.tensors):
            if t.ndim != 4:
                raise ShapeError(f"site {l}: expected a rank-4 tensor, got rank {t.ndim}")
            if min(t.shape) < 1:
                raise ShapeError(f"site {l}: zero-dimensional axis in shape {t.shape}")
        if self.tensors[0].shape[AXIS_LEFT] != 1 or self.tensors[-1].shape[AXIS_RIGHT] != 1:
            raise ShapeError("boundary tensors must have outer bond dimension 1")
        for l in range(len(self.tensors) - 1):
            if self.tensors[l].shape[AXIS_RIGHT] != self.tensors[l + 1].shape[AXIS_LEFT]:
                raise ShapeError(f"bond mismatch between sites {l} and {l + 1}")
        self.center = center
        self.ledger = ledger if ledger is not None else ErrorLedger()

    # --- constructors ---------------------------------------------------------

    @classmethod
    def from_product_state(cls, local_kets: list) -> "LptnState":
        """Pure product state; all bond and Kraus dimensions are 1."""
        tensors = []
        for i, ket in enumerate(local_kets):
            v = as_tensor(ket).reshape(-1)
            if abs(np.linalg.norm(v) - 1.0) > 1e-12:
                raise ValidationError(f"ket at site {i} is not normalized")
            tensors.append(v.reshape(1, 1, v.size, 1))
        state = cls(tensors, center=0)
        return state

    @classmethod
    def from_maximally_mixed(cls, local_dims: list[int]) -> "LptnState":
        """Tensor product of maximally mixed sites; Kraus dimension d per site."""
        tensors = []
        for d in local_dims:
            if d < 1:
                raise ValidationError("local dimensions must be >= 1")
            tensors.append((np.eye(d, dtype=np.complex128) / np.sqrt(d)).reshape(1, 1, d, d))
        return cls(tensors, center=0)

    @classmethod
    def random_mixed(
        cls, local_dims: list[int], bond: int, kraus: int, seed: int
    ) -> "LptnState":
        """Seeded random entangled mixed state, canonicalized and normalized."""
        if bond < 1 or kraus < 1:
            raise ValidationError("bond and kraus dimensions must be >= 1")
        rng = np.random.default_rng(seed)
        n = len(local_dims)
        # cap bond dims by what the surrounding network can support
        caps_left = np.cumprod([d * kraus for d in local_dims], dtype=object)
        caps_right = np.cumprod([d * kraus for d in local_dims[::-1]], dtype=object)[::-1]
        bond_dims = [1] + [
            int(min(bond, caps_left[l], caps_right[l + 1])) for l in range(n - 1)
        ] + [1]
        tensors = []
        for l, d in enumerate(local_dims):
            shape = (bond_dims[l], bond_dims[l + 1], d, kraus)
            tensors.append(
                as_tensor(rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
            )
        state = cls(tensors)
        state.canonicalize(0)
        state.rescale(1.0)
        return state

    # --- basic structure ------------------------------------------------------

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    @property
    def local_dims(self) -> list[int]:
        return [t.shape[AXIS_PHYS] for t in self.tensors]

    @property
    def bond_dims(self) -> list[int]:
        return [t.shape[AXIS_RIGHT] for t in self.tensors[:-1]]

    @property
    def kraus_dims(self) -> list[int]:
        return [t.shape[AXIS_KRAUS] for t in self.tensors]

    def copy(self) -> "LptnState":
        return LptnState(
            [t.copy() for t in self.tensors], center=self.center, ledger=self.ledger.copy()
        )

    def norm(self) -> float:
        """Frobenius norm of X (equals sqrt(Tr rho))."""
        if self.center is not None:
            return frobenius(self.tensors[self.center])
        env = np.ones((1, 1), dtype=np.complex128)
        for t in self.tensors:
            blob = np.tensordot(env, t, axes=(0, AXIS_LEFT))  # (Nc, m, s, r)
            env = np.tensordot(t.conj(), blob, axes=([0, 2, 3], [0, 2, 3]))  # (Mc, m)
        return float(np.sqrt(abs(env[0, 0])))

    def rescale(self, target: float = 1.0) -> None:
        """Scale the 2-norm of X to ``target`` (requires a known center)."""
        if self.center is None:
            self.canonicalize(0)
        nrm = frobenius(self.tensors[self.center])
        if nrm == 0.0:
            raise ValidationError("cannot normalize a zero state")
        self.tensors[self.center] = self.tensors[self.center] * (target / nrm)

    # --- canonical form -------------------------------------------------------

    def push_center_right(self, l: int) -> None:
        """QR site ``l`` into left-isometric form, absorbing R into site ``l+1``."""
        a = self.tensors[l]
        n, m, d, k = a.shape
        q, r = qr(a.transpose(0, 2, 3, 1).reshape(n * d * k, m))
        chi = q.shape[1]
        self.tensors[l] = q.reshape(n, d, k, chi).transpose(0, 3, 1, 2)
        self.tensors[l + 1] = np.tensordot(r, self.tensors[l + 1], axes=(1, 0))

    def push_center_left(self, l: int) -> None:
        """LQ site ``l`` into right-isometric form, absorbing L into site ``l-1``."""
        a = self.tensors[l]
        n, m, d, k = a.shape
        lmat, q = rq(a.reshape(n, m * d * k))
        chi = q.shape[0]
        self.tensors[l] = q.reshape(chi, m, d, k)
        self.tensors[l - 1] = np.tensordot(
            self.tensors[l - 1], lmat, axes=(AXIS_RIGHT, 0)
        ).transpose(0, 3, 1, 2)

    def canonicalize(self, new_center: int) -> "LptnState":
        """Bring the state into mixed canonical form with the given center.

        A pure gauge transformation: the reconstructed density operator is
        unchanged.  From an unknown gauge this sweeps in from both ends; from
        a known center it only moves along the path.
        """
        if not 0 <= new_center < self.n_sites:
            raise ValidationError(f"center {new_center} out of range")
        if self.center is None:
            for l in range(new_center):
                self.push_center_right(l)
            for l in range(self.n_sites - 1, new_center, -1):
                self.push_center_left(l)
        elif new_center > self.center:
            for l in range(self.center, new_center):
                self.push_center_right(l)
        else:
            for l in range(self.center, new_center, -1):
                self.push_center_left(l)
        self.center = new_center
        return self

    def isometry_defect(self, l: int, side: str) -> float:
        """Deviation of site ``l`` from the left/right isometry condition."""
        a = self.tensors[l]
        n, m, d, k = a.shape
        if side == "left":
            mat = a.transpose(0, 2, 3, 1).reshape(n * d * k, m)
            gram = mat.conj().T @ mat
        elif side == "right":
            mat = a.reshape(n, m * d * k)
            gram = mat @ mat.conj().T
        else:
            raise ValidationError(f"side must be 'left' or 'right', got {side!r}")
        return float(np.linalg.norm(gram - np.eye(gram.shape[0])))

    # --- compression ----------------------------------------------------------

    def compress(
        self,
        site: int,
        axis: str,
        max_dim: int,
        delta_cap: float = 0.0,
        layer: int | None = None,
    ) -> float:
        """SVD-truncate one axis of the center tensor; returns the discarded weight.

        Requires the orthogonality center at ``site`` so the normalized
        singular spectrum of the chosen split is the exact Schmidt data of X.
        The surviving spectrum is rescaled by ``1/sqrt(1 - delta^2)`` (never a
        re-sweep), which keeps ``||X||`` and makes
        ``||X - X~||_2^2 = 2(1 - sqrt(1 - delta^2))`` an identity.  Bond
        truncations absorb the discarded basis rotation into the neighbor;
        kraus truncations drop the residual unitary outright (pure gauge).
        The weight is appended to the ledger.
        """
        return self.compress_detailed(site, axis, max_dim, delta_cap, layer).delta

    def compress_detailed(
        self,
        site: int,
        axis: str,
        max_dim: int,
        delta_cap: float = 0.0,
        layer: int | None = None,
    ) -> CompressionDetail:
        if axis not in BOND_AXES:
            raise ValidationError(f"axis must be one of {BOND_AXES}, got {axis!r}")
        if self.center != site:
            raise ContractViolationError(
                f"compression needs the orthogonality center at site {site}, it is at {self.center}"
            )
        a = self.tensors[site]
        n, m, d, k = a.shape
        dropped = None
        if axis == "right":
            u, s, vh = svd(a.transpose(0, 2, 3, 1).reshape(n * d * k, m))
        elif axis == "left":
            u, s, vh = svd(a.reshape(n, m * d * k))
        else:
            u, s, vh = svd(a.reshape(n * m * d, k))
        keep, delta = truncate_spectrum(s, max_dim, delta_cap)
        original = len(s)
        current_dim = {"right": m, "left": n, "kraus": k}[axis]
        if keep == current_dim:
            # nothing discarded and no dimension change: leave the gauge alone
            detail = CompressionDetail(delta, keep, original, s)
        else:
            kept_total = float(np.sum(s[:keep] ** 2))
            factor = float(np.linalg.norm(s)) / np.sqrt(kept_total) if kept_total > 0.0 else 1.0
            snew = s[:keep] * factor
            if axis == "right":
                self.tensors[site] = (
                    (u[:, :keep] * snew).reshape(n, d, k, keep).transpose(0, 3, 1, 2)
                )
                self.tensors[site + 1] = np.tensordot(
                    vh[:keep], self.tensors[site + 1], axes=(1, 0)
                )
            elif axis == "left":
                self.tensors[site] = (snew[:, None] * vh[:keep]).reshape(keep, m, d, k)
                self.tensors[site - 1] = np.tensordot(
                    self.tensors[site - 1], u[:, :keep], axes=(AXIS_RIGHT, 0)
                ).transpose(0, 3, 1, 2)
            else:
                dropped = as_tensor(vh[:keep])
                self.tensors[site] = (u[:, :keep] * snew).reshape(n, m, d, keep)
            detail = CompressionDetail(delta, keep, original, s, dropped)
        self.ledger.record(
            self.ledger.layer_count if layer is None else layer, site, axis, detail.delta
        )
        return detail

    # --- dense reconstruction ---------------------------------------------------

    def _check_density_cap(self, dim_cap: int) -> int:
        dim = int(np.prod(self.local_dims, dtype=object))
        if dim > dim_cap:
            raise CapacityError(f"total Hilbert dimension {dim} exceeds cap {dim_cap}")
        return dim

    def reconstruct_density(self, dim_cap: int = DENSITY_DIM_CAP) -> DenseMatrix:
        """Contract the network (tracing Kraus indices) into the full rho."""
        dim = self._check_density_cap(dim_cap)
        acc = np.ones((1, 1, 1, 1), dtype=np.complex128)  # (P, Pc, m, Mc)
        for t in self.tensors:
            blob = np.tensordot(acc, t, axes=(2, AXIS_LEFT))  # (P, Pc, Mc, m2, s, r)
            acc = np.tensordot(blob, t.conj(), axes=([2, 5], [0, 3]))  # (P, Pc, m2, s, M2, S)
            p, pc = acc.shape[0], acc.shape[1]
            d, m2, cm2 = t.shape[AXIS_PHYS], t.shape[AXIS_RIGHT], t.shape[AXIS_RIGHT]
            acc = acc.transpose(0, 3, 1, 5, 2, 4).reshape(p * d, pc * d, m2, cm2)
        rho = acc[:, :, 0, 0]
        return as_tensor(0.5 * (rho + rho.conj().T))

    def reconstruct_purification(self, element_cap: int = 1 << 22) -> DenseMatrix:
        """Contract the network into the dense X (rows: physical, cols: Kraus)."""
        dim = int(np.prod(self.local_dims, dtype=object))
        kdim = int(np.prod(self.kraus_dims, dtype=object))
        if dim * kdim > element_cap:
            raise CapacityError(f"dense X would hold {dim * kdim} elements, cap {element_cap}")
        acc = np.ones((1, 1, 1), dtype=np.complex128)  # (P, R, m)
        for t in self.tensors:
            blob = np.tensordot(acc, t, axes=(2, AXIS_LEFT))  # (P, R, m2, s, r)
            p, rdim = acc.shape[0], acc.shape[1]
            blob = blob.transpose(0, 3, 1, 4, 2)  # (P, s, R, r, m2)
            acc = blob.reshape(p * t.shape[AXIS_PHYS], rdim * t.shape[AXIS_KRAUS], t.shape[AXIS_RIGHT])
        return as_tensor(acc[:, :, 0])

    # --- measurement ------------------------------------------------------------

    def expectation_local(self, site: int, observable: DenseMatrix) -> float:
        """``Tr(rho O_site)`` by contracting only the center tensor with O."""
        obs = as_tensor(observable)
        d = self.tensors[site].shape[AXIS_PHYS]
        if obs.shape != (d, d):
            raise ValidationError(f"observable shape {obs.shape} does not match site dim {d}")
        if np.linalg.norm(obs - obs.conj().T) > 1e-10 * max(1.0, np.linalg.norm(obs)):
            raise ValidationError("local observable must be Hermitian")
        self.canonicalize(site)
        a = self.tensors[site]
        val = np.einsum("nmsr,st,nmtr->", a.conj(), obs, a)
        return float(val.real)

    def expectation_two_site(self, site: int, observable: DenseMatrix) -> complex:
        """``Tr(rho O_{site,site+1})`` with the center moved to ``site``."""
        if site >= self.n_sites - 1:
            raise ValidationError(f"site {site} has no right neighbor")
        d1 = self.tensors[site].shape[AXIS_PHYS]
        d2 = self.tensors[site + 1].shape[AXIS_PHYS]
        obs = as_tensor(observable)
        if obs.shape != (d1 * d2, d1 * d2):
            raise ValidationError(
                f"observable shape {obs.shape} does not match bond dim {(d1 * d2, d1 * d2)}"
            )
        self.canonicalize(site)
        theta = np.tensordot(self.tensors[site], self.tensors[site + 1], axes=(AXIS_RIGHT, AXIS_LEFT))
        # theta axes: (n, s1, r1, m2, s2, r2)
        o4 = obs.reshape(d1, d2, d1, d2)
        val = np.einsum("narbcq,acik,nirbkq->", theta.conj(), o4, theta)
        return complex(val)
