"""Compile model terms into applicable gates and Kraus channels.

Three kinds of objects come out of this module:

* :class:`CoherentGate` -- ``exp(-i theta H)`` for a bond Hamiltonian term,
  applied to the purification operator exactly like a TEBD gate;
* :class:`OnSiteChannel` -- Kraus operators ``{B_q}`` of ``exp(tau D_site)``,
  contracted into one local tensor while the channel rank joins the Kraus leg;
* :class:`TwoSiteChannel` -- a nearest-neighbor channel ``exp(tau L_bond)``
  factorized into left/right Kraus halves that share a channel bond of
  dimension ``D'``, indexed by a split ``(k1, k2)`` of the Kraus rank.

Superoperators act on row-major vectorized operators:
``vec(A M B) = (A kron B^T) vec(M)``.  The Choi matrix of a superoperator S
is the index reshuffle ``C[(i,k),(j,l)] = S[(i,j),(k,l)]``; S is completely
positive iff C is PSD, and the scaled eigenvectors of C are Kraus operators.
Instead of a Cholesky factorization (which fails on the numerically
rank-deficient Choi matrices of short-time channels) we take the Hermitian
eigendecomposition, clamp eigenvalues in ``[-psd_tol * lmax, 0]`` to zero and
drop those below a keep threshold.

For a two-site channel with joint Kraus index ``q = k2*(q1-1) + q2`` there is
a residual gauge: any unitary ``U`` may mix the q index before the split.
``U`` changes the channel bond spectrum (hence ``D'`` and the downstream
truncation behavior) but never the channel itself.  The Shannon entropy of
the normalized squared split spectrum is the figure of merit a derivative
free simplex search minimizes over ``U = exp(iG)``, ``G`` Hermitian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from .errors import CompletePositivityError, ShapeError, ValidationError
from .tensor_core import DenseMatrix, as_tensor, dagger, expm, kron, svd

DEFAULT_PSD_TOL = 1e-8
DEFAULT_KEEP_TOL = 1e-14
STRATEGIES = ("a", "b-random", "c-optimized")


# --- compiled objects -----------------------------------------------------------


@dataclass
class CoherentGate:
    sites: tuple[int, int]
    theta: float
    matrix: DenseMatrix  # exp(-i theta H), unitary

    def __post_init__(self) -> None:
        m = self.matrix
        defect = np.linalg.norm(m @ dagger(m) - np.eye(m.shape[0]))
        if defect > 1e-10 * max(1.0, m.shape[0]):
            raise ValidationError(f"coherent gate is not unitary (defect {defect:.3e})")


@dataclass
class ChannelBuildReport:
    choi_min_eigenvalue: float
    clamped_mass: float
    kraus_rank_kept: int
    entropy_initial: float | None = None
    entropy_final: float | None = None
    optimizer_evals: int = 0


@dataclass
class OnSiteChannel:
    site: int
    kraus_ops: list[DenseMatrix]  # each d x d
    report: ChannelBuildReport | None = None

    def __post_init__(self) -> None:
        d = self.kraus_ops[0].shape[0]
        total = sum(dagger(b) @ b for b in self.kraus_ops)
        if np.linalg.norm(total - np.eye(d)) > 1e-10 * d:
            raise ValidationError("on-site Kraus set is not trace preserving")

    @property
    def rank(self) -> int:
        return len(self.kraus_ops)

    @property
    def dim(self) -> int:
        return self.kraus_ops[0].shape[0]

    def is_identity(self) -> bool:
        return self.rank == 1 and np.allclose(self.kraus_ops[0], np.eye(self.dim), atol=1e-14)

    def stacked(self) -> DenseMatrix:
        """Kraus operators as one (rank, d, d) array for contraction."""
        return as_tensor(np.stack(self.kraus_ops))


@dataclass
class TwoSiteChannel:
    """Split Kraus form of a nearest-neighbor channel.

    ``left_ops[q1, mu]`` and ``right_ops[q2, mu]`` are single-site operators;
    the joint Kraus operator for ``q = (q1, q2)`` is
    ``sum_mu left_ops[q1, mu] kron right_ops[q2, mu]`` and reproduces the
    compiled channel for any unitary gauge.
    """

    sites: tuple[int, int]
    left_ops: np.ndarray  # (k1, D', d_l, d_l)
    right_ops: np.ndarray  # (k2, D', d_r, d_r)
    gauge_entropy: float
    report: ChannelBuildReport | None = None

    @property
    def k1(self) -> int:
        return self.left_ops.shape[0]

    @property
    def k2(self) -> int:
        return self.right_ops.shape[0]

    @property
    def channel_bond(self) -> int:
        return self.left_ops.shape[1]

    def joint_kraus(self) -> list[DenseMatrix]:
        """Recombine the split into dense two-site Kraus operators."""
        d1, d2 = self.left_ops.shape[2], self.right_ops.shape[2]
        ops = []
        for q1 in range(self.k1):
            for q2 in range(self.k2):
                b = np.zeros((d1 * d2, d1 * d2), dtype=np.complex128)
                for mu in range(self.channel_bond):
                    b += kron(self.left_ops[q1, mu], self.right_ops[q2, mu])
                ops.append(as_tensor(b))
        return ops

    def superoperator(self) -> DenseMatrix:
        return channel_superop(self.joint_kraus())


def channel_superop(kraus_ops: list[DenseMatrix]) -> DenseMatrix:
    """``sum_q B_q kron conj(B_q)`` (row-major vectorization)."""
    return as_tensor(sum(kron(b, b.conj()) for b in kraus_ops))


# --- superoperator builders -----------------------------------------------------


def _check_square(ops: list[DenseMatrix], what: str) -> int:
    dims = {op.shape for op in ops}
    if len(dims) > 1 or any(s[0] != s[1] for s in dims):
        raise ValidationError(f"{what} must be square matrices of one dimension, got {dims}")
    return ops[0].shape[0]


def build_dissipator_superop(lindblads: list[DenseMatrix], dim: int | None = None) -> DenseMatrix:
    """Vectorized dissipator ``sum_j (L kron conj(L) - (L^dag L kron 1 + 1 kron (L^dag L)^T)/2)``."""
    lindblads = [as_tensor(op) for op in lindblads]
    if not lindblads:
        if dim is None:
            raise ValidationError("dimension required to build an empty dissipator")
        return as_tensor(np.zeros((dim * dim, dim * dim)))
    d = _check_square(lindblads, "Lindblad operators")
    if dim is not None and dim != d:
        raise ValidationError(f"Lindblad dimension {d} does not match requested {dim}")
    eye = np.eye(d)
    out = np.zeros((d * d, d * d), dtype=np.complex128)
    for op in lindblads:
        opd_op = dagger(op) @ op
        out += kron(op, op.conj()) - 0.5 * (kron(opd_op, eye) + kron(eye, opd_op.T))
    return as_tensor(out)


def build_liouvillian_superop(
    h_term: DenseMatrix | None, lindblads: list[DenseMatrix], dim: int | None = None
) -> DenseMatrix:
    """Vectorized generator ``-i H kron 1 + i 1 kron conj(H)`` plus the dissipator."""
    if h_term is None and not lindblads and dim is None:
        raise ValidationError("empty generator needs an explicit dimension")
    if h_term is not None:
        h_term = as_tensor(h_term)
        d = h_term.shape[0]
        if h_term.shape != (d, d):
            raise ShapeError(f"H term must be square, got {h_term.shape}")
        if np.linalg.norm(h_term - dagger(h_term)) > 1e-10 * max(1.0, np.linalg.norm(h_term)):
            raise ValidationError("Hamiltonian term must be Hermitian")
        if dim is not None and dim != d:
            raise ValidationError(f"H dimension {d} does not match requested {dim}")
        dim = d
    gen = build_dissipator_superop(lindblads, dim=dim)
    if h_term is not None:
        eye = np.eye(dim)
        gen = gen + (-1j) * kron(h_term, eye) + 1j * kron(eye, h_term.conj())
    return as_tensor(gen)


# --- Choi transform and Kraus extraction ------------------------------------------


def choi_matrix(superop: DenseMatrix) -> DenseMatrix:
    """Reshuffle ``C[(i,k),(j,l)] = S[(i,j),(k,l)]`` (row-major vectorization)."""
    superop = as_tensor(superop)
    d2 = superop.shape[0]
    d = math.isqrt(d2)
    if superop.shape != (d2, d2) or d * d != d2:
        raise ShapeError(f"superoperator shape {superop.shape} is not (d^2, d^2)")
    return as_tensor(superop.reshape(d, d, d, d).transpose(0, 2, 1, 3).reshape(d2, d2))


def kraus_from_superop(
    superop: DenseMatrix,
    psd_tol: float = DEFAULT_PSD_TOL,
    keep_tol: float = DEFAULT_KEEP_TOL,
) -> tuple[list[DenseMatrix], ChannelBuildReport]:
    """Kraus decomposition of a CPTP superoperator via its Choi matrix.

    Eigenvalues of the Choi matrix in ``[-psd_tol * lmax, 0]`` are clamped to
    zero (their absolute sum is reported as ``clamped_mass``); eigenvalues
    below ``keep_tol * lmax`` are dropped.  Negativity beyond the tolerance
    raises :class:`CompletePositivityError`.
    """
    choi = choi_matrix(superop)
    d2 = choi.shape[0]
    d = math.isqrt(d2)
    herm_defect = np.linalg.norm(choi - dagger(choi))
    if herm_defect > 1e-6 * max(1.0, np.linalg.norm(choi)):
        raise CompletePositivityError(
            f"Choi matrix is not Hermitian (defect {herm_defect:.3e}); not a valid channel"
        )
    vals, vecs = np.linalg.eigh(0.5 * (choi + dagger(choi)))
    lmax = float(vals.max(initial=0.0))
    if lmax <= 0.0:
        raise CompletePositivityError("Choi matrix has no positive weight")
    min_eig = float(vals.min())
    if min_eig < -psd_tol * lmax:
        raise CompletePositivityError(
            f"Choi matrix negative beyond tolerance: min eigenvalue {min_eig:.3e} "
            f"vs floor {-psd_tol * lmax:.3e} (bad generator or too coarse exponential?)"
        )
    clamped_mass = float(-vals[vals < 0.0].sum())
    order = np.argsort(vals)[::-1]
    kraus = []
    for idx in order:
        lam = vals[idx]
        if lam <= keep_tol * lmax:
            break
        kraus.append(as_tensor(np.sqrt(lam) * vecs[:, idx].reshape(d, d)))
    report = ChannelBuildReport(
        choi_min_eigenvalue=min_eig, clamped_mass=clamped_mass, kraus_rank_kept=len(kraus)
    )
    completeness = sum(dagger(b) @ b for b in kraus)
    defect = np.linalg.norm(completeness - np.eye(d))
    if defect > 1e-9 * d:
        raise CompletePositivityError(
            f"Kraus completeness defect {defect:.3e}; superoperator is not trace preserving"
        )
    return kraus, report


# --- compilation entry points ------------------------------------------------------


def compile_coherent_gate(
    h_term: DenseMatrix, theta: float, sites: tuple[int, int] = (0, 1)
) -> CoherentGate:
    """``exp(-i theta H)`` for ``theta`` in {tau/2, tau}."""
    h_term = as_tensor(h_term)
    if np.linalg.norm(h_term - dagger(h_term)) > 1e-10 * max(1.0, np.linalg.norm(h_term)):
        raise ValidationError("Hamiltonian term must be Hermitian")
    return CoherentGate(sites=sites, theta=theta, matrix=expm(-1j * theta * h_term))


def compile_onsite_channel(
    site: int,
    lindblads: list[DenseMatrix],
    tau: float,
    dim: int | None = None,
    psd_tol: float = DEFAULT_PSD_TOL,
) -> OnSiteChannel:
    """Kraus form of ``exp(tau D_site)``; the identity channel if no Lindblads."""
    lindblads = [as_tensor(op) for op in lindblads]
    if not lindblads:
        if dim is None:
            raise ValidationError("dimension required for a Lindblad-free site channel")
        return OnSiteChannel(site=site, kraus_ops=[as_tensor(np.eye(dim))],
                             report=ChannelBuildReport(0.0, 0.0, 1))
    gen = build_dissipator_superop(lindblads, dim=dim)
    kraus, report = kraus_from_superop(expm(tau * gen), psd_tol=psd_tol)
    return OnSiteChannel(site=site, kraus_ops=kraus, report=report)


def balanced_split(k: int) -> tuple[int, int, int]:
    """Most even factor pair of k, padding to the next k' that admits one.

    Returns ``(k1, k2, k_padded)`` with ``k1 >= k2``, ``k1 * k2 = k_padded >= k``
    and ``k1 / k2 <= 2``; ties in ``|k1 - k2|`` resolve toward larger ``k1``.
    """
    if k < 1:
        raise ValidationError("Kraus rank must be >= 1")
    kp = k
    while True:
        pairs = [
            (kp // k2, k2)
            for k2 in range(1, math.isqrt(kp) + 1)
            if kp % k2 == 0 and (kp // k2) <= 2 * k2
        ]
        if pairs:
            k1, k2 = min(pairs, key=lambda p: (p[0] - p[1], -p[0]))
            return k1, k2, kp
        kp += 1


def haar_unitary(k: int, rng: np.random.Generator) -> DenseMatrix:
    """Haar-distributed unitary via the phase-fixed QR of a Ginibre matrix."""
    z = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
    q, r = np.linalg.qr(z)
    return as_tensor(q * (np.diag(r) / np.abs(np.diag(r))))


def _pad_kraus(kraus_ops: list[DenseMatrix], k_padded: int) -> list[DenseMatrix]:
    d = kraus_ops[0].shape[0]
    zeros = [as_tensor(np.zeros((d, d))) for _ in range(k_padded - len(kraus_ops))]
    return list(kraus_ops) + zeros


def _split_matrix(
    kraus_ops: list[DenseMatrix], dims: tuple[int, int], k1: int, k2: int, u: DenseMatrix
) -> DenseMatrix:
    """Gauge-transformed Kraus stack reshaped to the (left | right) split matrix."""
    d1, d2 = dims
    k = k1 * k2
    ops = _pad_kraus(kraus_ops, k)
    b4 = np.stack(ops).reshape(k, d1, d2, d1, d2)
    c = np.tensordot(as_tensor(u), b4, axes=(0, 0))  # ((q1 q2), s1o, s2o, s1i, s2i)
    c = c.reshape(k1, k2, d1, d2, d1, d2)
    return as_tensor(c.transpose(0, 2, 4, 1, 3, 5).reshape(k1 * d1 * d1, k2 * d2 * d2))


def split_entropy(
    kraus_ops: list[DenseMatrix], dims: tuple[int, int], k1: int, k2: int, u: DenseMatrix
) -> float:
    """Shannon entropy (natural log) of the split's normalized squared spectrum."""
    s = np.linalg.svd(_split_matrix(kraus_ops, dims, k1, k2, u), compute_uv=False)
    p = s * s
    total = p.sum()
    if total <= 0.0:
        return 0.0
    p = p[p > 0.0] / total
    return float(-(p * np.log(p)).sum())


def split_two_site_kraus(
    kraus_ops: list[DenseMatrix],
    dims: tuple[int, int],
    k1: int,
    k2: int,
    u: DenseMatrix,
    sites: tuple[int, int] = (0, 1),
    rank_tol: float = 1e-14,
    report: ChannelBuildReport | None = None,
) -> TwoSiteChannel:
    """Split a two-site Kraus set into left/right halves sharing a channel bond.

    The gauge ``C = sum_q U[q, (q1,q2)] B_q`` is reshaped with row index
    ``(q1, s_out_left, s_in_left)`` and column index ``(q2, s_out_right,
    s_in_right)``, SVD'd, and ``sqrt(S)`` is absorbed into both factors;
    ``D'`` counts the singular values above ``rank_tol * s_max``.  If
    ``k1 * k2`` exceeds the number of operators the list is zero-padded.
    """
    if k1 < 1 or k2 < 1 or k1 * k2 < len(kraus_ops):
        raise ValidationError(f"split ({k1}, {k2}) cannot carry Kraus rank {len(kraus_ops)}")
    u = as_tensor(u)
    k = k1 * k2
    if u.shape != (k, k):
        raise ValidationError(f"gauge must be {k} x {k}, got {u.shape}")
    if np.linalg.norm(u @ dagger(u) - np.eye(k)) > 1e-10 * k:
        raise ValidationError("gauge matrix is not unitary")
    d1, d2 = dims
    mat = _split_matrix(kraus_ops, dims, k1, k2, u)
    v, s, wh = svd(mat)
    dprime = max(1, int(np.sum(s > rank_tol * s[0]))) if s.size else 1
    root = np.sqrt(s[:dprime])
    left = (v[:, :dprime] * root).reshape(k1, d1, d1, dprime).transpose(0, 3, 1, 2)
    right = (root[:, None] * wh[:dprime]).reshape(dprime, k2, d2, d2).transpose(1, 0, 2, 3)
    p = s * s
    p = p[p > 0.0] / p.sum()
    entropy = float(-(p * np.log(p)).sum())
    return TwoSiteChannel(
        sites=sites,
        left_ops=as_tensor(left),
        right_ops=as_tensor(right),
        gauge_entropy=entropy,
        report=report,
    )


# --- gauge optimization --------------------------------------------------------------


def _hermitian_from_params(x: np.ndarray, k: int) -> DenseMatrix:
    g = np.zeros((k, k), dtype=np.complex128)
    g[np.diag_indices(k)] = x[:k]
    iu = np.triu_indices(k, 1)
    n_off = iu[0].size
    g[iu] = x[k : k + n_off] + 1j * x[k + n_off :]
    g[(iu[1], iu[0])] = np.conj(g[iu])
    return as_tensor(g)


def unitary_from_params(x: np.ndarray, k: int) -> DenseMatrix:
    """``exp(i G(x))`` with ``G`` Hermitian built from ``k^2`` real parameters."""
    if x.size != k * k:
        raise ValidationError(f"expected {k * k} parameters, got {x.size}")
    return expm(1j * _hermitian_from_params(np.asarray(x, dtype=float), k))


def _simplex_search(objective, x0: np.ndarray, budget: int, window: int = 50,
                    improve_tol: float = 1e-6) -> tuple[np.ndarray, float, int]:
    """Nelder-Mead with the stopping rule: no ``improve_tol`` progress over
    ``window`` iterations, or ``budget`` evaluations."""
    evals = 0
    best = np.inf
    history: list[float] = []

    def tracked(x):
        nonlocal evals, best
        evals += 1
        val = objective(x)
        best = min(best, val)
        return val

    def callback(_xk):
        history.append(best)
        if len(history) > window and history[-window - 1] - history[-1] < improve_tol:
            raise StopIteration

    n = x0.size
    simplex = np.vstack([x0] + [x0 + 0.1 * np.eye(n)[i] for i in range(n)])
    res = scipy.optimize.minimize(
        tracked,
        x0,
        method="Nelder-Mead",
        callback=callback,
        options={"initial_simplex": simplex, "maxfev": budget, "xatol": 1e-12, "fatol": 1e-12},
    )
    return np.asarray(res.x, dtype=float), float(res.fun), evals


def optimize_split_gauge(
    kraus_ops: list[DenseMatrix],
    dims: tuple[int, int],
    k1: int,
    k2: int,
    budget: int = 2000,
    seed: int = 0,
    restarts: int = 5,
) -> tuple[DenseMatrix, float, int]:
    """Search for the unitary gauge minimizing the split entropy.

    Derivative-free simplex descent on ``U = exp(iG)`` with ``k^2`` real
    coordinates; ``restarts`` seeded starting points (the first is the
    identity), each with its own evaluation ``budget``.  Candidates are
    reduced by ``(entropy, restart index)`` so the result is deterministic
    for a fixed seed.  Returns ``(U, entropy, total evaluations)`` with
    entropy never above the identity-gauge entropy.
    """
    k = k1 * k2
    identity_entropy = split_entropy(kraus_ops, dims, k1, k2, np.eye(k))
    if k == 1:
        return as_tensor(np.eye(1)), identity_entropy, 0

    def objective(x):
        return split_entropy(kraus_ops, dims, k1, k2, unitary_from_params(x, k))

    seeds = np.random.SeedSequence(seed).spawn(restarts)
    candidates: list[tuple[float, int, np.ndarray]] = [(identity_entropy, -1, np.zeros(k * k))]
    total_evals = 0
    for i in range(restarts):
        rng = np.random.default_rng(seeds[i])
        x0 = np.zeros(k * k) if i == 0 else rng.normal(scale=0.5, size=k * k)
        x_best, f_best, used = _simplex_search(objective, x0, budget)
        total_evals += used
        candidates.append((f_best, i, x_best))
    entropy, _, x = min(candidates, key=lambda c: (c[0], c[1]))
    return unitary_from_params(x, k), float(entropy), total_evals


def compile_two_site_channel(
    sites: tuple[int, int],
    h_term: DenseMatrix | None,
    lindblads: list[DenseMatrix],
    tau: float,
    dims: tuple[int, int],
    strategy: str = "a",
    seed: int = 0,
    psd_tol: float = DEFAULT_PSD_TOL,
    optimizer_budget: int = 2000,
) -> TwoSiteChannel:
    """Full pipeline: generator -> exponential -> Kraus set -> split form.

    Strategies: ``a`` puts the whole Kraus rank on the left site
    (``k2 = 1``, identity gauge); ``b-random`` uses the most balanced split
    with a seeded Haar-random gauge; ``c-optimized`` additionally optimizes
    the gauge entropy.  The recombined channel is identical in all cases.
    """
    if strategy not in STRATEGIES:
        raise ValidationError(f"strategy must be one of {STRATEGIES}, got {strategy!r}")
    d1, d2 = dims
    gen = build_liouvillian_superop(h_term, lindblads, dim=d1 * d2)
    kraus, report = kraus_from_superop(expm(tau * gen), psd_tol=psd_tol)
    k = len(kraus)
    if strategy == "a":
        k1, k2 = k, 1
        u = as_tensor(np.eye(k))
        report.entropy_initial = report.entropy_final = split_entropy(kraus, dims, k1, k2, u)
    else:
        k1, k2, kp = balanced_split(k)
        report.entropy_initial = split_entropy(kraus, dims, k1, k2, np.eye(kp))
        if strategy == "b-random":
            u = haar_unitary(kp, np.random.default_rng(seed))
            report.entropy_final = split_entropy(kraus, dims, k1, k2, u)
        else:
            u, report.entropy_final, report.optimizer_evals = optimize_split_gauge(
                kraus, dims, k1, k2, budget=optimizer_budget, seed=seed
            )
    return split_two_site_kraus(kraus, dims, k1, k2, u, sites=sites, report=report)
