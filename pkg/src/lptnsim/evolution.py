"""Trotterized Lindblad evolution of locally purified states.

A time step ``exp(tau L)`` is split into layers of mutually commuting local
propagators.  For on-site dissipation the second-order form has five layers,

    exp(tau Ho/2) exp(tau He/2) exp(tau D) exp(tau He/2) exp(tau Ho/2),

with coherent TEBD gates on odd/even bonds and one Kraus channel per site in
the middle; for two-site Lindblads the three-layer odd/even form

    exp(tau Lo/2) exp(tau Le) exp(tau Lo/2)

applies split two-site channels.  First-order variants drop the symmetric
halving.  Layers are swept with a co-moving orthogonality center, so every
enlarged axis is compressed in exact mixed-canonical form and its discarded
weight goes to the ledger, from which the runtime error estimator and the
end-of-run trace-norm certificate

    (t b)^3 N^2 / (4 m^2) + 6 (2m + 1) N delta_max

are computed (``b`` bounds the local Liouvillian terms in diamond norm).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import oracle
from .channels import (
    CoherentGate,
    OnSiteChannel,
    TwoSiteChannel,
    compile_coherent_gate,
    compile_onsite_channel,
    compile_two_site_channel,
)
from .errors import ValidationError
from .lptn_state import ErrorLedger, LptnState, truncate_spectrum
from .models import LindbladModel, identity, local_operator
from .tensor_core import DenseMatrix, as_tensor, kron, operator_norm, qr, rq, svd

ONSITE_SECOND_ORDER = "onsite-5-layer"
TWOSITE_SECOND_ORDER = "twosite-3-layer"
FIRST_ORDER = "first-order-2-layer"


# --- schedules -------------------------------------------------------------------


@dataclass
class CoherentLayer:
    parity: str  # "odd" or "even"
    theta: float
    gates: dict[int, CoherentGate]  # left site -> gate


@dataclass
class OnSiteDissipativeLayer:
    channels: dict[int, OnSiteChannel]  # site -> channel (identity sites omitted)


@dataclass
class TwoSiteLiouvillianLayer:
    parity: str
    theta: float
    channels: dict[int, TwoSiteChannel]  # left site -> channel


Layer = CoherentLayer | OnSiteDissipativeLayer | TwoSiteLiouvillianLayer


@dataclass
class TrotterSchedule:
    kind: str
    tau: float
    order: int
    layers: list[Layer]
    model: LindbladModel
    strategy: str = "a"
    seed: int = 0

    def summary(self) -> dict:
        return {
            "kind": self.kind,
            "tau": self.tau,
            "order": self.order,
            "strategy": self.strategy,
            "seed": self.seed,
            "layers": [type(layer).__name__ for layer in self.layers],
        }


@dataclass
class TruncationControls:
    max_bond: int
    max_kraus: int
    delta_cap: float = 1e-14


def _attached_onsite(model: LindbladModel, bond: tuple[int, int]) -> list[DenseMatrix]:
    """One-site Lindblads folded into this bond term (left-adjacent rule).

    Site ``j`` attaches to bond ``(j-1, j)``; site 0 attaches to ``(0, 1)``.
    """
    l, r = bond
    d_l, d_r = model.local_dims[l], model.local_dims[r]
    ops = [kron(identity(d_l), op) for op in model.lindblads_onsite.get(r, [])]
    if l == 0:
        ops += [kron(op, identity(d_r)) for op in model.lindblads_onsite.get(0, [])]
    return ops


def _bond_parity(l: int) -> str:
    # bonds (1,2), (3,4), ... in 1-based site counting are the odd layer
    return "odd" if l % 2 == 0 else "even"


def build_schedule(
    model: LindbladModel,
    tau: float,
    order: int = 2,
    strategy: str = "a",
    seed: int = 0,
    psd_tol: float = 1e-8,
    optimizer_budget: int = 2000,
) -> TrotterSchedule:
    """Compile all gates/channels for one time step and arrange the layers.

    A model with any two-site Lindblad uses the odd/even Liouvillian form
    (one-site Lindblads are folded into their left-adjacent bond term); a
    model with only on-site Lindblads uses coherent TEBD layers plus one
    dissipative layer.  Compilations are cached per unique term content, so
    translation-invariant chains compile each distinct term once.
    """
    if order not in (1, 2):
        raise ValidationError(f"order must be 1 or 2, got {order}")
    if tau <= 0:
        raise ValidationError("tau must be positive")
    two_site = model.has_bond_lindblads()
    odd_bonds = [l for l in range(model.n_sites - 1) if _bond_parity(l) == "odd"]
    even_bonds = [l for l in range(model.n_sites - 1) if _bond_parity(l) == "even"]

    if two_site:
        cache: dict = {}

        def channel(l: int, theta: float) -> TwoSiteChannel:
            bond = (l, l + 1)
            h = model.h_terms.get(bond)
            lindblads = list(model.lindblads_bond.get(bond, [])) + _attached_onsite(model, bond)
            key = (
                theta,
                None if h is None else h.tobytes(),
                tuple(op.tobytes() for op in lindblads),
            )
            if key not in cache:
                cache[key] = compile_two_site_channel(
                    bond, h, lindblads, theta,
                    (model.local_dims[l], model.local_dims[l + 1]),
                    strategy=strategy, seed=seed, psd_tol=psd_tol,
                    optimizer_budget=optimizer_budget,
                )
            return cache[key]

        def liou_layer(bonds: list[int], parity: str, theta: float) -> TwoSiteLiouvillianLayer:
            return TwoSiteLiouvillianLayer(
                parity=parity, theta=theta, channels={l: channel(l, theta) for l in bonds}
            )

        if order == 2:
            odd_half = liou_layer(odd_bonds, "odd", tau / 2)
            layers: list[Layer] = [odd_half, liou_layer(even_bonds, "even", tau), odd_half]
            kind = TWOSITE_SECOND_ORDER
        else:
            layers = [liou_layer(odd_bonds, "odd", tau), liou_layer(even_bonds, "even", tau)]
            kind = FIRST_ORDER
    else:
        gate_cache: dict = {}

        def gate(l: int, theta: float) -> CoherentGate:
            h = model.h_terms.get((l, l + 1))
            if h is None:
                dim = model.local_dims[l] * model.local_dims[l + 1]
                h = as_tensor(np.zeros((dim, dim)))
            key = (theta, h.tobytes())
            if key not in gate_cache:
                gate_cache[key] = compile_coherent_gate(h, theta, sites=(l, l + 1))
            return gate_cache[key]

        def coherent(bonds: list[int], parity: str, theta: float) -> CoherentLayer:
            gates = {
                l: gate(l, theta) for l in bonds if (l, l + 1) in model.h_terms
            }
            return CoherentLayer(parity=parity, theta=theta, gates=gates)

        chan_cache: dict = {}

        def site_channel(site: int) -> OnSiteChannel:
            ops = model.lindblads_onsite.get(site, [])
            key = (site if not ops else None, tuple(op.tobytes() for op in ops))
            if key not in chan_cache:
                chan_cache[key] = compile_onsite_channel(
                    site, ops, tau, dim=model.local_dims[site], psd_tol=psd_tol
                )
            return chan_cache[key]

        dissipative = OnSiteDissipativeLayer(
            channels={
                site: site_channel(site)
                for site in range(model.n_sites)
                if model.lindblads_onsite.get(site)
            }
        )
        if order == 2:
            odd_half = coherent(odd_bonds, "odd", tau / 2)
            even_half = coherent(even_bonds, "even", tau / 2)
            layers = [odd_half, even_half, dissipative, even_half, odd_half]
            kind = ONSITE_SECOND_ORDER
        else:
            layers = [
                coherent(odd_bonds, "odd", tau),
                coherent(even_bonds, "even", tau),
                dissipative,
            ]
            kind = FIRST_ORDER
    return TrotterSchedule(
        kind=kind, tau=tau, order=order, layers=layers, model=model,
        strategy=strategy, seed=seed,
    )


# --- local applications ------------------------------------------------------------


def _apply_gate_at_bond(
    state: LptnState,
    l: int,
    gate: DenseMatrix,
    controls: TruncationControls,
    to_right: bool,
    layer: int,
) -> None:
    """TEBD-style two-site gate with the Kraus legs kept out of the SVD.

    Both tensors are QR-reduced so the gate and the bond truncation act on a
    ``(a d1) x (d2 b)`` core with ``a, b <= d D``; the Kraus and outer bond
    legs ride along in the isometric factors.  Requires the center at ``l``
    or ``l+1``; afterwards it sits at ``l+1`` (``to_right``) or ``l``.
    """
    if state.center not in (l, l + 1):
        raise ValidationError(f"gate at bond ({l},{l + 1}) needs the center there, not {state.center}")
    a_t = state.tensors[l]
    b_t = state.tensors[l + 1]
    n, m, d1, k1 = a_t.shape
    _, mr, d2, k2 = b_t.shape
    ql, rl = qr(a_t.transpose(0, 3, 2, 1).reshape(n * k1, d1 * m))
    lr, qr_mat = rq(b_t.transpose(0, 2, 1, 3).reshape(m * d2, mr * k2))
    a_dim = ql.shape[1]
    b_dim = qr_mat.shape[0]
    theta = np.tensordot(rl.reshape(a_dim, d1, m), lr.reshape(m, d2, b_dim), axes=(2, 0))
    g4 = gate.reshape(d1, d2, d1, d2)
    theta = np.tensordot(g4, theta, axes=([2, 3], [1, 2]))  # (s1, s2, a, b)
    mat = theta.transpose(2, 0, 1, 3).reshape(a_dim * d1, d2 * b_dim)
    u, s, vh = svd(mat)
    keep, delta = truncate_spectrum(s, controls.max_bond, controls.delta_cap)
    kept_norm = float(np.linalg.norm(s[:keep]))
    scale = float(np.linalg.norm(s)) / kept_norm if kept_norm > 0.0 else 1.0
    snew = s[:keep] * scale
    u = u[:, :keep]
    vh = vh[:keep]
    if to_right:
        vh = snew[:, None] * vh
        state.center = l + 1
    else:
        u = u * snew
        state.center = l
    state.tensors[l] = (
        (ql @ u.reshape(a_dim, d1 * keep)).reshape(n, k1, d1, keep).transpose(0, 3, 2, 1)
    )
    state.tensors[l + 1] = (
        (vh.reshape(keep * d2, b_dim) @ qr_mat).reshape(keep, d2, mr, k2).transpose(0, 2, 1, 3)
    )
    state.ledger.record(layer, l, "right", delta)


def _apply_onsite_channel(
    state: LptnState,
    channel: OnSiteChannel,
    controls: TruncationControls,
    layer: int,
) -> None:
    """Contract the Kraus stack into the center tensor and recompress its Kraus leg."""
    site = channel.site
    state.canonicalize(site)
    if channel.is_identity():
        return
    a = state.tensors[site]
    n, m, d, kdim = a.shape
    stack = channel.stacked()  # (k, d_out, d_in)
    blob = np.tensordot(stack, a, axes=(2, 2))  # (k, s, n, m, r)
    state.tensors[site] = blob.transpose(2, 3, 1, 0, 4).reshape(n, m, d, channel.rank * kdim)
    state.compress(site, "kraus", controls.max_kraus, controls.delta_cap, layer=layer)


def _apply_two_site_channel(
    state: LptnState,
    channel: TwoSiteChannel,
    controls: TruncationControls,
    layer: int,
) -> None:
    """Contract the split channel into a bond and recompress all enlarged legs.

    The left half joins (q1 -> Kraus of l, channel bond -> shared bond), the
    right half joins (q2 -> Kraus of l+1).  Compression order: Kraus of l,
    Kraus of l+1, then the shared bond; the center ends at ``l+1``.
    """
    l = channel.sites[0]
    if state.center is None or state.center < l:
        state.canonicalize(l)
    elif state.center > l + 1:
        state.canonicalize(l + 1)
    a_t = state.tensors[l]
    b_t = state.tensors[l + 1]
    n, m, d1, kd1 = a_t.shape
    _, mr, d2, kd2 = b_t.shape
    k1, dp = channel.left_ops.shape[0], channel.channel_bond
    k2 = channel.right_ops.shape[0]
    blob = np.tensordot(channel.left_ops, a_t, axes=(3, 2))  # (q1, mu, s, n, m, r)
    a_new = blob.transpose(3, 4, 1, 2, 0, 5).reshape(n, m * dp, d1, k1 * kd1)
    blob = np.tensordot(channel.right_ops, b_t, axes=(3, 2))  # (q2, mu, s, m, mr, r)
    b_new = blob.transpose(3, 1, 4, 2, 0, 5).reshape(m * dp, mr, d2, k2 * kd2)
    # restore mixed canonical form with the center at l
    lmat, q_right = rq(b_new.reshape(m * dp, mr * d2 * k2 * kd2))
    state.tensors[l + 1] = q_right.reshape(-1, mr, d2, k2 * kd2)
    state.tensors[l] = np.tensordot(a_new, lmat, axes=(1, 0)).transpose(0, 3, 1, 2)
    state.center = l
    state.compress(l, "kraus", controls.max_kraus, controls.delta_cap, layer=layer)
    state.canonicalize(l + 1)
    state.compress(l + 1, "kraus", controls.max_kraus, controls.delta_cap, layer=layer)
    state.compress(l + 1, "left", controls.max_bond, controls.delta_cap, layer=layer)


def _sweep_positions(positions: list[int], center: int | None) -> tuple[list[int], bool]:
    """Order layer positions so the sweep starts at the end nearest the center."""
    if not positions:
        return [], True
    positions = sorted(positions)
    if center is None or abs(center - positions[0]) <= abs(center - positions[-1]):
        return positions, True
    return positions[::-1], False


def apply_layer(state: LptnState, layer_obj: Layer, controls: TruncationControls) -> None:
    """Apply one Trotter layer with a co-moving center, then count it."""
    k = state.ledger.layer_count
    if isinstance(layer_obj, CoherentLayer):
        order, to_right = _sweep_positions(list(layer_obj.gates), state.center)
        for l in order:
            state.canonicalize(l if to_right else l + 1)
            _apply_gate_at_bond(state, l, layer_obj.gates[l].matrix, controls, to_right, k)
    elif isinstance(layer_obj, OnSiteDissipativeLayer):
        order, _ = _sweep_positions(list(layer_obj.channels), state.center)
        for site in order:
            _apply_onsite_channel(state, layer_obj.channels[site], controls, k)
    elif isinstance(layer_obj, TwoSiteLiouvillianLayer):
        order, _ = _sweep_positions(list(layer_obj.channels), state.center)
        for l in order:
            _apply_two_site_channel(state, layer_obj.channels[l], controls, k)
    else:  # pragma: no cover
        raise ValidationError(f"unknown layer type {type(layer_obj).__name__}")
    state.ledger.layer_count = k + 1


def step(
    state: LptnState,
    schedule: TrotterSchedule,
    max_bond: int | None = None,
    max_kraus: int | None = None,
    delta_cap: float | None = None,
    controls: TruncationControls | None = None,
) -> LptnState:
    """Advance the state by one Trotter step of ``schedule`` (in place)."""
    if controls is None:
        if max_bond is None or max_kraus is None:
            raise ValidationError("step needs either controls or (max_bond, max_kraus)")
        controls = TruncationControls(
            max_bond=max_bond, max_kraus=max_kraus,
            delta_cap=1e-14 if delta_cap is None else delta_cap,
        )
    for layer_obj in schedule.layers:
        apply_layer(state, layer_obj, controls)
    state.rescale(1.0)
    return state


# --- bounds and certificate -----------------------------------------------------------


@dataclass
class CertificateInputs:
    b: float
    n_sites: int
    t: float
    m: int
    delta_max: float

    def as_dict(self) -> dict:
        return {
            "b": self.b, "n_sites": self.n_sites, "t": self.t,
            "m": self.m, "delta_max": self.delta_max,
        }


def certificate(inputs: CertificateInputs) -> float:
    """Trace-norm certificate ``(t b)^3 N^2 / (4 m^2) + 6 (2m + 1) N delta_max``."""
    if min(inputs.b, inputs.t, inputs.delta_max) < 0 or inputs.m < 1 or inputs.n_sites < 1:
        raise ValidationError("certificate inputs must be nonnegative with m, N >= 1")
    trotter = (inputs.t * inputs.b) ** 3 * inputs.n_sites**2 / (4.0 * inputs.m**2)
    truncation = 6.0 * (2 * inputs.m + 1) * inputs.n_sites * inputs.delta_max
    return trotter + truncation


def local_diamond_bound(model: LindbladModel) -> float:
    """``max_bond 2 ||H|| + 2 sum ||L||^2`` over nearest-neighbor terms.

    One-site Lindblads count toward their attached bond term (same
    attachment rule as the two-site schedules).
    """
    if model.n_sites < 2:
        raise ValidationError("diamond bound needs at least one bond")
    best = 0.0
    for bond in model.bonds:
        h = model.h_terms.get(bond)
        term = 2.0 * operator_norm(h) if h is not None else 0.0
        for op in list(model.lindblads_bond.get(bond, [])) + _attached_onsite(model, bond):
            term += 2.0 * operator_norm(op) ** 2
        best = max(best, term)
    return best


def estimator_trace_norm(ledger: ErrorLedger) -> float:
    """Running trace-norm estimator ``sqrt(2) * sum sqrt(2 (1 - sqrt(1 - delta^2)))``."""
    return float(np.sqrt(2.0) * ledger.accumulated_two_norm)


def _layer_generators(model: LindbladModel, tau: float, order: int) -> list[tuple[float, LindbladModel]]:
    """(theta, sub-model) pairs whose exact exponentials compose one Trotter step."""
    odd = [b for b in model.bonds if _bond_parity(b[0]) == "odd"]
    even = [b for b in model.bonds if _bond_parity(b[0]) == "even"]
    dims = model.local_dims
    if model.has_bond_lindblads():
        def sub(bonds):
            return LindbladModel(
                local_dims=dims,
                h_terms={b: model.h_terms[b] for b in bonds if b in model.h_terms},
                lindblads_bond={
                    b: list(model.lindblads_bond.get(b, [])) + _attached_onsite(model, b)
                    for b in bonds
                },
            )
        l_odd, l_even = sub(odd), sub(even)
        if order == 2:
            return [(tau / 2, l_odd), (tau, l_even), (tau / 2, l_odd)]
        return [(tau, l_odd), (tau, l_even)]
    h_odd = LindbladModel(local_dims=dims, h_terms={b: model.h_terms[b] for b in odd if b in model.h_terms})
    h_even = LindbladModel(local_dims=dims, h_terms={b: model.h_terms[b] for b in even if b in model.h_terms})
    diss = LindbladModel(local_dims=dims, lindblads_onsite={
        s: list(ops) for s, ops in model.lindblads_onsite.items()
    })
    if order == 2:
        return [(tau / 2, h_odd), (tau / 2, h_even), (tau, diss), (tau / 2, h_even), (tau / 2, h_odd)]
    return [(tau, h_odd), (tau, h_even), (tau, diss)]


def trotter_defect(
    model: LindbladModel,
    tau: float,
    order: int = 2,
    n_samples: int = 64,
    seed: int = 7,
    dim_cap: int = oracle.DEFAULT_DIM_CAP,
) -> float:
    """Measured splitting error of one Trotter step at small system size.

    Returns ``max ||(exp(tau L) - product)(rho)||_1`` over a seeded sample of
    random density matrices: a lower bound on the induced 1->1 norm, which is
    what the step-scaling tests need.
    """
    import scipy.linalg

    liou = oracle.assemble(model, dim_cap=dim_cap)
    exact = scipy.linalg.expm(tau * liou.matrix)
    product = np.eye(exact.shape[0], dtype=np.complex128)
    for theta, sub in _layer_generators(model, tau, order):
        product = scipy.linalg.expm(theta * oracle.assemble(sub, dim_cap=dim_cap).matrix) @ product
    diff = exact - product
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_samples):
        rho = oracle.random_density_matrix(liou.dim, rng)
        worst = max(worst, oracle.trace_norm(oracle.unvec(diff @ oracle.vec(rho), liou.dim)))
    return worst


# --- observables and drivers -----------------------------------------------------------


@dataclass
class ObservableSpec:
    """A named local or bond observable evaluated during evolution."""

    name: str
    kind: str  # "local" | "bond"
    site: int
    matrix: DenseMatrix

    def evaluate(self, state: LptnState) -> complex:
        if self.kind == "local":
            return complex(state.expectation_local(self.site, self.matrix))
        if self.kind == "bond":
            return state.expectation_two_site(self.site, self.matrix)
        raise ValidationError(f"unknown observable kind {self.kind!r}")


def excitation_observables(model: LindbladModel) -> list[ObservableSpec]:
    """Per-site excitation observables ``n_j`` (qubit: ``(sz+1)/2``)."""
    return [
        ObservableSpec(f"n_{j}", "local", j, local_operator("excitation", d))
        for j, d in enumerate(model.local_dims)
    ]


@dataclass
class EvolutionResult:
    records: list[tuple[float, str, complex]]
    final_state: LptnState
    certificate: float
    estimator_trace_norm: float
    estimator_infidelity: float
    ledger: dict
    inputs: CertificateInputs
    steps_taken: int
    wall_time_s: float
    converged: bool | None = None
    steady_values: dict[str, complex] = field(default_factory=dict)

    def series(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        """(times, values) of one named observable."""
        pts = [(t, v) for t, n, v in self.records if n == name]
        times = np.array([p[0] for p in pts])
        vals = np.array([p[1] for p in pts])
        return times, vals


def _record(records, observables, state, t) -> dict[str, complex]:
    out = {}
    for obs in observables:
        val = obs.evaluate(state)
        records.append((t, obs.name, val))
        out[obs.name] = val
    return out


def _result(
    state: LptnState,
    model: LindbladModel,
    records,
    t: float,
    m: int,
    t0: float,
    converged: bool | None = None,
    steady: dict | None = None,
) -> EvolutionResult:
    inputs = CertificateInputs(
        b=local_diamond_bound(model), n_sites=model.n_sites, t=t,
        m=max(m, 1), delta_max=state.ledger.delta_max,
    )
    est = estimator_trace_norm(state.ledger)
    return EvolutionResult(
        records=records,
        final_state=state,
        certificate=certificate(inputs),
        estimator_trace_norm=est,
        estimator_infidelity=est / 2.0,
        ledger=state.ledger.snapshot(),
        inputs=inputs,
        steps_taken=m,
        wall_time_s=time.perf_counter() - t0,
        converged=converged,
        steady_values=dict(steady or {}),
    )


def evolve(
    state: LptnState,
    model: LindbladModel,
    t_final: float,
    m: int,
    controls: TruncationControls,
    observables: list[ObservableSpec] | None = None,
    record_every: int = 10,
    order: int = 2,
    strategy: str = "a",
    seed: int = 0,
    schedule: TrotterSchedule | None = None,
    step_hook=None,
) -> EvolutionResult:
    """Evolve ``m`` steps of ``tau = t_final / m``, recording observables.

    Records are taken at t = 0, every ``record_every`` steps, and at the end.
    ``step_hook(state, step_index)``, when given, runs after every step
    (used by validation drivers to compare against the exact oracle).
    """
    if m < 1:
        raise ValidationError("m must be >= 1")
    t0 = time.perf_counter()
    observables = observables or []
    schedule = schedule or build_schedule(model, t_final / m, order=order, strategy=strategy, seed=seed)
    records: list[tuple[float, str, complex]] = []
    _record(records, observables, state, 0.0)
    for k in range(1, m + 1):
        step(state, schedule, controls=controls)
        if step_hook is not None:
            step_hook(state, k)
        if k % record_every == 0 or k == m:
            _record(records, observables, state, k * schedule.tau)
    return _result(state, model, records, t_final, m, t0)


def evolve_to_stationarity(
    state: LptnState,
    model: LindbladModel,
    controls: TruncationControls,
    observables: list[ObservableSpec],
    tau: float,
    record_every: int = 10,
    window: int = 20,
    eps_ss: float = 1e-6,
    max_steps: int = 100_000,
    order: int = 2,
    strategy: str = "a",
    seed: int = 0,
) -> EvolutionResult:
    """Run until every monitored observable is relatively stationary.

    Convergence: over the last ``window`` records, each observable's spread
    ``(max - min)`` is below ``eps_ss * max(|values|, 1e-12)``.  Hitting
    ``max_steps`` first yields a result flagged ``converged=False`` (not an
    exception).
    """
    if not observables:
        raise ValidationError("stationarity detection needs at least one monitored observable")
    t0 = time.perf_counter()
    schedule = build_schedule(model, tau, order=order, strategy=strategy, seed=seed)
    records: list[tuple[float, str, complex]] = []
    history: dict[str, list[complex]] = {obs.name: [] for obs in observables}
    latest = _record(records, observables, state, 0.0)
    for name, val in latest.items():
        history[name].append(val)
    steps = 0
    converged = False
    while steps < max_steps:
        for _ in range(record_every):
            step(state, schedule, controls=controls)
            steps += 1
            if steps >= max_steps:
                break
        latest = _record(records, observables, state, steps * tau)
        for name, val in latest.items():
            history[name].append(val)
        if all(_stationary(history[name], window, eps_ss) for name in history):
            converged = True
            break
    return _result(
        state, model, records, steps * tau, steps, t0, converged=converged, steady=latest
    )


def _stationary(values: list[complex], window: int, eps_ss: float) -> bool:
    if len(values) < window:
        return False
    tail = np.asarray(values[-window:])
    spread = float(np.abs(tail[:, None] - tail[None, :]).max())
    scale = max(float(np.abs(tail).max()), 1e-12)
    return spread < eps_ss * scale
