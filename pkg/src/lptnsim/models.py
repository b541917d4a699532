"""Nearest-neighbor Lindblad models: benchmark constructors and operator zoo.

Conventions fixed here and relied on everywhere else:

* qubit basis index 0 is spin-up with ``sigma_z |0> = +|0>``; for the
  boundary-driven chain, |0> is the "source-filled" orientation,
* two-site operators are ``kron(op_left, op_right)`` with the left site as
  the major index,
* on-site Hamiltonian pieces are split evenly between the two adjacent bond
  terms (full weight into the single adjacent bond at the chain ends), so a
  model is always a sum of bond Hamiltonians,
* fermions are mapped to spins through the Jordan-Wigner convention
  ``a_j = (prod_{i<j} sigma_z_i) sigma_minus_j``; for operators quadratic in
  adjacent-site fermions the string factors cancel and the images are
  strictly two-local.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import ValidationError
from .tensor_core import DenseMatrix, as_tensor, kron

HERM_TOL = 1e-12

# --- single-site operator zoo -------------------------------------------------

SIGMA_X = as_tensor([[0, 1], [1, 0]])
SIGMA_Y = as_tensor([[0, -1j], [1j, 0]])
SIGMA_Z = as_tensor([[1, 0], [0, -1]])
SIGMA_PLUS = as_tensor([[0, 1], [0, 0]])
SIGMA_MINUS = as_tensor([[0, 0], [1, 0]])


def identity(d: int) -> DenseMatrix:
    return as_tensor(np.eye(d))


def destroy(d: int) -> DenseMatrix:
    """Truncated bosonic annihilation operator: ``<n-1| c |n> = sqrt(n)``."""
    return as_tensor(np.diag(np.sqrt(np.arange(1, d)), k=1))


def number_op(d: int) -> DenseMatrix:
    """Occupation operator: ``diag(0 .. d-1)`` for a cavity, ``(sz+1)/2`` for a qubit."""
    if d == 2:
        return as_tensor(np.diag([1.0, 0.0]))
    return as_tensor(np.diag(np.arange(d, dtype=float)))


def spin_current_op() -> DenseMatrix:
    """Two-qubit spin-current operator ``i (s+ s- - s- s+)`` on a bond."""
    return as_tensor(1j * (kron(SIGMA_PLUS, SIGMA_MINUS) - kron(SIGMA_MINUS, SIGMA_PLUS)))


_NAMED_LOCAL = {
    "sx": lambda d: _require_qubit("sx", d, SIGMA_X),
    "sy": lambda d: _require_qubit("sy", d, SIGMA_Y),
    "sz": lambda d: _require_qubit("sz", d, SIGMA_Z),
    "sp": lambda d: _require_qubit("sp", d, SIGMA_PLUS),
    "sm": lambda d: _require_qubit("sm", d, SIGMA_MINUS),
    "n": number_op,
    "excitation": number_op,
    "identity": identity,
}


def _require_qubit(name: str, d: int, op: DenseMatrix) -> DenseMatrix:
    if d != 2:
        raise ValidationError(f"operator '{name}' is defined for qubits only, got dimension {d}")
    return op


def local_operator(name: str, d: int) -> DenseMatrix:
    """Resolve a named single-site observable for a site of dimension ``d``."""
    try:
        factory = _NAMED_LOCAL[name]
    except KeyError:
        raise ValidationError(
            f"unknown operator name '{name}'; known: {sorted(_NAMED_LOCAL)}"
        ) from None
    return factory(d)


# --- model container ----------------------------------------------------------


@dataclass
class LindbladModel:
    """Site-resolved description of ``drho/dt = -i[H, rho] + D(rho)``.

    Attributes:
        local_dims: physical dimension of each site.
        h_terms: bond -> Hermitian Hamiltonian term ``H^[l,l+1]`` (dimension
            ``d_l * d_{l+1}``); bonds are ``(l, l+1)`` with 0-based ``l``.
        lindblads_onsite: site -> list of single-site Lindblad operators.
        lindblads_bond: bond -> list of two-site Lindblad operators.
        name, params: metadata for manifests.
    """

    local_dims: list[int]
    h_terms: dict[tuple[int, int], DenseMatrix] = field(default_factory=dict)
    lindblads_onsite: dict[int, list[DenseMatrix]] = field(default_factory=dict)
    lindblads_bond: dict[tuple[int, int], list[DenseMatrix]] = field(default_factory=dict)
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.local_dims = [int(d) for d in self.local_dims]
        if any(d < 1 for d in self.local_dims):
            raise ValidationError("local dimensions must be >= 1")
        n = self.n_sites
        for bond, h in self.h_terms.items():
            self._check_bond(bond)
            h = as_tensor(h)
            dim = self.local_dims[bond[0]] * self.local_dims[bond[1]]
            if h.shape != (dim, dim):
                raise ValidationError(f"H term on bond {bond} has shape {h.shape}, expected {(dim, dim)}")
            if np.linalg.norm(h - h.conj().T) > HERM_TOL * max(1.0, np.linalg.norm(h)):
                raise ValidationError(f"H term on bond {bond} is not Hermitian")
            self.h_terms[bond] = h
        for site, ops in self.lindblads_onsite.items():
            if not 0 <= site < n:
                raise ValidationError(f"Lindblad site {site} out of range for {n} sites")
            d = self.local_dims[site]
            self.lindblads_onsite[site] = [self._check_op(op, d, f"site {site}") for op in ops]
        for bond, ops in self.lindblads_bond.items():
            self._check_bond(bond)
            dim = self.local_dims[bond[0]] * self.local_dims[bond[1]]
            self.lindblads_bond[bond] = [self._check_op(op, dim, f"bond {bond}") for op in ops]

    def _check_bond(self, bond: tuple[int, int]) -> None:
        l, r = bond
        if r != l + 1 or not 0 <= l < self.n_sites - 1:
            raise ValidationError(f"bond {bond} is not a nearest-neighbor pair of {self.n_sites} sites")

    @staticmethod
    def _check_op(op, dim: int, where: str) -> DenseMatrix:
        op = as_tensor(op)
        if op.shape != (dim, dim):
            raise ValidationError(f"Lindblad operator on {where} has shape {op.shape}, expected {(dim, dim)}")
        return op

    @property
    def n_sites(self) -> int:
        return len(self.local_dims)

    @property
    def bonds(self) -> list[tuple[int, int]]:
        return [(l, l + 1) for l in range(self.n_sites - 1)]

    def has_bond_lindblads(self) -> bool:
        return any(ops for ops in self.lindblads_bond.values())


def _add_bond_term(terms: dict, bond: tuple[int, int], op: DenseMatrix) -> None:
    if bond in terms:
        terms[bond] = terms[bond] + op
    else:
        terms[bond] = op


def _split_onsite(
    terms: dict, site: int, op: DenseMatrix, local_dims: list[int]
) -> None:
    """Distribute an on-site Hamiltonian piece onto the adjacent bond terms."""
    n = len(local_dims)
    left = (site - 1, site) if site > 0 else None
    right = (site, site + 1) if site < n - 1 else None
    if left is None and right is None:
        raise ValidationError("single-site chain cannot carry bond terms")
    weights = [(b, 1.0 if (left is None or right is None) else 0.5) for b in (left, right) if b]
    for bond, w in weights:
        if bond == left:
            embedded = kron(identity(local_dims[bond[0]]), op)
        else:
            embedded = kron(op, identity(local_dims[bond[1]]))
        _add_bond_term(terms, bond, w * embedded)


# --- benchmark constructors ---------------------------------------------------


def spin_cavity_model(
    gamma: float,
    alpha1: float = 0.48,
    alpha2: float = 0.48,
    alpha_cc: float = -1.0,
    omega_c: float = 1.0,
    omega_s: float = 1.0,
    cavity_dim: int = 4,
) -> LindbladModel:
    """Two qubits coupled through two tunneling cavities, with uniform loss.

    Site order is (spin, cavity, cavity, spin) with dims ``(2, c, c, 2)``.
    The couplings are of Jaynes-Cummings type ``alpha (s+ c + s- c^dag)`` on
    the outer bonds and a photon tunneling ``alpha_cc (c1^dag c2 + h.c.)`` on
    the middle bond; every site decays through ``sqrt(gamma) sigma_minus``
    (spins) or ``sqrt(gamma) c`` (cavities).  The total excitation operator
    commutes with the Hamiltonian, so the excitation number decays as a pure
    exponential with rate ``gamma``.
    """
    if cavity_dim < 2:
        raise ValidationError("cavity_dim must be >= 2")
    dims = [2, cavity_dim, cavity_dim, 2]
    c = destroy(cavity_dim)
    cd = c.conj().T
    n_c = number_op(cavity_dim)
    terms: dict[tuple[int, int], DenseMatrix] = {}
    # spin-cavity couplings: sites (0,1) and (3,2); bond (2,3) has the cavity first
    _add_bond_term(terms, (0, 1), alpha1 * (kron(SIGMA_PLUS, c) + kron(SIGMA_MINUS, cd)))
    _add_bond_term(terms, (2, 3), alpha2 * (kron(c, SIGMA_PLUS) + kron(cd, SIGMA_MINUS)))
    _add_bond_term(terms, (1, 2), alpha_cc * (kron(cd, c) + kron(c, cd)))
    _split_onsite(terms, 0, omega_s * SIGMA_Z, dims)
    _split_onsite(terms, 3, omega_s * SIGMA_Z, dims)
    _split_onsite(terms, 1, omega_c * n_c, dims)
    _split_onsite(terms, 2, omega_c * n_c, dims)
    root = np.sqrt(gamma)
    onsite = {
        0: [root * SIGMA_MINUS],
        1: [root * c],
        2: [root * c],
        3: [root * SIGMA_MINUS],
    }
    return LindbladModel(
        local_dims=dims,
        h_terms=terms,
        lindblads_onsite=onsite,
        name="spin_cavity",
        params={
            "gamma": gamma, "alpha1": alpha1, "alpha2": alpha2, "alpha_cc": alpha_cc,
            "omega_c": omega_c, "omega_s": omega_s, "cavity_dim": cavity_dim,
            "onsite_split": "even",
        },
    )


def xxz_boundary_driven(n_sites: int, delta: float, gamma: float) -> LindbladModel:
    """XXZ chain with a spin source at site 0 and a drain at site N-1.

    Bulk bonds carry ``sx sx + sy sy + delta sz sz``; the edges are driven by
    ``sqrt(2 gamma) sigma_plus`` (source) and ``sqrt(2 gamma) sigma_minus``
    (drain), modeling DC transport between two reservoirs.
    """
    if n_sites < 2:
        raise ValidationError("xxz model needs at least 2 sites")
    h_bond = kron(SIGMA_X, SIGMA_X) + kron(SIGMA_Y, SIGMA_Y) + delta * kron(SIGMA_Z, SIGMA_Z)
    terms = {(l, l + 1): h_bond.copy() for l in range(n_sites - 1)}
    root = np.sqrt(2.0 * gamma)
    onsite = {0: [root * SIGMA_PLUS], n_sites - 1: [root * SIGMA_MINUS]}
    return LindbladModel(
        local_dims=[2] * n_sites,
        h_terms=terms,
        lindblads_onsite=onsite,
        name="xxz",
        params={"n_sites": n_sites, "delta": delta, "gamma": gamma},
    )


def kitaev_wire(n_sites: int, j: float, delta: float, mu: float, gamma: float) -> LindbladModel:
    """Dissipative Kitaev wire in the spin picture, with two-site Lindblads.

    The fermionic chain ``H = sum_j (-J a^dag_j a_{j+1} - Delta a_j a_{j+1}
    + h.c.) - mu a^dag_j a_j`` with pair channels
    ``L_{j,j+1} = sqrt(gamma) (a^dag_j + a^dag_{j+1})(a_j - a_{j+1}) / 4``
    is mapped by Jordan-Wigner; all terms are quadratic in adjacent-site
    fermion operators, so the strings cancel and the images below are exact:

    * ``a^dag_j a_{j+1} -> -s+_j s-_{j+1}``, ``a_j a_{j+1} -> s-_j s-_{j+1}``,
    * ``n_j -> (1 + sz_j)/2`` (occupied = spin-up).
    """
    if n_sites < 2:
        raise ValidationError("kitaev wire needs at least 2 sites")
    dims = [2] * n_sites
    eye = identity(2)
    n_spin = number_op(2)
    hop = kron(SIGMA_PLUS, SIGMA_MINUS) + kron(SIGMA_MINUS, SIGMA_PLUS)
    pair = kron(SIGMA_MINUS, SIGMA_MINUS) + kron(SIGMA_PLUS, SIGMA_PLUS)
    terms: dict[tuple[int, int], DenseMatrix] = {}
    lindblads: dict[tuple[int, int], list[DenseMatrix]] = {}
    root = np.sqrt(gamma) / 4.0
    for l in range(n_sites - 1):
        _add_bond_term(terms, (l, l + 1), j * hop - delta * pair)
        lindblads[(l, l + 1)] = [
            root * (kron(n_spin, eye) + kron(SIGMA_PLUS, SIGMA_MINUS)
                    - kron(SIGMA_MINUS, SIGMA_PLUS) - kron(eye, n_spin))
        ]
    if mu != 0.0:
        for site in range(n_sites):
            _split_onsite(terms, site, -mu * n_spin, dims)
    return LindbladModel(
        local_dims=dims,
        h_terms=terms,
        lindblads_bond=lindblads,
        name="kitaev",
        params={"n_sites": n_sites, "j": j, "delta": delta, "mu": mu, "gamma": gamma},
    )


# --- declarative model section ------------------------------------------------


def _matrix_literal(value, path: str) -> DenseMatrix:
    """Parse a nested-list matrix literal whose entries are [re, im] pairs."""
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ValidationError(f"{path}: expected a nested array of [re, im] pairs") from None
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise ValidationError(
            f"{path}: expected shape (d, d, 2) of [re, im] pairs, got {arr.shape}"
        )
    return as_tensor(arr[..., 0] + 1j * arr[..., 1])


def parse_model_spec(document: Mapping) -> LindbladModel:
    """Build a model from the ``model`` section of a run configuration.

    Named benchmarks take their constructor keywords from ``params``; a
    ``custom`` model supplies ``local_dims`` plus operator literals.
    """
    if "name" not in document:
        raise ValidationError("model: missing key 'name'")
    name = document["name"]
    params = dict(document.get("params", {}))
    try:
        if name == "xxz":
            return xxz_boundary_driven(
                int(params.pop("n_sites")), float(params.pop("delta")), float(params.pop("gamma"))
            )
        if name == "spin_cavity":
            return spin_cavity_model(
                gamma=float(params.pop("gamma")),
                alpha1=float(params.pop("alpha1", 0.48)),
                alpha2=float(params.pop("alpha2", 0.48)),
                alpha_cc=float(params.pop("alpha_cc", -1.0)),
                omega_c=float(params.pop("omega_c", 1.0)),
                omega_s=float(params.pop("omega_s", 1.0)),
                cavity_dim=int(params.pop("cavity_dim", 4)),
            )
        if name == "kitaev":
            return kitaev_wire(
                int(params.pop("n_sites")),
                float(params.pop("j")),
                float(params.pop("delta")),
                float(params.pop("mu")),
                float(params.pop("gamma")),
            )
    except KeyError as exc:
        raise ValidationError(f"model.params: missing key {exc.args[0]!r} for model '{name}'") from None
    if name != "custom":
        raise ValidationError(f"model.name: unknown model '{name}'")
    if "local_dims" not in document:
        raise ValidationError("model: custom model requires 'local_dims'")
    dims = [int(d) for d in document["local_dims"]]
    h_terms: dict[tuple[int, int], DenseMatrix] = {}
    for i, entry in enumerate(document.get("h_terms", [])):
        sites = entry.get("sites")
        if not (isinstance(sites, (list, tuple)) and len(sites) == 2):
            raise ValidationError(f"model.h_terms[{i}].sites: expected a pair [l, l+1]")
        _add_bond_term(h_terms, (int(sites[0]), int(sites[1])),
                       _matrix_literal(entry.get("matrix"), f"model.h_terms[{i}].matrix"))
    onsite: dict[int, list[DenseMatrix]] = {}
    bond: dict[tuple[int, int], list[DenseMatrix]] = {}
    for i, entry in enumerate(document.get("lindblads", [])):
        sites = entry.get("sites")
        mat = _matrix_literal(entry.get("matrix"), f"model.lindblads[{i}].matrix")
        if isinstance(sites, (list, tuple)) and len(sites) == 1:
            onsite.setdefault(int(sites[0]), []).append(mat)
        elif isinstance(sites, (list, tuple)) and len(sites) == 2:
            bond.setdefault((int(sites[0]), int(sites[1])), []).append(mat)
        else:
            raise ValidationError(f"model.lindblads[{i}].sites: expected [l] or [l, l+1]")
    return LindbladModel(
        local_dims=dims, h_terms=h_terms, lindblads_onsite=onsite,
        lindblads_bond=bond, name="custom", params=dict(document.get("params", {})),
    )
