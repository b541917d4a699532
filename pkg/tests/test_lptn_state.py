import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lptnsim.errors import CapacityError, ContractViolationError, ValidationError
from lptnsim.lptn_state import LptnState, truncate_spectrum, two_norm_increment
from lptnsim.models import SIGMA_X, SIGMA_Z, number_op
from lptnsim.oracle import fidelity, trace_distance
from lptnsim.tensor_core import as_tensor, dagger, kron


def dense_cross_check(state):
    """rho from the dense purification, independently of reconstruct_density."""
    x = state.reconstruct_purification()
    return x @ dagger(x)


class TestConstructors:
    def test_product_state_all_zeros(self):
        state = LptnState.from_product_state([[1.0, 0.0]] * 4)
        rho = state.reconstruct_density()
        expected = np.zeros((16, 16))
        expected[0, 0] = 1.0
        np.testing.assert_allclose(rho, expected, atol=1e-14)

    def test_spin_cavity_initial_state(self):
        # (|g>, |0>, |3>, |g>) with cavity dim 4; total excitation 3
        kets = [[0.0, 1.0], [1, 0, 0, 0], [0, 0, 0, 1], [0.0, 1.0]]
        state = LptnState.from_product_state(kets)
        rho = state.reconstruct_density()
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
        n_tot = sum(
            np.trace(rho @ np.kron(np.kron(np.eye(int(np.prod(state.local_dims[:j]))),
                                           number_op(d)),
                                   np.eye(int(np.prod(state.local_dims[j + 1:]))))).real
            for j, d in enumerate(state.local_dims)
        )
        assert n_tot == pytest.approx(3.0, abs=1e-12)

    def test_single_site_plus_state(self):
        state = LptnState.from_product_state([[1 / np.sqrt(2), 1 / np.sqrt(2)]])
        np.testing.assert_allclose(state.reconstruct_density(), np.full((2, 2), 0.5), atol=1e-14)

    def test_unnormalized_ket_rejected(self):
        with pytest.raises(ValidationError):
            LptnState.from_product_state([[1.0, 1.0]])

    def test_maximally_mixed(self):
        np.testing.assert_allclose(
            LptnState.from_maximally_mixed([2, 2]).reconstruct_density(), np.eye(4) / 4, atol=1e-14
        )
        np.testing.assert_allclose(
            LptnState.from_maximally_mixed([3]).reconstruct_density(), np.eye(3) / 3, atol=1e-14
        )

    def test_maximally_mixed_purity(self):
        rho = LptnState.from_maximally_mixed([2, 4, 4, 2]).reconstruct_density()
        assert np.trace(rho @ rho).real == pytest.approx(1.0 / 64.0, abs=1e-12)

    def test_random_deterministic(self):
        a = LptnState.random_mixed([2, 2, 2], 2, 2, seed=5)
        b = LptnState.random_mixed([2, 2, 2], 2, 2, seed=5)
        for ta, tb in zip(a.tensors, b.tensors):
            np.testing.assert_array_equal(ta, tb)

    def test_random_is_positive_and_normalized(self):
        state = LptnState.random_mixed([2, 2, 2], 2, 2, seed=9)
        rho = state.reconstruct_density()
        assert np.linalg.eigvalsh(rho).min() >= -1e-12
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-10)

    def test_random_seeds_differ(self):
        a = LptnState.random_mixed([2, 2], 2, 2, seed=1).reconstruct_density()
        b = LptnState.random_mixed([2, 2], 2, 2, seed=2).reconstruct_density()
        assert trace_distance(a, b) > 1e-3


class TestCanonicalize:
    def test_product_state_any_center(self):
        state = LptnState.from_product_state([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
        rho0 = state.reconstruct_density()
        state.canonicalize(2)
        np.testing.assert_allclose(state.reconstruct_density(), rho0, atol=1e-12)

    def test_gauge_invariance(self):
        state = LptnState.random_mixed([2, 3, 2, 2], 3, 2, seed=11)
        rho0 = state.reconstruct_density()
        state.canonicalize(0)
        state.canonicalize(3)
        state.canonicalize(1)
        assert trace_distance(state.reconstruct_density(), rho0) < 1e-12

    def test_isometry_invariants(self):
        state = LptnState.random_mixed([2, 2, 3, 2, 2], 4, 3, seed=3)
        center = 2
        state.canonicalize(center)
        for l in range(state.n_sites):
            if l < center:
                assert state.isometry_defect(l, "left") < 1e-10
            elif l > center:
                assert state.isometry_defect(l, "right") < 1e-10

    def test_noop_center(self):
        state = LptnState.random_mixed([2, 2], 2, 2, seed=4)
        state.canonicalize(1)
        before = [t.copy() for t in state.tensors]
        state.canonicalize(1)
        for a, b in zip(before, state.tensors):
            np.testing.assert_array_equal(a, b)

    def test_norm_is_one(self):
        state = LptnState.random_mixed([2, 2, 2, 2], 3, 3, seed=8)
        assert state.norm() == pytest.approx(1.0, abs=1e-12)
        state.canonicalize(2)
        assert state.norm() == pytest.approx(1.0, abs=1e-12)


class TestTruncateSpectrum:
    def test_mandatory_rule(self):
        s = np.array([1.0, 0.5, 0.1])
        keep, delta = truncate_spectrum(s, 2, 0.0)
        assert keep == 2
        assert delta == pytest.approx(np.sqrt(0.01 / 1.26))

    def test_opportunistic_rule(self):
        s = np.array([1.0, 1e-9, 1e-10])
        keep, delta = truncate_spectrum(s, 10, 1e-6)
        assert keep == 1
        assert delta <= 1e-6

    def test_cap_zero_keeps_exact_zeros_out(self):
        s = np.array([1.0, 0.5, 0.0, 0.0])
        keep, delta = truncate_spectrum(s, 10, 0.0)
        assert keep == 2
        assert delta == 0.0

    @given(seed=st.integers(0, 5000), max_dim=st.integers(1, 8),
           cap=st.floats(0, 0.2))
    @settings(max_examples=40, deadline=None)
    def test_invariants(self, seed, max_dim, cap):
        rng = np.random.default_rng(seed)
        s = np.sort(rng.random(8))[::-1]
        keep, delta = truncate_spectrum(s, max_dim, cap)
        assert 1 <= keep <= max_dim
        tail2 = np.sum(s[keep:] ** 2) / np.sum(s * s)
        assert delta == pytest.approx(np.sqrt(tail2), abs=1e-12)
        # never discard more than the cap allows beyond the mandatory part
        if keep < min(len(s), max_dim):
            assert delta <= cap + 1e-12


class TestCompress:
    def test_requires_center(self):
        state = LptnState.random_mixed([2, 2, 2], 4, 2, seed=2)
        state.canonicalize(0)
        with pytest.raises(ContractViolationError):
            state.compress(2, "right", 2)

    def test_noop_keeps_state(self):
        state = LptnState.random_mixed([2, 2, 2], 2, 2, seed=6)
        state.canonicalize(1)
        before = [t.copy() for t in state.tensors]
        delta = state.compress(1, "right", max_dim=64, delta_cap=0.0)
        assert delta == 0.0
        for a, b in zip(before, state.tensors):
            np.testing.assert_array_equal(a, b)

    def test_two_value_spectrum_identity(self):
        # explicit spectral content (sqrt(0.8), sqrt(0.2)) across the middle bond
        plus = np.array([1.0, 1.0]) / np.sqrt(2)
        minus = np.array([1.0, -1.0]) / np.sqrt(2)
        a = np.zeros((1, 2, 2, 1), dtype=complex)
        a[0, 0, :, 0] = np.sqrt(0.8) * plus
        a[0, 1, :, 0] = np.sqrt(0.2) * minus
        b = np.zeros((2, 1, 2, 1), dtype=complex)
        b[0, 0, :, 0] = plus
        b[1, 0, :, 0] = minus
        state = LptnState([a, b], center=0)
        assert state.norm() == pytest.approx(1.0, abs=1e-12)
        x_before = state.reconstruct_purification()
        delta = state.compress(0, "right", max_dim=1)
        assert delta == pytest.approx(np.sqrt(0.2), abs=1e-12)
        x_after = state.reconstruct_purification()
        dist2 = np.linalg.norm(x_before - x_after) ** 2
        assert dist2 == pytest.approx(2.0 * (1.0 - np.sqrt(0.8)), abs=1e-10)
        assert dist2 == pytest.approx(two_norm_increment(delta) ** 2, abs=1e-10)

    @pytest.mark.parametrize("axis", ["right", "left", "kraus"])
    def test_discarded_weight_identity_random(self, axis):
        # dense || X - X~ ||_2^2 == 2 (1 - sqrt(1 - delta^2)) for one compression
        for seed in range(6):
            state = LptnState.random_mixed([2, 2, 2, 2], 4, 3, seed=100 + seed)
            site = 2
            state.canonicalize(site)
            x_before = state.reconstruct_purification()
            detail = state.compress_detailed(site, axis, max_dim=2, delta_cap=0.0)
            if axis == "kraus" and detail.dropped_kraus_isometry is not None:
                # re-embed the dropped gauge so X~ lives in the original Kraus space
                t = state.tensors[site]
                state.tensors[site] = np.tensordot(
                    t, detail.dropped_kraus_isometry, axes=(3, 0)
                )
            x_after = state.reconstruct_purification()
            dist2 = np.linalg.norm(x_before - x_after) ** 2
            assert dist2 == pytest.approx(two_norm_increment(detail.delta) ** 2, abs=1e-10)
            assert state.norm() == pytest.approx(1.0, abs=1e-10)

    def test_ledger_updated(self):
        state = LptnState.random_mixed([2, 2, 2], 4, 4, seed=3)
        state.canonicalize(1)
        state.compress(1, "kraus", max_dim=2)
        state.compress(1, "right", max_dim=1)
        assert len(state.ledger.events) == 2
        assert state.ledger.accumulated_two_norm >= 0.0
        assert state.ledger.delta_max >= max(e.delta for e in state.ledger.events) - 1e-15

    def test_positivity_after_compression(self):
        state = LptnState.random_mixed([2, 2, 2], 4, 4, seed=13)
        state.canonicalize(1)
        state.compress(1, "right", max_dim=2)
        state.compress(1, "kraus", max_dim=2)
        rho = state.reconstruct_density()
        assert np.linalg.eigvalsh(rho).min() >= -1e-10
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-10)

    def test_max_dim_validation(self):
        state = LptnState.random_mixed([2, 2], 2, 2, seed=1)
        state.canonicalize(0)
        with pytest.raises(ValidationError):
            state.compress(0, "right", max_dim=0)


class TestReconstruct:
    def test_product_01(self):
        state = LptnState.from_product_state([[1.0, 0.0], [0.0, 1.0]])
        np.testing.assert_allclose(
            state.reconstruct_density(), np.diag([0.0, 1.0, 0.0, 0.0]), atol=1e-14
        )

    def test_cross_check_with_purification(self):
        state = LptnState.random_mixed([2, 3, 2], 3, 2, seed=21)
        np.testing.assert_allclose(
            state.reconstruct_density(), dense_cross_check(state), atol=1e-12
        )

    def test_capacity_cap(self):
        state = LptnState.from_maximally_mixed([2] * 13)
        with pytest.raises(CapacityError):
            state.reconstruct_density()


class TestExpectations:
    def test_sz_on_zero_product(self):
        state = LptnState.from_product_state([[1.0, 0.0]] * 3)
        for site in range(3):
            assert state.expectation_local(site, SIGMA_Z) == pytest.approx(1.0)

    def test_traceless_on_maximally_mixed(self):
        state = LptnState.from_maximally_mixed([2, 2])
        assert state.expectation_local(0, SIGMA_X) == pytest.approx(0.0, abs=1e-14)
        assert state.expectation_two_site(0, kron(SIGMA_X, SIGMA_X)) == pytest.approx(0.0, abs=1e-14)

    def test_zz_on_product(self):
        state = LptnState.from_product_state([[1.0, 0.0], [1.0, 0.0]])
        assert state.expectation_two_site(0, kron(SIGMA_Z, SIGMA_Z)).real == pytest.approx(1.0)

    def test_against_dense(self):
        state = LptnState.random_mixed([2, 2, 2, 2], 3, 3, seed=17)
        rho = state.reconstruct_density()
        obs = SIGMA_Z
        for site in range(4):
            dense = np.trace(
                rho @ np.kron(np.kron(np.eye(2**site), obs), np.eye(2 ** (3 - site)))
            ).real
            assert state.expectation_local(site, obs) == pytest.approx(dense, abs=1e-11)

    def test_two_site_against_dense(self):
        state = LptnState.random_mixed([2, 2, 2], 3, 2, seed=19)
        rho = state.reconstruct_density()
        obs = kron(SIGMA_X, SIGMA_Z)
        dense = complex(np.trace(rho @ np.kron(obs, np.eye(2))))
        got = state.expectation_two_site(0, obs)
        assert got == pytest.approx(dense, abs=1e-11)

    def test_non_hermitian_local_rejected(self):
        state = LptnState.from_maximally_mixed([2])
        with pytest.raises(ValidationError):
            state.expectation_local(0, np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestNormTransferOnStates:
    def test_fidelity_bound_after_compression(self):
        state = LptnState.random_mixed([2, 2, 2], 4, 4, seed=30)
        rho0 = state.reconstruct_density()
        x0 = state.reconstruct_purification()
        state.canonicalize(1)
        state.compress(1, "right", max_dim=1)
        rho1 = state.reconstruct_density()
        x1 = state.reconstruct_purification()
        dist2 = np.linalg.norm(x0 - x1)
        assert trace_distance(rho0, rho1) <= np.sqrt(2.0) * dist2 + 1e-10
        assert fidelity(rho0, rho1) >= 1.0 - dist2**2 / 2.0 - 1e-10
