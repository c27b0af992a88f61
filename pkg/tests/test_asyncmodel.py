import numpy as np
import pytest

from cfmimo.asyncmodel import (
    BeamTimingPlan,
    effective_offsets,
    kappa,
    leakage_coeff,
    leakage_coeff_vec,
    no_advance_plan,
    pbta_plan,
    phase_shift,
    residual_offset,
    theta_block,
    theta_diagonal,
)
from cfmimo.scenario import TimingOffsets


def direct_erased_sum(eps, m, M):
    """Independent oracle: minus the DFT of the erased head window."""
    return -sum(np.exp(-2j * np.pi * m * t / M) for t in range(eps))


class TestResidualOffset:
    def test_case1_no_leak(self):
        assert residual_offset(0, delay_spread=3, cp_length=10) == 0

    def test_beyond_cp(self):
        assert residual_offset(20, delay_spread=3, cp_length=10) == 12

    def test_boundary_exactly_absorbed(self):
        assert residual_offset(8, delay_spread=3, cp_length=10) == 0

    def test_negative_clamps(self):
        assert residual_offset(-50, delay_spread=3, cp_length=10) == 0


class TestLeakageCoeff:
    def test_zero_epsilon(self):
        M = 32
        assert leakage_coeff(0, 0, M) == pytest.approx(M)
        for m in range(1, M):
            assert leakage_coeff(0, m, M) == pytest.approx(0.0)

    def test_total_erasure(self):
        assert leakage_coeff(128, 0, 128) == pytest.approx(0.0)

    def test_matches_direct_geometric_sum(self):
        M, eps = 128, 12
        for m in (1, 2, 63, 127):
            ref = direct_erased_sum(eps, m, M)
            assert leakage_coeff(eps, m, M) == pytest.approx(ref, abs=1e-10)

    def test_vectorized_agrees_with_scalar(self):
        M = 16
        eps = np.array([0, 3, 7])
        m = np.array([0, 1, 5])
        vec = leakage_coeff_vec(eps, m, M)
        for e, mm, v in zip(eps, m, vec):
            assert v == pytest.approx(leakage_coeff(int(e), int(mm), M))

    def test_erased_window_parseval(self):
        # The leakage spectrum (geometric sum extended to m=0, where it
        # equals -eps) carries total energy eps * M; together with
        # W[0] = M - eps this fixes the energy split identity.
        for M in (16, 128):
            for eps in range(0, M + 1):
                leak = np.array([direct_erased_sum(eps, m, M) for m in range(M)])
                assert np.sum(np.abs(leak) ** 2) == pytest.approx(eps * M, rel=1e-12)
                w0 = leakage_coeff(eps, 0, M)
                assert w0 == pytest.approx(M - eps)
                assert leak[0] == pytest.approx(-eps)


class TestPhaseShift:
    def test_zero_delta(self):
        assert phase_shift(0, 5, 64) == pytest.approx(1.0)

    def test_full_period(self):
        for m in range(8):
            assert phase_shift(8, m, 8) == pytest.approx(1.0)

    def test_dc_subcarrier(self):
        assert phase_shift(17, 0, 64) == pytest.approx(1.0)

    def test_unit_modulus(self):
        assert abs(phase_shift(13, 29, 64)) == pytest.approx(1.0)


class TestKappa:
    def test_synchronized_beam_is_exactly_one(self):
        assert kappa(0, 4, 4, 32, delay_spread=3, cp_length=10) == 1.0

    def test_no_ici_when_aligned(self):
        assert kappa(0, 3, 4, 32, delay_spread=3, cp_length=10) == pytest.approx(0.0)

    def test_amplitude_attenuation(self):
        # delta 20, T_D 3, CP 10 -> eps 12; same-subcarrier factor (116/128)*chi
        M, m = 128, 5
        val = kappa(20, m, m, M, delay_spread=3, cp_length=10)
        assert val == pytest.approx((116 / 128) * phase_shift(20, m, M))


class TestPlans:
    def _offsets(self, delta):
        d = np.asarray(delta, dtype=np.int64)
        return TimingOffsets(delta_dl=d, delta_ul=d.copy())

    def test_all_equal_offsets_zero_effective(self):
        off = self._offsets([[5, 5], [5, 5]])
        chain_ue = np.array([[0, 1], [1, 0]])
        plan = pbta_plan(chain_ue, off)
        eff = effective_offsets(off.delta_dl, plan, 3, 10)
        np.testing.assert_array_equal(eff.delta_eff, 0)

    def test_no_advance_reduces_to_raw_offsets(self):
        off = self._offsets([[0, 9], [4, 0]])
        plan = no_advance_plan(2, 2)
        eff = effective_offsets(off.delta_dl, plan, 3, 10)
        for n in range(2):
            np.testing.assert_array_equal(eff.delta_eff[:, :, n], off.delta_dl)

    def test_hand_worked_two_by_two(self):
        # delta = [[0, 5], [3, 0]]; chain 1 of each AAU serves UE 1.
        off = self._offsets([[0, 5], [3, 0]])
        chain_ue = np.array([[0, 1], [0, 1]])
        plan = pbta_plan(chain_ue, off)
        np.testing.assert_array_equal(plan.advance, [[0, 3], [5, 0]])
        eff = effective_offsets(off.delta_dl, plan, 3, 10)
        assert eff.delta_eff[0, 1, 0] == 0      # UE1 via its own beam at AAU2
        assert eff.delta_eff[1, 1, 0] == -5     # UE2 via UE1's beam at AAU2

    def test_served_links_always_zero(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            delta = rng.integers(0, 30, size=(4, 3))
            delta -= delta.min(axis=1, keepdims=True)
            off = self._offsets(delta)
            chain_ue = np.stack([rng.permutation(4)[:2] for _ in range(3)])
            plan = pbta_plan(chain_ue, off)
            eff = effective_offsets(off.delta_dl, plan, 3, 10)
            for l in range(3):
                for n in range(2):
                    k = chain_ue[l, n]
                    assert eff.delta_eff[k, l, n] == 0
                    assert eff.epsilon[k, l, n] == 0  # T_D-1 <= CP here

    def test_unused_chain_has_zero_advance(self):
        off = self._offsets([[0, 2], [1, 0]])
        chain_ue = np.array([[0, -1], [1, -1]])
        plan = pbta_plan(chain_ue, off)
        assert plan.advance[0, 1] == 0 and plan.advance[1, 1] == 0


class TestTheta:
    def _eff(self, delta, chain_ue, advance=None):
        off = TimingOffsets(delta_dl=np.asarray(delta), delta_ul=np.asarray(delta))
        if advance is None:
            plan = pbta_plan(np.asarray(chain_ue), off)
        else:
            plan = BeamTimingPlan(advance=np.asarray(advance), chain_ue=np.asarray(chain_ue))
        return effective_offsets(off.delta_dl, plan, 3, 10)

    def test_identity_when_aligned(self):
        eff = self._eff([[0, 0], [0, 0]], [[0, 1], [0, 1]])
        th = theta_block(eff, 0, 4, 4, 32, 3, 10)
        np.testing.assert_allclose(th, np.eye(4))

    def test_zero_matrix_off_subcarrier(self):
        eff = self._eff([[0, 0], [0, 0]], [[0, 1], [0, 1]])
        th = theta_block(eff, 0, 3, 4, 32, 3, 10)
        np.testing.assert_allclose(th, np.zeros((4, 4)), atol=1e-12)

    def test_diagonal_matches_elementwise_kappa(self):
        delta = [[0, 12], [7, 0]]
        chain_ue = [[0, 1], [1, 0]]
        eff = self._eff(delta, chain_ue)
        diag = theta_diagonal(eff, 1, 2, 5, 32, 3, 10)
        flat = eff.delta_eff[1].reshape(-1)
        for idx, d in enumerate(flat):
            assert diag[idx] == pytest.approx(kappa(int(d), 2, 5, 32, 3, 10))


class TestEnergySplit:
    def test_single_tap_energy_split(self):
        # |W[0]/M|^2 + sum_{i!=0} |W[i]/M|^2 == (M - eps)/M for all eps.
        M = 64
        for eps in (0, 1, 5, 33, 64):
            w = leakage_coeff_vec(eps, np.arange(M), M)
            total = np.sum(np.abs(w / M) ** 2)
            assert total == pytest.approx((M - eps) / M, rel=1e-12)
