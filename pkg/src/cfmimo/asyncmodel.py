"""Asynchronous-reception factors and the per-beam timing-advance plan.

A link whose offset plus delay spread exceeds the CP loses the head of its
receive window.  The lost-sample count eps drives a spectral leakage
coefficient W (FFT of the surviving-window indicator) and a per-subcarrier
phase shift chi; kappa = chi * W / M combines both.  PBTA advances each RF
chain's timing by the offset of the UE it serves, which zeroes the effective
offset on every served link and shrinks it elsewhere.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .scenario import ModelValidityWarning, TimingOffsets


class UnservedBeam(ValueError):
    """A selected RF chain has no serving UE."""


@dataclass(frozen=True)
class BeamTimingPlan:
    """Per-chain transmit (DL) / receive (UL) advances, (L, N_RF) samples.

    advance[l, n] equals the offset of the UE served by chain n of AAU l;
    unused chains carry 0.
    """

    advance: np.ndarray
    chain_ue: np.ndarray  # (L, N_RF), -1 for unused chains


@dataclass(frozen=True)
class EffectiveOffsets:
    """Per (UE, AAU, chain) offsets after timing advance.

    delta_eff = delta[k, l] - advance[l, n]; may be negative when another
    UE's beam is over-advanced relative to this UE.  epsilon is the
    head-corruption length max((T_D - 1) + delta_eff - M_CP, 0).
    """

    delta_eff: np.ndarray  # (K, L, N_RF) integers
    epsilon: np.ndarray    # (K, L, N_RF) integers >= 0


def residual_offset(delta, delay_spread: int, cp_length: int):
    """Samples of the receive window corrupted by asynchronous arrival.

    eps = max((T_D - 1) + delta - M_CP, 0)
    """
    return np.maximum((delay_spread - 1) + np.asarray(delta) - cp_length, 0)


def leakage_coeff(epsilon: int, m, num_subcarriers: int):
    """Spectral coefficient W^[m] of the surviving-window indicator.

    W^[0] = M - eps; otherwise the geometric-sum closed form
    (e^{-j2 pi m eps / M} - 1) / (1 - e^{-j2 pi m / M}), which equals
    minus the DFT of the erased head window.
    """
    m_arr = np.asarray(m)
    mm = np.mod(m_arr, num_subcarriers)
    with np.errstate(invalid="ignore", divide="ignore"):
        num = np.exp(-2j * np.pi * mm * epsilon / num_subcarriers) - 1.0
        den = 1.0 - np.exp(-2j * np.pi * mm / num_subcarriers)
        out = np.where(mm == 0, complex(num_subcarriers - epsilon), num / den)
    if out.ndim == 0:
        return complex(out)
    return out


def phase_shift(delta, m, num_subcarriers: int):
    """Unit-modulus subcarrier phase e^{-j 2 pi m delta / M}."""
    return np.exp(-2j * np.pi * np.asarray(m) * np.asarray(delta) / num_subcarriers)


def kappa(delta_eff, i, m, num_subcarriers: int, delay_spread: int,
          cp_length: int):
    """Combined attenuation-and-phase factor of one beam at subcarrier m
    for data sent on subcarrier i: chi(i) * W[(m - i) mod M] / M."""
    eps = residual_offset(delta_eff, delay_spread, cp_length)
    eps = np.minimum(eps, num_subcarriers)
    w = leakage_coeff_vec(eps, np.mod(np.asarray(m) - np.asarray(i), num_subcarriers),
                          num_subcarriers)
    return phase_shift(delta_eff, i, num_subcarriers) * w / num_subcarriers


def leakage_coeff_vec(epsilon, m, num_subcarriers: int):
    """leakage_coeff broadcast over array-valued epsilon."""
    eps = np.asarray(epsilon)
    mm = np.mod(np.asarray(m), num_subcarriers)
    eps, mm = np.broadcast_arrays(eps, mm)
    with np.errstate(invalid="ignore", divide="ignore"):
        num = np.exp(-2j * np.pi * mm * eps / num_subcarriers) - 1.0
        den = 1.0 - np.exp(-2j * np.pi * mm / num_subcarriers)
        out = np.where(mm == 0, (num_subcarriers - eps).astype(complex), num / den)
    return out


def no_advance_plan(num_aaus: int, rf_chains: int, chain_ue: np.ndarray | None = None) -> BeamTimingPlan:
    """The plain asynchronous baseline: every chain transmits at the nominal time."""
    if chain_ue is None:
        chain_ue = np.full((num_aaus, rf_chains), -1, dtype=np.int64)
    return BeamTimingPlan(advance=np.zeros((num_aaus, rf_chains), dtype=np.int64),
                          chain_ue=chain_ue)


def pbta_plan(chain_ue: np.ndarray, offsets: TimingOffsets,
              direction: str = "dl") -> BeamTimingPlan:
    """Advance each chain by the offset of its served UE.

    chain_ue[l, n] is the UE index served by chain n of AAU l (-1 = unused).
    """
    delta = offsets.delta_dl if direction == "dl" else offsets.delta_ul
    l_aaus, n_rf = chain_ue.shape
    advance = np.zeros((l_aaus, n_rf), dtype=np.int64)
    for l in range(l_aaus):
        for n in range(n_rf):
            k = chain_ue[l, n]
            if k >= 0:
                advance[l, n] = delta[k, l]
    return BeamTimingPlan(advance=advance, chain_ue=chain_ue.copy())


def effective_offsets(offsets_delta: np.ndarray, plan: BeamTimingPlan,
                      delay_spread: int, cp_length: int,
                      warn: bool = False) -> EffectiveOffsets:
    """delta_eff[k, l, n] = delta[k, l] - advance[l, n], with epsilon clamped.

    Chains marked as serving a UE but advanced inconsistently are the
    caller's bug; chains serving UE k always get delta_eff 0 by
    construction.  Early arrivals (negative delta_eff) are treated as
    absorbed by the CP here; the exact evaluation maps model their
    next-symbol pre-echo separately.
    """
    delta_eff = offsets_delta[:, :, None] - plan.advance[None, :, :]
    eps = residual_offset(delta_eff, delay_spread, cp_length)
    if warn:
        margin = cp_length - (delay_spread - 1)
        n_early = int(np.count_nonzero(delta_eff < -margin))
        if n_early:
            warnings.warn(
                f"{n_early} beam links arrive early beyond the CP slack "
                f"({margin} samples); their next-symbol pre-echo is outside "
                "the closed-form leakage model",
                ModelValidityWarning,
                stacklevel=2,
            )
    return EffectiveOffsets(delta_eff=delta_eff, epsilon=eps)


def theta_diagonal(eff: EffectiveOffsets, k: int, i, m, num_subcarriers: int,
                   delay_spread: int, cp_length: int) -> np.ndarray:
    """Diagonal of Theta_{k,m}^i over stacked (AAU, chain) order, length L*N_RF.

    Entry (l, n) is kappa for beam n of AAU l at receive subcarrier m, data
    subcarrier i.
    """
    d = eff.delta_eff[k]  # (L, N_RF)
    kap = kappa(d, i, m, num_subcarriers, delay_spread, cp_length)
    return kap.reshape(-1)


def theta_block(eff: EffectiveOffsets, k: int, i, m, num_subcarriers: int,
                delay_spread: int, cp_length: int) -> np.ndarray:
    """Full block-diagonal Theta matrix (dense, for tests and small cases)."""
    return np.diag(theta_diagonal(eff, k, i, m, num_subcarriers,
                                  delay_spread, cp_length))
