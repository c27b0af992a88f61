"""Cross-validation of the transfer-map kernels.

The reference here is an intentionally naive symbol-stream simulation:
evaluate the transmitted sample stream position by position, apply the taps,
window and demodulate.  The kernels must reproduce it to roundoff for
positive shifts (late arrival), negative shifts (early arrival / pre-echo)
and shifts beyond a whole symbol.
"""

import numpy as np
import pytest

from cfmimo._kernels import (
    HAS_NUMBA,
    class_range,
    link_coeffs,
    link_coeffs_numba,
    link_coeffs_numpy,
    scatter_add_numpy,
    scatter_add,
)
from cfmimo.asyncmodel import leakage_coeff_vec, phase_shift, residual_offset


def naive_demod(taps, d, x_by_class, m_sub, cp_length, m_ref, conj_taps):
    """Sample-exact reference demodulation of one link."""
    span = m_sub + cp_length
    g = np.conj(taps) if conj_taps else taps

    def stream(pos):
        r = (pos + cp_length) // span
        if r not in x_by_class:
            return 0.0
        j = pos - r * span
        x = x_by_class[r]
        mp = np.arange(m_sub)
        return np.sum(x * np.exp(2j * np.pi * mp * j / m_sub))

    y = 0.0
    for t in range(m_sub):
        acc = sum(g[i] * stream(t - d - i) for i in range(len(taps)))
        y += acc * np.exp(-2j * np.pi * m_ref * t / m_sub)
    return y / m_sub


def random_case(rng, n_links, t_d, shifts):
    taps = (rng.standard_normal((n_links, t_d))
            + 1j * rng.standard_normal((n_links, t_d)))
    return taps, np.asarray(shifts, dtype=np.int64)


@pytest.mark.parametrize("conj_taps", [False, True])
@pytest.mark.parametrize("shift", [0, 3, 7, 11, -3, -9, 20, 35])
def test_map_matches_naive_stream(conj_taps, shift):
    m_sub, cp = 16, 4
    rng = np.random.default_rng(abs(shift) + 100 * conj_taps)
    taps, shifts = random_case(rng, 1, 3, [shift])
    classes = class_range(shifts, 3, m_sub, cp)
    coeffs = link_coeffs_numpy(taps, shifts, 5, m_sub, cp, classes, conj_taps)
    x_by_class = {
        int(r): rng.standard_normal(m_sub) + 1j * rng.standard_normal(m_sub)
        for r in classes
    }
    predicted = sum(
        np.sum(coeffs[0, c] * x_by_class[int(r)]) for c, r in enumerate(classes)
    )
    reference = naive_demod(taps[0], shift, x_by_class, m_sub, cp, 5, conj_taps)
    assert predicted == pytest.approx(reference, abs=1e-10)


@pytest.mark.skipif(not HAS_NUMBA, reason="numba unavailable")
def test_numba_and_numpy_paths_agree():
    m_sub, cp = 32, 6
    rng = np.random.default_rng(0)
    shifts = rng.integers(-10, 40, size=12)
    taps, shifts = random_case(rng, 12, 3, shifts)
    classes = class_range(shifts, 3, m_sub, cp)
    for conj_taps in (False, True):
        a = link_coeffs_numpy(taps, shifts, 7, m_sub, cp, classes, conj_taps)
        b = link_coeffs_numba(taps, shifts, 7, m_sub, cp, classes, conj_taps)
        np.testing.assert_allclose(a, b, atol=1e-11)


def test_clean_link_reduces_to_pure_channel():
    # Shift zero with taps inside the CP: the class-0 map is diagonal with
    # the tap DFT, all other classes vanish.
    m_sub, cp = 16, 4
    rng = np.random.default_rng(1)
    taps, shifts = random_case(rng, 1, 3, [0])
    classes = class_range(shifts, 3, m_sub, cp)
    coeffs = link_coeffs_numpy(taps, shifts, 5, m_sub, cp, classes, False)
    c0 = list(classes).index(0)
    expected = np.sum(taps[0] * np.exp(-2j * np.pi * 5 * np.arange(3) / m_sub))
    for c, r in enumerate(classes):
        for mp in range(m_sub):
            val = coeffs[0, c, mp]
            if c == c0 and mp == 5:
                assert val == pytest.approx(expected, abs=1e-12)
            else:
                assert abs(val) < 1e-12


def test_positive_shift_matches_leakage_closed_form():
    # Single tap, late arrival: the class-0 row must equal the
    # chi * W / M closed form and the previous-symbol row must carry the
    # complementary energy.
    m_sub, cp = 16, 2
    d = 7
    taps = np.array([[1.0 + 0.5j]])
    shifts = np.array([d], dtype=np.int64)
    classes = class_range(shifts, 1, m_sub, cp)
    m_ref = 6
    coeffs = link_coeffs_numpy(taps, shifts, m_ref, m_sub, cp, classes, False)
    c0 = list(classes).index(0)
    eps = residual_offset(d, 1, cp)
    mp = np.arange(m_sub)
    w = leakage_coeff_vec(int(eps), np.mod(m_ref - mp, m_sub), m_sub)
    expected = phase_shift(d, mp, m_sub) * w / m_sub * taps[0, 0]
    np.testing.assert_allclose(coeffs[0, c0], expected, atol=1e-12)
    # Energy split: class-0 same-subcarrier coefficient has amplitude
    # (M - eps)/M, the rest of the unit energy leaks to ICI + ISI.
    total = np.sum(np.abs(coeffs[0]) ** 2)
    assert total == pytest.approx(np.abs(taps[0, 0]) ** 2, rel=1e-12)


def test_negative_shift_produces_next_symbol_echo():
    m_sub, cp = 16, 4
    taps = np.array([[1.0 + 0j]])
    shifts = np.array([-5], dtype=np.int64)
    classes = list(class_range(shifts, 1, m_sub, cp))
    coeffs = link_coeffs_numpy(taps, np.array([-5]), 3, m_sub, cp,
                               np.array(classes), False)
    assert 1 in classes
    nxt = coeffs[0, classes.index(1)]
    assert np.sum(np.abs(nxt) ** 2) > 0
    # 5 of 16 window samples read the next symbol.
    assert np.sum(np.abs(nxt) ** 2) == pytest.approx(5 / 16, rel=1e-12)


def test_scatter_add_variants_agree():
    rng = np.random.default_rng(2)
    src = rng.standard_normal((4, 50)) + 1j * rng.standard_normal((4, 50))
    taps = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    for shift in (-7, 0, 13):
        a = np.zeros((4, 64), dtype=complex)
        b = np.zeros((4, 64), dtype=complex)
        scatter_add_numpy(a, src, shift, taps)
        scatter_add(b, src, shift, taps)
        np.testing.assert_allclose(a, b, atol=1e-12)
        # spot-check one sample against the definition
        t = 20
        ref = sum(taps[i] * src[1, t - shift - i]
                  for i in range(3) if 0 <= t - shift - i < 50)
        assert a[1, t] == pytest.approx(ref)


def test_dispatch_matches_numpy():
    m_sub, cp = 16, 4
    rng = np.random.default_rng(3)
    taps, shifts = random_case(rng, 3, 2, [0, 4, -2])
    classes = class_range(shifts, 2, m_sub, cp)
    a = link_coeffs(taps, shifts, 2, m_sub, cp, classes, True)
    b = link_coeffs_numpy(taps, shifts, 2, m_sub, cp, classes, True)
    np.testing.assert_allclose(a, b, atol=1e-11)
