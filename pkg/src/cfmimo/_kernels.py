"""Hot numeric kernels with numba-jitted and pure-numpy implementations.

The central object is the per-link transfer map: for one beam link with an
integer arrival shift d and tap sequence g, the coefficient that the
frequency-domain data symbol x^{a+r}[m'] (symbol class r relative to the
receive window, subcarrier m') contributes to the demodulated window-a
output at subcarrier m_ref.  Every receive-window sample indexes one sample
of the transmitted sample stream (CP included), so phase-shift, ICI, ISI
and early-arrival pre-echo all fall out of the same bookkeeping.

Two implementations are kept deliberately independent: the numba path
accumulates sample by sample, the numpy path collapses each tap/class run
of window samples into a closed-form geometric sum.  They agree to
floating-point roundoff and cross-validate each other in the tests.

Set CFMIMO_DISABLE_NUMBA=1 to force the numpy path (also used when numba
is not importable).
"""

from __future__ import annotations

import os

import numpy as np

try:  # pragma: no cover - exercised via env flag in the benchmark
    if os.environ.get("CFMIMO_DISABLE_NUMBA", "0") == "1":
        raise ImportError("numba disabled by CFMIMO_DISABLE_NUMBA")
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover
    njit = None
    HAS_NUMBA = False


def class_range(shifts: np.ndarray, num_taps: int, num_subcarriers: int,
                cp_length: int) -> np.ndarray:
    """Symbol classes r that any window sample of any link can touch.

    Window sample t reads stream position p = t - d - i; the position falls
    in symbol a+r for r = floor((p + M_CP) / S), S = M + M_CP.
    """
    span = num_subcarriers + cp_length
    p_min = 0 - int(np.max(shifts)) - (num_taps - 1)
    p_max = (num_subcarriers - 1) - int(np.min(shifts))
    r_min = (p_min + cp_length) // span
    r_max = (p_max + cp_length) // span
    return np.arange(min(r_min, 0), max(r_max, 0) + 1, dtype=np.int64)


def link_coeffs_numpy(taps: np.ndarray, shifts: np.ndarray, m_ref: int,
                      num_subcarriers: int, cp_length: int,
                      classes: np.ndarray, conj_taps: bool) -> np.ndarray:
    """Transfer-map coefficients, (n_links, n_classes, M).

    taps: (n_links, T_D) complex; shifts: (n_links,) integers.  Entry
    [b, c, m'] multiplies x^{a+classes[c]}[m'] in the window-a output at
    subcarrier m_ref.
    """
    m_sub = num_subcarriers
    span = m_sub + cp_length
    g = taps.conj() if conj_taps else taps
    n_links, n_taps = g.shape
    d = shifts.astype(np.int64)
    r = classes.astype(np.int64)

    # Run of window samples where tap i of link b reads symbol a+r:
    # start = r S + d + i - M_CP, length S, clipped to [0, M-1].
    start = (r[None, None, :] * span + d[:, None, None]
             + np.arange(n_taps)[None, :, None] - cp_length)
    lo = np.maximum(start, 0)
    hi = np.minimum(start + span - 1, m_sub - 1)
    length = np.maximum(hi - lo + 1, 0)

    mp = np.arange(m_sub)
    delta = np.mod(mp - m_ref, m_sub)  # (M,)
    omega = np.exp(2j * np.pi * delta / m_sub)
    # Geometric sum over the run, G = sum_t omega^t for t in [lo, hi].
    lo4 = lo[..., None]
    hi4 = hi[..., None]
    with np.errstate(invalid="ignore", divide="ignore"):
        num = (np.exp(2j * np.pi * delta * (hi4 + 1) / m_sub)
               - np.exp(2j * np.pi * delta * lo4 / m_sub))
        geom = np.where(delta == 0, length[..., None].astype(complex),
                        num / (omega - 1.0))
    geom = np.where(length[..., None] > 0, geom, 0.0)

    # Source phase: x^{a+r}[m'] contributes e^{+j 2 pi m' (t - d - i - r S)/M};
    # pulling the t-independent part out of the geometric sum leaves this.
    arg = (d[:, None, None, None] + np.arange(n_taps)[None, :, None, None]
           + r[None, None, :, None] * span) * mp[None, None, None, :]
    src_phase = np.exp(-2j * np.pi * arg / m_sub)

    coeffs = np.einsum("bi,bicm->bcm", g, geom * src_phase) / m_sub
    return coeffs


if HAS_NUMBA:

    @njit(cache=True)
    def _link_coeffs_jit(g, shifts, m_ref, m_sub, cp_length, classes):  # pragma: no cover - numba
        n_links, n_taps = g.shape
        n_classes = classes.shape[0]
        span = m_sub + cp_length
        out = np.zeros((n_links, n_classes, m_sub), dtype=np.complex128)
        r0 = classes[0]
        # phase tables; the inner loop only does lookups and integer steps
        omega = np.empty(m_sub, dtype=np.complex128)
        wtab = np.empty(m_sub, dtype=np.complex128)
        for t in range(m_sub):
            omega[t] = np.exp(2j * np.pi * t / m_sub)
            wtab[t] = np.exp(-2j * np.pi * m_ref * t / m_sub) / m_sub
        for b in range(n_links):
            d = shifts[b]
            for t in range(m_sub):
                for i in range(n_taps):
                    p = t - d - i
                    r = (p + cp_length) // span
                    c = r - r0
                    if c < 0 or c >= n_classes:
                        continue
                    j = p - r * span
                    j_mod = ((j % m_sub) + m_sub) % m_sub
                    gw = g[b, i] * wtab[t]
                    idx = 0
                    for mp in range(m_sub):
                        out[b, c, mp] += gw * omega[idx]
                        idx += j_mod
                        if idx >= m_sub:
                            idx -= m_sub
        return out

    def link_coeffs_numba(taps, shifts, m_ref, num_subcarriers, cp_length,
                          classes, conj_taps):
        g = np.ascontiguousarray(taps.conj() if conj_taps else taps,
                                 dtype=np.complex128)
        return _link_coeffs_jit(g, np.ascontiguousarray(shifts, dtype=np.int64),
                                int(m_ref), int(num_subcarriers), int(cp_length),
                                np.ascontiguousarray(classes, dtype=np.int64))

else:  # pragma: no cover
    link_coeffs_numba = None


def link_coeffs(taps, shifts, m_ref, num_subcarriers, cp_length, classes,
                conj_taps):
    """Dispatch to the jitted kernel when available."""
    if HAS_NUMBA:
        return link_coeffs_numba(taps, shifts, m_ref, num_subcarriers,
                                 cp_length, classes, conj_taps)
    return link_coeffs_numpy(taps, shifts, m_ref, num_subcarriers, cp_length,
                             classes, conj_taps)


def scatter_add_numpy(out: np.ndarray, src: np.ndarray, shift: int,
                      taps: np.ndarray) -> None:
    """out[..., s + shift + i] += taps[i] * src[..., s] for every tap.

    Contributions falling outside the output are dropped; callers size the
    frames with enough guard.
    """
    n = src.shape[-1]
    total = out.shape[-1]
    for i, tap in enumerate(taps):
        off = shift + i
        lo_out = max(0, off)
        hi_out = min(total, n + off)
        if hi_out <= lo_out:
            continue
        out[..., lo_out:hi_out] += tap * src[..., lo_out - off:hi_out - off]


if HAS_NUMBA:

    @njit(cache=True)
    def _scatter_add_jit(out, src, shift, taps):  # pragma: no cover - numba
        n_rows, n = src.shape
        total = out.shape[1]
        for i in range(taps.shape[0]):
            off = shift + i
            tap = taps[i]
            lo = max(0, off)
            hi = min(total, n + off)
            for row in range(n_rows):
                for s in range(lo, hi):
                    out[row, s] += tap * src[row, s - off]

    def scatter_add_numba(out, src, shift, taps):
        if not (out.flags.c_contiguous and src.flags.c_contiguous):
            scatter_add_numpy(out, src, shift, taps)
            return
        _scatter_add_jit(out.reshape(-1, out.shape[-1]),
                         src.reshape(-1, src.shape[-1]), int(shift),
                         np.ascontiguousarray(taps, dtype=np.complex128))

else:  # pragma: no cover
    scatter_add_numba = None


def scatter_add(out, src, shift, taps):
    if HAS_NUMBA:
        scatter_add_numba(out, src, shift, taps)
    else:
        scatter_add_numpy(out, src, shift, taps)
