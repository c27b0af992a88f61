"""Multipath channel generation and its beam/frequency/time representations.

The physical model is a sparse Saleh-Valenzuela channel per (UE, AAU) link:
a handful of paths with circular-Gaussian gains, uniform delays and uniform
departure angles.  A unitary DFT codebook maps the spatial response onto N
orthogonal beams.  The simulator's ground truth is the integer-sample tap
sequence in the beam domain (delays quantized to the sampling grid, the
carrier phase folded into each path gain); subcarrier responses for both
link directions are derived from the taps so that the frequency-domain model
and the time-domain waveform oracle agree exactly.

Convention: OFDM synthesis uses exp(+j 2 pi m t / M) (see td_oracle), hence
a delay of t samples multiplies subcarrier m by exp(-j 2 pi m t / M).  The
uplink response uses that factor directly.  The downlink received scalar is
h^H applied to the transmit vector, which flips the sign of the phase ramp;
`freq_response_dl` returns the vector whose conjugate multiplies the
transmitted symbol.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import ScenarioConfig, LargeScaleMap


class DelaySpreadExceeded(ValueError):
    """A quantized path delay falls outside the delay-spread window."""


@dataclass(frozen=True)
class PathSet:
    """Multipath parameters of one link."""

    gains: np.ndarray       # (P,) complex, unit variance
    delays: np.ndarray      # (P,) seconds
    directions: np.ndarray  # (P,) normalized spatial direction in [-1/2, 1/2)


@dataclass(frozen=True)
class DftCodebook:
    """Unitary beam transform; row n is the steering vector at direction n."""

    matrix: np.ndarray       # (N, N)
    directions: np.ndarray   # (N,) grid directions


@dataclass(frozen=True)
class ChannelRealization:
    """Beam-domain channels for every link of a drop.

    taps:  (K, L, T_D, N) beam-domain impulse response
    freq_dl / freq_ul: (K, L, M, N) per-subcarrier beam responses; the
        downlink model applies freq_dl conjugated, the uplink applies
        freq_ul directly.
    """

    taps: np.ndarray
    freq_dl: np.ndarray
    freq_ul: np.ndarray
    subcarrier_freqs: np.ndarray
    codebook: DftCodebook

    @property
    def num_ues(self) -> int:
        return self.taps.shape[0]

    @property
    def num_aaus(self) -> int:
        return self.taps.shape[1]

    def spatial_freq_response(self, k: int, l: int, m: int) -> np.ndarray:
        """Spatial-domain downlink response U^H h_beam at one subcarrier."""
        return self.codebook.matrix.conj().T @ self.freq_dl[k, l, m]


def array_response(direction: float | np.ndarray, num_antennas: int) -> np.ndarray:
    """Unit-norm steering vector over the symmetric element index set."""
    idx = np.arange(num_antennas) - (num_antennas - 1) / 2.0
    direction = np.asarray(direction)
    phase = -2j * np.pi * np.multiply.outer(direction, idx)
    return np.exp(phase) / np.sqrt(num_antennas)


def dft_codebook(num_antennas: int) -> DftCodebook:
    """N orthogonal beams on the grid (n - (N+1)/2)/N, n = 1..N."""
    n = np.arange(1, num_antennas + 1)
    dirs = (n - (num_antennas + 1) / 2.0) / num_antennas
    rows = array_response(dirs, num_antennas).conj()
    return DftCodebook(matrix=rows, directions=dirs)


def beam_transform(codebook: DftCodebook, spatial: np.ndarray) -> np.ndarray:
    """Apply the unitary beam map; preserves norms."""
    return codebook.matrix @ spatial


def dirichlet(x: np.ndarray, num_antennas: int) -> np.ndarray:
    """sin(N pi x) / sin(pi x), with the x -> 0 limit N."""
    x = np.asarray(x, dtype=float)
    num = np.sin(num_antennas * np.pi * x)
    den = np.sin(np.pi * x)
    out = np.full_like(x, float(num_antennas))
    nz = np.abs(den) > 1e-12
    out[nz] = num[nz] / den[nz]
    return out


def sample_paths(rng, config: ScenarioConfig) -> PathSet:
    """Draw one link's paths: CN(0,1) gains, U(0, tau_max) delays,
    physical angles U(-pi/2, pi/2) mapped to directions sin(theta)/2."""
    rng = np.random.default_rng(rng)
    p = config.num_paths
    gains = (rng.standard_normal(p) + 1j * rng.standard_normal(p)) / np.sqrt(2.0)
    delays = rng.uniform(0.0, config.delay_max, size=p) if config.delay_max > 0 else np.zeros(p)
    theta = rng.uniform(-np.pi / 2.0, np.pi / 2.0, size=p)
    return PathSet(gains=gains, delays=delays, directions=np.sin(theta) / 2.0)


def channel_freq_response(paths: PathSet, beta: float, config: ScenarioConfig,
                          m: int) -> np.ndarray:
    """Spatial response at subcarrier m with the full physical path phases.

    h[m] = sqrt(N / (beta P)) sum_p g_p exp(-j 2 pi tau_p f_m) a(psi_p)
    """
    n = config.antennas_per_aau
    f_m = config.subcarrier_freqs()[m]
    phase = np.exp(-2j * np.pi * paths.delays * f_m)
    steer = array_response(paths.directions, n)  # (P, N)
    scale = np.sqrt(n / (beta * len(paths.gains)))
    return scale * ((paths.gains * phase) @ steer)


def beam_taps(paths: PathSet, beta: float, config: ScenarioConfig,
              codebook: DftCodebook) -> np.ndarray:
    """Beam-domain impulse response, (T_D, N).

    Path delays are quantized to the sampling grid; the carrier phase
    exp(-j 2 pi tau f_c) is folded into each gain so the tap sequence is the
    baseband-equivalent channel.
    """
    t_d = config.delay_spread
    quantized = np.round(paths.delays / config.sample_duration).astype(int)
    if np.any(quantized >= t_d) or np.any(quantized < 0):
        raise DelaySpreadExceeded(
            f"quantized path delays {quantized.tolist()} exceed T_D={t_d}; "
            "reduce delay_max or raise delay_spread"
        )
    n = config.antennas_per_aau
    eff_gains = paths.gains * np.exp(-2j * np.pi * paths.delays * config.carrier_freq)
    steer_beam = beam_transform(codebook, array_response(paths.directions, n).T).T  # (P, N)
    scale = np.sqrt(n / (beta * len(paths.gains)))
    taps = np.zeros((t_d, n), dtype=complex)
    for p in range(len(paths.gains)):
        taps[quantized[p]] += scale * eff_gains[p] * steer_beam[p]
    return taps


def generate_channels(config: ScenarioConfig, fading: LargeScaleMap,
                      rng) -> ChannelRealization:
    """Draw paths for every link and assemble the drop's channel tensors."""
    rng = np.random.default_rng(rng)
    k_ues, l_aaus = fading.beta_linear.shape
    n = config.antennas_per_aau
    m_sub = config.subcarriers
    cb = dft_codebook(n)
    taps = np.zeros((k_ues, l_aaus, config.delay_spread, n), dtype=complex)
    for k in range(k_ues):
        for l in range(l_aaus):
            paths = sample_paths(rng, config)
            taps[k, l] = beam_taps(paths, fading.beta_linear[k, l], config, cb)

    t = np.arange(config.delay_spread)
    m = np.arange(m_sub)
    dft_neg = np.exp(-2j * np.pi * np.outer(m, t) / m_sub)   # (M, T_D)
    freq_ul = np.einsum("mt,kltn->klmn", dft_neg, taps)
    freq_dl = np.einsum("mt,kltn->klmn", dft_neg.conj(), taps)
    return ChannelRealization(
        taps=taps,
        freq_dl=freq_dl,
        freq_ul=freq_ul,
        subcarrier_freqs=config.subcarrier_freqs(),
        codebook=cb,
    )


def dump_channel(realization: ChannelRealization, path) -> None:
    """Binary debug dump (npz): taps and per-direction responses."""
    np.savez_compressed(
        path,
        taps=realization.taps,
        freq_dl=realization.freq_dl,
        freq_ul=realization.freq_ul,
        subcarrier_freqs=realization.subcarrier_freqs,
        codebook=realization.codebook.matrix,
    )
