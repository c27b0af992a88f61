"""Network geometry, large-scale fading and asynchronous timing offsets.

One simulation drop consists of a random layout of AAUs and UEs on a square
area with wrap-around (torus) distances, a large-scale attenuation map and
the integer-sample timing offsets that drive the asynchronous reception
model.  Everything here is deterministic given the drop RNG.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, asdict, replace

import numpy as np

SPEED_OF_LIGHT = 3e8  # m/s


class ModelValidityWarning(UserWarning):
    """Raised when inputs leave the regime the interference model covers."""


class ConfigError(ValueError):
    """A ScenarioConfig field violates its constraints."""


@dataclass(frozen=True)
class ScenarioConfig:
    """All system constants for a simulation scenario.

    Defaults reproduce the reference wide-area setup: 30 AAUs with 50
    antennas and 8 RF chains each serving 20 UEs over a 2 km square at
    28 GHz / 100 MHz.  Note those defaults intentionally stress the model:
    offsets can exceed the symbol length and the path delay support exceeds
    the delay-spread window, both of which `validate` flags.  The presets in
    :mod:`cfmimo.cli` use self-consistent reduced values.
    """

    num_aaus: int = 30            # L
    num_ues: int = 20             # K
    antennas_per_aau: int = 50    # N
    rf_chains: int = 8            # N_RF
    subcarriers: int = 128        # M
    cp_length: int = 10           # M_CP, samples
    delay_spread: int = 3         # T_D, samples
    bandwidth: float = 100e6      # B, Hz (also the sampling rate)
    subcarrier_spacing: float = 120e3  # Hz
    carrier_freq: float = 28e9    # f_c, Hz
    area_side: float = 2000.0     # m
    aau_height: float = 10.0      # m above UE plane
    pathloss_exponent: float = 2.0
    shadow_std_db: float = 4.0
    dl_power_per_aau: float = 4.0     # rho_max, W
    ul_power_per_ue: float = 0.1      # p_k, W
    noise_figure_db: float = 9.0
    num_paths: int = 3
    delay_max: float = 200e-9     # tau_max, s
    reference_subcarrier: int | None = None  # defaults to center
    rng_seed: int = 0

    @property
    def sample_duration(self) -> float:
        """T_s = 1/B in seconds."""
        return 1.0 / self.bandwidth

    @property
    def noise_power(self) -> float:
        """Thermal noise power in W: -174 dBm/Hz + 10 log10(B) + NF."""
        dbm = -174.0 + 10.0 * np.log10(self.bandwidth) + self.noise_figure_db
        return 10.0 ** ((dbm - 30.0) / 10.0)

    @property
    def dl_power_per_ue(self) -> float:
        """Equal split of the per-AAU budget over the RF chains."""
        return self.dl_power_per_aau / self.rf_chains

    @property
    def m_ref(self) -> int:
        if self.reference_subcarrier is None:
            return self.subcarriers // 2
        return self.reference_subcarrier

    def subcarrier_freqs(self) -> np.ndarray:
        """Absolute frequency of each subcarrier, centered on the carrier."""
        m = np.arange(self.subcarriers)
        return self.carrier_freq + (self.bandwidth / self.subcarriers) * (
            m - (self.subcarriers - 1) / 2.0
        )

    def to_dict(self) -> dict:
        return asdict(self)

    def with_overrides(self, **kwargs) -> "ScenarioConfig":
        return replace(self, **kwargs)


def validate_config(config: ScenarioConfig) -> list[str]:
    """Check hard invariants, returning a list of warnings for soft ones.

    Hard violations raise ConfigError.  Soft model-validity issues (offsets
    that can exceed the symbol length, path delays that can exceed the
    delay-spread window) are returned as human-readable warnings so callers
    can surface them.
    """
    c = config
    if c.num_aaus < 1 or c.num_ues < 1:
        raise ConfigError("need at least one AAU and one UE")
    if c.rf_chains > c.antennas_per_aau:
        raise ConfigError(
            f"rf_chains ({c.rf_chains}) must not exceed antennas_per_aau ({c.antennas_per_aau})"
        )
    if not (c.rf_chains <= c.num_ues <= c.num_aaus * c.rf_chains):
        raise ConfigError(
            f"need rf_chains <= num_ues <= num_aaus*rf_chains, got "
            f"{c.rf_chains} <= {c.num_ues} <= {c.num_aaus * c.rf_chains}"
        )
    if c.num_ues > c.antennas_per_aau:
        raise ConfigError(
            f"num_ues ({c.num_ues}) must not exceed antennas_per_aau "
            f"({c.antennas_per_aau}); beam assignment needs a distinct beam per UE"
        )
    if c.cp_length >= c.subcarriers:
        raise ConfigError("cp_length must be smaller than subcarriers")
    if c.delay_spread < 1:
        raise ConfigError("delay_spread must be >= 1")
    for name in ("bandwidth", "subcarrier_spacing", "carrier_freq", "area_side",
                 "dl_power_per_aau", "ul_power_per_ue"):
        if getattr(c, name) <= 0:
            raise ConfigError(f"{name} must be strictly positive")
    if c.aau_height <= 0:
        raise ConfigError("aau_height must be strictly positive")
    if c.delay_max < 0 or c.num_paths < 1:
        raise ConfigError("delay_max must be >= 0 and num_paths >= 1")
    if not (0 <= c.m_ref < c.subcarriers):
        raise ConfigError("reference_subcarrier out of range")
    if c.cp_length < 0:
        raise ConfigError("cp_length must be >= 0")

    notes = []
    # Worst-case differential distance on the torus.
    half = c.area_side / 2.0
    max_diff = np.hypot(half, half)
    max_delta = int(np.round(max_diff / (SPEED_OF_LIGHT * c.sample_duration)))
    if max_delta >= c.subcarriers - (c.delay_spread - 1):
        notes.append(
            f"timing offsets can reach {max_delta} samples, beyond the "
            f"single-previous-symbol interference window "
            f"(M - T_D + 1 = {c.subcarriers - c.delay_spread + 1}); "
            "results use the generalized multi-symbol model"
        )
    if c.delay_max > (c.delay_spread - 0.5) * c.sample_duration:
        notes.append(
            f"delay_max {c.delay_max:.3g}s quantizes beyond delay_spread "
            f"T_D={c.delay_spread}; channel generation will reject such draws "
            f"(use delay_max <= {(c.delay_spread - 1) * c.sample_duration:.3g}s)"
        )
    if c.delay_spread - 1 > c.cp_length:
        notes.append("delay spread alone exceeds the CP; even co-located links leak")
    return notes


@dataclass(frozen=True)
class NetworkLayout:
    """AAU/UE positions and 3-D wrap-around distances (K x L, meters)."""

    aau_positions: np.ndarray   # (L, 2)
    ue_positions: np.ndarray    # (K, 2)
    distances: np.ndarray       # (K, L)
    area_side: float


@dataclass(frozen=True)
class LargeScaleMap:
    """Pathloss plus shadow fading, in dB and linear attenuation (K x L)."""

    beta_db: np.ndarray
    beta_linear: np.ndarray


@dataclass(frozen=True)
class TimingOffsets:
    """Integer-sample asynchronous offsets per (UE, AAU), K x L.

    Both directions are referenced to each UE's first-arriving AAU, so every
    row has a zero at the nearest link.
    """

    delta_dl: np.ndarray
    delta_ul: np.ndarray
    propagation_samples: np.ndarray = field(repr=False, default=None)


def wrap_delta(delta: np.ndarray, side: float) -> np.ndarray:
    """Shortest per-axis displacement on a torus of the given side."""
    d = np.abs(delta)
    return np.minimum(d, side - d)


def generate_layout(config: ScenarioConfig, rng) -> NetworkLayout:
    """Drop AAUs and UEs uniformly on the square; wrap-around distances.

    The vertical AAU offset acts as a minimum-distance floor.
    """
    rng = np.random.default_rng(rng)
    aau = rng.uniform(0.0, config.area_side, size=(config.num_aaus, 2))
    ue = rng.uniform(0.0, config.area_side, size=(config.num_ues, 2))
    d = distances_from_positions(aau, ue, config.area_side, config.aau_height)
    return NetworkLayout(aau_positions=aau, ue_positions=ue, distances=d,
                         area_side=config.area_side)


def distances_from_positions(aau: np.ndarray, ue: np.ndarray, side: float,
                             height: float) -> np.ndarray:
    diff = ue[:, None, :] - aau[None, :, :]
    w = wrap_delta(diff, side)
    planar_sq = np.sum(w ** 2, axis=-1)
    return np.sqrt(planar_sq + height ** 2)


def large_scale_fading(layout: NetworkLayout, config: ScenarioConfig,
                       rng) -> LargeScaleMap:
    """Attenuation beta per link: free-space constant + distance law + shadowing.

    beta[dB] = 20 log10(4 pi f_c / c) + 10 theta log10(d) + A, A ~ N(0, sigma^2).
    Larger beta means a weaker link.
    """
    rng = np.random.default_rng(rng)
    const = 20.0 * np.log10(4.0 * np.pi * config.carrier_freq / SPEED_OF_LIGHT)
    shadow = rng.normal(0.0, config.shadow_std_db, size=layout.distances.shape)
    beta_db = const + 10.0 * config.pathloss_exponent * np.log10(layout.distances) + shadow
    return LargeScaleMap(beta_db=beta_db, beta_linear=10.0 ** (beta_db / 10.0))


def compute_timing_offsets(layout: NetworkLayout, config: ScenarioConfig,
                           warn: bool = True) -> TimingOffsets:
    """Integer-sample offsets relative to each UE's first-arriving AAU.

    delta[k, l] = round((t_kl - min_j t_kj) / T_s).  The uplink reuses the
    same per-UE reference: each UE's transmit advance aligns it with its
    nearest AAU, so its signal reaches AAU l late by the same delta.
    """
    t_prop = layout.distances / SPEED_OF_LIGHT
    samples = t_prop / config.sample_duration
    delta = np.round(samples - samples.min(axis=1, keepdims=True)).astype(np.int64)
    if warn:
        limit = config.subcarriers - (config.delay_spread - 1)
        n_bad = int(np.count_nonzero(delta >= limit))
        if n_bad:
            warnings.warn(
                f"{n_bad} link offsets reach {int(delta.max())} samples "
                f">= M - (T_D - 1) = {limit}; single-previous-symbol "
                "interference formulas do not cover them",
                ModelValidityWarning,
                stacklevel=2,
            )
    return TimingOffsets(delta_dl=delta, delta_ul=delta.copy(),
                         propagation_samples=samples)
