"""Frequency-domain SINR/SE evaluation and the Monte Carlo engine.

Four scenarios are evaluated on shared per-drop randomness:

- sync:     hypothetical perfectly aligned reception, no ICI/ISI;
- asyn:     every chain transmits at the nominal time, links arrive with
            their raw offsets;
- pbta:     each chain's timing advanced by its served UE's offset;
- cellular: small-cell baseline, each UE served by single AAUs with local
            sync precoding, rate taken as the best serving AAU's.

For the asynchronous scenarios, desired / inter-user / ICI / ISI powers are
exact second-order statistics over the i.i.d. data symbols: every beam link
contributes a transfer map (see _kernels) from current/adjacent-symbol
subcarrier symbols to the demodulated reference subcarrier, and the bucket
powers are sums of squared coefficient magnitudes.  For links whose arrival
shift keeps the window cyclic this reduces exactly to the classical
phase-shift/leakage closed forms; beyond that it also covers partial tap
overlap, early arrival (next-symbol pre-echo) and offsets past a whole
symbol, which a waveform-level simulation confirms (see td_oracle).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import association as assoc
from . import precoding
from ._kernels import class_range, link_coeffs
from .asyncmodel import (
    BeamTimingPlan,
    EffectiveOffsets,
    effective_offsets,
    no_advance_plan,
    pbta_plan,
    residual_offset,
)
from .channel import ChannelRealization, generate_channels
from .scenario import (
    ScenarioConfig,
    compute_timing_offsets,
    generate_layout,
    large_scale_fading,
)

SCENARIOS = ("sync", "asyn", "pbta", "cellular")
DIRECTIONS = ("dl", "ul")
ALGORITHMS = ("alg1", "alg2", "random")


@dataclass
class LinkReport:
    """Per-UE power decomposition and rates for one evaluated combination."""

    scenario: str
    precoder: str
    direction: str
    desired: np.ndarray
    inter_user: np.ndarray
    ici: np.ndarray
    isi: np.ndarray
    noise: np.ndarray
    sinr: np.ndarray
    se: np.ndarray


def spectral_efficiency(gamma, num_subcarriers: int, cp_length: int):
    """(M / (M + M_CP)) log2(1 + gamma)."""
    prelog = num_subcarriers / (num_subcarriers + cp_length)
    return prelog * np.log2(1.0 + np.asarray(gamma, dtype=float))


def _sinr(desired, inter_user, ici, isi, noise):
    desired = np.asarray(desired, dtype=float)
    denom = inter_user + ici + isi + noise
    out = np.zeros_like(desired)
    np.divide(desired, denom, out=out, where=denom > 0)
    return np.where(desired > 0, out, 0.0)


def reduced_channels(channels: ChannelRealization, plan: assoc.AssociationPlan,
                     direction: str, rf_chains: int) -> np.ndarray:
    """Selected-beam channel stacked over chains: (M, K, B)."""
    freq = channels.freq_dl if direction == "dl" else channels.freq_ul
    k_ues, l_aaus, m_sub, _ = freq.shape
    out = np.zeros((m_sub, k_ues, l_aaus * rf_chains), dtype=complex)
    chain_beam = plan.chain_beam()
    for l in range(l_aaus):
        for n in range(rf_chains):
            beam = chain_beam[l, n]
            if beam >= 0:
                out[:, :, l * rf_chains + n] = freq[:, l, :, beam].T
    return out


def link_tap_scalars(channels: ChannelRealization, plan: assoc.AssociationPlan,
                     rf_chains: int) -> np.ndarray:
    """Beam-tap sequences per (UE, chain): (K, B, T_D)."""
    k_ues, l_aaus, t_d, _ = channels.taps.shape
    out = np.zeros((k_ues, l_aaus * rf_chains, t_d), dtype=complex)
    chain_beam = plan.chain_beam()
    for l in range(l_aaus):
        for n in range(rf_chains):
            beam = chain_beam[l, n]
            if beam >= 0:
                out[:, l * rf_chains + n, :] = channels.taps[:, l, :, beam]
    return out


def same_subcarrier_factors(eff: EffectiveOffsets, num_subcarriers: int) -> np.ndarray:
    """kappa_{k,l,n,m}^m stacked over chains: (M, K, B).

    Amplitude (M - eps)/M (clamped at zero) with phase e^{-j2 pi m d / M}.
    """
    k_ues = eff.delta_eff.shape[0]
    d = eff.delta_eff.reshape(k_ues, -1)
    eps = np.minimum(eff.epsilon.reshape(k_ues, -1), num_subcarriers)
    m = np.arange(num_subcarriers)
    phase = np.exp(-2j * np.pi * np.einsum("m,kb->mkb", m, d) / num_subcarriers)
    amp = (num_subcarriers - eps) / num_subcarriers
    return phase * amp[None, :, :]


def transfer_maps(taps_kb: np.ndarray, shifts_kb: np.ndarray, m_ref: int,
                  num_subcarriers: int, cp_length: int,
                  conj_taps: bool) -> tuple[np.ndarray, np.ndarray]:
    """Per-link symbol-to-output coefficient maps: (K, C, M, B)."""
    k_ues, b_chains, t_d = taps_kb.shape
    classes = class_range(shifts_kb, t_d, num_subcarriers, cp_length)
    flat = link_coeffs(taps_kb.reshape(-1, t_d),
                       shifts_kb.reshape(-1).astype(np.int64), m_ref,
                       num_subcarriers, cp_length, classes, conj_taps)
    maps = flat.reshape(k_ues, b_chains, len(classes), num_subcarriers)
    return np.transpose(maps, (0, 2, 3, 1)), classes


def scenario_timing(scenario: str, plan: assoc.AssociationPlan, offsets,
                    direction: str) -> BeamTimingPlan:
    if scenario == "pbta":
        return pbta_plan(plan.chain_ue, offsets, direction)
    return no_advance_plan(plan.num_aaus, plan.rf_chains, plan.chain_ue)


def _dl_buckets(maps_k: np.ndarray, classes: np.ndarray, w_cache: np.ndarray,
                k: int, m_ref: int, noise_power: float):
    """Exact symbol-expectation powers for UE k (downlink)."""
    amp = np.einsum("cmb,mjb->cmj", maps_k, w_cache)
    c0 = int(np.flatnonzero(classes == 0)[0])
    power = np.abs(amp) ** 2
    desired = power[c0, m_ref, k]
    inter = power[c0, m_ref].sum() - desired
    ici = power[c0].sum() - power[c0, m_ref].sum()
    isi = power.sum() - power[c0].sum()
    return desired, inter, ici, isi, noise_power


def _ul_buckets(maps: np.ndarray, classes: np.ndarray, v_k: np.ndarray,
                k: int, m_ref: int, p: np.ndarray, noise_power: float):
    """Exact symbol-expectation powers for UE k (uplink).

    maps: (K, C, M, B) source-UE transfer maps; v_k combining vector,
    already supported only on serving chains.
    """
    amp = np.einsum("b,jcmb->jcm", v_k.conj(), maps) * np.sqrt(p)[:, None, None]
    c0 = int(np.flatnonzero(classes == 0)[0])
    power = np.abs(amp) ** 2
    desired = power[k, c0, m_ref]
    inter = power[:, c0, m_ref].sum() - desired
    ici = power[:, c0, :].sum() - power[:, c0, m_ref].sum()
    isi = power.sum() - power[:, c0, :].sum()
    noise = noise_power * np.sum(np.abs(v_k) ** 2)
    return desired, inter, ici, isi, noise


def evaluate_async_scenario(scenario: str, channels: ChannelRealization,
                            plan: assoc.AssociationPlan, offsets,
                            config: ScenarioConfig, families, directions,
                            expected_norms=None) -> dict:
    """LinkReports for asyn/pbta, keyed by (family, direction)."""
    m_sub, m_cp, t_d = config.subcarriers, config.cp_length, config.delay_spread
    m_ref = config.m_ref
    sigma2 = config.noise_power
    k_ues = plan.num_ues
    p = np.full(k_ues, config.ul_power_per_ue)
    rho_k = config.dl_power_per_ue
    taps_kb = link_tap_scalars(channels, plan, plan.rf_chains)

    reports = {}
    for direction in directions:
        delta = offsets.delta_dl if direction == "dl" else offsets.delta_ul
        timing = scenario_timing(scenario, plan, offsets, direction)
        eff = effective_offsets(delta, timing, t_d, m_cp)
        shifts = eff.delta_eff.reshape(k_ues, -1)
        kap = same_subcarrier_factors(eff, m_sub)
        hbar = reduced_channels(channels, plan, direction, plan.rf_chains)
        maps, classes = transfer_maps(taps_kb, shifts, m_ref, m_sub, m_cp,
                                      conj_taps=(direction == "dl"))
        # Delay-phase-used effective channel handed to precoders/combiners.
        g = kap.conj() * hbar if direction == "dl" else kap * hbar
        for family in families:
            ens = None if expected_norms is None else expected_norms.get(
                (scenario, direction, family))
            if direction == "dl":
                w = precoding.precoder_cache(family, g, plan.u, p, sigma2,
                                             plan.rf_chains, rho_k,
                                             expected_norm_sq=ens)
                rows = [_dl_buckets(maps[k], classes, w, k, m_ref, sigma2)
                        for k in range(k_ues)]
            else:
                v = precoding.combiner_cache(family, g, plan.u, p, sigma2,
                                             plan.rf_chains)
                rows = [_ul_buckets(maps, classes, v[m_ref, k], k, m_ref, p, sigma2)
                        for k in range(k_ues)]
            reports[(family, direction)] = _report(scenario, family, direction,
                                                   rows, config)
    return reports


def evaluate_sync_scenario(channels: ChannelRealization,
                           plan: assoc.AssociationPlan, config: ScenarioConfig,
                           families, directions, expected_norms=None) -> dict:
    """Perfectly synchronized reception: no phase rotation, no ICI/ISI."""
    m_ref = config.m_ref
    sigma2 = config.noise_power
    k_ues = plan.num_ues
    p = np.full(k_ues, config.ul_power_per_ue)
    rho_k = config.dl_power_per_ue

    reports = {}
    for direction in directions:
        hbar = reduced_channels(channels, plan, direction, plan.rf_chains)
        for family in families:
            ens = None if expected_norms is None else expected_norms.get(
                ("sync", direction, family))
            rows = []
            if direction == "dl":
                w = precoding.precoder_cache(family, hbar, plan.u, p, sigma2,
                                             plan.rf_chains, rho_k,
                                             expected_norm_sq=ens)
                amps = hbar[m_ref].conj() @ w[m_ref].T  # (K rx, K tx)
                power = np.abs(amps) ** 2
                for k in range(k_ues):
                    desired = power[k, k]
                    inter = power[k].sum() - desired
                    rows.append((desired, inter, 0.0, 0.0, sigma2))
            else:
                v = precoding.combiner_cache(family, hbar, plan.u, p, sigma2,
                                             plan.rf_chains)
                amps = v[m_ref].conj() @ hbar[m_ref].T * np.sqrt(p)[None, :]
                power = np.abs(amps) ** 2
                for k in range(k_ues):
                    desired = power[k, k]
                    inter = power[k].sum() - desired
                    noise = sigma2 * np.sum(np.abs(v[m_ref, k]) ** 2)
                    rows.append((desired, inter, 0.0, 0.0, noise))
            reports[(family, direction)] = _report("sync", family, direction,
                                                   rows, config)
    return reports


_LOCAL_ANALOGUE = {"mr": "lmr", "lmr": "lmr", "pmmse": "lpmmse", "lpmmse": "lpmmse"}


def evaluate_cellular_scenario(channels: ChannelRealization,
                               plan: assoc.AssociationPlan,
                               config: ScenarioConfig, families,
                               directions) -> dict:
    """Small-cell baseline: local sync precoding, best serving AAU wins.

    A UE no AAU associated contributes zero rate.  Centralized families
    fall back to their local analogues since precoding is per-AAU here.
    """
    m_ref = config.m_ref
    sigma2 = config.noise_power
    k_ues, l_aaus = plan.u.shape
    rf = plan.rf_chains
    p = np.full(k_ues, config.ul_power_per_ue)
    rho_k = config.dl_power_per_ue

    reports = {}
    for direction in directions:
        hbar = reduced_channels(channels, plan, direction, rf)
        for family in families:
            local_family = _LOCAL_ANALOGUE[family]
            best = [dict(gamma=0.0, powers=(0.0, 0.0, 0.0, 0.0, sigma2))
                    for _ in range(k_ues)]
            for l in range(l_aaus):
                served = np.flatnonzero(plan.u[:, l])
                if served.size == 0:
                    continue
                sl = slice(l * rf, (l + 1) * rf)
                u_l = np.zeros((k_ues, 1), dtype=np.int8)
                u_l[served] = 1
                g_l = np.zeros((hbar.shape[0], k_ues, rf), dtype=complex)
                g_l[:, :, :] = hbar[:, :, sl]
                if direction == "dl":
                    w = precoding.precoder_cache(local_family, g_l, u_l, p,
                                                 sigma2, rf, rho_k)
                    amps = g_l[m_ref].conj() @ w[m_ref].T
                    power = np.abs(amps) ** 2
                    for k in served:
                        desired = power[k, k]
                        inter = power[k].sum() - desired
                        gamma = _sinr(desired, inter, 0.0, 0.0, sigma2)
                        if gamma > best[k]["gamma"]:
                            best[k] = dict(gamma=float(gamma),
                                           powers=(desired, inter, 0.0, 0.0, sigma2))
                else:
                    v = precoding.combiner_cache(local_family, g_l, u_l, p,
                                                 sigma2, rf)
                    amps = v[m_ref].conj() @ g_l[m_ref].T * np.sqrt(p)[None, :]
                    power = np.abs(amps) ** 2
                    for k in served:
                        desired = power[k, k]
                        inter = power[k].sum() - desired
                        noise = sigma2 * np.sum(np.abs(v[m_ref, k]) ** 2)
                        gamma = _sinr(desired, inter, 0.0, 0.0, noise)
                        if gamma > best[k]["gamma"]:
                            best[k] = dict(gamma=float(gamma),
                                           powers=(desired, inter, 0.0, 0.0, noise))
            rows = [b["powers"] for b in best]
            reports[(family, direction)] = _report("cellular", family, direction,
                                                   rows, config)
    return reports


def _report(scenario, family, direction, rows, config) -> LinkReport:
    desired, inter, ici, isi, noise = (np.array(x, dtype=float)
                                       for x in zip(*rows))
    gamma = _sinr(desired, inter, ici, isi, noise)
    se = spectral_efficiency(gamma, config.subcarriers, config.cp_length)
    return LinkReport(scenario=scenario, precoder=family, direction=direction,
                      desired=desired, inter_user=inter, ici=ici, isi=isi,
                      noise=noise, sinr=gamma, se=se)


def isi_power(report: LinkReport, k: int) -> float:
    """Convenience accessor for the exact ISI term of one UE."""
    return float(report.isi[k])


@dataclass
class DropResult:
    reports: dict                      # (scenario, family, direction) -> LinkReport
    plan: assoc.AssociationPlan
    max_offset: int
    links_beyond_validity: int


def drop_rngs(seed: int, drop_index: int):
    ss = np.random.SeedSequence(entropy=(int(seed), int(drop_index)))
    return [np.random.default_rng(c) for c in ss.spawn(4)]


def build_drop(config: ScenarioConfig, seed: int, drop_index: int):
    """Layout, fading, offsets and channels for one drop (paired across
    scenarios and across sweeps that keep the draw counts unchanged)."""
    r_layout, r_shadow, r_paths, r_assoc = drop_rngs(seed, drop_index)
    layout = generate_layout(config, r_layout)
    fading = large_scale_fading(layout, config, r_shadow)
    offsets = compute_timing_offsets(layout, config, warn=False)
    channels = generate_channels(config, fading, r_paths)
    return layout, fading, offsets, channels, r_assoc


def make_plan(algorithm: str, config: ScenarioConfig, fading, channels,
              offsets, rng) -> assoc.AssociationPlan:
    m_ref = config.m_ref
    beam_power = np.abs(channels.freq_ul[:, :, m_ref, :]) ** 2
    eps = residual_offset(offsets.delta_dl, config.delay_spread, config.cp_length)
    if algorithm == "alg1":
        return assoc.algorithm1(fading.beta_linear, beam_power, eps,
                                config.rf_chains, config.subcarriers)
    if algorithm == "alg2":
        return assoc.algorithm2(fading.beta_linear, beam_power, eps,
                                config.rf_chains, config.subcarriers)
    if algorithm == "random":
        return assoc.random_association(rng, config.num_ues, config.num_aaus,
                                        config.antennas_per_aau, config.rf_chains)
    raise ValueError(f"unknown algorithm {algorithm!r}")


def run_drop(config: ScenarioConfig, drop_index: int, seed: int,
             scenarios=SCENARIOS, families=("pmmse",), directions=("dl",),
             algorithm: str = "alg1",
             power_normalization: str = "instantaneous",
             norm_warmup: int = 16) -> DropResult:
    """Evaluate one drop under every requested combination."""
    layout, fading, offsets, channels, r_assoc = build_drop(config, seed, drop_index)
    plan = make_plan(algorithm, config, fading, channels, offsets, r_assoc)

    expected_norms = None
    if power_normalization == "statistical":
        expected_norms = _estimate_norms(config, fading, offsets, plan,
                                         scenarios, families, directions,
                                         seed, drop_index, norm_warmup)

    reports = {}
    for scenario in scenarios:
        if scenario == "sync":
            out = evaluate_sync_scenario(channels, plan, config, families,
                                         directions, expected_norms)
        elif scenario in ("asyn", "pbta"):
            out = evaluate_async_scenario(scenario, channels, plan, offsets,
                                          config, families, directions,
                                          expected_norms)
        elif scenario == "cellular":
            out = evaluate_cellular_scenario(channels, plan, config, families,
                                             directions)
        else:
            raise ValueError(f"unknown scenario {scenario!r}")
        for (family, direction), rep in out.items():
            reports[(scenario, family, direction)] = rep

    limit = config.subcarriers - (config.delay_spread - 1)
    return DropResult(
        reports=reports,
        plan=plan,
        max_offset=int(offsets.delta_dl.max()),
        links_beyond_validity=int(np.count_nonzero(offsets.delta_dl >= limit)),
    )


def _estimate_norms(config, fading, offsets, plan, scenarios, families,
                    directions, seed, drop_index, warmup):
    """Ensemble-average ||w_bar||^2 for the statistical normalization mode."""
    sums = {}
    t_d, m_cp, m_sub = config.delay_spread, config.cp_length, config.subcarriers
    p = np.full(plan.num_ues, config.ul_power_per_ue)
    sigma2 = config.noise_power
    ss = np.random.SeedSequence(entropy=(int(seed), int(drop_index), 0xA5))
    rngs = ss.spawn(warmup)
    for w_i in range(warmup):
        channels = generate_channels(config, fading, np.random.default_rng(rngs[w_i]))
        for scenario in scenarios:
            if scenario == "cellular":
                continue
            for direction in directions:
                delta = offsets.delta_dl if direction == "dl" else offsets.delta_ul
                if scenario == "sync":
                    kap = None
                else:
                    timing = scenario_timing(scenario, plan, offsets, direction)
                    eff = effective_offsets(delta, timing, t_d, m_cp)
                    kap = same_subcarrier_factors(eff, m_sub)
                hbar = reduced_channels(channels, plan, direction, plan.rf_chains)
                if kap is None:
                    g = hbar
                elif direction == "dl":
                    g = kap.conj() * hbar
                else:
                    g = kap * hbar
                for family in families:
                    raw = precoding.directions(family, g, plan.u, p, sigma2,
                                               plan.rf_chains)
                    key = (scenario, direction, family)
                    if precoding.is_local(family):
                        blocks = raw.reshape(m_sub, plan.num_ues, -1, plan.rf_chains)
                        val = np.sum(np.abs(blocks) ** 2, axis=3)
                    else:
                        val = np.sum(np.abs(raw) ** 2, axis=2)
                    sums[key] = sums.get(key, 0.0) + val
    return {k: v / warmup for k, v in sums.items()}


# ---------------------------------------------------------------------------
# Monte Carlo aggregation


@dataclass
class SweepResult:
    rows: list = field(default_factory=list)
    sweep_param: str | None = None
    sweep_values: tuple = ()
    meta: dict = field(default_factory=dict)

    def se_samples(self, **filters) -> np.ndarray:
        vals = [r["se"] for r in self.rows
                if all(r[k] == v for k, v in filters.items())]
        return np.asarray(vals, dtype=float)

    def sum_se_per_drop(self, **filters) -> dict:
        acc = {}
        for r in self.rows:
            if all(r[k] == v for k, v in filters.items()):
                key = (r["sweep_value"], r["drop"])
                acc[key] = acc.get(key, 0.0) + r["se"]
        return acc

    def summary(self) -> dict:
        groups = {}
        for r in self.rows:
            key = (r["scenario"], r["precoder"], r["direction"], r["sweep_value"])
            groups.setdefault(key, []).append(r["se"])
        out = []
        for (scenario, precoder, direction, sweep_value), vals in sorted(groups.items()):
            arr = np.asarray(vals)
            out.append({
                "scenario": scenario, "precoder": precoder,
                "direction": direction, "sweep_value": sweep_value,
                "count": int(arr.size),
                "mean_se": float(arr.mean()),
                "median_se": float(np.median(arr)),
                "p10_se": float(np.percentile(arr, 10.0)),
                "mean_sum_se": float(arr.mean() * self.meta.get("num_ues", 1)),
            })
        return {"schema_version": 1, "groups": out, "meta": self.meta}


def _drop_task(args):
    (config, drop_index, seed, scenarios, families, directions, algorithm,
     sweep_param, sweep_value, power_normalization) = args
    result = run_drop(config, drop_index, seed, scenarios, families,
                      directions, algorithm, power_normalization)
    rows = []
    for (scenario, family, direction), rep in sorted(result.reports.items()):
        for k in range(rep.se.size):
            gamma = rep.sinr[k]
            rows.append({
                "scenario": scenario,
                "precoder": family,
                "direction": direction,
                "sweep_param": sweep_param or "none",
                "sweep_value": sweep_value if sweep_value is not None else 0,
                "drop": drop_index,
                "ue": k,
                "sinr_db": 10.0 * np.log10(gamma) if gamma > 0 else float("-inf"),
                "se": float(rep.se[k]),
            })
    return (sweep_value, drop_index, rows, result.max_offset,
            result.links_beyond_validity)


def monte_carlo(config: ScenarioConfig, drops: int, scenarios=SCENARIOS,
                families=("pmmse",), directions=("dl",), algorithm="alg1",
                sweep_param: str | None = None, sweep_values=None,
                seed: int = 0, parallelism: int = 1,
                power_normalization: str = "instantaneous") -> SweepResult:
    """Pooled per-UE SE samples over drops, optionally sweeping one config
    field.  Drop randomness is independent of the sweep value, giving paired
    comparisons along the sweep."""
    values = list(sweep_values) if sweep_param else [None]
    tasks = []
    for value in values:
        cfg = config.with_overrides(**{sweep_param: value}) if sweep_param else config
        for d in range(drops):
            tasks.append((cfg, d, seed, tuple(scenarios), tuple(families),
                          tuple(directions), algorithm, sweep_param, value,
                          power_normalization))

    if parallelism > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(_drop_task, tasks, chunksize=1))
    else:
        results = [_drop_task(t) for t in tasks]

    order = {v: i for i, v in enumerate(values)}
    results.sort(key=lambda r: (order[r[0]], r[1]))
    rows = [row for r in results for row in r[2]]
    max_offset = max((r[3] for r in results), default=0)
    beyond = sum(r[4] for r in results)
    meta = {
        "drops": drops,
        "seed": seed,
        "scenarios": list(scenarios),
        "families": list(families),
        "directions": list(directions),
        "algorithm": algorithm,
        "num_ues": config.num_ues,
        "max_offset_samples": max_offset,
        "links_beyond_validity": beyond,
    }
    return SweepResult(rows=rows, sweep_param=sweep_param,
                       sweep_values=tuple(values) if sweep_param else (),
                       meta=meta)
