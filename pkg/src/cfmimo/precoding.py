"""Delay-phase-used precoders and combiners.

All four families work on the reduced beam-domain channel stacked over
(AAU, chain), pre-rotated by the same-subcarrier asynchronous factors
("effective" channel g_k = Theta_k h_k).  Centralized families see the full
stack restricted to each UE's serving AAUs; local families see one AAU's
N_RF chains.  Downlink precoders are power-normalized; uplink combiners are
the same directions left unnormalized.

Shapes: B = L * N_RF stacked chains; effective channels are (K, B) per
subcarrier or (M, K, B) for a full cache.
"""

from __future__ import annotations

import numpy as np


class SingularSystem(np.linalg.LinAlgError):
    """The D_k-restricted MMSE system is numerically singular."""


class ZeroDirection(ValueError):
    """A served UE produced an identically zero precoding direction."""


def serving_mask(u: np.ndarray, rf_chains: int) -> np.ndarray:
    """(K, B) bool: D_k's diagonal, chains of each UE's serving AAUs."""
    return np.repeat(u.astype(bool), rf_chains, axis=1)


def mr_direction(g_k: np.ndarray, mask_k: np.ndarray) -> np.ndarray:
    """Matched filter on the serving chains: D_k (Theta h)_k."""
    return np.where(mask_k, g_k, 0.0)


def pmmse_direction(g: np.ndarray, k: int, mask_k: np.ndarray, p: np.ndarray,
                    sigma2: float) -> np.ndarray:
    """Partial MMSE direction for UE k at one subcarrier.

    Solves (sum_i p_i D_k g_i g_i^H D_k + sigma^2 D_k)^+ D_k g_k on the
    serving-chain subspace.
    """
    idx = np.flatnonzero(mask_k)
    out = np.zeros_like(g[k])
    if idx.size == 0:
        return out
    g_r = g[:, idx]
    a = np.einsum("i,ir,is->rs", p, g_r, g_r.conj())
    a[np.diag_indices_from(a)] += sigma2
    try:
        sol = np.linalg.solve(a, g_r[k])
    except np.linalg.LinAlgError as err:
        raise SingularSystem(str(err)) from err
    out[idx] = p[k] * sol
    return out


def lmr_direction(g_kl: np.ndarray) -> np.ndarray:
    """Local matched filter on one AAU's chains."""
    return g_kl.copy()


def lpmmse_direction(g_l: np.ndarray, k_local: int, p_local: np.ndarray,
                     sigma2: float) -> np.ndarray:
    """Local partial MMSE over one AAU's served UEs.

    g_l: (K_served, N_RF) effective local channels; always invertible
    thanks to the sigma^2 ridge.
    """
    a = np.einsum("i,ir,is->rs", p_local, g_l, g_l.conj())
    a[np.diag_indices_from(a)] += sigma2
    return p_local[k_local] * np.linalg.solve(a, g_l[k_local])


def centralized_directions(family: str, g: np.ndarray, mask: np.ndarray,
                           p: np.ndarray, sigma2: float) -> np.ndarray:
    """(M, K, B) unnormalized centralized directions for all subcarriers.

    g: (M, K, B) effective channels, mask: (K, B) serving chains.
    """
    m_sub, k_ues, b = g.shape
    out = np.zeros_like(g)
    if family == "mr":
        out[:] = np.where(mask[None], g, 0.0)
        return out
    if family != "pmmse":
        raise ValueError(f"unknown centralized family {family!r}")
    # One Gram tensor per subcarrier, then a restricted solve per UE.
    gram = np.einsum("i,mir,mis->mrs", p, g, g.conj())
    for k in range(k_ues):
        idx = np.flatnonzero(mask[k])
        if idx.size == 0:
            continue
        a = gram[:, idx[:, None], idx[None, :]].copy()
        a[:, np.arange(idx.size), np.arange(idx.size)] += sigma2
        rhs = g[:, k, idx]
        try:
            sol = np.linalg.solve(a, rhs[..., None])[..., 0]
        except np.linalg.LinAlgError as err:
            raise SingularSystem(str(err)) from err
        out[:, k, idx] = p[k] * sol
    return out


def local_directions(family: str, g: np.ndarray, u: np.ndarray,
                     p: np.ndarray, sigma2: float, rf_chains: int) -> np.ndarray:
    """(M, K, B) unnormalized local directions; zero outside serving blocks."""
    m_sub, k_ues, b = g.shape
    l_aaus = b // rf_chains
    out = np.zeros_like(g)
    for l in range(l_aaus):
        served = np.flatnonzero(u[:, l])
        if served.size == 0:
            continue
        sl = slice(l * rf_chains, (l + 1) * rf_chains)
        g_l = g[:, served, sl]  # (M, S, N_RF)
        if family == "lmr":
            out[:, served, sl] = g_l
            continue
        if family != "lpmmse":
            raise ValueError(f"unknown local family {family!r}")
        p_l = p[served]
        a = np.einsum("i,mir,mis->mrs", p_l, g_l, g_l.conj())
        a[:, np.arange(rf_chains), np.arange(rf_chains)] += sigma2
        sol = np.linalg.solve(a, np.swapaxes(g_l, 1, 2))  # (M, N_RF, S)
        out[:, served, sl] = p_l[None, :, None] * np.swapaxes(sol, 1, 2)
    return out


CENTRALIZED_FAMILIES = ("mr", "pmmse")
LOCAL_FAMILIES = ("lmr", "lpmmse")
ALL_FAMILIES = CENTRALIZED_FAMILIES + LOCAL_FAMILIES


def is_local(family: str) -> bool:
    return family in LOCAL_FAMILIES


def directions(family: str, g: np.ndarray, u: np.ndarray, p: np.ndarray,
               sigma2: float, rf_chains: int) -> np.ndarray:
    if is_local(family):
        return local_directions(family, g, u, p, sigma2, rf_chains)
    return centralized_directions(family, g, serving_mask(u, rf_chains), p, sigma2)


def normalize_downlink(raw: np.ndarray, rho_k: float, u: np.ndarray,
                       rf_chains: int, local: bool,
                       expected_norm_sq: np.ndarray | None = None) -> np.ndarray:
    """Scale directions so each served UE radiates rho_k.

    Centralized: ||w_k[m]||^2 = rho_k over the full stack.  Local: each
    serving AAU contributes rho_k per UE.  By default the instantaneous
    norm is used, making the power constraint exact per realization; pass
    expected_norm_sq (same shape contract as the norms below) to reproduce
    the ensemble-average normalization instead.
    """
    m_sub, k_ues, b = raw.shape
    out = np.zeros_like(raw)
    if not local:
        norm_sq = np.sum(np.abs(raw) ** 2, axis=2)  # (M, K)
        if expected_norm_sq is not None:
            norm_sq = np.broadcast_to(expected_norm_sq, norm_sq.shape)
        served = u.sum(axis=1) > 0
        bad = [k for k in range(k_ues) if served[k] and not np.all(norm_sq[:, k] > 0)]
        if bad:
            raise ZeroDirection(f"served UEs {bad} have zero precoding direction")
        scale = np.where(norm_sq > 0, np.sqrt(rho_k / np.maximum(norm_sq, 1e-300)), 0.0)
        return raw * scale[:, :, None]
    l_aaus = b // rf_chains
    blocks = raw.reshape(m_sub, k_ues, l_aaus, rf_chains)
    norm_sq = np.sum(np.abs(blocks) ** 2, axis=3)  # (M, K, L)
    if expected_norm_sq is not None:
        norm_sq = np.broadcast_to(expected_norm_sq, norm_sq.shape)
    for k in range(k_ues):
        for l in range(l_aaus):
            if u[k, l] and not np.all(norm_sq[:, k, l] > 0):
                raise ZeroDirection(
                    f"served UE {k} has zero direction at AAU {l}")
    scale = np.where(norm_sq > 0, np.sqrt(rho_k / np.maximum(norm_sq, 1e-300)), 0.0)
    return (blocks * scale[:, :, :, None]).reshape(m_sub, k_ues, b)


def precoder_cache(family: str, g: np.ndarray, u: np.ndarray, p: np.ndarray,
                   sigma2: float, rf_chains: int, rho_k: float,
                   expected_norm_sq: np.ndarray | None = None) -> np.ndarray:
    """Normalized downlink precoders for all (subcarrier, UE): (M, K, B)."""
    raw = directions(family, g, u, p, sigma2, rf_chains)
    return normalize_downlink(raw, rho_k, u, rf_chains, is_local(family),
                              expected_norm_sq)


def combiner_cache(family: str, g: np.ndarray, u: np.ndarray, p: np.ndarray,
                   sigma2: float, rf_chains: int) -> np.ndarray:
    """Uplink combiners: same directions, no power normalization."""
    return directions(family, g, u, p, sigma2, rf_chains)
