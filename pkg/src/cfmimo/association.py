"""Joint beam selection and UE association.

Each AAU owns N orthogonal beams but only N_RF chains, and no beam may
serve two UEs (beam conflict control).  Two greedy strategies are provided:
one driven by beam-domain channel magnitudes (refined, reassociates on CSI
changes) and one driven by large-scale fading (cheaper, association stays
put).  Both weight their metrics by the fraction of the receive window that
survives the link's asynchronous offset, so badly delayed links are
deprioritized.  A uniformly random feasible baseline and an exhaustive
search oracle for tiny instances complete the set.

Beam indices in plans are 1-based; 0 marks an unserved (UE, AAU) pair.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np


class InfeasibleConfig(ValueError):
    pass


class SearchSpaceTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class AssociationPlan:
    """Association indicators, beam assignments and the chain -> UE map.

    u: (K, L) 0/1; b: (K, L) beam index in 1..N or 0; chain_ue: (L, N_RF)
    UE index per RF chain, -1 for unused chains.  Chains are ordered by
    ascending UE index.
    """

    u: np.ndarray
    b: np.ndarray
    chain_ue: np.ndarray
    num_beams: int

    @property
    def num_ues(self) -> int:
        return self.u.shape[0]

    @property
    def num_aaus(self) -> int:
        return self.u.shape[1]

    @property
    def rf_chains(self) -> int:
        return self.chain_ue.shape[1]

    def selected_beams(self, l: int) -> list[int]:
        """Gamma_l: 1-based beams of AAU l in chain order."""
        return [int(self.b[k, l]) for k in self.chain_ue[l] if k >= 0]

    def chain_beam(self) -> np.ndarray:
        """(L, N_RF) 0-based beam per chain, -1 for unused."""
        out = np.full(self.chain_ue.shape, -1, dtype=np.int64)
        for l in range(self.num_aaus):
            for n, k in enumerate(self.chain_ue[l]):
                if k >= 0:
                    out[l, n] = self.b[k, l] - 1
        return out

    def served_ues(self, l: int) -> list[int]:
        return [int(k) for k in self.chain_ue[l] if k >= 0]

    def to_json_dict(self) -> dict:
        return {
            "u": self.u.astype(int).tolist(),
            "b": self.b.astype(int).tolist(),
            "chain_ue": self.chain_ue.astype(int).tolist(),
            "num_beams": int(self.num_beams),
        }

    @staticmethod
    def from_json_dict(d: dict) -> "AssociationPlan":
        return AssociationPlan(
            u=np.asarray(d["u"], dtype=np.int8),
            b=np.asarray(d["b"], dtype=np.int64),
            chain_ue=np.asarray(d["chain_ue"], dtype=np.int64),
            num_beams=int(d["num_beams"]),
        )


def _check_dims(beam_power: np.ndarray, rf_chains: int):
    k_ues, _, n_beams = beam_power.shape
    if k_ues < 1:
        raise InfeasibleConfig("need at least one UE")
    if n_beams < k_ues:
        raise InfeasibleConfig(
            f"beam assignment needs num_beams >= num_ues, got {n_beams} < {k_ues}"
        )
    if rf_chains < 1:
        raise InfeasibleConfig("need at least one RF chain")


def _offset_weight(beta: np.ndarray, eps: np.ndarray, num_subcarriers: int) -> np.ndarray:
    """Ascending-priority metric (M / (M - eps)) * beta; inf when fully erased."""
    surviving = np.maximum(num_subcarriers - eps, 0)
    with np.errstate(divide="ignore"):
        gain = np.where(surviving > 0, num_subcarriers / np.maximum(surviving, 1), np.inf)
    return gain * beta


def _discount(eps: np.ndarray, num_subcarriers: int) -> np.ndarray:
    """Surviving-window fraction (M - eps)/M, clamped at 0."""
    return np.maximum(num_subcarriers - eps, 0) / num_subcarriers


def _assemble(u: np.ndarray, b: np.ndarray, rf_chains: int, num_beams: int) -> AssociationPlan:
    k_ues, l_aaus = u.shape
    chain_ue = np.full((l_aaus, rf_chains), -1, dtype=np.int64)
    b_out = np.where(u > 0, b, 0)
    for l in range(l_aaus):
        served = np.flatnonzero(u[:, l])
        chain_ue[l, : len(served)] = served
    return AssociationPlan(u=u.astype(np.int8), b=b_out.astype(np.int64),
                           chain_ue=chain_ue, num_beams=num_beams)


def algorithm1(beta: np.ndarray, beam_power: np.ndarray, eps: np.ndarray,
               rf_chains: int, num_subcarriers: int) -> AssociationPlan:
    """Beam-magnitude-driven selection (two stages per AAU).

    Stage 1 walks UEs in ascending offset-weighted attenuation and gives
    each its strongest still-free beam.  Stage 2 keeps the N_RF UEs whose
    chosen beams have the largest discounted magnitude.

    beta: (K, L) linear attenuation; beam_power: (K, L, N) |beam channel|^2
    at the reference subcarrier; eps: (K, L) residual offsets without PBTA.
    """
    _check_dims(beam_power, rf_chains)
    k_ues, l_aaus, n_beams = beam_power.shape
    weight = _offset_weight(beta, eps, num_subcarriers)
    disc = _discount(eps, num_subcarriers)

    u = np.zeros((k_ues, l_aaus), dtype=np.int8)
    b = np.zeros((k_ues, l_aaus), dtype=np.int64)
    for l in range(l_aaus):
        free = np.ones(n_beams, dtype=bool)
        order = np.argsort(weight[:, l], kind="stable")
        for k in order:
            masked = np.where(free, beam_power[k, l], -np.inf)
            beam = int(np.argmax(masked))
            b[k, l] = beam + 1
            free[beam] = False
        metric = disc[:, l] ** 2 * beam_power[np.arange(k_ues), l, b[:, l] - 1]
        keep = np.argsort(-metric, kind="stable")[: min(rf_chains, k_ues)]
        u[keep, l] = 1
    return _assemble(u, b, rf_chains, n_beams)


def algorithm2(beta: np.ndarray, beam_power: np.ndarray, eps: np.ndarray,
               rf_chains: int, num_subcarriers: int) -> AssociationPlan:
    """Large-scale-fading-driven selection.

    Associates the N_RF least-attenuated UEs first, then assigns beams by
    maximum magnitude in the same ascending order subject to BCC.
    """
    _check_dims(beam_power, rf_chains)
    k_ues, l_aaus, n_beams = beam_power.shape
    weight = _offset_weight(beta, eps, num_subcarriers)

    u = np.zeros((k_ues, l_aaus), dtype=np.int8)
    b = np.zeros((k_ues, l_aaus), dtype=np.int64)
    for l in range(l_aaus):
        order = np.argsort(weight[:, l], kind="stable")[: min(rf_chains, k_ues)]
        free = np.ones(n_beams, dtype=bool)
        for k in order:
            masked = np.where(free, beam_power[k, l], -np.inf)
            beam = int(np.argmax(masked))
            u[k, l] = 1
            b[k, l] = beam + 1
            free[beam] = False
    return _assemble(u, b, rf_chains, n_beams)


def random_association(rng, num_ues: int, num_aaus: int, num_beams: int,
                       rf_chains: int) -> AssociationPlan:
    """Uniformly random feasible plan: random UE subset and distinct beams."""
    rng = np.random.default_rng(rng)
    u = np.zeros((num_ues, num_aaus), dtype=np.int8)
    b = np.zeros((num_ues, num_aaus), dtype=np.int64)
    n_assoc = min(rf_chains, num_ues)
    for l in range(num_aaus):
        ues = rng.choice(num_ues, size=n_assoc, replace=False)
        beams = rng.choice(num_beams, size=n_assoc, replace=False)
        u[ues, l] = 1
        b[ues, l] = beams + 1
    return _assemble(u, b, rf_chains, num_beams)


def small_cell_association(beta, beam_power, eps, rf_chains, num_subcarriers,
                           inner=algorithm1) -> AssociationPlan:
    """Association for the single-serving-AAU baseline.

    Both greedy strategies already operate per AAU on local quantities, so
    the small-cell plan is the inner algorithm's plan; the exclusivity shows
    up in evaluation, where each UE's rate is the best single-AAU rate.
    """
    return inner(beta, beam_power, eps, rf_chains, num_subcarriers)


def enumerate_plans(num_ues: int, num_aaus: int, num_beams: int, rf_chains: int):
    """All feasible plans with exactly min(N_RF, K) UEs per AAU, in
    lexicographic order."""
    n_assoc = min(rf_chains, num_ues)
    per_aau = []
    for ues in itertools.combinations(range(num_ues), n_assoc):
        for beams in itertools.permutations(range(num_beams), n_assoc):
            per_aau.append((ues, beams))
    for combo in itertools.product(per_aau, repeat=num_aaus):
        u = np.zeros((num_ues, num_aaus), dtype=np.int8)
        b = np.zeros((num_ues, num_aaus), dtype=np.int64)
        for l, (ues, beams) in enumerate(combo):
            for k, beam in zip(ues, beams):
                u[k, l] = 1
                b[k, l] = beam + 1
        yield _assemble(u, b, rf_chains, num_beams)


def search_space_size(num_ues: int, num_aaus: int, num_beams: int,
                      rf_chains: int) -> int:
    n_assoc = min(rf_chains, num_ues)
    per_aau = len(list(itertools.combinations(range(num_ues), n_assoc))) * int(
        np.prod([num_beams - i for i in range(n_assoc)]))
    return per_aau ** num_aaus


def brute_force_best(num_ues: int, num_aaus: int, num_beams: int,
                     rf_chains: int, evaluator, limit: int = 10 ** 6) -> AssociationPlan:
    """Exhaustive argmax of evaluator(plan) over all feasible plans.

    Ties keep the lexicographically first plan.  Only for tiny instances.
    """
    size = search_space_size(num_ues, num_aaus, num_beams, rf_chains)
    if size > limit:
        raise SearchSpaceTooLarge(f"{size} plans exceed the {limit} cap")
    best, best_score = None, -np.inf
    for plan in enumerate_plans(num_ues, num_aaus, num_beams, rf_chains):
        score = evaluator(plan)
        if score > best_score:
            best, best_score = plan, score
    return best


def validate_plan(plan: AssociationPlan, rf_chains: int) -> list[str]:
    """Empty list iff the plan satisfies BCC, RF-chain and consistency
    constraints; violations are returned as readable strings."""
    violations = []
    k_ues, l_aaus = plan.u.shape
    for l in range(l_aaus):
        served = np.flatnonzero(plan.u[:, l])
        beams = plan.b[served, l]
        if np.any(beams < 1) or np.any(beams > plan.num_beams):
            violations.append(f"AAU {l}: beam index out of range")
        seen = {}
        for k, beam in zip(served, beams):
            if beam in seen:
                violations.append(
                    f"BCC violation at AAU {l}: beam {beam} shared by UEs "
                    f"{seen[beam]} and {k}")
            seen[beam] = k
        if len(served) > rf_chains:
            violations.append(
                f"AAU {l}: {len(served)} associated UEs exceed {rf_chains} RF chains")
        gamma = plan.selected_beams(l)
        if len(set(gamma)) != len(gamma):
            violations.append(f"AAU {l}: duplicate beams in selection set")
        if len(gamma) > rf_chains:
            violations.append(f"AAU {l}: selected beams exceed RF chains")
    mismatch = (plan.u > 0) != (plan.b > 0)
    if np.any(mismatch):
        violations.append("association indicator and beam assignment disagree")
    return violations
