"""Joint statistics of a channel/ensemble/POVM triple and the ascent geometry.

The mutual information is computed in bits with the 0 log 0 = 0 convention.
Ascent directions are expressed with respect to the factors (A_k, B_j); the
constraints are restored by renormalization after each trial step, and the
directional derivatives below differentiate exactly that composite map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import Ensemble, KrausChannel, Povm, adjoint_channel_apply, apply_channel
from .errors import DimensionMismatch, InvalidDistribution

LN2 = math.log(2.0)
NEGATIVE_CLAMP = 1e-12
TABLE_SUM_TOL = 1e-10
GRADIENT_SKIP = 1e-15


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Probability table p[j, k] = tr{rho'_j Pi_k} with cached marginals.

    propagated_states holds the channel outputs rho'_j so POVM-side updates
    can be evaluated without reapplying the channel.
    """

    table: np.ndarray
    row_marginals: np.ndarray
    col_marginals: np.ndarray
    propagated_states: tuple[np.ndarray, ...]

    @property
    def num_states(self) -> int:
        return self.table.shape[0]

    @property
    def num_outcomes(self) -> int:
        return self.table.shape[1]


def probability_table(propagated_states, outcomes) -> np.ndarray:
    """Raw table tr{rho'_j Pi_k}; roundoff negatives in [-1e-12, 0) clamp to 0."""
    prop = np.stack(propagated_states)
    out = np.stack(outcomes)
    p = np.einsum("jab,kba->jk", prop, out).real
    low = float(p.min())
    if low < -NEGATIVE_CLAMP:
        raise InvalidDistribution(f"joint probability {low:.3e} is below the clamp window")
    return np.where(p < 0.0, 0.0, p)


def information_value(table: np.ndarray) -> float:
    """Mutual information in bits of a joint probability table."""
    pj = table.sum(axis=1)
    pk = table.sum(axis=0)
    rows, cols = np.nonzero(table > 0.0)
    vals = table[rows, cols]
    terms = vals * (np.log(vals) - np.log(pj[rows]) - np.log(pk[cols]))
    return float(terms.sum() / LN2)


def joint_distribution(
    channel: KrausChannel,
    ensemble: Ensemble,
    povm: Povm,
    propagated: tuple[np.ndarray, ...] | None = None,
) -> JointDistribution:
    """Build the validated joint distribution of (channel, ensemble, povm).

    Pass `propagated` to reuse channel outputs cached from an earlier call
    with the same ensemble.
    """
    if ensemble.dim != channel.input_dim:
        raise DimensionMismatch(
            f"ensemble dimension {ensemble.dim} does not match channel input {channel.input_dim}"
        )
    if povm.dim != channel.output_dim:
        raise DimensionMismatch(
            f"POVM dimension {povm.dim} does not match channel output {channel.output_dim}"
        )
    if propagated is None:
        propagated = tuple(apply_channel(channel, rho) for rho in ensemble.states)
    p = probability_table(propagated, povm.outcomes)
    total = float(p.sum())
    if abs(total - 1.0) > TABLE_SUM_TOL:
        raise InvalidDistribution(f"joint probabilities sum to {total!r}, not 1")
    p.setflags(write=False)
    row = p.sum(axis=1)
    col = p.sum(axis=0)
    row.setflags(write=False)
    col.setflags(write=False)
    return JointDistribution(p, row, col, tuple(propagated))


def mutual_information(dist: JointDistribution) -> float:
    """I = sum_jk p_jk log2( p_jk / (p_j. p_.k) ), zero terms contributing zero."""
    return information_value(dist.table)


def _log_ratio(dist: JointDistribution) -> np.ndarray:
    """ln( p_jk / (p_j. p_.k) ) with entries below the skip threshold set to 0."""
    p = dist.table
    out = np.zeros_like(p)
    rows, cols = np.nonzero(p >= GRADIENT_SKIP)
    out[rows, cols] = (
        np.log(p[rows, cols])
        - np.log(dist.row_marginals[rows])
        - np.log(dist.col_marginals[cols])
    )
    return out


def povm_ascent_direction(
    channel: KrausChannel, ensemble: Ensemble, povm: Povm, dist: JointDistribution
) -> list[np.ndarray]:
    """Gradient-ascent direction G_k = A_k R_k for each POVM factor.

    R_k = (1/ln 2) sum_j rho'_j ln( p_jk / (p_j. p_.k) ), skipping zero-
    probability terms. The direction is positive for the composite map
    "step the factors, then renormalize by S^{-1/2}".
    """
    ratios = _log_ratio(dist)
    prop = np.stack(dist.propagated_states)
    r = np.einsum("jk,jab->kab", ratios, prop) / LN2
    return [a @ r[k] for k, a in enumerate(povm.factors)]


def ensemble_ascent_direction(
    channel: KrausChannel, ensemble: Ensemble, povm: Povm, dist: JointDistribution
) -> list[np.ndarray]:
    """Gradient-ascent direction H_j = B_j D_j for each ensemble factor.

    D_j = (1/ln 2) [ sum_k M†(Pi_k) ln( p_jk / p_.k ) - 1 ln p_j. ], skipping
    zero-probability terms; positive for "step, then renormalize the total
    trace".
    """
    p = dist.table
    back = np.stack([adjoint_channel_apply(channel, pi) for pi in povm.outcomes])
    cond = np.zeros_like(p)
    rows, cols = np.nonzero(p >= GRADIENT_SKIP)
    cond[rows, cols] = np.log(p[rows, cols]) - np.log(dist.col_marginals[cols])
    d = np.einsum("jk,kab->jab", cond, back) / LN2
    eye = np.eye(ensemble.dim)
    directions = []
    for j, b in enumerate(ensemble.factors):
        dj = d[j]
        if dist.row_marginals[j] >= GRADIENT_SKIP:
            dj = dj - eye * (math.log(dist.row_marginals[j]) / LN2)
        directions.append(b @ dj)
    return directions


def povm_directional_derivative(
    povm: Povm, dist: JointDistribution, directions
) -> float:
    """d/de I( renormalized POVM update A_k + e W_k ) at e = 0.

    Uses dI ln 2 = sum_jk ln( p_jk / (p_j. p_.k) ) dp_jk, which holds because
    the renormalized update conserves the total probability.
    """
    factors = povm.factors
    cross = [w.conj().T @ a + a.conj().T @ w for a, w in zip(factors, directions)]
    sdot = sum(cross)
    ratios = _log_ratio(dist)
    prop = np.stack(dist.propagated_states)
    total = 0.0
    for k, (pi, c) in enumerate(zip(povm.outcomes, cross)):
        pidot = c - (sdot @ pi + pi @ sdot) / 2
        total += float(np.einsum("j,jab,ba->", ratios[:, k], prop, pidot).real)
    return total / LN2


def ensemble_directional_derivative(
    channel: KrausChannel, ensemble: Ensemble, povm: Povm, dist: JointDistribution, directions
) -> float:
    """d/de I( trace-renormalized ensemble update B_j + e H_j ) at e = 0."""
    back = np.stack([adjoint_channel_apply(channel, pi) for pi in povm.outcomes])
    ratios = _log_ratio(dist)
    rdots = [
        h.conj().T @ b + b.conj().T @ h for b, h in zip(ensemble.factors, directions)
    ]
    trace_dot = float(sum(np.trace(rd).real for rd in rdots))
    total = 0.0
    for j, (rho, rd) in enumerate(zip(ensemble.states, rdots)):
        constrained = rd - rho * trace_dot
        total += float(np.einsum("k,ab,kba->", ratios[j, :], constrained, back).real)
    return total / LN2
