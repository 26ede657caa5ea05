"""Alternating ascent over POVM and ensemble with SA/CG selection and restarts.

One iteration is a POVM sub-step followed by an ensemble sub-step (the latter
skipped when the ensemble is held fixed). Per iteration a single uniform draw
selects steepest ascent or Polak-Ribiere conjugate gradients for both
sub-steps; the step length along the chosen direction comes from the
golden-section line search on the renormalized objective, so the recorded
mutual information never decreases.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from . import linalg, linesearch
from .channels import Ensemble, KrausChannel, Povm, random_ensemble, random_povm
from .errors import DimensionMismatch, QcapError
from .information import (
    JointDistribution,
    ensemble_ascent_direction,
    information_value,
    joint_distribution,
    mutual_information,
    povm_ascent_direction,
    probability_table,
)

MACHINE_EPSILON = float(np.finfo(np.float64).eps)


class AscentMethod(enum.Enum):
    STEEPEST_ASCENT = "steepest-ascent"
    CONJUGATE_GRADIENT = "conjugate-gradient"


@dataclass(frozen=True)
class OptimizerConfig:
    """Knobs of a single optimization run.

    sa_percent is the percentage chance that an iteration uses plain steepest
    ascent instead of conjugate gradients. The run stops as soon as
    2 (I_cur - I_prev) <= tolerance (I_cur + I_prev) + machine_epsilon.
    """

    sa_percent: float = 50.0
    tolerance: float = 1e-10
    machine_epsilon: float = MACHINE_EPSILON
    max_iterations: int = 10000
    seed: int = 0
    restarts: int = 1
    merge_tolerance: float = 1e-8
    prune_threshold: float = 1e-10
    optimize_ensemble: bool = True
    num_states: int = 2
    num_outcomes: int = 2
    povm_line_search: linesearch.LineSearchConfig = field(
        default_factory=linesearch.LineSearchConfig
    )
    # The ensemble walks in short steps: letting it run to the in-ray optimum
    # makes states with similar statistics collapse onto one vector, a locked
    # configuration that costs log2 of a whole symbol. Short steps keep the
    # joint dynamics close to the gradient flow, which steers around it.
    ensemble_line_search: linesearch.LineSearchConfig = field(
        default_factory=lambda: linesearch.LineSearchConfig(max_step=0.02)
    )

    def __post_init__(self):
        if not 0.0 <= self.sa_percent <= 100.0:
            raise ValueError("sa_percent must lie in [0, 100]")
        if self.tolerance <= 0.0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.num_states < 1 or self.num_outcomes < 1:
            raise ValueError("num_states and num_outcomes must be at least 1")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")


@dataclass(frozen=True)
class IterationRecord:
    index: int
    mutual_information: float
    method_used: AscentMethod | None = None  # None only for the index-0 snapshot


@dataclass(frozen=True, eq=False)
class RunReport:
    config: OptimizerConfig
    channel: KrausChannel
    initial_ensemble: Ensemble
    final_ensemble: Ensemble
    final_povm: Povm
    reduced_povm: Povm
    trace: tuple[IterationRecord, ...]
    final_ai: float
    converged: bool
    channel_count: int = 1


def should_stop(previous: float, current: float, tolerance: float, machine_epsilon: float) -> bool:
    """Stopping rule on two consecutive mutual-information values."""
    return 2.0 * (current - previous) <= tolerance * (current + previous) + machine_epsilon


def flatten_factors(matrices) -> np.ndarray:
    """Real vector with Re/Im interleaved entrywise across the factor list."""
    parts = []
    for m in matrices:
        v = np.empty(2 * m.size)
        v[0::2] = m.real.ravel()
        v[1::2] = m.imag.ravel()
        parts.append(v)
    return np.concatenate(parts)


def unflatten_factors(vector: np.ndarray, like) -> list[np.ndarray]:
    """Inverse of flatten_factors given template matrices for the shapes."""
    out = []
    pos = 0
    for m in like:
        span = 2 * m.size
        v = vector[pos : pos + span]
        pos += span
        out.append((v[0::2] + 1j * v[1::2]).reshape(m.shape))
    if pos != vector.size:
        raise DimensionMismatch("vector length does not match the factor shapes")
    return out


def conjugate_gradient_state_update(
    prev_gradient: np.ndarray, gradient: np.ndarray, prev_direction: np.ndarray
) -> np.ndarray:
    """Polak-Ribiere direction with a non-negativity clamp on beta.

    beta = max(0, <g - g_prev, g> / <g_prev, g_prev>); a vanishing previous
    gradient degrades gracefully to steepest ascent.
    """
    denom = float(np.dot(prev_gradient, prev_gradient))
    if denom == 0.0:
        return gradient.copy()
    beta = max(0.0, float(np.dot(gradient - prev_gradient, gradient)) / denom)
    return gradient + beta * prev_direction


class _CgState:
    """Per-sub-step conjugate-gradient history with automatic restarts."""

    def __init__(self):
        self.prev_gradient: np.ndarray | None = None
        self.prev_direction: np.ndarray | None = None
        self.since_reset = 0

    def steepest(self, gradient: np.ndarray) -> np.ndarray:
        self.prev_gradient = gradient
        self.prev_direction = gradient
        self.since_reset = 0
        return gradient

    def conjugate(self, gradient: np.ndarray) -> np.ndarray:
        restart = (
            self.prev_gradient is None
            or self.prev_gradient.size != gradient.size  # parametrization changed shape
            or self.since_reset >= gradient.size
        )
        if restart:
            return self.steepest(gradient)
        denom = float(np.dot(self.prev_gradient, self.prev_gradient))
        beta = 0.0
        if denom != 0.0:
            beta = max(0.0, float(np.dot(gradient - self.prev_gradient, gradient)) / denom)
        if beta == 0.0:
            return self.steepest(gradient)
        direction = gradient + beta * self.prev_direction
        self.prev_gradient = gradient
        self.prev_direction = direction
        self.since_reset += 1
        return direction


def _povm_step(factors, directions, step: float, floor: float) -> list[np.ndarray]:
    """Trial factors (A_k + step W_k) S^{-1/2}, restoring completeness."""
    trial = [a + step * w for a, w in zip(factors, directions)]
    s = sum(t.conj().T @ t for t in trial)
    inv_sqrt = linalg.inverse_sqrt_psd(s, floor=floor)
    return [t @ inv_sqrt for t in trial]


def _ensemble_step(factors, directions, step: float) -> list[np.ndarray]:
    """Trial factors (B_j + step H_j) rescaled so the traces sum to one."""
    trial = [b + step * h for b, h in zip(factors, directions)]
    total = float(sum(np.vdot(t, t).real for t in trial))
    scale = 1.0 / np.sqrt(total)
    return [t * scale for t in trial]


def _povm_objective(propagated, factors) -> float:
    outcomes = [a.conj().T @ a for a in factors]
    return information_value(probability_table(propagated, outcomes))


def _ensemble_objective(channel, outcomes, factors) -> float:
    propagated = []
    for b in factors:
        rho = b.conj().T @ b
        propagated.append(sum(k @ rho @ k.conj().T for k in channel.kraus_ops))
    return information_value(probability_table(propagated, outcomes))


def optimize(
    channel: KrausChannel,
    config: OptimizerConfig,
    initial: tuple[Ensemble | None, Povm | None] | None = None,
) -> RunReport:
    """Run the alternating ascent and return the full report.

    `initial` may supply the starting ensemble, POVM, or both; missing parts
    are drawn from the seeded generator (ensemble first, then POVM), which is
    also the source of the per-iteration method draws. The whole report is a
    pure function of (channel, config, initial).
    """
    if channel.completeness_defect() > 1e-10:
        raise QcapError("channel lost completeness")
    rng = np.random.default_rng(config.seed)
    initial_ens, initial_povm = initial if initial is not None else (None, None)
    ens = initial_ens if initial_ens is not None else random_ensemble(
        config.num_states, channel.input_dim, rng
    )
    povm = initial_povm if initial_povm is not None else random_povm(
        config.num_outcomes, channel.output_dim, rng
    )
    if ens.dim != channel.input_dim:
        raise DimensionMismatch(
            f"initial ensemble dimension {ens.dim} does not match channel input {channel.input_dim}"
        )
    if povm.dim != channel.output_dim:
        raise DimensionMismatch(
            f"initial POVM dimension {povm.dim} does not match channel output {channel.output_dim}"
        )

    floor = linalg.EIGENVALUE_FLOOR
    dist = joint_distribution(channel, ens, povm)
    records = [IterationRecord(0, mutual_information(dist))]
    initial_ensemble = ens
    converged = False

    degenerate = ens.num_states == 1 or povm.num_outcomes == 1
    if not degenerate:
        cg_povm = _CgState()
        cg_ens = _CgState()
        for index in range(1, config.max_iterations + 1):
            use_sa = rng.random() < config.sa_percent / 100.0
            method = AscentMethod.STEEPEST_ASCENT if use_sa else AscentMethod.CONJUGATE_GRADIENT

            # POVM sub-step: reuse the cached channel outputs for every probe.
            gradient = flatten_factors(povm_ascent_direction(channel, ens, povm, dist))
            vec = cg_povm.steepest(gradient) if use_sa else cg_povm.conjugate(gradient)
            directions = unflatten_factors(vec, povm.factors)
            propagated = dist.propagated_states

            def povm_objective(step: float) -> float:
                return _povm_objective(propagated, _povm_step(povm.factors, directions, step, floor))

            best_step, best_value = linesearch.maximize(povm_objective, ls_config)
            try:
                new_povm = Povm(tuple(_povm_step(povm.factors, directions, best_step, floor)))
                dist = joint_distribution(channel, ens, new_povm, propagated=propagated)
            except QcapError:
                # A floored renormalization can break completeness; stay put.
                new_povm = Povm(tuple(_povm_step(povm.factors, directions, 0.0, floor)))
                dist = joint_distribution(channel, ens, new_povm, propagated=propagated)
            povm = new_povm
            current = mutual_information(dist)

            if config.optimize_ensemble:
                gradient = flatten_factors(ensemble_ascent_direction(channel, ens, povm, dist))
                vec = cg_ens.steepest(gradient) if use_sa else cg_ens.conjugate(gradient)
                directions = unflatten_factors(vec, ens.factors)
                outcomes = povm.outcomes

                def ens_objective(step: float) -> float:
                    return _ensemble_objective(channel, outcomes, _ensemble_step(ens.factors, directions, step))

                best_step, best_value = linesearch.maximize(ens_objective, ls_config)
                try:
                    new_ens = Ensemble(tuple(_ensemble_step(ens.factors, directions, best_step)))
                    dist = joint_distribution(channel, new_ens, povm)
                except QcapError:
                    new_ens = Ensemble(tuple(_ensemble_step(ens.factors, directions, 0.0)))
                    dist = joint_distribution(channel, new_ens, povm)
                ens = new_ens
                current = mutual_information(dist)

            records.append(IterationRecord(index, current, method))
            previous = records[-2].mutual_information
            if should_stop(previous, current, config.tolerance, config.machine_epsilon):
                converged = True
                break
    else:
        converged = True  # a single state or single outcome pins I at zero

    final_ai = records[-1].mutual_information
    reduced = reduce_povm(
        povm, dist, merge_tolerance=config.merge_tolerance, prune_threshold=config.prune_threshold
    )
    return RunReport(
        config=config,
        channel=channel,
        initial_ensemble=initial_ensemble,
        final_ensemble=ens,
        final_povm=povm,
        reduced_povm=reduced,
        trace=tuple(records),
        final_ai=final_ai,
        converged=converged,
    )


def reduce_povm(
    povm: Povm,
    dist: JointDistribution,
    merge_tolerance: float = 1e-8,
    prune_threshold: float = 1e-10,
) -> Povm:
    """Merge statistically equivalent outcomes, then prune vanishing ones.

    Outcomes k1, k2 merge when p_jk1 p_.k2 == p_.k1 p_jk2 for all j within
    merge_tolerance; the pair is replaced by Pi_k1 + Pi_k2 (factor rebuilt as
    the PSD square root) and the scan restarts until no pair qualifies.
    Outcomes with trace below prune_threshold are then dropped and the
    deficit redistributed by one final S^{-1/2} renormalization.
    """
    outcomes = [np.array(pi) for pi in povm.outcomes]
    factors = [np.array(a) for a in povm.factors]
    table = np.array(dist.table)

    merged = True
    while merged:
        merged = False
        cols = table.sum(axis=0)
        count = len(outcomes)
        for k1 in range(count):
            for k2 in range(k1 + 1, count):
                deviation = np.abs(table[:, k1] * cols[k2] - cols[k1] * table[:, k2]).max()
                if deviation <= merge_tolerance:
                    combined = outcomes[k1] + outcomes[k2]
                    outcomes[k1] = combined
                    factors[k1] = linalg.sqrt_psd(combined)
                    table[:, k1] += table[:, k2]
                    del outcomes[k2]
                    del factors[k2]
                    table = np.delete(table, k2, axis=1)
                    merged = True
                    break
            if merged:
                break

    keep = [k for k, pi in enumerate(outcomes) if float(np.trace(pi).real) >= prune_threshold]
    if len(keep) < len(outcomes):
        factors = [factors[k] for k in keep]
        s = sum(a.conj().T @ a for a in factors)
        inv_sqrt = linalg.inverse_sqrt_psd(s)
        factors = [a @ inv_sqrt for a in factors]
    return Povm(tuple(factors))


def multi_restart(
    channel: KrausChannel,
    config: OptimizerConfig,
    initial: tuple[Ensemble | None, Povm | None] | None = None,
) -> RunReport:
    """Best of `config.restarts` runs seeded seed, seed+1, ...

    Ties within 1e-12 keep the earlier (lowest) seed. Per-run errors only
    propagate when every restart fails.
    """
    best: RunReport | None = None
    first_error: QcapError | None = None
    for offset in range(config.restarts):
        run_config = replace(config, seed=config.seed + offset)
        try:
            report = optimize(channel, run_config, initial)
        except QcapError as exc:
            if first_error is None:
                first_error = exc
            continue
        if best is None or report.final_ai > best.final_ai + 1e-12:
            best = report
    if best is None:
        assert first_error is not None
        raise first_error
    return best
