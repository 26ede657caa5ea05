"""Channels, ensembles, and measurements in factored form.

A channel is a tuple of Kraus operators of shape (output_dim, input_dim).
Ensembles and POVMs are stored through factors (rho_j = B_j† B_j,
Pi_k = A_k† A_k) so positivity holds by construction and ascent updates can
move the factors freely, with the constraints restored by renormalization.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import linalg
from .errors import CompletenessViolation, DimensionMismatch, SingularNormalization

COMPLETENESS_TOL = 1e-10
ENSEMBLE_TRACE_TOL = 1e-12
DEFAULT_MAX_DIM = 30


def _frozen_copy(m) -> np.ndarray:
    out = np.array(linalg.as_complex_matrix(m))
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """Trace-preserving map rho -> sum_m K_m rho K_m† with sum_m K_m† K_m = 1."""

    kraus_ops: tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = tuple(_frozen_copy(k) for k in self.kraus_ops)
        if not ops:
            raise DimensionMismatch("a channel needs at least one Kraus operator")
        shape = ops[0].shape
        if any(k.shape != shape for k in ops):
            raise DimensionMismatch("all Kraus operators must share one shape")
        object.__setattr__(self, "kraus_ops", ops)
        defect = self.completeness_defect()
        if defect > COMPLETENESS_TOL:
            raise CompletenessViolation(
                f"sum K† K deviates from the identity by {defect:.3e} (tolerance {COMPLETENESS_TOL:.1e})"
            )

    @property
    def output_dim(self) -> int:
        return self.kraus_ops[0].shape[0]

    @property
    def input_dim(self) -> int:
        return self.kraus_ops[0].shape[1]

    @property
    def num_operators(self) -> int:
        return len(self.kraus_ops)

    def completeness_defect(self) -> float:
        """max |sum_m K_m† K_m - 1| over entries."""
        s = sum(k.conj().T @ k for k in self.kraus_ops)
        return float(np.abs(s - np.eye(self.input_dim)).max())


def validate_channel(ops, max_dim: int | None = DEFAULT_MAX_DIM) -> KrausChannel:
    """Build a channel from raw operator arrays, enforcing the size ceiling."""
    arrays = [linalg.as_complex_matrix(k) for k in ops]
    if not arrays:
        raise DimensionMismatch("a channel needs at least one Kraus operator")
    d, n = arrays[0].shape
    if max_dim is not None and (d > max_dim or n > max_dim):
        raise DimensionMismatch(f"operator shape {(d, n)} exceeds the ceiling of {max_dim}")
    return KrausChannel(tuple(arrays))


def apply_channel(channel: KrausChannel, state) -> np.ndarray:
    """sum_m K_m state K_m†; maps an input_dim state to an output_dim one."""
    rho = linalg.as_complex_matrix(state)
    n = channel.input_dim
    if rho.shape != (n, n):
        raise DimensionMismatch(f"state shape {rho.shape} does not match input dimension {n}")
    return sum(k @ rho @ k.conj().T for k in channel.kraus_ops)


def adjoint_channel_apply(channel: KrausChannel, effect) -> np.ndarray:
    """sum_m K_m† effect K_m; unital, so the identity maps to the identity."""
    pi = linalg.as_complex_matrix(effect)
    d = channel.output_dim
    if pi.shape != (d, d):
        raise DimensionMismatch(f"effect shape {pi.shape} does not match output dimension {d}")
    return sum(k.conj().T @ pi @ k for k in channel.kraus_ops)


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Subnormalized signal states rho_j = B_j† B_j whose traces sum to one."""

    factors: tuple[np.ndarray, ...]

    def __post_init__(self):
        factors = tuple(_frozen_copy(b) for b in self.factors)
        if not factors:
            raise DimensionMismatch("an ensemble needs at least one state")
        n = factors[0].shape[0]
        if any(b.shape != (n, n) for b in factors):
            raise DimensionMismatch("all ensemble factors must be square with one dimension")
        object.__setattr__(self, "factors", factors)
        defect = self.trace_defect()
        if defect > ENSEMBLE_TRACE_TOL:
            raise ValueError(f"ensemble traces sum to 1 {defect:+.3e}")

    @cached_property
    def states(self) -> tuple[np.ndarray, ...]:
        out = []
        for b in self.factors:
            rho = b.conj().T @ b
            rho.setflags(write=False)
            out.append(rho)
        return tuple(out)

    @property
    def dim(self) -> int:
        return self.factors[0].shape[0]

    @property
    def num_states(self) -> int:
        return len(self.factors)

    def total_trace(self) -> float:
        return float(sum(np.vdot(b, b).real for b in self.factors))

    def trace_defect(self) -> float:
        return abs(self.total_trace() - 1.0)


@dataclass(frozen=True, eq=False)
class Povm:
    """Measurement outcomes Pi_k = A_k† A_k decomposing the identity."""

    factors: tuple[np.ndarray, ...]

    def __post_init__(self):
        factors = tuple(_frozen_copy(a) for a in self.factors)
        if not factors:
            raise DimensionMismatch("a POVM needs at least one outcome")
        d = factors[0].shape[0]
        if any(a.shape != (d, d) for a in factors):
            raise DimensionMismatch("all POVM factors must be square with one dimension")
        object.__setattr__(self, "factors", factors)
        defect = self.completeness_defect()
        if defect > COMPLETENESS_TOL:
            raise CompletenessViolation(
                f"sum Pi_k deviates from the identity by {defect:.3e} (tolerance {COMPLETENESS_TOL:.1e})"
            )

    @cached_property
    def outcomes(self) -> tuple[np.ndarray, ...]:
        out = []
        for a in self.factors:
            pi = a.conj().T @ a
            pi.setflags(write=False)
            out.append(pi)
        return tuple(out)

    @property
    def dim(self) -> int:
        return self.factors[0].shape[0]

    @property
    def num_outcomes(self) -> int:
        return len(self.factors)

    def completeness_defect(self) -> float:
        s = sum(a.conj().T @ a for a in self.factors)
        return float(np.abs(s - np.eye(self.dim)).max())


def random_ensemble(num_states: int, dim: int, rng: np.random.Generator) -> Ensemble:
    """Gaussian factors, globally rescaled so the state traces sum to one.

    Draw order is fixed (per state: real block, then imaginary block), so a
    given generator state always produces the same ensemble.
    """
    if num_states < 1:
        raise ValueError("num_states must be at least 1")
    draws = [
        rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        for _ in range(num_states)
    ]
    total = float(sum(np.vdot(b, b).real for b in draws))
    scale = 1.0 / np.sqrt(total)
    return Ensemble(tuple(b * scale for b in draws))


def random_povm(
    num_outcomes: int,
    dim: int,
    rng: np.random.Generator,
    floor: float = linalg.EIGENVALUE_FLOOR,
    max_attempts: int = 10,
) -> Povm:
    """Gaussian factors renormalized by S^{-1/2} with S = sum A_k† A_k.

    Retries with fresh draws if S is singular below the floor (which has
    probability zero for Gaussian draws but guards degenerate generators).
    """
    if num_outcomes < 1:
        raise ValueError("num_outcomes must be at least 1")
    for _ in range(max_attempts):
        draws = [
            rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
            for _ in range(num_outcomes)
        ]
        s = sum(a.conj().T @ a for a in draws)
        w, v = np.linalg.eigh((s + s.conj().T) / 2)
        if w[0] <= floor:
            continue
        inv_sqrt = (v * (1.0 / np.sqrt(w))) @ v.conj().T
        return Povm(tuple(a @ inv_sqrt for a in draws))
    raise SingularNormalization(
        f"normalization matrix stayed singular after {max_attempts} attempts"
    )


# ---------------------------------------------------------------------------
# Built-in channel families (also exposed through the command line).
# ---------------------------------------------------------------------------

def identity_channel(dim: int) -> KrausChannel:
    return KrausChannel((np.eye(dim, dtype=complex),))


def depolarizing_channel(p: float, dim: int = 2) -> KrausChannel:
    """rho -> (1-p) rho + p tr{rho} 1/dim, via discrete Weyl (shift/clock) operators.

    For dim=2 this reproduces the Pauli form with weights 1-3p/4 and p/4.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("depolarizing strength must lie in [0, 1]")
    shift = np.zeros((dim, dim), dtype=complex)
    for j in range(dim):
        shift[(j + 1) % dim, j] = 1.0
    clock = np.diag(np.exp(2j * np.pi * np.arange(dim) / dim))
    ops = []
    for a in range(dim):
        for b in range(dim):
            weight = 1.0 - p + p / dim**2 if a == 0 and b == 0 else p / dim**2
            if weight == 0.0:
                continue
            ops.append(
                np.sqrt(weight) * np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b)
            )
    return KrausChannel(tuple(ops))


def phase_damping_channel(strength: float) -> KrausChannel:
    """Qubit phase damping: off-diagonals shrink by sqrt(1-strength)."""
    if not 0.0 <= strength <= 1.0:
        raise ValueError("phase-damping strength must lie in [0, 1]")
    k0 = np.diag([1.0, np.sqrt(1.0 - strength)]).astype(complex)
    k1 = np.diag([0.0, np.sqrt(strength)]).astype(complex)
    return KrausChannel((k0, k1))


def amplitude_damping_channel(strength: float) -> KrausChannel:
    """Qubit amplitude damping: |1> decays to |0> with the given probability."""
    if not 0.0 <= strength <= 1.0:
        raise ValueError("amplitude-damping strength must lie in [0, 1]")
    k0 = np.array([[1.0, 0.0], [0.0, np.sqrt(1.0 - strength)]], dtype=complex)
    k1 = np.array([[0.0, np.sqrt(strength)], [0.0, 0.0]], dtype=complex)
    return KrausChannel((k0, k1))


def random_channel(
    num_kraus: int,
    dim_in: int,
    dim_out: int,
    rng: np.random.Generator,
    floor: float = linalg.EIGENVALUE_FLOOR,
    max_attempts: int = 10,
) -> KrausChannel:
    """Random trace-preserving channel: Gaussian blocks renormalized by S^{-1/2}."""
    if num_kraus < 1:
        raise ValueError("num_kraus must be at least 1")
    if num_kraus * dim_out < dim_in:
        raise ValueError(
            f"{num_kraus} operators of shape ({dim_out}, {dim_in}) cannot satisfy completeness"
        )
    for _ in range(max_attempts):
        draws = [
            rng.standard_normal((dim_out, dim_in)) + 1j * rng.standard_normal((dim_out, dim_in))
            for _ in range(num_kraus)
        ]
        s = sum(g.conj().T @ g for g in draws)
        w, v = np.linalg.eigh((s + s.conj().T) / 2)
        if w[0] <= floor:
            continue
        inv_sqrt = (v * (1.0 / np.sqrt(w))) @ v.conj().T
        return KrausChannel(tuple(g @ inv_sqrt for g in draws))
    raise SingularNormalization(
        f"normalization matrix stayed singular after {max_attempts} attempts"
    )
