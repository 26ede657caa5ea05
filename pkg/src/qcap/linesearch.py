"""Bracketing plus golden-section search for the step size along an ascent direction.

Maximization-oriented: the callable is the objective as a function of the
step length, with any constraint renormalization already folded in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import NonFiniteObjective

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0  # interval reduction ratio, about 0.618


@dataclass(frozen=True)
class LineSearchConfig:
    initial_step: float = 1e-3
    growth_factor: float = 2.0
    max_brackets: int = 60
    golden_tolerance: float = 1e-6  # relative on the step interval
    max_step: float = 1e6

    def __post_init__(self):
        if min(self.initial_step, self.golden_tolerance, self.max_step) <= 0:
            raise ValueError("line-search parameters must be positive")
        if self.max_brackets <= 0:
            raise ValueError("max_brackets must be positive")
        if self.growth_factor <= 1.0:
            raise ValueError("growth_factor must exceed 1")


@dataclass(frozen=True)
class Bracket:
    a: float
    b: float
    c: float
    fa: float
    fb: float
    fc: float
    saturated: bool = False


def _probe(f, x: float) -> float:
    value = float(f(x))
    if not math.isfinite(value):
        raise NonFiniteObjective(f"objective returned {value!r} at step {x!r}")
    return value


def bracket_maximum(f, config: LineSearchConfig = LineSearchConfig()) -> Bracket:
    """Walk 0, s, s*g, s*g^2, ... until the objective turns over.

    Returns a triple a < b < c with f(b) >= f(a), f(b) >= f(c) in the
    interior-maximum case. If the objective falls immediately, the triple
    (0, s, s*g) is returned and the maximum is pinned near zero; if it is
    still rising at max_step or after max_brackets probes, the last triple
    is returned with the saturated flag set.
    """
    a, fa = 0.0, _probe(f, 0.0)
    b = config.initial_step
    fb = _probe(f, b)
    c = b * config.growth_factor
    fc = _probe(f, c)
    if fb < fa:
        return Bracket(a, b, c, fa, fb, fc)
    for _ in range(config.max_brackets):
        if fc < fb:
            return Bracket(a, b, c, fa, fb, fc)
        if c >= config.max_step:
            break
        a, fa = b, fb
        b, fb = c, fc
        c = min(c * config.growth_factor, config.max_step)
        fc = _probe(f, c)
    if fc < fb:
        return Bracket(a, b, c, fa, fb, fc)
    return Bracket(a, b, c, fa, fb, fc, saturated=True)


def golden_section_max(
    f, bracket: Bracket, config: LineSearchConfig = LineSearchConfig()
) -> tuple[float, float]:
    """Shrink the bracket at the golden ratio and return the best probed point."""
    shrink = 1.0 - GOLDEN
    x0, x3 = bracket.a, bracket.c
    if (bracket.c - bracket.b) > (bracket.b - bracket.a):
        x1, f1 = bracket.b, bracket.fb
        x2 = bracket.b + shrink * (bracket.c - bracket.b)
        f2 = _probe(f, x2)
    else:
        x2, f2 = bracket.b, bracket.fb
        x1 = bracket.b - shrink * (bracket.b - bracket.a)
        f1 = _probe(f, x1)
    best_x, best_f = max(
        [(bracket.a, bracket.fa), (bracket.b, bracket.fb), (bracket.c, bracket.fc),
         (x1, f1), (x2, f2)],
        key=lambda pair: pair[1],
    )
    while abs(x3 - x0) > config.golden_tolerance * (abs(x0) + abs(x3)) + 1e-12:
        if f2 > f1:
            x0, x1, f1 = x1, x2, f2
            x2 = GOLDEN * x1 + shrink * x3
            f2 = _probe(f, x2)
            if f2 > best_f:
                best_x, best_f = x2, f2
        else:
            x3, x2, f2 = x2, x1, f1
            x1 = GOLDEN * x2 + shrink * x0
            f1 = _probe(f, x1)
            if f1 > best_f:
                best_x, best_f = x1, f1
    return best_x, best_f


def maximize(f, config: LineSearchConfig = LineSearchConfig()) -> tuple[float, float]:
    """Full line search from step 0: bracket, refine, never lose ground.

    The returned value satisfies f(x*) >= f(0); when every probe is worse
    than the start, (0, f(0)) is returned so a caller's monotone-ascent
    invariant holds unconditionally.
    """
    f0 = _probe(f, 0.0)

    def reuse_origin(x: float) -> float:
        return f0 if x == 0.0 else f(x)

    bracket = bracket_maximum(reuse_origin, config)
    x, fx = golden_section_max(reuse_origin, bracket, config)
    if fx > f0:
        return x, fx
    return 0.0, f0
