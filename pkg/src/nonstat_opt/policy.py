"""Stepsize policies.

Two baselines that know the noise schedule (a single tuned constant step and
a per-iteration step inversely proportional to the noise level), the adaptive
rule driven by an online noise estimate, its paired-sample variance variant
with a smoothness cap, and the p-norm generalisation.

Adaptive policies honour an obliviousness contract: the stepsize for
iteration k is a function of estimator state built from gradients observed
strictly before g_k is drawn. Runners therefore ask for ``stepsize(k)``
first, then query the oracle, then call ``observe``.
"""
from __future__ import annotations

import math
import warnings

import numpy as np

from .estimator import (FirstMomentEMA, PowerEMA, SecondMomentEMA,
                        VarianceEMA, WindowAverage, default_beta)

_SQUARED_KINDS = ("second-moment", "variance", "window")


# -- stepsize formulas ----------------------------------------------------

def constant_stepsize(radius: float, schedule) -> float:
    """Single step R / sqrt(sum_k level(k)^2), tuned to the whole horizon."""
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    energy = float(np.sum(schedule.levels() ** 2))
    if energy <= 0:
        raise ValueError("schedule has zero total noise energy")
    return radius / math.sqrt(energy)


def idealized_stepsize(radius: float, horizon: int, level: float) -> float:
    """Per-iteration step R / (sqrt(T) * level)."""
    if level <= 0:
        raise ValueError(f"idealized stepsize needs a positive level, got {level}")
    return radius / (math.sqrt(horizon) * level)


def adaptive_stepsize(c: float, m: float, value: float, kind: str,
                      p: float = 2.0) -> float:
    """Stepsize from an estimator value.

    Squared-quantity estimators give c / (sqrt(value) + m); the first-moment
    estimator gives c / (value + m); the p-norm estimator, whose value holds
    p-th powers, gives c / (value + m^p)^(1/p).
    """
    if c <= 0:
        raise ValueError(f"numerator scale c must be positive, got {c}")
    if m < 0:
        raise ValueError(f"correction constant must be nonnegative, got {m}")
    if value < 0:
        raise ValueError(f"estimator value must be nonnegative, got {value}")
    if kind in _SQUARED_KINDS:
        denom = math.sqrt(value) + m
    elif kind == "first-moment":
        denom = value + m
    elif kind == "pnorm":
        denom = (value + m ** p) ** (1.0 / p)
    else:
        raise ValueError(f"unknown estimator kind: {kind!r}")
    if denom <= 0 or not math.isfinite(denom):
        raise ValueError("degenerate stepsize denominator")
    return c / denom


def adaptive_defaults(radius: float, max_level: float, horizon: int,
                      m_coeff: float = 2.0) -> tuple[float, float, float]:
    """Recommended (c, m, beta) for the adaptive rule on horizon T.

    c = R / sqrt(T), m = m_coeff * M * T^(-1/9) * ln(T)^(1/3),
    beta = 1 - 2 T^(-2/3). The analysis behind these values assumes T large
    enough that 2 T^(-1/9) ln(T)^(1/3) <= 1; smaller horizons only get a
    warning, since small-T behaviour is itself of interest.
    """
    horizon = int(horizon)
    c = radius / math.sqrt(horizon)
    largeness = 2.0 * horizon ** (-1.0 / 9.0) * math.log(horizon) ** (1.0 / 3.0)
    if largeness > 1.0:
        warnings.warn(
            f"horizon T={horizon} below the guarantee regime "
            f"(2 T^(-1/9) ln(T)^(1/3) = {largeness:.3f} > 1); proceeding anyway",
            RuntimeWarning, stacklevel=2)
    m = m_coeff * max_level * horizon ** (-1.0 / 9.0) * math.log(horizon) ** (1.0 / 3.0)
    return c, m, default_beta(horizon)


def first_moment_defaults(radius: float, max_level: float, horizon: int,
                          m_coeff: float = 8.0) -> tuple[float, float, float]:
    """Recommended (c, m, beta) for the first-moment estimator variant.

    c = R / sqrt(T), m = m_coeff * M * T^(-1/6) * ln(T)^(1/2): the tighter
    concentration of plain norms permits a smaller correction constant than
    the squared-norm rule, raising the attainable speedup from T^(1/9) to
    T^(1/6). Assumes T large enough that 8 ln(T) <= T^(1/3).
    """
    horizon = int(horizon)
    c = radius / math.sqrt(horizon)
    if 8.0 * math.log(horizon) > horizon ** (1.0 / 3.0):
        warnings.warn(
            f"horizon T={horizon} below the first-moment guarantee regime "
            f"(8 ln(T) > T^(1/3)); proceeding anyway", RuntimeWarning,
            stacklevel=2)
    m = m_coeff * max_level * horizon ** (-1.0 / 6.0) * math.sqrt(math.log(horizon))
    return c, m, default_beta(horizon)


def variance_m_base(max_level: float, horizon: int, coeff: float = 8.0) -> float:
    """Noise part of the variance-adaptive correction: coeff * M * T^(-1/9) * ln(T)^(1/3)."""
    horizon = int(horizon)
    return coeff * max_level * horizon ** (-1.0 / 9.0) * math.log(horizon) ** (1.0 / 3.0)


def variance_adaptive_correction(c: float, L: float, m_base: float) -> float:
    """m = m_base + 2cL, which caps every stepsize c/(sigma_hat + m) at 1/(2L)."""
    if c <= 0 or L <= 0:
        raise ValueError("c and L must be positive")
    return m_base + 2.0 * c * L


def nonconvex_stepsizes(delta: float, L: float, schedule, kind: str) -> np.ndarray:
    """Baseline stepsizes for smooth nonconvex runs, clipped at 1/(2L).

    kind="constant": eta = sqrt(2 delta / (L sum_k level_k^2)) at every k.
    kind="idealized": eta_k = sqrt(2 delta / (L T)) / level_k.
    Steps above the smoothness cap 1/(2L) are clipped with a warning; the
    guarantees require eta_k <= 1/(2L) and clipping keeps runs valid when the
    noise floor is too low for the raw formula.
    """
    if delta <= 0 or L <= 0:
        raise ValueError("delta and L must be positive")
    levels = schedule.levels()
    T = schedule.horizon
    if kind == "constant":
        energy = float(np.sum(levels ** 2))
        if energy <= 0:
            raise ValueError("schedule has zero total noise energy")
        etas = np.full(T, math.sqrt(2.0 * delta / (L * energy)))
    elif kind == "idealized":
        if np.any(levels <= 0):
            raise ValueError("idealized stepsizes need strictly positive levels")
        etas = math.sqrt(2.0 * delta / (L * T)) / levels
    else:
        raise ValueError(f"unknown nonconvex baseline kind: {kind!r}")
    cap = 1.0 / (2.0 * L)
    if np.any(etas > cap):
        warnings.warn(
            f"{kind} nonconvex stepsizes exceed the smoothness cap 1/(2L)={cap:.4g}; "
            "clipping", RuntimeWarning, stacklevel=2)
        etas = np.minimum(etas, cap)
    return etas


# -- policy objects --------------------------------------------------------

class StepPolicy:
    """Per-run stepsize source. Single consumer; never shared across runs."""

    name: str = "policy"
    uses_pairs: bool = False
    estimator = None

    def init(self, oracle, x1: np.ndarray) -> None:
        """Draw any estimator seed samples. No-op for baselines."""

    def stepsize(self, k: int) -> float:
        raise NotImplementedError

    def observe(self, g: np.ndarray, g2: np.ndarray | None = None) -> None:
        """Feed the gradient(s) realised at the current iteration."""


class FixedStep(StepPolicy):
    def __init__(self, eta: float, name: str = "constant"):
        if not (eta > 0 and math.isfinite(eta)):
            raise ValueError(f"stepsize must be positive and finite, got {eta}")
        self.eta = float(eta)
        self.name = name

    def stepsize(self, k: int) -> float:
        return self.eta


class ScheduledStep(StepPolicy):
    """Stepsize from a per-iteration formula, e.g. the idealized baseline."""

    def __init__(self, eta_fn, name: str = "idealized"):
        self._eta_fn = eta_fn
        self.name = name

    def stepsize(self, k: int) -> float:
        eta = float(self._eta_fn(k))
        if not (eta > 0 and math.isfinite(eta)):
            raise ValueError(f"stepsize at k={k} must be positive and finite, got {eta}")
        return eta


class AdaptiveStep(StepPolicy):
    """eta_k = c / (m_hat_k + m) with m_hat from a single-sample estimator."""

    def __init__(self, c: float, m: float, estimator, name: str = "adaptive"):
        if c <= 0 or m < 0:
            raise ValueError("need c > 0 and m >= 0")
        self.c = float(c)
        self.m = float(m)
        self.estimator = estimator
        self.name = name

    def init(self, oracle, x1: np.ndarray) -> None:
        g = oracle.query(x1, 1)
        self.estimator.initialize(g)

    def stepsize(self, k: int) -> float:
        p = getattr(self.estimator, "p", 2.0)
        return adaptive_stepsize(self.c, self.m, self.estimator.value,
                                 self.estimator.kind, p)

    def observe(self, g: np.ndarray, g2: np.ndarray | None = None) -> None:
        self.estimator.update(g)


class PairedAdaptiveStep(StepPolicy):
    """eta_k = c / (sigma_hat_k + m) fed by independent same-point pairs.

    The correction m must already include the 2cL smoothness term, so every
    emitted step satisfies eta <= c/m <= 1/(2L) by construction.
    """

    uses_pairs = True

    def __init__(self, c: float, m: float, estimator: VarianceEMA,
                 name: str = "variance_adaptive"):
        if c <= 0 or m <= 0:
            raise ValueError("need c > 0 and m > 0")
        self.c = float(c)
        self.m = float(m)
        self.estimator = estimator
        self.name = name

    def init(self, oracle, x1: np.ndarray) -> None:
        g, g2 = oracle.query_pair(x1, 1)
        self.estimator.initialize(g, g2)

    def stepsize(self, k: int) -> float:
        return adaptive_stepsize(self.c, self.m, self.estimator.value,
                                 self.estimator.kind)

    def observe(self, g: np.ndarray, g2: np.ndarray | None = None) -> None:
        self.estimator.update(g, g2)


# -- factories --------------------------------------------------------------

def constant_baseline(radius: float, schedule) -> FixedStep:
    return FixedStep(constant_stepsize(radius, schedule), name="constant")


def idealized_baseline(radius: float, schedule, horizon: int) -> ScheduledStep:
    levels = schedule.levels()
    if np.any(levels <= 0):
        raise ValueError("idealized baseline needs strictly positive levels")
    return ScheduledStep(
        lambda k: idealized_stepsize(radius, horizon, schedule.level(k)),
        name="idealized")


def make_adaptive(radius: float, max_level: float, horizon: int,
                  m_coeff: float | None = None, c: float | None = None,
                  m: float | None = None, beta: float | None = None,
                  estimator_kind: str = "second-moment", p: float = 2.0,
                  window: int | None = None, name: str = "adaptive") -> AdaptiveStep:
    """Adaptive policy with recommended parameters, any of them overridable."""
    if estimator_kind == "first-moment":
        c_def, m_def, beta_def = first_moment_defaults(
            radius, max_level, horizon,
            m_coeff=8.0 if m_coeff is None else m_coeff)
    else:
        c_def, m_def, beta_def = adaptive_defaults(
            radius, max_level, horizon,
            m_coeff=2.0 if m_coeff is None else m_coeff)
    c = c_def if c is None else c
    m = m_def if m is None else m
    beta = beta_def if beta is None else beta
    if estimator_kind == "second-moment":
        est = SecondMomentEMA(beta)
    elif estimator_kind == "first-moment":
        est = FirstMomentEMA(beta)
    elif estimator_kind == "pnorm":
        est = PowerEMA(beta, p)
    elif estimator_kind == "window":
        est = WindowAverage(window if window is not None else max(1, horizon // 10))
    else:
        raise ValueError(f"unknown estimator kind: {estimator_kind!r}")
    return AdaptiveStep(c, m, est, name=name)


def make_variance_adaptive(problem, max_level: float, horizon: int,
                           c: float | None = None, m_coeff: float = 8.0,
                           beta: float | None = None,
                           name: str = "variance_adaptive") -> PairedAdaptiveStep:
    """Variance-adaptive policy; needs the problem's smoothness constant.

    Default c is R / sqrt(T) on convex problems and sqrt(2 delta / (L T)) on
    nonconvex ones; the correction constant always includes the 2cL term.
    """
    if problem.L is None or problem.L <= 0:
        raise ValueError("variance-adaptive policy needs a positive smoothness constant")
    if c is None:
        if problem.convex:
            c = problem.radius / math.sqrt(horizon)
        else:
            c = math.sqrt(2.0 * problem.initial_gap() / (problem.L * horizon))
    m = variance_adaptive_correction(
        c, problem.L, variance_m_base(max_level, horizon, coeff=m_coeff))
    beta = default_beta(horizon) if beta is None else beta
    return PairedAdaptiveStep(c, m, VarianceEMA(beta), name=name)


def nonconvex_constant_baseline(problem, schedule) -> FixedStep:
    etas = nonconvex_stepsizes(problem.initial_gap(), problem.L, schedule, "constant")
    return FixedStep(float(etas[0]), name="constant")


def nonconvex_idealized_baseline(problem, schedule) -> ScheduledStep:
    etas = nonconvex_stepsizes(problem.initial_gap(), problem.L, schedule, "idealized")
    return ScheduledStep(lambda k: float(etas[k - 1]), name="idealized")
