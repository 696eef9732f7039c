"""Model coefficients and the epsilon coupling rule.

The Stokes-side coefficients are stored as base values (``mu1_tilde``,
``gamma1_tilde``, ``lambda1_tilde``) and scaled by the coupling strength
``epsilon``; ``epsilon = 0`` decouples the velocity from the polar field.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

__all__ = [
    "ParameterError",
    "PositivityViolation",
    "CouplingInconsistency",
    "StrictModeKappaNonzero",
    "BaseCoefficients",
    "ModelParams",
    "apply_coupling",
    "validate",
    "linear_params",
    "neg_part",
    "pos_part",
]


class ParameterError(ValueError):
    """Base class for invalid model coefficients."""


class PositivityViolation(ParameterError):
    def __init__(self, name: str, value: float):
        super().__init__(f"{name} must be > 0, got {value!r}")
        self.name = name


class CouplingInconsistency(ParameterError):
    pass


class StrictModeKappaNonzero(ParameterError):
    pass


def neg_part(a: float) -> float:
    """max(-a, 0)."""
    return max(-a, 0.0)


def pos_part(a: float) -> float:
    """max(a, 0), equal to ``a + neg_part(a)``."""
    return max(a, 0.0)


@dataclass(frozen=True)
class BaseCoefficients:
    mu1_tilde: float = 1.0
    gamma1_tilde: float = 0.0
    lambda1_tilde: float = 1.0
    mu2: float = 1.0
    gamma2: float = 0.0
    lambda2: float = 1.0
    alpha: float = 1.0
    beta: float = 0.0
    kappa: float = 0.0

    POSITIVE = ("mu1_tilde", "lambda1_tilde", "mu2", "lambda2", "alpha")
    # may vanish in the linear test model built by linear_params
    RELAXABLE = ("lambda2", "alpha")

    def check(self, linear: bool = False) -> None:
        for name, value in self.__dict__.items():
            if not math.isfinite(value):
                raise ParameterError(f"{name} is not finite: {value!r}")
        for name in self.POSITIVE:
            value = getattr(self, name)
            if linear and name in self.RELAXABLE and value == 0.0:
                continue
            if not value > 0:
                raise PositivityViolation(name, value)


@dataclass(frozen=True)
class ModelParams:
    """Full coefficient set of the coupled system.

    Construct through :func:`apply_coupling`; the scaled coefficients
    ``mu1``, ``gamma1``, ``lambda1`` are then exact products with epsilon.
    """

    base: BaseCoefficients
    epsilon: float
    mu1: float
    gamma1: float
    lambda1: float
    strict_analysis_mode: bool = False
    linear: bool = False  # lambda2 = alpha = 0 allowed, see linear_params

    # flat accessors for the p-equation coefficients
    mu2 = property(lambda self: self.base.mu2)
    gamma2 = property(lambda self: self.base.gamma2)
    lambda2 = property(lambda self: self.base.lambda2)
    alpha = property(lambda self: self.base.alpha)
    beta = property(lambda self: self.base.beta)
    kappa = property(lambda self: self.base.kappa)

    @property
    def coupled(self) -> bool:
        return self.mu1 != 0.0 or self.gamma1 != 0.0 or self.lambda1 != 0.0

    def with_epsilon(self, epsilon: float) -> "ModelParams":
        return apply_coupling(self.base, epsilon, strict=self.strict_analysis_mode,
                              linear=self.linear)

    def with_base(self, **changes) -> "ModelParams":
        return apply_coupling(
            replace(self.base, **changes), self.epsilon, strict=self.strict_analysis_mode,
            linear=self.linear,
        )


def apply_coupling(
    base: BaseCoefficients, epsilon: float, strict: bool = False, linear: bool = False
) -> ModelParams:
    """Scale the Stokes-side coefficients by ``epsilon``."""
    if not epsilon >= 0:
        raise ParameterError(f"epsilon must be >= 0, got {epsilon!r}")
    base.check(linear)
    return validate(
        ModelParams(
            base=base,
            epsilon=float(epsilon),
            mu1=epsilon * base.mu1_tilde,
            gamma1=epsilon * base.gamma1_tilde,
            lambda1=epsilon * base.lambda1_tilde,
            strict_analysis_mode=strict,
            linear=linear,
        )
    )


def linear_params(mu2: float = 1.0, gamma2: float = 0.0, beta: float = 0.0) -> ModelParams:
    """Decoupled model with ``lambda2 = alpha = kappa = 0``.

    Only the diagonal part ``-(mu2 |k|^4 + gamma2 |k|^2 + beta)`` is left, which
    makes the exact solution available mode by mode. The physical model needs
    ``lambda2, alpha > 0``; this is a test configuration.
    """
    base = BaseCoefficients(mu2=mu2, gamma2=gamma2, beta=beta, lambda2=0.0, alpha=0.0)
    return apply_coupling(base, 0.0, linear=True)


def _close(a: float, b: float, rtol: float = 1e-14) -> bool:
    return abs(a - b) <= rtol * max(abs(a), abs(b)) or a == b


def validate(params: ModelParams) -> ModelParams:
    """Return ``params`` unchanged if consistent, raise otherwise."""
    params.base.check(params.linear)
    if not params.epsilon >= 0:
        raise ParameterError(f"epsilon must be >= 0, got {params.epsilon!r}")
    eps, b = params.epsilon, params.base
    for name, tilde in (("mu1", b.mu1_tilde), ("gamma1", b.gamma1_tilde),
                        ("lambda1", b.lambda1_tilde)):
        if not _close(getattr(params, name), eps * tilde):
            raise CouplingInconsistency(
                f"{name}={getattr(params, name)!r} but epsilon*{name}_tilde={eps * tilde!r}"
            )
    if params.strict_analysis_mode and b.kappa != 0.0:
        raise StrictModeKappaNonzero(
            f"strict analysis mode requires kappa = 0, got {b.kappa!r}"
        )
    return params
