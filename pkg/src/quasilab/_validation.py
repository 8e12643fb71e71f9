"""Input validation helpers shared by the estimators and the CLI."""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational

import numpy as np
from sklearn.utils.validation import check_array


class ValidationError(ValueError):
    """Raised when an input violates a documented invariant.

    ``module`` names the subsystem whose invariant failed; the CLI uses it to
    build its one-line machine-readable error.
    """

    def __init__(self, message, module="quasilab"):
        super().__init__(message)
        self.module = module
        self.reason = message

    def __str__(self):
        return f"[{self.module}] {super().__str__()}"


class PreconditionError(ValidationError):
    """An operation was called on an input outside its domain."""


class ResolutionError(ValidationError):
    """A grid cannot resolve the requested oscillation."""

    def __init__(self, message, required_n, module="semiop"):
        super().__init__(message, module=module)
        self.required_n = required_n


def as_fraction(value, name="value", module="params"):
    """Parse ints, Fractions or strings like ``"1/5"`` exactly.

    Floats are accepted only when they are exactly representable as a short
    fraction (``limit_denominator(10**6)`` round-trips).
    """
    if isinstance(value, bool):
        raise ValidationError(f"{name} must be rational, got bool", module)
    if isinstance(value, Rational):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"{name}={value!r} is not a rational literal", module) from exc
    if isinstance(value, float):
        frac = Fraction(value).limit_denominator(10**6)
        if float(frac) != value:
            raise ValidationError(f"{name}={value!r} has no short rational form", module)
        return frac
    raise ValidationError(f"{name} must be rational, got {type(value).__name__}", module)


def is_power_of_two(n):
    return isinstance(n, (int, np.integer)) and n > 0 and (n & (n - 1)) == 0


def check_grid_size(n, name, minimum=32, module="semiop"):
    if not is_power_of_two(n) or n < minimum:
        raise ValidationError(f"{name}={n} must be a power of two >= {minimum}", module)
    return int(n)


def check_positive(x, name, module):
    if not np.isfinite(x) or x <= 0:
        raise ValidationError(f"{name}={x} must be a positive finite number", module)
    return float(x)


def check_h(h, module="analysis"):
    h = float(h)
    if not (0.0 < h <= 1.0):
        raise ValidationError(f"semiclassical parameter h={h} must lie in (0, 1]", module)
    return h


def check_h_values(h_values, module="analysis", decreasing=True):
    """Validate an h ladder: finite, in (0, 1], strictly decreasing."""
    h = check_array(np.asarray(h_values, dtype=float).reshape(-1, 1), ensure_min_samples=1).ravel()
    for value in h:
        check_h(value, module)
    if decreasing and np.any(np.diff(h) >= 0):
        raise ValidationError("h_values must be strictly decreasing", module)
    return h


def check_unit_modulus(zeta, tol=1e-12, module="factorization"):
    zeta = complex(zeta)
    if abs(abs(zeta) - 1.0) > tol:
        raise ValidationError(f"|zeta|={abs(zeta)!r} must equal 1", module)
    return zeta
