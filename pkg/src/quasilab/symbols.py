"""Subprincipal symbols b(t) = Re b + i Im b along the t-line.

Symbols are polynomials in t with a fixed transverse frequency ``xi2``.  The
integrating factor of the first transport equation is built from the
antiderivative ``B(t) = (1/xi2) * int_0^t b(s) ds``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import brentq, minimize_scalar

from ._validation import PreconditionError, ValidationError

XI2_MIN = 1e-6
ROOT_TOL = 1e-12


class Direction(str, enum.Enum):
    PLUS_TO_MINUS = "plus_to_minus"
    MINUS_TO_PLUS = "minus_to_plus"


@dataclass(frozen=True)
class SubprincipalSymbol:
    """Polynomial symbol; coefficient lists are in ascending degree."""

    re_coeffs: tuple
    im_coeffs: tuple
    xi2: float = 1.0

    def __post_init__(self):
        re = tuple(float(c) for c in self.re_coeffs)
        im = tuple(float(c) for c in self.im_coeffs)
        if not re or not im:
            raise ValidationError("coefficient lists must be non-empty", "symbols")
        if not all(np.isfinite(re + im)):
            raise ValidationError("coefficients must be finite", "symbols")
        if not np.isfinite(self.xi2) or abs(self.xi2) < XI2_MIN:
            raise ValidationError(f"|xi2|={abs(self.xi2)!r} below xi2_min={XI2_MIN}", "symbols")
        object.__setattr__(self, "re_coeffs", re)
        object.__setattr__(self, "im_coeffs", im)
        object.__setattr__(self, "xi2", float(self.xi2))

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(data["re_coeffs"], data["im_coeffs"], data.get("xi2", 1.0))
        except KeyError as exc:
            raise ValidationError(f"symbol config missing key {exc}", "symbols") from None

    def to_dict(self):
        return {"re_coeffs": list(self.re_coeffs), "im_coeffs": list(self.im_coeffs), "xi2": self.xi2}

    @property
    def re_poly(self):
        return Polynomial(self.re_coeffs)

    @property
    def im_poly(self):
        return Polynomial(self.im_coeffs)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.re_poly(t) + 1j * self.im_poly(t)

    def imag(self, t):
        return self.im_poly(np.asarray(t, dtype=float))

    def __add__(self, other):
        if self.xi2 != other.xi2:
            raise ValidationError("cannot add symbols with different xi2", "symbols")
        re = (self.re_poly + other.re_poly).coef
        im = (self.im_poly + other.im_poly).coef
        return SubprincipalSymbol(tuple(re), tuple(im), self.xi2)

    def translate(self, shift):
        """Return the symbol ``t -> b(t + shift)``."""
        arg = Polynomial([shift, 1.0])
        return SubprincipalSymbol(
            tuple(self.re_poly(arg).coef), tuple(self.im_poly(arg).coef), self.xi2
        )

    def reflect(self):
        """Return the symbol ``t -> b(-t)``."""
        signs = lambda c: tuple(((-1) ** k) * v for k, v in enumerate(c))  # noqa: E731
        return SubprincipalSymbol(signs(self.re_coeffs), signs(self.im_coeffs), self.xi2)


@dataclass(frozen=True)
class SignChangeReport:
    changes: bool
    location: float | None = None
    direction: Direction | None = None


@dataclass(frozen=True)
class NormalizedSymbol:
    symbol: SubprincipalSymbol
    shift: float
    B_im_max: float

    def B(self, t):
        return antiderivative(self.symbol, t)


def _check_interval(interval):
    lo, hi = map(float, interval)
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo >= hi:
        raise ValidationError(f"degenerate interval [{lo}, {hi}]", "symbols")
    return lo, hi


def detect_sign_change(sym, interval=(-1.0, 1.0), samples=257):
    """Locate the first strict sign change of Im b on ``interval``.

    Samples are scanned left to right; zero samples are skipped so that a
    root sitting exactly on a sample is still bracketed by its nonzero
    neighbours.  The bracket is refined with Brent's method to 1e-12.
    """
    lo, hi = _check_interval(interval)
    if samples < 16:
        raise ValidationError(f"samples={samples} must be >= 16", "symbols")
    t = np.linspace(lo, hi, int(samples))
    values = sym.imag(t)
    signs = np.sign(values)
    nonzero = np.flatnonzero(signs)
    for a, b in zip(nonzero[:-1], nonzero[1:]):
        if signs[a] != signs[b]:
            if b - a > 1:
                # exact zero samples in between; take the middle one
                root = float(t[(a + b) // 2])
            else:
                root = brentq(sym.imag, t[a], t[b], xtol=ROOT_TOL)
            direction = Direction.PLUS_TO_MINUS if signs[a] > 0 else Direction.MINUS_TO_PLUS
            return SignChangeReport(True, float(root), direction)
    return SignChangeReport(False)


def orient(sym, report):
    """Orient the symbol so that Im(b)/xi2 changes from plus to minus.

    A minus-to-plus change is reflected by ``t -> -t``.  The frequency is
    then taken positive: only the sign of Im(b)/xi2 matters for the
    integrating factor, and the sign of the ansatz frequency is free.
    """
    if not report.changes:
        raise PreconditionError("no beta-condition: Im b does not change sign", "symbols")
    out = sym.reflect() if report.direction == Direction.MINUS_TO_PLUS else sym
    if out.xi2 < 0:
        out = SubprincipalSymbol(out.re_coeffs, out.im_coeffs, -out.xi2)
    return out


def antiderivative(sym, t):
    """Exact ``(1/xi2) * int_0^t b(s) ds``; vectorised over ``t``."""
    t = np.asarray(t, dtype=float)
    re = sym.re_poly.integ(lbnd=0.0)(t)
    im = sym.im_poly.integ(lbnd=0.0)(t)
    return (re + 1j * im) / sym.xi2


def normalize_antiderivative(sym, interval=(-1.0, 1.0), samples=1025):
    """Translate the symbol so that the maximum of Im B sits at ``t = 0``.

    Returns a :class:`NormalizedSymbol` with ``Im B(0) = 0`` and
    ``Im B <= 0`` on the translated interval.
    """
    lo, hi = _check_interval(interval)
    t = np.linspace(lo, hi, samples)
    im_B = antiderivative(sym, t).imag
    k = int(np.argmax(im_B))
    if k == 0 or k == samples - 1:
        raise PreconditionError("no beta-condition: Im B monotone (maximum at an endpoint)", "symbols")

    neg_im_B = lambda s: -antiderivative(sym, s).imag  # noqa: E731
    res = minimize_scalar(neg_im_B, bracket=(t[k - 1], t[k], t[k + 1]), method="golden", tol=1e-12)
    t_star = float(res.x)
    # polish: the maximiser is a root of Im b / xi2
    a, b = t[k - 1], t[k + 1]
    slope = lambda s: sym.imag(s) / sym.xi2  # noqa: E731
    if slope(a) > 0 > slope(b):
        t_star = brentq(slope, a, b, xtol=ROOT_TOL)

    shifted = sym.translate(t_star)
    t_shift = t - t_star
    im_shifted = antiderivative(shifted, t_shift).imag
    B_im_max = float(im_shifted.max())
    if B_im_max > 1e-12:
        raise PreconditionError(f"normalization failed: max Im B = {B_im_max:.3e} > 0", "symbols")
    return NormalizedSymbol(shifted, t_star, max(B_im_max, 0.0))
