"""Exponent bookkeeping for the semiclassical scaling parameters.

The scaling triple ``(alpha, beta, gamma)`` splits the semiclassical
parameter as ``h = h**alpha * h**beta * h**gamma``.  Everything here is exact
rational arithmetic; floats only appear once an exponent is handed to grid
code.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from ._validation import ValidationError, as_fraction

CASES = {"transversal": 1, "tangential": 2}


@dataclass(frozen=True)
class ParameterPartition:
    beta: Fraction
    j: int

    @property
    def gamma(self):
        return (self.j + 1) * self.beta

    @property
    def alpha(self):
        return 1 - (self.j + 2) * self.beta

    def as_tuple(self):
        return self.alpha, self.beta, self.gamma

    def __str__(self):
        return "(alpha, beta, gamma) = ({}, {}, {})".format(*self.as_tuple())


@dataclass(frozen=True)
class TermPowers:
    kappa: int
    lam: int
    mu: int

    def __post_init__(self):
        for name in ("kappa", "lam", "mu"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 0:
                raise ValidationError(f"TermPowers.{name}={value!r} must be a non-negative int", "params")

    @property
    def m(self):
        return self.lam + self.mu - 1


@dataclass(frozen=True)
class ExponentReport:
    raw_exponent: Fraction
    prefactor_exponent: Fraction
    content_exponent: Fraction

    @property
    def bounded(self):
        return self.content_exponent >= 0


def parse_case(case):
    """Accept ``1``/``2`` or ``"transversal"``/``"tangential"``."""
    if isinstance(case, str):
        key = case.strip().lower()
        if key in CASES:
            return CASES[key]
        if key.isdigit():
            case = int(key)
        else:
            raise ValidationError(f"unknown case {case!r}; expected transversal or tangential", "params")
    if case not in (1, 2):
        raise ValidationError(f"case index j={case!r} must be 1 (transversal) or 2 (tangential)", "params")
    return int(case)


def make_partition(beta, j=1):
    """Build the partition for unit parameter ``beta`` and case ``j``.

    >>> make_partition("1/5", 1).as_tuple()
    (Fraction(2, 5), Fraction(1, 5), Fraction(2, 5))
    """
    beta = as_fraction(beta, "beta")
    j = parse_case(j)
    part = ParameterPartition(beta, j)
    alpha, beta, gamma = part.as_tuple()
    checks = [
        (0 < beta, f"0 < beta violated (beta={beta})"),
        (beta < gamma, f"beta < gamma violated (beta={beta}, gamma={gamma})"),
        (0 < alpha, f"0 < alpha violated (alpha={alpha})"),
        (gamma <= alpha, f"gamma <= alpha violated (gamma={gamma}, alpha={alpha})"),
        (alpha < 1, f"alpha < 1 violated (alpha={alpha})"),
    ]
    for ok, message in checks:
        if not ok:
            raise ValidationError(message, "params")
    assert alpha + beta + gamma == 1
    return part


def remainder_exponent(term, part):
    """Split ``h**(kappa*beta + lam + (1-gamma)*mu)`` into prefactor and content.

    The prefactor is ``h**(1 + j*beta)``; the remaining (content) exponent is
    ``m + ((kappa - j) - (j+1)*mu) * beta`` with ``m = lam + mu - 1``.  A term
    is bounded after factoring when its content exponent is non-negative.
    """
    beta, j = part.beta, part.j
    raw = term.kappa * beta + term.lam + (1 - part.gamma) * term.mu
    prefactor = 1 + j * beta
    content = term.m + ((term.kappa - j) - (j + 1) * term.mu) * beta
    return ExponentReport(Fraction(raw), Fraction(prefactor), Fraction(content))


def first_equation_kappa(part):
    # content of (kappa, 1, 0) is (kappa - j) * beta, zero exactly at kappa = j
    return part.j
