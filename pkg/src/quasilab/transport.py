"""WKB amplitudes for the model operator and the quasimode estimator.

The quasimode is ``v_h = exp(i x2 xi2 / h^a) * E_h(t) * sum_j phi_j h^(j beta)``
with integrating factor ``E_h = exp(-i B(t) / h^beta)``.  Conjugating the
operator by ``E_h`` gives, for the reduced path,

    xi2 D1 phi - h^beta (b/xi2) D2 phi + h^(2 beta) D1 D2 phi,

so matching powers of ``h^beta`` yields the transport hierarchy

    xi2 D1 phi_j = (b/xi2) D2 phi_{j-1} - D1 D2 phi_{j-2}.

On the physical path the mixed term carries ``h^(1-beta)`` instead of
``h^(2 beta)`` and the lags in the hierarchy change accordingly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.integrate import cumulative_trapezoid
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import PreconditionError, ValidationError, check_h
from .params import make_partition
from .semiop import (
    Grid2D,
    GridFunction,
    apply_model,
    apply_reduced,
    spectral_derivative,
)
from .symbols import (
    NormalizedSymbol,
    SubprincipalSymbol,
    antiderivative,
    detect_sign_change,
    normalize_antiderivative,
    orient,
)

DEFAULT_ORDER = 3
MAX_ORDER = 6
RETRACT = 0.9
PATHS = ("reduced", "physical")


def _smooth_part(w):
    w = np.asarray(w, dtype=float)
    safe = np.where(w > 0, w, 1.0)
    return np.where(w > 0, np.exp(-1.0 / safe), 0.0)


def bump(u, flat, support):
    """C-infinity cutoff: 1 on ``|u| <= flat``, 0 on ``|u| >= support``."""
    if not 0 < flat < support:
        raise ValidationError(f"bump needs 0 < flat < support, got flat={flat}, support={support}", "transport")
    w = np.clip((support - np.abs(np.asarray(u, dtype=float))) / (support - flat), 0.0, 1.0)
    f, g = _smooth_part(w), _smooth_part(1.0 - w)
    out = f / (f + g)
    return out if out.ndim else float(out)


def bump_derivative(u, flat, support):
    """Exact derivative of :func:`bump` with respect to ``u``."""
    u = np.asarray(u, dtype=float)
    width = support - flat
    w = np.clip((support - np.abs(u)) / width, 0.0, 1.0)
    f, g = _smooth_part(w), _smooth_part(1.0 - w)
    inside = (w > 0) & (w < 1)
    ws = np.where(inside, w, 0.5)
    fp = f / ws**2
    gp = -g / (1.0 - ws) ** 2  # d/dw f(1-w)
    ds_dw = np.where(inside, (fp * g - f * gp) / (f + g) ** 2, 0.0)
    return ds_dw * (-np.sign(u) / width)


@dataclass(frozen=True)
class CutoffProfile:
    t_flat: float = 3.0
    t_support: float = 3.8
    x2_flat: float = 1.0
    x2_support: float = 2.5

    def __post_init__(self):
        if not 0 < self.t_flat < self.t_support:
            raise ValidationError("cutoff needs 0 < t_flat < t_support", "transport")
        if not 0 < self.x2_flat < self.x2_support:
            raise ValidationError("cutoff needs 0 < x2_flat < x2_support", "transport")

    @classmethod
    def from_dict(cls, data):
        return cls(**{k: float(data[k]) for k in ("t_flat", "t_support", "x2_flat", "x2_support") if k in data})

    def to_dict(self):
        return {"t_flat": self.t_flat, "t_support": self.t_support, "x2_flat": self.x2_flat, "x2_support": self.x2_support}

    def chi(self, t):
        return bump(t, self.t_flat, self.t_support)

    def chi_tilde(self, t):
        return bump(t, RETRACT * self.t_flat, RETRACT * self.t_support)

    def psi(self, x2):
        return bump(x2, self.x2_flat, self.x2_support)

    def check_fits(self, grid):
        margin = 2
        if grid.Lt - self.t_support < margin * grid.dt:
            raise ValidationError(f"t_support={self.t_support} leaves < {margin} cells to Lt={grid.Lt}", "transport")
        if grid.Lx2 - self.x2_support < margin * grid.dx2:
            raise ValidationError(f"x2_support={self.x2_support} leaves < {margin} cells to Lx2={grid.Lx2}", "transport")


@dataclass(frozen=True)
class AmplitudeStack:
    phis: tuple
    nsym: NormalizedSymbol
    part: object
    cutoff: CutoffProfile
    grid: Grid2D
    path: str = "reduced"

    @property
    def N(self):
        return len(self.phis) - 1

    @property
    def mixed_order(self):
        return mixed_order(self.part, self.path)


def mixed_order(part, path):
    """Power of ``h^beta`` multiplying ``D1 D2`` in the conjugated operator."""
    if path == "reduced":
        return 2
    if path == "physical":
        m = (1 - part.beta) / part.beta
        if m.denominator != 1:
            raise ValidationError(f"physical path needs (1-beta)/beta integral, got {m}", "transport")
        return int(m)
    raise ValidationError(f"unknown path {path!r}; expected one of {PATHS}", "transport")


def phase_exponent(part):
    """Exponent ``a`` of the transverse phase ``exp(i x2 xi2 / h^a)``."""
    return 1 - part.beta


def cutoff_gap(nsym, cutoff):
    """``delta = min(-Im B)`` over every cutoff transition region.

    The retracted cutoff used after each transport integration has the
    innermost transition, so its flat edge is where the minimum is taken.
    """
    t_in = RETRACT * cutoff.t_flat
    t = np.concatenate(
        [np.linspace(t_in, cutoff.t_support, 513), np.linspace(-cutoff.t_support, -t_in, 513)]
    )
    return float(np.min(-antiderivative(nsym.symbol, t).imag))


def integrating_factor(nsym, part, h, grid, support, check=True):
    """``exp(-i B(t) / h^beta)`` on the t-grid, zero outside ``|t| < support``."""
    t = grid.t
    inside = np.abs(t) < support
    B = antiderivative(nsym.symbol, t)
    if check and np.max(B.imag[inside]) > 1e-12:
        raise PreconditionError(
            f"Im B reaches {np.max(B.imag[inside]):.3e} > 0 on the support; symbol is not normalized",
            "transport",
        )
    exponent = np.where(inside, -1j * B / float(h) ** float(part.beta), -np.inf)
    with np.errstate(over="raise"):
        try:
            E = np.exp(exponent)
        except FloatingPointError:
            raise PreconditionError("integrating factor overflows", "transport") from None
    return E[:, None]


def leading_amplitude(nsym, part, cutoff, h, grid, check=True):
    """``a_0 = chi(t) psi(x2) exp(-i B(t) / h^beta)``."""
    h = check_h(h, "transport")
    T, X2 = grid.mesh()
    E = integrating_factor(nsym, part, h, grid, cutoff.t_support, check)
    return GridFunction(E * cutoff.chi(T) * cutoff.psi(X2), grid)


def transport_step(phis, j, nsym, cutoff, grid, order=2, max_order=MAX_ORDER):
    """Solve the ``j``-th transport equation for ``phi_j``.

    With ``order`` the power of ``h^beta`` on the mixed term, the equation is
    ``xi2 D1 phi_j = (b/xi2) D2 phi_{j-order+1} - D1 D2 phi_{j-order}``.
    Integrates ``d/dt phi_j = (i/xi2) * rhs`` from ``t = 0`` with the
    trapezoid rule, then re-applies the retracted t-cutoff.
    """
    if j < 1 or j > max_order:
        raise ValidationError(f"transport order j={j} outside 1..{max_order}", "transport")
    if len(phis) < j:
        raise ValidationError(f"phi_0..phi_{j-1} required, got {len(phis)} amplitudes", "transport")
    sym = nsym.symbol
    b = sym(grid.t)[:, None]
    rhs = np.zeros((grid.nt, grid.nx2), dtype=complex)
    k = j - order + 1
    if k >= 0:
        rhs += (b / sym.xi2) * spectral_derivative(phis[k], "x2").values
    k = j - order
    if k >= 0:
        rhs -= spectral_derivative(spectral_derivative(phis[k], "t"), "x2").values
    slope = (1j / sym.xi2) * rhs
    integral = cumulative_trapezoid(slope, grid.t, axis=0, initial=0)
    integral -= integral[grid.nt // 2]
    T, X2 = grid.mesh()
    # exact solutions live inside supp psi; the mask only removes spectral leakage
    inside = np.abs(X2) < cutoff.x2_support
    return GridFunction(integral * cutoff.chi_tilde(T) * inside, grid)


def build_stack(nsym, part, cutoff, grid, N=DEFAULT_ORDER, path="reduced"):
    if not 0 <= N <= MAX_ORDER:
        raise ValidationError(f"truncation order N={N} outside 0..{MAX_ORDER}", "transport")
    order = mixed_order(part, path)
    T, X2 = grid.mesh()
    phis = [GridFunction(cutoff.chi(T) * cutoff.psi(X2), grid)]
    for j in range(1, N + 1):
        phis.append(transport_step(phis, j, nsym, cutoff, grid, order=order))
    return AmplitudeStack(tuple(phis), nsym, part, cutoff, grid, path)


def assemble_quasimode(stack, h, path=None, check=True):
    """Sum the stack at ``h``; add the transverse phase on the physical path."""
    path = path or stack.path
    h = check_h(h, "transport")
    grid = stack.grid
    E = integrating_factor(stack.nsym, stack.part, h, grid, stack.cutoff.t_support, check)
    hb = h ** float(stack.part.beta)
    total = sum(phi.values * hb**j for j, phi in enumerate(stack.phis))
    values = E * total
    if path == "physical":
        a = float(phase_exponent(stack.part))
        values = np.exp(1j * grid.x2 * stack.nsym.symbol.xi2 / h**a)[None, :] * values
    elif path != "reduced":
        raise ValidationError(f"unknown path {path!r}", "transport")
    out = GridFunction(values, grid)
    if not np.any(out.values):
        raise ValidationError("assembled quasimode vanishes identically", "transport")
    return out


class QuasimodeBuilder(BaseEstimator):
    """Build WKB quasimodes for ``h^2 D1 D2 + h b(t)``.

    ``fit`` checks the sign change of Im b, orients and normalizes the
    symbol, and solves the transport hierarchy.  The amplitudes do not
    depend on ``h``; :meth:`assemble` and :meth:`transform` evaluate the
    quasimode for given ``h``.

    Parameters
    ----------
    symbol : SubprincipalSymbol or dict
    beta : rational or str, default "1/5"
    case : int or str, default 1
    truncation_order : int, default 3
    cutoff : CutoffProfile or dict, optional
    grid : Grid2D or dict, optional
    path : {"reduced", "physical"}
    force : bool, default False
        Skip the sign-change precondition and integrate ``b`` from ``t=0``
        unnormalized.  Only meaningful as a negative control.
    """

    def __init__(
        self,
        symbol=None,
        beta="1/5",
        case=1,
        truncation_order=DEFAULT_ORDER,
        cutoff=None,
        grid=None,
        path="reduced",
        force=False,
    ):
        self.symbol = symbol
        self.beta = beta
        self.case = case
        self.truncation_order = truncation_order
        self.cutoff = cutoff
        self.grid = grid
        self.path = path
        self.force = force

    def _resolve(self):
        sym = self.symbol
        if sym is None:
            raise ValidationError("QuasimodeBuilder needs a symbol", "transport")
        if isinstance(sym, dict):
            sym = SubprincipalSymbol.from_dict(sym)
        cutoff = self.cutoff if self.cutoff is not None else CutoffProfile()
        if isinstance(cutoff, dict):
            cutoff = CutoffProfile.from_dict(cutoff)
        grid = self.grid if self.grid is not None else Grid2D()
        if isinstance(grid, dict):
            grid = Grid2D.from_dict(grid)
        if self.path not in PATHS:
            raise ValidationError(f"unknown path {self.path!r}", "transport")
        return sym, cutoff, grid

    def fit(self, X=None, y=None):
        sym, cutoff, grid = self._resolve()
        cutoff.check_fits(grid)
        self.partition_ = make_partition(self.beta, self.case)
        interval = (-grid.Lt, grid.Lt)
        self.sign_change_ = detect_sign_change(sym, interval, samples=1025)
        if self.force:
            B = antiderivative(sym, grid.t)
            self.nsym_ = NormalizedSymbol(sym, 0.0, float(B.imag.max()))
        else:
            oriented = orient(sym, self.sign_change_)
            self.nsym_ = normalize_antiderivative(oriented, interval)
        self.delta_ = cutoff_gap(self.nsym_, cutoff)
        if self.delta_ <= 0 and not self.force:
            raise ValidationError(
                f"cutoff transition region has delta={self.delta_:.3g} <= 0; move t_flat outward", "transport"
            )
        self.amplitude_overflow_ = self.nsym_.B_im_max > 1e-12
        if self.amplitude_overflow_:
            warnings.warn("Im B > 0 on the grid: the integrating factor grows (no beta-condition)", stacklevel=2)
        self.stack_ = build_stack(self.nsym_, self.partition_, cutoff, grid, int(self.truncation_order), self.path)
        self.grid_ = grid
        self.cutoff_ = cutoff
        return self

    @property
    def beta_(self):
        check_is_fitted(self, "partition_")
        return Fraction(self.partition_.beta)

    def assemble(self, h):
        check_is_fitted(self, "stack_")
        return assemble_quasimode(self.stack_, h, self.path, check=not self.force)

    def apply_operator(self, v, h):
        """Apply the operator matching ``path``, at full scale."""
        check_is_fitted(self, "stack_")
        if self.path == "reduced":
            beta = float(self.partition_.beta)
            return apply_reduced(v, self.nsym_, self.partition_, h) * h ** (1 + beta)
        return apply_model(v, self.nsym_, h)

    def transform(self, X):
        """Quasimode samples for each ``h`` in ``X``; shape ``(len(X), nt, nx2)``."""
        h_values = np.atleast_1d(np.asarray(X, dtype=float)).ravel()
        return np.stack([self.assemble(h).values for h in h_values])
