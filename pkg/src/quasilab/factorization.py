"""Factored operator ``h^2 D2 (D1 - i x1)`` and its stalled transport family.

``A_- = D1 - i x1`` annihilates ``exp(-x1^2/2)``, so the Gaussian is an exact
eigenmode of the factored operator at zero.  Feeding the family
``exp(i x2/h) exp(-x1^2/2) sum_j phi_j h^j`` through the transport system

    i A_- phi_j + A_- D2 phi_{j-1} - zeta phi_{j-2} = 0

leaves the ``zeta`` term behind at every order, and the residual of
``P - h zeta`` stops improving with the truncation order.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from ._validation import ValidationError, as_fraction, check_h_values, check_unit_modulus
from .analysis import PowerLawFit, parallel_map, residual_sweep
from .semiop import Grid2D, GridFunction, apply_factored, l2_norm, spectral_derivative
from .symbols import SubprincipalSymbol
from .transport import QuasimodeBuilder, bump

DEFAULT_GRID = Grid2D(nt=128, nx2=256, Lt=8.0, Lx2=8.0)
DEFAULT_H = tuple(np.geomspace(0.5, 0.125, 6))
STALL_TOL = 0.1
MAX_FAMILY_ORDER = 4


class Verdict(str, enum.Enum):
    NO_QUASIMODE = "no_quasimode_confirmed"
    UNEXPECTED_DECAY = "unexpected_decay"


def annihilation(f):
    """``A_- f = D1 f - i x1 f``."""
    x1 = f.grid.t[:, None]
    return f.with_values(spectral_derivative(f, "t").values - 1j * x1 * f.values)


def creation(f):
    """``A_+ f = D1 f + i x1 f``."""
    x1 = f.grid.t[:, None]
    return f.with_values(spectral_derivative(f, "t").values + 1j * x1 * f.values)


def gaussian_eigenmode(grid=DEFAULT_GRID, decay=1.0, normalize=True):
    tail = np.exp(-decay * min(grid.Lt, grid.Lx2) ** 2 / 2)
    if min(grid.Lt, grid.Lx2) < 8 or tail > 1e-12:
        raise ValidationError(f"box half-widths ({grid.Lt}, {grid.Lx2}) too small for the Gaussian tail", "factorization")
    T, X2 = grid.mesh()
    v = GridFunction(np.exp(-decay * (T**2 + X2**2) / 2), grid)
    return v * (1.0 / l2_norm(v)) if normalize else v


def eigenmode_residual(h, grid=DEFAULT_GRID, decay=1.0):
    """Scale-free residual ``|h^2 D2 A_- v| / h^2`` of the normalized Gaussian."""
    v = gaussian_eigenmode(grid, decay)
    return l2_norm(apply_factored(v, h)) / h**2


def family_amplitudes(zeta, N, grid=DEFAULT_GRID, x2_flat=2.0, x2_support=6.0):
    """``phi_j / exp(-x1^2/2)`` for ``j <= N``, solved in ``x1`` from 0."""
    if not 0 <= N <= MAX_FAMILY_ORDER:
        raise ValidationError(f"family order N={N} outside 0..{MAX_FAMILY_ORDER}", "factorization")
    _, X2 = grid.mesh()
    g = [GridFunction(bump(X2, x2_flat, x2_support), grid)]
    for j in range(1, N + 1):
        rhs = -spectral_derivative(spectral_derivative(g[j - 1], "t"), "x2").values
        if j >= 2:
            rhs = rhs + zeta * g[j - 2].values
        # i A_- (G g) = G d/dx1 g
        integral = cumulative_trapezoid(rhs, grid.t, axis=0, initial=0)
        g.append(GridFunction(integral - integral[grid.nt // 2], grid))
    return g


def assemble_family(amplitudes, h, grid=DEFAULT_GRID):
    T, X2 = grid.mesh()
    total = sum(a.values * h**j for j, a in enumerate(amplitudes))
    return GridFunction(np.exp(1j * X2 / h) * np.exp(-(T**2) / 2) * total, grid)


def family_residual(amplitudes, zeta, h, grid=DEFAULT_GRID):
    v = assemble_family(amplitudes, h, grid)
    Pv = apply_factored(v, h) - v * (h * zeta)
    return l2_norm(Pv) / l2_norm(v)


@dataclass
class FactoredDemoReport:
    eigenmode_residual: float
    family_slopes: list
    comparison_slopes: list
    verdict: Verdict

    def to_dict(self):
        return {
            "eigenmode_residual": self.eigenmode_residual,
            "family_slopes": [[n, s] for n, s in self.family_slopes],
            "comparison_slopes": [[n, s] for n, s in self.comparison_slopes],
            "verdict": self.verdict.value,
        }


def transversal_slopes(orders, h_values=None, beta="1/5"):
    """Reduced-path residual slopes for ``b = -i t`` at each order."""
    h_values = np.geomspace(0.2, 0.02, 8) if h_values is None else h_values
    sym = SubprincipalSymbol([0.0], [0.0, -1.0], 1.0)
    out = []
    for N in orders:
        builder = QuasimodeBuilder(sym, beta=beta, truncation_order=N).fit()
        out.append((N, residual_sweep(builder, h_values).fitted_slope_residual))
    return out


def stalled_family_demo(zeta=1.0, orders=(0, 1, 2), h_values=DEFAULT_H, grid=DEFAULT_GRID, beta="1/5"):
    """Residual slopes of the factored family against the transversal case.

    The verdict is ``no_quasimode_confirmed`` when the family slope moves by
    less than 0.1 per added order while the transversal slope grows by at
    least ``beta - 0.05`` per order.
    """
    zeta = check_unit_modulus(zeta)
    h_values = check_h_values(h_values, "factorization")
    orders = sorted(int(N) for N in orders)
    if not orders or orders[-1] > MAX_FAMILY_ORDER:
        raise ValidationError(f"orders must lie in 0..{MAX_FAMILY_ORDER}", "factorization")

    def slope(N):
        amps = family_amplitudes(zeta, N, grid)
        res = [family_residual(amps, zeta, h, grid) for h in h_values]
        return N, float(PowerLawFit().fit(h_values, res).slope_)

    family = parallel_map(slope, orders)
    comparison = transversal_slopes(orders, beta=beta)
    b = float(as_fraction(beta, "beta"))
    stalled = all(abs(s1 - s0) < STALL_TOL for (_, s0), (_, s1) in zip(family, family[1:]))
    grows = all(s1 - s0 >= b - 0.05 for (_, s0), (_, s1) in zip(comparison, comparison[1:]))
    verdict = Verdict.NO_QUASIMODE if stalled and grows else Verdict.UNEXPECTED_DECAY
    return FactoredDemoReport(eigenmode_residual(0.1, gaussian_grid(grid)), family, comparison, verdict)


def gaussian_grid(grid):
    # eigenmode check runs on a square 128^2 box when the family grid is wider
    return Grid2D(nt=128, nx2=128, Lt=grid.Lt, Lx2=grid.Lx2)

