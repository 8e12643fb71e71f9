"""Periodic grids, Fourier differentiation and the model operators.

All operators act on samples over the box ``[-Lt, Lt) x [-Lx2, Lx2)``.
``D = -i d/dx`` is applied spectrally, so everything here is exact for
band-limited data and spectrally accurate for the compactly supported
amplitudes used elsewhere in the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import ResolutionError, ValidationError, check_grid_size, check_positive

POINTS_PER_WAVELENGTH = 8
AXES = {"t": 0, "x1": 0, 0: 0, "x2": 1, 1: 1}


@dataclass(frozen=True)
class Grid2D:
    nt: int = 256
    nx2: int = 64
    Lt: float = 4.0
    Lx2: float = 3.0

    def __post_init__(self):
        check_grid_size(self.nt, "nt")
        check_grid_size(self.nx2, "nx2")
        object.__setattr__(self, "Lt", check_positive(self.Lt, "Lt", "semiop"))
        object.__setattr__(self, "Lx2", check_positive(self.Lx2, "Lx2", "semiop"))

    @classmethod
    def from_dict(cls, data):
        return cls(**{k: data[k] for k in ("nt", "nx2", "Lt", "Lx2") if k in data})

    def to_dict(self):
        return {"nt": self.nt, "nx2": self.nx2, "Lt": self.Lt, "Lx2": self.Lx2}

    @property
    def dt(self):
        return 2 * self.Lt / self.nt

    @property
    def dx2(self):
        return 2 * self.Lx2 / self.nx2

    @property
    def t(self):
        # t = 0 falls on index nt // 2
        return -self.Lt + self.dt * np.arange(self.nt)

    @property
    def x2(self):
        return -self.Lx2 + self.dx2 * np.arange(self.nx2)

    def mesh(self):
        return np.meshgrid(self.t, self.x2, indexing="ij")

    def spacing(self, axis):
        return (self.dt, self.dx2)[AXES[axis]]

    def length(self, axis):
        return (2 * self.Lt, 2 * self.Lx2)[AXES[axis]]

    def size(self, axis):
        return (self.nt, self.nx2)[AXES[axis]]

    def wavenumbers(self, axis):
        return wavenumbers(self.size(axis), self.length(axis) / 2)

    @property
    def cell_area(self):
        return self.dt * self.dx2


@dataclass(frozen=True)
class GridFunction:
    values: np.ndarray
    grid: Grid2D = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        if values.shape != (self.grid.nt, self.grid.nx2):
            raise ValidationError(
                f"values shape {values.shape} does not match grid {(self.grid.nt, self.grid.nx2)}", "semiop"
            )
        if not np.all(np.isfinite(values)):
            raise ValidationError("grid function has non-finite entries", "semiop")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def with_values(self, values):
        return GridFunction(values, self.grid)

    def __add__(self, other):
        return self.with_values(self.values + other.values)

    def __sub__(self, other):
        return self.with_values(self.values - other.values)

    def __mul__(self, scalar):
        return self.with_values(self.values * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True)
class Matrix1D:
    matrix: np.ndarray
    x: np.ndarray
    L: float
    h: float
    kind: str

    @property
    def n(self):
        return self.matrix.shape[0]


def wavenumbers(n, L, nyquist=False):
    """Angular wavenumbers of an ``n``-point periodic grid on ``[-L, L)``.

    The Nyquist mode is zeroed unless ``nyquist`` is true; first derivatives
    then stay real-to-real and Hermitian.
    """
    k = 2 * np.pi * np.fft.fftfreq(n, d=2 * L / n)
    if not nyquist and n % 2 == 0:
        k[n // 2] = 0.0
    return k


def dominant_wavenumber(values, axis, L):
    spectrum = np.abs(np.fft.fft(values, axis=axis)) ** 2
    energy = spectrum.sum(axis=1 - axis) if values.ndim == 2 else spectrum
    k = 2 * np.pi * np.fft.fftfreq(values.shape[axis], d=2 * L / values.shape[axis])
    return float(abs(k[int(np.argmax(energy))]))


def resolution_margin(k, spacing):
    """How many times over the 8-points-per-wavelength rule ``k`` is resolved."""
    k_allowed = 2 * np.pi / (POINTS_PER_WAVELENGTH * spacing)
    return np.inf if k == 0 else k_allowed / abs(k)


def required_points(k, length):
    need = POINTS_PER_WAVELENGTH * abs(k) * length / (2 * np.pi)
    return int(2 ** int(np.ceil(np.log2(max(need, 32)))))


def preflight(f, axis):
    """Raise :class:`ResolutionError` if ``f`` is under-resolved along ``axis``."""
    ax = AXES[axis]
    grid = f.grid
    k = dominant_wavenumber(f.values, ax, grid.length(ax) / 2)
    if resolution_margin(k, grid.spacing(ax)) < 1.0:
        n_req = required_points(k, grid.length(ax))
        raise ResolutionError(
            f"axis {axis!r}: dominant wavenumber {k:.4g} needs n >= {n_req} "
            f"(have {grid.size(ax)})",
            required_n=n_req,
        )
    return k


def spectral_derivative(f, axis, check=True):
    """Apply ``D = -i d/d(axis)`` by FFT on the periodic grid."""
    ax = AXES[axis]
    if check:
        preflight(f, axis)
    k = f.grid.wavenumbers(ax)
    shape = [1, 1]
    shape[ax] = -1
    out = np.fft.ifft(np.fft.fft(f.values, axis=ax) * k.reshape(shape), axis=ax)
    return f.with_values(out)


def l2_norm(f):
    """Uniform-grid quadrature of ``(int |f|^2)^(1/2)``."""
    return float(np.sqrt(np.sum(np.abs(f.values) ** 2) * f.grid.cell_area))


def _symbol_on_t(sym, grid):
    sym = getattr(sym, "symbol", sym)
    return sym(grid.t)[:, None], sym.xi2


def apply_reduced(a, nsym, part, h, check=True):
    """Reduced operator ``h^-beta b a + xi2 D1 a + h^(2 beta) D1 D2 a``.

    Multiply by ``h**(1 + beta)`` to recover the full operator scale.
    """
    if part.j != 1:
        raise ValidationError("reduced operator is implemented for the transversal case j=1 only", "semiop")
    beta = float(part.beta)
    b, xi2 = _symbol_on_t(nsym, a.grid)
    d1 = spectral_derivative(a, "t", check)
    d1d2 = spectral_derivative(d1, "x2", check)
    out = h ** (-beta) * b * a.values + xi2 * d1.values + h ** (2 * beta) * d1d2.values
    return a.with_values(out)


def apply_model(v, sym, h, check=True):
    """Model operator ``h^2 D1 D2 v + h b(t) v``."""
    b, _ = _symbol_on_t(sym, v.grid)
    d1d2 = spectral_derivative(spectral_derivative(v, "t", check), "x2", check)
    return v.with_values(h**2 * d1d2.values + h * b * v.values)


def apply_factored(v, h, check=True):
    """Factored operator ``h^2 D2 (D1 - i x1) v``."""
    x1 = v.grid.t[:, None]
    inner = spectral_derivative(v, "t", check).values - 1j * x1 * v.values
    return spectral_derivative(v.with_values(inner), "x2", check) * h**2


def diff_matrix(n, L, order=1):
    """Dense Fourier differentiation matrix for ``D**order``, ``D = -i d/dx``."""
    k = wavenumbers(n, L, nyquist=order % 2 == 0) ** order
    eye = np.eye(n)
    return np.fft.ifft(k[:, None] * np.fft.fft(eye, axis=0), axis=0)


def discretize_1d(kind, h, n=256, L=8.0, symbol=None, beta=0.2):
    """Dense periodic discretisation of a 1-D semiclassical operator.

    ``kind`` is one of

    * ``"harmonic"``: ``h^2 D^2 + x^2``,
    * ``"annihilation"``: ``h D - i x`` (kernel ``exp(-x^2 / 2h)``),
    * ``"subprincipal"``: the model operator on a single transverse
      frequency ``xi2 / h^(1-beta)``, i.e. ``h^(1+beta) xi2 D + h b(x)``.
    """
    check_grid_size(n, "n")
    L = check_positive(L, "L", "semiop")
    x = -L + (2 * L / n) * np.arange(n)
    if kind == "harmonic":
        M = h**2 * diff_matrix(n, L, 2) + np.diag(x**2)
    elif kind == "annihilation":
        M = h * diff_matrix(n, L, 1) - 1j * np.diag(x)
    elif kind == "subprincipal":
        if symbol is None:
            raise ValidationError("subprincipal discretisation needs a symbol", "semiop")
        sym = getattr(symbol, "symbol", symbol)
        M = h ** (1 + beta) * sym.xi2 * diff_matrix(n, L, 1) + h * np.diag(sym(x))
    else:
        raise ValidationError(f"unknown operator kind {kind!r}", "semiop")
    return Matrix1D(np.asarray(M, dtype=complex), x, L, float(h), kind)
