"""h-sweeps, decay-order fits and singular-value checks."""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import svd, svdvals
from sklearn.base import BaseEstimator, RegressorMixin, clone
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import ResolutionError, ValidationError, check_h_values
from .semiop import dominant_wavenumber, discretize_1d, l2_norm, resolution_margin
from .transport import phase_exponent

MIN_RECORDS = 4
MIN_MARGIN = 1.5
DENSE_LIMIT = 4096


def max_workers():
    try:
        return max(1, int(os.environ.get("QUASILAB_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(func, items):
    """Order-preserving map, threaded when ``QUASILAB_THREADS`` > 1."""
    items = list(items)
    workers = min(max_workers(), len(items)) or 1
    if workers == 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


class PowerLawFit(RegressorMixin, BaseEstimator):
    """Least-squares fit of ``y = C h^slope`` in log-log coordinates."""

    def fit(self, h, y):
        h = check_array(np.asarray(h, dtype=float).reshape(-1, 1)).ravel()
        y = check_array(np.asarray(y, dtype=float).reshape(-1, 1)).ravel()
        if len(h) != len(y):
            raise ValidationError("h and y differ in length", "analysis")
        if np.any(h <= 0) or np.any(y <= 0):
            raise ValidationError("power-law fit needs positive h and residuals", "analysis")
        if len(h) < 2:
            raise ValidationError("power-law fit needs at least two points", "analysis")
        lx, ly = np.log(h), np.log(y)
        self.slope_, self.log_prefactor_ = np.polyfit(lx, ly, 1)
        fitted = self.slope_ * lx + self.log_prefactor_
        ss_res = float(np.sum((ly - fitted) ** 2))
        ss_tot = float(np.sum((ly - ly.mean()) ** 2))
        self.r_squared_ = 1.0 if ss_tot == 0 else min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
        return self

    def predict(self, h):
        check_is_fitted(self, "slope_")
        return np.exp(self.log_prefactor_) * np.asarray(h, dtype=float) ** self.slope_

    def score(self, h, y, sample_weight=None):
        """Coefficient of determination in log space."""
        check_is_fitted(self, "slope_")
        ly = np.log(np.asarray(y, dtype=float))
        fitted = np.log(self.predict(h))
        ss_tot = np.sum((ly - ly.mean()) ** 2)
        return 1.0 if ss_tot == 0 else float(1 - np.sum((ly - fitted) ** 2) / ss_tot)


@dataclass(frozen=True)
class SweepRecord:
    h: float
    norm_v: float
    norm_Pv: float

    @property
    def ratio(self):
        return self.norm_v / self.norm_Pv

    @property
    def residual(self):
        return self.norm_Pv / self.norm_v


@dataclass
class SweepReport:
    records: list
    fitted_slope_residual: float = float("nan")
    fitted_slope_norm: float = float("nan")
    r_squared: float = float("nan")
    truncation_order: int | None = None
    path: str | None = None
    dropped: list = field(default_factory=list)
    amplitude_overflow: bool = False

    def __post_init__(self):
        h = [r.h for r in self.records]
        if any(b >= a for a, b in zip(h, h[1:])):
            raise ValidationError("sweep records must have strictly decreasing h", "analysis")
        if any(r.norm_v <= 0 or r.norm_Pv <= 0 for r in self.records):
            raise ValidationError("sweep norms must be positive", "analysis")

    @property
    def h(self):
        return np.array([r.h for r in self.records])

    @property
    def norm_v(self):
        return np.array([r.norm_v for r in self.records])

    @property
    def norm_Pv(self):
        return np.array([r.norm_Pv for r in self.records])

    @property
    def ratios(self):
        return np.array([r.ratio for r in self.records])

    def rows(self):
        return [(r.h, r.norm_v, r.norm_Pv, r.ratio) for r in self.records]


def fit_decay_order(report):
    """Slope and r^2 of ``log(|Pv|/|v|)`` against ``log h``."""
    if len(report.records) < MIN_RECORDS:
        raise ValidationError(f"need >= {MIN_RECORDS} records, got {len(report.records)}", "analysis")
    residual = np.array([r.residual for r in report.records])
    if np.any(residual <= 0):
        raise ValidationError("non-positive residual", "analysis")
    fit = PowerLawFit().fit(report.h, residual)
    return float(fit.slope_), float(fit.r_squared_)


def _margin(builder, v, h):
    """Resolution margin of the quasimode at ``h`` over the 8 points/wavelength rule."""
    grid = builder.grid_
    if builder.path == "physical":
        k2 = abs(builder.nsym_.symbol.xi2) / h ** float(phase_exponent(builder.partition_))
    else:
        k2 = dominant_wavenumber(v.values, 1, grid.Lx2)
    k1 = dominant_wavenumber(v.values, 0, grid.Lt)
    return min(resolution_margin(k1, grid.dt), resolution_margin(k2, grid.dx2))


def residual_sweep(builder, h_values, path=None):
    """Assemble, apply and measure the quasimode over an h ladder.

    ``builder`` is a :class:`~quasilab.transport.QuasimodeBuilder`; it is
    cloned and refitted when ``path`` differs from its own.
    """
    h_values = check_h_values(h_values)
    if path is not None and path != builder.path:
        builder = clone(builder).set_params(path=path)
    if not hasattr(builder, "stack_"):
        builder = clone(builder).fit()

    def measure(h):
        try:
            v = builder.assemble(h)
            margin = _margin(builder, v, h)
            if margin < MIN_MARGIN:
                return h, None, f"resolution margin {margin:.2f} < {MIN_MARGIN}"
            Pv = builder.apply_operator(v, h)
        except ResolutionError as exc:
            return h, None, str(exc)
        return h, SweepRecord(float(h), l2_norm(v), l2_norm(Pv)), None

    records, dropped = [], []
    for h, record, reason in parallel_map(measure, h_values):
        if record is None:
            warnings.warn(f"dropping h={h:.4g}: {reason}", stacklevel=2)
            dropped.append(float(h))
        else:
            records.append(record)
    if len(records) < MIN_RECORDS:
        raise ValidationError(
            f"only {len(records)} h values survived the resolution pre-flight (need {MIN_RECORDS})", "analysis"
        )
    report = SweepReport(
        records,
        truncation_order=builder.stack_.N,
        path=builder.path,
        dropped=dropped,
        amplitude_overflow=bool(builder.amplitude_overflow_),
    )
    report.fitted_slope_residual, report.r_squared = fit_decay_order(report)
    report.fitted_slope_norm = float(PowerLawFit().fit(report.h, report.norm_v).slope_)
    return report


@dataclass(frozen=True)
class NormBoundsVerdict:
    passed: bool
    upper_C: float
    lower_c: float
    required_exponent: float
    empirical_exponent: float
    offending_h: tuple = ()


def norm_bounds_check(report, part, n_transverse=1):
    """Uniform upper bound and ``|v_h| >= c h^((n alpha + beta)/2)`` lower bound.

    ``c`` is fixed at the largest ``h`` and then required at every smaller
    ``h``.
    """
    h, nv = report.h, report.norm_v
    exponent = float((n_transverse * part.alpha + part.beta) / 2)
    C = float(nv.max())
    c = float(nv[0] / h[0] ** exponent)
    bound = c * h**exponent
    offending = tuple(float(x) for x, a, b in zip(h, nv, bound) if a < b * (1 - 1e-12))
    empirical = float(PowerLawFit().fit(h, nv).slope_)
    passed = np.all(np.isfinite(nv)) and not offending
    return NormBoundsVerdict(bool(passed), C, c, exponent, empirical, offending)


@dataclass(frozen=True)
class ResolventVerdict:
    passed: bool
    bounds: tuple
    monotone: bool
    growth: float


def resolvent_lower_bound(report, min_growth=10.0):
    """``|R(h)| >= |v|/|Pv|`` along the ladder, with monotone-growth check."""
    bounds = tuple((r.h, r.ratio) for r in report.records)
    ratios = report.ratios
    monotone = bool(np.all(np.diff(ratios) > 0))
    growth = float(ratios[-1] / ratios[0])
    return ResolventVerdict(monotone and growth >= min_growth, bounds, monotone, growth)


def candidate_rates(N, part, n_transverse=1):
    """The two candidate blow-up rates: ``N`` and ``N + (2n+1) beta / 2``."""
    beta = float(part.beta)
    return {"N": float(N), "shifted": N + (2 * n_transverse + 1) * beta / 2}


@dataclass(frozen=True)
class PseudospectrumMap:
    zeta_grid: np.ndarray
    sigma_min: np.ndarray
    h: float

    @property
    def resolvent_norm(self):
        with np.errstate(divide="ignore"):
            return 1.0 / self.sigma_min

    def rows(self):
        return [(z.real, z.imag, s) for z, s in zip(self.zeta_grid.ravel(), self.sigma_min.ravel())]


def _matrix(m):
    return np.asarray(getattr(m, "matrix", m), dtype=complex)


def smallest_singular_value(M):
    return float(svdvals(M, check_finite=False)[-1])


def sigma_min_scan(matrix, zeta_grid):
    """Smallest singular value of ``M - zeta I`` for every ``zeta``."""
    M = _matrix(matrix)
    n = M.shape[0]
    if n > DENSE_LIMIT:
        raise ValidationError(f"matrix size {n} exceeds dense budget {DENSE_LIMIT}", "analysis")
    zeta_grid = np.asarray(zeta_grid, dtype=complex)
    eye = np.eye(n)
    sig = parallel_map(lambda z: smallest_singular_value(M - z * eye), zeta_grid.ravel())
    return PseudospectrumMap(zeta_grid, np.reshape(sig, zeta_grid.shape), float(getattr(matrix, "h", np.nan)))


def zeta_lattice(re_range, im_range):
    """Complex lattice from ``(lo, hi, n)`` triples."""
    re = np.linspace(*re_range[:2], int(re_range[2]))
    im = np.linspace(*im_range[:2], int(im_range[2]))
    R, I = np.meshgrid(re, im, indexing="xy")
    return R + 1j * I


@dataclass(frozen=True)
class QuasimodeVerdict:
    holds: bool
    epsilon: float
    sigma_min: float

    @property
    def resolvent_norm(self):
        return np.inf if self.sigma_min == 0 else 1.0 / self.sigma_min


def quasimode_implies_resolvent(u, matrix, zeta=0.0, rtol=1e-12):
    """Check ``sigma_min(M - zeta) <= |(M - zeta) u|`` for unit ``u``.

    ``u`` is normalized first; the inequality is the variational
    characterization of the smallest singular value.
    """
    M = _matrix(matrix) - zeta * np.eye(_matrix(matrix).shape[0])
    u = np.asarray(u, dtype=complex).ravel()
    nu = np.linalg.norm(u)
    if nu == 0:
        raise ValidationError("quasimode vector is zero", "analysis")
    u = u / nu
    eps = float(np.linalg.norm(M @ u))
    sig = smallest_singular_value(M)
    holds = sig <= eps * (1 + rtol) + 1e-14 * np.linalg.norm(M, 2)
    return QuasimodeVerdict(bool(holds), eps, sig)


def rank_one_annihilator(matrix, u):
    """Perturbation ``E = -(M u) u^*`` with ``|E| = |M u|`` and ``(M + E) u = 0``."""
    M = _matrix(matrix)
    u = np.asarray(u, dtype=complex).ravel()
    u = u / np.linalg.norm(u)
    return -np.outer(M @ u, u.conj())


def smallest_singular_pair(matrix):
    """``(sigma_min, right singular vector)`` of a dense matrix."""
    _, s, vh = svd(_matrix(matrix))
    return float(s[-1]), vh[-1].conj()


@dataclass(frozen=True)
class AprioriVerdict:
    passed: bool
    rows: tuple


def harmonic_apriori_check(h_values=(0.2, 0.1, 0.05), n=256, L=8.0, band=(0.9, 1.1)):
    """``sigma_min`` of ``h^2 D^2 + x^2`` lies in ``[0.9 h, 1.1 h]``."""
    h_values = check_h_values(h_values, decreasing=False)
    if np.any(h_values < 0.02) or np.any(h_values > 0.5):
        raise ValidationError("a-priori check runs on h in [0.02, 0.5]", "analysis")

    def row(h):
        sig = smallest_singular_value(discretize_1d("harmonic", h, n, L).matrix)
        return float(h), sig, sig / h

    rows = tuple(parallel_map(row, h_values))
    passed = all(band[0] <= r[2] <= band[1] for r in rows)
    return AprioriVerdict(passed, rows)
