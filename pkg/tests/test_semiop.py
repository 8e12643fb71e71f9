import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from quasilab import Grid2D, GridFunction, QuasimodeBuilder, ResolutionError, SubprincipalSymbol, ValidationError
from quasilab.params import make_partition
from quasilab.semiop import (
    apply_factored,
    apply_model,
    apply_reduced,
    discretize_1d,
    l2_norm,
    spectral_derivative,
)
from quasilab.transport import integrating_factor

PART = make_partition("1/5", 1)


def test_grid_validation():
    with pytest.raises(ValidationError):
        Grid2D(nt=100)
    with pytest.raises(ValidationError):
        Grid2D(nt=16)
    g = Grid2D()
    assert g.t[g.nt // 2] == 0.0
    assert g.dt == pytest.approx(2 * g.Lt / g.nt)


def test_gridfunction_rejects_nan():
    g = Grid2D(32, 32)
    with pytest.raises(ValidationError):
        GridFunction(np.full((32, 32), np.nan), g)
    with pytest.raises(ValidationError):
        GridFunction(np.zeros((32, 16)), g)


@pytest.mark.parametrize("k", [1, 3, 6])
def test_fourier_mode_derivative(k):
    g = Grid2D(64, 32, 4.0, 3.0)
    T, _ = g.mesh()
    f = GridFunction(np.exp(1j * k * np.pi * T / g.Lt), g)
    np.testing.assert_allclose(spectral_derivative(f, "t").values, (k * np.pi / g.Lt) * f.values, atol=1e-12)


def test_constant_derivative():
    g = Grid2D(64, 32)
    f = GridFunction(np.full((64, 32), 2.5 + 1j), g)
    assert np.max(np.abs(spectral_derivative(f, "x2").values)) < 1e-13


def test_gaussian_derivative():
    g = Grid2D(256, 32, 8.0, 3.0)
    T, _ = g.mesh()
    f = GridFunction(np.exp(-(T**2) / 2), g)
    expected = -1j * (-T) * np.exp(-(T**2) / 2)
    assert np.max(np.abs(spectral_derivative(f, "t").values - expected)) < 1e-10


def test_preflight_reports_required_n():
    g = Grid2D(32, 32, 1.0, 1.0)
    T, _ = g.mesh()
    f = GridFunction(np.exp(1j * 14 * np.pi * T), g)
    with pytest.raises(ResolutionError) as exc:
        spectral_derivative(f, "t")
    assert exc.value.required_n >= 128


def test_l2_examples():
    g = Grid2D(32, 32, 1.0, 1.0)
    assert l2_norm(GridFunction(np.ones((32, 32)), g)) == pytest.approx(2.0, abs=1e-14)
    assert l2_norm(GridFunction(np.zeros((32, 32)), g)) == 0.0
    g = Grid2D(256, 32, 8.0, 3.0)
    T, _ = g.mesh()
    expected = np.sqrt(np.sqrt(np.pi) * 2 * g.Lx2)
    assert l2_norm(GridFunction(np.exp(-(T**2) / 2), g)) == pytest.approx(expected, abs=1e-10)


def random_function(seed, g=Grid2D(64, 32)):
    rng = np.random.default_rng(seed)
    return GridFunction(rng.normal(size=(g.nt, g.nx2)) + 1j * rng.normal(size=(g.nt, g.nx2)), g)


@given(st.integers(0, 10**6), st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False))
def test_norm_scaling(seed, alpha):
    f = random_function(seed)
    assert abs(l2_norm(f * alpha) - abs(alpha) * l2_norm(f)) <= 1e-14 * max(1.0, abs(alpha) * l2_norm(f))


@given(st.integers(0, 10**6))
def test_parseval(seed):
    f = random_function(seed)
    coeffs = np.fft.fft2(f.values)
    spectral = np.sqrt(np.sum(np.abs(coeffs) ** 2) / f.values.size * f.grid.cell_area)
    assert l2_norm(f) == pytest.approx(spectral, abs=1e-10)


def smooth_function(seed, g=Grid2D(64, 64, 6.0, 6.0)):
    rng = np.random.default_rng(seed)
    T, X2 = g.mesh()
    c = rng.normal(size=4) + 1j * rng.normal(size=4)
    values = (c[0] + c[1] * T + c[2] * X2 + c[3] * T * X2**2) * np.exp(-(T**2 + X2**2) / 2 - 0.3j * T)
    return GridFunction(values, g)


def reflect(values):
    return np.roll(values[::-1], 1, axis=0)


@settings(max_examples=25)
@given(st.integers(0, 10**6))
def test_derivative_under_reflection_and_conjugation(seed):
    f = smooth_function(seed)
    df = spectral_derivative(f, "t").values
    # reflection alone and conjugation alone each flip the sign of D
    assert np.allclose(spectral_derivative(f.with_values(reflect(f.values)), "t").values, -reflect(df), atol=1e-10)
    assert np.allclose(spectral_derivative(f.with_values(np.conj(f.values)), "t").values, -np.conj(df), atol=1e-10)
    # so the combination commutes with D
    g = f.with_values(np.conj(reflect(f.values)))
    assert np.allclose(spectral_derivative(g, "t").values, np.conj(reflect(df)), atol=1e-10)


@pytest.fixture(scope="module")
def normalized(linear_symbol):
    return QuasimodeBuilder(linear_symbol).fit().nsym_


@pytest.mark.parametrize("h", [0.2, 0.05])
def test_integrating_factor_cancels_first_terms(normalized, h):
    builder = QuasimodeBuilder(normalized.symbol, truncation_order=0, grid=Grid2D(512, 64)).fit()
    a0 = builder.assemble(h)
    L = apply_reduced(a0, normalized, PART, h).values
    mixed = h ** 0.4 * spectral_derivative(spectral_derivative(a0, "t"), "x2").values
    flat = np.abs(a0.grid.t) < 2.5
    scale = np.max(np.abs(h**-0.2 * normalized.symbol(a0.grid.t)[:, None] * a0.values))
    assert np.max(np.abs((L - mixed)[flat])) < 1e-8 * scale


def test_reduced_single_mode_without_symbol():
    g = Grid2D(64, 32)
    zero = SubprincipalSymbol([0.0], [0.0], 1.5)
    T, _ = g.mesh()
    a = GridFunction(np.exp(1j * np.pi * T / g.Lt), g)
    out = apply_reduced(a, zero, PART, 0.1)
    np.testing.assert_allclose(out.values, 1.5 * (np.pi / g.Lt) * a.values, atol=1e-12)


def test_reduced_constant_is_multiplication(linear_symbol):
    g = Grid2D(64, 32)
    a = GridFunction(np.full((64, 32), 2.0 + 0j), g)
    out = apply_reduced(a, linear_symbol, PART, 0.1)
    expected = 0.1**-0.2 * linear_symbol(g.t)[:, None] * 2.0
    np.testing.assert_allclose(out.values, np.broadcast_to(expected, out.values.shape), atol=1e-12)


def test_reduced_rejects_tangential(linear_symbol):
    g = Grid2D(32, 32)
    with pytest.raises(ValidationError):
        apply_reduced(GridFunction(np.ones((32, 32)), g), linear_symbol, make_partition("1/7", 2), 0.1)


@pytest.mark.parametrize("h", [0.2, 0.1, 0.05])
@pytest.mark.parametrize("shape", [0, 1])
def test_conjugation_identity(normalized, h, shape):
    g = Grid2D()
    T, X2 = g.mesh()
    envelope = np.exp(-1.5 * T**2 - 3 * X2**2)
    phi = GridFunction(envelope * (1 + 0.5j * T * X2 if shape else np.cos(X2 + 0.4 * T)), g)
    E = integrating_factor(normalized, PART, h, g, 3.8)
    lhs = apply_reduced(phi.with_values(E * phi.values), normalized, PART, h).values
    b = normalized.symbol(g.t)[:, None]
    d1 = spectral_derivative(phi, "t").values
    d2 = spectral_derivative(phi, "x2").values
    d12 = spectral_derivative(spectral_derivative(phi, "t"), "x2").values
    rhs = E * (d1 - h**0.2 * b * d2 + h**0.4 * d12)
    assert np.linalg.norm(lhs - rhs) < 1e-8 * np.linalg.norm(rhs)


@pytest.mark.parametrize("h", [0.1, 0.05])
def test_model_matches_conjugated_reduced(normalized, h):
    g = Grid2D(256, 256)
    T, X2 = g.mesh()
    a = GridFunction(np.exp(-(T**2) - 3 * X2**2) * (1 + 0.3 * T), g)
    k = 1.0 / h**0.8
    v = a.with_values(np.exp(1j * k * X2) * a.values)
    lhs = np.exp(-1j * k * X2) * apply_model(v, normalized.symbol, h).values
    b = normalized.symbol(g.t)[:, None]
    d1 = spectral_derivative(a, "t").values
    d12 = spectral_derivative(spectral_derivative(a, "t"), "x2").values
    rhs = h * (b * a.values + h**0.2 * d1 + h * d12)
    assert np.linalg.norm(lhs - rhs) < 1e-8 * np.linalg.norm(rhs)


def test_model_on_pure_phase(linear_symbol):
    g = Grid2D(64, 64)
    h = 0.1
    xi2 = 4 * (np.pi / g.Lx2) * h**0.8
    sym = SubprincipalSymbol([0.0], [0.0, -1.0], xi2)
    _, X2 = g.mesh()
    v = GridFunction(3.0 * np.exp(1j * X2 * xi2 / h**0.8), g)
    expected = h * sym(g.t)[:, None] * v.values
    np.testing.assert_allclose(apply_model(v, sym, h).values, expected, atol=1e-12)


def test_model_plane_wave_without_symbol():
    g = Grid2D(64, 64)
    T, X2 = g.mesh()
    k1, k2 = 3 * np.pi / g.Lt, 5 * np.pi / g.Lx2
    v = GridFunction(np.exp(1j * (k1 * T + k2 * X2)), g)
    out = apply_model(v, SubprincipalSymbol([0.0], [0.0], 1.0), 0.3)
    np.testing.assert_allclose(out.values, 0.09 * k1 * k2 * v.values, atol=1e-12)


def factor_grid():
    return Grid2D(128, 128, 8.0, 8.0)


def test_factored_kills_gaussian():
    g = factor_grid()
    T, X2 = g.mesh()
    out = apply_factored(GridFunction(np.exp(-(T**2 + X2**2) / 2), g), 0.1)
    assert np.max(np.abs(out.values)) < 1e-12


def test_factored_kills_x2_independent():
    g = factor_grid()
    T, _ = g.mesh()
    out = apply_factored(GridFunction(np.exp(-(T**2)) * (1 + T), g), 0.3)
    assert np.max(np.abs(out.values)) < 1e-12


def test_factored_ladder_oracle():
    g = factor_grid()
    T, X2 = g.mesh()
    k = np.pi / g.Lx2
    h = 0.2
    wave = np.exp(1j * k * X2)
    v = GridFunction(T * np.exp(-(T**2) / 2) * wave, g)
    # A_-(x e^{-x^2/2}) = -i e^{-x^2/2} and D2 e^{ikx2} = k e^{ikx2}
    expected = h**2 * k * (-1j) * np.exp(-(T**2) / 2) * wave
    np.testing.assert_allclose(apply_factored(v, h).values, expected, atol=1e-12)


def test_harmonic_lowest_levels():
    M = discretize_1d("harmonic", 0.1).matrix
    assert np.allclose(M, M.conj().T)
    assert sla.eigvalsh(M)[0] == pytest.approx(0.1, abs=1e-10)
    M = discretize_1d("harmonic", 0.05, n=256, L=6.0).matrix
    assert sla.eigvalsh(M)[1] == pytest.approx(0.15, abs=1e-10)


def test_annihilation_kernel():
    m = discretize_1d("annihilation", 1.0, n=256, L=8.0)
    g = np.exp(-(m.x**2) / 2)
    assert np.linalg.norm(m.matrix @ g) / np.linalg.norm(g) < 1e-10


def test_discretize_errors(linear_symbol):
    with pytest.raises(ValidationError):
        discretize_1d("harmonic", 0.1, n=100)
    with pytest.raises(ValidationError):
        discretize_1d("subprincipal", 0.1)
    with pytest.raises(ValidationError):
        discretize_1d("biharmonic", 0.1)
    assert discretize_1d("subprincipal", 0.1, 64, 4.0, linear_symbol).n == 64
