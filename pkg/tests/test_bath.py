import numpy as np
import pytest
from scipy import integrate

from qomekit.bath import (
    BathSpec,
    LambShiftConvergenceError,
    SpectralDensity,
    bath_from_dict,
    bath_to_dict,
    lamb_shift_part,
    principal_value,
    rate_gamma,
    rate_table,
    spectral_density,
)
from qomekit.system import SIGMA_X, SIGMA_Z, SystemModel, bohr_decompose

OHMIC = SpectralDensity("ohmic", alpha=0.2, cutoff=50.0)
JC = SpectralDensity("jc", alpha=0.2, cutoff=50.0, gamma_width=0.1)


def test_spectral_density_values():
    assert spectral_density(OHMIC, 50.0) == pytest.approx(5.0, rel=1e-15)
    assert spectral_density(OHMIC, 0.0) == 0.0
    assert spectral_density(JC, 50.0) == pytest.approx(10 / (4 * np.pi**2 * 0.01), rel=1e-14)
    with pytest.raises(ValueError):
        spectral_density(OHMIC, -1.0)


def test_spectral_density_validation():
    with pytest.raises(ValueError):
        SpectralDensity("lorentz")
    with pytest.raises(ValueError):
        SpectralDensity("ohmic", alpha=-1)
    with pytest.raises(ValueError):
        SpectralDensity("jc", gamma_width=0)
    with pytest.raises(ValueError):
        BathSpec(OHMIC, temperature=0.0)


def test_rate_closed_form_value():
    bath = BathSpec(OHMIC, 0.05, coupling=1.0)
    j2 = 0.2 * 2 * 2500 / 2504
    expected = 2 * np.pi * j2 * (1 / np.expm1(40.0) + 1)
    assert rate_gamma(bath, 2.0) == pytest.approx(expected, rel=1e-14)
    assert rate_gamma(bath, 2.0) == pytest.approx(2.509, abs=5e-4)


def _rate_from_correlation(spec, temperature, omega, width=2000.0):
    """Fourier transform of B(s) = int J(nu)[coth(nu/2T) cos(nu s) - i sin(nu s)] dnu with a
    Gaussian window of width ``width`` in s; the s-integral is done in closed form."""

    def kernel(x):
        return width * np.sqrt(2 * np.pi) * np.exp(-0.5 * (width * x) ** 2)

    def integrand(nu):
        with np.errstate(over="ignore"):
            n = 1 / np.expm1(nu / temperature)
        return spectral_density(spec, nu) * ((n + 1) * kernel(omega - nu) + n * kernel(omega + nu))

    c = abs(omega)
    edges = [1e-12, max(c - 0.05, 1e-9), c, c + 0.05]
    val = sum(integrate.quad(integrand, lo, hi, limit=400, epsabs=0, epsrel=1e-11)[0] for lo, hi in zip(edges, edges[1:]))
    val += integrate.quad(integrand, edges[-1], np.inf, limit=200)[0]
    return val


@pytest.mark.parametrize("spec", [OHMIC, JC])
@pytest.mark.parametrize("omega", [2.0, -0.1, 0.7])
def test_rate_matches_correlation_fourier_transform(spec, omega):
    bath = BathSpec(spec, 0.1, coupling=1.0)
    ref = _rate_from_correlation(spec, 0.1, omega)
    assert rate_gamma(bath, omega) == pytest.approx(ref, rel=1e-5)


def test_detailed_balance_and_positivity():
    for spec in (OHMIC, JC):
        for t in (0.01, 0.05, 0.1, 1.0):
            bath = BathSpec(spec, t, coupling=0.7)
            w = np.linspace(0.01, 5, 50)
            up, down = rate_gamma(bath, w), rate_gamma(bath, -w)
            mask = up > 1e-250
            np.testing.assert_allclose(down[mask], np.exp(-w[mask] / t) * up[mask], rtol=1e-12)
            assert np.all(rate_gamma(bath, np.linspace(-5, 5, 101)) >= 0)


def test_zero_frequency_limit():
    # gamma(0) = 2 pi g^2 T lim J(w)/w = 2 pi g^2 T alpha for both forms
    for spec in (OHMIC, JC):
        bath = BathSpec(spec, 0.05, coupling=1.0)
        assert rate_gamma(bath, 0.0) == pytest.approx(2 * np.pi * 0.05 * 0.2, rel=1e-14)
        assert rate_gamma(bath, 1e-9) == pytest.approx(rate_gamma(bath, 0.0), rel=1e-6)


def test_lamb_shift_trivial_cases():
    assert lamb_shift_part(BathSpec(OHMIC, 0.1, coupling=0.0), 2.0) == 0.0
    gauss = lambda nu: np.exp(-np.asarray(nu) ** 2)
    assert abs(principal_value(gauss, 0.0, 30.0)) < 1e-14


def _pv_folded_quad(rate, w, L):
    a = L - abs(w)
    f = lambda u: -(rate(w + u) - rate(w - u)) / u if u > 0 else 0.0
    main = integrate.quad(f, 0, a, limit=2000, epsabs=1e-13, epsrel=1e-12, points=[1, 10, 100])[0]
    lo, hi = (-L, 2 * w - L) if w > 0 else (L + 2 * w, L)
    strip = integrate.quad(lambda nu: rate(nu) / (w - nu), lo, hi, epsabs=1e-14, epsrel=1e-13)[0]
    return (main + strip) / (2 * np.pi)


def _pv_subtraction_quad(rate, w, L):
    f = lambda nu: (rate(nu) - rate(w)) / (w - nu) if nu != w else 0.0
    pts = sorted({w, 0.0, w - 1, w + 1})
    body = integrate.quad(f, -L, L, points=pts, limit=4000, epsabs=1e-13, epsrel=1e-12)[0]
    return (body + rate(w) * np.log((w + L) / (L - w))) / (2 * np.pi)


def test_lamb_shift_against_independent_quadratures():
    bath = BathSpec(OHMIC, 0.1, coupling=1.0)
    rate = lambda nu: float(rate_gamma(bath, nu))
    L = 50 * 50.0
    folded = _pv_folded_quad(rate, 2.0, L)
    sub = _pv_subtraction_quad(rate, 2.0, L)
    assert folded == pytest.approx(sub, rel=1e-9)
    assert lamb_shift_part(bath, 2.0) == pytest.approx(sub, abs=1e-4)
    assert lamb_shift_part(bath, 2.0) == pytest.approx(sub, rel=1e-6)


def test_lamb_shift_scales_with_coupling_squared():
    b1 = BathSpec(JC, 0.05, coupling=1.0)
    b2 = b1.with_coupling(0.1)
    assert lamb_shift_part(b2, -1.5) == pytest.approx(0.01 * lamb_shift_part(b1, -1.5), rel=1e-6)


def test_lamb_shift_convergence_error():
    spiky = lambda nu: np.where(np.abs(np.asarray(nu) - 0.3) < 1e-9, 1e9, 0.0) + np.sin(1e6 * np.asarray(nu)) ** 2
    with pytest.raises(LambShiftConvergenceError) as exc:
        principal_value(spiky, 0.1, 10.0, panels=10, max_doublings=2)
    assert len(exc.value.estimates) == 2


def test_tabulated_matches_ohmic():
    w = np.linspace(0, 100, 100001)
    tab = SpectralDensity.tabulated(w, spectral_density(OHMIC, w))
    b_tab = BathSpec(tab, 0.05, coupling=1.0, lamb_shift_enabled=False)
    b_ref = BathSpec(OHMIC, 0.05, coupling=1.0, lamb_shift_enabled=False)
    probe = np.array([-3.0, -0.5, 0.0, 0.3, 1.0, 2.0, 7.5])
    np.testing.assert_allclose(rate_gamma(b_tab, probe), rate_gamma(b_ref, probe), rtol=1e-6)


def test_rate_table_tls():
    model = SystemModel(SIGMA_X, (SIGMA_Z,))
    bohr = bohr_decompose(model)
    bath = BathSpec(OHMIC, 0.5, coupling=0.3)
    rt = rate_table(bath, bohr)
    np.testing.assert_allclose(rt.frequencies, [-2, 0, 2])
    g = rt.gamma[:, 0, 0]
    # S(+2) raises the energy: it carries the absorption rate, suppressed by e^{-2/T}
    assert g[2] == pytest.approx(np.exp(-2 / 0.5) * g[0], rel=1e-12)
    assert g[0] == pytest.approx(rate_gamma(bath, 2.0), rel=1e-15)
    zero = rate_table(bath.with_coupling(0.0), bohr)
    assert not zero.gamma.any() and not zero.lamb.any()


def test_rate_table_channels():
    rng = np.random.default_rng(0)
    s = rng.normal(size=(3, 3))
    model = SystemModel(np.diag([0.0, 1.0, 2.5]), (s + s.T, np.diag([1.0, 0, -1])))
    bohr = bohr_decompose(model)
    bath = BathSpec(OHMIC, 0.1, lamb_shift_enabled=False)
    ind = rate_table(bath, bohr)
    cor = rate_table(bath, bohr, correlated=True)
    assert ind.gamma[:, 0, 1].sum() == 0
    np.testing.assert_allclose(cor.gamma[:, 0, 1], cor.gamma[:, 0, 0])


def test_bath_dict_round_trip():
    bath = BathSpec(JC, 0.07, 0.2, False)
    assert bath_from_dict(bath_to_dict(bath)) == bath
    assert bath_from_dict({}).coupling == 0.1
