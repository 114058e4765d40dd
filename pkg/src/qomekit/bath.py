"""Bosonic thermal baths: spectral densities, transition rates and Lamb shifts.

The bath correlation function is the standard thermal one,

    B(s) = int_0^inf dnu J(nu) [coth(nu / 2T) cos(nu s) - i sin(nu s)],

so that the full Fourier transform gives

    gamma(w) = 2 pi g^2 J(w) (n_B(w) + 1)      w > 0
    gamma(w) = 2 pi g^2 J(|w|) n_B(|w|)        w < 0
    gamma(0) = 2 pi g^2 T lim_{w->0} J(w)/w

and the one-sided transform splits as Gamma(w) = gamma(w)/2 + i S(w) with
S(w) = (1/2pi) PV int gamma(nu) / (w - nu) dnu.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

KINDS = ("ohmic", "jc", "table")


class LambShiftConvergenceError(RuntimeError):
    def __init__(self, omega: float, previous: float, last: float):
        self.estimates = (previous, last)
        super().__init__(
            f"principal-value quadrature at w={omega:g} did not converge: "
            f"last two estimates {previous!r}, {last!r}"
        )


@dataclass(frozen=True)
class SpectralDensity:
    kind: str = "ohmic"
    alpha: float = 0.2
    cutoff: float = 50.0
    gamma_width: float = 0.1
    table: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown spectral density kind {self.kind!r}; expected one of {KINDS}")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if not self.cutoff > 0:
            raise ValueError("cutoff must be > 0")
        if self.kind == "jc" and not self.gamma_width > 0:
            raise ValueError("gamma_width must be > 0 for the JC spectral density")
        if self.kind == "table":
            tab = np.asarray(self.table, dtype=float)
            if tab.ndim != 2 or tab.shape[0] < 2 or tab.shape[1] != 2:
                raise ValueError("tabulated spectral density needs at least 2 (w, J) samples")
            if np.any(np.diff(tab[:, 0]) <= 0):
                raise ValueError("table frequencies must be strictly increasing")
            if np.any(tab[:, 1] < 0) or tab[0, 0] < 0:
                raise ValueError("table must sample J >= 0 on w >= 0")
            if tab[0, 0] == 0 and tab[0, 1] != 0:
                raise ValueError("J(0) must vanish")

    @classmethod
    def tabulated(cls, omegas, values) -> "SpectralDensity":
        return cls(kind="table", table=tuple(zip(map(float, omegas), map(float, values))))

    def _table_arrays(self):
        tab = np.asarray(self.table, dtype=float)
        return tab[:, 0], tab[:, 1]

    def reduced(self, omega) -> np.ndarray:
        """J(|w|)/|w|, continued to its limit at w = 0 (even in w)."""
        w = np.abs(np.asarray(omega, dtype=float))
        a, om = self.alpha, self.cutoff
        if self.kind == "ohmic":
            return a * om**2 / (om**2 + w**2)
        if self.kind == "jc":
            return a * om**4 / ((w**2 - om**2) ** 2 + 4 * np.pi**2 * self.gamma_width**2 * w**2 * om**2)
        xs, ys = self._table_arrays()
        j = np.interp(w, xs, ys, left=0.0, right=0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(w > 0, j / np.where(w > 0, w, 1.0), 0.0)
        if xs[0] == 0.0:
            out = np.where(w == 0, ys[1] / xs[1], out)
        return out


def spectral_density(spec: SpectralDensity, omega):
    """J(w) for w >= 0."""
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0):
        raise ValueError("spectral_density is defined for w >= 0; use rate_gamma for negative frequencies")
    if spec.kind == "table":
        xs, ys = spec._table_arrays()
        out = np.interp(w, xs, ys, left=0.0, right=0.0)
    else:
        out = w * spec.reduced(w)
    return out if out.ndim else float(out)


# g << 1: at g = 1 the default alpha range puts the Redfield generator outside the
# perturbative regime (rates and Lamb shifts comparable to the level splitting)
DEFAULT_COUPLING = 0.1


@dataclass(frozen=True)
class BathSpec:
    spectral: SpectralDensity = field(default_factory=SpectralDensity)
    temperature: float = 0.05
    coupling: float = DEFAULT_COUPLING
    lamb_shift_enabled: bool = True

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValueError(f"temperature must be > 0, got {self.temperature}")
        if self.coupling < 0:
            raise ValueError("coupling g must be >= 0")

    def with_coupling(self, g: float) -> "BathSpec":
        return BathSpec(self.spectral, self.temperature, g, self.lamb_shift_enabled)


def _thermal_weight(omega, temperature):
    """w / (1 - exp(-w/T)), equal to T at w = 0; J(w)(n_B+1) = (J/w) * this."""
    w = np.asarray(omega, dtype=float)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        denom = -np.expm1(-w / temperature)
        out = np.where(w != 0, w / np.where(w != 0, denom, 1.0), temperature)
    return out


def rate_gamma(bath: BathSpec, omega):
    if not bath.temperature > 0:
        raise ValueError("temperature must be > 0")
    w = np.asarray(omega, dtype=float)
    g2 = bath.coupling**2
    out = 2 * np.pi * g2 * bath.spectral.reduced(w) * _thermal_weight(w, bath.temperature)
    return out if out.ndim else float(out)


def _trapezoid_refinements(f, a: float, b: float, n0: int):
    """Yield successive trapezoid estimates of int_a^b f, halving the step each time."""
    x = np.linspace(a, b, n0 + 1)
    y = f(x)
    h = (b - a) / n0
    est = h * (y.sum() - 0.5 * (y[0] + y[-1]))
    n = n0
    yield est
    while True:
        h *= 0.5
        mids = a + h * (2 * np.arange(n) + 1)
        est = 0.5 * est + h * f(mids).sum()
        n *= 2
        yield est


def principal_value(rate, omega: float, nu_max: float, *, panels: int = 20000,
                    rtol: float = 1e-6, atol: float = 1e-12, max_doublings: int = 14) -> float:
    """(1/2pi) PV int_{-nu_max}^{nu_max} rate(nu) / (omega - nu) dnu.

    The part of the interval symmetric about the pole is folded onto
    u in [0, a] with integrand -(rate(w+u) - rate(w-u))/u, which is regular;
    the leftover strip is integrated directly. Both use trapezoid rules with a
    common step, doubled until successive estimates agree to ``rtol``.
    """
    omega = float(omega)
    if abs(omega) >= nu_max:
        raise ValueError("pole must lie inside the integration range")
    a = nu_max - abs(omega)
    h0 = a / panels
    d = 1e-4 * h0

    def folded(u):
        u = np.asarray(u, dtype=float)
        safe = np.where(u > 0, u, 1.0)
        slope = (rate(omega + d) - rate(omega - d)) / d
        return np.where(u > 0, -(rate(omega + u) - rate(omega - u)) / safe, -slope)

    parts = [_trapezoid_refinements(folded, 0.0, a, panels)]
    if omega != 0.0:
        lo, hi = (-nu_max, 2 * omega - nu_max) if omega > 0 else (nu_max + 2 * omega, nu_max)
        n_strip = max(1, int(np.ceil((hi - lo) / h0)))
        parts.append(_trapezoid_refinements(lambda nu: rate(nu) / (omega - nu), lo, hi, n_strip))

    prev = sum(next(p) for p in parts)
    for _ in range(max_doublings):
        est = sum(next(p) for p in parts)
        if abs(est - prev) <= rtol * abs(est) + atol:
            return est / (2 * np.pi)
        prev = est
    raise LambShiftConvergenceError(omega, prev / (2 * np.pi), est / (2 * np.pi))


def lamb_shift_part(bath: BathSpec, omega: float) -> float:
    """S(w) = Im Gamma(w), computed whether or not the bath enables the shift."""
    if bath.coupling == 0 or bath.spectral.alpha == 0:
        return 0.0
    spec = bath.spectral
    scale = spec.cutoff
    if spec.kind == "table":
        scale = max(scale, float(np.asarray(spec.table)[-1, 0]))
    nu_max = 50.0 * max(scale, abs(omega), bath.temperature)
    return principal_value(lambda nu: rate_gamma(bath, nu), omega, nu_max)


@dataclass(frozen=True, eq=False)
class RateTable:
    """gamma[w, a, b] and lamb[w, a, b] per Bohr frequency and channel pair.

    Both are Hermitian in the channel indices; Gamma_ab(w) = gamma/2 + i lamb.
    """

    frequencies: np.ndarray
    gamma: np.ndarray
    lamb: np.ndarray

    @property
    def n_channels(self) -> int:
        return self.gamma.shape[1]

    def half_transform(self) -> np.ndarray:
        return 0.5 * self.gamma + 1j * self.lamb

    def index_of(self, omega: float, tol: float) -> int:
        idx = int(np.argmin(np.abs(self.frequencies - omega)))
        if abs(self.frequencies[idx] - omega) >= tol:
            raise KeyError(f"rate table has no entry for Bohr frequency {omega!r}")
        return idx


def rate_table(bath: BathSpec, bohr, *, correlated: bool = False) -> RateTable:
    """Coefficients attached to each eigenoperator S(w) of ``bohr``.

    S(w) raises the system energy by w, so the bath must supply w: its
    coefficient is the bath transform evaluated at -w. Rates for S(w>0) are
    therefore the absorption rates gamma(-w), and the table is ordered like
    ``bohr.frequencies``.

    Channels see independent identical baths (gamma_ab = delta_ab gamma) unless
    ``correlated``, in which case all channels share a single bath.
    """
    freqs = np.asarray(bohr.frequencies, dtype=float)
    n = bohr.n_channels
    block = np.ones((n, n)) if correlated else np.eye(n)
    g = np.asarray(rate_gamma(bath, -freqs), dtype=float).reshape(-1)
    if bath.lamb_shift_enabled:
        s = np.array([lamb_shift_part(bath, -w) for w in freqs])
    else:
        s = np.zeros_like(freqs)
    return RateTable(freqs.copy(), g[:, None, None] * block, s[:, None, None] * block)


# JSON config: {"kind", "alpha", "Omega", "Gamma", "T", "g", "lamb_shift", "table"}


def bath_from_dict(doc: dict) -> BathSpec:
    kind = doc.get("kind", "ohmic")
    spectral = SpectralDensity(
        kind=kind,
        alpha=float(doc.get("alpha", 0.2)),
        cutoff=float(doc.get("Omega", 50.0)),
        gamma_width=float(doc.get("Gamma", 0.1)),
        table=tuple(tuple(map(float, row)) for row in doc.get("table", ())),
    )
    return BathSpec(
        spectral=spectral,
        temperature=float(doc.get("T", 0.05)),
        coupling=float(doc.get("g", DEFAULT_COUPLING)),
        lamb_shift_enabled=bool(doc.get("lamb_shift", True)),
    )


def bath_to_dict(bath: BathSpec) -> dict:
    s = bath.spectral
    doc = {
        "kind": s.kind,
        "alpha": s.alpha,
        "Omega": s.cutoff,
        "Gamma": s.gamma_width,
        "T": bath.temperature,
        "g": bath.coupling,
        "lamb_shift": bath.lamb_shift_enabled,
    }
    if s.kind == "table":
        doc["table"] = [list(row) for row in s.table]
    return doc
