"""Invariant checks shared by the ``verify`` command and the test-suite.

The nested-sum Redfield tensor here is deliberately written index by index
from the component definitions, independent of the superoperator assembly in
:mod:`qomekit.generators`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bath import BathSpec, RateTable, SpectralDensity, rate_table
from .dynamics import InitialStateSpec, propagate
from .generators import qome, redfield, secular_mask, ule
from .linalg import apply_super, trace_functional
from .system import SystemModel, TlsSpec, bohr_decompose, build_tls, SIGMA_X, SIGMA_Z


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def random_hermitian(rng, z: int, scale: float = 1.0) -> np.ndarray:
    x = rng.normal(size=(z, z)) + 1j * rng.normal(size=(z, z))
    return scale * 0.5 * (x + x.conj().T)


def random_model(rng, z: int, n_channels: int = 1) -> SystemModel:
    return SystemModel(random_hermitian(rng, z), tuple(random_hermitian(rng, z) for _ in range(n_channels)))


def random_rate_table(rng, bohr, scale: float = 0.1) -> RateTable:
    """Random PSD rate matrices and Hermitian Lamb matrices for every Bohr frequency."""
    n = bohr.n_channels
    gam, lamb = [], []
    for _ in bohr.frequencies:
        x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        gam.append(scale * x @ x.conj().T)
        lamb.append(random_hermitian(rng, n, scale))
    return RateTable(np.array(bohr.frequencies), np.array(gam), np.array(lamb))


def redfield_tensor_bruteforce(bohr, rates: RateTable) -> np.ndarray:
    """R[c, d] with c = a*z + b, d = j*z + k, summed term by term over (w, nu, alpha, beta, m, l)."""
    z = bohr.dim
    s = bohr.couplings_eig
    nb = bohr.pair_bin
    n_w = len(bohr.frequencies)
    n_ch = bohr.n_channels
    half = rates.half_transform()
    idx = [rates.index_of(w, bohr.bin_tolerance) for w in bohr.frequencies]
    gam = half[idx]
    r = np.zeros((z, z, z, z), dtype=complex)
    for a in range(z):
        for b in range(z):
            for j in range(z):
                for k in range(z):
                    acc = 0j
                    for w in range(n_w):
                        for v in range(n_w):
                            for al in range(n_ch):
                                for be in range(n_ch):
                                    g = gam[w, al, be]
                                    sa, sb = s[al], s[be]
                                    # S1: w_am = w, w_bl = nu, m = j, l = k
                                    if nb[a, j] == w and nb[b, k] == v:
                                        acc += g * sb[a, j] * sa[k, b]
                                    # S2: w_ma = nu, w_ml = w, l = j, b = k
                                    if b == k:
                                        for m in range(z):
                                            if nb[m, a] == v and nb[m, j] == w:
                                                acc -= g * sa[a, m] * sb[m, j]
                                    # S3: w_am = nu, w_bl = w, m = j, l = k
                                    if nb[a, j] == v and nb[b, k] == w:
                                        acc += np.conj(g) * sa[a, j] * sb[k, b]
                                    # S4: w_mk = w, w_mb = nu, a = j
                                    if a == j:
                                        for m in range(z):
                                            if nb[m, k] == w and nb[m, b] == v:
                                                acc -= np.conj(g) * sb[k, m] * sa[m, b]
                    r[a, b, j, k] = acc
    return r.reshape(z * z, z * z)


def greedy_match_deviation(ev_a, ev_b) -> float:
    """Largest distance after greedily pairing the closest remaining eigenvalues."""
    ev_a = np.asarray(ev_a)
    ev_b = np.asarray(ev_b)
    dist = np.abs(ev_a[:, None] - ev_b[None, :])
    n = len(ev_a)
    used_a = np.zeros(n, dtype=bool)
    used_b = np.zeros(n, dtype=bool)
    order = np.argsort(dist, axis=None, kind="stable")
    worst = 0.0
    matched = 0
    for flat in order:
        i, j = divmod(int(flat), n)
        if used_a[i] or used_b[j]:
            continue
        used_a[i] = used_b[j] = True
        worst = max(worst, float(dist[i, j]))
        matched += 1
        if matched == n:
            break
    return worst


def sigma_x_example(temperature: float = 1.0, lamb_shift: bool = True):
    """H = sigma_x, S = sigma_z with an Ohmic bath; returns (bohr, redfield, qome, ule) superoperators."""
    model = SystemModel(SIGMA_X, (SIGMA_Z,))
    bohr = bohr_decompose(model)
    bath = BathSpec(SpectralDensity("ohmic", 0.2, 50.0), temperature, 0.1, lamb_shift)
    rt = rate_table(bath, bohr)
    return bohr, redfield(model, rt, bohr).superop, qome(model, rt, bohr).superoperator(), ule(model, rt, bohr).superoperator()


def check_mask_identity(n_models: int = 50, seed: int = 11, atol: float = 1e-12) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(n_models):
        z = 2 + i % 4
        model = random_model(rng, z, 1 + i % 2)
        bohr = bohr_decompose(model)
        rt = random_rate_table(rng, bohr)
        full = redfield(model, rt, bohr).superop
        sec = qome(model, rt, bohr).superoperator()
        worst = max(worst, float(np.abs(sec - secular_mask(bohr).apply(full)).max()))
    return CheckResult("mask identity", worst <= atol, f"max |QOME - mask*Redfield| = {worst:.2e} over {n_models} models")


def check_redfield_oracle(n_models: int = 20, seed: int = 5, atol: float = 1e-12) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_models):
        model = random_model(rng, 3)
        bohr = bohr_decompose(model)
        rt = random_rate_table(rng, bohr)
        r = redfield(model, rt, bohr).dissipator_part
        worst = max(worst, float(np.abs(r - redfield_tensor_bruteforce(bohr, rt)).max()))
    return CheckResult("Redfield nested-sum oracle", worst <= atol, f"max deviation {worst:.2e} over {n_models} 3-level models")


def check_trace_and_hermiticity(n_models: int = 20, seed: int = 3, atol: float = 1e-10) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst_tr = worst_h = 0.0
    for i in range(n_models):
        z = 2 + i % 4
        model = random_model(rng, z, 1 + i % 2)
        bohr = bohr_decompose(model)
        rt = random_rate_table(rng, bohr)
        t = trace_functional(z)
        for m in (redfield(model, rt, bohr).superop, qome(model, rt, bohr).superoperator(), ule(model, rt, bohr).superoperator()):
            worst_tr = max(worst_tr, float(np.abs(t @ m).max()))
            out = apply_super(m, random_hermitian(rng, z))
            worst_h = max(worst_h, float(np.linalg.norm(out - out.conj().T)))
    ok = worst_tr <= atol and worst_h <= atol
    return CheckResult("trace and Hermiticity preservation", ok, f"trace defect {worst_tr:.1e}, anti-Hermitian part {worst_h:.1e}")


def check_gksl_positivity(n_draws: int = 50, seed: int = 7, n_times: int = 200) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst_tr = worst_h = 0.0
    min_eig = np.inf
    for _ in range(n_draws):
        model = build_tls(TlsSpec(1.0, rng.uniform(0, np.pi / 4)))
        bohr = bohr_decompose(model)
        bath = BathSpec(
            SpectralDensity(rng.choice(["ohmic", "jc"]), rng.uniform(0.1, 1.0), 50.0),
            rng.uniform(0.01, 0.1),
        )
        rt = rate_table(bath, bohr)
        rho0 = InitialStateSpec(rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi)).density_matrix()
        times = np.linspace(0, 10, n_times)
        for gen in (qome(model, rt, bohr), ule(model, rt, bohr)):
            tr = propagate(gen, rho0, times, basis=bohr.eigen.eigenvectors)
            worst_tr = max(worst_tr, float(np.abs(tr.traces - 1).max()))
            worst_h = max(worst_h, float(tr.hermiticity_defect.max()))
            min_eig = min(min_eig, float(tr.min_eigs.min()))
    ok = worst_tr <= 1e-10 and worst_h <= 1e-10 and min_eig >= -1e-10
    return CheckResult(
        "GKSL trajectories stay physical",
        ok,
        f"trace defect {worst_tr:.1e}, Hermiticity defect {worst_h:.1e}, min eigenvalue {min_eig:.2e}",
    )


def check_secular_structure(tol: float = 1e-12) -> CheckResult:
    _, r, q, u = sigma_x_example()
    scale = np.abs(r).max()
    coh = [(1, 2), (2, 1)]
    q_zero = all(abs(q[c]) <= tol * scale for c in coh)
    ru_nonzero = all(abs(r[c]) > tol * scale and abs(u[c]) > tol * scale for c in coh)
    same = np.array_equal(np.abs(r) > tol * scale, np.abs(u) > tol * scale)
    return CheckResult(
        "secular structure of the sigma_x / sigma_z example",
        q_zero and ru_nonzero and same,
        f"QOME coherence coupling zero: {q_zero}; Redfield/ULE nonzero: {ru_nonzero}; same ULE/Redfield pattern: {same}",
    )


def run_all(include_scaling: bool = True) -> list[CheckResult]:
    results = [
        check_trace_and_hermiticity(),
        check_mask_identity(),
        check_redfield_oracle(),
        check_secular_structure(),
        check_gksl_positivity(),
    ]
    if include_scaling:
        from .harness import ScalingConfig, run_scaling

        rep = run_scaling(ScalingConfig())
        results.append(CheckResult("secular deviation scales as g^4", rep.passed, f"fitted slope {rep.slope:.3f} (need >= {rep.min_slope})"))
    return results
