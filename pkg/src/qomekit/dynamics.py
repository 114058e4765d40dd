"""Density-matrix propagation, Pauli expectations and trace distance."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .linalg import devectorize, expm, is_hermitian, vectorize
from .system import SIGMA_X, SIGMA_Y, SIGMA_Z


@dataclass(frozen=True)
class InitialStateSpec:
    theta: float = 0.0
    varphi: float = 0.0

    def ket(self) -> np.ndarray:
        return np.array([np.cos(self.theta / 2), np.exp(1j * self.varphi) * np.sin(self.theta / 2)])

    def density_matrix(self) -> np.ndarray:
        psi = self.ket()
        return np.outer(psi, psi.conj())


def check_density_matrix(rho, atol: float = 1e-12) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if not is_hermitian(rho, atol=atol):
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > atol:
        raise ValueError(f"density matrix trace is {np.trace(rho).real:.15g}, expected 1")
    if np.linalg.eigvalsh(rho).min() < -1e-10:
        raise ValueError("density matrix has a negative eigenvalue")
    return rho


def min_eigenvalue(rho) -> float:
    rho = np.asarray(rho)
    return float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    label: str = ""
    metadata: dict = field(default_factory=dict)

    @property
    def traces(self) -> np.ndarray:
        return np.real(np.trace(self.states, axis1=1, axis2=2))

    @property
    def min_eigs(self) -> np.ndarray:
        return np.array([min_eigenvalue(r) for r in self.states])

    @property
    def hermiticity_defect(self) -> np.ndarray:
        return np.array([np.linalg.norm(r - r.conj().T) for r in self.states])

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def _superop_of(gen) -> np.ndarray:
    if isinstance(gen, np.ndarray):
        return gen
    if hasattr(gen, "superoperator"):
        return gen.superoperator()
    return gen.superop


def propagate(gen, rho0, times, *, basis=None, label: str = "") -> Trajectory:
    """rho(t) = devec(exp(M t) vec(rho0)) on the requested times.

    ``gen`` is a superoperator matrix or any generator object. If ``basis`` (the
    eigenvector matrix of the generator's frame) is given, rho0 is taken in the
    lab basis and states are returned in the lab basis.
    """
    m = _superop_of(gen)
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or times[0] != 0.0:
        raise ValueError("times must be a 1-d grid starting at 0")
    if np.any(np.diff(times) < 0):
        raise ValueError("times must be ascending")
    rho0 = check_density_matrix(rho0, atol=1e-10)
    u = None if basis is None else np.asarray(basis)
    start = rho0 if u is None else u.conj().T @ rho0 @ u

    # one exponential per distinct step, reused on uniform grids
    steps: dict[float, np.ndarray] = {}
    vec = vectorize(start)
    out = np.empty((times.size,) + rho0.shape, dtype=complex)
    out[0] = rho0
    for k in range(1, times.size):
        dt = times[k] - times[k - 1]
        key = round(dt, 12)
        if key not in steps:
            steps[key] = expm(m, dt)
        vec = steps[key] @ vec
        rho = devectorize(vec)
        out[k] = rho if u is None else u @ rho @ u.conj().T
    traj = Trajectory(times, out, label)
    violation = max(0.0, -float(traj.min_eigs.min()))
    traj.metadata["positivity_violation"] = violation
    return traj


def final_state(gen, rho0, t: float, *, basis=None) -> np.ndarray:
    """rho(t) from a single exponential."""
    m = _superop_of(gen)
    u = None if basis is None else np.asarray(basis)
    start = rho0 if u is None else u.conj().T @ rho0 @ u
    rho = devectorize(expm(m, t) @ vectorize(start))
    return rho if u is None else u @ rho @ u.conj().T


def pauli_expectations(traj) -> np.ndarray:
    """(3, n_times) array of <sigma_x>, <sigma_y>, <sigma_z> in the lab basis."""
    states = traj.states if isinstance(traj, Trajectory) else np.asarray(traj)
    if states.ndim == 2:
        states = states[None]
    if states.shape[-1] != 2:
        raise ValueError("Pauli expectations need a two-level system")
    return np.array(
        [np.real(np.einsum("ij,tji->t", p, states)) for p in (SIGMA_X, SIGMA_Y, SIGMA_Z)]
    )


def trace_distance(rho, sigma) -> float:
    """Half the sum of singular values of rho - sigma."""
    rho = np.asarray(rho)
    sigma = np.asarray(sigma)
    if rho.shape != sigma.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    return float(0.5 * np.linalg.svd(rho - sigma, compute_uv=False).sum())


TRAJECTORY_HEADER = ("time", "sx", "sy", "sz", "trace", "min_eig", "trace_dist_ref")


def write_trajectory_csv(path, traj: Trajectory, reference: Trajectory | None = None) -> None:
    """CSV with header time,sx,sy,sz,trace,min_eig[,trace_dist_ref]."""
    header = list(TRAJECTORY_HEADER if reference is not None else TRAJECTORY_HEADER[:-1])
    z = traj.states.shape[-1]
    paulis = pauli_expectations(traj) if z == 2 else np.full((3, traj.times.size), np.nan)
    traces, mins = traj.traces, traj.min_eigs
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for k, t in enumerate(traj.times):
            row = [t, *paulis[:, k], traces[k], mins[k]]
            if reference is not None:
                row.append(trace_distance(traj.states[k], reference.states[k]))
            w.writerow([format(float(x), ".17g") for x in row])
