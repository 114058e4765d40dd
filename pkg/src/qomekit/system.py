"""System Hamiltonians, coupling operators and their Bohr-frequency decomposition."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .linalg import EigenSystem, eigh, is_hermitian

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True, eq=False)
class SystemModel:
    hamiltonian: np.ndarray
    couplings: tuple[np.ndarray, ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        h = np.asarray(self.hamiltonian, dtype=complex)
        if not is_hermitian(h, atol=1e-12):
            raise ValueError("hamiltonian must be Hermitian")
        if len(self.couplings) == 0:
            raise ValueError("at least one coupling operator is required")
        ops = tuple(np.asarray(s, dtype=complex) for s in self.couplings)
        for k, s in enumerate(ops):
            if s.shape != h.shape:
                raise ValueError(f"coupling {k} has shape {s.shape}, hamiltonian has {h.shape}")
            if not is_hermitian(s, atol=1e-12):
                raise ValueError(f"coupling {k} must be Hermitian")
        labels = tuple(self.labels) or tuple(f"S{k}" for k in range(len(ops)))
        if len(labels) != len(ops):
            raise ValueError("labels and couplings differ in length")
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "couplings", ops)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def n_channels(self) -> int:
        return len(self.couplings)


@dataclass(frozen=True)
class TlsSpec:
    energy: float = 1.0
    mixing_angle: float = 0.0

    def __post_init__(self):
        if not self.energy > 0:
            raise ValueError(f"TLS energy must be positive, got {self.energy}")


def build_tls(spec: TlsSpec, coupling=None) -> SystemModel:
    """H = E (cos(phi) sigma_z + sin(phi) sigma_x), coupled through sigma_z unless overridden."""
    h = spec.energy * (np.cos(spec.mixing_angle) * SIGMA_Z + np.sin(spec.mixing_angle) * SIGMA_X)
    s = SIGMA_Z if coupling is None else np.asarray(coupling, dtype=complex)
    return SystemModel(h, (s,), ("sz" if coupling is None else "S0",))


def default_bin_tolerance(eigenvalues) -> float:
    ev = np.asarray(eigenvalues)
    return 1e-9 * (ev.max() - ev.min() + 1.0)


@dataclass(frozen=True, eq=False)
class BohrDecomposition:
    """Eigenoperators S_alpha(omega) in the eigenbasis of H.

    ``eigenops[a, w]`` holds S_a(frequencies[w]); ``pair_bin[j, k]`` is the
    index into ``frequencies`` of the bin containing eps_j - eps_k.
    """

    eigen: EigenSystem
    frequencies: np.ndarray
    eigenops: np.ndarray
    couplings_eig: np.ndarray
    pair_bin: np.ndarray
    bin_tolerance: float
    labels: tuple[str, ...] = field(default=())

    @property
    def dim(self) -> int:
        return self.eigen.dim

    @property
    def n_channels(self) -> int:
        return self.eigenops.shape[0]

    @property
    def bohr_matrix(self) -> np.ndarray:
        """Exact differences eps_j - eps_k."""
        ev = self.eigen.eigenvalues
        return ev[:, None] - ev[None, :]

    def frequency_index(self, omega: float) -> int:
        idx = int(np.argmin(np.abs(self.frequencies - omega)))
        if abs(self.frequencies[idx] - omega) >= self.bin_tolerance:
            raise KeyError(f"no Bohr frequency within {self.bin_tolerance:g} of {omega!r}")
        return idx

    def eigenop(self, channel: int, omega: float) -> np.ndarray:
        return self.eigenops[channel, self.frequency_index(omega)]

    def to_lab(self, m) -> np.ndarray:
        u = self.eigen.eigenvectors
        return u @ m @ u.conj().T

    def to_eigen(self, m) -> np.ndarray:
        u = self.eigen.eigenvectors
        return u.conj().T @ m @ u


def _bin_frequencies(values: np.ndarray, tol: float):
    """Cluster sorted values; adjacent values closer than tol merge. Returns (means, labels)."""
    order = np.argsort(values, kind="stable")
    sorted_vals = values[order]
    labels_sorted = np.zeros(len(values), dtype=int)
    clusters = [[sorted_vals[0]]]
    for k in range(1, len(sorted_vals)):
        if sorted_vals[k] - sorted_vals[k - 1] < tol:
            clusters[-1].append(sorted_vals[k])
        else:
            clusters.append([sorted_vals[k]])
        labels_sorted[k] = len(clusters) - 1
    labels = np.empty_like(labels_sorted)
    labels[order] = labels_sorted
    return np.array([np.mean(c) for c in clusters]), labels


def bohr_decompose(model: SystemModel, bin_tolerance: float | None = None) -> BohrDecomposition:
    eig = eigh(model.hamiltonian, name="hamiltonian")
    if bin_tolerance is None:
        bin_tolerance = default_bin_tolerance(eig.eigenvalues)
    if not bin_tolerance > 0:
        raise ValueError("bin_tolerance must be positive")
    z = model.dim
    ev = eig.eigenvalues
    diffs = (ev[:, None] - ev[None, :]).reshape(-1)
    freqs, labels = _bin_frequencies(diffs, bin_tolerance)
    pair_bin = labels.reshape(z, z)

    u = eig.eigenvectors
    s_eig = np.array([u.conj().T @ s @ u for s in model.couplings])
    ops = np.zeros((model.n_channels, len(freqs), z, z), dtype=complex)
    for w in range(len(freqs)):
        mask = pair_bin == w
        ops[:, w][:, mask] = s_eig[:, mask]
    return BohrDecomposition(eig, freqs, ops, s_eig, pair_bin, float(bin_tolerance), model.labels)


# JSON ingestion: matrices as row-major nested arrays of [re, im] pairs.


def matrix_from_json(rows) -> np.ndarray:
    a = np.asarray(rows, dtype=float)
    if a.ndim != 3 or a.shape[-1] != 2:
        raise ValueError("matrix must be a nested array of [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def matrix_to_json(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(x.real), float(x.imag)] for x in row] for row in m]


def model_from_dict(doc: dict) -> SystemModel:
    if "tls" in doc:
        tls = doc["tls"]
        spec = TlsSpec(float(tls.get("E", 1.0)), float(tls.get("phi", 0.0)))
        coupling = doc.get("couplings")
        return build_tls(spec, None if coupling is None else matrix_from_json(coupling[0]))
    h = matrix_from_json(doc["hamiltonian"])
    couplings = tuple(matrix_from_json(c) for c in doc["couplings"])
    return SystemModel(h, couplings, tuple(doc.get("labels", ())))


def model_to_dict(model: SystemModel) -> dict:
    return {
        "hamiltonian": matrix_to_json(model.hamiltonian),
        "couplings": [matrix_to_json(s) for s in model.couplings],
        "labels": list(model.labels),
    }


def load_model(path) -> SystemModel:
    return model_from_dict(json.loads(Path(path).read_text()))
