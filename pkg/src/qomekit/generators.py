"""Redfield, secular (quantum optical) and universal Lindblad generators.

Everything here lives in the eigenbasis of the system Hamiltonian and uses
the row-major vectorization of :mod:`qomekit.linalg`. Index c = i*z + j of a
superoperator carries the Bohr frequency omega_c = eps_i - eps_j.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .bath import RateTable
from .linalg import (
    commutator_super,
    dissipator_super,
    eigh,
    left_mult_super,
    right_mult_super,
    sandwich_super,
)
from .system import BohrDecomposition, SystemModel, matrix_to_json

RATE_CLIP = 1e-12


class NegativeRateError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class RedfieldGenerator:
    hamiltonian_part: np.ndarray
    dissipator_part: np.ndarray

    @property
    def superop(self) -> np.ndarray:
        return self.hamiltonian_part + self.dissipator_part


@dataclass(frozen=True, eq=False)
class LindbladGenerator:
    """-i[h_eff, rho] + sum_k rate_k (L_k rho L_k^+ - 1/2 {L_k^+ L_k, rho})."""

    h_eff: np.ndarray
    jumps: tuple[tuple[float, np.ndarray], ...]
    labels: tuple[tuple[int, float | None], ...] = ()
    kind: str = "lindblad"

    def superoperator(self) -> np.ndarray:
        out = commutator_super(self.h_eff)
        for rate, op in self.jumps:
            if rate != 0.0:
                out = out + dissipator_super(op, rate)
        return out

    @property
    def superop(self) -> np.ndarray:
        return self.superoperator()


def _rates_aligned(rates: RateTable, bohr: BohrDecomposition) -> np.ndarray:
    """Half transforms Gamma[w, a, b] ordered like bohr.frequencies."""
    if rates.n_channels != bohr.n_channels:
        raise ValueError(f"rate table has {rates.n_channels} channels, model has {bohr.n_channels}")
    half = rates.half_transform()
    idx = []
    for w in bohr.frequencies:
        try:
            idx.append(rates.index_of(w, bohr.bin_tolerance))
        except KeyError:
            raise KeyError(f"missing rate for Bohr frequency {w!r}") from None
    return half[idx]


def hamiltonian_superop(bohr: BohrDecomposition) -> np.ndarray:
    """-i diag(omega_c) with the exact Bohr frequencies."""
    return np.diag(-1j * bohr.bohr_matrix.reshape(-1))


def redfield(model: SystemModel, rates: RateTable, bohr: BohrDecomposition) -> RedfieldGenerator:
    """Full (non-secular) Redfield generator.

    With Lambda_a = sum_{w, b} Gamma_ab(w) S_b(w) and sum_nu S_a(nu)^+ = S_a,

        R rho = sum_a Lambda_a rho S_a - S_a Lambda_a rho + H.c.
    """
    if model.dim != bohr.dim:
        raise ValueError("model and Bohr decomposition dimensions differ")
    gam = _rates_aligned(rates, bohr)
    z = bohr.dim
    r = np.zeros((z * z, z * z), dtype=complex)
    for a in range(bohr.n_channels):
        lam = np.einsum("wb,bwij->ij", gam[:, a, :], bohr.eigenops)
        s_dag = bohr.eigenops[a].sum(axis=0).conj().T
        lam_dag = lam.conj().T
        r += sandwich_super(lam, s_dag) + sandwich_super(s_dag.conj().T, lam_dag)
        r -= left_mult_super(s_dag @ lam) + right_mult_super(lam_dag @ s_dag.conj().T)
    return RedfieldGenerator(hamiltonian_superop(bohr), r)


@dataclass(frozen=True, eq=False)
class SecularMask:
    """kept[c, d] is True when omega_c and omega_d coincide within ``tol``."""

    kept: np.ndarray
    omegas: np.ndarray
    set_d: dict = field(default_factory=dict)
    tol: float = 0.0

    def apply(self, superop) -> np.ndarray:
        return np.where(self.kept, superop, 0.0)


def _vector_omegas(bohr: BohrDecomposition) -> np.ndarray:
    # binned representative per vector index, so the mask agrees with S(w) grouping
    return bohr.frequencies[bohr.pair_bin.reshape(-1)]


def secular_mask(bohr: BohrDecomposition, z: int | None = None, tol: float | None = None) -> SecularMask:
    z = bohr.dim if z is None else z
    if z != bohr.dim:
        raise ValueError("z does not match the Bohr decomposition")
    tol = bohr.bin_tolerance if tol is None else tol
    if not tol > 0:
        raise ValueError("tol must be positive")
    om = _vector_omegas(bohr)
    kept = np.abs(om[:, None] - om[None, :]) < tol
    set_d = {}
    for c, w in enumerate(om):
        key = 0.0 if abs(w) < tol else float(bohr.frequencies[bohr.pair_bin.reshape(-1)[c]])
        set_d.setdefault(key, []).append(c)
    return SecularMask(kept, om, {k: tuple(v) for k, v in sorted(set_d.items())}, tol)


def pole_index_set(bohr: BohrDecomposition, pole: float | str = "incoherent", tol: float | None = None) -> tuple[int, ...]:
    """Index set D for an incoherent pole (omega_d = 0) or a coherent pole at frequency ``pole``."""
    tol = bohr.bin_tolerance if tol is None else tol
    om = _vector_omegas(bohr)
    if pole == "incoherent":
        d = np.flatnonzero(np.abs(om) < tol)
    else:
        w = float(pole)
        d = np.flatnonzero((np.abs(om - w) < tol) & (np.abs(om) >= tol))
    return tuple(int(i) for i in d)


def reduced_matrix(full: RedfieldGenerator, bohr: BohrDecomposition, pole: float | str = "incoherent") -> np.ndarray:
    """The generator restricted to the index set D of the given pole class."""
    d = pole_index_set(bohr, pole)
    if not d:
        raise ValueError(f"index set D is empty for pole {pole!r}")
    m = full.superop
    return m[np.ix_(d, d)]


def _diagonalize_rates(gamma_w: np.ndarray, omega: float):
    es = eigh(gamma_w, name=f"gamma({omega:g})")
    vals = es.eigenvalues.copy()
    if np.any(vals < -RATE_CLIP):
        raise NegativeRateError(
            f"rate matrix at w={omega:g} has negative eigenvalue {vals.min():.3e}"
        )
    vals[vals < 0] = 0.0
    return vals, es.eigenvectors


def _rotated_ops(bohr: BohrDecomposition, w: int, vecs: np.ndarray) -> np.ndarray:
    # S_q(w) = sum_b conj(U_bq) S_b(w)
    return np.einsum("bq,bij->qij", vecs.conj(), bohr.eigenops[:, w])


def secular_lamb_shift(rates: RateTable, bohr: BohrDecomposition) -> np.ndarray:
    """H_LS = sum_w sum_ab lamb_ab(w) S_a(w)^+ S_b(w)."""
    gam = _rates_aligned(rates, bohr)
    # Gamma = gamma/2 + i*lamb with lamb Hermitian in the channel indices
    lamb = (gam - gam.conj().swapaxes(1, 2)) / 2j
    ops = bohr.eigenops
    h = np.einsum("wab,awki,bwkj->ij", lamb, ops.conj(), ops)
    return 0.5 * (h + h.conj().T)


def qome(model: SystemModel, rates: RateTable, bohr: BohrDecomposition) -> LindbladGenerator:
    """Secular master equation: one jump per Bohr frequency and rate eigenchannel."""
    gam = _rates_aligned(rates, bohr)
    jumps, labels = [], []
    for w, omega in enumerate(bohr.frequencies):
        vals, vecs = _diagonalize_rates(gam[w] + gam[w].conj().T, omega)
        ops = _rotated_ops(bohr, w, vecs)
        for q in range(len(vals)):
            jumps.append((float(vals[q]), ops[q]))
            labels.append((q, float(omega)))
    h_eff = np.diag(bohr.eigen.eigenvalues).astype(complex) + secular_lamb_shift(rates, bohr)
    return LindbladGenerator(h_eff, tuple(jumps), tuple(labels), kind="qome")


def ule(model: SystemModel, rates: RateTable, bohr: BohrDecomposition, *, lamb_shift: bool = False) -> LindbladGenerator:
    """Universal Lindblad equation: L_q = sum_w sqrt(gamma_q(w)) S_q(w), unit rate.

    With ``lamb_shift`` the secular Lamb-shift Hamiltonian is added to h_eff.
    """
    gam = _rates_aligned(rates, bohr)
    z = bohr.dim
    n = bohr.n_channels
    ops = np.zeros((n, z, z), dtype=complex)
    for w, omega in enumerate(bohr.frequencies):
        vals, vecs = _diagonalize_rates(gam[w] + gam[w].conj().T, omega)
        ops += np.sqrt(vals)[:, None, None] * _rotated_ops(bohr, w, vecs)
    h_eff = np.diag(bohr.eigen.eigenvalues).astype(complex)
    if lamb_shift:
        h_eff = h_eff + secular_lamb_shift(rates, bohr)
    jumps = tuple((1.0, ops[q]) for q in range(n))
    return LindbladGenerator(h_eff, jumps, tuple((q, None) for q in range(n)), kind="ule")


# Serialization: superoperators as nested [re, im] arrays.


def superop_to_json(m) -> list:
    return matrix_to_json(m)


def generator_to_dict(gen) -> dict:
    if isinstance(gen, RedfieldGenerator):
        return {
            "kind": "redfield",
            "superoperator": superop_to_json(gen.superop),
            "hamiltonian_part": superop_to_json(gen.hamiltonian_part),
            "dissipator_part": superop_to_json(gen.dissipator_part),
        }
    return {
        "kind": gen.kind,
        "h_eff": matrix_to_json(gen.h_eff),
        "jumps": [
            {"channel": q, "omega": w, "rate": rate, "operator": matrix_to_json(op)}
            for (rate, op), (q, w) in zip(gen.jumps, gen.labels)
        ],
        "superoperator": superop_to_json(gen.superoperator()),
    }


def generator_to_json(gen, **kwargs) -> str:
    return json.dumps(generator_to_dict(gen), **kwargs)
