"""Redfield, secular (QOME) and universal Lindblad (ULE) master equations for small open quantum systems."""

from .bath import BathSpec, SpectralDensity, rate_gamma, rate_table, lamb_shift_part
from .dynamics import InitialStateSpec, Trajectory, propagate, pauli_expectations, trace_distance
from .generators import qome, redfield, secular_mask, ule
from .linalg import eigh, expm
from .system import SystemModel, TlsSpec, bohr_decompose, build_tls

__version__ = "0.1.0"
