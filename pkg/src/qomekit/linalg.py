"""Dense complex linear algebra for small open-system generators.

Vectorization is row-major: entry (i, j) of a z x z matrix sits at index
c = i*z + j of the vector. With that convention

    vec(A @ M @ B) = kron(A, I) @ kron(I, B.T) @ vec(M).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class EigenConvergenceError(RuntimeError):
    pass


class ExpmOverflowError(OverflowError):
    pass


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues in ascending order, eigenvectors as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)


def _as_square(m, name="matrix") -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    return a


def is_hermitian(h, atol: float = 1e-12) -> bool:
    h = np.asarray(h)
    return h.ndim == 2 and h.shape[0] == h.shape[1] and np.allclose(h, h.conj().T, rtol=0, atol=atol)


def _fix_phases(vecs: np.ndarray) -> np.ndarray:
    # first component with modulus > 1e-12 made real-positive
    out = vecs.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        idx = np.flatnonzero(np.abs(col) > 1e-12)
        if idx.size:
            z = col[idx[0]]
            out[:, k] = col * (abs(z) / z)
    return out


def eigh(h, *, max_sweeps: int = 100, name: str = "H") -> EigenSystem:
    """Cyclic Jacobi diagonalization of a complex Hermitian matrix.

    Sweeps run over the upper triangle in row order, so the result is fully
    deterministic. Convergence is declared once the off-diagonal Frobenius
    norm drops below 1e-14 * ||H||_F (or stalls at roundoff level).
    """
    a = _as_square(h, name)
    if not is_hermitian(a, atol=1e-12 * max(1.0, np.abs(a).max(initial=0.0))):
        raise ValueError(f"{name} is not Hermitian")
    a = 0.5 * (a + a.conj().T)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = np.linalg.norm(a)
    if scale == 0.0 or n == 1:
        return EigenSystem(np.real(np.diag(a)).copy(), v)

    offdiag = ~np.eye(n, dtype=bool)

    def off_norm(m):
        return np.linalg.norm(m[offdiag])

    target = 1e-14 * scale
    prev = np.inf
    off = off_norm(a)
    for _ in range(max_sweeps):
        if off < target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag < 1e-300:
                    continue
                app, aqq = a[p, p].real, a[q, q].real
                # skip rotations that cannot change the diagonal at working precision
                if mag < 1e-18 * (abs(app) + abs(aqq)) and mag < 1e-17 * scale:
                    a[p, q] = a[q, p] = 0.0
                    continue
                phase = apq / mag
                tau = (aqq - app) / (2.0 * mag)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                rot = np.array([[c, s * phase], [-s * np.conj(phase), c]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ rot
                a[idx, :] = rot.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                v[:, idx] = v[:, idx] @ rot
        prev, off = off, off_norm(a)
        # roundoff floor: no further progress possible
        if off >= prev and off < 1e-12 * scale:
            break
    else:
        if off >= target:
            raise EigenConvergenceError(
                f"Jacobi eigensolver did not converge for {name}: off-diagonal norm "
                f"{off:.3e} after {max_sweeps} sweeps (||{name}||_F = {scale:.3e})"
            )

    evals = np.real(np.diag(a))
    order = np.argsort(evals, kind="stable")
    evals = evals[order]
    vecs = v[:, order]
    vecs = vecs / np.linalg.norm(vecs, axis=0)
    return EigenSystem(evals, _fix_phases(vecs))


def vectorize(m) -> np.ndarray:
    a = _as_square(m)
    return a.reshape(-1).copy()


def devectorize(v) -> np.ndarray:
    v = np.asarray(v)
    z = int(round(np.sqrt(v.size)))
    if z * z != v.size:
        raise ValueError(f"vector of length {v.size} is not a vectorized square matrix")
    return v.reshape(z, z).copy()


def left_mult_super(a) -> np.ndarray:
    """Superoperator of M -> A @ M."""
    a = _as_square(a)
    return np.kron(a, np.eye(a.shape[0]))


def right_mult_super(a) -> np.ndarray:
    """Superoperator of M -> M @ A."""
    a = _as_square(a)
    return np.kron(np.eye(a.shape[0]), a.T)


def sandwich_super(a, b) -> np.ndarray:
    """Superoperator of M -> A @ M @ B."""
    a = _as_square(a)
    b = _as_square(b)
    return np.kron(a, b.T)


def commutator_super(h) -> np.ndarray:
    """Superoperator of M -> -i [H, M]."""
    return -1j * (left_mult_super(h) - right_mult_super(h))


def dissipator_super(op, rate: float = 1.0) -> np.ndarray:
    """Superoperator of M -> rate * (L M L^+ - 1/2 {L^+ L, M})."""
    op = _as_square(op)
    ldl = op.conj().T @ op
    return rate * (sandwich_super(op, op.conj().T) - 0.5 * left_mult_super(ldl) - 0.5 * right_mult_super(ldl))


def trace_functional(z: int) -> np.ndarray:
    """Row vector t with t @ vec(M) = Tr M."""
    return vectorize(np.eye(z))


def apply_super(superop, m) -> np.ndarray:
    return devectorize(np.asarray(superop) @ vectorize(m))


# Pade [13/13] coefficients
_PADE13 = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)


def expm(a, t: float = 1.0, *, scaled_norm: float = 0.5) -> np.ndarray:
    """exp(a * t) by scaling and squaring with a degree-13 Pade approximant.

    The number of squarings is chosen so the scaled 1-norm is at most
    ``scaled_norm``.
    """
    a = _as_square(a, "a")
    if not np.isfinite(t):
        raise ValueError(f"t must be finite, got {t}")
    n = a.shape[0]
    ident = np.eye(n, dtype=complex)
    if t == 0:
        return ident
    x = a * t
    if not np.all(np.isfinite(x)):
        raise ExpmOverflowError("a*t has non-finite entries")
    norm1 = np.abs(x).sum(axis=0).max()
    if norm1 == 0:
        return ident
    s = max(0, int(np.ceil(np.log2(norm1 / scaled_norm))))
    x = x / 2.0**s

    b = _PADE13
    x2 = x @ x
    x4 = x2 @ x2
    x6 = x4 @ x2
    u = x @ (x6 @ (b[13] * x6 + b[11] * x4 + b[9] * x2) + b[7] * x6 + b[5] * x4 + b[3] * x2 + b[1] * ident)
    v = x6 @ (b[12] * x6 + b[10] * x4 + b[8] * x2) + b[6] * x6 + b[4] * x4 + b[2] * x2 + b[0] * ident
    r = np.linalg.solve(v - u, v + u)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(s):
            r = r @ r
    if not np.all(np.isfinite(r)):
        raise ExpmOverflowError(f"matrix exponential overflowed: ||a*t||_1 = {norm1:.6e}")
    return r
