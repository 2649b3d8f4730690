"""Dense complex kernels for the 2x2 (system) and 4x4 (universe) objects.

Basis convention for the two-spin space is fixed globally as
``(|uu>, |du>, |ud>, |dd>)``: the FIRST tensor slot (spin 1, the system) is
the fastest-varying index, so a universe index reads ``i1 + 2 * i2``.
Every tensor product and partial trace in the package goes through this
module so the convention lives in exactly one place.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

SIGMA0 = np.eye(2, dtype=complex)
SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SIGMA1, SIGMA2, SIGMA3)
# sigma^mu for mu = 0..3, sigma^0 the identity
SIGMA = (SIGMA0, SIGMA1, SIGMA2, SIGMA3)

_HERMITIAN_TOL = 1e-10
# relative slack when comparing moduli for the phase convention; keeps the
# choice deterministic when two components are equal up to rounding
_PHASE_TIE_TOL = 1e-12


class NotHermitianError(ValueError):
    """Raised when a Hermitian-only routine receives a non-Hermitian matrix."""


def adjoint(x: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(x, -1, -2))


def tensor_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Return ``a (x) b`` with ``a`` acting on spin 1 (fast index) and ``b`` on spin 2.

    ``result[2*k + i, 2*l + j] = a[i, j] * b[k, l]``.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != (2, 2) or b.shape != (2, 2):
        raise ValueError(f"tensor_product expects two 2x2 matrices, got {a.shape} and {b.shape}")
    return np.kron(b, a)


def kron_state(u: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Product state ``u (x) w`` in the universe basis (``u`` on spin 1)."""
    return np.kron(np.asarray(w, dtype=complex), np.asarray(u, dtype=complex))


def partial_trace_env(x: np.ndarray) -> np.ndarray:
    """Trace out spin 2 (the environment) from a 4x4 operator.

    Works on stacks of shape ``(..., 4, 4)``.
    """
    x = np.asarray(x, dtype=complex)
    if x.shape[-2:] != (4, 4):
        raise ValueError(f"partial_trace_env expects (..., 4, 4), got {x.shape}")
    blocks = x.reshape(x.shape[:-2] + (2, 2, 2, 2))
    # blocks[..., k, i, l, j] = x[2k + i, 2l + j]
    return np.einsum("...kikj->...ij", blocks)


def reduced_outer(ket: np.ndarray, bra: np.ndarray) -> np.ndarray:
    """``tr_2 |ket><bra|`` without forming the 4x4 outer product."""
    k = np.asarray(ket, dtype=complex).reshape(2, 2)
    b = np.asarray(bra, dtype=complex).reshape(2, 2)
    # rows index spin 2, columns spin 1
    return k.T @ b.conj()


def _fix_phase(v: np.ndarray) -> np.ndarray:
    """Rotate ``v`` so its largest-modulus component is real positive."""
    mags = np.abs(v)
    k = int(np.argmax(mags >= mags.max() * (1.0 - _PHASE_TIE_TOL)))
    if mags[k] == 0.0:
        return v
    return v * (np.conj(v[k]) / mags[k])


def fix_column_phases(m: np.ndarray) -> np.ndarray:
    """Apply the largest-component-real-positive convention to every column."""
    out = np.array(m, dtype=complex)
    for j in range(out.shape[1]):
        out[:, j] = _fix_phase(out[:, j])
    return out


def herm_eigen(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvector columns of a Hermitian matrix.

    Each eigenvector is phased so that its largest-modulus component is real
    and positive, which makes results reproducible across LAPACK builds.
    """
    x = np.asarray(x, dtype=complex)
    scale = max(np.linalg.norm(x), 1e-300)
    asym = np.linalg.norm(x - adjoint(x))
    if asym > _HERMITIAN_TOL * scale:
        raise NotHermitianError(f"matrix is not Hermitian: ||X - X^+|| = {asym:.3e}, ||X|| = {scale:.3e}")
    vals, vecs = np.linalg.eigh(0.5 * (x + adjoint(x)))
    return vals, fix_column_phases(vecs)


def expm(x: np.ndarray) -> np.ndarray:
    """Matrix exponential.

    Hermitian and anti-Hermitian inputs go through an eigendecomposition, so
    ``expm(-iH dt)`` is unitary to rounding. Everything else uses scipy's
    scaling-and-squaring Pade implementation.
    """
    x = np.asarray(x, dtype=complex)
    scale = np.linalg.norm(x)
    if scale == 0.0:
        return np.eye(x.shape[0], dtype=complex)
    tol = 1e-14 * scale
    if np.linalg.norm(x - adjoint(x)) <= tol:
        vals, vecs = np.linalg.eigh(0.5 * (x + adjoint(x)))
        return (vecs * np.exp(vals)) @ adjoint(vecs)
    if np.linalg.norm(x + adjoint(x)) <= tol:
        # x = iK with K Hermitian
        k = -0.5j * (x - adjoint(x))
        vals, vecs = np.linalg.eigh(k)
        return (vecs * np.exp(1j * vals)) @ adjoint(vecs)
    return scipy.linalg.expm(x)


def trace_distance(rho1: np.ndarray, rho2: np.ndarray) -> float:
    """Half the trace norm of ``rho1 - rho2``."""
    diff = np.asarray(rho1, dtype=complex) - np.asarray(rho2, dtype=complex)
    diff = 0.5 * (diff + adjoint(diff))
    return float(0.5 * np.abs(np.linalg.eigvalsh(diff)).sum())


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a
