"""Dense complex linear algebra substrate.

Everything downstream (semigroups, dilations, evolution products) runs on
plain ``numpy`` arrays of ``complex128``.  The helpers here add the input
validation and error reporting the higher layers rely on: explicit failure
instead of silent ``inf``/``nan``, condition estimates on solves, clamped
square roots for defect operators that sit numerically on the unitary
boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

# expm refuses arguments with ||t*A||_1 above this instead of overflowing;
# the double-precision exponential itself overflows near exp(709).
EXPM_NORM_CAP = 700.0

# Hermitian/PSD slack for defect operators  sqrt(1 - S*S)  with ||S|| ~ 1.
PSD_TOL = 1e-10

_EPS = np.finfo(float).eps


class SingularMatrixError(np.linalg.LinAlgError):
    """A linear solve met a matrix singular to working precision."""

    def __init__(self, message: str, cond: float = np.inf):
        super().__init__(f"{message} (condition estimate {cond:.3e})")
        self.cond = cond


class ConsistencyError(ArithmeticError):
    """Two independently computed closed forms disagreed beyond tolerance."""


def as_operator(A) -> np.ndarray:
    """Validate and return ``A`` as a square complex matrix with finite entries."""
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix contains non-finite entries")
    return A


def adjoint(A: np.ndarray) -> np.ndarray:
    """Conjugate transpose.  Exact involution: adjoint(adjoint(A)) == A."""
    return np.conj(np.asarray(A)).T


def eye(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex)


def op_norm(A) -> float:
    """Operator norm (largest singular value)."""
    A = np.asarray(A, dtype=complex)
    return float(np.linalg.norm(A, 2))


def expm(A, t: float = 1.0) -> np.ndarray:
    """Evaluate ``exp(t*A)``.

    Raises ``OverflowError`` when ``||t*A||`` exceeds ``EXPM_NORM_CAP`` or the
    result fails to be finite; a silent overflow is never returned.
    """
    A = as_operator(A)
    tA = t * A
    scale = np.linalg.norm(tA, 1)
    if scale > EXPM_NORM_CAP:
        raise OverflowError(
            f"||t*A|| = {scale:.3e} exceeds the exponential cap {EXPM_NORM_CAP}"
        )
    out = sla.expm(tA)
    if not np.all(np.isfinite(out)):
        raise OverflowError("matrix exponential produced non-finite entries")
    return out


def psd_sqrt(P) -> np.ndarray:
    """Hermitian square root of a positive semidefinite matrix.

    Eigenvalues with ``|w| <= PSD_TOL*(1+||P||)`` are clamped to exactly
    zero before the root: they are indistinguishable from zero at working
    precision, and taking the square root of such dust would amplify it to
    ``sqrt(eps)``-sized artefacts (the defect of a numerically unitary
    contraction must vanish, not become 1e-8).  Eigenvalues further below
    zero, or a Hermitian defect beyond the same tolerance, raise instead.
    The result satisfies ``||root(P)^2 - P|| <= PSD_TOL*(1+||P||)``.
    """
    P = as_operator(P)
    scale = 1.0 + op_norm(P)
    if op_norm(P - adjoint(P)) > PSD_TOL * scale:
        raise ValueError("not PSD: matrix is not Hermitian within tolerance")
    H = (P + adjoint(P)) / 2.0
    w, Q = np.linalg.eigh(H)
    if w.min() < -PSD_TOL * scale:
        raise ValueError(f"not PSD: minimal eigenvalue {w.min():.3e}")
    w = np.where(np.abs(w) <= PSD_TOL * scale, 0.0, w)
    root = (Q * np.sqrt(w)) @ adjoint(Q)
    return (root + adjoint(root)) / 2.0


def solve(A, B) -> np.ndarray:
    """Solve ``A X = B`` with an explicit singularity check.

    On failure raises :class:`SingularMatrixError` carrying the condition
    estimate of ``A``.
    """
    A = as_operator(A)
    B = np.asarray(B, dtype=complex)
    try:
        X = np.linalg.solve(A, B)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"singular solve: {exc}") from exc
    if not np.all(np.isfinite(X)):
        raise SingularMatrixError(
            "solve produced non-finite entries", cond=float(np.linalg.cond(A))
        )
    cond = float(np.linalg.cond(A))
    if cond > 1.0 / (100.0 * _EPS):
        raise SingularMatrixError("matrix singular to working precision", cond=cond)
    return X


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues together with per-pair residuals ``||A v - lambda v||``."""

    eigenvalues: np.ndarray
    residuals: np.ndarray
    tol: float

    def unimodular(self, tol: float | None = None):
        """Indices of eigenvalues on the unit circle within ``tol``."""
        tol = self.tol if tol is None else tol
        return [k for k, lam in enumerate(self.eigenvalues) if abs(abs(lam) - 1.0) <= tol]


def point_spectrum(A, tol: float = 1e-8) -> Spectrum:
    """All eigenpairs of ``A``; raises if any residual exceeds ``tol``."""
    A = as_operator(A)
    scale = max(1.0, op_norm(A))
    try:
        lams, vecs = np.linalg.eig(A)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(f"eigensolver did not converge: {exc}") from exc
    residuals = np.empty(len(lams))
    for k in range(len(lams)):
        v = vecs[:, k]
        v = v / np.linalg.norm(v)
        residuals[k] = np.linalg.norm(A @ v - lams[k] * v)
    if residuals.max(initial=0.0) > tol * scale:
        raise ArithmeticError(
            f"eigenpair residual {residuals.max():.3e} exceeds tolerance {tol:.3e}"
        )
    return Spectrum(eigenvalues=lams, residuals=residuals, tol=tol)


def random_matrix(dim: int, seed: int, scale: float = 1.0) -> np.ndarray:
    """Seeded complex Ginibre draw; the base for every random operator here."""
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return scale * G


def random_contraction(dim: int, seed: int, margin: float = 0.0) -> np.ndarray:
    """Seeded generic contraction with ``||S|| <= 1 - margin``.

    A Ginibre draw is rescaled so its largest singular value lands strictly
    below ``1 - margin``, giving a full-rank contraction at a controllable
    distance from the unitary boundary.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if not 0.0 <= margin < 1.0:
        raise ValueError("margin must lie in [0, 1)")
    G = random_matrix(dim, seed)
    top = np.linalg.norm(G, 2)
    return G * ((1.0 - margin) / (top * (1.0 + 16 * _EPS)))


def random_unitary(dim: int, seed: int) -> np.ndarray:
    """Seeded Haar-ish unitary via QR with phase normalisation."""
    G = random_matrix(dim, seed)
    Q, R = np.linalg.qr(G)
    phases = np.diag(R) / np.abs(np.diag(R))
    return Q * phases
