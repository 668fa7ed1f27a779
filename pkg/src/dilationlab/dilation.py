"""Truncated isometric and unitary dilations of contractions.

For a contraction ``S`` on C^n and a truncation depth ``M`` the dilation
space is built in two stages:

* the isometry ``W`` acts on ``C^n (x) C^M`` (level-major layout: vector
  index = ``level*n + i``) as ``S`` on level 0, the defect
  ``D = sqrt(1 - S*S)`` into level 1, and an upward shift on levels
  ``1..M-2``; the shift column at the deepest level is zero, so all
  exactness statements live on levels ``0..M-2``;
* the unitary ``U = [[W, 1 - W W*], [0, W*]]`` acts on two copies
  (component-major layout: index = ``component*n*M + level*n + i``).

Compression by the embedding ``r1`` (component 0, level 0) recovers ``S``
exactly, and products of powers of the ``U``'s across a whole family of
contractions compress to the matching products of the ``S``'s, as long as
the total word degree stays at most ``M - 2``.

The continuous-time layer feeds the co-generator ``V`` of a semigroup into
the same construction and recovers a one-parameter evolution from the
inverse transform ``B = 1 - 2 (1 - U)^{-1}``.  Because the lower-left block
of ``U`` is structurally zero and the level structure of ``W`` is causal,
the compression of ``exp(t*B)`` reproduces ``T(t)`` at machine precision at
every depth; the truncation is only visible in the norm leakage of vectors
evolved deep into the ladder.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import (
    ConsistencyError,
    adjoint,
    as_operator,
    expm,
    eye,
    op_norm,
    point_spectrum,
    psd_sqrt,
    random_matrix,
    solve,
)
from .semigroup import (
    ContractionSemigroup,
    PolyApprox,
    YosidaConstants,
    cogenerator,
    poly_apply,
    poly_coeffs,
)

CONTRACTION_TOL = 1e-10


def embedding_r0(n: int, M: int) -> np.ndarray:
    """Isometry C^n -> C^(n*M) onto level 0 (exact 0/1 entries)."""
    r = np.zeros((n * M, n), dtype=complex)
    r[:n, :] = np.eye(n)
    return r


def embedding_r1(n: int, M: int) -> np.ndarray:
    """Isometry C^n -> C^(2*n*M) onto component 0, level 0."""
    r = np.zeros((2 * n * M, n), dtype=complex)
    r[:n, :] = np.eye(n)
    return r


def compress(U, r) -> np.ndarray:
    """``r* U r``: the corner of ``U`` seen through the isometry ``r``."""
    return adjoint(r) @ np.asarray(U, dtype=complex) @ r


def nagy_isometry(S, M: int) -> np.ndarray:
    """Truncated dilation isometry of the contraction ``S`` at depth ``M``."""
    S = as_operator(S)
    if M < 2:
        raise ValueError("truncation depth must be at least 2")
    if op_norm(S) > 1.0 + CONTRACTION_TOL:
        raise ValueError("nagy_isometry requires a contraction")
    n = S.shape[0]
    D = psd_sqrt(eye(n) - adjoint(S) @ S)
    W = np.zeros((n * M, n * M), dtype=complex)
    W[0:n, 0:n] = S
    W[n : 2 * n, 0:n] = D
    for level in range(1, M - 1):
        W[(level + 1) * n : (level + 2) * n, level * n : (level + 1) * n] = np.eye(n)
    return W


@dataclass(frozen=True)
class TruncatedDilation:
    """The full dilation bundle of one contraction at a fixed depth."""

    contraction: np.ndarray
    depth: int
    isometry: np.ndarray
    unitary: np.ndarray
    r0: np.ndarray
    r1: np.ndarray
    defect: np.ndarray

    @property
    def base_dim(self) -> int:
        return self.contraction.shape[0]


def nagy_unitary(S, M: int) -> TruncatedDilation:
    """Assemble ``U = [[W, 1 - W W*], [0, W*]]`` and its embeddings."""
    S = as_operator(S)
    n = S.shape[0]
    W = nagy_isometry(S, M)
    nm = n * M
    U = np.zeros((2 * nm, 2 * nm), dtype=complex)
    U[:nm, :nm] = W
    U[:nm, nm:] = np.eye(nm) - W @ adjoint(W)
    U[nm:, nm:] = adjoint(W)
    D = psd_sqrt(eye(n) - adjoint(S) @ S)
    return TruncatedDilation(
        contraction=S,
        depth=M,
        isometry=W,
        unitary=U,
        r0=embedding_r0(n, M),
        r1=embedding_r1(n, M),
        defect=D,
    )


def _word_product(mats, powers, dim: int) -> np.ndarray:
    out = eye(dim)
    for X, k in zip(mats, powers):
        out = out @ np.linalg.matrix_power(X, k)
    return out


def verify_discrete_word(family, indices, powers, M: int) -> float:
    """Residual of the word identity for powers of a family of contractions.

    Computes ``|| prod_k S_{i_k}^{n_k}  -  r1* (prod_k U_{i_k}^{n_k}) r1 ||``.
    With ``M >= sum(powers) + 2`` the identity is exact up to roundoff.
    """
    family = [as_operator(S) for S in family]
    indices = list(indices)
    powers = list(powers)
    if len(indices) != len(powers):
        raise ValueError("indices and powers must have equal length")
    if any(k < 0 for k in powers):
        raise ValueError("powers must be non-negative")
    if any(i not in range(len(family)) for i in indices):
        raise IndexError("word letter index outside the family")
    if M < 2 + sum(powers):
        raise ValueError(
            f"depth {M} too small; need M >= total word degree + 2 = {sum(powers) + 2}"
        )
    n = family[0].shape[0]
    dils = {i: nagy_unitary(family[i], M) for i in set(indices)}
    lhs = _word_product([family[i] for i in indices], powers, n)
    big = _word_product([dils[i].unitary for i in indices], powers, 2 * n * M)
    r1 = embedding_r1(n, M)
    return op_norm(lhs - compress(big, r1))


@dataclass(frozen=True)
class EigenTransferEntry:
    eigenvalue: complex
    dilation_residual: float
    defect_residual: float


@dataclass(frozen=True)
class EigenTransferReport:
    """Unimodular eigenpairs of ``S`` transferred to the dilation unitary."""

    entries: tuple[EigenTransferEntry, ...]
    skipped: tuple[complex, ...]
    tol: float

    @property
    def max_residual(self) -> float:
        if not self.entries:
            return 0.0
        return max(max(e.dilation_residual, e.defect_residual) for e in self.entries)


def point_spectrum_transfer(S, M: int, tol: float = 1e-10) -> EigenTransferReport:
    """Check that unimodular eigenvalues of ``S`` survive into the dilation.

    For each eigenpair ``S xi = lam xi`` with ``|lam| = 1`` the report holds
    ``||U r1 xi - lam r1 xi||`` and ``||D xi||`` (the defect must annihilate
    boundary eigenvectors).  Eigenvalues strictly inside the disc are listed
    as skipped.
    """
    S = as_operator(S)
    if op_norm(S) > 1.0 + CONTRACTION_TOL:
        raise ValueError("point_spectrum_transfer requires a contraction")
    td = nagy_unitary(S, M)
    spec = point_spectrum(S, tol=max(tol, 1e-12))
    scale = max(1.0, op_norm(S))
    lams, _ = np.linalg.eig(S)
    _, vecs = np.linalg.eig(S)
    entries = []
    skipped = []
    for k, lam in enumerate(lams):
        if abs(abs(lam) - 1.0) > tol * scale:
            skipped.append(complex(lam))
            continue
        xi = vecs[:, k]
        xi = xi / np.linalg.norm(xi)
        lifted = td.r1 @ xi
        entries.append(
            EigenTransferEntry(
                eigenvalue=complex(lam),
                dilation_residual=float(np.linalg.norm(td.unitary @ lifted - lam * lifted)),
                defect_residual=float(np.linalg.norm(td.defect @ xi)),
            )
        )
    del spec
    return EigenTransferReport(entries=tuple(entries), skipped=tuple(skipped), tol=tol)


@dataclass(frozen=True)
class ContinuousDilation:
    """Unitary-group dilation of one contraction semigroup.

    ``generator`` is ``B = 1 - 2 (1 - U)^{-1}`` for the dilation unitary
    ``U`` of the co-generator; ``exp(t*B)`` compressed by ``r1`` returns the
    original semigroup.
    """

    underlying: TruncatedDilation
    generator: np.ndarray
    cogen: np.ndarray

    @property
    def r1(self) -> np.ndarray:
        return self.underlying.r1

    @property
    def depth(self) -> int:
        return self.underlying.depth

    def evolve(self, t: float) -> np.ndarray:
        return expm(self.generator, t)


def _lower_blocks(V, A, M: int):
    """The diagonal/lower split of ``1 - W`` for the co-generator ladder.

    Returns ``(D_tilde, L)`` with ``1 - W = D - L``, ``D_tilde = D^{-1}``;
    ``D`` carries ``(1 - V)`` on level 0 and the identity below, ``L`` the
    defect step ``sqrt(1 - V*V)`` into level 1 plus the upward shifts.
    """
    n = V.shape[0]
    nm = n * M
    W_blk = (eye(n) - A) / 2.0  # equals (1 - V)^{-1}
    D_tilde = np.zeros((nm, nm), dtype=complex)
    D_tilde[:n, :n] = W_blk
    for level in range(1, M):
        D_tilde[level * n : (level + 1) * n, level * n : (level + 1) * n] = np.eye(n)
    L = np.zeros((nm, nm), dtype=complex)
    L[n : 2 * n, :n] = psd_sqrt(eye(n) - adjoint(V) @ V)
    for level in range(1, M - 1):
        L[(level + 1) * n : (level + 2) * n, level * n : (level + 1) * n] = np.eye(n)
    return D_tilde, L


def assembled_resolvent_inverse(V, A, W_iso, M: int) -> np.ndarray:
    """Block assembly of ``(1 - U)^{-1}`` from the ladder pieces.

    ``X = (1 - W)^{-1}`` is the nilpotent Neumann closure
    ``sum_k L^k D_tilde`` (the single correction ``L D_tilde`` covers only
    the first sub-level; the shift keeps feeding lower levels until depth is
    exhausted).  Since ``1 - U = [[1 - W, -(1 - P)], [0, (1 - W)*]]`` with
    ``P = W W*``, block triangularity gives

        ``(1 - U)^{-1} = [[X, X (1 - P) X*], [0, X*]]``.
    """
    n = V.shape[0]
    nm = n * M
    D_tilde, L = _lower_blocks(V, A, M)
    X = D_tilde.copy()
    term = D_tilde
    for _ in range(1, M):
        term = L @ term
        X = X + term
    P = W_iso @ adjoint(W_iso)
    out = np.zeros((2 * nm, 2 * nm), dtype=complex)
    out[:nm, :nm] = X
    out[:nm, nm:] = X @ (np.eye(nm) - P) @ adjoint(X)
    out[nm:, nm:] = adjoint(X)
    return out


def continuous_dilation(T: ContractionSemigroup, M: int) -> ContinuousDilation:
    """Dilate a semigroup through its co-generator at depth ``M``.

    The generator is computed by a direct solve of ``(1 - U) X = 1``; the
    block assembly from the ladder pieces serves as an internal cross-check.
    """
    V = cogenerator(T)
    td = nagy_unitary(V, M)
    dim = td.unitary.shape[0]
    I = eye(dim)
    smin = float(np.linalg.svd(I - td.unitary, compute_uv=False).min())
    if smin <= 1e-10:
        raise ArithmeticError(
            f"(1 - U) is singular to tolerance (sigma_min = {smin:.3e}); "
            "truncation pathology"
        )
    inv = solve(I - td.unitary, I)
    B = I - 2.0 * inv
    assembled = assembled_resolvent_inverse(V, T.generator, td.isometry, M)
    B_assembled = I - 2.0 * assembled
    scale = 1.0 + op_norm(B)
    if op_norm(B - B_assembled) > 1e-10 * scale:
        raise ConsistencyError("block assembly of the dilation generator disagrees")
    return ContinuousDilation(underlying=td, generator=B, cogen=V)


def verify_continuous_word(family, indices, times, M: int) -> float:
    """Residual of the continuous word identity.

    ``|| prod_k T_{i_k}(t_k)  -  r1* (prod_k exp(t_k B_{i_k})) r1 ||`` for a
    family of contraction semigroups on a common space.
    """
    family = list(family)
    indices = list(indices)
    times = list(times)
    if len(indices) != len(times):
        raise ValueError("indices and times must have equal length")
    if any(t < 0 for t in times):
        raise ValueError("word times must be non-negative")
    if any(i not in range(len(family)) for i in indices):
        raise IndexError("word letter index outside the family")
    n = family[0].dim
    dils = {i: continuous_dilation(family[i], M) for i in set(indices)}
    lhs = eye(n)
    rhs = eye(2 * n * M)
    for i, t in zip(indices, times):
        lhs = lhs @ family[i].evaluate(t)
        rhs = rhs @ dils[i].evolve(t)
    return op_norm(lhs - compress(rhs, embedding_r1(n, M)))


def verify_poly_transport(family, indices, times, lam: float, n: int, M: int) -> float:
    """Residual of the exact polynomial word identity.

    Each factor ``p_{t_k}(V_{i_k})`` (degree-``n`` series of the approximant
    exponential) must compress exactly from ``p_{t_k}(U_{i_k})`` as long as
    ``M > n * len(indices) + 1``; the identity is algebraic, so the residual
    sits at machine level whenever the depth precondition holds.
    """
    family = list(family)
    indices = list(indices)
    times = list(times)
    if len(indices) != len(times):
        raise ValueError("indices and times must have equal length")
    if M <= n * len(indices) + 1:
        raise ValueError(
            f"depth {M} too small for degree {n} words of {len(indices)} letters; "
            f"need M > {n * len(indices) + 1}"
        )
    const = YosidaConstants(lam)
    dim = family[0].dim
    cogs = {i: cogenerator(family[i]) for i in set(indices)}
    dils = {i: nagy_unitary(cogs[i], M) for i in set(indices)}
    lhs = eye(dim)
    rhs = eye(2 * dim * M)
    for i, t in zip(indices, times):
        p = poly_coeffs(t, const, n)
        lhs = lhs @ poly_apply(p, cogs[i])
        rhs = rhs @ poly_apply(p, dils[i].unitary)
    return op_norm(lhs - compress(rhs, embedding_r1(dim, M)))


def poly_word_tail_bounds(times, lam: float, n: int) -> list[float]:
    """Certified series tails for each letter of a word (diagnostic helper)."""
    const = YosidaConstants(lam)
    return [poly_coeffs(t, const, n).tail_bound for t in times]


def intertwine_check(samples, r) -> float:
    """Max residual of ``U(x) r = r V(x)`` over paired samples.

    ``samples`` is an iterable of ``(V_x, U_x)`` pairs where each ``V_x`` is
    isometric and ``U_x`` dilates it through the isometry ``r``.  A unitary
    dilation of an isometric evolution must leave the embedded subspace
    invariant; a nonzero residual flags a broken pairing.
    """
    r = np.asarray(r, dtype=complex)
    worst = 0.0
    for V_x, U_x in samples:
        V_x = as_operator(V_x)
        U_x = as_operator(U_x)
        iso_defect = op_norm(adjoint(V_x) @ V_x - eye(V_x.shape[0]))
        if iso_defect > 1e-10:
            raise ValueError(f"sample is not isometric (defect {iso_defect:.3e})")
        worst = max(worst, op_norm(U_x @ r - r @ V_x))
    return worst


def _completion_isometry(r1, basis, dim_big, seed):
    """Extend the partial isometry ``r1 @ p`` to a full isometry C^n -> C^N.

    Columns in ``span(basis)`` map through ``r1``; the orthocomplement maps
    onto a seeded random orthonormal complement of ``r1 @ basis``.
    """
    n = r1.shape[1]
    k = basis.shape[1]
    full = np.linalg.qr(
        np.concatenate([basis, random_matrix(n, seed)[:, : n - k]], axis=1)
    )[0]
    rest = full[:, k:]
    target = r1 @ basis
    G = random_matrix(dim_big, seed + 1)[:, : n - k]
    G = G - target @ (adjoint(target) @ G)
    comp = np.linalg.qr(G)[0][:, : n - k]
    return target @ adjoint(basis) + comp @ adjoint(rest)


def weak_approx_pairing(
    family, words, xi, eta, M: int, continuous: bool = False, seed: int = 0
) -> float:
    """Pairing residual of the finite-rank unitary-completion approximation.

    Builds the projection ``p`` onto ``span{xi, eta}``, completes the partial
    isometry ``r1 p`` to an isometry ``w`` with ``w p = r1 p``, and returns

        ``max_words | <W(x) xi, eta> - <U(x) w p xi, w p eta> |``

    where ``W(x)`` is the direct word product over the family and ``U(x)``
    the corresponding dilated product.  Because ``w p = r1 p``, the pairing
    collapses to the compression identity: exact for discrete words of
    degree at most ``M - 2``, and within the word-level dilation residual
    times ``||xi|| ||eta||`` for continuous words.
    """
    xi = np.asarray(xi, dtype=complex)
    eta = np.asarray(eta, dtype=complex)
    if np.linalg.norm(xi) == 0 or np.linalg.norm(eta) == 0:
        raise ValueError("pairing vectors must be nonzero")
    if continuous:
        n = family[0].dim
        dils = {
            i: continuous_dilation(family[i], M)
            for i in set(i for idx, _ in words for i in idx)
        }

        def word_ops(idx, vals):
            lhs = eye(n)
            rhs = eye(2 * n * M)
            for i, v in zip(idx, vals):
                lhs = lhs @ family[i].evaluate(v)
                rhs = rhs @ dils[i].evolve(v)
            return lhs, rhs

    else:
        mats = [as_operator(S) for S in family]
        n = mats[0].shape[0]
        dils = {
            i: nagy_unitary(mats[i], M)
            for i in set(i for idx, _ in words for i in idx)
        }

        def word_ops(idx, vals):
            lhs = _word_product([mats[i] for i in idx], vals, n)
            rhs = _word_product([dils[i].unitary for i in idx], vals, 2 * n * M)
            return lhs, rhs

    pair = np.stack([xi, eta], axis=1)
    rank = int(np.linalg.matrix_rank(pair, tol=1e-12))
    basis = np.linalg.qr(pair)[0][:, :rank]
    p = basis @ adjoint(basis)
    r1 = embedding_r1(n, M)
    w = _completion_isometry(r1, basis, 2 * n * M, seed)
    worst = 0.0
    for idx, vals in words:
        lhs, rhs = word_ops(list(idx), list(vals))
        direct = np.vdot(eta, lhs @ xi)
        approx = np.vdot(w @ (p @ eta), rhs @ (w @ (p @ xi)))
        worst = max(worst, abs(direct - approx))
    return worst
