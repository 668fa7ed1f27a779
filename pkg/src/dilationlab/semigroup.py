"""Contraction semigroups with bounded dissipative generators.

A semigroup ``T(t) = exp(t*A)`` is contractive exactly when the Hermitian
part of its generator ``A`` is negative semidefinite; that is checked at
construction.  The module provides the transform between a semigroup and its
co-generator

    V = (A + 1)(A - 1)^{-1} = 1 - 2 (1 - A)^{-1},

its inverse, the bounded approximants

    A_lam = lam^2 (lam - A)^{-1} - lam = alpha - beta (gamma - V)^{-1},

and the polynomial calculus built on the scalar function

    f_t(z) = exp(t * (alpha - beta / (gamma - z))),

whose truncated Maclaurin series recovers ``exp(t*A_lam)`` from ``V`` with a
certified tail bound.  These pieces are what lets the dilation layer move
words of semigroup evaluations through purely algebraic identities.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    ConsistencyError,
    SingularMatrixError,
    adjoint,
    as_operator,
    expm,
    eye,
    op_norm,
    random_matrix,
    solve,
)

DISSIPATIVITY_TOL = 1e-10

# Spot-check times for ||T(t)|| <= 1 at construction.
_CHECK_TIMES = (0.5, 1.0, 2.0)


@dataclass(frozen=True)
class ContractionSemigroup:
    """Bounded dissipative generator ``A`` carrying ``T(t) = exp(t*A)``."""

    generator: np.ndarray

    def __post_init__(self):
        A = as_operator(self.generator)
        object.__setattr__(self, "generator", A)
        herm = (A + adjoint(A)) / 2.0
        top = float(np.linalg.eigvalsh(herm).max())
        if top > DISSIPATIVITY_TOL:
            raise ValueError(
                f"generator is not dissipative: Hermitian part reaches {top:.3e}"
            )
        for t in _CHECK_TIMES:
            if op_norm(expm(A, t)) > 1.0 + DISSIPATIVITY_TOL:
                raise ValueError(f"semigroup is not contractive at t={t}")

    @property
    def dim(self) -> int:
        return self.generator.shape[0]

    def evaluate(self, t: float) -> np.ndarray:
        """``T(t)``; exact identity at ``t = 0``, rejects negative times."""
        if t < 0:
            raise ValueError(f"semigroup evaluated at negative time {t}")
        if t == 0:
            return eye(self.dim)
        return expm(self.generator, t)

    def is_unitary_group(self, tol: float = 1e-10) -> bool:
        """True when the generator is skew-adjoint (evolution extends to all of R)."""
        return op_norm(self.generator + adjoint(self.generator)) <= tol


def evaluate(T: ContractionSemigroup, t: float) -> np.ndarray:
    return T.evaluate(t)


def cogenerator(T: ContractionSemigroup) -> np.ndarray:
    """Co-generator ``V = (A+1)(A-1)^{-1}``, cross-checked against ``1 - 2(1-A)^{-1}``."""
    A = T.generator
    I = eye(T.dim)
    try:
        V = I - 2.0 * solve(I - A, I)
    except SingularMatrixError as exc:
        raise SingularMatrixError(
            "cannot form co-generator; (A - 1) numerically singular"
        ) from exc
    # Moebius form (A+1)(A-1)^{-1}, evaluated as a right division.
    V_moebius = np.linalg.solve((A - I).T, (A + I).T).T
    scale = 1.0 + op_norm(V)
    if op_norm(V - V_moebius) > 1e-12 * scale:
        raise ConsistencyError("the two co-generator closed forms disagree")
    if op_norm(V) > 1.0 + 1e-10:
        raise ValueError("co-generator is not a contraction; input not dissipative")
    return V


def generator_from_cogenerator(V) -> np.ndarray:
    """Recover ``A = 1 - 2 (1 - V)^{-1}`` from a co-generator."""
    V = as_operator(V)
    I = eye(V.shape[0])
    smin = float(np.linalg.svd(I - V, compute_uv=False).min())
    if smin <= 1e-12:
        raise ValueError("co-generator has eigenvalue 1")
    return I - 2.0 * solve(I - V, I)


@dataclass(frozen=True)
class YosidaConstants:
    """The scalars ``gamma = (lam+1)/(lam-1)``, ``alpha = lam/(lam-1)``, ``beta = 2 alpha^2``."""

    lam: float
    gamma: float = field(init=False)
    alpha: float = field(init=False)
    beta: float = field(init=False)

    def __post_init__(self):
        if not self.lam > 1.0:
            raise ValueError("lambda must exceed 1")
        object.__setattr__(self, "gamma", (self.lam + 1.0) / (self.lam - 1.0))
        object.__setattr__(self, "alpha", self.lam / (self.lam - 1.0))
        object.__setattr__(self, "beta", 2.0 * (self.lam / (self.lam - 1.0)) ** 2)


def yosida_generator(T: ContractionSemigroup, c: YosidaConstants) -> np.ndarray:
    """Bounded approximant ``lam^2 (lam-A)^{-1} - lam``, cross-checked in co-generator form."""
    A = T.generator
    I = eye(T.dim)
    direct = c.lam**2 * solve(c.lam * I - A, I) - c.lam * I
    V = cogenerator(T)
    via_cogen = c.alpha * I - c.beta * solve(c.gamma * I - V, I)
    scale = 1.0 + op_norm(direct)
    if op_norm(direct - via_cogen) > 1e-10 * scale:
        raise ConsistencyError("resolvent and co-generator approximant forms disagree")
    herm = (direct + adjoint(direct)) / 2.0
    if float(np.linalg.eigvalsh(herm).max()) > 1e-8:
        raise ConsistencyError("approximant lost dissipativity")
    return direct


def yosida_semigroup(T: ContractionSemigroup, c: YosidaConstants, t: float) -> np.ndarray:
    """``exp(t * A_lam)``, the bounded-approximant semigroup."""
    if t < 0:
        raise ValueError("negative time")
    return expm(yosida_generator(T, c), t)


@dataclass(frozen=True)
class PolyApprox:
    """Truncated Maclaurin series of ``f_t`` with a certified tail estimate.

    ``coeffs[k]`` is the k-th series coefficient (real); ``tail_bound``
    dominates the sum of the absolute values of all discarded coefficients,
    hence also ``||p(V) - exp(t*A_lam)||`` for any contraction ``V``.
    """

    t: float
    lam: float
    degree: int
    coeffs: np.ndarray
    tail_bound: float


def poly_coeffs(t: float, c: YosidaConstants, n: int) -> PolyApprox:
    """Series coefficients of ``f_t`` through degree ``n``.

    Uses the exponential-composition recurrence: with
    ``g(z) = t*(alpha - beta/(gamma - z))`` one has ``g_0 = t*(alpha - beta/gamma)``,
    ``g_j = -t*beta*gamma^{-(j+1)}`` for ``j >= 1`` and

        (k+1) c_{k+1} = sum_{j=0..k} (j+1) g_{j+1} c_{k-j},   c_0 = exp(g_0).

    The tail is certified by the Cauchy estimate ``|c_k| <= M(r)/r^k`` at
    ``r = (1+gamma)/2`` with ``M(r) = exp(t*(alpha + beta/(gamma - r)))``,
    summed geometrically beyond degree ``n``.
    """
    if t < 0:
        raise ValueError("negative time")
    if n < 0:
        raise ValueError("degree must be >= 0")
    g0 = t * (c.alpha - c.beta / c.gamma)
    gj = np.array([-t * c.beta * c.gamma ** (-(j + 1.0)) for j in range(1, n + 2)])
    coeffs = np.zeros(n + 1)
    coeffs[0] = np.exp(g0)
    for k in range(n):
        acc = 0.0
        for j in range(k + 1):
            acc += (j + 1) * gj[j] * coeffs[k - j]
        coeffs[k + 1] = acc / (k + 1)
    if t == 0.0:
        tail = 0.0  # f is identically 1, every discarded coefficient vanishes
    else:
        r = (1.0 + c.gamma) / 2.0
        big_m = np.exp(t * (c.alpha + c.beta / (c.gamma - r)))
        tail = float(big_m / (r**n * (r - 1.0)))
    return PolyApprox(t=t, lam=c.lam, degree=n, coeffs=coeffs, tail_bound=tail)


def poly_apply(p: PolyApprox, V) -> np.ndarray:
    """Horner evaluation of the series polynomial on a contraction ``V``."""
    V = as_operator(V)
    if op_norm(V) > 1.0 + 1e-10:
        raise ValueError("polynomial calculus requires a contraction argument")
    I = eye(V.shape[0])
    out = np.zeros_like(V)
    for ck in p.coeffs[::-1]:
        out = out @ V + ck * I
    return out


@dataclass(frozen=True)
class QuadratureSpec:
    """Budget for the Laplace-transform resolvent integral."""

    tol: float = 1e-8
    nodes_per_panel: int = 24
    max_panels: int = 4096


class QuadratureError(ArithmeticError):
    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved residual {achieved:.3e})")
        self.achieved = achieved


def resolvent_via_laplace(
    T: ContractionSemigroup, lam: complex, quad: QuadratureSpec = QuadratureSpec()
) -> np.ndarray:
    """Resolvent ``(lam - A)^{-1}`` computed as ``int_0^inf exp(-lam t) T(t) dt``.

    Composite Gauss-Legendre on ``[0, T_max]`` with ``T_max`` chosen so the
    discarded tail is below half the target tolerance; panel count doubles
    until the residual ``||(lam - A) R - 1|| <= tol`` or the budget runs out.
    """
    re = lam.real if isinstance(lam, complex) else float(lam)
    if re <= 0:
        raise ValueError("the Laplace integral needs Re(lambda) > 0")
    A = T.generator
    I = eye(T.dim)
    t_max = float(np.log(2.0 / (quad.tol * re)) / re)
    t_max = max(t_max, 1.0)
    nodes, weights = np.polynomial.legendre.leggauss(quad.nodes_per_panel)
    panels = max(4, int(np.ceil(t_max * max(1.0, op_norm(A), abs(lam)))))
    achieved = np.inf
    while panels <= quad.max_panels:
        edges = np.linspace(0.0, t_max, panels + 1)
        R = np.zeros_like(A)
        for a, b in zip(edges[:-1], edges[1:]):
            half = (b - a) / 2.0
            mid = (a + b) / 2.0
            for x, w in zip(nodes, weights):
                tt = mid + half * x
                R += w * half * np.exp(-lam * tt) * expm(A, tt)
        achieved = op_norm((lam * I - A) @ R - I)
        if achieved <= quad.tol:
            return R
        panels *= 2
    raise QuadratureError("quadrature budget exhausted", achieved=achieved)


@dataclass(frozen=True)
class ContinuityReport:
    """Moduli of continuity of a generator family along a parameter grid.

    Diagnostic only: ``evolution_moduli[k]`` is the uniform-in-time strong
    modulus between grid neighbours ``k`` and ``k+1``; ``cogenerator_moduli``
    is the plain strong modulus of the co-generator map on the same pairs.
    """

    omegas: tuple
    evolution_moduli: np.ndarray
    cogenerator_moduli: np.ndarray


def continuity_moduli(family, t_grid, probes) -> ContinuityReport:
    """Compare neighbouring members of ``family = [(omega, semigroup), ...]``.

    For each adjacent pair the report records
    ``max_probe sup_{t in t_grid} ||(T_w(t) - T_w'(t)) xi||`` and
    ``max_probe ||(V_w - V_w') xi||``.
    """
    fam = list(family)
    omegas = tuple(w for w, _ in fam)
    if any(b <= a for a, b in zip(omegas[:-1], omegas[1:])):
        raise ValueError("parameter grid must be sorted strictly increasing")
    probes = [np.asarray(xi, dtype=complex) for xi in probes]
    if any(np.linalg.norm(xi) == 0 for xi in probes):
        raise ValueError("probe vectors must be nonzero")
    ev = np.zeros(len(fam) - 1)
    cg = np.zeros(len(fam) - 1)
    cogs = [cogenerator(T) for _, T in fam]
    samples = [[T.evaluate(t) for t in t_grid] for _, T in fam]
    for k in range(len(fam) - 1):
        ev[k] = max(
            float(np.linalg.norm((sa - sb) @ xi))
            for sa, sb in zip(samples[k], samples[k + 1])
            for xi in probes
        )
        cg[k] = max(
            float(np.linalg.norm((cogs[k] - cogs[k + 1]) @ xi)) for xi in probes
        )
    return ContinuityReport(omegas=omegas, evolution_moduli=ev, cogenerator_moduli=cg)


def random_semigroup(dim: int, seed: int, norm: float = 1.0) -> ContractionSemigroup:
    """Seeded dissipative generator rescaled to ``||A|| = norm``."""
    rng_split = np.random.default_rng(seed)
    s1, s2 = rng_split.integers(0, 2**31, size=2)
    G = random_matrix(dim, int(s1))
    K = random_matrix(dim, int(s2))
    A = 1j * (G + adjoint(G)) / 2.0 - K @ adjoint(K)
    return ContractionSemigroup(A * (norm / op_norm(A)))


def random_unitary_group(dim: int, seed: int, norm: float = 1.0) -> ContractionSemigroup:
    """Seeded skew-adjoint generator (a unitary one-parameter group)."""
    G = random_matrix(dim, seed)
    H = (G + adjoint(G)) / 2.0
    A = 1j * H
    return ContractionSemigroup(A * (norm / op_norm(A)))
