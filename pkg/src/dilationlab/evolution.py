"""Partition systems, time-ordered evolution products, and monitored processes.

Partition points are exact rationals so that unions, refinements and the
self-similar scaling identity hold with exact set equality; times convert to
floats only at the operator-evaluation boundary (and even there the scaled
evaluation points are computed in rational arithmetic first, so matched
partitions of nested intervals land on bit-identical floats).

The two product constructions are

* the pre-evolution product  ``revprod_k  T_{tau_k}(dtau_k)``  of a
  parameter-dependent family of semigroups along a scaled partition
  (right-adapted: the step of duration ``dtau_k`` runs under the generator
  sampled at the right endpoint ``tau_k``), and
* the monitoring product  ``revprod_k  X_{tau_k} T(dtau_k)``  alternating a
  fixed evolution with monitoring operators.

``revprod`` multiplies latest-first: factor ``k = N`` stands leftmost.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla

from .linalg import adjoint, as_operator, expm, eye, op_norm
from .semigroup import ContractionSemigroup

IDEMPOTENCY_TOL = 1e-10


def _frac(x) -> Fraction:
    # floats convert exactly; strings allow "1/3"
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class Partition:
    """Finite rational subdivision of [0, 1] containing both endpoints."""

    points: tuple[Fraction, ...]

    def __post_init__(self):
        pts = tuple(_frac(p) for p in self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 2:
            raise ValueError("a partition needs at least the two endpoints")
        if pts[0] != 0 or pts[-1] != 1:
            raise ValueError("partition must run from 0 to 1")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValueError("partition points must be strictly increasing")

    @property
    def N(self) -> int:
        return len(self.points) - 1

    @property
    def deltas(self) -> tuple[Fraction, ...]:
        return tuple(b - a for a, b in zip(self.points, self.points[1:]))

    @property
    def mesh(self) -> Fraction:
        return max(self.deltas)

    def union(self, other: "Partition") -> "Partition":
        return Partition(tuple(sorted(set(self.points) | set(other.points))))

    def refines(self, other: "Partition") -> bool:
        return set(self.points) >= set(other.points)

    @staticmethod
    def uniform(N: int) -> "Partition":
        if N < 1:
            raise ValueError("N must be >= 1")
        return Partition(tuple(Fraction(k, N) for k in range(N + 1)))

    @staticmethod
    def from_text(text: str) -> "Partition":
        return Partition(tuple(Fraction(tok.strip()) for tok in text.split(",")))


def homogenize(p: Partition, m: int) -> Partition:
    """Split every subinterval uniformly into ``m`` pieces (exact rationals)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    pts: set[Fraction] = set()
    for a, b in zip(p.points, p.points[1:]):
        step = (b - a) / m
        pts.update(a + r * step for r in range(m + 1))
    return Partition(tuple(sorted(pts)))


def is_m_homogeneous(p: Partition, m: int) -> bool:
    return p.N % m == 0


def self_similar_split(p: Partition, alpha, m: int = 1):
    """Produce ``(G1, G2, G3)`` in the (m-homogeneous) system with
    ``G3 = alpha*G1 | (alpha + (1-alpha)*G2)`` containing ``p`` (exact sets).

    At ``alpha`` in ``{0, 1}`` the collapsed side degenerates; it is assigned
    the trivial partition and only the surviving side must contain ``p``.
    """
    alpha = _frac(alpha)
    if not 0 <= alpha <= 1:
        raise ValueError("alpha must lie in [0, 1]")
    trivial = Partition((Fraction(0), Fraction(1)))
    if alpha == 0:
        g2 = homogenize(p, m)
        g1 = homogenize(trivial, m)
        g3 = Partition(tuple(sorted({Fraction(0)} | set(g2.points))))
        return g1, g2, g3
    if alpha == 1:
        g1 = homogenize(p, m)
        g2 = homogenize(trivial, m)
        g3 = Partition(tuple(sorted(set(g1.points) | {Fraction(1)})))
        return g1, g2, g3
    left = sorted({pt / alpha for pt in p.points if pt <= alpha} | {Fraction(0), Fraction(1)})
    right = sorted(
        {(pt - alpha) / (1 - alpha) for pt in p.points if pt >= alpha}
        | {Fraction(0), Fraction(1)}
    )
    g1 = homogenize(Partition(tuple(left)), m)
    g2 = homogenize(Partition(tuple(right)), m)
    g3_pts = sorted(
        {alpha * q for q in g1.points} | {alpha + (1 - alpha) * q for q in g2.points}
    )
    return g1, g2, Partition(tuple(g3_pts))


@dataclass(frozen=True)
class ScaledPartition:
    """A partition transported onto ``[s, t]``; degenerate when ``t == s``.

    ``taus[k]`` and ``deltas[k]`` are floats computed from exact rational
    scaling of the base points (``taus`` includes the left endpoint at
    index 0, so step ``k`` spans ``taus[k]`` with duration ``deltas[k-1]``).
    """

    base: Partition
    t: float
    s: float
    taus: tuple[float, ...]
    deltas: tuple[float, ...]


def scale_partition(p: Partition, t, s) -> ScaledPartition:
    tq, sq = _frac(t), _frac(s)
    if tq < sq:
        raise ValueError("need t >= s")
    span = tq - sq
    taus = tuple(float(sq + span * pt) for pt in p.points)
    deltas = tuple(float(span * d) for d in p.deltas)
    return ScaledPartition(base=p, t=float(tq), s=float(sq), taus=taus, deltas=deltas)


@dataclass(frozen=True)
class GeneratorFamily:
    """Parameter-indexed dissipative generators ``tau -> A(tau)`` on a domain.

    ``affine`` evaluates ``A0 + tau*A1`` exactly; ``table`` snaps ``tau`` to
    the nearest tabulated point (ties resolve to the lower one).
    """

    kind: str
    base: np.ndarray | None
    perturbation: np.ndarray | None
    table_entries: tuple | None
    domain: tuple[float, float]

    def __post_init__(self):
        if self.kind not in ("constant", "affine", "table"):
            raise ValueError(f"unknown family kind {self.kind!r}")
        a, b = self.domain
        if not a <= b:
            raise ValueError("empty parameter domain")
        for tau in np.linspace(a, b, 9):
            ContractionSemigroup(self.at(float(tau)))  # dissipativity gate

    @staticmethod
    def constant(A0, domain=(0.0, 1.0)) -> "GeneratorFamily":
        return GeneratorFamily("constant", as_operator(A0), None, None, tuple(domain))

    @staticmethod
    def affine(A0, A1, domain=(0.0, 1.0)) -> "GeneratorFamily":
        return GeneratorFamily(
            "affine", as_operator(A0), as_operator(A1), None, tuple(domain)
        )

    @staticmethod
    def table(entries, domain=(0.0, 1.0)) -> "GeneratorFamily":
        entries = tuple(sorted(((float(t), as_operator(A)) for t, A in entries)))
        if not entries:
            raise ValueError("table family needs at least one entry")
        return GeneratorFamily("table", None, None, entries, tuple(domain))

    @property
    def dim(self) -> int:
        if self.kind == "table":
            return self.table_entries[0][1].shape[0]
        return self.base.shape[0]

    def at(self, tau: float) -> np.ndarray:
        a, b = self.domain
        if not a <= tau <= b:
            raise ValueError(f"parameter {tau} outside the domain [{a}, {b}]")
        if self.kind == "constant":
            return self.base
        if self.kind == "affine":
            return self.base + tau * self.perturbation
        taus = [t for t, _ in self.table_entries]
        gaps = [abs(tau - t) for t in taus]
        best = min(range(len(taus)), key=lambda k: (gaps[k], taus[k]))
        return self.table_entries[best][1]

    def semigroup_at(self, tau: float) -> ContractionSemigroup:
        return ContractionSemigroup(self.at(tau))


def pre_evolution_product(fam: GeneratorFamily, p: Partition, t, s) -> np.ndarray:
    """Right-adapted product ``T_{tau_N}(dtau_N) ... T_{tau_1}(dtau_1)`` on [s, t]."""
    sp = scale_partition(p, t, s)
    a, b = fam.domain
    if not (a <= sp.s and sp.t <= b):
        raise ValueError(f"interval [{sp.s}, {sp.t}] outside the family domain")
    dim = fam.dim
    out = eye(dim)
    if sp.t == sp.s:
        return out
    for k in range(1, p.N + 1):
        step = fam.semigroup_at(sp.taus[k]).evaluate(sp.deltas[k - 1])
        out = step @ out
    return out


@dataclass(frozen=True)
class MonitorFamily:
    """Monitoring operators ``tau -> X(tau)``: constant, tabulated, or derived."""

    kind: str
    constant_op: np.ndarray | None = None
    table_entries: tuple | None = None
    fn: Callable[[float], np.ndarray] | None = None

    @staticmethod
    def constant(X) -> "MonitorFamily":
        return MonitorFamily("constant", constant_op=as_operator(X))

    @staticmethod
    def table(entries) -> "MonitorFamily":
        entries = tuple(sorted(((float(t), as_operator(X)) for t, X in entries)))
        return MonitorFamily("table", table_entries=entries)

    @staticmethod
    def derived(fn: Callable[[float], np.ndarray]) -> "MonitorFamily":
        return MonitorFamily("derived", fn=fn)

    def at(self, tau: float) -> np.ndarray:
        if self.kind == "constant":
            return self.constant_op
        if self.kind == "table":
            taus = [t for t, _ in self.table_entries]
            gaps = [abs(tau - t) for t in taus]
            best = min(range(len(taus)), key=lambda k: (gaps[k], taus[k]))
            return self.table_entries[best][1]
        return as_operator(self.fn(tau))


@dataclass(frozen=True)
class MonitoredProcess:
    """A fixed evolution alternated with monitoring operators.

    ``order`` is the idempotency order of the monitors (``X^m X = X``;
    0 means unchecked); ``measurement`` asserts the absorbing law
    ``X(tau') X(tau) = X(tau)`` on the validation grid.
    """

    T: object  # ContractionSemigroup or any object with .dim/.evaluate
    monitors: MonitorFamily
    order: int = 0
    measurement: bool = False
    validation_grid: tuple[float, ...] = (0.0, 0.5, 1.0)

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("idempotency order must be >= 0")
        if self.order >= 1:
            for tau in self.validation_grid:
                X = self.monitors.at(tau)
                defect = op_norm(np.linalg.matrix_power(X, self.order) @ X - X)
                if defect > IDEMPOTENCY_TOL:
                    raise ValueError(
                        f"monitor at tau={tau} is not {self.order}-idempotent "
                        f"(defect {defect:.3e})"
                    )
        if self.measurement:
            for ta in self.validation_grid:
                for tb in self.validation_grid:
                    Xa, Xb = self.monitors.at(ta), self.monitors.at(tb)
                    if op_norm(Xa @ Xb - Xb) > IDEMPOTENCY_TOL:
                        raise ValueError("monitors violate the measurement law")


def monitoring_product(proc: MonitoredProcess, p: Partition, t, s) -> np.ndarray:
    """Product ``X_{tau_N} T(dtau_N) ... X_{tau_1} T(dtau_1)`` on [s, t]."""
    sp = scale_partition(p, t, s)
    dim = proc.T.dim
    out = eye(dim)
    for k in range(1, p.N + 1):
        step = proc.monitors.at(sp.taus[k]) @ proc.T.evaluate(sp.deltas[k - 1])
        out = step @ out
    return out


@dataclass(frozen=True)
class RefinementReport:
    """Successive differences of a producer along a refinement schedule.

    A finite schedule can only support or falsify convergence; ``converged``
    states that the last difference fell below the tolerance along this
    schedule, not that the full refinement limit exists.
    """

    differences: tuple[float, ...]
    converged: bool
    message: str


def refinement_limit(
    producer: Callable[[Partition], np.ndarray],
    schedule: Sequence[Partition],
    tol: float,
):
    """Evaluate ``producer`` along ever finer partitions and track differences."""
    schedule = list(schedule)
    if not schedule:
        raise ValueError("empty refinement schedule")
    for a, b in zip(schedule, schedule[1:]):
        if not b.refines(a):
            raise ValueError("schedule is not increasing under refinement")
    iterates = [producer(p) for p in schedule]
    diffs = tuple(
        float(op_norm(b - a)) for a, b in zip(iterates, iterates[1:])
    )
    if len(iterates) == 1:
        return iterates[-1], RefinementReport((), True, "single-step schedule")
    converged = diffs[-1] <= tol
    message = (
        f"converged within {tol:.1e} along the schedule"
        if converged
        else f"differences stagnate above {tol:.1e} (last {diffs[-1]:.3e})"
    )
    return iterates[-1], RefinementReport(diffs, converged, message)


@dataclass(frozen=True)
class LawReport:
    cocycle_residual: float
    diagonal_residual: float | None


def evolution_law_check(E, triples, diag=()) -> LawReport:
    """Residuals of the two-parameter family laws.

    ``E`` maps ``(t, s)`` to a matrix; ``triples`` lists ``(t, s, r)`` with
    ``t >= s >= r`` for the composition law ``E(t,s) E(s,r) = E(t,r)``;
    ``diag`` lists times for ``E(t,t) = 1``.  An empty ``diag`` performs the
    pseudo-family variant (composition law only).
    """
    diag = tuple(diag)
    worst = 0.0
    for t, s, r in triples:
        if not (t >= s >= r):
            raise ValueError("need t >= s >= r in cocycle triples")
        worst = max(worst, op_norm(E(t, s) @ E(s, r) - E(t, r)))
    diag_res = None
    if diag:
        dim = E(diag[0], diag[0]).shape[0]
        diag_res = max(op_norm(E(t, t) - eye(dim)) for t in diag)
    return LawReport(cocycle_residual=float(worst), diagonal_residual=diag_res)


def chernoff_Q(perm, sgs, tau: float) -> np.ndarray:
    """One splitting step ``T_{perm(m-1)}(tau) ... T_{perm(0)}(tau)``."""
    sgs = list(sgs)
    m = len(sgs)
    if sorted(perm) != list(range(m)):
        raise ValueError("perm must be a permutation of 0..m-1")
    if tau < 0:
        raise ValueError("tau must be non-negative")
    out = eye(sgs[0].dim)
    for j in range(m):
        out = sgs[perm[j]].evaluate(tau) @ out
    return out


@dataclass(frozen=True)
class DiagonalSemigroup:
    """Block-diagonal semigroup evaluated block by block.

    Per-block evaluation keeps the block structure exact: the projections
    onto the blocks intertwine the evolution with zero residual.
    """

    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        blocks = tuple(as_operator(A) for A in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        for A in blocks:
            ContractionSemigroup(A)

    @property
    def dim(self) -> int:
        return sum(A.shape[0] for A in self.blocks)

    @property
    def generator(self) -> np.ndarray:
        return sla.block_diag(*self.blocks).astype(complex)

    def evaluate(self, t: float) -> np.ndarray:
        if t < 0:
            raise ValueError("negative time")
        if t == 0:
            return eye(self.dim)
        return sla.block_diag(*(expm(A, t) for A in self.blocks)).astype(complex)


@dataclass(frozen=True)
class GroupEvolution:
    """One-parameter evolution from an explicit generator.

    Used for dilation-generated near-skew generators, where the contraction
    gate of :class:`ContractionSemigroup` would be needlessly strict and the
    evolution may legitimately run backwards.
    """

    generator: np.ndarray

    @property
    def dim(self) -> int:
        return self.generator.shape[0]

    def evaluate(self, t: float) -> np.ndarray:
        if t == 0:
            return eye(self.dim)
        return expm(self.generator, t)


def cycle_monitored_system(sgs) -> MonitoredProcess:
    """Cyclic monitoring of ``m`` semigroups on ``C^m (x) X``.

    The diagonal evolution runs each ``T_i`` at ``m``-fold speed in its own
    block while the monitor cyclically permutes the blocks; the permutation
    satisfies ``W^m = 1`` exactly, so it is an ``m``-idempotent monitor
    (a cycle).  Over ``m``-homogeneous partitions the monitoring product
    collapses to a diagonal of splitting products.
    """
    sgs = list(sgs)
    m = len(sgs)
    if m < 1:
        raise ValueError("need at least one semigroup")
    dim = sgs[0].dim
    if any(T.dim != dim for T in sgs):
        raise ValueError("all semigroups must share one dimension")
    T_tilde = DiagonalSemigroup(tuple(m * T.generator for T in sgs))
    W = np.zeros((m * dim, m * dim), dtype=complex)
    for i in range(m):
        W[((i + 1) % m) * dim : ((i + 1) % m + 1) * dim, i * dim : (i + 1) * dim] = (
            np.eye(dim)
        )
    return MonitoredProcess(
        T=T_tilde, monitors=MonitorFamily.constant(W), order=m, measurement=False
    )


def feynman_analog(H0, H1) -> MonitoredProcess:
    """Reflection-monitored pair of unitary groups built from Hermitian matrices.

    The cycle system of ``exp(i t H0)`` and ``exp(i t H1)``; under refinement
    the monitoring product tends to ``1 (x) exp(i (H0 + H1)(t - s))``.
    """
    H0, H1 = as_operator(H0), as_operator(H1)
    for name, H in (("H0", H0), ("H1", H1)):
        if op_norm(H - adjoint(H)) > 1e-12 * (1.0 + op_norm(H)):
            raise ValueError(f"{name} is not Hermitian")
    return cycle_monitored_system(
        [ContractionSemigroup(1j * H0), ContractionSemigroup(1j * H1)]
    )


def diagonal_block(fam: GeneratorFamily, grid):
    """Stack the family over a finite parameter grid into one block evolution.

    Returns ``(T_Omega, pis, iota)``: the block-diagonal semigroup, the list
    of block projections ``pi_w`` (each ``dim x dim*|grid|``), and the
    duplicating embedding ``iota`` with ``pi_w iota = 1`` exactly.  ``iota``
    is not a Hilbert-space isometry (its columns have norm ``sqrt(|grid|)``);
    that deficit is inherited from replacing the sup-norm function space by a
    finite orthogonal sum.
    """
    grid = [float(g) for g in grid]
    if not grid:
        raise ValueError("grid must be non-empty")
    dim = fam.dim
    g = len(grid)
    T_Omega = DiagonalSemigroup(tuple(fam.at(tau) for tau in grid))
    pis = []
    for k in range(g):
        pi = np.zeros((dim, dim * g), dtype=complex)
        pi[:, k * dim : (k + 1) * dim] = np.eye(dim)
        pis.append(pi)
    iota = np.concatenate([np.eye(dim, dtype=complex)] * g, axis=0)
    return T_Omega, pis, iota


@dataclass(frozen=True)
class ReductionDiagnostics:
    """Residuals certifying the rewrite of a pre-evolution as monitoring.

    ``embedding_identity`` is ``max_tau ||j_tau r - 1||`` (exact by 0/1
    structure); ``measurement`` the monitor absorbing law; ``passivity`` the
    semigroup law of ``P U(.) P`` up to the dilation's compression error;
    ``word_identity`` the residual of the full product rewrite, with
    ``word_identity_bound`` its certified telescoping estimate from the same
    run; ``isometry_deficit`` records ``||r* r - 1||``, the deviation of the
    duplicating embedding from an isometry (``|grid| - 1`` by construction).
    """

    embedding_identity: float
    measurement: float
    passivity: float
    word_identity: float
    word_identity_bound: float
    isometry_deficit: float


@dataclass(frozen=True)
class ReductionResult:
    process: MonitoredProcess
    r: np.ndarray
    j_taus: tuple
    diagnostics: ReductionDiagnostics


def reduce_pre_evolution(
    fam: GeneratorFamily,
    grid,
    M: int,
    part: Partition | None = None,
    t: float | None = None,
    s: float | None = None,
) -> ReductionResult:
    """Rewrite a pre-evolution as a passively measured monitored process.

    The family is stacked over the finite ``grid`` (parameters used by the
    product are snapped to the grid), the stacked evolution is dilated to a
    near-unitary group ``U(t) = exp(t B)``, and the embeddings

        ``r = r1 iota``,  ``j_tau = pi_tau r1*``,  ``P_tau = r j_tau``

    realise ``T_tau(d) = j_tau U(d) r`` up to compression error.  The
    diagnostics check ``j_tau r = 1``, the measurement law, passivity, and
    the word-level identity  ``preprod = j (P x| U) r``  on the partition.
    """
    from .dilation import continuous_dilation

    grid = [float(gg) for gg in grid]
    part = part if part is not None else Partition.uniform(4)
    a, b = fam.domain
    t = b if t is None else float(t)
    s = a if s is None else float(s)
    dim = fam.dim
    g = len(grid)

    T_Omega, pis, iota = diagonal_block(fam, grid)
    dil = continuous_dilation(ContractionSemigroup(T_Omega.generator), M)
    r1 = dil.r1
    r = r1 @ iota
    j_taus = tuple(pi @ adjoint(r1) for pi in pis)
    P_taus = tuple(r @ j for j in j_taus)

    def snap(tau: float) -> int:
        gaps = [abs(tau - gg) for gg in grid]
        return min(range(g), key=lambda k: (gaps[k], grid[k]))

    emb = max(op_norm(j @ r - eye(dim)) for j in j_taus)
    meas = max(op_norm(Pa @ Pb - Pb) for Pa in P_taus for Pb in P_taus)

    # Passivity of P U(.) P against the semigroup law, spot-checked.
    pas = 0.0
    for P in P_taus:
        for ta, tb in ((0.25, 0.5), (0.5, 0.75)):
            lhs = P @ dil.evolve(ta) @ P @ dil.evolve(tb) @ P
            rhs = P @ dil.evolve(ta + tb) @ P
            pas = max(pas, op_norm(lhs - rhs))

    # Word identity on the snapped family: the direct product uses the same
    # snapped generators the monitors see.
    sp = scale_partition(part, t, s)
    lhs = eye(dim)
    rhs = eye(r.shape[0])
    bound_terms = []
    group_norms = []
    for k in range(1, part.N + 1):
        kk = snap(sp.taus[k])
        step = ContractionSemigroup(fam.at(grid[kk])).evaluate(sp.deltas[k - 1])
        lhs = step @ lhs
        evolved = dil.evolve(sp.deltas[k - 1])
        rhs = (P_taus[kk] @ evolved) @ rhs
        err = pis[kk] @ (adjoint(r1) @ evolved @ r1) @ iota - step
        bound_terms.append(op_norm(err))
        group_norms.append(op_norm(step) + op_norm(err))
    j_hat = j_taus[0]
    word_res = op_norm(lhs - j_hat @ rhs @ r)
    # Telescoping estimate: sum of per-step compression errors inflated by
    # the worst product of neighbouring factor norms.
    inflate = 1.0
    for gn in group_norms:
        inflate = max(inflate, gn)
    bound = float(sum(bound_terms) * inflate ** max(0, part.N - 1))

    iso = op_norm(adjoint(r) @ r - eye(dim))

    monitors = MonitorFamily.table(tuple((grid[k], P_taus[k]) for k in range(g)))
    process = MonitoredProcess(
        T=GroupEvolution(dil.generator),
        monitors=monitors,
        order=1,
        measurement=True,
        validation_grid=tuple(grid),
    )
    diags = ReductionDiagnostics(
        embedding_identity=float(emb),
        measurement=float(meas),
        passivity=float(pas),
        word_identity=float(word_res),
        word_identity_bound=bound,
        isometry_deficit=float(iso),
    )
    return ReductionResult(process=process, r=r, j_taus=j_taus, diagnostics=diags)
