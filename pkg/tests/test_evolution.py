from fractions import Fraction

import numpy as np
import pytest

from dilationlab.evolution import (
    GeneratorFamily,
    MonitorFamily,
    MonitoredProcess,
    Partition,
    chernoff_Q,
    cycle_monitored_system,
    diagonal_block,
    evolution_law_check,
    feynman_analog,
    homogenize,
    is_m_homogeneous,
    monitoring_product,
    pre_evolution_product,
    reduce_pre_evolution,
    refinement_limit,
    scale_partition,
    self_similar_split,
)
from dilationlab.linalg import adjoint, expm, op_norm
from dilationlab.semigroup import ContractionSemigroup, random_semigroup

F = Fraction


class TestPartitions:
    def test_validation(self):
        with pytest.raises(ValueError):
            Partition((F(0), F(1, 2)))
        with pytest.raises(ValueError):
            Partition((F(0), F(1, 2), F(1, 2), F(1)))

    def test_counts_and_mesh(self):
        p = Partition.from_text("0,1/3,1")
        assert p.N == 2
        assert p.mesh == F(2, 3)
        assert sum(p.deltas, F(0)) == 1

    def test_uniform(self):
        assert Partition.uniform(4).points == (F(0), F(1, 4), F(1, 2), F(3, 4), F(1))

    def test_homogenize_unit(self):
        assert homogenize(Partition.uniform(1), 2).points == (F(0), F(1, 2), F(1))

    def test_homogenize_identity(self):
        p = Partition.from_text("0,2/5,1")
        assert homogenize(p, 1).points == p.points

    def test_homogenize_thirds(self):
        got = homogenize(Partition.from_text("0,1/3,1"), 2)
        assert got.points == (F(0), F(1, 6), F(1, 3), F(2, 3), F(1))
        assert got.N == 2 * 2
        assert set(got.points) >= {F(0), F(1, 3), F(1)}
        assert is_m_homogeneous(got, 2)

    def test_refinement_order(self):
        a, b = Partition.uniform(2), Partition.uniform(4)
        assert b.refines(a)
        assert not a.refines(b)


class TestSelfSimilarity:
    def test_halving(self):
        g1, g2, g3 = self_similar_split(Partition.uniform(1), F(1, 2))
        assert g1.points == g2.points == (F(0), F(1))
        assert g3.points == (F(0), F(1, 2), F(1))

    def test_alpha_zero_degenerate(self):
        p = Partition.from_text("0,1/4,1")
        g1, g2, g3 = self_similar_split(p, 0)
        assert g1.points == (F(0), F(1))
        assert set(g2.points) >= set(p.points)
        assert g3.points == g2.points

    def test_exact_union_identity(self):
        p = Partition.from_text("0,1/3,3/4,1")
        for alpha in (F(1, 3), F(2, 5), F(9, 10)):
            g1, g2, g3 = self_similar_split(p, alpha)
            rebuilt = sorted(
                {alpha * q for q in g1.points}
                | {alpha + (1 - alpha) * q for q in g2.points}
            )
            assert tuple(rebuilt) == g3.points
            assert set(g3.points) >= set(p.points)

    def test_homogeneous_system_closure(self):
        p = Partition.uniform(2)
        for part in self_similar_split(p, F(1, 3), m=2):
            assert is_m_homogeneous(part, 2)

    def test_scaling_degenerates_at_equal_times(self):
        sp = scale_partition(Partition.uniform(4), 0.5, 0.5)
        assert all(tau == 0.5 for tau in sp.taus)
        assert all(d == 0.0 for d in sp.deltas)


class TestPreEvolution:
    def test_constant_family_partition_independence(self):
        T = random_semigroup(2, 0)
        fam = GeneratorFamily.constant(T.generator)
        ref = T.evaluate(0.8 - 0.1)
        rng = np.random.default_rng(1)
        for _ in range(10):
            cuts = sorted(set(int(x) for x in rng.integers(1, 64, size=5)))
            p = Partition(tuple([F(0)] + [F(c, 64) for c in cuts] + [F(1)]))
            got = pre_evolution_product(fam, p, 0.8, 0.1)
            assert op_norm(got - ref) <= 1e-10

    def test_degenerate_interval(self):
        fam = GeneratorFamily.constant(random_semigroup(2, 2).generator)
        assert op_norm(pre_evolution_product(fam, Partition.uniform(4), 0.3, 0.3) - np.eye(2)) == 0.0

    def test_domain_enforced(self):
        fam = GeneratorFamily.constant(random_semigroup(2, 3).generator, domain=(0.0, 0.5))
        with pytest.raises(ValueError):
            pre_evolution_product(fam, Partition.uniform(2), 1.0, 0.0)

    def test_affine_richardson_halving(self):
        A0 = random_semigroup(2, 4, norm=0.5).generator
        A1 = random_semigroup(2, 5, norm=0.3).generator
        fam = GeneratorFamily.affine(A0, A1)
        ref = pre_evolution_product(fam, Partition.uniform(1024), 1.0, 0.0)
        e64 = op_norm(pre_evolution_product(fam, Partition.uniform(64), 1.0, 0.0) - ref)
        e128 = op_norm(pre_evolution_product(fam, Partition.uniform(128), 1.0, 0.0) - ref)
        ratio = e64 / e128
        assert 1.6 <= ratio <= 2.4

    def test_matched_partition_cocycle(self):
        # product over the glued partition factors through the pieces when
        # the split point matches the time junction
        A0 = random_semigroup(2, 6, norm=0.5).generator
        A1 = random_semigroup(2, 7, norm=0.4).generator
        fam = GeneratorFamily.affine(A0, A1)
        t, s, r = 1.0, 0.25, 0.0
        alpha = F(1, 4)  # (s - r) / (t - r)
        g1, g2, g3 = self_similar_split(Partition.uniform(2), alpha)
        lhs = pre_evolution_product(fam, g3, t, r)
        rhs = pre_evolution_product(fam, g2, t, s) @ pre_evolution_product(fam, g1, s, r)
        assert op_norm(lhs - rhs) <= 1e-10

    def test_table_family_snaps(self):
        A = random_semigroup(2, 8).generator
        B = random_semigroup(2, 9).generator
        fam = GeneratorFamily.table([(0.0, A), (1.0, B)])
        assert np.array_equal(fam.at(0.2), A)
        assert np.array_equal(fam.at(0.8), B)
        assert np.array_equal(fam.at(0.5), A)  # tie resolves to the lower point


class TestMonitoring:
    def _commuting_passive_instance(self, seed=10):
        top = random_semigroup(1, seed).generator
        bottom = random_semigroup(1, seed + 1).generator
        from dilationlab.evolution import DiagonalSemigroup

        T = DiagonalSemigroup((top, bottom))
        P = np.diag([1.0, 0.0]).astype(complex)
        proc = MonitoredProcess(
            T=T, monitors=MonitorFamily.constant(P), order=1, measurement=True
        )
        return T, P, proc

    def test_identity_monitor(self):
        T = random_semigroup(2, 11)
        proc = MonitoredProcess(T=T, monitors=MonitorFamily.constant(np.eye(2)), order=1)
        got = monitoring_product(proc, Partition.uniform(8), 0.9, 0.1)
        assert op_norm(got - T.evaluate(0.8)) <= 1e-12

    def test_passive_projection_closed_form(self):
        T, P, proc = self._commuting_passive_instance()
        closed = P @ T.evaluate(0.7) @ P
        for N in (1, 2, 5, 16):
            got = monitoring_product(proc, Partition.uniform(N), 0.7, 0.0)
            assert op_norm(got - closed) <= 1e-12

    def test_degenerate_diagonal_power_law(self):
        _, P, proc = self._commuting_passive_instance()
        for N in (1, 3, 8):
            got = monitoring_product(proc, Partition.uniform(N), 0.4, 0.4)
            assert np.array_equal(got, P)  # X_t^N = X_t^1 exactly for a projection

    def test_idempotency_gate(self):
        T = random_semigroup(2, 12)
        X = np.array([[1.0, 0.5], [0.0, 0.0]])  # idempotent but not 2-idempotent-clean
        MonitoredProcess(T=T, monitors=MonitorFamily.constant(X), order=1)
        with pytest.raises(ValueError, match="idempotent"):
            MonitoredProcess(
                T=T, monitors=MonitorFamily.constant(np.diag([0.5, 1.0])), order=1
            )

    def test_measurement_gate(self):
        T = random_semigroup(2, 13)
        entries = [(0.0, np.diag([1.0, 0.0])), (1.0, np.diag([0.0, 1.0]))]
        with pytest.raises(ValueError, match="measurement"):
            MonitoredProcess(
                T=T,
                monitors=MonitorFamily.table(entries),
                order=1,
                measurement=True,
                validation_grid=(0.0, 1.0),
            )


class TestLawCheck:
    def test_semigroup_case(self):
        T = random_semigroup(2, 14)
        E = lambda t, s: T.evaluate(t - s)
        rep = evolution_law_check(E, [(1.0, 0.5, 0.0), (0.9, 0.3, 0.1)], diag=(0.0, 0.5))
        assert rep.cocycle_residual <= 1e-10
        assert rep.diagonal_residual <= 1e-10

    def test_pseudo_family_from_passive_monitoring(self):
        top = random_semigroup(1, 15).generator
        from dilationlab.evolution import DiagonalSemigroup

        T = DiagonalSemigroup((top, random_semigroup(1, 16).generator))
        P = np.diag([1.0, 0.0]).astype(complex)
        E = lambda t, s: P @ T.evaluate(t - s) @ P
        rep = evolution_law_check(E, [(1.0, 0.6, 0.2)], diag=())
        assert rep.cocycle_residual <= 1e-10
        assert rep.diagonal_residual is None
        assert op_norm(E(0.5, 0.5) - P) <= 1e-14

    def test_negative_control(self):
        A = random_semigroup(2, 17).generator
        B = random_semigroup(2, 18).generator
        E = lambda t, s: expm(A, t) @ expm(B, -s) if s > 0 else expm(A, t)
        rep = evolution_law_check(E, [(1.0, 0.5, 0.2)])
        assert rep.cocycle_residual > 1e-3

    def test_triple_ordering_enforced(self):
        T = random_semigroup(2, 19)
        with pytest.raises(ValueError):
            evolution_law_check(lambda t, s: T.evaluate(t - s), [(0.0, 0.5, 1.0)])


class TestChernoff:
    def test_zero_step(self):
        sgs = [random_semigroup(2, s) for s in (20, 21)]
        assert op_norm(chernoff_Q([0, 1], sgs, 0.0) - np.eye(2)) == 0.0

    def test_single_semigroup(self):
        sgs = [random_semigroup(2, 22)]
        assert op_norm(chernoff_Q([0], sgs, 0.7) - sgs[0].evaluate(0.7)) == 0.0

    def test_commuting_diagonals_exact(self):
        sgs = [
            ContractionSemigroup(np.diag([-0.5, -1.0]).astype(complex)),
            ContractionSemigroup(np.diag([-0.25, -0.125]).astype(complex)),
        ]
        total = sgs[0].generator + sgs[1].generator
        for perm in ([0, 1], [1, 0]):
            got = chernoff_Q(perm, sgs, 0.6)
            assert op_norm(got - expm(total, 0.6)) <= 1e-12

    def test_permutation_validated(self):
        sgs = [random_semigroup(2, s) for s in (23, 24)]
        with pytest.raises(ValueError):
            chernoff_Q([0, 0], sgs, 0.5)


class TestCycleSystem:
    def test_single_member(self):
        sgs = [random_semigroup(2, 30)]
        proc = cycle_monitored_system(sgs)
        assert np.array_equal(proc.monitors.at(0.0), np.eye(2))
        got = proc.T.evaluate(0.5)
        assert op_norm(got - sgs[0].evaluate(0.5)) == 0.0

    def test_block_structure(self):
        sgs = [random_semigroup(2, s) for s in (31, 32)]
        proc = cycle_monitored_system(sgs)
        W = proc.monitors.at(0.3)
        expected = np.zeros((4, 4))
        expected[2:, :2] = np.eye(2)
        expected[:2, 2:] = np.eye(2)
        assert np.array_equal(W, expected)
        assert np.array_equal(np.linalg.matrix_power(W, 2), np.eye(4))
        T_half = proc.T.evaluate(0.5)
        assert op_norm(T_half[:2, :2] - sgs[0].evaluate(1.0)) == 0.0
        assert op_norm(T_half[2:, 2:] - sgs[1].evaluate(1.0)) == 0.0

    def test_reduces_to_splitting_products(self):
        sgs = [random_semigroup(2, s) for s in (33, 34)]
        proc = cycle_monitored_system(sgs)
        base = Partition.from_text("0,1/4,1")
        p = homogenize(base, 2)
        t, s = 0.9, 0.1
        got = monitoring_product(proc, p, t, s)
        sp = scale_partition(base, t, s)
        blocks = []
        for i in range(2):
            perm = [(i + j) % 2 for j in range(2)]
            out = np.eye(2, dtype=complex)
            for k in range(1, base.N + 1):
                out = chernoff_Q(perm, sgs, sp.deltas[k - 1]) @ out
            blocks.append(out)
        ref = np.zeros((4, 4), dtype=complex)
        ref[:2, :2] = blocks[0]
        ref[2:, 2:] = blocks[1]
        assert op_norm(got - ref) <= 1e-11

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            cycle_monitored_system([random_semigroup(2, 35), random_semigroup(3, 36)])


class TestRefinementLimit:
    def test_constant_producer(self):
        T = random_semigroup(2, 40)
        schedule = [Partition.uniform(2**k) for k in range(1, 5)]
        fam = GeneratorFamily.constant(T.generator)
        out, rep = refinement_limit(
            lambda p: pre_evolution_product(fam, p, 1.0, 0.0), schedule, tol=1e-12
        )
        assert rep.converged
        assert max(rep.differences) <= 1e-12

    def test_commuting_chernoff_flat(self):
        sgs = [
            ContractionSemigroup(np.diag([-0.5, -1.0]).astype(complex)),
            ContractionSemigroup(np.diag([-0.25, -0.75]).astype(complex)),
        ]
        proc = cycle_monitored_system(sgs)
        schedule = [Partition.uniform(N) for N in (8, 16, 32)]
        _, rep = refinement_limit(
            lambda p: monitoring_product(proc, p, 1.0, 0.0), schedule, tol=1e-12
        )
        assert rep.converged

    def test_non_commuting_chernoff_converges(self):
        sgs = [random_semigroup(2, s, norm=0.15) for s in (41, 42)]
        proc = cycle_monitored_system(sgs)
        schedule = [Partition.uniform(N) for N in (32, 64, 128, 256)]
        out, rep = refinement_limit(
            lambda p: monitoring_product(proc, p, 1.0, 0.0), schedule, tol=1e-4
        )
        assert rep.converged
        assert all(b < a for a, b in zip(rep.differences, rep.differences[1:]))
        ref = np.kron(np.eye(2), expm(sgs[0].generator + sgs[1].generator, 1.0))
        assert op_norm(out - ref) <= 1e-3

    def test_schedule_must_refine(self):
        with pytest.raises(ValueError):
            refinement_limit(
                lambda p: np.eye(1),
                [Partition.uniform(3), Partition.uniform(4)],
                tol=1e-6,
            )

    def test_stagnation_reported_not_raised(self):
        rng = np.random.default_rng(43)
        schedule = [Partition.uniform(2**k) for k in (1, 2, 3)]
        _, rep = refinement_limit(
            lambda p: rng.standard_normal((2, 2)), schedule, tol=1e-12
        )
        assert not rep.converged
        assert "stagnate" in rep.message


class TestFeynman:
    def test_requires_hermitian(self):
        with pytest.raises(ValueError, match="Hermitian"):
            feynman_analog(np.array([[0.0, 1.0], [0.0, 0.0]]), np.eye(2))

    def test_single_generator_exact(self):
        H0 = np.array([[0.0, 1.0], [1.0, 0.0]])
        proc = feynman_analog(H0, np.zeros((2, 2)))
        got = monitoring_product(proc, Partition.uniform(4), 1.0, 0.0)
        ref = np.kron(np.eye(2), expm(1j * H0, 1.0))
        assert op_norm(got - ref) <= 1e-12

    def test_commuting_pair_exact(self):
        H0 = np.diag([1.0, -1.0])
        H1 = np.diag([0.5, 0.25])
        proc = feynman_analog(H0, H1)
        got = monitoring_product(proc, Partition.uniform(6), 1.0, 0.0)
        ref = np.kron(np.eye(2), expm(1j * (H0 + H1), 1.0))
        assert op_norm(got - ref) <= 1e-12

    def test_pauli_pair_first_order_convergence(self):
        # the alternation converges at first order: halving the mesh halves
        # the error; at t - s = 1 the error by N=512 sits near 2.7e-3
        sx = np.array([[0.0, 1.0], [1.0, 0.0]])
        sz = np.diag([1.0, -1.0])
        proc = feynman_analog(sx, sz)
        ref = np.kron(np.eye(2), expm(1j * (sx + sz), 1.0))
        errs = [
            op_norm(monitoring_product(proc, Partition.uniform(N), 1.0, 0.0) - ref)
            for N in (64, 128, 256, 512)
        ]
        assert all(b < a for a, b in zip(errs, errs[1:]))
        ratios = [a / b for a, b in zip(errs, errs[1:])]
        assert all(1.7 <= r <= 2.3 for r in ratios)
        assert errs[-1] <= 5e-3


class TestDiagonalBlock:
    def test_single_point_grid(self):
        T = random_semigroup(2, 50)
        fam = GeneratorFamily.constant(T.generator)
        T_Omega, pis, iota = diagonal_block(fam, [0.3])
        assert op_norm(T_Omega.evaluate(0.5) - T.evaluate(0.5)) == 0.0
        assert np.array_equal(pis[0] @ iota, np.eye(2))

    def test_block_intertwining_exact(self):
        A0 = random_semigroup(2, 51, norm=0.5).generator
        A1 = random_semigroup(2, 52, norm=0.25).generator
        fam = GeneratorFamily.affine(A0, A1)
        grid = [0.0, 0.5, 1.0]
        T_Omega, pis, iota = diagonal_block(fam, grid)
        for k, tau in enumerate(grid):
            T_tau = ContractionSemigroup(fam.at(tau))
            for t in (0.25, 1.0):
                lhs = pis[k] @ T_Omega.evaluate(t)
                rhs = T_tau.evaluate(t) @ pis[k]
                assert op_norm(lhs - rhs) == 0.0
                assert op_norm(pis[k] @ T_Omega.evaluate(t) @ iota - T_tau.evaluate(t)) <= 1e-12


class TestReduction:
    def test_diagnostics(self):
        A0 = random_semigroup(2, 60, norm=0.5).generator
        A1 = random_semigroup(2, 61, norm=0.3).generator
        fam = GeneratorFamily.affine(A0, A1)
        res = reduce_pre_evolution(fam, [0.0, 0.5, 1.0], M=24, part=Partition.uniform(4))
        d = res.diagnostics
        assert d.embedding_identity == 0.0
        assert d.measurement <= 1e-10
        assert d.passivity <= 1e-8
        assert d.word_identity <= max(1e-10, d.word_identity_bound)
        # the duplicating embedding is not an isometry; deficit = |grid| - 1
        assert d.isometry_deficit == pytest.approx(2.0)

    def test_monitors_form_measurement_family(self):
        fam = GeneratorFamily.constant(random_semigroup(2, 62).generator)
        res = reduce_pre_evolution(fam, [0.0, 1.0], M=12)
        P0 = res.process.monitors.at(0.0)
        P1 = res.process.monitors.at(1.0)
        assert op_norm(P0 @ P0 - P0) <= 1e-12
        assert op_norm(P0 @ P1 - P1) <= 1e-12
        for j, tau in zip(res.j_taus, (0.0, 1.0)):
            assert op_norm(j @ res.r - np.eye(2)) == 0.0
