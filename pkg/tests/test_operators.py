import numpy as np
import numpy.testing as npt
import pytest
from scipy import sparse

from hybridnodes.approx import (Laplacian, MON_SIZE, Partial, RBF_SIZE, compute_weights)
from hybridnodes.nodegen import KIND_BOUNDARY
from hybridnodes.operators import FieldState, SparseOperator, apply, assemble, divergence


@pytest.fixture(scope="module")
def dvd_ops(dvd_coarse):
    _, _, ns = dvd_coarse
    table = compute_weights(ns, [Laplacian(), Partial(0), Partial(1)])
    lap = assemble(ns, table, Laplacian())
    dx = assemble(ns, table, Partial(0))
    dy = assemble(ns, table, Partial(1))
    return ns, table, lap, dx, dy


class TestAssemble:
    def test_constant_field_annihilated(self, dvd_ops):
        ns, table, lap, _, _ = dvd_ops
        out = lap.apply(np.ones(len(ns)))
        scale = np.abs(lap.matrix.data).max()
        assert np.abs(out[ns.interior_mask]).max() <= 1e-9 * scale

    def test_quadratic_exactness(self, dvd_ops):
        ns, _, lap, _, _ = dvd_ops
        f = np.sum(ns.positions**2, axis=1)
        out = lap.apply(f)
        npt.assert_allclose(out[ns.interior_mask], 4.0, rtol=1e-6)

    def test_boundary_rows_empty(self, dvd_ops):
        ns, _, lap, _, _ = dvd_ops
        for i in np.nonzero(ns.boundary_mask)[0][:10]:
            idx, w = lap.row(int(i))
            assert len(idx) == 0

    def test_sparsity_counts(self, dvd_ops):
        ns, _, lap, _, _ = dvd_ops
        sizes = np.diff(lap.matrix.indptr)
        interior = sizes[ns.interior_mask]
        assert set(np.unique(interior)) <= {MON_SIZE[2], RBF_SIZE[2]}

    def test_missing_weight_row_raises(self, dvd_coarse):
        _, _, ns = dvd_coarse
        table = compute_weights(ns, [Laplacian()])
        table.sizes = table.sizes.copy()
        victim = int(np.nonzero(ns.interior_mask)[0][3])
        table.sizes[victim] = 0
        with pytest.raises(ValueError, match=str(victim)):
            assemble(ns, table, Laplacian())

    def test_unknown_operator_raises(self, dvd_ops):
        ns, table, *_ = dvd_ops
        with pytest.raises(KeyError):
            assemble(ns, table, Partial(7))


class TestApply:
    def test_zero_field(self, dvd_ops):
        ns, _, lap, _, _ = dvd_ops
        npt.assert_array_equal(apply(lap, np.zeros(len(ns))), 0.0)

    def test_identity_operator(self, dvd_ops):
        ns, *_ = dvd_ops
        n = len(ns)
        eye = SparseOperator(sparse.identity(n, format="csr"), "identity", np.ones(n, dtype=int))
        rng = np.random.default_rng(0)
        f = rng.normal(size=n)
        npt.assert_array_equal(apply(eye, f), f)

    def test_matches_dense_oracle(self, dvd_ops):
        ns, _, lap, _, _ = dvd_ops
        rng = np.random.default_rng(1)
        f = rng.normal(size=len(ns))
        dense = lap.matrix.toarray()
        npt.assert_allclose(apply(lap, f), dense @ f, rtol=1e-12, atol=1e-12 * np.abs(dense @ f).max())

    def test_length_mismatch_raises(self, dvd_ops):
        ns, _, lap, _, _ = dvd_ops
        with pytest.raises(ValueError):
            apply(lap, np.zeros(len(ns) + 1))

    def test_apply_equals_per_row_loop_exactly(self, dvd_ops):
        """Same floating-point accumulation order as a sequential row loop."""
        ns, _, lap, _, _ = dvd_ops
        rng = np.random.default_rng(2)
        f = rng.normal(size=len(ns))
        got = apply(lap, f)
        m = lap.matrix
        for i in rng.choice(len(ns), size=40, replace=False):
            acc = 0.0
            for k in range(m.indptr[i], m.indptr[i + 1]):
                acc += m.data[k] * f[m.indices[k]]
            assert acc == got[i]


class TestDivergence:
    def test_rotational_field_divergence_free(self, dvd_ops):
        ns, _, _, dx, dy = dvd_ops
        v = np.stack([ns.positions[:, 1], -ns.positions[:, 0]], axis=1)
        out = divergence([dx, dy], v)
        assert np.abs(out[ns.interior_mask]).max() < 1e-8

    def test_linear_expansion(self, dvd_ops):
        ns, _, _, dx, dy = dvd_ops
        v = ns.positions.copy()
        out = divergence([dx, dy], v)
        npt.assert_allclose(out[ns.interior_mask], 2.0, rtol=1e-8)

    def test_smooth_field_refinement(self):
        """Divergence error shrinks under refinement toward the analytic value."""
        from hybridnodes.config import CaseConfig
        from hybridnodes.nodegen import hybrid_discretize

        errs = []
        for h in (0.1, 0.05):
            ns = hybrid_discretize(CaseConfig(case="dvd", h_r=h, rng_seed=4))
            table = compute_weights(ns, [Partial(0), Partial(1)])
            dx = assemble(ns, table, Partial(0))
            dy = assemble(ns, table, Partial(1))
            x, y = ns.positions[:, 0], ns.positions[:, 1]
            v = np.stack([np.sin(x) * np.cos(y), np.cos(x) * np.sin(y)], axis=1)
            exact = 2 * np.cos(x) * np.cos(y)
            err = (divergence([dx, dy], v) - exact)[ns.interior_mask]
            errs.append(np.sqrt(np.mean(err**2)))
        assert errs[1] < 0.6 * errs[0]


class TestFieldState:
    def test_zeros_and_finite(self):
        st = FieldState.zeros(10, 2)
        assert st.finite()
        st.temperature[3] = np.nan
        assert not st.finite()

    def test_copy_isolated(self):
        st = FieldState.zeros(5, 2)
        other = st.copy()
        other.pressure[0] = 7.0
        assert st.pressure[0] == 0.0
