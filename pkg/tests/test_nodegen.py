import numpy as np
import numpy.testing as npt
import pytest
from scipy.spatial import cKDTree

from hybridnodes.config import CaseConfig, build_domain
from hybridnodes.errors import ConfigurationError
from hybridnodes.geometry import Circle, DomainSpec, Obstacle
from hybridnodes.nodegen import (KIND_BOUNDARY, KIND_REGULAR, KIND_SCATTERED,
                                 NodeSet, SpacingFunction, carve_transition,
                                 hybrid_discretize, regular_fill, scattered_fill)


def unit_box(*obstacles):
    return DomainSpec(np.zeros(2), np.ones(2), tuple(Obstacle(s, 0.0) for s in obstacles))


class TestRegularFill:
    def test_unit_box_3x3(self):
        fill = regular_fill(unit_box(), 0.25)
        assert len(fill) == 9
        expected = {(0.25 * i, 0.25 * j) for i in (1, 2, 3) for j in (1, 2, 3)}
        got = {(round(x, 12), round(y, 12)) for x, y in fill.positions}
        assert got == expected

    def test_single_center_node(self):
        fill = regular_fill(unit_box(), 0.5)
        npt.assert_allclose(fill.positions, [[0.5, 0.5]])

    def test_obstacle_filter_matches_brute_force(self):
        spec = unit_box(Circle((0.5, 0.5), 0.3))
        fill = regular_fill(spec, 0.25)
        # oracle: enumerate the full lattice and filter by signed distance
        full = np.array([[0.25 * i, 0.25 * j] for i in (1, 2, 3) for j in (1, 2, 3)])
        keep = spec.signed_distance(full) <= -0.125 * (1 - 1e-12)
        assert sorted(map(tuple, fill.positions)) == sorted(map(tuple, full[keep]))
        assert (0.5, 0.5) not in set(map(tuple, fill.positions))

    def test_oversized_spacing_rejected(self):
        with pytest.raises(ConfigurationError):
            regular_fill(unit_box(), 2.0)

    def test_spacing_snaps_to_box(self):
        fill = regular_fill(unit_box(), 0.0398)
        npt.assert_allclose(fill.step, [0.04, 0.04])


class TestCarveTransition:
    def test_zero_width_identity(self):
        spec = unit_box(Circle((0.5, 0.5), 0.2))
        fill = regular_fill(spec, 0.1)
        carved = carve_transition(fill, spec, 0.0, 0.1)
        npt.assert_array_equal(carved.positions, fill.positions)

    def test_huge_width_empties(self):
        spec = unit_box(Circle((0.5, 0.5), 0.2))
        fill = regular_fill(spec, 0.1)
        carved = carve_transition(fill, spec, 50.0, 0.1)
        assert len(carved) == 0

    def test_matches_brute_force_distance_filter(self):
        spec = unit_box(Circle((0.5, 0.5), 0.2))
        fill = regular_fill(spec, 0.05)
        carved = carve_transition(fill, spec, 2.0, 0.05)
        keep = spec.obstacle_distance(fill.positions) >= 0.1
        npt.assert_array_equal(carved.positions, fill.positions[keep])


class TestScatteredFill:
    def test_local_spacing_band(self, scattered_cloud):
        _, _, ns = scattered_cloud
        scattered = ns.positions[ns.kind == KIND_SCATTERED]
        d, _ = cKDTree(ns.positions).query(scattered, k=2)
        ratio = d[:, 1] / ns.spacing[ns.kind == KIND_SCATTERED]
        assert np.mean((ratio >= 0.7) & (ratio <= 1.5)) >= 0.99

    def test_count_near_area_density(self, scattered_cloud):
        _, _, ns = scattered_cloud
        h = 0.05
        count = int(np.sum(ns.interior_mask))
        assert abs(count - 1.0 / h**2) <= 0.25 / h**2

    def test_deterministic(self):
        spec = unit_box()
        spacing = SpacingFunction(0.1, 0.1, 0.0)
        seeds = np.array([[0.5, 0.0], [0.0, 0.5], [1.0, 0.5], [0.5, 1.0]])
        a = scattered_fill(spec, seeds, spacing, rng_seed=11)
        b = scattered_fill(spec, seeds, spacing, rng_seed=11)
        assert a.tobytes() == b.tobytes()
        c = scattered_fill(spec, seeds, spacing, rng_seed=12)
        assert a.shape != c.shape or a.tobytes() != c.tobytes()

    def test_empty_void(self):
        spec = unit_box()
        spacing = SpacingFunction(0.1, 0.1, 0.0)
        seeds = np.array([[0.5, 0.5]])
        region = lambda pts: np.zeros(len(np.atleast_2d(pts)), dtype=bool)
        out = scattered_fill(spec, seeds, spacing, 1, region=region)
        assert out.shape == (0, 2)


class TestSpacingFunction:
    def test_plateau_and_surface_values(self):
        spec = unit_box(Circle((0.5, 0.5), 0.2))
        fn = SpacingFunction(0.03, 0.01, 4.0, spec.obstacle_distance)
        on_surface = np.array([[0.7, 0.5]])
        far = np.array([[0.95, 0.05]])
        mid = np.array([[0.76, 0.5]])  # distance 0.06 = half the 0.12 layer
        npt.assert_allclose(fn(on_surface), [0.01])
        npt.assert_allclose(fn(far), [0.03])
        npt.assert_allclose(fn(mid), [0.02])

    def test_hs_above_hr_rejected(self):
        with pytest.raises(ConfigurationError):
            SpacingFunction(0.01, 0.02, 4.0)


class TestHybridDiscretize:
    def test_dvd_quarter_structure(self, dvd_coarse):
        config, spec, ns = dvd_coarse
        assert 560 <= len(ns) <= 700  # about 630 at h = 0.0398
        nr, nsc, nb = ns.counts
        assert nr > 0 and nsc > 0 and nb > 0
        step = ns.lattice.step[0]
        reg = ns.positions[ns.kind == KIND_REGULAR]
        # regular nodes on the exact lattice, inside the two regular quarters
        frac = reg / step
        npt.assert_allclose(frac, np.round(frac), atol=1e-9)
        in_scattered_region = (reg[:, 0] < 0.5) == (reg[:, 1] < 0.5)
        assert not in_scattered_region.any()
        sc = ns.positions[ns.kind == KIND_SCATTERED]
        assert (((sc[:, 0] < 0.5) == (sc[:, 1] < 0.5))).all()

    def test_min_distance_invariant(self, dvd_coarse):
        _, _, ns = dvd_coarse
        assert ns.min_distance_violations() == 0

    def test_stored_h_matches_spacing_function(self, obstacles_desk):
        config, spec, ns = obstacles_desk
        step = float(np.max(ns.lattice.step))
        fn = SpacingFunction(step, config.h_s, config.delta_h, spec.obstacle_distance)
        scattered = ns.kind == KIND_SCATTERED
        npt.assert_array_equal(ns.spacing[scattered], fn(ns.positions[scattered]))

    def test_obstacle_layer_invariants(self, obstacles_desk):
        config, spec, ns = obstacles_desk
        width = config.delta_h * float(np.max(ns.lattice.step))
        dist = spec.obstacle_distance(ns.positions)
        assert np.all(dist[ns.kind == KIND_SCATTERED] < width)
        assert np.all(dist[ns.kind == KIND_REGULAR] >= width)
        assert ns.min_distance_violations() == 0

    def test_no_node_outside_domain(self, obstacles_desk):
        _, spec, ns = obstacles_desk
        assert np.all(spec.signed_distance(ns.positions) <= 1e-9)

    @pytest.mark.slow
    def test_obstacles2d_paper_scale_counts(self):
        config = CaseConfig(case="obstacles2d")  # h_r = 0.01, h_s = h_r/3
        ns = hybrid_discretize(config)
        nr, nsc, nb = ns.counts
        assert abs(len(ns) - 11_600) / 11_600 < 0.15
        assert abs(nsc / nr - 3149 / 8507) / (3149 / 8507) < 0.30

    def test_split_limits(self):
        full = CaseConfig(case="dvd-split", h_r=0.05, delta_h=1 / 0.05)
        ns = hybrid_discretize(full)
        assert ns.counts[0] == 0 and ns.counts[1] > 0
        none = CaseConfig(case="dvd-split", h_r=0.05, delta_h=0.0)
        ns2 = hybrid_discretize(none)
        assert ns2.counts[1] == 0 and ns2.counts[0] > 0

    def test_split_orientation(self):
        cfg = CaseConfig(case="dvd-split", h_r=0.05, delta_h=8, split_orientation="horizontal")
        ns = hybrid_discretize(cfg)
        cut = 8 * 0.05
        sc = ns.positions[ns.kind == KIND_SCATTERED]
        reg = ns.positions[ns.kind == KIND_REGULAR]
        assert np.all(sc[:, 1] < cut) and np.all(reg[:, 1] >= cut)
        cfg_v = cfg.with_overrides(split_orientation="vertical")
        ns_v = hybrid_discretize(cfg_v)
        sc_v = ns_v.positions[ns_v.kind == KIND_SCATTERED]
        assert np.all(sc_v[:, 0] < cut)

    def test_deterministic(self, dvd_coarse):
        config, spec, ns = dvd_coarse
        again = hybrid_discretize(config, spec)
        assert ns.positions.tobytes() == again.positions.tobytes()

    def test_csv_roundtrip(self, dvd_coarse, tmp_path):
        _, _, ns = dvd_coarse
        path = tmp_path / "nodes.csv"
        ns.to_csv(path)
        back = NodeSet.from_csv(path)
        npt.assert_array_equal(back.positions, ns.positions)
        npt.assert_array_equal(back.spacing, ns.spacing)
        npt.assert_array_equal(back.kind, ns.kind)
        npt.assert_array_equal(back.role, ns.role)
        both_nan = np.isnan(back.bc_value) & np.isnan(ns.bc_value)
        npt.assert_array_equal(back.bc_value[~both_nan], ns.bc_value[~both_nan])
