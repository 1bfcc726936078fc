import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hallusim.distcore import (
    Corpus,
    Dist,
    Partition,
    coarsen,
    level_set_partition,
    mass_on,
    miscalibration,
    tv_distance,
)


def random_dist(rng, n):
    return Dist(rng.dirichlet(np.ones(n)))


def random_partition(rng, n):
    cells = int(rng.integers(1, n + 1))
    cell_of = rng.integers(0, cells, size=n)
    cell_of[rng.permutation(n)[:cells]] = np.arange(cells)
    return Partition(cell_of, n_cells=cells)


class TestDist:
    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            Dist(np.array([0.5, -0.1, 0.6]))

    def test_renormalizes_small_drift(self):
        d = Dist(np.array([0.5, 0.5 + 3e-7]))
        assert abs(d.mass.sum() - 1.0) <= 1e-9

    def test_rejects_large_drift(self):
        with pytest.raises(ValueError):
            Dist(np.array([0.5, 0.6]))

    def test_immutable(self):
        d = Dist(np.array([0.5, 0.5]))
        with pytest.raises(ValueError):
            d.mass[0] = 1.0

    def test_json_round_trip(self):
        d = Dist(np.array([0.25, 0.75]))
        assert Dist.from_json(json.loads(json.dumps(d.to_json()))) == d


class TestPartition:
    def test_rejects_empty_cell(self):
        with pytest.raises(ValueError):
            Partition(np.array([0, 0, 2]), n_cells=3)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            Partition(np.array([0, 5]), n_cells=2)

    def test_cells_partition_everything(self, rng):
        pi = random_partition(rng, 17)
        members = np.sort(np.concatenate(pi.cells()))
        assert np.array_equal(members, np.arange(17))

    def test_json_round_trip(self):
        pi = Partition(np.array([1, 0, 1]))
        assert np.array_equal(Partition.from_json(pi.to_json()).cell_of, pi.cell_of)


class TestCorpus:
    def test_observed_unseen_partition(self, rng):
        c = Corpus(rng.integers(0, 3, size=12))
        assert set(c.observed) | set(c.unseen) == set(range(12))
        assert not set(c.observed) & set(c.unseen)
        assert c.n == c.counts.sum()

    def test_rejects_negative_counts(self):
        with pytest.raises(ValueError):
            Corpus(np.array([1, -1]))

    def test_rejects_fractional_counts(self):
        with pytest.raises(ValueError):
            Corpus(np.array([1.5, 0.5]))


class TestTvDistance:
    def test_identical(self):
        d = Dist(np.array([0.3, 0.7]))
        assert tv_distance(d, Dist(np.array([0.3, 0.7]))) == 0.0

    def test_disjoint_point_masses(self):
        assert tv_distance(Dist(np.array([1.0, 0.0])), Dist(np.array([0.0, 1.0]))) == 1.0

    def test_half_l1(self):
        assert tv_distance(Dist(np.array([0.5, 0.5])), Dist(np.array([1.0, 0.0]))) == 0.5

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            tv_distance(Dist(np.array([1.0])), Dist(np.array([0.5, 0.5])))

    def test_symmetry_and_triangle(self, rng):
        for _ in range(200):
            n = int(rng.integers(2, 20))
            p, q, s = (random_dist(rng, n) for _ in range(3))
            assert tv_distance(p, q) == pytest.approx(tv_distance(q, p), abs=1e-15)
            assert tv_distance(p, s) <= tv_distance(p, q) + tv_distance(q, s) + 1e-12

    def test_equals_max_over_sets_form(self, rng):
        # exhaustive over subsets at small N: half-L1 equals the set-maximum
        for _ in range(20):
            n = int(rng.integers(2, 10))
            p, q = random_dist(rng, n), random_dist(rng, n)
            best = 0.0
            for mask in range(2**n):
                ids = [y for y in range(n) if mask >> y & 1]
                best = max(best, abs(mass_on(p, ids) - mass_on(q, ids)))
            assert tv_distance(p, q) == pytest.approx(best, abs=1e-12)

    @given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=16))
    @settings(max_examples=100, deadline=None)
    def test_range(self, raw):
        w = np.array(raw)
        p = Dist(w / w.sum())
        q = Dist(np.ones(len(raw)) / len(raw))
        assert 0.0 <= tv_distance(p, q) <= 1.0


class TestCoarsen:
    def test_singleton_identity(self):
        p = Dist(np.array([0.1, 0.2, 0.7]))
        out = coarsen(p, Partition.singletons(3))
        assert np.array_equal(out.mass, p.mass)

    def test_single_cell_uniform(self, rng):
        p = random_dist(rng, 4)
        out = coarsen(p, Partition.single_cell(4))
        np.testing.assert_allclose(out.mass, 0.25, atol=1e-12)

    def test_formula(self):
        p = Dist(np.array([0.6, 0.4, 0.0]))
        out = coarsen(p, Partition(np.array([0, 0, 1]), n_cells=2))
        np.testing.assert_allclose(out.mass, [0.5, 0.5, 0.0], atol=1e-15)

    def test_preserves_cell_mass(self, rng):
        for _ in range(200):
            n = int(rng.integers(2, 40))
            p = random_dist(rng, n)
            pi = random_partition(rng, n)
            out = coarsen(p, pi)
            for members in pi.cells():
                assert mass_on(out, members) == pytest.approx(
                    mass_on(p, members), abs=1e-12
                )

    def test_idempotent_on_own_level_sets(self, rng):
        for _ in range(100):
            n = int(rng.integers(2, 40))
            g = coarsen(random_dist(rng, n), random_partition(rng, n))
            again = coarsen(g, level_set_partition(g))
            np.testing.assert_allclose(again.mass, g.mass, atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            coarsen(Dist(np.array([1.0])), Partition.singletons(2))


class TestLevelSetPartition:
    def test_uniform_single_cell(self):
        pi = level_set_partition(Dist(np.full(5, 0.2)))
        assert pi.n_cells == 1

    def test_two_levels(self):
        pi = level_set_partition(Dist(np.array([0.5, 0.5, 0.0])))
        assert pi.n_cells == 2
        assert pi.cell_of[0] == pi.cell_of[1] != pi.cell_of[2]
        # cells numbered by ascending value: the zero statement is cell 0
        assert pi.cell_of[2] == 0

    def test_all_distinct_gives_singletons(self):
        pi = level_set_partition(Dist(np.array([0.1, 0.2, 0.3, 0.4])))
        assert pi.n_cells == 4

    def test_epsilon_grouping(self):
        g = Dist(np.array([0.2, 0.2 + 1e-9, 0.6 - 1e-9]))
        assert level_set_partition(g).n_cells == 3
        assert level_set_partition(g, eps=1e-6).n_cells == 2


class TestMiscalibration:
    def test_coarsening_is_calibrated(self, rng):
        # invariant sweep: every coarsening of p has zero miscalibration
        for _ in range(1000):
            n = int(rng.integers(2, 65))
            p = random_dist(rng, n)
            pi = random_partition(rng, n)
            assert miscalibration(coarsen(p, pi), p) == pytest.approx(0.0, abs=1e-12)

    def test_self_calibrated(self, rng):
        p = random_dist(rng, 12)
        assert miscalibration(p, p) == pytest.approx(0.0, abs=1e-12)

    def test_self_calibrated_with_ties(self):
        p = Dist(np.array([0.25, 0.25, 0.5, 0.0]))
        assert miscalibration(p, p) == pytest.approx(0.0, abs=1e-12)

    def test_uniform_model_of_point_mass(self):
        assert miscalibration(
            Dist(np.array([0.5, 0.5])), Dist(np.array([1.0, 0.0]))
        ) == pytest.approx(0.0, abs=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            miscalibration(Dist(np.array([1.0])), Dist(np.array([0.5, 0.5])))


class TestMassOn:
    def test_empty_set(self, rng):
        assert mass_on(random_dist(rng, 5), []) == 0.0

    def test_full_set(self, rng):
        p = random_dist(rng, 5)
        assert mass_on(p, range(5)) == pytest.approx(1.0, abs=1e-9)

    def test_direct_sum(self):
        p = Dist(np.array([0.2, 0.3, 0.5]))
        assert mass_on(p, {0, 2}) == pytest.approx(0.7, abs=1e-15)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            mass_on(Dist(np.array([0.5, 0.5])), [2])
