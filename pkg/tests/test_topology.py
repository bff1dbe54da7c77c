import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from niasim.topology import (
    PlacementPolicy,
    Topology,
    TopologyConfig,
    build_topology,
)


def small_topo(nodes=100, wings=4):
    return Topology(TopologyConfig(nodes=nodes, wings=wings, leaf_switches=16,
                                   core_switches=8))


class TestConfig:
    def test_default_shape(self):
        cfg = TopologyConfig()
        assert cfg.wings == 4
        assert cfg.nodes == 1500
        assert cfg.leaf_switches == 84
        assert cfg.core_switches == 72
        assert cfg.switch_ports == 36
        assert cfg.max_nodes_per_wing == 432
        assert cfg.validate() == []

    def test_validation_collects_problems(self):
        cfg = TopologyConfig(wings=0, nodes=-5, inter_wing_blocking=0.5)
        problems = cfg.validate()
        assert len(problems) >= 3

    def test_wing_cap_enforced(self):
        # 4 wings x 432 = 1728 is the ceiling for the default wing count
        cfg = TopologyConfig(nodes=1729)
        assert any("wing" in p for p in cfg.validate())


class TestLayout:
    def test_default_wing_populations_balanced(self):
        topo = build_topology()
        assert topo.wing_populations() == [375, 375, 375, 375]

    def test_round_robin_node_assignment(self):
        topo = small_topo()
        for node in range(20):
            assert topo.wing_of(node) == node % 4

    def test_uneven_node_count(self):
        topo = small_topo(nodes=10)
        assert topo.wing_populations() == [3, 3, 2, 2]

    def test_unknown_node_rejected(self):
        topo = small_topo()
        with pytest.raises(ValueError):
            topo.wing_of(100)
        with pytest.raises(ValueError):
            topo.hop_count(0, -1)


class TestHops:
    def test_identity_is_zero(self):
        topo = small_topo()
        for node in topo.all_nodes():
            assert topo.hop_count(node, node) == 0

    def test_symmetry_exhaustive(self):
        topo = small_topo(nodes=40)
        for a in topo.all_nodes():
            for b in topo.all_nodes():
                assert topo.hop_count(a, b) == topo.hop_count(b, a)

    def test_hop_levels(self):
        topo = small_topo()
        a = 0
        same_leaf = next(n for n in topo.all_nodes()
                         if n != a and topo.leaf_of(n) == topo.leaf_of(a))
        same_wing = next(n for n in topo.all_nodes()
                         if topo.wing_of(n) == topo.wing_of(a)
                         and topo.leaf_of(n) != topo.leaf_of(a))
        other_wing = next(n for n in topo.all_nodes()
                          if topo.wing_of(n) != topo.wing_of(a))
        assert topo.hop_count(a, same_leaf) == 2
        assert topo.hop_count(a, same_wing) == 4
        assert topo.hop_count(a, other_wing) == 6

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 99), st.integers(0, 99))
    def test_symmetry_property(self, a, b):
        topo = small_topo()
        assert topo.hop_count(a, b) == topo.hop_count(b, a)


class TestBlocking:
    def test_single_wing_is_nonblocking(self):
        topo = small_topo()
        wing0 = [n for n in topo.all_nodes() if topo.wing_of(n) == 0]
        assert topo.blocking_factor(wing0[:5]) == 1.0

    def test_cross_wing_blocking(self):
        topo = small_topo()
        assert topo.blocking_factor([0, 1]) == 2.0

    def test_blocking_iff_span_exceeds_one(self):
        # exhaustive over pairs on a small instance
        topo = small_topo(nodes=24)
        for a in topo.all_nodes():
            for b in topo.all_nodes():
                expected = 2.0 if topo.wing_of(a) != topo.wing_of(b) else 1.0
                assert topo.blocking_factor([a, b]) == expected

    def test_empty_set_rejected(self):
        with pytest.raises(ValueError):
            small_topo().blocking_factor([])


class TestSelection:
    def test_pack_prefers_single_wing(self):
        topo = small_topo()
        picked = topo.select_nodes(10, PlacementPolicy.PACK_BY_WING)
        assert picked is not None
        assert len({topo.wing_of(n) for n in picked}) == 1

    def test_pack_falls_back_to_fullest_wings(self):
        topo = small_topo(nodes=40)  # 10 per wing
        picked = topo.select_nodes(25, PlacementPolicy.PACK_BY_WING)
        assert picked is not None and len(picked) == 25
        assert len({topo.wing_of(n) for n in picked}) == 3

    def test_any_takes_lowest_ids(self):
        topo = small_topo()
        assert topo.select_nodes(4, PlacementPolicy.ANY) == frozenset({0, 1, 2, 3})

    def test_wing_restriction(self):
        topo = small_topo()
        picked = topo.select_nodes(5, PlacementPolicy.ANY, wing_restriction=2)
        assert picked is not None
        assert all(topo.wing_of(n) == 2 for n in picked)

    def test_exclude_respected(self):
        topo = small_topo()
        picked = topo.select_nodes(3, PlacementPolicy.ANY,
                                   exclude=frozenset({0, 1}))
        assert picked == frozenset({2, 3, 4})

    def test_insufficient_returns_none(self):
        topo = small_topo(nodes=10)
        assert topo.select_nodes(11) is None

    def test_selection_does_not_mutate(self):
        topo = small_topo()
        before = topo.free_count()
        topo.select_nodes(10)
        assert topo.free_count() == before

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 40), st.sampled_from(list(PlacementPolicy)))
    def test_selected_nodes_are_free_and_distinct(self, n, policy):
        topo = small_topo(nodes=40)
        topo.mark_busy(range(0, 10))
        picked = topo.select_nodes(n, policy)
        if n <= 30:
            assert picked is not None and len(picked) == n
            assert all(topo.is_free(node) for node in picked)
        else:
            assert picked is None


class TestAllocationState:
    def test_busy_free_cycle(self):
        topo = small_topo()
        topo.mark_busy([0, 1, 2])
        assert topo.free_count() == 97
        assert not topo.is_free(0)
        topo.mark_free([0, 1, 2])
        assert topo.free_count() == 100

    def test_double_busy_rejected(self):
        topo = small_topo()
        topo.mark_busy([0])
        with pytest.raises(ValueError):
            topo.mark_busy([0])

    def test_free_of_idle_node_rejected(self):
        topo = small_topo()
        with pytest.raises(ValueError):
            topo.mark_free([0])

    def test_failed_busy_changes_nothing(self):
        topo = small_topo()
        topo.mark_busy([5])
        with pytest.raises(ValueError):
            topo.mark_busy([4, 5])
        assert topo.is_free(4)


class TestLocality:
    def test_single_node(self):
        topo = small_topo()
        assert topo.locality([0]) == (1, 1.0, 0)

    def test_cross_wing(self):
        topo = small_topo()
        span, blocking, hops = topo.locality([0, 1])
        assert (span, blocking, hops) == (2, 2.0, 6)

    def test_same_leaf_pair(self):
        topo = small_topo()
        a = 0
        b = next(n for n in topo.all_nodes()
                 if n != a and topo.leaf_of(n) == topo.leaf_of(a))
        assert topo.locality([a, b]) == (1, 1.0, 2)
