"""Site layout, distances, and terrain profiles."""

from __future__ import annotations

import itertools

import pytest

from aralab.topology import (
    TopologyError,
    default_topology_path,
    load_topology,
    serialize_topology,
)


def test_site_census(topology):
    assert len(topology.bs_sites()) == 6
    assert len(topology.ue_sites()) == 7
    assert len(topology.site_ids()) == 13


def test_long_haul_span(topology):
    assert topology.distance("wilson-hall", "agronomy-farm") == pytest.approx(10150.0, abs=1.0)


def test_distance_metric_properties(topology):
    ids = topology.site_ids()
    for a, b in itertools.combinations(ids[:6], 2):
        assert topology.distance(a, b) == pytest.approx(topology.distance(b, a))
        assert topology.distance(a, b) > 0
    assert topology.distance(ids[0], ids[0]) == 0.0


def test_unknown_site_raises(topology):
    with pytest.raises(TopologyError):
        topology.site("atlantis")
    with pytest.raises(TopologyError):
        topology.distance("wilson-hall", "atlantis")


def test_terrain_profile_states(topology):
    d, profile = topology.distance_and_profile("wilson-hall", "ue-7")
    assert d > 6000
    assert profile.state_at(100.0) == "clear"
    assert profile.state_at(1600.0) == "blocked"
    assert profile.state_at(5000.0) == "partial"
    assert profile.worst_state() == "blocked"


def test_route_points_cover_span(topology):
    d, profile = topology.distance_and_profile("wilson-hall", "ue-7")
    pts = profile.points(250.0)
    distances = [p.distance_m for p in pts]
    assert distances == sorted(distances)
    assert distances[0] == 0.0
    assert distances[-1] == pytest.approx(d)
    assert all(p.state in ("clear", "partial", "blocked") for p in pts)


def test_profile_reversal(topology):
    _, profile = topology.distance_and_profile("wilson-hall", "ue-7")
    flipped = profile.reversed()
    for d in (100.0, 1600.0, 5000.0):
        assert flipped.state_at(profile.length_m - d - 1e-6) == profile.state_at(d)


def test_validate_against_catalog(topology, catalog):
    assert topology.validate(catalog) == []


def test_serialize_round_trip(topology, tmp_path):
    path = tmp_path / "topology.yaml"
    path.write_text(serialize_topology(topology))
    again = load_topology(path)
    assert set(again.site_ids()) == set(topology.site_ids())
    assert again.distance("wilson-hall", "agronomy-farm") == pytest.approx(
        topology.distance("wilson-hall", "agronomy-farm")
    )


def test_default_path_exists():
    assert default_topology_path().exists()
