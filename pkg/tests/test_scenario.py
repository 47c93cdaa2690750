"""Scenario generator tests: determinism, proportions, coverage, distances,
serialization round-trips."""

import numpy as np
import pytest

from oranplan import scenario as scen
from oranplan.errors import ParameterError


def test_generate_is_deterministic_byte_identical():
    a = scen.dumps(scen.generate("industrial", 1.0, seed=5))
    b = scen.dumps(scen.generate("industrial", 1.0, seed=5))
    assert a == b
    c = scen.dumps(scen.generate("industrial", 1.0, seed=6))
    assert a != c


def test_side_out_of_range_rejected():
    with pytest.raises(ParameterError):
        scen.generate("urban", 0.5, seed=1)
    with pytest.raises(ParameterError):
        scen.generate("urban", 9.0, seed=1)
    with pytest.raises(ParameterError):
        scen.generate("suburban", 1.0, seed=1)


def test_ue_count_and_slice_shares():
    scn = scen.generate("urban", 1.0, seed=7)
    assert len(scn.ues) == 1000
    counts = {s.id: 0 for s in scn.slices}
    for u in scn.ues:
        counts[u.slice_id] += 1
    for s in scn.slices:
        assert abs(counts[s.id] / len(scn.ues) - s.share) <= 0.03


def test_rural_area_scaling():
    n1 = len(scen.generate("rural", 1.0, seed=3).ues)
    n2 = len(scen.generate("rural", 2.0, seed=3).ues)
    assert n2 == 4 * n1


def test_demands_within_scaled_range():
    scn = scen.generate("industrial", 1.0, seed=11)
    for u in scn.ues:
        s = scn.slice_by_id(u.slice_id)
        n_active = bin(u.active_mask).count("1")
        assert 1 <= n_active <= 24
        factor = n_active / 24.0
        assert 0 < u.ul_demand <= s.ul_demand_range[1] + 1e-9
        assert 0 < u.dl_demand <= s.dl_demand_range[1] + 1e-9
        assert u.ul_demand >= s.ul_demand_range[0] * factor - 1e-9
        assert u.dl_demand >= s.dl_demand_range[0] * factor - 1e-9


def test_activity_tracks_density_profile():
    scn = scen.generate("urban", 1.0, seed=2)
    profile = np.array(scn.density_profile)
    counts = np.zeros(24)
    for u in scn.ues:
        for h in range(24):
            if u.active_mask >> h & 1:
                counts[h] += 1
    frac = counts / len(scn.ues)
    # Binomial noise at n=1000 stays well under 0.06 per hour.
    assert np.max(np.abs(frac - profile)) < 0.06


def test_ru_density_within_limit():
    for cls in scen.AREA_CLASSES:
        for side in (1.0, 2.0, 4.0):
            scn = scen.generate(cls, side, seed=1)
            assert len(scn.candidate_rus) <= 15 * side * side
            for r in scn.candidate_rus:
                assert 0.5 <= r.coverage <= 1.0
                assert 0 <= r.position[0] <= side and 0 <= r.position[1] <= side


def test_every_ue_within_coverage_of_same_slice_ru():
    for cls in scen.AREA_CLASSES:
        scn = scen.generate(cls, 2.0, seed=4)
        d = scn.sites.d_ue_ru
        for u, ue in enumerate(scn.ues):
            ok = any(
                d[u, b] <= r.coverage
                for b, r in enumerate(scn.candidate_rus)
                if r.slice_id == ue.slice_id
            )
            assert ok, f"UE {u} of {ue.slice_id} has no in-range candidate"


def test_stage1_sites_colocated_with_rus():
    scn = scen.generate("urban", 1.0, seed=9)
    assert scn.sites.stage1_sites.shape[0] == len(scn.candidate_rus)
    for b, r in enumerate(scn.candidate_rus):
        assert tuple(scn.sites.stage1_sites[b]) == r.position


def test_distance_rebuild_matches_and_triangle():
    scn = scen.generate("rural", 1.0, seed=8)
    rebuilt = scen.distances(scn)
    np.testing.assert_allclose(rebuilt.d_ue_ru, scn.sites.d_ue_ru)
    np.testing.assert_allclose(rebuilt.rn1, scn.sites.rn1)
    rng = np.random.default_rng(0)
    pts = rng.uniform(0, 5, size=(30, 2))
    d = scen.build_site_graph(pts, pts, pts, np.zeros((0, 2))).d_ue_ru
    for _ in range(200):
        i, j, k = rng.integers(0, 30, size=3)
        assert d[i, j] <= d[i, k] + d[k, j] + 1e-12


def test_euclid_known_values():
    a = np.array([[0.0, 0.0]])
    b = np.array([[3.0, 4.0], [0.0, 0.0]])
    d = scen._euclid(a, b)
    assert d[0, 0] == pytest.approx(5.0)
    assert d[0, 1] == 0.0


def test_serialization_round_trip():
    scn = scen.generate("industrial", 1.0, seed=13)
    text = scen.dumps(scn)
    back = scen.loads(text)
    assert scen.dumps(back) == text
    assert len(back.ues) == len(scn.ues)
    assert back.candidate_rus == scn.candidate_rus
    np.testing.assert_allclose(back.sites.d_ue_ru, scn.sites.d_ue_ru)


def test_overrides_clustered_and_peak_law():
    scn = scen.generate("urban", 1.0, seed=4,
                        overrides={"placement": "clustered", "demand_law": "peak"})
    for u in scn.ues[:50]:
        s = scn.slice_by_id(u.slice_id)
        n_active = bin(u.active_mask).count("1")
        assert u.ul_demand == pytest.approx(s.ul_demand_range[1] * n_active / 24.0)
    with pytest.raises(ParameterError):
        scen.generate("urban", 1.0, seed=4, overrides={"bogus": 1})


def test_slice_budget_ordering_enforced():
    with pytest.raises(ParameterError):
        scen.generate("urban", 1.0, seed=1,
                      overrides={"slices": {"uRLLC": {"mh_budget": 2.0}}})
