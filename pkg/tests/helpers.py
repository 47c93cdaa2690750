"""Hand-sized instance factories shared by the test modules.

These bypass the scenario generator so the solvers can be exercised on
instances small enough for exhaustive oracles, with coverage and capacity
chosen to make eligibility and OTA-load constraints actually bind.
"""

import numpy as np

from oranplan import assoc, deploy, lagrangian, scenario as scen
from oranplan.cost import PriceBook

MBPS = 1e6
GBPS = 1e9

SLICE_TEMPLATE = {
    "uRLLC": dict(ul=(10 * MBPS, 20 * MBPS), dl=(30 * MBPS, 50 * MBPS),
                  ota=200e-6, mh=100e-6, fh=100e-6, bbu=50e-6),
    "eMBB": dict(ul=(50 * MBPS, 80 * MBPS), dl=(100 * MBPS, 150 * MBPS),
                 ota=300e-6, mh=500e-6, fh=100e-6, bbu=80e-6),
    "mMTC": dict(ul=(10 * MBPS, 20 * MBPS), dl=(10 * MBPS, 20 * MBPS),
                 ota=400e-6, mh=1000e-6, fh=100e-6, bbu=100e-6),
}


def make_slices(n_slices):
    ids = list(scen.SLICE_IDS[:n_slices])
    share = 1.0 / n_slices
    out = []
    for sid in ids:
        t = SLICE_TEMPLATE[sid]
        out.append(scen.SliceSpec(
            id=sid, share=share, ul_demand_range=t["ul"], dl_demand_range=t["dl"],
            ota_budget=t["ota"], mh_budget=t["mh"], fh_budget=t["fh"], bbu_budget=t["bbu"],
        ))
    return tuple(out)


def tiny_scenario(seed, n_ues=6, n_rus=3, n_slices=1, side=2.0,
                  coverage=(0.7, 1.1), caps=(0.15 * GBPS, 0.45 * GBPS),
                  n_stage2=0, stage2_positions=None):
    """Random small association instance, structurally feasible by design.

    RU capacities are deliberately small so the per-TTI transmission load
    makes the OTA constraints bind at a handful of UEs per RU.
    """
    rng = np.random.default_rng(seed)
    slices = make_slices(n_slices)
    ue_pos = rng.uniform(0.0, side, size=(n_ues, 2))
    ue_slice = [i % n_slices for i in range(n_ues)]
    ru_pos = rng.uniform(0.0, side, size=(n_rus, 2))
    ru_slice = [i % n_slices for i in range(n_rus)]
    cov = rng.uniform(coverage[0], coverage[1], size=n_rus)
    ul_cap = rng.uniform(caps[0], caps[1], size=n_rus)
    dl_cap = rng.uniform(caps[0], caps[1], size=n_rus)

    # Fix-up: every UE must have a same-slice RU within coverage.
    for u in range(n_ues):
        mates = [b for b in range(n_rus) if ru_slice[b] == ue_slice[u]]
        if not mates:
            ru_slice[u % n_rus] = ue_slice[u]
            mates = [u % n_rus]
        dists = [float(np.hypot(*(ue_pos[u] - ru_pos[b]))) for b in mates]
        if all(d > cov[b] for d, b in zip(dists, mates)):
            b = mates[int(rng.integers(len(mates)))]
            angle = rng.uniform(0, 2 * np.pi)
            r = cov[b] * 0.8 * rng.uniform(0.2, 1.0)
            ue_pos[u] = np.clip(ru_pos[b] + r * np.array([np.cos(angle), np.sin(angle)]), 0.0, side)

    ues = []
    for u in range(n_ues):
        s = slices[ue_slice[u]]
        ues.append(scen.UE(
            position=(float(ue_pos[u, 0]), float(ue_pos[u, 1])), slice_id=s.id,
            ul_demand=float(rng.uniform(*s.ul_demand_range)),
            dl_demand=float(rng.uniform(*s.dl_demand_range)),
            active_mask=(1 << 24) - 1,
        ))
    if stage2_positions is None:
        stage2_positions = [(side / 2.0 + 0.3 * i, side / 2.0) for i in range(n_stage2)]
    sites = scen.build_site_graph(
        ue_pos=ue_pos, ru_pos=ru_pos,
        stage1_sites=ru_pos.copy(),
        stage2_sites=np.array(stage2_positions, dtype=float).reshape(len(stage2_positions), 2),
    )

    # Capacities start small so OTA loads bind; scale up just enough that
    # a constructive attachment exists, keeping the instance feasible.
    for _ in range(8):
        rus = []
        for b in range(n_rus):
            rus.append(scen.CandidateRU(
                position=(float(ru_pos[b, 0]), float(ru_pos[b, 1])), slice_id=slices[ru_slice[b]].id,
                kind="macro", coverage=float(cov[b]),
                ul_cap=float(ul_cap[b]), dl_cap=float(dl_cap[b]),
                fh_demand_ul=9.632 * GBPS, fh_demand_dl=11.113 * GBPS,
                mh_demand_ul=1.111 * GBPS, mh_demand_dl=1.111 * GBPS,
                gops_ul=(720.0, 900.0, 180.0), gops_dl=(720.0, 900.0, 180.0),
            ))
        scn = scen.Scenario(
            area_class="urban", side_km=side, seed=int(seed), slices=slices,
            ues=tuple(ues), candidate_rus=tuple(rus), sites=sites,
            density_profile=scen.DENSITY_PROFILES["urban"], tti=0.5e-3,
        )
        model = assoc.build_p1(scn)
        if lagrangian.repair_ub(model, np.ones(n_rus, dtype=bool)) is not None:
            return scn
        ul_cap = ul_cap * 1.4
        dl_cap = dl_cap * 1.4
    raise AssertionError(f"could not calibrate a feasible tiny instance for seed {seed}")


def tiny_p2(seed, n_rus=3, n_olt1=2, n_olt2=1, n_slices=2, spread=6.0,
            config=None, book=None, mh_demand=1.111 * GBPS, fh_demand=(9.632 * GBPS, 11.113 * GBPS)):
    """Random small deployment instance: installed RUs plus OLT candidate
    sites laid out within PON reach."""
    rng = np.random.default_rng(seed)
    slices = make_slices(n_slices)
    ru_pos = rng.uniform(0.0, spread, size=(n_rus, 2))
    ru_slice = [i % n_slices for i in range(n_rus)]
    rus = []
    for b in range(n_rus):
        rus.append(scen.CandidateRU(
            position=(float(ru_pos[b, 0]), float(ru_pos[b, 1])), slice_id=slices[ru_slice[b]].id,
            kind="macro", coverage=1.0, ul_cap=28 * GBPS, dl_cap=30 * GBPS,
            fh_demand_ul=fh_demand[0], fh_demand_dl=fh_demand[1],
            mh_demand_ul=mh_demand, mh_demand_dl=mh_demand,
            gops_ul=(720.0, 900.0, 180.0), gops_dl=(720.0, 900.0, 180.0),
        ))
    olt1 = rng.uniform(0.0, spread, size=(n_olt1, 2))
    olt2 = rng.uniform(0.0, spread, size=(n_olt2, 2)) if n_olt2 else np.zeros((0, 2))
    sites = scen.build_site_graph(
        ue_pos=np.zeros((0, 2)), ru_pos=ru_pos, stage1_sites=olt1, stage2_sites=olt2,
    )
    scn = scen.Scenario(
        area_class="urban", side_km=8.0, seed=int(seed), slices=slices,
        ues=(), candidate_rus=tuple(rus), sites=sites,
        density_profile=scen.DENSITY_PROFILES["urban"], tti=0.5e-3,
    )
    assignment = assoc.Assignment(
        attach=(), installed=tuple(range(n_rus)), ota_ul=(), ota_dl=(), objective=0.0,
    )
    model = deploy.build_p2(assignment, scn, config or deploy.DeployConfig(), book or PriceBook())
    return scn, assignment, model
