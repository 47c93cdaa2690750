"""Reproducible synthetic deployment scenarios.

A scenario bundles everything the two optimization stages consume: UE
positions and averaged demands per slice, candidate radio-unit sites with
coverage and capacity, candidate OLT sites for both PON stages, splitter
(remote node) positions, and all pairwise distance tables.  Generation is
fully driven by one integer seed; the same seed yields a byte-identical
serialized scenario.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import models
from ._jsonio import canonical_dumps, canonical_loads
from .errors import ParameterError

SLICE_IDS = ("uRLLC", "eMBB", "mMTC")
AREA_CLASSES = ("industrial", "urban", "rural")

# Peak active-UE density per km^2.
MAX_DENSITY = {"industrial": 2000, "urban": 1000, "rural": 500}

# Share of UEs per slice, by area class.
SLICE_SHARES = {
    "industrial": (0.25, 0.25, 0.50),
    "urban": (0.30, 0.50, 0.20),
    "rural": (0.20, 0.60, 0.20),
}

# Per-UE peak demand ranges in Mbps (uplink, downlink).
DEMAND_RANGES_MBPS = {
    "uRLLC": ((10.0, 20.0), (30.0, 50.0)),
    "eMBB": ((50.0, 80.0), (100.0, 150.0)),
    "mMTC": ((10.0, 20.0), (10.0, 20.0)),
}

# Latency budgets in seconds: over-the-air, mid-haul, front-haul, baseband.
LATENCY_BUDGETS = {
    "uRLLC": (200e-6, 100e-6, 100e-6, 50e-6),
    "eMBB": (300e-6, 500e-6, 100e-6, 80e-6),
    "mMTC": (400e-6, 1000e-6, 100e-6, 100e-6),
}

# Editable 24-hour activity profiles (fraction of the UE population active
# each hour).  Shapes only: industrial peaking over working hours, urban in
# the evening, rural flatter.  These numbers are local defaults, not
# measurements.
DENSITY_PROFILES = {
    "industrial": (
        0.05, 0.05, 0.05, 0.05, 0.08, 0.15, 0.35, 0.60, 0.85, 0.95, 1.00, 1.00,
        0.95, 0.95, 1.00, 0.95, 0.85, 0.65, 0.40, 0.25, 0.15, 0.10, 0.08, 0.05,
    ),
    "urban": (
        0.20, 0.15, 0.10, 0.10, 0.10, 0.15, 0.25, 0.40, 0.50, 0.55, 0.55, 0.60,
        0.60, 0.55, 0.55, 0.55, 0.60, 0.75, 0.90, 1.00, 1.00, 0.90, 0.60, 0.35,
    ),
    "rural": (
        0.20, 0.15, 0.15, 0.15, 0.20, 0.30, 0.40, 0.45, 0.50, 0.50, 0.50, 0.50,
        0.50, 0.45, 0.45, 0.45, 0.50, 0.55, 0.60, 0.60, 0.55, 0.45, 0.35, 0.25,
    ),
}

MBPS = 1e6
RU_GOPS_TOTAL = 1800.0  # GOPS/TTI per radio unit, split across RU/DU/CU


@dataclass(frozen=True)
class SliceSpec:
    id: str
    share: float
    ul_demand_range: Tuple[float, float]  # bps
    dl_demand_range: Tuple[float, float]  # bps
    ota_budget: float
    mh_budget: float
    fh_budget: float
    bbu_budget: float

    def validate(self) -> None:
        if self.id not in SLICE_IDS:
            raise ParameterError(f"unknown slice id {self.id!r}")
        if not 0.0 <= self.share <= 1.0:
            raise ParameterError(f"slice share must be in [0, 1], got {self.share}")
        for name in ("ota_budget", "mh_budget", "fh_budget", "bbu_budget"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"SliceSpec.{name} must be > 0")
        for rng in (self.ul_demand_range, self.dl_demand_range):
            if not 0 < rng[0] <= rng[1]:
                raise ParameterError(f"demand range must satisfy 0 < lo <= hi, got {rng}")


def validate_slices(slices: Sequence[SliceSpec]) -> None:
    for s in slices:
        s.validate()
    budgets = {s.id: s.mh_budget for s in slices}
    if not budgets["uRLLC"] <= budgets["eMBB"] <= budgets["mMTC"]:
        raise ParameterError("mid-haul budgets must be ordered uRLLC <= eMBB <= mMTC")


@dataclass(frozen=True)
class UE:
    position: Tuple[float, float]  # km
    slice_id: str
    ul_demand: float  # bps, activity-averaged
    dl_demand: float
    active_mask: int  # 24-bit mask of active hours


@dataclass(frozen=True)
class CandidateRU:
    position: Tuple[float, float]
    slice_id: str
    kind: str  # "macro" | "small"
    coverage: float  # km
    ul_cap: float  # bps
    dl_cap: float
    fh_demand_ul: float  # bps on the RU-DU interface
    fh_demand_dl: float
    mh_demand_ul: float  # bps on the DU-CU interface
    mh_demand_dl: float
    gops_ul: Tuple[float, float, float]  # (RU, DU, CU) GOPS/TTI, uplink
    gops_dl: Tuple[float, float, float]


@dataclass
class SiteGraph:
    """Candidate OLT sites, splitter positions, and all distance tables (km)."""

    stage1_sites: np.ndarray  # (n_o, 2)
    stage2_sites: np.ndarray  # (n_q, 2)
    rn1: np.ndarray  # (n_o, 2) splitter position per Stage-I OLT
    rn2: np.ndarray  # (n_q, 2)
    d_ue_ru: np.ndarray  # (n_ue, n_ru)
    d_ru_rn1: np.ndarray  # (n_o, n_ru)
    d_rn1_olt1: np.ndarray  # (n_o,)
    d_olt1_rn2: np.ndarray  # (n_q, n_o)
    d_rn2_olt2: np.ndarray  # (n_q,)
    reach_stage1: float = 20.0
    reach_stage2: float = 20.0

    def stage1_path_km(self) -> np.ndarray:
        """Full RU->RN->OLT fiber path length, (n_o, n_ru)."""
        return self.d_ru_rn1 + self.d_rn1_olt1[:, None]

    def stage2_path_km(self) -> np.ndarray:
        """Full OLT1->RN->OLT2 fiber path length, (n_q, n_o)."""
        return self.d_olt1_rn2 + self.d_rn2_olt2[:, None]


@dataclass
class Scenario:
    area_class: str
    side_km: float
    seed: int
    slices: Tuple[SliceSpec, ...]
    ues: Tuple[UE, ...]
    candidate_rus: Tuple[CandidateRU, ...]
    sites: SiteGraph
    density_profile: Tuple[float, ...]
    tti: float = 0.5e-3
    radio: Dict[str, float] = field(default_factory=dict)
    config: Dict[str, object] = field(default_factory=dict)

    def slice_index(self) -> Dict[str, int]:
        return {s.id: i for i, s in enumerate(self.slices)}

    def slice_by_id(self, slice_id: str) -> SliceSpec:
        for s in self.slices:
            if s.id == slice_id:
                return s
        raise KeyError(slice_id)

    def to_dict(self) -> dict:
        sl_idx = self.slice_index()
        return {
            "area_class": self.area_class,
            "side_km": self.side_km,
            "seed": self.seed,
            "tti": self.tti,
            "radio": dict(self.radio),
            "config": dict(self.config),
            "density_profile": list(self.density_profile),
            "slices": [
                {
                    "id": s.id,
                    "share": s.share,
                    "ul_demand_range": list(s.ul_demand_range),
                    "dl_demand_range": list(s.dl_demand_range),
                    "ota_budget": s.ota_budget,
                    "mh_budget": s.mh_budget,
                    "fh_budget": s.fh_budget,
                    "bbu_budget": s.bbu_budget,
                }
                for s in self.slices
            ],
            "ues": [
                [u.position[0], u.position[1], sl_idx[u.slice_id], u.ul_demand, u.dl_demand, u.active_mask]
                for u in self.ues
            ],
            "rus": [
                [
                    r.position[0], r.position[1], sl_idx[r.slice_id],
                    0 if r.kind == "macro" else 1, r.coverage,
                    r.ul_cap, r.dl_cap,
                    r.fh_demand_ul, r.fh_demand_dl, r.mh_demand_ul, r.mh_demand_dl,
                    list(r.gops_ul), list(r.gops_dl),
                ]
                for r in self.candidate_rus
            ],
            "stage1_sites": self.sites.stage1_sites.tolist(),
            "stage2_sites": self.sites.stage2_sites.tolist(),
            "reach_stage1": self.sites.reach_stage1,
            "reach_stage2": self.sites.reach_stage2,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        slices = tuple(
            SliceSpec(
                id=s["id"],
                share=s["share"],
                ul_demand_range=tuple(s["ul_demand_range"]),
                dl_demand_range=tuple(s["dl_demand_range"]),
                ota_budget=s["ota_budget"],
                mh_budget=s["mh_budget"],
                fh_budget=s["fh_budget"],
                bbu_budget=s["bbu_budget"],
            )
            for s in data["slices"]
        )
        ids = [s.id for s in slices]
        ues = tuple(
            UE(position=(row[0], row[1]), slice_id=ids[int(row[2])],
               ul_demand=row[3], dl_demand=row[4], active_mask=int(row[5]))
            for row in data["ues"]
        )
        rus = tuple(
            CandidateRU(
                position=(row[0], row[1]), slice_id=ids[int(row[2])],
                kind="macro" if int(row[3]) == 0 else "small", coverage=row[4],
                ul_cap=row[5], dl_cap=row[6],
                fh_demand_ul=row[7], fh_demand_dl=row[8],
                mh_demand_ul=row[9], mh_demand_dl=row[10],
                gops_ul=tuple(row[11]), gops_dl=tuple(row[12]),
            )
            for row in data["rus"]
        )
        sites = build_site_graph(
            ue_pos=np.array([u.position for u in ues], dtype=float).reshape(len(ues), 2),
            ru_pos=np.array([r.position for r in rus], dtype=float).reshape(len(rus), 2),
            stage1_sites=np.array(data["stage1_sites"], dtype=float).reshape(-1, 2),
            stage2_sites=np.array(data["stage2_sites"], dtype=float).reshape(-1, 2),
            reach_stage1=data["reach_stage1"],
            reach_stage2=data["reach_stage2"],
        )
        return cls(
            area_class=data["area_class"],
            side_km=data["side_km"],
            seed=int(data["seed"]),
            slices=slices,
            ues=ues,
            candidate_rus=rus,
            sites=sites,
            density_profile=tuple(data["density_profile"]),
            tti=data["tti"],
            radio=dict(data.get("radio", {})),
            config=dict(data.get("config", {})),
        )


def proportional_labels(shares: Sequence[float], n: int) -> List[int]:
    """Deterministic proportional interleaving of ``n`` labels.

    At every position the label with the largest accumulated deficit wins,
    so counts never drift more than one item from ``share * n`` and labels
    of each class are spread evenly through the sequence.
    """
    counts = [0] * len(shares)
    out: List[int] = []
    for i in range(1, n + 1):
        deficits = [shares[j] * i - counts[j] for j in range(len(shares))]
        j = deficits.index(max(deficits))
        counts[j] += 1
        out.append(j)
    return out


def default_slices(area_class: str) -> Tuple[SliceSpec, ...]:
    shares = SLICE_SHARES[area_class]
    out = []
    for sid, share in zip(SLICE_IDS, shares):
        (ul_lo, ul_hi), (dl_lo, dl_hi) = DEMAND_RANGES_MBPS[sid]
        ota, mh, fh, bbu = LATENCY_BUDGETS[sid]
        out.append(
            SliceSpec(
                id=sid, share=share,
                ul_demand_range=(ul_lo * MBPS, ul_hi * MBPS),
                dl_demand_range=(dl_lo * MBPS, dl_hi * MBPS),
                ota_budget=ota, mh_budget=mh, fh_budget=fh, bbu_budget=bbu,
            )
        )
    return tuple(out)


DEFAULT_PARAMS = {
    "density": None,  # None -> class default
    "ru_per_km2": 15.0,
    "macro_fraction": 0.5,
    "placement": "uniform",  # or "clustered"
    "cluster_sigma_km": 0.15,
    "demand_law": "uniform",  # or "peak" (fixed at range top)
    "coverage_range": (0.5, 1.0),
    "jitter_fraction": 0.2,  # lattice jitter as a fraction of the cell size
    "stage2_km2_per_site": 4.0,
    "reach_stage1": 20.0,
    "reach_stage2": 20.0,
    "ru_ul_cap": 28e9,
    "ru_dl_cap": 30e9,
    "fh_demand_ul": 9.632e9,
    "fh_demand_dl": 11.113e9,
    "mh_demand_ul": 1.111e9,
    "mh_demand_dl": 1.111e9,
    "ru_gops_total": RU_GOPS_TOTAL,
    "gops_split": (0.40, 0.50, 0.10),
    "bandwidth_hz": 100e6,
    "noise_dbm_hz": -174.0,
    "tx_power_macro_dbm": 46.0,
    "tx_power_small_dbm": 30.0,
    "tti": 0.5e-3,
}


def _euclid(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise distances between row sets ``a`` (n,2) and ``b`` (m,2)."""
    a = a.reshape(-1, 2)
    b = b.reshape(-1, 2)
    return np.hypot(a[:, None, 0] - b[None, :, 0], a[:, None, 1] - b[None, :, 1])


def build_site_graph(
    ue_pos: np.ndarray,
    ru_pos: np.ndarray,
    stage1_sites: np.ndarray,
    stage2_sites: np.ndarray,
    reach_stage1: float = 20.0,
    reach_stage2: float = 20.0,
) -> SiteGraph:
    """Compute splitter positions and every distance table.

    The remote node (splitter) of a candidate Stage-I OLT sits at the
    centroid of the candidate RU sites within its reach; a Stage-II RN sits
    at the centroid of the Stage-I OLT sites within reach.  An OLT with no
    sites in reach keeps its RN co-located with itself.
    """
    n_o = len(stage1_sites)
    n_q = len(stage2_sites)
    rn1 = np.array(stage1_sites, dtype=float, copy=True).reshape(n_o, 2)
    if len(ru_pos):
        d_direct = _euclid(stage1_sites, ru_pos)
        for o in range(n_o):
            members = ru_pos[d_direct[o] <= reach_stage1]
            if len(members):
                rn1[o] = members.mean(axis=0)
    rn2 = np.array(stage2_sites, dtype=float, copy=True).reshape(n_q, 2)
    if len(stage1_sites):
        d_direct2 = _euclid(stage2_sites, stage1_sites)
        for q in range(n_q):
            members = stage1_sites[d_direct2[q] <= reach_stage2]
            if len(members):
                rn2[q] = members.mean(axis=0)
    return SiteGraph(
        stage1_sites=np.asarray(stage1_sites, dtype=float).reshape(n_o, 2),
        stage2_sites=np.asarray(stage2_sites, dtype=float).reshape(n_q, 2),
        rn1=rn1,
        rn2=rn2,
        d_ue_ru=_euclid(ue_pos, ru_pos),
        d_ru_rn1=_euclid(rn1, ru_pos),
        d_rn1_olt1=np.hypot(*(rn1 - stage1_sites.reshape(n_o, 2)).T) if n_o else np.zeros(0),
        d_olt1_rn2=_euclid(rn2, stage1_sites),
        d_rn2_olt2=np.hypot(*(rn2 - stage2_sites.reshape(n_q, 2)).T) if n_q else np.zeros(0),
        reach_stage1=reach_stage1,
        reach_stage2=reach_stage2,
    )


def distances(scn: Scenario) -> SiteGraph:
    """Recompute the full distance table set for a scenario."""
    return build_site_graph(
        ue_pos=np.array([u.position for u in scn.ues], dtype=float).reshape(len(scn.ues), 2),
        ru_pos=np.array([r.position for r in scn.candidate_rus], dtype=float).reshape(len(scn.candidate_rus), 2),
        stage1_sites=scn.sites.stage1_sites,
        stage2_sites=scn.sites.stage2_sites,
        reach_stage1=scn.sites.reach_stage1,
        reach_stage2=scn.sites.reach_stage2,
    )


def _slice_lattice(side: float, k: int, rng: np.random.Generator, jitter_fraction: float) -> np.ndarray:
    """k x k cell-centered lattice with jitter, positions in km."""
    cell = side / k
    centers = [((i + 0.5) * cell, (j + 0.5) * cell) for j in range(k) for i in range(k)]
    pos = np.array(centers, dtype=float)
    jitter = rng.uniform(-jitter_fraction * cell, jitter_fraction * cell, size=pos.shape)
    return np.clip(pos + jitter, 0.0, side)


def _lattice_sizes(side: float, slices: Sequence[SliceSpec], ue_slice: np.ndarray,
                   ul_demand: np.ndarray, dl_demand: np.ndarray, params: dict) -> List[int]:
    """Per-slice lattice sizes under the total site-density budget.

    Every slice needs enough sites that (a) its lattice cell is coverable
    by a single RU even at worst-case jitter, and (b) the slice's total
    demand split across its sites keeps the per-TTI transmission time
    safely inside the OTA budget.  Starting from the share-proportional
    size, the most utilization-stressed slice is grown while the combined
    site count stays within the per-km2 limit.
    """
    budget = params["ru_per_km2"] * side * side
    jf = params["jitter_fraction"]
    cov_cap = params["coverage_range"][1]
    min_k = max(1, math.ceil(side * math.sqrt(2.0) * (0.5 + jf) / cov_cap))
    ks = []
    for si, s in enumerate(slices):
        k = int(math.floor(side * math.sqrt(params["ru_per_km2"] * s.share)))
        ks.append(max(1, min_k, k))

    def utilization(si: int, k: int) -> float:
        mask = ue_slice == si
        tti = params["tti"]
        util_ul = float(ul_demand[mask].sum()) * tti / params["ru_ul_cap"]
        util_dl = float(dl_demand[mask].sum()) * tti / params["ru_dl_cap"]
        return max(util_ul, util_dl) / (slices[si].ota_budget * k * k)

    while True:
        stressed = sorted(
            (si for si in range(len(slices)) if utilization(si, ks[si]) > 0.5),
            key=lambda si: -utilization(si, ks[si]),
        )
        grown = False
        for si in stressed:
            if sum(k * k for k in ks) - ks[si] ** 2 + (ks[si] + 1) ** 2 <= budget:
                ks[si] += 1
                grown = True
                break
        if not grown:
            return ks


def generate(area_class: str, side_km: float, seed: int, overrides: Optional[dict] = None) -> Scenario:
    """Generate a scenario for one area class.

    UEs are placed at the class's peak density; their demands are the peak
    draw scaled by the fraction of hours they are active, per the class's
    24-hour activity profile.  Candidate RU sites form one jittered lattice
    per slice, sized so the total site density never exceeds the per-km2
    limit while every slice still covers the whole area.
    """
    if area_class not in AREA_CLASSES:
        raise ParameterError(f"unknown area class {area_class!r}")
    if not 1.0 <= side_km <= 8.0:
        raise ParameterError(f"side_km must be in [1, 8], got {side_km}")

    params = dict(DEFAULT_PARAMS)
    slice_overrides: Dict[str, dict] = {}
    if overrides:
        for key, val in overrides.items():
            if key == "slices":
                slice_overrides = val
            elif key in params:
                params[key] = val
            else:
                raise ParameterError(f"unknown scenario override {key!r}")

    slices = list(default_slices(area_class))
    for i, s in enumerate(slices):
        if s.id in slice_overrides:
            slices[i] = replace(s, **slice_overrides[s.id])
    slices = tuple(slices)
    validate_slices(slices)
    shares = [s.share for s in slices]
    if abs(sum(shares) - 1.0) > 1e-9:
        raise ParameterError("slice shares must sum to 1")

    density = params["density"] if params["density"] is not None else MAX_DENSITY[area_class]
    profile = DENSITY_PROFILES[area_class]
    rng = np.random.default_rng(seed)
    area = side_km * side_km
    n_ues = int(round(density * area))

    # 1. UE positions.
    if params["placement"] == "uniform":
        ue_pos = rng.uniform(0.0, side_km, size=(n_ues, 2))
    elif params["placement"] == "clustered":
        n_parents = max(1, n_ues // 40)
        parents = rng.uniform(0.0, side_km, size=(n_parents, 2))
        parent_of = rng.integers(0, n_parents, size=n_ues)
        ue_pos = parents[parent_of] + rng.normal(0.0, params["cluster_sigma_km"], size=(n_ues, 2))
        ue_pos = np.clip(ue_pos, 0.0, side_km)
    else:
        raise ParameterError(f"unknown placement law {params['placement']!r}")

    # 2. Slice labels (deterministic proportional interleaving).
    ue_slice = np.array(proportional_labels(shares, n_ues), dtype=int)

    # 3. Peak demands per slice, then activity averaging.
    peak_ul = np.zeros(n_ues)
    peak_dl = np.zeros(n_ues)
    for si, s in enumerate(slices):
        mask = ue_slice == si
        cnt = int(mask.sum())
        if params["demand_law"] == "uniform":
            peak_ul[mask] = rng.uniform(s.ul_demand_range[0], s.ul_demand_range[1], size=cnt)
            peak_dl[mask] = rng.uniform(s.dl_demand_range[0], s.dl_demand_range[1], size=cnt)
        elif params["demand_law"] == "peak":
            peak_ul[mask] = s.ul_demand_range[1]
            peak_dl[mask] = s.dl_demand_range[1]
        else:
            raise ParameterError(f"unknown demand law {params['demand_law']!r}")
    active = rng.random((n_ues, 24)) < np.array(profile)[None, :]
    busiest = int(np.argmax(profile))
    active[~active.any(axis=1), busiest] = True  # every UE transmits at least once a day
    activity = active.sum(axis=1) / 24.0
    masks = (active.astype(np.int64) << np.arange(24, dtype=np.int64)[None, :]).sum(axis=1)

    ues = tuple(
        UE(
            position=(float(ue_pos[i, 0]), float(ue_pos[i, 1])),
            slice_id=slices[ue_slice[i]].id,
            ul_demand=float(peak_ul[i] * activity[i]),
            dl_demand=float(peak_dl[i] * activity[i]),
            active_mask=int(masks[i]),
        )
        for i in range(n_ues)
    )

    # 4. Candidate RU sites: one lattice per slice.  The RU's total
    # baseband requirement covers both link directions, so each direction
    # carries half of the RU/DU/CU split.
    cov_lo, cov_hi = params["coverage_range"]
    split = models.split_gops(params["ru_gops_total"] / 2.0, params["gops_split"])
    link_budget_cache: Dict[Tuple[str, str], float] = {}

    def link_budget_km(slice_spec: SliceSpec, kind: str) -> float:
        key = (slice_spec.id, kind)
        if key not in link_budget_cache:
            tx = params["tx_power_macro_dbm"] if kind == "macro" else params["tx_power_small_dbm"]
            link_budget_cache[key] = models.max_coverage_distance(
                slice_peak_rate=slice_spec.dl_demand_range[1],
                bandwidth=params["bandwidth_hz"],
                tx_power_dbm=tx,
                noise_dbm_hz=params["noise_dbm_hz"],
                kind=kind,
                cap_km=cov_hi,
            )
        return link_budget_cache[key]

    ks = _lattice_sizes(side_km, slices, ue_slice, peak_ul * activity, peak_dl * activity, params)
    rus: List[CandidateRU] = []
    for si, s in enumerate(slices):
        k = ks[si]
        cell = side_km / k
        pos = _slice_lattice(side_km, k, rng, params["jitter_fraction"])
        kinds = np.where(rng.random(len(pos)) < params["macro_fraction"], "macro", "small")
        caps = rng.uniform(cov_lo, cov_hi, size=len(pos))
        # A site must cover its own lattice cell even at worst-case jitter,
        # otherwise corner UEs of the slice could be unreachable.
        needed = cell * math.sqrt(2.0) * (0.5 + params["jitter_fraction"])
        for i in range(len(pos)):
            kind = str(kinds[i])
            cov = min(link_budget_km(s, kind), max(caps[i], needed))
            cov = min(cov_hi, max(cov_lo, cov))
            rus.append(
                CandidateRU(
                    position=(float(pos[i, 0]), float(pos[i, 1])),
                    slice_id=s.id,
                    kind=kind,
                    coverage=float(cov),
                    ul_cap=params["ru_ul_cap"],
                    dl_cap=params["ru_dl_cap"],
                    fh_demand_ul=params["fh_demand_ul"],
                    fh_demand_dl=params["fh_demand_dl"],
                    mh_demand_ul=params["mh_demand_ul"],
                    mh_demand_dl=params["mh_demand_dl"],
                    gops_ul=split,
                    gops_dl=split,
                )
            )
    candidate_rus = tuple(rus)
    ru_pos = np.array([r.position for r in candidate_rus], dtype=float)

    # 5. OLT candidate sites: Stage-I co-located with RU sites, Stage-II on
    # a coarse lattice.
    stage1_sites = ru_pos.copy()
    n_q = max(1, int(round(area / params["stage2_km2_per_site"])))
    g = int(math.ceil(math.sqrt(n_q)))
    q_centers = [((i + 0.5) * side_km / g, (j + 0.5) * side_km / g) for j in range(g) for i in range(g)]
    stage2_sites = np.array(q_centers[:n_q], dtype=float)

    sites = build_site_graph(
        ue_pos=ue_pos,
        ru_pos=ru_pos,
        stage1_sites=stage1_sites,
        stage2_sites=stage2_sites,
        reach_stage1=params["reach_stage1"],
        reach_stage2=params["reach_stage2"],
    )

    return Scenario(
        area_class=area_class,
        side_km=float(side_km),
        seed=int(seed),
        slices=slices,
        ues=ues,
        candidate_rus=candidate_rus,
        sites=sites,
        density_profile=tuple(profile),
        tti=params["tti"],
        radio={
            "bandwidth_hz": params["bandwidth_hz"],
            "noise_dbm_hz": params["noise_dbm_hz"],
            "tx_power_macro_dbm": params["tx_power_macro_dbm"],
            "tx_power_small_dbm": params["tx_power_small_dbm"],
        },
        config={k: (list(v) if isinstance(v, tuple) else v) for k, v in params.items()},
    )


def dumps(scn: Scenario) -> str:
    return canonical_dumps(scn.to_dict())


def loads(text: str) -> Scenario:
    return Scenario.from_dict(canonical_loads(text))
