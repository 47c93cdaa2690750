"""Stage two: front/mid-haul PON design and DU/CU placement (problem P2).

Given the installed RU set from stage one, this module connects every RU
to a Stage-I OLT over a splitter tree, places each RU's DU either at the
RU site (Case 1: the Stage-I PON carries mid-haul traffic) or at the OLT
(Case 2: the PON carries front-haul traffic), and places each OLT's
per-slice CUs either locally or behind a Stage-II PON.  Latency checks
cover PON waiting + propagation + per-TTI serialization against the
budget of the traffic the PON actually carries, and shared-server
processing ratios against each RU's baseband budget.

Two solvers are provided: the production greedy (grow the OLT pool by one
and restart the sweep whenever some RU cannot be placed) and an
exhaustive-with-pruning exact solver usable at oracle scale.
"""

import math
import time
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from .cost import PriceBook, cents
from .errors import ParameterError, StructuralInfeasibility
from .scenario import Scenario
from .violations import Violation

FIBER_SPEED = 2.0e8
KM = 1e3
UL, DL = 0, 1
_DIRS = {"ul": UL, "dl": DL}
_TOL = 1e-12
LOCAL = -1  # CU placed at the Stage-I OLT itself


@dataclass(frozen=True)
class DeployConfig:
    """PON rates, waiting times, and per-direction server capacities.

    Capacities are (uplink, downlink) GOPS/TTI.  ``ru_capacity`` is the
    dedicated RU-function hardware (never priced as a server); the
    ``du_at_*``/``cu_at_*`` entries size the purchasable open access-edge
    servers, whose priced totals are the per-direction sums.
    """

    pon1_rate_ul: float = 100e9
    pon1_rate_dl: float = 100e9
    pon2_rate_ul: float = 100e9
    pon2_rate_dl: float = 100e9
    onu_wait_stage1: float = 5e-6
    onu_wait_stage2: float = 5e-6
    ru_capacity: Tuple[float, float] = (2e5, 2e5)
    du_at_ru_capacity: Tuple[float, float] = (2.5e4, 2.5e4)
    du_at_olt_capacity: Tuple[float, float] = (2.5e4, 2.5e4)
    cu_at_olt1_capacity: Tuple[float, float] = (2.5e4, 2.5e4)
    cu_at_olt2_capacity: Tuple[float, float] = (5e4, 5e4)
    splitter_ratio: int = 64
    stage2_enabled: bool = True

    def validate(self) -> None:
        for name in ("pon1_rate_ul", "pon1_rate_dl", "pon2_rate_ul", "pon2_rate_dl"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"DeployConfig.{name} must be > 0")
        if self.splitter_ratio < 1:
            raise ParameterError("splitter_ratio must be >= 1")
        for name in ("ru_capacity", "du_at_ru_capacity", "du_at_olt_capacity",
                     "cu_at_olt1_capacity", "cu_at_olt2_capacity"):
            cap = getattr(self, name)
            if len(cap) != 2 or any(c < 0 for c in cap):
                raise ParameterError(f"DeployConfig.{name} must be two non-negative values")

    def g_ru(self) -> float:
        return sum(self.du_at_ru_capacity)

    def g_olt1(self) -> float:
        return sum(self.du_at_olt_capacity) + sum(self.cu_at_olt1_capacity)

    def g_olt2(self) -> float:
        return sum(self.cu_at_olt2_capacity)


def single_stage_config(base: Optional[DeployConfig] = None) -> DeployConfig:
    """All CUs forced to Stage-I OLT servers; no Stage-II PON."""
    return replace(base or DeployConfig(), stage2_enabled=False)


def halved_capacity_config(base: Optional[DeployConfig] = None,
                           stage2_cu: Tuple[float, float] = (2.5e4, 2.5e4)) -> DeployConfig:
    """Half-size edge servers: Stage-I hosts DUs only, CUs go to Stage-II."""
    return replace(
        base or DeployConfig(),
        cu_at_olt1_capacity=(0.0, 0.0),
        cu_at_olt2_capacity=stage2_cu,
        stage2_enabled=True,
    )


@dataclass(frozen=True)
class RUnit:
    """One installed RU with its transport demands and budgets."""

    global_index: int
    slice_idx: int
    slice_id: str
    position: Tuple[float, float]
    u: Tuple[float, float]  # mid-haul demand bps (ul, dl)
    v: Tuple[float, float]  # front-haul demand bps (ul, dl)
    eta: Tuple[float, float]  # RU-function GOPS/TTI (ul, dl)
    gdu: Tuple[float, float]  # DU GOPS/TTI
    gcu: Tuple[float, float]  # CU GOPS/TTI
    fh_budget: float
    mh_budget: float
    bbu_budget: float


@dataclass
class P2Model:
    scenario: Scenario
    config: DeployConfig
    book: PriceBook
    rus: List[RUnit]
    slice_ids: Tuple[str, ...]
    olt1_pos: np.ndarray  # (n_o, 2)
    drop1: np.ndarray  # (n_o, n_b) RU -> RN km
    feeder1: np.ndarray  # (n_o,) RN -> OLT km
    path1: np.ndarray  # (n_o, n_b) total km
    reach1: np.ndarray  # bool
    olt2_pos: np.ndarray
    drop2: np.ndarray  # (n_q, n_o)
    feeder2: np.ndarray  # (n_q,)
    path2: np.ndarray
    reach2: np.ndarray
    tti: float = 0.5e-3

    @property
    def n_rus(self) -> int:
        return len(self.rus)

    @property
    def n_olt1(self) -> int:
        return len(self.olt1_pos)

    @property
    def n_olt2(self) -> int:
        return len(self.olt2_pos)

    def pon1_rate(self, d: int) -> float:
        return self.config.pon1_rate_ul if d == UL else self.config.pon1_rate_dl

    def pon2_rate(self, d: int) -> float:
        return self.config.pon2_rate_ul if d == UL else self.config.pon2_rate_dl


def build_p2(assignment, scn: Scenario, config: Optional[DeployConfig] = None,
             book: Optional[PriceBook] = None) -> P2Model:
    """Materialize the deployment model for the assignment's installed RUs.

    Front-haul demands come from the RU's split-7.2 rates, mid-haul from
    the split-2 rates; budgets come from each RU's slice.  Raises a
    structural-infeasibility report when some RU cannot reach any Stage-I
    OLT candidate over its splitter path.
    """
    config = config or DeployConfig()
    config.validate()
    book = book or PriceBook()
    sl_idx = scn.slice_index()
    installed = sorted(assignment.installed)
    rus: List[RUnit] = []
    for b in installed:
        cand = scn.candidate_rus[b]
        s = scn.slice_by_id(cand.slice_id)
        rus.append(
            RUnit(
                global_index=b,
                slice_idx=sl_idx[cand.slice_id],
                slice_id=cand.slice_id,
                position=cand.position,
                u=(cand.mh_demand_ul, cand.mh_demand_dl),
                v=(cand.fh_demand_ul, cand.fh_demand_dl),
                eta=(cand.gops_ul[0], cand.gops_dl[0]),
                gdu=(cand.gops_ul[1], cand.gops_dl[1]),
                gcu=(cand.gops_ul[2], cand.gops_dl[2]),
                fh_budget=s.fh_budget,
                mh_budget=s.mh_budget,
                bbu_budget=s.bbu_budget,
            )
        )

    cols = np.array(installed, dtype=int)
    sites = scn.sites
    drop1 = sites.d_ru_rn1[:, cols] if len(cols) else sites.d_ru_rn1[:, :0]
    feeder1 = sites.d_rn1_olt1
    path1 = drop1 + feeder1[:, None]
    reach1 = path1 <= sites.reach_stage1

    unreachable = [rus[i].global_index for i in range(len(rus)) if not reach1[:, i].any()]
    if unreachable:
        names = ", ".join(f"RU{b}" for b in unreachable)
        raise StructuralInfeasibility(
            f"{len(unreachable)} installed RU(s) beyond PON reach of every Stage-I OLT: {names}",
            entities=tuple(unreachable),
        )

    n_q = len(sites.stage2_sites) if config.stage2_enabled else 0
    drop2 = sites.d_olt1_rn2[:n_q]
    feeder2 = sites.d_rn2_olt2[:n_q]
    path2 = drop2 + feeder2[:, None] if n_q else np.zeros((0, len(sites.stage1_sites)))
    reach2 = path2 <= sites.reach_stage2 if n_q else np.zeros((0, len(sites.stage1_sites)), dtype=bool)

    return P2Model(
        scenario=scn, config=config, book=book, rus=rus,
        slice_ids=tuple(s.id for s in scn.slices),
        olt1_pos=sites.stage1_sites, drop1=drop1, feeder1=feeder1, path1=path1, reach1=reach1,
        olt2_pos=sites.stage2_sites[:n_q], drop2=drop2, feeder2=feeder2, path2=path2, reach2=reach2,
        tti=scn.tti,
    )


@dataclass
class DeploymentPlan:
    """Decisions plus derived annotations of one P2 solution.

    Structural decisions are stored as pair lists so malformed variants
    (duplicated attachments and the like) remain representable for the
    constraint checker.  ``cu_entries`` holds (olt, slice_id, q) with
    ``q == -1`` meaning the CU stays at the Stage-I OLT.
    """

    n_rus: int
    y_pairs: Tuple[Tuple[int, int], ...]
    z_pairs: Tuple[Tuple[int, int], ...]
    du_at_ru: Tuple[bool, ...]
    cu_entries: Tuple[Tuple[int, str, int], ...]
    installed_olt1: Tuple[int, ...]
    installed_olt2: Tuple[int, ...]
    fiber_olt1: Dict[int, float] = field(default_factory=dict)
    fiber_olt2: Dict[int, float] = field(default_factory=dict)
    lat1_ul: Dict[int, float] = field(default_factory=dict)  # per RU
    lat1_dl: Dict[int, float] = field(default_factory=dict)
    lat2_ul: Dict[int, float] = field(default_factory=dict)  # per Stage-I OLT with z
    lat2_dl: Dict[int, float] = field(default_factory=dict)
    proc_ul: Dict[int, float] = field(default_factory=dict)  # per RU, ratio
    proc_dl: Dict[int, float] = field(default_factory=dict)
    g_totals: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    ru_global_ids: Tuple[int, ...] = ()

    def olt_of(self, b: int) -> Optional[int]:
        for bb, o in self.y_pairs:
            if bb == b:
                return o
        return None

    def stage2_of(self, o: int) -> Optional[int]:
        for oo, q in self.z_pairs:
            if oo == o:
                return q
        return None

    def cu_location(self, o: int, slice_id: str) -> Optional[int]:
        for oo, sid, q in self.cu_entries:
            if oo == o and sid == slice_id:
                return q
        return None

    def n_du_at_ru(self) -> int:
        return sum(1 for f in self.du_at_ru if f)

    def to_dict(self) -> dict:
        return {
            "n_rus": self.n_rus,
            "y_pairs": [list(p) for p in self.y_pairs],
            "z_pairs": [list(p) for p in self.z_pairs],
            "du_at_ru": [bool(f) for f in self.du_at_ru],
            "cu_entries": [[o, s, q] for o, s, q in self.cu_entries],
            "installed_olt1": list(self.installed_olt1),
            "installed_olt2": list(self.installed_olt2),
            "fiber_olt1": sorted([o, v] for o, v in self.fiber_olt1.items()),
            "fiber_olt2": sorted([q, v] for q, v in self.fiber_olt2.items()),
            "lat1_ul": sorted([b, v] for b, v in self.lat1_ul.items()),
            "lat1_dl": sorted([b, v] for b, v in self.lat1_dl.items()),
            "lat2_ul": sorted([o, v] for o, v in self.lat2_ul.items()),
            "lat2_dl": sorted([o, v] for o, v in self.lat2_dl.items()),
            "proc_ul": sorted([b, v] for b, v in self.proc_ul.items()),
            "proc_dl": sorted([b, v] for b, v in self.proc_dl.items()),
            "g_totals": list(self.g_totals),
            "ru_global_ids": list(self.ru_global_ids),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DeploymentPlan":
        return cls(
            n_rus=int(data["n_rus"]),
            y_pairs=tuple((int(b), int(o)) for b, o in data["y_pairs"]),
            z_pairs=tuple((int(o), int(q)) for o, q in data["z_pairs"]),
            du_at_ru=tuple(bool(f) for f in data["du_at_ru"]),
            cu_entries=tuple((int(o), str(s), int(q)) for o, s, q in data["cu_entries"]),
            installed_olt1=tuple(int(o) for o in data["installed_olt1"]),
            installed_olt2=tuple(int(q) for q in data["installed_olt2"]),
            fiber_olt1={int(o): float(v) for o, v in data["fiber_olt1"]},
            fiber_olt2={int(q): float(v) for q, v in data["fiber_olt2"]},
            lat1_ul={int(b): float(v) for b, v in data["lat1_ul"]},
            lat1_dl={int(b): float(v) for b, v in data["lat1_dl"]},
            lat2_ul={int(o): float(v) for o, v in data["lat2_ul"]},
            lat2_dl={int(o): float(v) for o, v in data["lat2_dl"]},
            proc_ul={int(b): float(v) for b, v in data["proc_ul"]},
            proc_dl={int(b): float(v) for b, v in data["proc_dl"]},
            g_totals=tuple(data["g_totals"]),
            ru_global_ids=tuple(int(b) for b in data["ru_global_ids"]),
        )


def _ratio(load: float, cap: float) -> float:
    if load == 0.0:
        return 0.0
    if cap <= 0.0:
        return math.inf
    return load / cap


def _dir(direction) -> int:
    if direction in (UL, DL):
        return direction
    try:
        return _DIRS[direction]
    except (KeyError, TypeError):
        raise ParameterError(f"direction must be 'ul' or 'dl', got {direction!r}")


def _stage1_load(model: P2Model, y_pairs, du_at_ru, o: int, d: int) -> float:
    """Traffic on OLT o's Stage-I PON: mid-haul of DU-at-RU members plus
    front-haul of DU-at-OLT members, bps."""
    total = 0.0
    for b, oo in y_pairs:
        if oo != o:
            continue
        ru = model.rus[b]
        total += ru.u[d] if du_at_ru[b] else ru.v[d]
    return total


def _stage1_latency(model: P2Model, y_pairs, du_at_ru, b: int, o: int, d: int) -> float:
    wait = model.config.onu_wait_stage1 if d == UL else 0.0
    prop = model.path1[o, b] * KM / FIBER_SPEED
    load = _stage1_load(model, y_pairs, du_at_ru, o, d)
    return wait + prop + load * model.tti / model.pon1_rate(d)


def _stage1_bound(model: P2Model, du_at_ru, b: int) -> float:
    """Latency budget of RU b's Stage-I PON: the link is mid-haul when the
    DU sits at the RU, front-haul when the DU sits at the OLT."""
    ru = model.rus[b]
    return ru.mh_budget if du_at_ru[b] else ru.fh_budget


def _stage2_riders(model: P2Model, cu_entries, o: int, q: int) -> List[int]:
    """Slice indices riding the (o, q) Stage-II PON."""
    out = []
    for oo, sid, qq in cu_entries:
        if oo == o and qq == q:
            out.append(model.slice_ids.index(sid))
    return out


def _stage2_load(model: P2Model, y_pairs, z_pairs, cu_entries, q: int, d: int) -> float:
    """Aggregated mid-haul traffic on Stage-II OLT q's PON, bps."""
    total = 0.0
    riding = {(o, sid) for o, sid, qq in cu_entries if qq == q}
    attached = {o for o, qq in z_pairs if qq == q}
    for b, o in y_pairs:
        ru = model.rus[b]
        if o in attached and (o, ru.slice_id) in riding:
            total += ru.u[d]
    return total


def _stage2_latency(model: P2Model, y_pairs, z_pairs, cu_entries, o: int, q: int, d: int) -> float:
    wait = model.config.onu_wait_stage2 if d == UL else 0.0
    prop = model.path2[q, o] * KM / FIBER_SPEED
    load = _stage2_load(model, y_pairs, z_pairs, cu_entries, q, d)
    return wait + prop + load * model.tti / model.pon2_rate(d)


def _stage2_bound(model: P2Model, cu_entries, o: int, q: int) -> float:
    """Tightest mid-haul budget among the slices riding the (o, q) PON."""
    budgets = [model.scenario.slices[si].mh_budget for si in _stage2_riders(model, cu_entries, o, q)]
    return min(budgets) if budgets else math.inf


def _du_load_at_olt(model: P2Model, y_pairs, du_at_ru, o: int, d: int) -> float:
    return sum(model.rus[b].gdu[d] for b, oo in y_pairs if oo == o and not du_at_ru[b])


def _cu_load_local(model: P2Model, y_pairs, cu_entries, o: int, d: int) -> float:
    local_slices = {sid for oo, sid, q in cu_entries if oo == o and q == LOCAL}
    return sum(model.rus[b].gcu[d] for b, oo in y_pairs if oo == o and model.rus[b].slice_id in local_slices)


def _cu_load_stage2(model: P2Model, y_pairs, cu_entries, q: int, d: int) -> float:
    riding = {(o, sid) for o, sid, qq in cu_entries if qq == q}
    return sum(
        model.rus[b].gcu[d] for b, o in y_pairs if (o, model.rus[b].slice_id) in riding
    )


def _processing_ratio(model: P2Model, y_pairs, du_at_ru, cu_entries, b: int, d: int) -> float:
    """Per-TTI processing ratio of RU b's full RU+DU+CU chain.

    Shared servers contribute their total aggregated load over capacity;
    a missing CU decision contributes nothing (flagged separately by the
    placement check).
    """
    ru = model.rus[b]
    cfg = model.config
    total = _ratio(ru.eta[d], cfg.ru_capacity[d])
    o = next((oo for bb, oo in y_pairs if bb == b), None)
    if du_at_ru[b]:
        total += _ratio(ru.gdu[d], cfg.du_at_ru_capacity[d])
    elif o is not None:
        total += _ratio(_du_load_at_olt(model, y_pairs, du_at_ru, o, d), cfg.du_at_olt_capacity[d])
    if o is not None:
        loc = next((q for oo, sid, q in cu_entries if oo == o and sid == ru.slice_id), None)
        if loc == LOCAL:
            total += _ratio(_cu_load_local(model, y_pairs, cu_entries, o, d), cfg.cu_at_olt1_capacity[d])
        elif loc is not None:
            total += _ratio(_cu_load_stage2(model, y_pairs, cu_entries, loc, d), cfg.cu_at_olt2_capacity[d])
    return total


# Public evaluators -----------------------------------------------------------

def pon_latency_stage1(model: P2Model, plan: DeploymentPlan, b: int, o: int, direction="ul") -> float:
    """One-way Stage-I PON latency of attached pair (b, o), seconds.

    Uplink adds the reduced ONU waiting time; the serialization term uses
    the PON's aggregate load (mid-haul for DU-at-RU members, front-haul
    for DU-at-OLT members)."""
    if (b, o) not in plan.y_pairs:
        raise ParameterError(f"RU {b} is not attached to Stage-I OLT {o}")
    return _stage1_latency(model, plan.y_pairs, plan.du_at_ru, b, o, _dir(direction))


def pon_latency_stage2(model: P2Model, plan: DeploymentPlan, o: int, q: int, direction="ul") -> float:
    """One-way Stage-II PON latency of attached pair (o, q), seconds."""
    if (o, q) not in plan.z_pairs:
        raise ParameterError(f"Stage-I OLT {o} is not attached to Stage-II OLT {q}")
    return _stage2_latency(model, plan.y_pairs, plan.z_pairs, plan.cu_entries, o, q, _dir(direction))


def processing_latency(model: P2Model, plan: DeploymentPlan, b: int, direction="ul") -> float:
    """Processing ratio of RU b's chain; must stay <= bbu_budget / tti."""
    return _processing_ratio(model, plan.y_pairs, plan.du_at_ru, plan.cu_entries, b, _dir(direction))


def stage1_bound(model: P2Model, plan: DeploymentPlan, b: int) -> float:
    return _stage1_bound(model, plan.du_at_ru, b)


def stage2_bound(model: P2Model, plan: DeploymentPlan, o: int, q: int) -> float:
    return _stage2_bound(model, plan.cu_entries, o, q)


def finalize_plan(model: P2Model, y: Dict[int, int], du_at_ru: Dict[int, bool],
                  z: Dict[int, int], cu: Dict[Tuple[int, str], int]) -> DeploymentPlan:
    """Assemble an annotated plan from decision maps."""
    y_pairs = tuple(sorted((b, o) for b, o in y.items()))
    z_pairs = tuple(sorted((o, q) for o, q in z.items()))
    du_flags = tuple(bool(du_at_ru.get(b, False)) for b in range(model.n_rus))
    order = {sid: i for i, sid in enumerate(model.slice_ids)}
    cu_entries = tuple(sorted(((o, sid, q) for (o, sid), q in cu.items()),
                              key=lambda e: (e[0], order[e[1]], e[2])))
    installed_o = tuple(sorted({o for _, o in y_pairs}))
    installed_q = tuple(sorted({q for _, q in z_pairs}))
    fiber_o = {
        o: float(model.feeder1[o] + sum(model.drop1[o, b] for b, oo in y_pairs if oo == o))
        for o in installed_o
    }
    fiber_q = {
        q: float(model.feeder2[q] + sum(model.drop2[q, o] for o, qq in z_pairs if qq == q))
        for q in installed_q
    }
    plan = DeploymentPlan(
        n_rus=model.n_rus, y_pairs=y_pairs, z_pairs=z_pairs, du_at_ru=du_flags,
        cu_entries=cu_entries, installed_olt1=installed_o, installed_olt2=installed_q,
        fiber_olt1=fiber_o, fiber_olt2=fiber_q,
        g_totals=(model.config.g_ru(), model.config.g_olt1(), model.config.g_olt2()),
        ru_global_ids=tuple(ru.global_index for ru in model.rus),
    )
    for b, o in y_pairs:
        plan.lat1_ul[b] = _stage1_latency(model, y_pairs, du_flags, b, o, UL)
        plan.lat1_dl[b] = _stage1_latency(model, y_pairs, du_flags, b, o, DL)
    for o, q in z_pairs:
        plan.lat2_ul[o] = _stage2_latency(model, y_pairs, z_pairs, cu_entries, o, q, UL)
        plan.lat2_dl[o] = _stage2_latency(model, y_pairs, z_pairs, cu_entries, o, q, DL)
    for b in range(model.n_rus):
        plan.proc_ul[b] = _processing_ratio(model, y_pairs, du_flags, cu_entries, b, UL)
        plan.proc_dl[b] = _processing_ratio(model, y_pairs, du_flags, cu_entries, b, DL)
    return plan


# Greedy solver ---------------------------------------------------------------

@dataclass
class GreedyResult:
    status: str  # "ok" | "infeasible"
    plan: Optional[DeploymentPlan]
    detail: str = ""


class _Pricing:
    """Incremental costs (float euro cents) for greedy and exact decisions.

    Fiber stays unrounded here; the canonical integer-cent total of a
    finished plan always comes from :func:`oranplan.cost.price_plan`.
    """

    def __init__(self, model: P2Model):
        book = model.book
        cfg = model.config
        self.fiber_per_km = book.fiber_per_km() * 100.0
        self.onu1 = cents(book.onu)
        self.onu2 = cents(book.stage2_onu_price())
        self.olt1 = cents(book.olt) + cents(book.splitter) + cents(book.server_install) \
            + int(round(book.per_gops * 100.0 * cfg.g_olt1()))
        self.olt2 = cents(book.stage2_olt_price()) + cents(book.splitter) + cents(book.server_install) \
            + int(round(book.per_gops * 100.0 * cfg.g_olt2()))
        self.du_server = cents(book.server_install) + int(round(book.per_gops * 100.0 * cfg.g_ru()))

    def fiber(self, km: float) -> float:
        return km * self.fiber_per_km


class _Stage1State:
    def __init__(self, model: P2Model, active: List[int]):
        self.m = model
        self.active = active
        self.y: Dict[int, int] = {}
        self.du: Dict[int, bool] = {}
        self.attached: Dict[int, List[int]] = {o: [] for o in active}
        self.load: Dict[int, List[float]] = {o: [0.0, 0.0] for o in active}
        self.du_gops: Dict[int, List[float]] = {o: [0.0, 0.0] for o in active}
        self.cost = 0.0

    def check(self, b: int, o: int, case1: bool) -> bool:
        m = self.m
        cfg = m.config
        if len(self.attached[o]) + 1 > cfg.splitter_ratio:
            return False
        ru = m.rus[b]
        add = ru.u if case1 else ru.v
        members = self.attached[o] + [b]
        flags = dict(self.du)
        flags[b] = case1
        for d in (UL, DL):
            load = self.load[o][d] + add[d]
            trans = load * m.tti / m.pon1_rate(d)
            wait = cfg.onu_wait_stage1 if d == UL else 0.0
            for bb in members:
                bound = m.rus[bb].mh_budget if flags[bb] else m.rus[bb].fh_budget
                if wait + m.path1[o, bb] * KM / FIBER_SPEED + trans > bound + _TOL:
                    return False
        # Without Stage-II candidates every CU ends up local at the OLT,
        # so the local CU load is a known function of the attachments and
        # gets checked here rather than discovered in the CU phase.
        single_stage = m.n_olt2 == 0
        for d in (UL, DL):
            agg_du = self.du_gops[o][d] + (0.0 if case1 else ru.gdu[d])
            agg_cu = sum(m.rus[bb].gcu[d] for bb in members) if single_stage else 0.0
            for bb in members:
                r2 = m.rus[bb]
                if flags[bb]:
                    if bb != b and not single_stage:
                        continue  # unchanged DU-at-RU chain
                    du_term = _ratio(r2.gdu[d], cfg.du_at_ru_capacity[d])
                else:
                    du_term = _ratio(agg_du, cfg.du_at_olt_capacity[d])
                t = _ratio(r2.eta[d], cfg.ru_capacity[d]) + du_term
                if single_stage:
                    t += _ratio(agg_cu, cfg.cu_at_olt1_capacity[d])
                if t > r2.bbu_budget / m.tti + _TOL:
                    return False
        return True

    def commit(self, b: int, o: int, case1: bool, pricing: _Pricing) -> None:
        newly = not self.attached[o]
        self.y[b] = o
        self.du[b] = case1
        self.attached[o].append(b)
        ru = self.m.rus[b]
        add = ru.u if case1 else ru.v
        for d in (UL, DL):
            self.load[o][d] += add[d]
            if not case1:
                self.du_gops[o][d] += ru.gdu[d]
        self.cost += pricing.onu1 + pricing.fiber(self.m.drop1[o, b])
        if newly:
            self.cost += pricing.olt1 + pricing.fiber(self.m.feeder1[o])
        if case1:
            self.cost += pricing.du_server


class _Stage2State:
    def __init__(self, model: P2Model, stage1: _Stage1State, active_q: List[int]):
        self.m = model
        self.s1 = stage1
        self.active_q = active_q
        self.z: Dict[int, int] = {}
        self.cu: Dict[Tuple[int, str], int] = {}
        self.gc_local: Dict[int, List[float]] = {}
        self.attached_q: Dict[int, List[int]] = {q: [] for q in active_q}
        self.load_q: Dict[int, List[float]] = {q: [0.0, 0.0] for q in active_q}
        self.gc_q: Dict[int, List[float]] = {q: [0.0, 0.0] for q in active_q}
        self.min_budget: Dict[int, float] = {}  # per Stage-I OLT, over riding slices
        self.cost = 0.0

    def du_term(self, b: int, d: int) -> float:
        m = self.m
        ru = m.rus[b]
        if self.s1.du[b]:
            return _ratio(ru.gdu[d], m.config.du_at_ru_capacity[d])
        return _ratio(self.s1.du_gops[self.s1.y[b]][d], m.config.du_at_olt_capacity[d])

    def base_term(self, b: int, d: int) -> float:
        return _ratio(self.m.rus[b].eta[d], self.m.config.ru_capacity[d]) + self.du_term(b, d)

    def members(self, o: int, si: int) -> List[int]:
        return [b for b in self.s1.attached[o] if self.m.rus[b].slice_idx == si]

    def check_local(self, o: int, members: List[int]) -> bool:
        m = self.m
        cfg = m.config
        add = [sum(m.rus[b].gcu[d] for b in members) for d in (UL, DL)]
        cur = self.gc_local.get(o, [0.0, 0.0])
        local_rus = [b for b in self.s1.attached[o] if self.cu.get((o, m.rus[b].slice_id)) == LOCAL]
        for d in (UL, DL):
            gc = cur[d] + add[d]
            for b in local_rus + members:
                t = self.base_term(b, d) + _ratio(gc, cfg.cu_at_olt1_capacity[d])
                if t > m.rus[b].bbu_budget / m.tti + _TOL:
                    return False
        return True

    def commit_local(self, o: int, slice_id: str, members: List[int]) -> None:
        cur = self.gc_local.setdefault(o, [0.0, 0.0])
        for d in (UL, DL):
            cur[d] += sum(self.m.rus[b].gcu[d] for b in members)
        self.cu[(o, slice_id)] = LOCAL

    def check_stage2(self, o: int, bundle: List[Tuple[int, List[int]]], q: int) -> bool:
        """Feasibility of placing OLT o's whole deferred CU bundle at q.

        The bundle is placed atomically because an installed Stage-I OLT
        may ride at most one Stage-II PON, so all of its Stage-II slices
        share the same q.
        """
        m = self.m
        cfg = m.config
        if not m.reach2[q, o]:
            return False
        new_z = self.z.get(o) != q
        if new_z and len(self.attached_q[q]) + 1 > cfg.splitter_ratio:
            return False
        bundle_members = [b for _, ms in bundle for b in ms]
        bundle_budget = min(m.scenario.slices[si].mh_budget for si, _ in bundle)
        attached = self.attached_q[q] + ([o] if new_z else [])
        for d in (UL, DL):
            load = self.load_q[q][d] + sum(m.rus[b].u[d] for b in bundle_members)
            trans = load * m.tti / m.pon2_rate(d)
            wait = cfg.onu_wait_stage2 if d == UL else 0.0
            for oo in attached:
                bound = self.min_budget.get(oo, math.inf)
                if oo == o:
                    bound = min(bound, bundle_budget)
                if wait + m.path2[q, oo] * KM / FIBER_SPEED + trans > bound + _TOL:
                    return False
        cu_members = [b for (oo, sid), qq in self.cu.items() if qq == q
                      for b in self.members(oo, m.slice_ids.index(sid))]
        for d in (UL, DL):
            gc = self.gc_q[q][d] + sum(m.rus[b].gcu[d] for b in bundle_members)
            for b in cu_members + bundle_members:
                t = self.base_term(b, d) + _ratio(gc, cfg.cu_at_olt2_capacity[d])
                if t > m.rus[b].bbu_budget / m.tti + _TOL:
                    return False
        return True

    def commit_stage2(self, o: int, si: int, members: List[int], q: int, pricing: _Pricing) -> None:
        m = self.m
        if self.z.get(o) != q:
            newly = not self.attached_q[q]
            self.z[o] = q
            self.attached_q[q].append(o)
            self.cost += pricing.onu2 + pricing.fiber(m.drop2[q, o])
            if newly:
                self.cost += pricing.olt2 + pricing.fiber(m.feeder2[q])
        slice_id = m.slice_ids[si]
        self.cu[(o, slice_id)] = q
        for d in (UL, DL):
            self.load_q[q][d] += sum(m.rus[b].u[d] for b in members)
            self.gc_q[q][d] += sum(m.rus[b].gcu[d] for b in members)
        self.min_budget[o] = min(self.min_budget.get(o, math.inf), m.scenario.slices[si].mh_budget)


def _sweep_order(model: P2Model) -> List[int]:
    """Round-robin over slices: the r-th RU of each slice in turn."""
    per_slice: Dict[int, List[int]] = {}
    for b, ru in enumerate(model.rus):
        per_slice.setdefault(ru.slice_idx, []).append(b)
    order: List[int] = []
    rank = 0
    while True:
        advanced = False
        for si in range(len(model.slice_ids)):
            lst = per_slice.get(si, [])
            if rank < len(lst):
                order.append(lst[rank])
                advanced = True
        if not advanced:
            return order
        rank += 1


def _pick_new_olt(model: P2Model, active: Set[int], remaining: Iterable[int]) -> Optional[int]:
    remaining = list(remaining)
    best, best_score = None, math.inf
    for o in range(model.n_olt1):
        if o in active:
            continue
        score = float(sum(model.path1[o, b] for b in remaining)) if remaining else 0.0
        if score < best_score - 1e-15:
            best, best_score = o, score
    return best


def _pick_new_stage2(model: P2Model, active: Set[int], remaining_olts: Iterable[int]) -> Optional[int]:
    remaining = list(remaining_olts)
    best, best_score = None, math.inf
    for q in range(model.n_olt2):
        if q in active:
            continue
        score = float(sum(model.path2[q, o] for o in remaining)) if remaining else 0.0
        if score < best_score - 1e-15:
            best, best_score = q, score
    return best


def greedy_deploy(model: P2Model) -> GreedyResult:
    """Grow-and-restart greedy for Stage-I design, then CU placement.

    Stage I starts with a single active OLT; RUs are swept round-robin
    across slices, each attaching to the nearest active OLT on which
    either DU placement case is feasible, the cheaper feasible case
    winning (ties prefer DU at the OLT, which shares an existing server).
    Whenever some RU cannot be placed, one more OLT (the candidate closest
    in total to the still-unplaced RUs) is activated and the whole sweep
    restarts.  Stage II mirrors the scheme for CU placement: local first,
    else the nearest active Stage-II OLT, growing the active pool and
    restarting on failure.
    """
    pricing = _Pricing(model)
    order = _sweep_order(model)
    if not model.rus:
        return GreedyResult("ok", finalize_plan(model, {}, {}, {}, {}))
    if model.n_olt1 == 0:
        return GreedyResult("infeasible", None, "no Stage-I OLT candidates")

    active: List[int] = [_pick_new_olt(model, set(), order)]
    while True:
        state, failed, remaining = _stage1_sweep(model, pricing, order, active)
        if failed is not None:
            if len(active) == model.n_olt1:
                return GreedyResult(
                    "infeasible", None,
                    f"all {model.n_olt1} Stage-I OLT candidates active, "
                    f"RU {model.rus[failed].global_index} unplaceable",
                )
            active.append(_pick_new_olt(model, set(active), remaining))
            continue

        s2, failed_olt = _stage2_sweep(model, pricing, state)
        if failed_olt is None:
            plan = finalize_plan(model, state.y, state.du, s2.z, s2.cu)
            return GreedyResult("ok", plan)
        # Every Stage-II candidate is active and some CU still does not
        # fit: thin out the failing OLT's aggregation by activating one
        # more Stage-I OLT and redoing the whole design.
        if len(active) == model.n_olt1:
            return GreedyResult(
                "infeasible", None,
                f"all OLT candidates active, CUs of Stage-I OLT {failed_olt} unplaceable",
            )
        active.append(_pick_new_olt(model, set(active), state.attached[failed_olt]))


def _stage1_sweep(model: P2Model, pricing: _Pricing, order: List[int],
                  active: List[int]):
    """One full RU sweep over the active OLT set.

    Returns (state, failed RU or None, RUs still unplaced at the break).
    """
    state = _Stage1State(model, list(active))
    for idx, b in enumerate(order):
        cands = [o for o in active if model.reach1[o, b]]
        cands.sort(key=lambda o: (model.path1[o, b], o))
        placed = False
        for o in cands:
            ok1 = state.check(b, o, case1=True)
            ok2 = state.check(b, o, case1=False)
            if not ok1 and not ok2:
                continue
            cost1 = pricing.du_server if ok1 else None
            cost2 = 0 if ok2 else None
            case1 = cost2 is None or (cost1 is not None and cost1 < cost2)
            state.commit(b, o, case1, pricing)
            placed = True
            break
        if not placed:
            return state, b, order[idx:]
    return state, None, []


def _stage2_sweep(model: P2Model, pricing: _Pricing, state: _Stage1State):
    """CU placement over the installed OLTs, growing the Stage-II pool.

    Returns (stage-2 state, failing Stage-I OLT or None).
    """
    installed = sorted(o for o in state.attached if state.attached[o])
    q_pool = list(range(model.n_olt2))
    active_q: List[int] = []
    if q_pool:
        active_q = [_pick_new_stage2(model, set(), installed)]
    while True:
        s2 = _Stage2State(model, state, list(active_q))
        failed_olt = None
        remaining_olts: List[int] = []
        for oi, o in enumerate(installed):
            bundle: List[Tuple[int, List[int]]] = []
            for si in range(len(model.slice_ids)):
                members = s2.members(o, si)
                if not members:
                    continue
                if s2.check_local(o, members):
                    s2.commit_local(o, model.slice_ids[si], members)
                else:
                    bundle.append((si, members))
            if not bundle:
                continue
            qs = sorted((q for q in active_q if model.reach2[q, o]),
                        key=lambda q: (model.path2[q, o], q))
            for q in qs:
                if s2.check_stage2(o, bundle, q):
                    for si, members in bundle:
                        s2.commit_stage2(o, si, members, q, pricing)
                    break
            else:
                failed_olt = o
                remaining_olts = installed[oi:]
                break
        if failed_olt is None:
            return s2, None
        if len(active_q) == len(q_pool):
            return s2, failed_olt
        active_q.append(_pick_new_stage2(model, set(active_q), remaining_olts))


# Exact solver ----------------------------------------------------------------

@dataclass(frozen=True)
class PlanLimits:
    max_nodes: int = 2_000_000
    time_limit: float = 120.0


@dataclass
class ExactPlanResult:
    status: str  # "optimal" | "feasible" | "infeasible" | "unknown"
    plan: Optional[DeploymentPlan]
    optimal: bool
    nodes: int
    runtime: float
    cost: Optional[int] = None  # euro cents


class _ExactSearch:
    def __init__(self, model: P2Model, limits: PlanLimits):
        self.m = model
        self.limits = limits
        self.pricing = _Pricing(model)
        self.t0 = time.perf_counter()
        self.nodes = 0
        self.hit_limit = False
        self.best_cost: Optional[float] = None
        self.best: Optional[Tuple[Dict, Dict, Dict, Dict]] = None
        self.min_attach = []
        for b in range(model.n_rus):
            opts = [self.pricing.fiber(model.drop1[o, b]) for o in range(model.n_olt1) if model.reach1[o, b]]
            self.min_attach.append((min(opts) if opts else 0.0) + self.pricing.onu1)
        self.rest = [0.0] * (model.n_rus + 1)
        for b in range(model.n_rus - 1, -1, -1):
            self.rest[b] = self.rest[b + 1] + self.min_attach[b]

    def _tick(self) -> bool:
        self.nodes += 1
        if self.nodes > self.limits.max_nodes or (
            self.nodes % 2048 == 0 and time.perf_counter() - self.t0 > self.limits.time_limit
        ):
            self.hit_limit = True
        return self.hit_limit

    def run(self) -> None:
        state = _Stage1State(self.m, list(range(self.m.n_olt1)))
        self._stage1(state, 0)

    def _stage1(self, state: _Stage1State, b: int) -> None:
        if self.hit_limit or self._tick():
            return
        if self.best_cost is not None and state.cost + self.rest[b] >= self.best_cost:
            return
        if b == self.m.n_rus:
            installed = sorted(o for o in range(self.m.n_olt1) if state.attached[o])
            s2 = _Stage2State(self.m, state, list(range(self.m.n_olt2)))
            self._stage2(state, s2, installed, 0, 0)
            return
        opts = [o for o in range(self.m.n_olt1) if self.m.reach1[o, b]]
        opts.sort(key=lambda o: (self.m.path1[o, b], o))
        for o in opts:
            for case1 in (False, True):
                if not state.check(b, o, case1):
                    continue
                snapshot = (state.cost, state.load[o][:], state.du_gops[o][:])
                state.commit(b, o, case1, self.pricing)
                self._stage1(state, b + 1)
                state.y.pop(b)
                state.du.pop(b)
                state.attached[o].pop()
                state.cost, state.load[o], state.du_gops[o] = snapshot[0], snapshot[1], snapshot[2]
                if self.hit_limit:
                    return

    def _options_for(self, s2: _Stage2State, o: int) -> List[List[Tuple[int, int]]]:
        """CU placements for one OLT: list of (slice index, q-or-LOCAL) maps."""
        loaded = [si for si in range(len(self.m.slice_ids)) if s2.members(o, si)]
        out = [[(si, LOCAL) for si in loaded]]
        if not self.m.config.stage2_enabled:
            return out
        for q in range(self.m.n_olt2):
            if not self.m.reach2[q, o]:
                continue
            for pick in range(1, 1 << len(loaded)):
                option = [
                    (si, q if (pick >> i) & 1 else LOCAL) for i, si in enumerate(loaded)
                ]
                out.append(option)
        return out

    def _stage2(self, state: _Stage1State, s2: _Stage2State, installed: List[int],
                oi: int, extra_cost: int) -> None:
        if self.hit_limit or self._tick():
            return
        total = state.cost + s2.cost
        if self.best_cost is not None and total >= self.best_cost:
            return
        if oi == len(installed):
            if self.best_cost is None or total < self.best_cost:
                self.best_cost = total
                self.best = (dict(state.y), dict(state.du), dict(s2.z), dict(s2.cu))
            return
        o = installed[oi]
        for option in self._options_for(s2, o):
            saved = (
                dict(s2.z), {k: v[:] for k, v in s2.gc_local.items()},
                {k: v[:] for k, v in s2.attached_q.items()},
                {k: v[:] for k, v in s2.load_q.items()},
                {k: v[:] for k, v in s2.gc_q.items()},
                dict(s2.cu), dict(s2.min_budget), s2.cost,
            )
            ok = True
            bundle = [(si, s2.members(o, si)) for si, target in option if target != LOCAL]
            for si, target in option:
                if target != LOCAL:
                    continue
                members = s2.members(o, si)
                if not s2.check_local(o, members):
                    ok = False
                    break
                s2.commit_local(o, self.m.slice_ids[si], members)
            if ok and bundle:
                q = next(target for _, target in option if target != LOCAL)
                if s2.check_stage2(o, bundle, q):
                    for si, members in bundle:
                        s2.commit_stage2(o, si, members, q, self.pricing)
                else:
                    ok = False
            if ok:
                self._stage2(state, s2, installed, oi + 1, extra_cost)
            (s2.z, s2.gc_local, s2.attached_q, s2.load_q, s2.gc_q, s2.cu,
             s2.min_budget, s2.cost) = saved
            if self.hit_limit:
                return


def solve_p2_exact_small(model: P2Model, limits: Optional[PlanLimits] = None) -> ExactPlanResult:
    """Cost-minimal plan by exhaustive search with cost pruning.

    Intended for oracle-scale instances (a handful of RUs and candidate
    OLTs).  The greedy solution seeds the incumbent so pruning is
    effective from the start.
    """
    from .cost import price_plan

    limits = limits or PlanLimits()
    search = _ExactSearch(model, limits)
    greedy = greedy_deploy(model)
    if greedy.status == "ok":
        search.best_cost = price_plan(greedy.plan, model.book).total + 5.0
    search.run()
    runtime = time.perf_counter() - search.t0
    if search.best is None and greedy.status != "ok":
        if search.hit_limit:
            return ExactPlanResult("unknown", None, False, search.nodes, runtime)
        return ExactPlanResult("infeasible", None, False, search.nodes, runtime)
    candidates = []
    if search.best is not None:
        y, du, z, cu = search.best
        candidates.append(finalize_plan(model, y, du, z, cu))
    if greedy.status == "ok":
        candidates.append(greedy.plan)
    plan = min(candidates, key=lambda p: price_plan(p, model.book).total)
    status = "feasible" if search.hit_limit else "optimal"
    return ExactPlanResult(status, plan, not search.hit_limit, search.nodes, runtime,
                           cost=price_plan(plan, model.book).total)


# Constraint checker ----------------------------------------------------------

def check_plan(model: P2Model, plan: DeploymentPlan) -> List[Violation]:
    """Report every violated P2 constraint family; empty means feasible."""
    m = model
    out: List[Violation] = []
    installed_o = set(plan.installed_olt1)
    installed_q = set(plan.installed_olt2)

    counts = {b: 0 for b in range(m.n_rus)}
    for b, o in plan.y_pairs:
        counts[b] = counts.get(b, 0) + 1
        if not (0 <= o < m.n_olt1) or not m.reach1[o, b]:
            out.append(Violation("reach-stage1", (b, o), 0.0, "attachment beyond PON reach"))
        elif o not in installed_o:
            out.append(Violation("olt1-installed", (b, o), 0.0, "RU attached to uninstalled OLT"))
    for b in range(m.n_rus):
        if counts.get(b, 0) != 1:
            out.append(Violation("single-olt-attach", (b,), float(counts.get(b, 0) - 1),
                                 f"RU connected to {counts.get(b, 0)} Stage-I OLTs, must be 1"))

    z_counts: Dict[int, int] = {}
    for o, q in plan.z_pairs:
        z_counts[o] = z_counts.get(o, 0) + 1
        if not (0 <= q < m.n_olt2) or not m.reach2[q, o]:
            out.append(Violation("reach-stage2", (o, q), 0.0, "Stage-II attachment beyond PON reach"))
        elif q not in installed_q:
            out.append(Violation("olt2-installed", (o, q), 0.0, "attached to uninstalled Stage-II OLT"))
        if o not in installed_o:
            out.append(Violation("olt2-installed", (o, q), 0.0, "Stage-II link from uninstalled Stage-I OLT"))
    for o, n in z_counts.items():
        if n > 1:
            out.append(Violation("single-stage2-attach", (o,), float(n - 1),
                                 f"Stage-I OLT connected to {n} Stage-II OLTs, at most 1"))

    # DU placement partition (linearized chi/upsilon variables must cover
    # each RU exactly once across its attachments).
    for b in range(m.n_rus):
        chi = sum(1 for bb, o in plan.y_pairs if bb == b and plan.du_at_ru[b])
        ups = sum(1 for bb, o in plan.y_pairs if bb == b and not plan.du_at_ru[b])
        if chi + ups != 1:
            out.append(Violation("linearization", (b,), float(chi + ups - 1),
                                 "DU must be placed exactly once along the RU's attachment"))

    # CU placement: one decision per loaded (installed OLT, slice); a
    # Stage-II choice must ride the OLT's unique Stage-II link.
    z_map = dict(plan.z_pairs)
    loaded: Dict[Tuple[int, str], int] = {}
    for b, o in plan.y_pairs:
        key = (o, m.rus[b].slice_id)
        loaded[key] = loaded.get(key, 0) + 1
    entry_count: Dict[Tuple[int, str], int] = {}
    for o, sid, q in plan.cu_entries:
        entry_count[(o, sid)] = entry_count.get((o, sid), 0) + 1
        if q != LOCAL:
            if z_map.get(o) != q:
                out.append(Violation("linearization", (o, sid, q), 0.0,
                                     "CU placed at a Stage-II OLT the Stage-I OLT is not connected to"))
    for key in sorted(loaded):
        n = entry_count.get(key, 0)
        if n != 1:
            out.append(Violation("cu-placement", key, float(n - 1),
                                 f"slice CU placed {n} times for this OLT, must be exactly 1"))

    if m.config.splitter_ratio:
        per_o: Dict[int, int] = {}
        for b, o in plan.y_pairs:
            per_o[o] = per_o.get(o, 0) + 1
        for o, n in sorted(per_o.items()):
            if n > m.config.splitter_ratio:
                out.append(Violation("splitter-ratio", (o,), float(m.config.splitter_ratio - n),
                                     f"{n} ONUs on one Stage-I PON exceeds 1:{m.config.splitter_ratio}"))
        per_q: Dict[int, int] = {}
        for o, q in plan.z_pairs:
            per_q[q] = per_q.get(q, 0) + 1
        for q, n in sorted(per_q.items()):
            if n > m.config.splitter_ratio:
                out.append(Violation("splitter-ratio", (q,), float(m.config.splitter_ratio - n),
                                     f"{n} ONUs on one Stage-II PON exceeds 1:{m.config.splitter_ratio}"))

    for b, o in plan.y_pairs:
        bound = _stage1_bound(m, plan.du_at_ru, b)
        for d, fam in ((UL, "pon1-ul"), (DL, "pon1-dl")):
            lat = _stage1_latency(m, plan.y_pairs, plan.du_at_ru, b, o, d)
            if lat > bound + _TOL:
                out.append(Violation(fam, (b, o), float(bound - lat), "Stage-I PON latency over budget"))
    for o, q in plan.z_pairs:
        bound = _stage2_bound(m, plan.cu_entries, o, q)
        for d, fam in ((UL, "pon2-ul"), (DL, "pon2-dl")):
            lat = _stage2_latency(m, plan.y_pairs, plan.z_pairs, plan.cu_entries, o, q, d)
            if lat > bound + _TOL:
                out.append(Violation(fam, (o, q), float(bound - lat), "Stage-II PON latency over budget"))
    for b in range(m.n_rus):
        cap = m.rus[b].bbu_budget / m.tti
        for d, fam in ((UL, "proc-ul"), (DL, "proc-dl")):
            ratio = _processing_ratio(m, plan.y_pairs, plan.du_at_ru, plan.cu_entries, b, d)
            if ratio > cap + _TOL:
                out.append(Violation(fam, (b,), float(cap - ratio), "processing chain over baseband budget"))

    # Stored annotations must agree with recomputation.
    for o in plan.installed_olt1:
        expect = float(m.feeder1[o] + sum(m.drop1[o, b] for b, oo in plan.y_pairs if oo == o))
        got = plan.fiber_olt1.get(o)
        if got is None or abs(got - expect) > 1e-9:
            out.append(Violation("fiber-length", (o,), float(expect - (got or 0.0)),
                                 "stored Stage-I fiber length disagrees with attachments"))
    for q in plan.installed_olt2:
        expect = float(m.feeder2[q] + sum(m.drop2[q, o] for o, qq in plan.z_pairs if qq == q))
        got = plan.fiber_olt2.get(q)
        if got is None or abs(got - expect) > 1e-9:
            out.append(Violation("fiber-length", (q,), float(expect - (got or 0.0)),
                                 "stored Stage-II fiber length disagrees with attachments"))
    for b, o in plan.y_pairs:
        for d, store in ((UL, plan.lat1_ul), (DL, plan.lat1_dl)):
            got = store.get(b)
            expect = _stage1_latency(m, plan.y_pairs, plan.du_at_ru, b, o, d)
            if got is None or abs(got - expect) > 1e-12:
                out.append(Violation("latency-annotation", (b, o, d), 0.0,
                                     "stored Stage-I latency disagrees with recomputation"))
    return out


def dump_p2_tables(model: P2Model) -> dict:
    """Coefficient tables for external solver cross-checks."""
    return {
        "tti": model.tti,
        "config": {
            "pon1_rate_ul": model.config.pon1_rate_ul,
            "pon1_rate_dl": model.config.pon1_rate_dl,
            "pon2_rate_ul": model.config.pon2_rate_ul,
            "pon2_rate_dl": model.config.pon2_rate_dl,
            "onu_wait_stage1": model.config.onu_wait_stage1,
            "onu_wait_stage2": model.config.onu_wait_stage2,
            "splitter_ratio": model.config.splitter_ratio,
            "g_totals": [model.config.g_ru(), model.config.g_olt1(), model.config.g_olt2()],
        },
        "rus": [
            {
                "index": b, "global_index": ru.global_index, "slice": ru.slice_id,
                "u_ul": ru.u[0], "u_dl": ru.u[1], "v_ul": ru.v[0], "v_dl": ru.v[1],
                "eta": list(ru.eta), "gdu": list(ru.gdu), "gcu": list(ru.gcu),
                "fh_budget": ru.fh_budget, "mh_budget": ru.mh_budget, "bbu_budget": ru.bbu_budget,
            }
            for b, ru in enumerate(model.rus)
        ],
        "path1_km": model.path1.tolist(),
        "feeder1_km": model.feeder1.tolist(),
        "drop1_km": model.drop1.tolist(),
        "path2_km": model.path2.tolist(),
        "feeder2_km": model.feeder2.tolist(),
        "drop2_km": model.drop2.tolist(),
    }
