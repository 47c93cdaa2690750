"""Deployment pricing: TWDM-PON plans, the OTN mesh baseline, and the
Stage-II rate-scaling study.

All money is handled in integer euro cents so that breakdown lines always
sum to the total exactly and regression fixtures never drift.
"""

import heapq
import math
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ParameterError

FIBER_SPEED = 2.0e8
KM = 1e3


def cents(eur: float) -> int:
    return int(round(eur * 100.0))


@dataclass(frozen=True)
class PriceBook:
    """Unit prices in euros.

    ``stage2_olt``/``stage2_onu`` default to the Stage-I prices; they exist
    so the wavelength-aggregation study can scale Stage-II hardware prices
    independently.  ``switching_per_pair`` switches the OTN reading of the
    ROADM/E-switch price from per-device (default) to per-pair.
    """

    olt: float = 16000.0
    onu: float = 2000.0
    splitter: float = 200.0
    fiber_material_per_km: float = 100.0
    fiber_install_per_km: float = 2500.0
    server_install: float = 3800.0
    per_gops: float = 1.5
    roadm: float = 19200.0
    eswitch: float = 19200.0
    stage2_olt: Optional[float] = None
    stage2_onu: Optional[float] = None
    switching_per_pair: bool = False

    def validate(self) -> None:
        for name in ("olt", "onu", "splitter", "fiber_material_per_km", "fiber_install_per_km",
                     "server_install", "per_gops", "roadm", "eswitch"):
            if getattr(self, name) < 0:
                raise ParameterError(f"PriceBook.{name} must be >= 0")

    def fiber_per_km(self) -> float:
        return self.fiber_material_per_km + self.fiber_install_per_km

    def stage2_olt_price(self) -> float:
        return self.olt if self.stage2_olt is None else self.stage2_olt

    def stage2_onu_price(self) -> float:
        return self.onu if self.stage2_onu is None else self.stage2_onu

    def switching_per_node(self) -> float:
        pair = self.roadm + self.eswitch
        return pair / 2.0 if self.switching_per_pair else pair

    def to_dict(self) -> dict:
        return {
            "olt": self.olt, "onu": self.onu, "splitter": self.splitter,
            "fiber_material_per_km": self.fiber_material_per_km,
            "fiber_install_per_km": self.fiber_install_per_km,
            "server_install": self.server_install, "per_gops": self.per_gops,
            "roadm": self.roadm, "eswitch": self.eswitch,
            "stage2_olt": self.stage2_olt, "stage2_onu": self.stage2_onu,
            "switching_per_pair": self.switching_per_pair,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PriceBook":
        return cls(**data)


@dataclass(frozen=True)
class CostBreakdown:
    """Itemized deployment cost, euro cents."""

    olt_onu: int = 0
    fiber: int = 0
    splitters: int = 0
    servers_install: int = 0
    servers_gops: int = 0
    switching: int = 0

    @property
    def total(self) -> int:
        return (self.olt_onu + self.fiber + self.splitters
                + self.servers_install + self.servers_gops + self.switching)

    def total_eur(self) -> float:
        return self.total / 100.0

    def to_dict(self) -> dict:
        return {
            "olt_onu": self.olt_onu, "fiber": self.fiber, "splitters": self.splitters,
            "servers_install": self.servers_install, "servers_gops": self.servers_gops,
            "switching": self.switching, "total": self.total,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CostBreakdown":
        return cls(
            olt_onu=data["olt_onu"], fiber=data["fiber"], splitters=data["splitters"],
            servers_install=data["servers_install"], servers_gops=data["servers_gops"],
            switching=data.get("switching", 0),
        )


def price_plan(plan, book: PriceBook) -> CostBreakdown:
    """Price a two-stage PON deployment plan.

    One ONU per attached RU and one per Stage-I-to-Stage-II attachment
    (the OLT-ONU aggregation box); one splitter per installed PON; server
    hardware priced by install fee plus cost per provisioned GOPS.
    """
    book.validate()
    n_o = len(plan.installed_olt1)
    n_q = len(plan.installed_olt2)
    n_onu1 = len(plan.y_pairs)
    n_onu2 = len(plan.z_pairs)
    n_du_ru = sum(1 for f in plan.du_at_ru if f)
    g_ru, g_o, g_q = plan.g_totals

    olt_onu = (cents(book.olt) * n_o + cents(book.stage2_olt_price()) * n_q
               + cents(book.onu) * n_onu1 + cents(book.stage2_onu_price()) * n_onu2)
    fiber_km = sum(plan.fiber_olt1.values()) + sum(plan.fiber_olt2.values())
    fiber = int(round(fiber_km * book.fiber_per_km() * 100.0))
    splitters = cents(book.splitter) * (n_o + n_q)
    servers_install = cents(book.server_install) * (n_o + n_q + n_du_ru)
    servers_gops = int(round(book.per_gops * 100.0 * (g_o * n_o + g_q * n_q + g_ru * n_du_ru)))
    return CostBreakdown(
        olt_onu=olt_onu, fiber=fiber, splitters=splitters,
        servers_install=servers_install, servers_gops=servers_gops, switching=0,
    )


def savings_fraction(pon: CostBreakdown, otn: CostBreakdown) -> float:
    if otn.total <= 0:
        return 0.0
    return (otn.total - pon.total) / otn.total


# ---------------------------------------------------------------------------
# OTN mesh baseline
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OtnConfig:
    path_capacity: float = 100e9  # per link and direction, bps
    switch_latency: float = 5e-6  # electrical switching per traversed hop
    max_reroutes: int = 16


@dataclass
class OtnResult:
    status: str  # "ok" | "infeasible"
    breakdown: Optional[CostBreakdown]
    n_nodes: int = 0
    n_links_used: int = 0
    detail: str = ""


def _delaunay_edges(points: np.ndarray) -> List[Tuple[int, int]]:
    """Candidate mesh edges: Delaunay triangulation, complete graph fallback."""
    n = len(points)
    if n < 2:
        return []
    complete = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if n <= 3:
        return complete
    try:
        from scipy.spatial import Delaunay

        tri = Delaunay(points)
    except Exception:
        return complete
    edges = set()
    for simplex in tri.simplices:
        for a in range(len(simplex)):
            for b in range(a + 1, len(simplex)):
                i, j = sorted((int(simplex[a]), int(simplex[b])))
                edges.add((i, j))
    return sorted(edges)


def _dijkstra(adj: Dict[int, List[Tuple[int, float]]], src: int, dst: int,
              blocked: set) -> Optional[List[int]]:
    dist = {src: 0.0}
    prev: Dict[int, int] = {}
    heap = [(0.0, src)]
    seen = set()
    while heap:
        d, node = heapq.heappop(heap)
        if node in seen:
            continue
        seen.add(node)
        if node == dst:
            break
        for nxt, w in adj.get(node, ()):
            key = (min(node, nxt), max(node, nxt))
            if key in blocked or nxt in seen:
                continue
            nd = d + w
            if nd < dist.get(nxt, math.inf):
                dist[nxt] = nd
                prev[nxt] = node
                heapq.heappush(heap, (nd, nxt))
    if dst not in dist:
        return None
    path = [dst]
    while path[-1] != src:
        path.append(prev[path[-1]])
    return path[::-1]


def price_otn(model, plan, book: PriceBook, config: Optional[OtnConfig] = None) -> OtnResult:
    """Price the mesh-OTN alternative for the same RU and server placement.

    Every RU site and server site becomes a mesh node carrying one ROADM
    and one electric switch.  Front-haul and mid-haul flows implied by the
    plan's DU/CU placement are routed over a Delaunay candidate mesh by
    shortest path under per-link capacity; each flow must meet the same
    latency budget as its PON counterpart (propagation, per-hop switching,
    per-TTI serialization).  Fiber is priced once per used link; server
    costs are identical to the PON plan's.
    """
    book.validate()
    cfg = config or OtnConfig()

    # Node set: RU sites plus installed server sites, deduplicated.
    pos_list: List[Tuple[float, float]] = []
    pos_index: Dict[Tuple[float, float], int] = {}

    def node_of(p: Tuple[float, float]) -> int:
        key = (float(p[0]), float(p[1]))
        if key not in pos_index:
            pos_index[key] = len(pos_list)
            pos_list.append(key)
        return pos_index[key]

    ru_nodes = [node_of(ru.position) for ru in model.rus]
    olt1_nodes = {o: node_of(tuple(model.olt1_pos[o])) for o in plan.installed_olt1}
    olt2_nodes = {q: node_of(tuple(model.olt2_pos[q])) for q in plan.installed_olt2}

    # Flows implied by the plan: (src node, dst node, ul bps, dl bps, budget).
    flows = []
    for b, ru in enumerate(model.rus):
        o = plan.olt_of(b)
        if not plan.du_at_ru[b]:
            flows.append((ru_nodes[b], olt1_nodes[o], ru.v[0], ru.v[1], ru.fh_budget))
        du_node = ru_nodes[b] if plan.du_at_ru[b] else olt1_nodes[o]
        cu_at = plan.cu_location(o, ru.slice_id)
        cu_node = olt1_nodes[o] if cu_at is None or cu_at < 0 else olt2_nodes[cu_at]
        if cu_node != du_node:
            flows.append((du_node, cu_node, ru.u[0], ru.u[1], ru.mh_budget))

    points = np.array(pos_list, dtype=float)
    edges = _delaunay_edges(points)
    lengths = {e: float(np.hypot(points[e[0], 0] - points[e[1], 0],
                                 points[e[0], 1] - points[e[1], 1])) for e in edges}
    adj: Dict[int, List[Tuple[int, float]]] = {}
    for (i, j), w in lengths.items():
        adj.setdefault(i, []).append((j, w))
        adj.setdefault(j, []).append((i, w))
    for neigh in adj.values():
        neigh.sort()

    used_ul: Dict[Tuple[int, int], float] = {e: 0.0 for e in edges}
    used_dl: Dict[Tuple[int, int], float] = {e: 0.0 for e in edges}
    used_edges = set()

    for src, dst, ul, dl, budget in flows:
        if src == dst:
            continue
        placed = False
        blocked: set = set()
        for _ in range(cfg.max_reroutes):
            path = _dijkstra(adj, src, dst, blocked)
            if path is None:
                break
            path_edges = [(min(a, b), max(a, b)) for a, b in zip(path, path[1:])]
            over = [e for e in path_edges
                    if used_ul[e] + ul > cfg.path_capacity or used_dl[e] + dl > cfg.path_capacity]
            if over:
                blocked.update(over)
                continue
            length_km = sum(lengths[e] for e in path_edges)
            lat = length_km * KM / FIBER_SPEED + len(path_edges) * cfg.switch_latency
            lat_ul = lat + ul * model.tti / cfg.path_capacity
            lat_dl = lat + dl * model.tti / cfg.path_capacity
            if lat_ul > budget or lat_dl > budget:
                break  # longer routes only get worse
            for e in path_edges:
                used_ul[e] += ul
                used_dl[e] += dl
                used_edges.add(e)
            placed = True
            break
        if not placed:
            return OtnResult("infeasible", None, n_nodes=len(pos_list),
                             detail=f"no feasible mesh route for flow {src}->{dst}")

    n_du_ru = sum(1 for f in plan.du_at_ru if f)
    g_ru, g_o, g_q = plan.g_totals
    n_o = len(plan.installed_olt1)
    n_q = len(plan.installed_olt2)
    switching = int(round(book.switching_per_node() * 100.0)) * len(pos_list)
    fiber = int(round(sum(lengths[e] for e in used_edges) * book.fiber_per_km() * 100.0))
    servers_install = cents(book.server_install) * (n_o + n_q + n_du_ru)
    servers_gops = int(round(book.per_gops * 100.0 * (g_o * n_o + g_q * n_q + g_ru * n_du_ru)))
    breakdown = CostBreakdown(
        olt_onu=0, fiber=fiber, splitters=0,
        servers_install=servers_install, servers_gops=servers_gops, switching=switching,
    )
    return OtnResult("ok", breakdown, n_nodes=len(pos_list), n_links_used=len(used_edges))


# ---------------------------------------------------------------------------
# Stage-II data-rate scaling study
# ---------------------------------------------------------------------------

@dataclass
class ScalingPoint:
    n: int
    status: str
    breakdown: Optional[CostBreakdown]
    n_olt1: int = 0
    n_olt2: int = 0

    @property
    def total(self) -> int:
        return self.breakdown.total if self.breakdown else 0


def stage2_scaling(scn, n_values: Sequence[int], *, deploy_config=None, book: Optional[PriceBook] = None,
                   assignment=None, lagrangian_config=None) -> List[ScalingPoint]:
    """Rerun deployment with the Stage-II PON rate scaled N-fold per point.

    Stage-II OLT and ONU hardware prices scale linearly with N (more
    aggregated wavelengths); everything else is untouched.  N=1 reproduces
    the unscaled two-stage deployment.
    """
    from . import assoc, deploy, lagrangian

    book = book or PriceBook()
    deploy_config = deploy_config or deploy.DeployConfig()
    if assignment is None:
        model = assoc.build_p1(scn)
        result = lagrangian.run_algorithm1(model, lagrangian_config)
        if result.status != "ok":
            raise ParameterError("association stage infeasible; cannot run the scaling study")
        assignment = result.assignment

    points: List[ScalingPoint] = []
    for n in n_values:
        if n < 1:
            raise ParameterError(f"scaling factor must be >= 1, got {n}")
        cfg_n = replace(
            deploy_config,
            pon2_rate_ul=deploy_config.pon2_rate_ul * n,
            pon2_rate_dl=deploy_config.pon2_rate_dl * n,
        )
        book_n = replace(
            book,
            stage2_olt=book.stage2_olt_price() * n,
            stage2_onu=book.stage2_onu_price() * n,
        )
        p2 = deploy.build_p2(assignment, scn, cfg_n, book_n)
        greedy = deploy.greedy_deploy(p2)
        if greedy.status != "ok":
            points.append(ScalingPoint(n=int(n), status="infeasible", breakdown=None))
            continue
        breakdown = price_plan(greedy.plan, book_n)
        points.append(
            ScalingPoint(
                n=int(n), status="ok", breakdown=breakdown,
                n_olt1=len(greedy.plan.installed_olt1), n_olt2=len(greedy.plan.installed_olt2),
            )
        )
    return points
