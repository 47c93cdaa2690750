"""Experiment harness: full pipeline runs, sweeps, result bundles, solver
comparison tables, and plot-ready file emission.

A pipeline run is generate -> associate -> deploy -> price, with every
stage output cross-validated by the corresponding feasibility checker
before pricing.  Bundles are deterministic functions of (config, seeds)
and serialize canonically, so identical invocations produce byte-identical
files.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
import os
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import assoc, cost, deploy, lagrangian, scenario as scen
from ._jsonio import canonical_dumps, canonical_loads, fmt_float, read_json, write_json
from .errors import OranPlanError, ParameterError, StructuralInfeasibility


@dataclass(frozen=True)
class ExperimentConfig:
    area_classes: Tuple[str, ...] = ("industrial", "urban", "rural")
    sides: Tuple[float, ...] = (1.0, 2.0)
    seeds: Tuple[int, ...] = (1, 2, 3, 4, 5)
    p1_solver: str = "heuristic"  # heuristic | exact | both
    p2_solver: str = "greedy"  # greedy | exact | both
    include_otn: bool = True
    include_lp_bound: bool = False
    exact_max_ues: int = 24
    exact_max_rus: int = 8
    exact_p2_max_rus: int = 5
    exact_p2_max_olt1: int = 3
    exact_p2_max_olt2: int = 2
    lagrangian: lagrangian.LagrangianConfig = field(default_factory=lagrangian.LagrangianConfig)
    deploy: deploy.DeployConfig = field(default_factory=deploy.DeployConfig)
    book: cost.PriceBook = field(default_factory=cost.PriceBook)
    scenario_overrides: Optional[dict] = None
    stage2_n_values: Tuple[int, ...] = ()

    def validate(self) -> None:
        if not self.seeds:
            raise ParameterError("at least one seed is required")
        if self.p1_solver not in ("heuristic", "exact", "both"):
            raise ParameterError(f"unknown p1 solver {self.p1_solver!r}")
        if self.p2_solver not in ("greedy", "exact", "both"):
            raise ParameterError(f"unknown p2 solver {self.p2_solver!r}")
        self.deploy.validate()
        self.book.validate()
        self.lagrangian.validate()

    def to_dict(self) -> dict:
        data = asdict(self)
        data["lagrangian"] = asdict(self.lagrangian)
        data["deploy"] = asdict(self.deploy)
        data["book"] = self.book.to_dict()
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        kwargs = dict(data)
        if "lagrangian" in kwargs:
            kwargs["lagrangian"] = lagrangian.LagrangianConfig(**kwargs["lagrangian"])
        if "deploy" in kwargs:
            dep = dict(kwargs["deploy"])
            for key in ("ru_capacity", "du_at_ru_capacity", "du_at_olt_capacity",
                        "cu_at_olt1_capacity", "cu_at_olt2_capacity"):
                if key in dep:
                    dep[key] = tuple(dep[key])
            kwargs["deploy"] = deploy.DeployConfig(**dep)
        if "book" in kwargs:
            kwargs["book"] = cost.PriceBook.from_dict(kwargs["book"])
        for key in ("area_classes", "sides", "seeds", "stage2_n_values"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)


def config_hash(config: ExperimentConfig) -> str:
    return hashlib.sha256(canonical_dumps(config.to_dict()).encode()).hexdigest()[:12]


@dataclass
class RunRecord:
    area_class: str
    side_km: float
    seed: int
    solver: str  # "heuristic" | "exact"
    instance: str  # "full" | "oracle-subsample"
    config_hash: str
    status: str
    n_ues: int = 0
    ru_count: Dict[str, int] = field(default_factory=dict)
    installed_rus: int = 0
    olt1_count: int = 0
    olt2_count: int = 0
    du_at_ru_count: int = 0
    avg_ru_throughput_dl: Optional[float] = None
    fh_ul: Dict[str, Optional[float]] = field(default_factory=dict)
    fh_dl: Dict[str, Optional[float]] = field(default_factory=dict)
    mh_ul: Dict[str, Optional[float]] = field(default_factory=dict)
    mh_dl: Dict[str, Optional[float]] = field(default_factory=dict)
    bbu_ul: Dict[str, Optional[float]] = field(default_factory=dict)
    bbu_dl: Dict[str, Optional[float]] = field(default_factory=dict)
    pon_cost: Optional[dict] = None
    otn_cost: Optional[dict] = None
    otn_status: str = ""
    savings: Optional[float] = None
    p1_objective: Optional[float] = None
    lagr_iterations: int = 0
    lagr_best_lb: Optional[float] = None
    lagr_best_ub: Optional[float] = None
    lagr_gap_bound: Optional[float] = None

    def key(self) -> Tuple:
        return (self.area_class, self.side_km, self.seed, self.instance, self.solver)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunRecord":
        return cls(**data)


@dataclass
class RunArtifacts:
    scenario: scen.Scenario
    model: assoc.P1Model
    assignment: assoc.Assignment
    trace: Optional[lagrangian.GapTrace]
    p2_model: Optional[deploy.P2Model]
    plan: Optional[deploy.DeploymentPlan]
    pon_cost: Optional[cost.CostBreakdown]
    otn: Optional[cost.OtnResult]
    record: RunRecord


@dataclass
class ResultBundle:
    config: dict
    config_hash: str
    records: List[RunRecord] = field(default_factory=list)
    traces: Dict[str, List[Tuple[int, float, float, float]]] = field(default_factory=dict)
    artifacts: List[RunArtifacts] = field(default_factory=list)  # only when requested; not serialized

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "config_hash": self.config_hash,
            "records": [r.to_dict() for r in self.records],
            "traces": {k: [list(row) for row in rows] for k, rows in self.traces.items()},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ResultBundle":
        return cls(
            config=data["config"],
            config_hash=data["config_hash"],
            records=[RunRecord.from_dict(r) for r in data["records"]],
            traces={k: [tuple(row) for row in rows] for k, rows in data["traces"].items()},
        )


def _mean(values: Sequence[float]) -> Optional[float]:
    values = [v for v in values if v is not None and math.isfinite(v)]
    return float(np.mean(values)) if values else None


def latency_summary(model: deploy.P2Model, plan: deploy.DeploymentPlan) -> dict:
    """Per-slice average front-haul, mid-haul, and baseband latencies.

    A Stage-I PON counts as front-haul for its DU-at-OLT members and as
    mid-haul for its DU-at-RU members; Stage-II PON latencies count as
    mid-haul for every slice riding them.
    """
    out = {"fh_ul": {}, "fh_dl": {}, "mh_ul": {}, "mh_dl": {}, "bbu_ul": {}, "bbu_dl": {}}
    for sid in model.slice_ids:
        fh_ul, fh_dl, mh_ul, mh_dl = [], [], [], []
        for b, ru in enumerate(model.rus):
            if ru.slice_id != sid:
                continue
            if plan.du_at_ru[b]:
                mh_ul.append(plan.lat1_ul[b])
                mh_dl.append(plan.lat1_dl[b])
            else:
                fh_ul.append(plan.lat1_ul[b])
                fh_dl.append(plan.lat1_dl[b])
        for o, entry_sid, q in plan.cu_entries:
            if entry_sid == sid and q != deploy.LOCAL:
                mh_ul.append(plan.lat2_ul[o])
                mh_dl.append(plan.lat2_dl[o])
        bbu_ul = [plan.proc_ul[b] * model.tti for b, ru in enumerate(model.rus) if ru.slice_id == sid]
        bbu_dl = [plan.proc_dl[b] * model.tti for b, ru in enumerate(model.rus) if ru.slice_id == sid]
        out["fh_ul"][sid] = _mean(fh_ul)
        out["fh_dl"][sid] = _mean(fh_dl)
        out["mh_ul"][sid] = _mean(mh_ul)
        out["mh_dl"][sid] = _mean(mh_dl)
        out["bbu_ul"][sid] = _mean(bbu_ul)
        out["bbu_dl"][sid] = _mean(bbu_dl)
    return out


def subsample_scenario(scn: scen.Scenario, max_ues: int, max_rus: int) -> scen.Scenario:
    """Shrink a scenario so the exact association solver can handle it.

    Keeps slice proportions, keeps only RU candidates closest to the area
    center per slice, and keeps only UEs covered by a kept RU, in index
    order.  Deterministic; used for oracle-subsample records.
    """
    sl_share = [s.share for s in scn.slices]
    per_slice_rus = scen.proportional_labels(sl_share, max_rus)
    quota = {scn.slices[i].id: per_slice_rus.count(i) for i in range(len(scn.slices))}
    center = np.array([scn.side_km / 2.0, scn.side_km / 2.0])
    keep_rus: List[int] = []
    for s in scn.slices:
        idx = [i for i, r in enumerate(scn.candidate_rus) if r.slice_id == s.id]
        idx.sort(key=lambda i: (float(np.hypot(*(np.array(scn.candidate_rus[i].position) - center))), i))
        keep_rus.extend(idx[: max(1, quota[s.id])])
    keep_rus = sorted(keep_rus)
    ru_set = set(keep_rus)

    keep_ues: List[int] = []
    per_slice_cap = {scn.slices[i].id: c for i, c in
                     ((i, scen.proportional_labels(sl_share, max_ues).count(i)) for i in range(len(scn.slices)))}
    counts = {sid: 0 for sid in per_slice_cap}
    for u, ue in enumerate(scn.ues):
        if counts[ue.slice_id] >= max(1, per_slice_cap[ue.slice_id]):
            continue
        covered = any(
            scn.sites.d_ue_ru[u, b] <= scn.candidate_rus[b].coverage and scn.candidate_rus[b].slice_id == ue.slice_id
            for b in keep_rus
        )
        if covered:
            keep_ues.append(u)
            counts[ue.slice_id] += 1

    ues = tuple(scn.ues[u] for u in keep_ues)
    rus = tuple(scn.candidate_rus[b] for b in keep_rus)
    ru_pos = np.array([r.position for r in rus], dtype=float).reshape(len(rus), 2)
    sites = scen.build_site_graph(
        ue_pos=np.array([u.position for u in ues], dtype=float).reshape(len(ues), 2),
        ru_pos=ru_pos,
        stage1_sites=ru_pos.copy(),
        stage2_sites=scn.sites.stage2_sites,
        reach_stage1=scn.sites.reach_stage1,
        reach_stage2=scn.sites.reach_stage2,
    )
    return scen.Scenario(
        area_class=scn.area_class, side_km=scn.side_km, seed=scn.seed,
        slices=scn.slices, ues=ues, candidate_rus=rus, sites=sites,
        density_profile=scn.density_profile, tti=scn.tti,
        radio=dict(scn.radio), config=dict(scn.config),
    )


def _empty_record(cfg_hash: str, area_class: str, side: float, seed: int,
                  solver: str, instance: str, status: str) -> RunRecord:
    return RunRecord(area_class=area_class, side_km=side, seed=seed, solver=solver,
                     instance=instance, config_hash=cfg_hash, status=status)


def run_single(area_class: str, side: float, seed: int, cfg: ExperimentConfig,
               solver: str = "heuristic", instance: str = "full",
               scenario_obj: Optional[scen.Scenario] = None) -> RunArtifacts:
    """One full pipeline run; raises on structural problems, reports
    infeasible statuses in the record otherwise."""
    cfg_hash = config_hash(cfg)
    scn = scenario_obj or scen.generate(area_class, side, seed, cfg.scenario_overrides)
    record = _empty_record(cfg_hash, area_class, side, seed, solver, instance, "ok")
    record.n_ues = len(scn.ues)

    model = assoc.build_p1(scn)
    trace = None
    if solver == "exact":
        result = assoc.solve_exact(model)
        if result.assignment is None:
            record.status = "infeasible-association"
            return RunArtifacts(scn, model, None, None, None, None, None, None, record)
        assignment = result.assignment
    else:
        lg = lagrangian.run_algorithm1(model, cfg.lagrangian)
        trace = lg.trace
        record.lagr_iterations = len(lg.trace.records)
        record.lagr_best_lb = lg.trace.best_lb if math.isfinite(lg.trace.best_lb) else None
        record.lagr_best_ub = lg.trace.best_ub if math.isfinite(lg.trace.best_ub) else None
        bound = lagrangian.gap_bound(lg.trace)
        record.lagr_gap_bound = bound if math.isfinite(bound) else None
        if lg.status != "ok":
            record.status = "infeasible-association"
            return RunArtifacts(scn, model, None, trace, None, None, None, None, record)
        assignment = lg.assignment

    violations = assoc.check_feasible(model, assignment)
    if violations:
        record.status = "invalid-assignment"
        return RunArtifacts(scn, model, assignment, trace, None, None, None, None, record)

    record.p1_objective = assignment.objective
    sl_idx = scn.slice_index()
    counts = {s.id: 0 for s in scn.slices}
    for b in assignment.installed:
        counts[scn.candidate_rus[b].slice_id] += 1
    record.ru_count = counts
    record.installed_rus = len(assignment.installed)
    total_dl = sum(u.dl_demand for u in scn.ues)
    record.avg_ru_throughput_dl = total_dl / max(1, len(assignment.installed))

    p2_model = deploy.build_p2(assignment, scn, cfg.deploy, cfg.book)
    greedy = deploy.greedy_deploy(p2_model)
    if greedy.status != "ok":
        record.status = "infeasible-deployment"
        return RunArtifacts(scn, model, assignment, trace, p2_model, None, None, None, record)
    plan = greedy.plan
    plan_violations = deploy.check_plan(p2_model, plan)
    if plan_violations:
        record.status = "invalid-plan"
        return RunArtifacts(scn, model, assignment, trace, p2_model, plan, None, None, record)

    record.olt1_count = len(plan.installed_olt1)
    record.olt2_count = len(plan.installed_olt2)
    record.du_at_ru_count = plan.n_du_at_ru()
    lat = latency_summary(p2_model, plan)
    record.fh_ul, record.fh_dl = lat["fh_ul"], lat["fh_dl"]
    record.mh_ul, record.mh_dl = lat["mh_ul"], lat["mh_dl"]
    record.bbu_ul, record.bbu_dl = lat["bbu_ul"], lat["bbu_dl"]

    breakdown = cost.price_plan(plan, cfg.book)
    record.pon_cost = breakdown.to_dict()
    otn = None
    if cfg.include_otn:
        otn = cost.price_otn(p2_model, plan, cfg.book)
        record.otn_status = otn.status
        if otn.status == "ok":
            record.otn_cost = otn.breakdown.to_dict()
            record.savings = cost.savings_fraction(breakdown, otn.breakdown)
    return RunArtifacts(scn, model, assignment, trace, p2_model, plan, breakdown, otn, record)


def _exact_records(scn: scen.Scenario, cfg: ExperimentConfig, cfg_hash: str) -> List[RunRecord]:
    """Exact-vs-heuristic association records on an oracle-scale subsample."""
    sub = subsample_scenario(scn, cfg.exact_max_ues, cfg.exact_max_rus)
    out = []
    for solver in ("exact", "heuristic"):
        art = run_single(scn.area_class, scn.side_km, scn.seed, cfg, solver=solver,
                         instance="oracle-subsample", scenario_obj=sub)
        out.append(art.record)
    return out


def run_pipeline(cfg: ExperimentConfig, keep_artifacts: bool = False) -> ResultBundle:
    """Execute the configured sweep and return a deterministic bundle."""
    cfg.validate()
    cfg_hash = config_hash(cfg)
    bundle = ResultBundle(config=cfg.to_dict(), config_hash=cfg_hash)
    for area_class in cfg.area_classes:
        for side in cfg.sides:
            for seed in cfg.seeds:
                scn = scen.generate(area_class, side, seed, cfg.scenario_overrides)
                if cfg.p1_solver in ("heuristic", "both"):
                    art = run_single(area_class, side, seed, cfg, solver="heuristic",
                                     instance="full", scenario_obj=scn)
                    bundle.records.append(art.record)
                    if art.trace is not None:
                        key = f"{area_class}-{side:g}-{seed}"
                        bundle.traces[key] = art.trace.to_rows()
                    if keep_artifacts:
                        bundle.artifacts.append(art)
                if cfg.p1_solver in ("exact", "both"):
                    bundle.records.extend(_exact_records(scn, cfg, cfg_hash))
    return bundle


@dataclass
class GapRow:
    area_class: str
    side_km: float
    seed: int
    instance: str
    delta_rus: int
    delta_olts: int
    delta_cost: Optional[int]
    theorem2_ok: Optional[bool]


def compare_solvers(bundle: ResultBundle) -> List[GapRow]:
    """Per-seed heuristic-minus-exact deltas on shared instances."""
    by_key: Dict[Tuple, Dict[str, RunRecord]] = {}
    for rec in bundle.records:
        key = (rec.area_class, rec.side_km, rec.seed, rec.instance)
        by_key.setdefault(key, {})[rec.solver] = rec
    rows = []
    for key in sorted(by_key):
        pair = by_key[key]
        if "exact" not in pair or "heuristic" not in pair:
            continue
        ex, he = pair["exact"], pair["heuristic"]
        if ex.status != "ok" or he.status != "ok":
            continue
        d_cost = None
        if ex.pon_cost and he.pon_cost:
            d_cost = he.pon_cost["total"] - ex.pon_cost["total"]
        t2 = None
        if ex.olt1_count and he.pon_cost and ex.pon_cost and ex.pon_cost["total"] > 0:
            factor = math.log(max(2, ex.olt1_count * max(1, ex.installed_rus)))
            t2 = he.pon_cost["total"] / ex.pon_cost["total"] <= factor
        rows.append(GapRow(
            area_class=key[0], side_km=key[1], seed=key[2], instance=key[3],
            delta_rus=he.installed_rus - ex.installed_rus,
            delta_olts=he.olt1_count - ex.olt1_count,
            delta_cost=d_cost, theorem2_ok=t2,
        ))
    return rows


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------

RUNS_HEADER = [
    "area_class", "side_km", "seed", "solver", "instance", "config_hash", "status",
    "n_ues", "installed_rus", "olt1_count", "olt2_count", "du_at_ru_count",
    "ru_uRLLC", "ru_eMBB", "ru_mMTC", "avg_ru_throughput_dl", "p1_objective",
    "pon_total", "otn_total", "savings",
    "lagr_iterations", "lagr_best_lb", "lagr_best_ub", "lagr_gap_bound",
]

LAT_HEADER = [
    "area_class", "side_km", "seed", "solver", "instance", "slice",
    "fh_ul", "fh_dl", "mh_ul", "mh_dl", "bbu_ul", "bbu_dl",
]

COST_HEADER = [
    "area_class", "side_km", "seed", "solver", "instance", "network",
    "olt_onu", "fiber", "splitters", "servers_install", "servers_gops", "switching", "total",
]

TRACE_HEADER = ["run", "iteration", "lb", "ub", "lambda"]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return fmt_float(value)
    return str(value)


def _write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def emit(bundle: ResultBundle, out_dir: str, formats: Sequence[str] = ("csv", "json")) -> List[str]:
    """Write the bundle: canonical JSON root plus flat plot-ready CSV views."""
    os.makedirs(out_dir, exist_ok=True)
    written: List[str] = []
    if "json" in formats:
        path = os.path.join(out_dir, "bundle.json")
        write_json(path, bundle.to_dict())
        written.append(path)
        summary = {
            "config_hash": bundle.config_hash,
            "runs": len(bundle.records),
            "ok_runs": sum(1 for r in bundle.records if r.status == "ok"),
            "mean_savings": _mean([r.savings for r in bundle.records
                                   if r.savings is not None and r.instance == "full"]),
        }
        path = os.path.join(out_dir, "summary.json")
        write_json(path, summary)
        written.append(path)
    if "csv" in formats:
        records = sorted(bundle.records, key=lambda r: r.key())
        rows = []
        for r in records:
            rows.append([
                r.area_class, r.side_km, r.seed, r.solver, r.instance, r.config_hash, r.status,
                r.n_ues, r.installed_rus, r.olt1_count, r.olt2_count, r.du_at_ru_count,
                r.ru_count.get("uRLLC"), r.ru_count.get("eMBB"), r.ru_count.get("mMTC"),
                r.avg_ru_throughput_dl, r.p1_objective,
                r.pon_cost["total"] if r.pon_cost else None,
                r.otn_cost["total"] if r.otn_cost else None,
                r.savings, r.lagr_iterations, r.lagr_best_lb, r.lagr_best_ub, r.lagr_gap_bound,
            ])
        path = os.path.join(out_dir, "runs.csv")
        _write_csv(path, RUNS_HEADER, rows)
        written.append(path)

        lat_rows = []
        for r in records:
            for sid in scen.SLICE_IDS:
                lat_rows.append([
                    r.area_class, r.side_km, r.seed, r.solver, r.instance, sid,
                    r.fh_ul.get(sid), r.fh_dl.get(sid), r.mh_ul.get(sid), r.mh_dl.get(sid),
                    r.bbu_ul.get(sid), r.bbu_dl.get(sid),
                ])
        path = os.path.join(out_dir, "latencies.csv")
        _write_csv(path, LAT_HEADER, lat_rows)
        written.append(path)

        cost_rows = []
        for r in records:
            for net, data in (("twdm-pon", r.pon_cost), ("otn", r.otn_cost)):
                if data is None:
                    continue
                cost_rows.append([
                    r.area_class, r.side_km, r.seed, r.solver, r.instance, net,
                    data["olt_onu"], data["fiber"], data["splitters"],
                    data["servers_install"], data["servers_gops"], data["switching"], data["total"],
                ])
        path = os.path.join(out_dir, "costs.csv")
        _write_csv(path, COST_HEADER, cost_rows)
        written.append(path)

        trace_rows = []
        for key in sorted(bundle.traces):
            for n, lb, ub, lam in bundle.traces[key]:
                trace_rows.append([key, n, lb, ub if math.isfinite(ub) else None, lam])
        path = os.path.join(out_dir, "gap_traces.csv")
        _write_csv(path, TRACE_HEADER, trace_rows)
        written.append(path)
    return written


def load_bundle(out_dir: str) -> ResultBundle:
    return ResultBundle.from_dict(read_json(os.path.join(out_dir, "bundle.json")))
