"""Stage one: UE-to-RU association (problem P1).

Builds the association model from a scenario and solves it exactly at desk
scale with depth-first branch-and-bound.  The objective weighs the number
of installed RUs (weight ``alpha``) far above the summed over-the-air
latencies (weight ``beta``), so the solver primarily minimizes the RU
count and uses latency as a tie-breaker.

The objective convention follows the double sum over all (UE, RU) pairs:
each attached pair (u, b) contributes

    coef[u, b] = beta * (2 D_ub / c + U_s * (W_u^UL dTTI / W_b^UL
                                             + W_u^DL dTTI / W_b^DL))

where ``U_s`` is the UE count of u's slice, because the per-RU load term
appears once in every pair row of the slice.  This is the form the
Lagrangian subproblem's closed-form solution relies on.
"""

import math
import time
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import StructuralInfeasibility
from .scenario import Scenario
from .violations import Violation

AIR_SPEED = 3.0e8
KM = 1e3


@dataclass
class P1Model:
    scenario: Scenario
    alpha: float
    beta: float
    tti: float
    n_ues: int
    n_rus: int
    ue_slice: np.ndarray  # (n_ues,) slice index per UE
    ru_slice: np.ndarray  # (n_rus,)
    slice_ue_count: np.ndarray  # U_s per slice
    d: np.ndarray  # (n_ues, n_rus) km
    eligible: np.ndarray  # bool
    prop: np.ndarray  # propagation seconds, d*1e3/c
    trans_ul: np.ndarray  # per-pair transmission seconds W_u dTTI / W_b
    trans_dl: np.ndarray
    coef: np.ndarray  # objective coefficient of an attached pair
    ota_budget: np.ndarray  # (n_ues,) seconds
    ue_cands: List[np.ndarray] = field(default_factory=list)  # eligible RUs per UE, nearest first

    def slice_ids(self) -> Tuple[str, ...]:
        return tuple(s.id for s in self.scenario.slices)


@dataclass(frozen=True)
class Assignment:
    attach: Tuple[int, ...]  # RU index per UE
    installed: Tuple[int, ...]  # sorted installed RU indices
    ota_ul: Tuple[float, ...]
    ota_dl: Tuple[float, ...]
    objective: float

    def pairs(self) -> List[Tuple[int, int]]:
        return [(u, b) for u, b in enumerate(self.attach) if b >= 0]

    def to_dict(self) -> dict:
        return {
            "attach": list(self.attach),
            "installed": list(self.installed),
            "ota_ul": list(self.ota_ul),
            "ota_dl": list(self.ota_dl),
            "objective": self.objective,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Assignment":
        return cls(
            attach=tuple(int(b) for b in data["attach"]),
            installed=tuple(int(b) for b in data["installed"]),
            ota_ul=tuple(data["ota_ul"]),
            ota_dl=tuple(data["ota_dl"]),
            objective=float(data["objective"]),
        )


@dataclass(frozen=True)
class SolveLimits:
    max_nodes: int = 5_000_000
    time_limit: float = 120.0


@dataclass
class ExactResult:
    status: str  # "optimal" | "feasible" | "infeasible" | "unknown"
    assignment: Optional[Assignment]
    optimal: bool
    nodes: int
    runtime: float


def build_p1(scn: Scenario, alpha: Optional[float] = None, beta: Optional[float] = None) -> P1Model:
    """Materialize coefficient tables and the eligibility mask.

    Raises :class:`StructuralInfeasibility` naming every UE that has no
    same-slice RU within coverage.
    """
    sl_idx = scn.slice_index()
    n_u = len(scn.ues)
    n_b = len(scn.candidate_rus)
    ue_slice = np.array([sl_idx[u.slice_id] for u in scn.ues], dtype=int)
    ru_slice = np.array([sl_idx[r.slice_id] for r in scn.candidate_rus], dtype=int)
    slice_count = np.bincount(ue_slice, minlength=len(scn.slices)).astype(float)

    d = scn.sites.d_ue_ru
    coverage = np.array([r.coverage for r in scn.candidate_rus])
    eligible = (ue_slice[:, None] == ru_slice[None, :]) & (d <= coverage[None, :])

    uncovered = np.flatnonzero(~eligible.any(axis=1))
    if len(uncovered):
        names = ", ".join(f"UE{u}" for u in uncovered[:10])
        raise StructuralInfeasibility(
            f"{len(uncovered)} UE(s) outside coverage of every same-slice RU: {names}",
            entities=tuple(int(u) for u in uncovered),
        )

    if alpha is None:
        alpha = 1.0 / n_b
    if beta is None:
        beta = 1.0 / n_u

    ul_dem = np.array([u.ul_demand for u in scn.ues])
    dl_dem = np.array([u.dl_demand for u in scn.ues])
    ul_cap = np.array([r.ul_cap for r in scn.candidate_rus])
    dl_cap = np.array([r.dl_cap for r in scn.candidate_rus])
    prop = d * KM / AIR_SPEED
    trans_ul = ul_dem[:, None] * scn.tti / ul_cap[None, :]
    trans_dl = dl_dem[:, None] * scn.tti / dl_cap[None, :]
    us = slice_count[ue_slice][:, None]
    coef = beta * (2.0 * prop + us * (trans_ul + trans_dl))
    coef = np.where(eligible, coef, np.inf)

    ota_budget = np.array([scn.slices[s].ota_budget for s in ue_slice])

    ue_cands = []
    for u in range(n_u):
        cands = np.flatnonzero(eligible[u])
        order = np.lexsort((cands, d[u, cands]))
        ue_cands.append(cands[order])

    return P1Model(
        scenario=scn, alpha=alpha, beta=beta, tti=scn.tti,
        n_ues=n_u, n_rus=n_b,
        ue_slice=ue_slice, ru_slice=ru_slice, slice_ue_count=slice_count,
        d=d, eligible=eligible, prop=prop,
        trans_ul=trans_ul, trans_dl=trans_dl, coef=coef,
        ota_budget=ota_budget, ue_cands=ue_cands,
    )


def objective_value(model: P1Model, attach: Sequence[int]) -> float:
    """Objective of a complete attachment vector (one RU per UE)."""
    attach = np.asarray(attach, dtype=int)
    installed = np.unique(attach[attach >= 0])
    total = model.alpha * len(installed)
    for u, b in enumerate(attach):
        if b >= 0:
            total += model.coef[u, b]
    return float(total)


def _loads(model: P1Model, pairs: Iterable[Tuple[int, int]]) -> Tuple[np.ndarray, np.ndarray]:
    load_ul = np.zeros(model.n_rus)
    load_dl = np.zeros(model.n_rus)
    for u, b in pairs:
        load_ul[b] += model.trans_ul[u, b]
        load_dl[b] += model.trans_dl[u, b]
    return load_ul, load_dl


def make_assignment(model: P1Model, attach: Sequence[int]) -> Assignment:
    """Annotate an attachment vector with latencies and the objective."""
    attach = tuple(int(b) for b in attach)
    pairs = [(u, b) for u, b in enumerate(attach) if b >= 0]
    load_ul, load_dl = _loads(model, pairs)
    ota_ul = tuple(
        float(model.prop[u, b] + load_ul[b]) if b >= 0 else math.nan for u, b in enumerate(attach)
    )
    ota_dl = tuple(
        float(model.prop[u, b] + load_dl[b]) if b >= 0 else math.nan for u, b in enumerate(attach)
    )
    installed = tuple(sorted({b for _, b in pairs}))
    return Assignment(
        attach=attach, installed=installed, ota_ul=ota_ul, ota_dl=ota_dl,
        objective=objective_value(model, attach),
    )


def ota_latency(model: P1Model, assignment: Assignment, u: int, b: int) -> Tuple[float, float]:
    """Uplink/downlink OTA latency of attached pair (u, b), seconds.

    First term is wireless propagation, second the per-TTI transmission
    time of all traffic currently scheduled on RU ``b``.
    """
    if assignment.attach[u] != b:
        raise ValueError(f"UE {u} is not attached to RU {b}")
    load_ul, load_dl = _loads(model, assignment.pairs())
    return (
        float(model.prop[u, b] + load_ul[b]),
        float(model.prop[u, b] + load_dl[b]),
    )


def check_feasible(model: P1Model, assignment: Union[Assignment, Iterable[Tuple[int, int]]]) -> List[Violation]:
    """Report every violated P1 constraint; an empty list means feasible."""
    tol = 1e-12
    declared_installed: Optional[set] = None
    if isinstance(assignment, Assignment):
        pairs = assignment.pairs()
        declared_installed = set(assignment.installed)
    else:
        pairs = [(int(u), int(b)) for u, b in assignment]

    out: List[Violation] = []
    counts = np.zeros(model.n_ues, dtype=int)
    for u, b in pairs:
        counts[u] += 1
        if not model.eligible[u, b]:
            out.append(Violation("coverage", (u, b), 0.0, "UE attached outside coverage or slice"))
        if declared_installed is not None and b not in declared_installed:
            out.append(Violation("installed", (u, b), 0.0, "UE attached to an RU not marked installed"))
    for u in range(model.n_ues):
        if counts[u] != 1:
            out.append(
                Violation("single-attach", (u,), float(counts[u] - 1),
                          f"UE associated with {counts[u]} RUs, must be exactly 1")
            )

    load_ul, load_dl = _loads(model, pairs)
    for u, b in pairs:
        budget = model.ota_budget[u]
        t_ul = model.prop[u, b] + load_ul[b]
        if t_ul > budget + tol:
            out.append(Violation("ota-ul", (u, b), float(budget - t_ul), "uplink OTA budget exceeded"))
        t_dl = model.prop[u, b] + load_dl[b]
        if t_dl > budget + tol:
            out.append(Violation("ota-dl", (u, b), float(budget - t_dl), "downlink OTA budget exceeded"))
    return out


def dump_p1_tables(model: P1Model) -> dict:
    """Coefficient tables for external solver cross-checks."""
    pairs = []
    for u in range(model.n_ues):
        for b in model.ue_cands[u]:
            b = int(b)
            pairs.append({
                "ue": u, "ru": b,
                "distance_km": float(model.d[u, b]),
                "prop_s": float(model.prop[u, b]),
                "trans_ul_s": float(model.trans_ul[u, b]),
                "trans_dl_s": float(model.trans_dl[u, b]),
                "coef": float(model.coef[u, b]),
            })
    return {
        "alpha": model.alpha,
        "beta": model.beta,
        "tti": model.tti,
        "n_ues": model.n_ues,
        "n_rus": model.n_rus,
        "ota_budget": model.ota_budget.tolist(),
        "pairs": pairs,
    }


class _SliceSearch:
    """Depth-first branch-and-bound over one slice's UEs.

    Branches on the most demanding UE first with RU children ordered by
    distance; prunes with (partial objective + sum of per-UE best-pair
    coefficients).  Ties within a relative epsilon are broken toward the
    lexicographically smallest installed set, then attachment vector.
    """

    EPS = 1e-12

    def __init__(self, model: P1Model, ues: np.ndarray, deadline: float, max_nodes: int):
        self.m = model
        dem = np.array([
            model.scenario.ues[u].ul_demand + model.scenario.ues[u].dl_demand for u in ues
        ])
        order = np.lexsort((ues, -dem))
        self.ues = ues[order]
        self.deadline = deadline
        self.max_nodes = max_nodes
        self.nodes = 0
        self.hit_limit = False
        self.best_key: Optional[Tuple[float, Tuple[int, ...], Tuple[int, ...]]] = None
        self.min_coef = np.array([model.coef[u, model.ue_cands[u]].min() for u in self.ues])
        self.rest = np.concatenate([np.cumsum(self.min_coef[::-1])[::-1], [0.0]])
        self.attach: Dict[int, int] = {}
        self.load_ul = np.zeros(model.n_rus)
        self.load_dl = np.zeros(model.n_rus)
        self.max_prop = np.zeros(model.n_rus)
        self.users = np.zeros(model.n_rus, dtype=int)

    def _tol(self) -> float:
        base = abs(self.best_key[0]) if self.best_key else 1.0
        return self.EPS * max(1.0, base)

    def run(self) -> Optional[Tuple[float, Tuple[int, ...], Dict[int, int]]]:
        self._dfs(0, 0.0, 0)
        if self.best_key is None:
            return None
        obj, installed, _ = self.best_key
        return obj, installed, dict(self.best_attach)

    def _dfs(self, depth: int, cost: float, n_open: int) -> None:
        if self.hit_limit:
            return
        self.nodes += 1
        if self.nodes > self.max_nodes or (self.nodes % 4096 == 0 and time.perf_counter() > self.deadline):
            self.hit_limit = True
            return
        if self.best_key is not None and cost + self.rest[depth] > self.best_key[0] + self._tol():
            return
        if depth == len(self.ues):
            installed = tuple(sorted({b for b in self.attach.values()}))
            attach_t = tuple(self.attach[u] for u in sorted(self.attach))
            key = (cost, installed, attach_t)
            if (
                self.best_key is None
                or cost < self.best_key[0] - self._tol()
                or (cost <= self.best_key[0] + self._tol() and key[1:] < self.best_key[1:])
            ):
                self.best_key = key
                self.best_attach = dict(self.attach)
            return
        u = int(self.ues[depth])
        budget = self.m.ota_budget[u]
        for b in self.m.ue_cands[u]:
            b = int(b)
            new_ul = self.load_ul[b] + self.m.trans_ul[u, b]
            new_dl = self.load_dl[b] + self.m.trans_dl[u, b]
            worst_prop = max(self.max_prop[b], self.m.prop[u, b])
            if worst_prop + new_ul > budget + 1e-15 or worst_prop + new_dl > budget + 1e-15:
                continue
            prev_prop = self.max_prop[b]
            newly_open = self.users[b] == 0
            self.attach[u] = b
            self.load_ul[b] = new_ul
            self.load_dl[b] = new_dl
            self.max_prop[b] = worst_prop
            self.users[b] += 1
            self._dfs(
                depth + 1,
                cost + self.m.coef[u, b] + (self.m.alpha if newly_open else 0.0),
                n_open + (1 if newly_open else 0),
            )
            del self.attach[u]
            self.load_ul[b] -= self.m.trans_ul[u, b]
            self.load_dl[b] -= self.m.trans_dl[u, b]
            self.max_prop[b] = prev_prop
            self.users[b] -= 1


def solve_exact(model: P1Model, limits: Optional[SolveLimits] = None) -> ExactResult:
    """Globally optimal P1 solve via per-slice branch-and-bound.

    Slices share no UEs, RUs or constraints, so the problem decomposes and
    each slice is searched independently.  The optimality flag is set only
    when no slice search hit its node or time limit.
    """
    limits = limits or SolveLimits()
    t0 = time.perf_counter()
    deadline = t0 + limits.time_limit
    attach = np.full(model.n_ues, -1, dtype=int)
    total_nodes = 0
    complete = True
    for si in range(len(model.scenario.slices)):
        ues = np.flatnonzero(model.ue_slice == si)
        if not len(ues):
            continue
        search = _SliceSearch(model, ues, deadline, limits.max_nodes - total_nodes)
        result = search.run()
        total_nodes += search.nodes
        complete = complete and not search.hit_limit
        if result is None:
            status = "infeasible" if not search.hit_limit else "unknown"
            return ExactResult(status, None, False, total_nodes, time.perf_counter() - t0)
        _, _, slice_attach = result
        for u, b in slice_attach.items():
            attach[u] = b
    asg = make_assignment(model, attach)
    return ExactResult(
        "optimal" if complete else "feasible", asg, complete, total_nodes,
        time.perf_counter() - t0,
    )


def lp_lower_bound(model: P1Model) -> float:
    """Optimum of P1 with attachment and installation variables relaxed to [0, 1]."""
    from scipy import sparse
    from scipy.optimize import linprog

    pairs = [(u, int(b)) for u in range(model.n_ues) for b in model.ue_cands[u]]
    n_p = len(pairs)
    n_v = n_p + model.n_rus
    pair_idx: Dict[Tuple[int, int], int] = {pb: i for i, pb in enumerate(pairs)}
    by_ru: Dict[int, List[Tuple[int, int]]] = {}
    for u, b in pairs:
        by_ru.setdefault(b, []).append((u, b))

    c = np.zeros(n_v)
    for i, (u, b) in enumerate(pairs):
        c[i] = model.coef[u, b]
    c[n_p:] = model.alpha

    rows, cols, vals, rhs = [], [], [], []

    def add_row(entries, bound):
        r = len(rhs)
        for col, val in entries:
            rows.append(r)
            cols.append(col)
            vals.append(val)
        rhs.append(bound)

    for i, (u, b) in enumerate(pairs):
        add_row([(i, 1.0), (n_p + b, -1.0)], 0.0)  # x <= theta
    for u, b in pairs:
        i = pair_idx[(u, b)]
        budget = model.ota_budget[u]
        ul = [(pair_idx[p], model.trans_ul[p[0], b]) for p in by_ru[b]]
        add_row(ul + [(i, model.prop[u, b])], budget)
        dl = [(pair_idx[p], model.trans_dl[p[0], b]) for p in by_ru[b]]
        add_row(dl + [(i, model.prop[u, b])], budget)

    a_ub = sparse.csr_matrix((vals, (rows, cols)), shape=(len(rhs), n_v))

    erows, ecols, evals = [], [], []
    for u in range(model.n_ues):
        for b in model.ue_cands[u]:
            erows.append(u)
            ecols.append(pair_idx[(u, int(b))])
            evals.append(1.0)
    a_eq = sparse.csr_matrix((evals, (erows, ecols)), shape=(model.n_ues, n_v))

    res = linprog(
        c, A_ub=a_ub, b_ub=np.array(rhs), A_eq=a_eq, b_eq=np.ones(model.n_ues),
        bounds=[(0.0, 1.0)] * n_v, method="highs",
    )
    if not res.success:
        raise StructuralInfeasibility(f"relaxed association model unsolvable: {res.message}")
    return float(res.fun)
