"""Lagrangian-relaxation heuristic for UE-to-RU association.

The single-attachment equality constraint is dualized with one multiplier
per UE.  For fixed multipliers the relaxed problem splits per RU and has a
closed-form minimizer (``solve_r1``), giving a lower bound; a repair pass
(``repair_ub``) re-attaches every UE to one opened RU to produce a feasible
upper bound; multipliers then move along the subgradient of the dual.  The
loop tracks both bounds and a posteriori certifies solution quality through
the accumulated-step gap bound (``gap_bound``).
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .assoc import Assignment, P1Model, make_assignment
from .errors import ParameterError


@dataclass(frozen=True)
class LagrangianConfig:
    """Loop controls.

    The step scalar starts at ``lambda0`` and is halved whenever the best
    lower bound fails to gain at least ``improve_frac`` of the current
    optimality gap over a window of ``halve_after`` iterations (a bound
    zig-zagging in place counts as constant).
    """

    n_max: int = 200
    lambda0: float = 2.0
    halve_after: int = 5
    improve_frac: float = 0.005
    tol: float = 1e-4  # relative (ub - lb) termination threshold

    def validate(self) -> None:
        if not 0.0 < self.lambda0 <= 2.0:
            raise ParameterError(f"lambda0 must be in (0, 2], got {self.lambda0}")
        if self.n_max < 1 or self.halve_after < 1:
            raise ParameterError("n_max and halve_after must be >= 1")
        if not 0.0 <= self.improve_frac < 1.0:
            raise ParameterError("improve_frac must be in [0, 1)")


@dataclass(frozen=True)
class IterationRecord:
    n: int
    lb: float
    ub: float  # best incumbent objective after this iteration (inf if none)
    lam: float
    sigma: Tuple[float, ...]  # per-slice step sizes applied this iteration
    step_term: float  # lambda * (ub - lb), nan while no incumbent exists


@dataclass
class GapTrace:
    records: List[IterationRecord] = field(default_factory=list)
    total_ues: int = 0
    best_lb: float = -math.inf
    best_ub: float = math.inf

    def to_rows(self) -> List[Tuple[int, float, float, float]]:
        return [(r.n, r.lb, r.ub, r.lam) for r in self.records]


@dataclass
class LagrangianState:
    nu: np.ndarray
    n: int = 1
    lam: float = 2.0
    best_ub: float = math.inf
    current_lb: float = -math.inf
    incumbent: Optional[Assignment] = None
    stall: int = 0
    last_sigma: Tuple[float, ...] = ()


@dataclass
class LagrangianResult:
    status: str  # "ok" | "infeasible"
    assignment: Optional[Assignment]
    trace: GapTrace


def solve_r1(model: P1Model, nu: np.ndarray, stats: Optional[dict] = None) -> Tuple[np.ndarray, np.ndarray, float]:
    """Closed-form minimizer of the relaxed problem for multipliers ``nu``.

    A pair is taken when its reduced coefficient ``coef - nu`` is negative;
    an RU opens when its opening weight plus its negative pair coefficients
    is itself negative.  Returns (x, theta, lower bound value).
    """
    reduced = np.where(model.eligible, model.coef - nu[:, None], 0.0)
    gains = np.minimum(reduced, 0.0)
    open_score = model.alpha + gains.sum(axis=0)
    theta = open_score < 0.0
    x = model.eligible & (reduced < 0.0) & theta[None, :]
    lb = float(nu.sum() + open_score[theta].sum())
    if stats is not None:
        stats["pairs_scanned"] = int(model.eligible.sum())
    return x, theta, lb


def repair_ub(model: P1Model, theta_lb: np.ndarray) -> Optional[Assignment]:
    """Attach every UE to one opened RU, respecting the OTA budgets.

    UEs are processed in index order against running per-RU loads, so the
    returned assignment is feasible as a whole, not just pairwise.  Among
    feasible candidates the one improving most over the slice's latency
    budget (equivalently, the candidate with the lowest UL+DL latency) is
    chosen.  Opened RUs that end up with no UEs are dropped.  Returns None
    when some UE has no feasible opened RU.
    """
    load_ul = np.zeros(model.n_rus)
    load_dl = np.zeros(model.n_rus)
    max_prop = np.zeros(model.n_rus)
    attach = np.full(model.n_ues, -1, dtype=int)
    for u in range(model.n_ues):
        cands = model.ue_cands[u]
        cands = cands[theta_lb[cands]]
        if not len(cands):
            return None
        budget = model.ota_budget[u]
        new_ul = load_ul[cands] + model.trans_ul[u, cands]
        new_dl = load_dl[cands] + model.trans_dl[u, cands]
        worst = np.maximum(max_prop[cands], model.prop[u, cands])
        ok = (worst + new_ul <= budget + 1e-15) & (worst + new_dl <= budget + 1e-15)
        if not ok.any():
            return None
        cands = cands[ok]
        own = model.prop[u, cands]
        latency = (own + new_ul[ok]) + (own + new_dl[ok])
        b = int(cands[int(np.argmin(latency))])
        attach[u] = b
        load_ul[b] += model.trans_ul[u, b]
        load_dl[b] += model.trans_dl[u, b]
        max_prop[b] = max(max_prop[b], model.prop[u, b])
    return make_assignment(model, attach)


def subgradient_step(state: LagrangianState, model: P1Model, x_lb: np.ndarray) -> np.ndarray:
    """One multiplier update; requires a finite incumbent objective.

    The step size is computed per slice with the slice's own squared
    subgradient norm; multipliers of exactly-once-covered UEs are left
    unchanged.  A slice with zero norm keeps a zero step.  Updated
    multipliers are projected at zero: attaching a UE more than once only
    ever raises the objective, so the single-attachment equality may be
    treated as a covering constraint whose prices are non-negative.
    """
    if not math.isfinite(state.best_ub):
        raise ParameterError("subgradient step requires a finite incumbent objective")
    g = 1.0 - x_lb.sum(axis=1)
    nu = state.nu.copy()
    sigmas = []
    gap = state.best_ub - state.current_lb
    for si in range(len(model.slice_ue_count)):
        mask = model.ue_slice == si
        denom = float((g[mask] ** 2).sum())
        sigma = 0.0 if denom == 0.0 else state.lam * gap / denom
        sigmas.append(sigma)
        nu[mask] += sigma * g[mask]
    state.last_sigma = tuple(sigmas)
    return np.maximum(nu, 0.0)


def _cold_start_kick(model: P1Model, nu: np.ndarray, x_lb: np.ndarray, scale: float) -> np.ndarray:
    """Dual-ascent opening move used while no incumbent exists.

    With all-zero multipliers the relaxed solution opens nothing and no
    feasible upper bound can ever be repaired, so each uncovered UE's
    price is raised past its cheapest pair coefficient by a share of the
    opening weight.  The share starts at twice alpha split over the
    slice's UE count (the scale of a price that collectively opens a
    shared RU) and doubles on each further incumbent-free iteration, so
    even sparsely covered instances open within a few iterations without
    overshooting the dual far from its optimum.
    """
    uncovered = x_lb.sum(axis=1) == 0
    nu = nu.copy()
    for u in np.flatnonzero(uncovered):
        us = model.slice_ue_count[model.ue_slice[u]]
        floor = float(model.coef[u, model.ue_cands[u]].min()) + scale * model.alpha / max(1.0, us)
        nu[u] = max(nu[u], floor)
    return nu


def run_algorithm1(model: P1Model, config: Optional[LagrangianConfig] = None) -> LagrangianResult:
    """Full dual-ascent loop: lower bound, repair, incumbent, multiplier update.

    Terminates when the relative gap between the incumbent and the best
    lower bound drops under ``tol`` or after ``n_max`` iterations; the step
    scalar is halved whenever the lower bound stalls for ``halve_after``
    consecutive iterations.
    """
    config = config or LagrangianConfig()
    config.validate()
    state = LagrangianState(nu=np.zeros(model.n_ues), lam=config.lambda0)
    trace = GapTrace(total_ues=model.n_ues)
    best_lb = -math.inf
    window_best = -math.inf
    window_len = 0
    kick_scale = 2.0

    # Seed the incumbent by repairing against every RU opened; with all
    # multipliers at zero the relaxed solution opens nothing, so without a
    # starting upper bound the step size is undefined and the loop could
    # never leave the origin.
    initial = repair_ub(model, np.ones(model.n_rus, dtype=bool))
    if initial is not None:
        state.best_ub = initial.objective
        state.incumbent = initial

    for n in range(1, config.n_max + 1):
        state.n = n
        x_lb, theta_lb, lb = solve_r1(model, state.nu)
        state.current_lb = lb
        repaired = repair_ub(model, theta_lb)
        ub_n = repaired.objective if repaired is not None else math.inf
        if repaired is not None and ub_n < state.best_ub:
            state.best_ub = ub_n
            state.incumbent = repaired

        best_lb = max(best_lb, lb)
        window_len += 1
        if window_len >= config.halve_after:
            gained = best_lb - window_best
            gap = max(state.best_ub - best_lb, 1e-12) if math.isfinite(state.best_ub) else math.inf
            if gained < config.improve_frac * gap:
                state.lam /= 2.0
            window_best = best_lb
            window_len = 0

        converged = (
            math.isfinite(state.best_ub)
            and state.best_ub - best_lb <= config.tol * max(1.0, abs(state.best_ub))
        )
        if not converged and n < config.n_max:
            if math.isfinite(state.best_ub):
                state.nu = subgradient_step(state, model, x_lb)
            else:
                state.nu = _cold_start_kick(model, state.nu, x_lb, kick_scale)
                kick_scale *= 2.0
                state.last_sigma = ()
        else:
            state.last_sigma = ()

        step_term = state.lam * (state.best_ub - lb) if math.isfinite(state.best_ub) else math.nan
        trace.records.append(
            IterationRecord(n=n, lb=lb, ub=state.best_ub, lam=state.lam,
                            sigma=state.last_sigma, step_term=step_term)
        )
        trace.best_lb = max(trace.best_lb, lb)
        trace.best_ub = state.best_ub
        if converged:
            break

    if state.incumbent is None:
        return LagrangianResult("infeasible", None, trace)
    return LagrangianResult("ok", state.incumbent, trace)


def gap_bound(trace: GapTrace, r: float = 1.0, g: Optional[float] = None) -> float:
    """A posteriori optimality-gap bound from the accumulated step terms.

    ``r`` bounds the distance from the first iterate to an optimal one and
    ``g`` the squared subgradient norm (defaults to the UE count).  With
    step terms t_n the certified gap is (r^2 + sum t_n^2) / ((2/g) sum t_n);
    an empty or all-zero step history certifies nothing (returns inf).
    """
    if g is None:
        g = float(trace.total_ues)
    ts = [rec.step_term for rec in trace.records if math.isfinite(rec.step_term)]
    s1 = sum(ts)
    s2 = sum(t * t for t in ts)
    if s1 <= 0.0:
        return math.inf
    return (r * r + s2) / ((2.0 / g) * s1)
