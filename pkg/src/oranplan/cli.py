"""Command-line interface.

Verbs mirror the pipeline stages: ``generate`` a scenario, ``associate``
UEs to RUs, ``deploy`` the PON and servers, ``price`` the result, run a
full ``sweep``, and ``compare`` exact against heuristic runs.  Every
output file is canonical, so repeating an invocation with the same config
and seed reproduces it byte for byte.

Exit codes: 0 success, 1 infeasible instance, 2 usage or runtime error.
"""

import argparse
import sys

from . import assoc, cost, deploy, lagrangian, report, scenario as scen
from ._jsonio import read_json, write_json
from .errors import OranPlanError, StructuralInfeasibility

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_ERROR = 2


class _Infeasible(Exception):
    pass


def _load_experiment_config(path) -> report.ExperimentConfig:
    if path is None:
        return report.ExperimentConfig()
    return report.ExperimentConfig.from_dict(read_json(path))


def _cmd_generate(args) -> int:
    overrides = read_json(args.overrides) if args.overrides else None
    scn = scen.generate(args.area_class, args.side, args.seed, overrides)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(scen.dumps(scn))
    print(f"scenario: {len(scn.ues)} UEs, {len(scn.candidate_rus)} candidate RUs -> {args.out}")
    return EXIT_OK


def _cmd_associate(args) -> int:
    cfg = _load_experiment_config(args.config)
    with open(args.scenario, "r", encoding="utf-8") as fh:
        scn = scen.loads(fh.read())
    model = assoc.build_p1(scn)
    if args.dump_model:
        write_json(args.dump_model, assoc.dump_p1_tables(model))
    if args.solver == "lp":
        bound = assoc.lp_lower_bound(model)
        write_json(args.out, {"lp_lower_bound": bound})
        print(f"lp lower bound: {bound!r}")
        return EXIT_OK
    if args.solver == "exact":
        result = assoc.solve_exact(model)
        if result.assignment is None:
            raise _Infeasible(f"association {result.status}")
        assignment = result.assignment
        print(f"exact: objective {assignment.objective!r}, {len(assignment.installed)} RUs, "
              f"optimal={result.optimal}")
    else:
        lg = lagrangian.run_algorithm1(model, cfg.lagrangian)
        if lg.status != "ok":
            raise _Infeasible("association infeasible under the relaxation heuristic")
        assignment = lg.assignment
        if args.trace:
            rows = [["iteration", "lb", "ub", "lambda"]] + [
                [n, lb, ub, lam] for n, lb, ub, lam in lg.trace.to_rows()
            ]
            with open(args.trace, "w", encoding="utf-8", newline="\n") as fh:
                fh.write("\n".join(",".join(report._cell(v) for v in row) for row in rows) + "\n")
        print(f"heuristic: objective {assignment.objective!r}, {len(assignment.installed)} RUs, "
              f"{len(lg.trace.records)} iterations")
    write_json(args.out, assignment.to_dict())
    return EXIT_OK


def _deploy_config(args, cfg: report.ExperimentConfig) -> deploy.DeployConfig:
    dc = cfg.deploy
    if args.halved_capacity:
        dc = deploy.halved_capacity_config(dc)
    if args.single_stage:
        dc = deploy.single_stage_config(dc)
    return dc


def _cmd_deploy(args) -> int:
    cfg = _load_experiment_config(args.config)
    with open(args.scenario, "r", encoding="utf-8") as fh:
        scn = scen.loads(fh.read())
    assignment = assoc.Assignment.from_dict(read_json(args.assignment))
    model = deploy.build_p2(assignment, scn, _deploy_config(args, cfg), cfg.book)
    if args.dump_model:
        write_json(args.dump_model, deploy.dump_p2_tables(model))
    if args.solver == "exact":
        result = deploy.solve_p2_exact_small(model)
        if result.plan is None:
            raise _Infeasible(f"deployment {result.status}")
        plan = result.plan
        print(f"exact: cost {result.cost} cents, optimal={result.optimal}")
    else:
        result = deploy.greedy_deploy(model)
        if result.status != "ok":
            raise _Infeasible(f"deployment infeasible: {result.detail}")
        plan = result.plan
        print(f"greedy: {len(plan.installed_olt1)} Stage-I OLTs, {len(plan.installed_olt2)} Stage-II OLTs")
    write_json(args.out, plan.to_dict())
    return EXIT_OK


def _cmd_price(args) -> int:
    cfg = _load_experiment_config(args.config)
    with open(args.scenario, "r", encoding="utf-8") as fh:
        scn = scen.loads(fh.read())
    assignment = assoc.Assignment.from_dict(read_json(args.assignment))
    plan = deploy.DeploymentPlan.from_dict(read_json(args.plan))
    model = deploy.build_p2(assignment, scn, cfg.deploy, cfg.book)
    breakdown = cost.price_plan(plan, cfg.book)
    out = {"twdm_pon": breakdown.to_dict(), "otn": None, "otn_status": "", "savings": None}
    if args.otn:
        otn = cost.price_otn(model, plan, cfg.book)
        out["otn_status"] = otn.status
        if otn.status == "ok":
            out["otn"] = otn.breakdown.to_dict()
            out["savings"] = cost.savings_fraction(breakdown, otn.breakdown)
    write_json(args.out, out)
    print(f"twdm-pon total: {breakdown.total} cents" +
          (f", otn total: {out['otn']['total']} cents" if out["otn"] else ""))
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _load_experiment_config(args.config)
    if args.classes:
        cfg = report.ExperimentConfig.from_dict({**cfg.to_dict(), "area_classes": args.classes.split(",")})
    if args.sides:
        cfg = report.ExperimentConfig.from_dict({**cfg.to_dict(), "sides": [float(s) for s in args.sides.split(",")]})
    if args.seeds:
        cfg = report.ExperimentConfig.from_dict({**cfg.to_dict(), "seeds": [int(s) for s in args.seeds.split(",")]})
    bundle = report.run_pipeline(cfg)
    written = report.emit(bundle, args.out)
    ok = sum(1 for r in bundle.records if r.status == "ok")
    print(f"{len(bundle.records)} runs ({ok} ok) -> {', '.join(written)}")
    if ok == 0 and bundle.records:
        return EXIT_INFEASIBLE
    return EXIT_OK


def _cmd_compare(args) -> int:
    bundle = report.load_bundle(args.bundle)
    rows = report.compare_solvers(bundle)
    header = ["area_class", "side_km", "seed", "instance", "delta_rus", "delta_olts",
              "delta_cost", "theorem2_ok"]
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(report._cell(v) for v in [
            r.area_class, r.side_km, r.seed, r.instance, r.delta_rus, r.delta_olts,
            r.delta_cost, r.theorem2_ok,
        ]))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oranplan", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a synthetic scenario")
    p.add_argument("--area-class", "-c", required=True, choices=scen.AREA_CLASSES)
    p.add_argument("--side", type=float, default=1.0, help="square side in km (1-8)")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--overrides", help="JSON file with generator overrides")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("associate", help="solve the UE-to-RU association stage")
    p.add_argument("--scenario", required=True)
    p.add_argument("--solver", choices=("heuristic", "exact", "lp"), default="heuristic")
    p.add_argument("--out", required=True)
    p.add_argument("--trace", help="CSV file for the bound trace (heuristic only)")
    p.add_argument("--dump-model", help="JSON file for the coefficient tables")
    p.add_argument("--config", help="experiment config JSON")
    p.set_defaults(func=_cmd_associate)

    p = sub.add_parser("deploy", help="design the PON and place DU/CU servers")
    p.add_argument("--scenario", required=True)
    p.add_argument("--assignment", required=True)
    p.add_argument("--solver", choices=("greedy", "exact"), default="greedy")
    p.add_argument("--out", required=True)
    p.add_argument("--dump-model", help="JSON file for the coefficient tables")
    p.add_argument("--config", help="experiment config JSON")
    p.add_argument("--single-stage", action="store_true", help="disable Stage-II PONs")
    p.add_argument("--halved-capacity", action="store_true",
                   help="half-size servers, CUs forced behind Stage-II")
    p.set_defaults(func=_cmd_deploy)

    p = sub.add_parser("price", help="price a deployment plan (and the OTN baseline)")
    p.add_argument("--scenario", required=True)
    p.add_argument("--assignment", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--otn", action="store_true", help="also price the OTN mesh baseline")
    p.add_argument("--config", help="experiment config JSON")
    p.set_defaults(func=_cmd_price)

    p = sub.add_parser("sweep", help="run the full experiment sweep")
    p.add_argument("--config", help="experiment config JSON")
    p.add_argument("--classes", help="comma-separated area classes")
    p.add_argument("--sides", help="comma-separated sides in km")
    p.add_argument("--seeds", help="comma-separated seeds")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("compare", help="tabulate heuristic-vs-exact gaps from a bundle")
    p.add_argument("--bundle", required=True, help="bundle directory")
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.set_defaults(func=_cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except StructuralInfeasibility as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OranPlanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
