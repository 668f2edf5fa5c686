# app/main.py
"""
Командная строка анализатора: analyze, verify, simulate, instance, report.
Запуск: python -m app.main <command> [flags]
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction
from functools import partial
from pathlib import Path

import anyio
import numpy as np

from app.config import settings
from app.errors import InvalidParams, StabilityError, VerificationMismatch
from app.services.dynamics import (
    DynamicsConfig,
    numeric_stable_estimate,
    parse_revision,
    stationary_distribution,
    transition_matrix,
)
from app.services.game_specs import dump_game_spec, load_game_from_file, parse_rational
from app.services.games import Game
from app.services.metrics import classify_states, lb_unit_monotonicity, metric_report, table1_check
from app.services.reports import (
    estimate_to_dict,
    metric_report_to_dict,
    monotonicity_to_dict,
    output_dir,
    parallel_to_dict,
    table1_to_dict,
    write_beta_curve_csv,
    write_json,
    write_occupancy_csv,
    write_states_csv,
)
from app.services.simulator import simulate_replicates, total_variation
from app.services.stability import parallel_links_diagnostics, stochastic_potentials
from app.services.zoo import BUILTINS, make_builtin

log = logging.getLogger("cli")

REPORT_KINDS = ("table1", "monotonicity", "beta-curve", "parallel")


# ───────────── разбор флагов ────────────────────────────────
def _rationals(text: str | None, flag: str) -> list[Fraction] | None:
    if text is None:
        return None
    try:
        return [parse_rational(x) for x in text.split(",") if x.strip()]
    except (ValueError, ZeroDivisionError) as err:
        raise InvalidParams(f"{flag}: {err}") from err


def _betas(text: str | None) -> list[float] | None:
    if text is None:
        return None
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as err:
        raise InvalidParams(f"--betas: {err}") from err


def _builtin(name: str, args) -> Game:
    return make_builtin(name, m=args.m, l=args.l, costs=_rationals(args.costs, "--costs"),
                        players=args.players, jobs=_rationals(args.jobs, "--jobs"))


def _game(args) -> Game:
    if args.file is not None:
        return load_game_from_file(Path(args.file))
    if args.builtin is not None:
        return _builtin(args.builtin, args)
    raise InvalidParams("give exactly one of --builtin or --file")


def _revision(args):
    return parse_revision(args.revision, args.p, args.custom)


def _emit(payload: dict) -> None:
    print(json.dumps(payload, ensure_ascii=False, indent=2))


# ───────────── команды ──────────────────────────────────────
def cmd_analyze(args) -> int:
    revision = _revision(args)
    game = _game(args)
    report = metric_report(game, p=revision.p if revision.kind == "independent" else None)
    payload = metric_report_to_dict(game, report)
    payload["revision"] = revision.label
    if revision.kind == "custom":
        table = stochastic_potentials(game, revision)
        payload["stable_custom"] = sorted(table.argmin)

    target = output_dir(game.name, args.out)
    write_json(target / "report.json", payload)
    write_states_csv(target / "states.csv", classify_states(game, report))
    _emit(payload if args.format == "json" else {"out": str(target)})
    return 0


def cmd_verify(args) -> int:
    revision = _revision(args)
    game = _game(args)
    exact = stochastic_potentials(game, revision).argmin
    estimate = numeric_stable_estimate(game, revision, beta_ladder=_betas(args.betas), slope_tol=args.slope_tol)
    payload = estimate_to_dict(game, estimate, exact)
    payload["revision"] = revision.label

    target = output_dir(game.name, args.out)
    write_json(target / "verify.json", payload)
    write_beta_curve_csv(target / "beta_curve.csv", estimate)
    _emit(payload)
    if not payload["agree"]:
        raise VerificationMismatch(
            f"{game.name}: numeric persisting {sorted(estimate.persisting)} != exact stable {sorted(exact)}"
        )
    return 0


def cmd_simulate(args) -> int:
    config = DynamicsConfig(args.beta, _revision(args))
    game = _game(args)
    if args.replicates < 1:
        raise InvalidParams("--replicates must be >= 1")
    results = anyio.run(partial(simulate_replicates, game, config, args.steps, args.seed, args.replicates))

    target = output_dir(game.name, args.out)
    for k, result in enumerate(results):
        name = "occupancy.csv" if args.replicates == 1 else f"occupancy_{k}.csv"
        write_occupancy_csv(target / name, result)

    pooled = np.sum([r.occupancy for r in results], axis=0)
    summary: dict = {"game": game.name, "beta": args.beta, "revision": config.revision.label,
                     "steps": args.steps, "seed": args.seed, "replicates": args.replicates,
                     "transitions": [r.transitions for r in results]}
    if game.n_states <= settings.DENSE_STATE_CAP:
        mu = stationary_distribution(transition_matrix(game, config)).probabilities
        summary["tv_distance"] = total_variation(pooled / pooled.sum(), mu)
    else:
        log.warning("%s: %s states, stationary comparison skipped", game.name, game.n_states)
    write_json(target / "simulate.json", summary)
    _emit(summary)
    return 0


def cmd_instance(args) -> int:
    game = _builtin(args.name, args)
    text = dump_game_spec(game.spec)
    if args.out is None:
        print(text)
        return 0
    path = Path(args.out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text + "\n", encoding="utf-8")
    log.info("wrote %s", path)
    return 0


def cmd_report(args) -> int:
    if args.kind == "table1":
        payload = table1_to_dict(table1_check(args.m, args.l, p=args.p))
        name = f"table1-m{args.m}-l{args.l}"
    elif args.kind == "monotonicity":
        rows, increasing = lb_unit_monotonicity(args.m, p=args.p)
        payload = monotonicity_to_dict(args.m, rows, increasing)
        name = f"monotonicity-m{args.m}"
    elif args.kind == "beta-curve":
        revision = _revision(args)
        game = _game(args)
        estimate = numeric_stable_estimate(game, revision, beta_ladder=_betas(args.betas), slope_tol=args.slope_tol)
        target = output_dir(game.name, args.out)
        path = write_beta_curve_csv(target / "beta_curve.csv", estimate)
        _emit({"game": game.name, "out": str(path)})
        return 0
    else:
        costs = _rationals(args.costs, "--costs") or [Fraction(1), Fraction(2)]
        game = make_builtin("parallel", costs=costs, players=args.players)
        diag = parallel_links_diagnostics(game, costs, args.players, _revision(args))
        payload = parallel_to_dict(game, diag)
        name = game.name

    write_json(output_dir(name, args.out) / "report.json", payload)
    _emit(payload)
    return 0


# ───────────── парсер ───────────────────────────────────────
def _add_instance_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--m", type=int, default=2, help="machines")
    p.add_argument("--l", type=int, default=2, help="jobs per machine parameter")
    p.add_argument("--costs", help="link costs, e.g. 1,2")
    p.add_argument("--players", type=int, default=3)
    p.add_argument("--jobs", help="job weights for lb-custom, e.g. 2,2,1,1")


def _add_dynamics_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--revision", default="independent", help="independent | async | custom")
    p.add_argument("--p", default=None, help=f"independent revision probability (default {settings.INDEPENDENT_P})")
    p.add_argument("--custom", help="custom revision sets, e.g. '0,1:1/2;2:1/2'")


def _add_source(p: argparse.ArgumentParser, required: bool = True) -> None:
    group = p.add_mutually_exclusive_group(required=required)
    group.add_argument("--builtin", choices=BUILTINS)
    group.add_argument("--file")
    _add_instance_flags(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stability", description="Exact logit-response stability analyzer")
    parser.add_argument("--log-level", default=settings.LOG_LEVEL)
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="metrics and stable sets")
    _add_source(analyze)
    _add_dynamics_flags(analyze)
    analyze.add_argument("--out")
    analyze.add_argument("--format", choices=("json", "csv"), default="json")
    analyze.set_defaults(handler=cmd_analyze)

    verify = sub.add_parser("verify", help="numeric cross-check of the exact stable set")
    _add_source(verify)
    _add_dynamics_flags(verify)
    verify.add_argument("--betas", help="beta ladder, e.g. 4,8,16,32,64")
    verify.add_argument("--slope-tol", type=float, default=None)
    verify.add_argument("--out")
    verify.set_defaults(handler=cmd_verify)

    simulate = sub.add_parser("simulate", help="seeded trajectory occupancy")
    _add_source(simulate)
    _add_dynamics_flags(simulate)
    simulate.add_argument("--beta", type=float, required=True)
    simulate.add_argument("--steps", type=int, default=100_000)
    simulate.add_argument("--seed", type=int, default=0)
    simulate.add_argument("--replicates", type=int, default=1)
    simulate.add_argument("--out")
    simulate.set_defaults(handler=cmd_simulate)

    instance = sub.add_parser("instance", help="write a builtin game as JSON")
    instance.add_argument("name")
    _add_instance_flags(instance)
    instance.add_argument("--out")
    instance.set_defaults(handler=cmd_instance)

    report = sub.add_parser("report", help="tables and plot data")
    report.add_argument("kind", choices=REPORT_KINDS)
    _add_source(report, required=False)
    _add_dynamics_flags(report)
    report.add_argument("--betas")
    report.add_argument("--slope-tol", type=float, default=None)
    report.add_argument("--out")
    report.set_defaults(handler=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.handler(args)
    except StabilityError as err:
        log.error("%s: %s", type(err).__name__, err.detail)
        return err.exit_code


if __name__ == "__main__":
    sys.exit(main())
