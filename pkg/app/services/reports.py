"""
Вывод результатов: JSON-отчёты (рациональные числа строками "p/q" и
приближения с префиксом approx_) и CSV в data/<name>/.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

from app.config import settings
from app.services.dynamics import NumericEstimate
from app.services.game_specs import format_rational
from app.services.games import Game
from app.services.metrics import MetricReport, MonotonicityRow, StateRecord, Table1Row
from app.services.simulator import SimulationResult
from app.services.stability import BasinReport, ParallelLinksDiagnostics

log = logging.getLogger("reports")


def render(value):
    """Fraction → "p/q", бесконечность → "infinite", остальное как есть."""
    if isinstance(value, Fraction):
        return format_rational(value)
    if isinstance(value, float) and math.isinf(value):
        return "infinite"
    return value


def approx(value):
    if isinstance(value, Fraction):
        return float(value)
    if isinstance(value, float):
        return None if math.isinf(value) else value
    return None


def _with_approx(out: dict, key: str, value) -> None:
    out[key] = render(value)
    if isinstance(value, Fraction):
        out[f"approx_{key}"] = approx(value)


def _states(game: Game, states) -> list[dict] | None:
    if states is None:
        return None
    return [{"state_id": s, "profile": game.describe(game.unpack(s))} for s in sorted(states)]


def basin_to_dict(basin: BasinReport) -> dict:
    out = {
        "state_id": basin.state,
        "B": sorted(basin.B),
        "basin": sorted(basin.basin),
        "L": sorted(basin.L),
    }
    _with_approx(out, "R", basin.R)
    _with_approx(out, "CR", basin.CR)
    return out


def metric_report_to_dict(game: Game, report: MetricReport) -> dict:
    out: dict = {"game": report.game, "n_states": game.n_states}
    _with_approx(out, "optimum", report.optimum)
    for key in ("poa", "pos", "logit_poa", "logit_pos", "ind_logit_poa", "ind_logit_pos"):
        _with_approx(out, key, getattr(report, key))
    out.update({
        "optimal_states": _states(game, report.optimal_states),
        "nash": _states(game, report.nash),
        "strict_nash": _states(game, report.strict_nash),
        "potential_minimizers": _states(game, report.potential_minimizers),
        "stable_independent": _states(game, report.stable_independent),
        "stable_asynchronous": _states(game, report.stable_asynchronous),
        "contains_non_nash_stable": report.contains_non_nash_stable,
        "stochastic_potentials": {
            "independent": {"revision": report.independent.revision,
                            "W": {str(s): render(w) for s, w in enumerate(report.independent.W)}},
            "asynchronous": {"revision": report.asynchronous.revision,
                             "W": {str(s): render(w) for s, w in enumerate(report.asynchronous.W)}},
        },
        "radius_coradius": [
            {"applicable": check.applicable, **basin_to_dict(check.basin)}
            for _, check in sorted(report.lemma_checks.items())
        ],
    })
    return out


def estimate_to_dict(game: Game, estimate: NumericEstimate, exact: frozenset[int]) -> dict:
    return {
        "game": game.name,
        "betas": list(estimate.betas),
        "agree": estimate.persisting == exact,
        "exact_stable": sorted(exact),
        "persisting": sorted(estimate.persisting),
        "vanishing": sorted(estimate.vanishing),
        "max_residual": estimate.max_residual,
        "slopes": {str(s): float(v) for s, v in enumerate(estimate.slopes)},
    }


def table1_to_dict(row: Table1Row) -> dict:
    out: dict = {"m": row.m, "l": row.l}
    for key in ("ind_logit_poa", "ind_logit_poa_formula", "ind_logit_pos", "ind_logit_pos_limit", "poa", "poa_formula"):
        _with_approx(out, key, getattr(row, key))
    out["notes"] = list(row.notes)
    return out


def monotonicity_to_dict(m: int, rows: list[MonotonicityRow], increasing: bool) -> dict:
    entries = []
    for row in rows:
        entry = {"l": row.l}
        _with_approx(entry, "ind_logit_poa", row.ind_logit_poa)
        _with_approx(entry, "formula", row.formula)
        entries.append(entry)
    return {"m": m, "rows": entries, "increasing": increasing}


def parallel_to_dict(game: Game, diag: ParallelLinksDiagnostics) -> dict:
    out: dict = {"game": game.name, "b1": diag.b1}
    for key in ("radius_bound", "coradius_bound", "harmonic_gap", "radius", "coradius", "gap"):
        _with_approx(out, key, getattr(diag, key))
    return out


# ─────────────────── запись на диск ─────────────────────────────────────────
def output_dir(name: str, out: Path | None = None) -> Path:
    target = Path(out) if out is not None else settings.DATA_DIR / name
    target.mkdir(parents=True, exist_ok=True)
    return target


def write_json(path: Path, payload: dict) -> Path:
    path.write_text(json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    log.info("wrote %s", path)
    return path


def write_states_csv(path: Path, records: list[StateRecord]) -> Path:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["state_id", "profile", "class", "cost", "W_indep", "W_async", "is_nash", "phi"])
        for r in records:
            writer.writerow([r.state_id, r.profile, r.signature, render(r.cost), render(r.W_indep),
                             render(r.W_async), str(r.is_nash).lower(), "" if r.phi is None else render(r.phi)])
    log.info("wrote %s", path)
    return path


def write_occupancy_csv(path: Path, result: SimulationResult) -> Path:
    freqs = result.frequencies
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["state_id", "count", "frequency"])
        for s, count in enumerate(result.occupancy.tolist()):
            writer.writerow([s, count, f"{freqs[s]:.9f}"])
    log.info("wrote %s", path)
    return path


def write_beta_curve_csv(path: Path, estimate: NumericEstimate) -> Path:
    """Данные для графика: строка на β, столбец log μ^β(s) на каждое состояние."""
    n_states = estimate.log_mu.shape[1]
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["beta"] + [f"log_mu_{s}" for s in range(n_states)])
        for beta, row in zip(estimate.betas, estimate.log_mu):
            writer.writerow([beta] + [f"{v:.12g}" for v in np.asarray(row).tolist()])
    log.info("wrote %s", path)
    return path
