"""
Шесть метрик эффективности (PoA/PoS, logit-, independent-logit-) и сводный
отчёт по игре, плюс таблица для балансировки нагрузки и отчёт о монотонности.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from app.errors import InternalInconsistency, SchemaError, StateSpaceTooLarge
from app.services.dynamics import RevisionProcess
from app.services.game_specs import NormalFormSpec
from app.services.games import (
    Game,
    StateId,
    check_weighted_potential,
    has_exact_potential,
    nash_set,
    optimum_cost,
    potential_values,
)
from app.services.stability import (
    RadiusCoradiusCheck,
    StochasticPotentialTable,
    nash_reachability_violations,
    radius_coradius_check,
    stochastic_potentials,
    waste_graph,
)
from app.services.zoo import make_lb_poa_instance, make_lb_pos_instance, make_lb_unit_instance

log = logging.getLogger("metrics")

ZERO_OPTIMUM = "zero-optimum"

Ratio = Fraction | str | None


def _ratios(game: Game, states: Iterable[StateId], optimum: Fraction) -> tuple[Ratio, Ratio]:
    """(худший, лучший) cost/OPT по множеству состояний; None для пустого множества."""
    costs = [game.costs[s] for s in states]
    if not costs:
        return None, None
    if optimum == 0:
        return ZERO_OPTIMUM, ZERO_OPTIMUM
    return max(costs) / optimum, min(costs) / optimum


@dataclass(frozen=True)
class MetricReport:
    game: str
    optimum: Fraction
    optimal_states: frozenset[StateId]
    poa: Ratio
    pos: Ratio
    logit_poa: Ratio
    logit_pos: Ratio
    ind_logit_poa: Ratio
    ind_logit_pos: Ratio
    nash: frozenset[StateId]
    strict_nash: frozenset[StateId]
    potential_minimizers: frozenset[StateId] | None
    stable_independent: frozenset[StateId]
    stable_asynchronous: frozenset[StateId]
    contains_non_nash_stable: bool
    independent: StochasticPotentialTable
    asynchronous: StochasticPotentialTable
    phi: tuple[Fraction, ...] | None = None
    lemma_checks: dict[StateId, RadiusCoradiusCheck] = field(default_factory=dict)


def _check_ordering(report: MetricReport) -> None:
    pairs = [("pos", report.pos, "poa", report.poa),
             ("logit_pos", report.logit_pos, "logit_poa", report.logit_poa),
             ("ind_logit_pos", report.ind_logit_pos, "ind_logit_poa", report.ind_logit_poa),
             ("ind_logit_pos", report.ind_logit_pos, "poa", report.poa)]
    for low_name, low, high_name, high in pairs:
        if isinstance(low, Fraction) and isinstance(high, Fraction) and low > high:
            raise InternalInconsistency(f"{report.game}: {low_name}={low} exceeds {high_name}={high}")
    for name in ("poa", "pos", "logit_poa", "logit_pos", "ind_logit_poa", "ind_logit_pos"):
        value = getattr(report, name)
        if isinstance(value, Fraction) and value < 1:
            raise InternalInconsistency(f"{report.game}: {name}={value} is below 1")


def _check_potential(game: Game) -> None:
    violation = check_weighted_potential(game)
    if violation is None:
        return
    message = (f"{game.name}: potential identity fails at {game.describe(violation.profile)} "
               f"for player {violation.player} switching to {violation.deviation}")
    if isinstance(game.spec, NormalFormSpec):
        raise SchemaError(message)
    raise InternalInconsistency(message)


def metric_report(game: Game, p: Fraction | str | None = None) -> MetricReport:
    optimum, optimal = optimum_cost(game)
    nash, strict = nash_set(game)
    if not nash:
        log.warning("%s has no pure Nash equilibrium; poa/pos are absent", game.name)
    if optimum == 0:
        log.warning("%s has optimum cost 0; ratios are reported as %r", game.name, ZERO_OPTIMUM)

    independent = RevisionProcess.independent(p)
    indep_graph = waste_graph(game, independent)
    indep = stochastic_potentials(game, independent, graph=indep_graph)
    asyn = stochastic_potentials(game, RevisionProcess.asynchronous())

    phi, minimizers = None, None
    if game.potential is not None:
        _check_potential(game)
        phi = potential_values(game)
        low = min(phi)
        minimizers = frozenset(s for s, v in enumerate(phi) if v == low)
        if has_exact_potential(game) and asyn.argmin != minimizers:
            raise InternalInconsistency(
                f"{game.name}: asynchronous stable set {sorted(asyn.argmin)} differs from "
                f"potential minimizers {sorted(minimizers)}"
            )
        if not indep.argmin & nash:
            raise InternalInconsistency(f"{game.name}: no Nash equilibrium among the stable states")
        bad = nash_reachability_violations(indep_graph, indep, nash)
        if bad:
            raise InternalInconsistency(f"{game.name}: non-Nash states {bad[:5]} break the zero-waste path to Nash")

    poa, pos = _ratios(game, nash, optimum)
    logit_poa, logit_pos = _ratios(game, minimizers or (), optimum)
    ind_poa, ind_pos = _ratios(game, indep.argmin, optimum)

    # лемму о радиусе и корадиусе проверяем на строгих равновесиях Нэша
    checks = {s: radius_coradius_check(game, independent, s, graph=indep_graph, table=indep) for s in sorted(strict)}

    report = MetricReport(
        game=game.name, optimum=optimum, optimal_states=optimal,
        poa=poa, pos=pos, logit_poa=logit_poa, logit_pos=logit_pos,
        ind_logit_poa=ind_poa, ind_logit_pos=ind_pos,
        nash=nash, strict_nash=strict, potential_minimizers=minimizers,
        stable_independent=indep.argmin, stable_asynchronous=asyn.argmin,
        contains_non_nash_stable=not indep.argmin <= nash,
        independent=indep, asynchronous=asyn, phi=phi, lemma_checks=checks,
    )
    _check_ordering(report)
    log.info("%s: poa=%s ind_logit_poa=%s (%s stable of %s)", game.name, poa, ind_poa,
             len(indep.argmin), game.n_states)
    return report


# ─────────────────── построчная классификация ───────────────────────────────
@dataclass(frozen=True)
class StateRecord:
    state_id: StateId
    profile: str
    signature: str
    cost: Fraction
    W_indep: Fraction
    W_async: Fraction
    is_nash: bool
    phi: Fraction | None


def classify_states(game: Game, report: MetricReport) -> list[StateRecord]:
    records = []
    for s in range(game.n_states):
        profile = game.unpack(s)
        records.append(StateRecord(
            state_id=s,
            profile=game.describe(profile),
            signature=game.class_signature(profile),
            cost=game.costs[s],
            W_indep=report.independent.W[s],
            W_async=report.asynchronous.W[s],
            is_nash=s in report.nash,
            phi=report.phi[s] if report.phi is not None else None,
        ))
    return records


# ─────────────────── балансировка нагрузки: сводная таблица ──────────────────
@dataclass(frozen=True)
class Table1Row:
    m: int
    l: int
    ind_logit_poa: Fraction
    ind_logit_poa_formula: Fraction          # m − 1/l
    ind_logit_pos: Fraction | None
    ind_logit_pos_limit: Fraction            # 2(1 − 1/(m+1)), предел при l → ∞
    poa: Fraction
    poa_formula: Fraction                    # 2(1 − 1/(m+1))
    notes: tuple[str, ...] = ()


def _stable_ratio(game: Game, worst: bool, p=None) -> Fraction:
    optimum, _ = optimum_cost(game)
    table = stochastic_potentials(game, RevisionProcess.independent(p))
    high, low = _ratios(game, table.argmin, optimum)
    return high if worst else low


def table1_check(m: int, l: int, p: Fraction | str | None = None) -> Table1Row:
    limit = 2 * (1 - Fraction(1, m + 1))
    unit = _stable_ratio(make_lb_unit_instance(m, l), worst=True, p=p)

    notes = []
    try:
        pos = _stable_ratio(make_lb_pos_instance(m, l), worst=False, p=p)
    except StateSpaceTooLarge as err:
        pos = None
        notes.append(f"lb-pos skipped: {err.detail}")

    worst = make_lb_poa_instance(m)
    optimum, _ = optimum_cost(worst)
    nash, _ = nash_set(worst)
    poa, _ = _ratios(worst, nash, optimum)
    return Table1Row(m, l, unit, m - Fraction(1, l), pos, limit, poa, limit, tuple(notes))


@dataclass(frozen=True)
class MonotonicityRow:
    l: int
    ind_logit_poa: Fraction
    formula: Fraction


def lb_unit_monotonicity(m: int, ls: Iterable[int] = (1, 2, 3), p=None) -> tuple[list[MonotonicityRow], bool]:
    """ind-logit PoA для lb-unit по возрастающим l; второй элемент означает строгий рост."""
    rows = [MonotonicityRow(l, _stable_ratio(make_lb_unit_instance(m, l), worst=True, p=p), m - Fraction(1, l))
            for l in ls]
    increasing = all(a.ind_logit_poa < b.ind_logit_poa for a, b in zip(rows, rows[1:]))
    return rows, increasing
