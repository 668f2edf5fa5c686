"""
Нулевой шум: потери переходов, граф потерь, стохастические потенциалы
(минимальные деревья), бассейны притяжения, радиус и корадиус.
Вся арифметика точная (Fraction).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import networkx as nx
import numpy as np

from app.config import settings
from app.errors import InternalInconsistency, InvalidParams, StateSpaceTooLarge
from app.services.arborescence import Arborescence, brute_force_arborescence, min_in_arborescence
from app.services.dynamics import RevisionProcess
from app.services.games import Game, StateId, check_state_cap, deviation_set
from app.services.zoo import harmonic

log = logging.getLogger("stability")

INFINITE = math.inf

__all__ = [
    "Arborescence", "BasinReport", "INFINITE", "ParallelLinksDiagnostics", "RadiusCoradiusCheck",
    "StochasticPotentialTable", "WasteGraph", "basin_of_attraction", "basin_report",
    "brute_force_arborescence", "coradius", "empty_machine_violations", "limit_set", "min_in_arborescence",
    "nash_reachability_violations", "parallel_links_diagnostics", "radius", "radius_coradius_check",
    "stochastic_potentials", "subset_waste", "waste", "waste_graph", "zero_waste_closure",
]


# ─────────────────── граф потерь ────────────────────────────────────────────
@dataclass(frozen=True, eq=False)
class WasteGraph:
    """entries[s][t]: W_{s,t} или None, если переход недопустим; диагональ всегда None."""
    entries: tuple[tuple[Fraction | None, ...], ...]
    revision: str = ""

    @classmethod
    def from_weights(cls, weights, revision: str = "explicit") -> "WasteGraph":
        rows = []
        for s, row in enumerate(weights):
            rows.append(tuple(None if s == t or w is None else Fraction(w) for t, w in enumerate(row)))
        return cls(tuple(rows), revision)

    @property
    def n(self) -> int:
        return len(self.entries)

    def waste(self, s: StateId, t: StateId) -> Fraction | None:
        return self.entries[s][t]

    @cached_property
    def scaled(self) -> tuple[np.ndarray, int, int]:
        """(целочисленная матрица, общий знаменатель, маркер недопустимого ребра)."""
        finite = [w for row in self.entries for w in row if w is not None]
        scale = math.lcm(*(w.denominator for w in finite)) if finite else 1
        top = max((int(w * scale) for w in finite), default=0)
        big = (self.n + 1) * (top + 1)
        dtype = np.int64 if big < 2 ** 62 else object
        matrix = np.full((self.n, self.n), big, dtype=dtype)
        for s, row in enumerate(self.entries):
            for t, w in enumerate(row):
                if w is not None:
                    matrix[s, t] = int(w * scale)
        return matrix, scale, big

    @cached_property
    def feasible_graph(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(range(self.n))
        graph.add_weighted_edges_from(
            ((s, t, w) for s, row in enumerate(self.entries) for t, w in enumerate(row) if w is not None),
            weight="waste",
        )
        return graph

    @cached_property
    def zero_graph(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(range(self.n))
        graph.add_edges_from((s, t) for s, row in enumerate(self.entries) for t, w in enumerate(row) if w == 0)
        return graph

    @cached_property
    def universal_roots(self) -> frozenset[int]:
        """Состояния, достижимые из всех остальных по допустимым рёбрам."""
        condensed = nx.condensation(self.feasible_graph)
        sinks = [c for c in condensed.nodes if condensed.out_degree(c) == 0]
        if len(sinks) != 1:
            return frozenset()
        return frozenset(condensed.nodes[sinks[0]]["members"])

    def ancestors(self, s: StateId) -> set[int]:
        return nx.ancestors(self.feasible_graph, s)


# ─────────────────── потери ─────────────────────────────────────────────────
def _regrets(game: Game) -> list[list[tuple[Fraction, ...]]]:
    # regret[s][j][a] = max u_j(·, s_{-j}) − u_j(a, s_{-j}), всё против старого профиля s
    return [[tuple(top - v for v in alts) for alts, top in zip(row, best)]
            for row, best in zip(game.deviations, game.best_values)]


def subset_waste(game: Game, s: StateId, t: StateId, players) -> Fraction:
    """W^{(J)}_{s,t} для явно заданного множества пересматривающих игроков J."""
    target = game.unpack(t)
    return sum((game.best_values[s][j] - game.deviations[s][j][target[j]] for j in players), Fraction(0))


def waste(game: Game, revision: RevisionProcess, s: StateId, t: StateId) -> Fraction | None:
    """W_{s,t}; None означает, что переход недопустим (R_{s,t} пусто)."""
    if s == t:
        raise InvalidParams("waste is defined for s != s'")
    moved = deviation_set(game.unpack(s), game.unpack(t))
    if revision.kind == "independent":
        # все слагаемые ≥ 0, поэтому минимум достигается при J = множеству отклонившихся
        return subset_waste(game, s, t, moved)
    options = [subset_waste(game, s, t, J) for J in revision.revising_sets(moved, game.n_players)]
    return min(options) if options else None


def waste_graph(game: Game, revision: RevisionProcess, cap: int | None = None) -> WasteGraph:
    cap = settings.DENSE_STATE_CAP if cap is None else cap
    check_state_cap(game)
    if game.n_states > cap:
        raise StateSpaceTooLarge(f"{game.name}: {game.n_states} states exceed the dense cap {cap}")

    regret = _regrets(game)
    profiles = [game.unpack(s) for s in range(game.n_states)]
    custom = revision.subsets(game.n_players) if revision.kind == "custom" else None
    rows = []
    for s, src in enumerate(profiles):
        row = []
        for t, dst in enumerate(profiles):
            if s == t:
                row.append(None)
                continue
            moved = [j for j in range(len(src)) if src[j] != dst[j]]
            if revision.kind == "independent":
                row.append(sum((regret[s][j][dst[j]] for j in moved), Fraction(0)))
            elif revision.kind == "asynchronous":
                row.append(regret[s][moved[0]][dst[moved[0]]] if len(moved) == 1 else None)
            else:
                options = [sum((regret[s][j][dst[j]] for j in J), Fraction(0))
                           for J, _ in custom if set(moved) <= J]
                row.append(min(options) if options else None)
        rows.append(tuple(row))
    log.info("waste graph for %s (%s): %s states", game.name, revision.label, game.n_states)
    return WasteGraph(tuple(rows), revision.label)


# ─────────────────── стохастические потенциалы ──────────────────────────────
@dataclass(frozen=True)
class StochasticPotentialTable:
    W: tuple[Fraction, ...]
    argmin: frozenset[StateId]
    revision: str
    trees: dict[int, Arborescence] | None = None

    @property
    def minimum(self) -> Fraction:
        return min(self.W)


def stochastic_potentials(game: Game, revision: RevisionProcess, with_trees: bool = False,
                          graph: WasteGraph | None = None) -> StochasticPotentialTable:
    """W(s) для всех s; минимизаторы являются стохастически стабильными состояниями."""
    graph = graph or waste_graph(game, revision)
    trees = {root: min_in_arborescence(graph, root) for root in range(graph.n)}
    W = tuple(trees[root].total_waste for root in range(graph.n))
    low = min(W)
    argmin = frozenset(s for s, w in enumerate(W) if w == low)
    log.info("%s (%s): min potential %s at %s states", game.name, revision.label, low, len(argmin))
    return StochasticPotentialTable(W, argmin, revision.label, trees if with_trees else None)


# ─────────────────── бассейны, радиус, корадиус ─────────────────────────────
def zero_waste_closure(graph: WasteGraph, s: StateId) -> frozenset[StateId]:
    """B(s): всё, куда из s ведёт путь нулевых потерь."""
    return frozenset(nx.descendants(graph.zero_graph, s)) | {s}


def basin_of_attraction(graph: WasteGraph, s: StateId) -> frozenset[StateId]:
    """Состояния, из которых путь нулевых потерь ведёт в s."""
    return frozenset(nx.ancestors(graph.zero_graph, s)) | {s}


def limit_set(graph: WasteGraph, s: StateId) -> frozenset[StateId]:
    """L(s): s′ ∈ B(s), для которых s ∈ B(s′)."""
    return zero_waste_closure(graph, s) & basin_of_attraction(graph, s)


def radius(graph: WasteGraph, s: StateId) -> Fraction | float:
    """Минимальные потери пути из s за пределы бассейна; INFINITE, если бассейн совпадает со всем пространством."""
    outside = set(range(graph.n)) - basin_of_attraction(graph, s)
    if not outside:
        return INFINITE
    dist = nx.single_source_dijkstra_path_length(graph.feasible_graph, s, weight="waste")
    reached = [dist[t] for t in outside if t in dist]
    return Fraction(min(reached)) if reached else INFINITE


def coradius(graph: WasteGraph, s: StateId) -> Fraction | float:
    """Максимум по состояниям вне бассейна минимальных потерь пути в s."""
    outside = set(range(graph.n)) - basin_of_attraction(graph, s)
    if not outside:
        return Fraction(0)
    dist = nx.single_source_dijkstra_path_length(graph.feasible_graph.reverse(copy=False), s, weight="waste")
    if any(t not in dist for t in outside):
        return INFINITE
    return Fraction(max(dist[t] for t in outside))


@dataclass(frozen=True)
class BasinReport:
    state: StateId
    B: frozenset[StateId]
    basin: frozenset[StateId]
    L: frozenset[StateId]
    R: Fraction | float
    CR: Fraction | float


def basin_report(graph: WasteGraph, s: StateId) -> BasinReport:
    return BasinReport(s, zero_waste_closure(graph, s), basin_of_attraction(graph, s),
                       limit_set(graph, s), radius(graph, s), coradius(graph, s))


@dataclass(frozen=True)
class RadiusCoradiusCheck:
    applicable: bool
    basin: BasinReport
    stable: frozenset[StateId] | None = None


def radius_coradius_check(game: Game, revision: RevisionProcess, s: StateId,
                          graph: WasteGraph | None = None,
                          table: StochasticPotentialTable | None = None) -> RadiusCoradiusCheck:
    """При R(s) > CR(s) стабильные состояния совпадают с L(s); сверяется с минимизаторами W."""
    graph = graph or waste_graph(game, revision)
    report = basin_report(graph, s)
    if not report.R > report.CR:
        return RadiusCoradiusCheck(False, report)
    table = table or stochastic_potentials(game, revision, graph=graph)
    if report.L != table.argmin:
        raise InternalInconsistency(
            f"{game.name}: R({s})={report.R} > CR({s})={report.CR} gives L={sorted(report.L)}, "
            f"but stochastic potentials are minimized at {sorted(table.argmin)}"
        )
    return RadiusCoradiusCheck(True, report, report.L)


def nash_reachability_violations(graph: WasteGraph, table: StochasticPotentialTable,
                                 nash: frozenset[StateId]) -> list[StateId]:
    """Не-нэшевские состояния без пути нулевых потерь к Нэшу или с W ниже достижимых Нэшей."""
    bad = []
    for s in range(graph.n):
        if s in nash:
            continue
        reach = zero_waste_closure(graph, s) & nash
        if not reach or table.W[s] < min(table.W[x] for x in reach):
            bad.append(s)
    return bad


# ─────────────────── диагностика параллельных линий ─────────────────────────
@dataclass(frozen=True)
class ParallelLinksDiagnostics:
    b1: int
    radius_bound: Fraction
    coradius_bound: Fraction
    harmonic_gap: Fraction
    radius: Fraction | float
    coradius: Fraction | float

    @property
    def gap(self) -> Fraction | float:
        return self.radius - self.coradius


def parallel_links_diagnostics(game: Game, link_costs: list[Fraction], n: int,
                               revision: RevisionProcess | None = None,
                               graph: WasteGraph | None = None) -> ParallelLinksDiagnostics:
    """b1, формулы по ходам для R(N1) и CR(N1), (ℓ2−ℓ1)H(n) и точные R, CR для сравнения."""
    if len(link_costs) < 2:
        raise InvalidParams("parallel-links diagnostics need at least two links")
    l1, l2 = Fraction(link_costs[0]), Fraction(link_costs[1])
    b1 = next((b for b in range(1, n) if l1 / (b + 1) <= l2 / (n - b)), n)
    radius_bound = sum((max(Fraction(0), l2 / k - l1 / (n - k + 1)) for k in range(1, n - b1 + 1)), Fraction(0))
    coradius_bound = sum((max(Fraction(0), l1 / k - l2 / (n - k + 1)) for k in range(1, b1 + 1)), Fraction(0))
    graph = graph or waste_graph(game, revision or RevisionProcess.independent())
    n1 = game.pack((0,) * n)
    return ParallelLinksDiagnostics(b1, radius_bound, coradius_bound, (l2 - l1) * harmonic(n),
                                    radius(graph, n1), coradius(graph, n1))


def empty_machine_violations(game: Game, graph: WasteGraph) -> list[StateId]:
    """Балансировка нагрузки: состояния с пустой машиной, из которых не всё достижимо без потерь."""
    machines = game.spec.machines
    everything = frozenset(range(graph.n))
    return [s for s in range(graph.n)
            if len(set(game.unpack(s))) < machines and zero_waste_closure(graph, s) != everything]
