"""
Зоопарк игр: балансировка нагрузки, широковещательный network design,
параллельные линии и треугольник. Все конструкторы сначала собирают
JSON-спецификацию (app.services.game_specs), затем build_game превращает
её в Game, поэтому встроенные экземпляры и файлы проходят один и тот же путь.
"""
from __future__ import annotations

import logging
from fractions import Fraction
from itertools import islice

import networkx as nx

from app.config import settings
from app.errors import DisconnectedPlayer, InternalInconsistency, InvalidParams, SchemaError, TooManyPaths, UnknownBuiltin
from app.services.game_specs import (
    LoadBalancingSpec,
    NetworkDesignSpec,
    NormalFormSpec,
    ParallelLinksSpec,
    format_rational,
)
from app.services.games import Game, Profile, WeightedPotential, optimum_cost

log = logging.getLogger("zoo")

# имена состояний треугольника: стратегия 0 это прямой путь (D), 1 идёт через соседа (I)
TRIANGLE_STATES = {"s0": 3, "s1": 1, "s2": 0, "s3": 2}


def harmonic(n: int) -> Fraction:
    return sum((Fraction(1, k) for k in range(1, n + 1)), Fraction(0))


def _bracket(weights) -> str:
    return "[" + ",".join(format_rational(w) for w in weights) + "]"


# ─────────────────── балансировка нагрузки ──────────────────────────────────
def _load_balancing(spec: LoadBalancingSpec) -> Game:
    m, jobs = spec.machines, tuple(spec.jobs)

    def loads(profile: Profile) -> list[Fraction]:
        out = [Fraction(0)] * m
        for j, machine in enumerate(profile):
            out[machine] += jobs[j]
        return out

    def utility(i: int, profile: Profile) -> Fraction:
        return -loads(profile)[profile[i]]

    def cost(profile: Profile) -> Fraction:
        return max(loads(profile))

    def phi(profile: Profile) -> Fraction:
        return sum((x * x for x in loads(profile)), Fraction(0))

    def signature(profile: Profile) -> str:
        per_machine = [[] for _ in range(m)]
        for j, machine in enumerate(profile):
            per_machine[machine].append(jobs[j])
        groups = sorted((tuple(sorted(g, reverse=True)) for g in per_machine), reverse=True)
        return "".join(_bracket(g) for g in groups)

    return Game(
        name=spec.name or f"load-balancing-m{m}-n{len(jobs)}",
        strategy_counts=(m,) * len(jobs),
        utility=utility,
        cost=cost,
        potential=WeightedPotential(phi, tuple(1 / (2 * w) for w in jobs)),
        labels=tuple(tuple(f"M{k + 1}" for k in range(m)) for _ in jobs),
        signature=signature,
        spec=spec,
    )


# ─────────────────── параллельные линии ─────────────────────────────────────
def _parallel_links(spec: ParallelLinksSpec) -> Game:
    links, n = tuple(spec.costs), spec.players

    def counts(profile: Profile) -> list[int]:
        out = [0] * len(links)
        for k in profile:
            out[k] += 1
        return out

    def utility(i: int, profile: Profile) -> Fraction:
        k = profile[i]
        return -links[k] / counts(profile)[k]

    def cost(profile: Profile) -> Fraction:
        return sum((links[k] for k, c in enumerate(counts(profile)) if c), Fraction(0))

    def phi(profile: Profile) -> Fraction:
        return sum((links[k] * harmonic(c) for k, c in enumerate(counts(profile))), Fraction(0))

    def signature(profile: Profile) -> str:
        return "n=(" + ",".join(str(c) for c in counts(profile)) + ")"

    return Game(
        name=spec.name or "parallel-" + "-".join(format_rational(c).replace("/", "_") for c in links) + f"-n{n}",
        strategy_counts=(len(links),) * n,
        utility=utility,
        cost=cost,
        potential=WeightedPotential(phi, (Fraction(1),) * n),
        labels=tuple(tuple(f"L{k + 1}" for k in range(len(links))) for _ in range(n)),
        signature=signature,
        spec=spec,
    )


# ─────────────────── общий network design ───────────────────────────────────
def _player_paths(graph: nx.MultiGraph, source: str, terminal: str, path_cap: int):
    if source == terminal:
        return [((), source)]
    found = list(islice(nx.all_simple_edge_paths(graph, source, terminal), path_cap + 1))
    if not found:
        raise DisconnectedPlayer(f"no path from {source!r} to {terminal!r}")
    if len(found) > path_cap:
        raise TooManyPaths(f"more than {path_cap} simple paths from {source!r} to {terminal!r}")
    out = []
    for path in found:
        cur, nodes, ids = source, [source], []
        for u, v, key in path:
            cur = v if u == cur else u
            nodes.append(cur)
            ids.append(key)
        out.append((tuple(ids), "-".join(nodes)))
    out.sort(key=lambda item: (len(item[0]), sorted(item[0]), item[1]))
    return out


def _network_design(spec: NetworkDesignSpec, path_cap: int | None = None) -> Game:
    path_cap = settings.PATH_CAP if path_cap is None else path_cap
    graph = nx.MultiGraph()
    graph.add_nodes_from(spec.nodes)
    edge_costs = []
    for idx, (u, v, c) in enumerate(spec.edges):
        graph.add_edge(u, v, key=idx)
        edge_costs.append(c)

    strategies = [_player_paths(graph, src, spec.terminal, path_cap) for src in spec.players]
    paths = [tuple(frozenset(ids) for ids, _ in options) for options in strategies]

    def usage(profile: Profile) -> dict[int, int]:
        out: dict[int, int] = {}
        for i, a in enumerate(profile):
            for e in paths[i][a]:
                out[e] = out.get(e, 0) + 1
        return out

    def utility(i: int, profile: Profile) -> Fraction:
        used = usage(profile)
        return -sum((edge_costs[e] / used[e] for e in paths[i][profile[i]]), Fraction(0))

    def cost(profile: Profile) -> Fraction:
        return sum((edge_costs[e] for e in usage(profile)), Fraction(0))

    def phi(profile: Profile) -> Fraction:
        return sum((edge_costs[e] * harmonic(c) for e, c in usage(profile).items()), Fraction(0))

    log.info("network design %s: paths per player %s", spec.name, [len(p) for p in paths])
    return Game(
        name=spec.name or "network-design",
        strategy_counts=tuple(len(p) for p in paths),
        utility=utility,
        cost=cost,
        potential=WeightedPotential(phi, (Fraction(1),) * len(paths)),
        labels=tuple(tuple(label for _, label in options) for options in strategies),
        spec=spec,
    )


# ─────────────────── явная нормальная форма ─────────────────────────────────
def _normal_form(spec: NormalFormSpec) -> Game:
    table = [tuple(row) for row in spec.utilities]
    counts = tuple(spec.strategy_counts)
    radix, mult = [], 1
    for k in counts:
        radix.append(mult)
        mult *= k

    def state_of(profile: Profile) -> int:
        return sum(a * r for a, r in zip(profile, radix))

    if spec.costs is not None:
        costs = list(spec.costs)
    else:
        # без явной стоимости берём сумму индивидуальных издержек (u_i = −cost_i)
        costs = [-sum(row, Fraction(0)) for row in table]
        if any(c < 0 for c in costs):
            raise SchemaError("normal_form: 'costs' is required when utilities are not nonpositive")

    potential = None
    if spec.potential is not None:
        phis = list(spec.potential.phi)
        potential = WeightedPotential(lambda p: phis[state_of(p)], tuple(spec.potential.weights))

    return Game(
        name=spec.name or "normal-form",
        strategy_counts=counts,
        utility=lambda i, p: table[state_of(p)][i],
        cost=lambda p: costs[state_of(p)],
        potential=potential,
        labels=tuple(tuple(x) for x in spec.labels) if spec.labels else None,
        spec=spec,
    )


def build_game(spec, path_cap: int | None = None) -> Game:
    if isinstance(spec, LoadBalancingSpec):
        return _load_balancing(spec)
    if isinstance(spec, ParallelLinksSpec):
        return _parallel_links(spec)
    if isinstance(spec, NetworkDesignSpec):
        return _network_design(spec, path_cap)
    if isinstance(spec, NormalFormSpec):
        return _normal_form(spec)
    raise SchemaError(f"unsupported game spec {type(spec).__name__}")


# ─────────────────── экземпляры из статьи ───────────────────────────────────
def _check_ml(m: int, l: int) -> None:
    if m < 2 or l < 1:
        raise InvalidParams(f"need m >= 2 and l >= 1, got m={m}, l={l}")


def make_lb_unit_instance(m: int, l: int) -> Game:
    """m машин и lm−1 одинаковых единичных работ."""
    _check_ml(m, l)
    return _load_balancing(LoadBalancingSpec(machines=m, jobs=[Fraction(1)] * (l * m - 1), name=f"lb-unit-m{m}-l{l}"))


def lb_pos_parameters(m: int, l: int) -> tuple[Fraction, Fraction]:
    big = Fraction(m, m + 1)
    return big, big / (l * m)


def make_lb_pos_instance(m: int, l: int) -> Game:
    _check_ml(m, l)
    big, small = lb_pos_parameters(m, l)
    jobs = [big - small, big - small] + [big] * (m - 2) + [small] * (l * m)
    return _load_balancing(LoadBalancingSpec(machines=m, jobs=jobs, name=f"lb-pos-m{m}-l{l}"))


def lb_pos_apx_signature(m: int, l: int) -> str:
    """Сигнатура класса APX: [Δ−δ,Δ−δ], [δ,…,δ], [Δ], …, [Δ]."""
    big, small = lb_pos_parameters(m, l)
    groups = [(big - small, big - small), (small,) * (l * m)] + [(big,)] * (m - 2)
    return "".join(_bracket(g) for g in sorted(groups, reverse=True))


def class_members(game: Game, signature: str) -> frozenset[int]:
    return frozenset(s for s in range(game.n_states) if game.class_signature(game.unpack(s)) == signature)


def make_lb_poa_instance(m: int) -> Game:
    """Худший случай классической PoA: две работы веса m и m(m−1) единичных."""
    if m < 2:
        raise InvalidParams(f"need m >= 2, got m={m}")
    jobs = [Fraction(m)] * 2 + [Fraction(1)] * (m * (m - 1))
    return _load_balancing(LoadBalancingSpec(machines=m, jobs=jobs, name=f"lb-poa-m{m}"))


def make_lb_custom(machines: int, jobs: list[Fraction]) -> Game:
    try:
        spec = LoadBalancingSpec(machines=machines, jobs=jobs, name=f"lb-custom-m{machines}")
    except ValueError as err:
        raise InvalidParams(str(err)) from err
    return _load_balancing(spec)


def make_parallel_links(link_costs: list[Fraction], n_players: int) -> Game:
    try:
        spec = ParallelLinksSpec(costs=link_costs, players=n_players)
    except ValueError as err:
        raise InvalidParams(str(err)) from err
    return _parallel_links(spec)


def make_network_design(spec: NetworkDesignSpec, path_cap: int | None = None) -> Game:
    return _network_design(spec, path_cap)


def triangle_spec() -> NetworkDesignSpec:
    # веса рёбер восстановлены по числам из текста: стоимости 3/4/5 и PoA 4/3
    return NetworkDesignSpec(
        nodes=["s1", "s2", "t"],
        edges=[("s1", "t", Fraction(2)), ("s2", "t", Fraction(2)), ("s1", "s2", Fraction(1))],
        players=["s1", "s2"],
        terminal="t",
        name="triangle",
    )


def make_triangle() -> Game:
    game = _network_design(triangle_spec())
    costs = {name: game.costs[state] for name, state in TRIANGLE_STATES.items()}
    optimum, _ = optimum_cost(game)
    if costs != {"s0": 5, "s1": 3, "s2": 4, "s3": 3} or optimum != 3:
        raise InternalInconsistency(f"triangle reconstruction does not reproduce the stated costs: {costs}")
    return game


# ─────────────────── встроенные экземпляры для CLI ──────────────────────────
BUILTINS = ("triangle", "lb-unit", "lb-pos", "parallel", "lb-custom", "lb-poa")


def make_builtin(name: str, m: int = 2, l: int = 2, costs: list[Fraction] | None = None,
                 players: int = 3, jobs: list[Fraction] | None = None) -> Game:
    if name == "triangle":
        return make_triangle()
    if name == "lb-unit":
        return make_lb_unit_instance(m, l)
    if name == "lb-pos":
        return make_lb_pos_instance(m, l)
    if name == "lb-poa":
        return make_lb_poa_instance(m)
    if name == "parallel":
        return make_parallel_links(costs or [Fraction(1), Fraction(2)], players)
    if name == "lb-custom":
        if not jobs:
            raise InvalidParams("lb-custom needs --jobs")
        return make_lb_custom(m, jobs)
    raise UnknownBuiltin(f"unknown builtin {name!r}; choose one of {', '.join(BUILTINS)}")
