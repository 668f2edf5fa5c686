"""
Случайные проверки свойств на небольших играх (по 200 seed на свойство).
"""
from fractions import Fraction
from itertools import combinations

import networkx as nx
import numpy as np
import pytest

from app.services.dynamics import RevisionProcess
from app.services.game_specs import LoadBalancingSpec, NetworkDesignSpec, NormalFormSpec
from app.services.games import (
    best_responses,
    check_weighted_potential,
    deviation_set,
    enumerate_states,
    nash_set,
    potential_minimizers,
)
from app.services.stability import (
    WasteGraph,
    brute_force_arborescence,
    min_in_arborescence,
    stochastic_potentials,
    subset_waste,
    waste,
    waste_graph,
)
from app.services.zoo import build_game, make_lb_unit_instance

SEEDS = range(200)
INDEPENDENT = RevisionProcess.independent("1/2")


def _profiles(counts: list[int]) -> list[tuple[int, ...]]:
    out = []
    for s in range(int(np.prod(counts))):
        profile = []
        for k in counts:
            s, a = divmod(s, k)
            profile.append(a)
        out.append(tuple(profile))
    return out


def _random_utilities(rng, max_players: int = 3) -> tuple[list[int], list[list[int]]]:
    n = int(rng.integers(1, max_players + 1))
    counts = [int(rng.integers(1, 4)) for _ in range(n)]
    utilities = rng.integers(-6, 1, size=(int(np.prod(counts)), n))
    return counts, [[int(u) for u in row] for row in utilities]


def _normal_form(counts: list[int], utilities: list[list[int]]):
    return build_game(NormalFormSpec(strategy_counts=counts, utilities=[[str(u) for u in row] for row in utilities]))


def _random_game(rng, max_players: int = 3):
    return _normal_form(*_random_utilities(rng, max_players))


def _random_potential_game(rng):
    # u_i(s) = −φ(s) + h_i(s_{−i}): точный потенциал с единичными весами
    n = int(rng.integers(1, 4))
    counts = [int(rng.integers(1, 4)) for _ in range(n)]
    profiles = _profiles(counts)
    phi = [int(x) for x in rng.integers(0, 6, size=len(profiles))]
    h: list[dict] = [{} for _ in range(n)]
    rows = []
    for s, profile in enumerate(profiles):
        row = []
        for i in range(n):
            others = profile[:i] + profile[i + 1:]
            if others not in h[i]:
                h[i][others] = int(rng.integers(-3, 1))
            row.append(str(-phi[s] + h[i][others]))
        rows.append(row)
    spec = NormalFormSpec(
        strategy_counts=counts,
        utilities=rows,
        costs=[str(x) for x in phi],
        potential={"phi": [str(x) for x in phi], "weights": ["1"] * n},
    )
    return build_game(spec)


# ─────────────────── ядро игр ───────────────────────────────────────────────
@pytest.mark.parametrize("seed", SEEDS)
def test_pack_unpack_round_trip(seed):
    game = _random_game(np.random.default_rng(7_000 + seed), max_players=4)
    profiles = list(enumerate_states(game))
    assert len(set(profiles)) == game.n_states
    for s, profile in enumerate(profiles):
        assert game.unpack(s) == profile
        assert game.pack(game.unpack(s)) == s


@pytest.mark.parametrize("seed", SEEDS)
def test_best_responses_ignore_shift_in_others(seed):
    rng = np.random.default_rng(8_000 + seed)
    counts, utilities = _random_utilities(rng)
    profiles = _profiles(counts)
    shifts: list[dict] = [{} for _ in counts]
    shifted = []
    for profile, row in zip(profiles, utilities):
        new_row = []
        for i, u in enumerate(row):
            others = profile[:i] + profile[i + 1:]
            if others not in shifts[i]:
                shifts[i][others] = int(rng.integers(-3, 1))
            new_row.append(u + shifts[i][others])
        shifted.append(new_row)
    game, moved = _normal_form(counts, utilities), _normal_form(counts, shifted)
    for profile in profiles:
        for i in range(len(counts)):
            assert best_responses(game, profile, i) == best_responses(moved, profile, i)


@pytest.mark.parametrize("seed", SEEDS)
def test_strict_nash_is_nash(seed):
    nash, strict = nash_set(_random_game(np.random.default_rng(9_000 + seed), max_players=4))
    assert strict <= nash


@pytest.mark.parametrize("seed", SEEDS)
def test_potential_minimizers_are_nash(seed):
    game = _random_potential_game(np.random.default_rng(10_000 + seed))
    nash, _ = nash_set(game)
    assert potential_minimizers(game) <= nash


# ─────────────────── потери ─────────────────────────────────────────────────
@pytest.mark.parametrize("seed", SEEDS)
def test_waste_nonnegative_and_zero_means_best_responses(seed):
    game = _random_game(np.random.default_rng(seed))
    graph = waste_graph(game, INDEPENDENT)
    for s in range(game.n_states):
        src = game.unpack(s)
        for t in range(game.n_states):
            if s == t:
                continue
            w = graph.waste(s, t)
            assert w is not None and w >= 0
            dst = game.unpack(t)
            simultaneous = all(dst[j] in best_responses(game, src, j) for j in deviation_set(src, dst))
            assert (w == 0) == simultaneous


@pytest.mark.parametrize("seed", SEEDS)
def test_superset_monotonicity(seed):
    rng = np.random.default_rng(1_000 + seed)
    game = _random_game(rng, max_players=4)
    if game.n_states < 2:
        return
    n = game.n_players
    for _ in range(5):
        s, t = (int(x) for x in rng.choice(game.n_states, size=2, replace=False))
        moved = deviation_set(game.unpack(s), game.unpack(t))
        rest = [j for j in range(n) if j not in moved]
        supersets = [moved | frozenset(extra) for size in range(len(rest) + 1) for extra in combinations(rest, size)]
        for big in supersets:
            for small in supersets:
                if small <= big:
                    assert subset_waste(game, s, t, big) >= subset_waste(game, s, t, small)
        assert waste(game, INDEPENDENT, s, t) == min(subset_waste(game, s, t, J) for J in supersets)


# ─────────────────── деревья ────────────────────────────────────────────────
def _random_weights(rng, n: int, drop: float) -> list[list[Fraction | None]]:
    # ребро s → s+1 всегда есть, так что любой корень достижим
    weights = []
    for s in range(n):
        row = []
        for t in range(n):
            if s == t or (t != (s + 1) % n and rng.random() < drop):
                row.append(None)
            else:
                row.append(Fraction(int(rng.integers(0, 7)), int(rng.integers(1, 5))))
        weights.append(row)
    return weights


def _networkx_in_tree_total(graph: WasteGraph, root: int) -> Fraction:
    # входящее дерево к root = исходящая арборесценция обращённого графа без рёбер в root
    reversed_graph = nx.DiGraph()
    reversed_graph.add_nodes_from(range(graph.n))
    for s in range(graph.n):
        if s == root:
            continue
        for t in range(graph.n):
            w = graph.waste(s, t)
            if w is not None:
                reversed_graph.add_edge(t, s, weight=w)
    tree = nx.minimum_spanning_arborescence(reversed_graph)
    return sum((w for _, _, w in tree.edges(data="weight")), Fraction(0))


@pytest.mark.parametrize("seed", SEEDS)
def test_arborescence_matches_brute_force(seed):
    rng = np.random.default_rng(2_000 + seed)
    n = int(rng.integers(3, 6))
    graph = WasteGraph.from_weights(_random_weights(rng, n, drop=0.4 if seed % 2 else 0.0))
    for root in range(n):
        tree = min_in_arborescence(graph, root)
        assert tree.total_waste == brute_force_arborescence(graph, root)
        assert tree.total_waste == sum((graph.waste(v, u) for v, u in tree.parent.items()), Fraction(0))


@pytest.mark.parametrize("seed", SEEDS)
def test_arborescence_matches_networkx(seed):
    rng = np.random.default_rng(6_000 + seed)
    n = int(rng.integers(6, 13))
    graph = WasteGraph.from_weights(_random_weights(rng, n, drop=0.5))
    root = int(rng.integers(0, n))
    assert min_in_arborescence(graph, root).total_waste == _networkx_in_tree_total(graph, root)


def test_lb_unit_arborescences_match_networkx():
    game = make_lb_unit_instance(2, 3)
    graph = waste_graph(game, RevisionProcess.asynchronous())
    for root in range(game.n_states):
        assert min_in_arborescence(graph, root).total_waste == _networkx_in_tree_total(graph, root)


# ─────────────────── стабильность и Нэш ─────────────────────────────────────
@pytest.mark.parametrize("seed", SEEDS)
def test_stable_states_meet_nash_in_potential_games(seed):
    game = _random_potential_game(np.random.default_rng(3_000 + seed))
    assert check_weighted_potential(game) is None
    nash, _ = nash_set(game)
    assert stochastic_potentials(game, INDEPENDENT).argmin & nash
    assert stochastic_potentials(game, RevisionProcess.asynchronous()).argmin == potential_minimizers(game)


# ─────────────────── тождество потенциала ───────────────────────────────────
@pytest.mark.parametrize("seed", SEEDS)
def test_load_balancing_weighted_potential(seed):
    rng = np.random.default_rng(4_000 + seed)
    machines = int(rng.integers(2, 4))
    jobs = [f"{int(rng.integers(1, 7))}/{int(rng.integers(1, 4))}" for _ in range(int(rng.integers(1, 5)))]
    game = build_game(LoadBalancingSpec(machines=machines, jobs=jobs))
    assert check_weighted_potential(game) is None


@pytest.mark.parametrize("seed", SEEDS)
def test_network_design_rosenthal_potential(seed):
    rng = np.random.default_rng(5_000 + seed)
    nodes = ["a", "b", "c", "t"]
    edges = [(u, "t", str(int(rng.integers(1, 5)))) for u in ("a", "b", "c")]
    for u, v in combinations(nodes, 2):
        if rng.random() < 0.5:
            edges.append((u, v, f"{int(rng.integers(1, 7))}/{int(rng.integers(1, 3))}"))
    players = [str(x) for x in rng.choice(["a", "b", "c"], size=int(rng.integers(1, 3)))]
    game = build_game(NetworkDesignSpec(nodes=nodes, edges=edges, players=players, terminal="t"))
    assert check_weighted_potential(game) is None
