"""
Минимальные входящие арборесценции (все состояния сходятся к корню) над
графом потерь. Точные рациональные веса переводятся в целые общим
знаменателем, после чего работает плотный алгоритм Чу–Лю/Эдмондса со
сжатием циклов на numpy.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import TYPE_CHECKING

import numpy as np

from app.errors import TooLarge, Unreachable

if TYPE_CHECKING:
    from app.services.stability import WasteGraph

log = logging.getLogger("arborescence")


@dataclass(frozen=True)
class Arborescence:
    root: int
    parent: dict[int, int]      # каждое некорневое состояние → его исходящее ребро
    total_waste: Fraction


def _cycles(choice: list[int], root: int) -> list[list[int]]:
    n = len(choice)
    mark = [0] * n               # 0: не посещён, 1: на текущем пути, 2: готов
    mark[root] = 2
    found = []
    for v in range(n):
        path, u = [], v
        while mark[u] == 0:
            mark[u] = 1
            path.append(u)
            u = choice[u]
        if mark[u] == 1:
            found.append(path[path.index(u):])
        for x in path:
            mark[x] = 2
    return found


def _edmonds(w: np.ndarray, root: int, big: int) -> tuple[int, np.ndarray]:
    n = w.shape[0]
    if n == 1:
        return 0, np.array([root])
    choice = w.argmin(axis=1)
    choice[root] = root
    mins = w[np.arange(n), choice].copy()
    mins[root] = 0
    base = sum(int(x) for x in mins)
    cycles = _cycles(choice.tolist(), root)
    if not cycles:
        return base, choice

    comp = [-1] * n
    for k, cycle in enumerate(cycles):
        for v in cycle:
            comp[v] = k
    k = len(cycles)
    for v in range(n):
        if comp[v] < 0:
            comp[v] = k
            k += 1

    reduced = w - mins[:, None]
    comp_arr = np.array(comp)
    order = np.argsort(comp_arr, kind="stable")
    starts = np.flatnonzero(np.r_[True, np.diff(comp_arr[order]) != 0])
    w2 = np.minimum.reduceat(np.minimum.reduceat(reduced[order][:, order], starts, axis=1), starts, axis=0)
    np.fill_diagonal(w2, big)
    root2 = comp[root]
    w2[root2, :] = big

    sub_total, parent2 = _edmonds(w2, root2, big)

    bounds = list(starts) + [n]
    members = [order[bounds[a]:bounds[a + 1]] for a in range(k)]
    parent = choice.copy()
    for a in range(k):
        if a == root2:
            continue
        src, dst = members[a], members[int(parent2[a])]
        block = reduced[np.ix_(src, dst)]
        x, y = np.unravel_index(int(block.argmin()), block.shape)
        parent[src[x]] = dst[y]
    return base + sub_total, parent


def min_in_arborescence(graph: "WasteGraph", root: int) -> Arborescence:
    """Минимальное по потерям дерево, в котором из каждого состояния есть единственный путь в root."""
    if root not in graph.universal_roots:
        stuck = sorted(set(range(graph.n)) - graph.ancestors(root) - {root})
        raise Unreachable(f"state {stuck[0]} cannot reach root {root} through feasible edges")
    matrix, scale, big = graph.scaled
    w = matrix.copy()
    w[root, :] = big
    total, parent = _edmonds(w, root, big)
    tree = {v: int(parent[v]) for v in range(graph.n) if v != root}
    exact = sum((graph.entries[v][u] for v, u in tree.items()), Fraction(0))
    if exact * scale != total:
        raise ArithmeticError(f"arborescence total mismatch at root {root}: {exact} vs {total}/{scale}")
    return Arborescence(root, tree, exact)


# ─────────────────── перебор для проверки ───────────────────────────────────
def _is_in_tree(parent: dict[int, int], root: int, n: int) -> bool:
    for v in parent:
        u, steps = v, 0
        while u != root:
            u = parent[u]
            steps += 1
            if steps > n:
                return False
    return True


def brute_force_arborescence(graph: "WasteGraph", root: int, limit: int = 8) -> Fraction:
    """Точный минимум полным перебором указателей на родителя (|S| ≤ limit)."""
    if graph.n > limit:
        raise TooLarge(f"brute force limited to {limit} states, got {graph.n}")
    others = [v for v in range(graph.n) if v != root]
    options = [[u for u in range(graph.n) if u != v and graph.entries[v][u] is not None] for v in others]
    best = None
    for combo in product(*options):
        parent = dict(zip(others, combo))
        if not _is_in_tree(parent, root, graph.n):
            continue
        total = sum((graph.entries[v][u] for v, u in parent.items()), Fraction(0))
        if best is None or total < best:
            best = total
    if best is None:
        raise Unreachable(f"no in-tree converges to {root}")
    return best
