"""
Logit-response динамика при конечном β: правило выбора (softmax в лог-домене),
процессы пересмотра стратегий, матрица переходов, стационарное распределение
и численная оценка стохастически стабильных состояний по лестнице β.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Iterator, Literal

import networkx as nx
import numpy as np

from app.config import settings
from app.errors import EmptyStrategySet, InvalidParams, ReducibleChain, SolveFailure, StateSpaceTooLarge
from app.services.games import Game, check_state_cap

log = logging.getLogger("dynamics")

PROBABILITY_FLOOR = 1e-300


# ─────────────────── процессы пересмотра ────────────────────────────────────
@dataclass(frozen=True)
class RevisionProcess:
    kind: Literal["asynchronous", "independent", "custom"]
    p: Fraction | None = None
    support: tuple[tuple[frozenset[int], Fraction], ...] = ()

    @classmethod
    def asynchronous(cls) -> "RevisionProcess":
        return cls("asynchronous")

    @classmethod
    def independent(cls, p: Fraction | str | None = None) -> "RevisionProcess":
        try:
            p = Fraction(settings.INDEPENDENT_P if p is None else p)
        except (ValueError, ZeroDivisionError) as err:
            raise InvalidParams(f"bad revision probability {p!r}") from err
        if not 0 < p < 1:
            raise InvalidParams(f"independent revision needs p in (0,1), got {p}")
        return cls("independent", p=p)

    @classmethod
    def custom(cls, entries: Iterable[tuple[Iterable[int], Fraction | str]]) -> "RevisionProcess":
        support: dict[frozenset[int], Fraction] = {}
        for players, prob in entries:
            try:
                prob = Fraction(prob)
            except (ValueError, ZeroDivisionError) as err:
                raise InvalidParams(f"bad custom revision probability {prob!r}") from err
            if prob <= 0:
                raise InvalidParams("custom revision probabilities must be positive")
            key = frozenset(players)
            support[key] = support.get(key, Fraction(0)) + prob
        if sum(support.values()) != 1:
            raise InvalidParams(f"custom revision probabilities sum to {sum(support.values())}, not 1")
        ordered = sorted(support.items(), key=lambda kv: (len(kv[0]), sorted(kv[0])))
        return cls("custom", support=tuple(ordered))

    @property
    def label(self) -> str:
        if self.kind == "independent":
            return f"independent(p={self.p})"
        return self.kind

    def subsets(self, n: int) -> list[tuple[frozenset[int], Fraction]]:
        """Все J с q(J) > 0 вместе с q(J)."""
        if self.kind == "asynchronous":
            return [(frozenset({i}), Fraction(1, n)) for i in range(n)]
        if self.kind == "independent":
            out = []
            for size in range(n + 1):
                prob = self.p ** size * (1 - self.p) ** (n - size)
                out.extend((frozenset(c), prob) for c in combinations(range(n), size))
            return out
        for players, _ in self.support:
            if any(not 0 <= j < n for j in players):
                raise InvalidParams(f"custom revision set {sorted(players)} names a player outside 0..{n - 1}")
        return list(self.support)

    def revising_sets(self, deviation: frozenset[int], n: int) -> Iterator[frozenset[int]]:
        """Допустимые J ⊇ deviation (множество R_{s,s′})."""
        if self.kind == "asynchronous":
            if len(deviation) == 1:
                yield deviation
            return
        if self.kind == "independent":
            yield deviation
            rest = [j for j in range(n) if j not in deviation]
            for size in range(1, len(rest) + 1):
                for extra in combinations(rest, size):
                    yield deviation | frozenset(extra)
            return
        for players, _ in self.subsets(n):
            if deviation <= players:
                yield players


def parse_revision(name: str, p: str | None = None, custom: str | None = None) -> RevisionProcess:
    """'async' | 'independent' | 'custom' (формат custom: '0,1:1/2;2:1/2', пустой список означает J=∅)."""
    name = name.lower()
    if name in ("async", "asynchronous"):
        return RevisionProcess.asynchronous()
    if name in ("independent", "indep"):
        return RevisionProcess.independent(p)
    if name == "custom":
        if not custom:
            raise InvalidParams("custom revision needs --custom 'players:prob;...'")
        entries = []
        for chunk in custom.split(";"):
            players, _, prob = chunk.partition(":")
            if not prob:
                raise InvalidParams(f"bad custom revision entry {chunk!r}")
            try:
                ids = [int(x) for x in players.split(",") if x.strip()]
                entries.append((ids, Fraction(prob.strip())))
            except (ValueError, ZeroDivisionError) as err:
                raise InvalidParams(f"bad custom revision entry {chunk!r}") from err
        return RevisionProcess.custom(entries)
    raise InvalidParams(f"unknown revision process {name!r}")


@dataclass(frozen=True)
class DynamicsConfig:
    beta: float
    revision: RevisionProcess = field(default_factory=RevisionProcess.independent)

    def __post_init__(self):
        if not math.isfinite(self.beta) or self.beta < 0:
            raise InvalidParams(f"beta must be finite and nonnegative, got {self.beta}")


# ─────────────────── logit-выбор ────────────────────────────────────────────
def logit_choice(utilities, beta: float) -> np.ndarray:
    if len(utilities) == 0:
        raise EmptyStrategySet("logit choice over an empty strategy set")
    x = beta * np.array([float(u) for u in utilities])
    x -= x.max()
    weights = np.exp(x)
    probs = np.maximum(weights / weights.sum(), PROBABILITY_FLOOR)
    return probs / probs.sum()


def logit_tables(game: Game, beta: float) -> list[list[np.ndarray]]:
    return [[logit_choice(alts, beta) for alts in row] for row in game.deviations]


# ─────────────────── матрица переходов ──────────────────────────────────────
@dataclass(frozen=True)
class TransitionMatrix:
    matrix: np.ndarray
    beta: float
    revision: RevisionProcess


def _dense_cap(game: Game, cap: int | None) -> None:
    cap = settings.DENSE_STATE_CAP if cap is None else cap
    check_state_cap(game)
    if game.n_states > cap:
        raise StateSpaceTooLarge(f"{game.name}: {game.n_states} states exceed the dense cap {cap}")


def _kron_row(factors: list[np.ndarray]) -> np.ndarray:
    # игрок 0 занимает младший разряд StateId, поэтому его множитель идёт последним
    row = factors[0]
    for f in factors[1:]:
        row = np.kron(f, row)
    return row


def transition_matrix(game: Game, config: DynamicsConfig, cap: int | None = None) -> TransitionMatrix:
    _dense_cap(game, cap)
    n, revision = game.n_players, config.revision
    logits = logit_tables(game, config.beta)
    eye = [np.eye(k) for k in game.strategy_counts]
    subsets = None if revision.kind == "independent" else [(J, float(q)) for J, q in revision.subsets(n)]
    P = np.zeros((game.n_states, game.n_states))

    for state in range(game.n_states):
        profile = game.unpack(state)
        stay = [eye[j][profile[j]] for j in range(n)]
        if revision.kind == "independent":
            p = float(revision.p)
            P[state] = _kron_row([p * logits[state][j] + (1 - p) * stay[j] for j in range(n)])
            continue
        row = np.zeros(game.n_states)
        for J, q in subsets:
            row += q * _kron_row([logits[state][j] if j in J else stay[j] for j in range(n)])
        P[state] = row

    sums = P.sum(axis=1)
    if np.abs(sums - 1).max() > 1e-12:
        raise SolveFailure(f"transition rows do not sum to 1 (max error {np.abs(sums - 1).max():.3e})")
    log.debug("transition matrix for %s: beta=%s revision=%s", game.name, config.beta, revision.label)
    return TransitionMatrix(P, config.beta, revision)


# ─────────────────── стационарное распределение ─────────────────────────────
@dataclass(frozen=True)
class StationaryDistribution:
    probabilities: np.ndarray
    residual: float
    method: str


def _check_irreducible(P: np.ndarray) -> None:
    graph = nx.from_numpy_array((P > 0).astype(np.int8), create_using=nx.DiGraph)
    if not nx.is_strongly_connected(graph):
        comps = nx.number_strongly_connected_components(graph)
        raise ReducibleChain(f"chain is reducible ({comps} strongly connected components)")


def _solve(P: np.ndarray) -> np.ndarray:
    n = len(P)
    A = P.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        return np.linalg.solve(A, b)
    except np.linalg.LinAlgError as err:
        raise SolveFailure(f"linear solve failed: {err}") from err


def _gth(P: np.ndarray) -> np.ndarray:
    """Исключение Грассмана–Таксара–Хеймана: без вычитаний, сохраняет относительную точность."""
    A = P.astype(float).copy()
    n = len(A)
    for k in range(n - 1, 0, -1):
        s = A[k, :k].sum()
        if s <= 0:
            raise SolveFailure(f"GTH pivot vanished at state {k}")
        A[:k, k] /= s
        A[:k, :k] += np.outer(A[:k, k], A[k, :k])
    pi = np.zeros(n)
    pi[0] = 1.0
    for k in range(1, n):
        pi[k] = pi[:k] @ A[:k, k]
    return pi / pi.sum()


def stationary_distribution(matrix: TransitionMatrix | np.ndarray, method: str = "solve") -> StationaryDistribution:
    P = matrix.matrix if isinstance(matrix, TransitionMatrix) else np.asarray(matrix, dtype=float)
    _check_irreducible(P)
    if method == "solve":
        mu = _solve(P)
    elif method == "gth":
        mu = _gth(P)
    else:
        raise InvalidParams(f"unknown stationary solver {method!r}")
    mu = np.clip(mu, 0.0, None)
    mu = mu / mu.sum()
    residual = float(np.abs(mu @ P - mu).max())
    if residual > 1e-9:
        raise SolveFailure(f"stationary residual {residual:.3e} exceeds 1e-9")
    return StationaryDistribution(mu, residual, method)


# ─────────────────── численная оценка стабильности ──────────────────────────
@dataclass(frozen=True)
class NumericEstimate:
    persisting: frozenset[int]
    vanishing: frozenset[int]
    slopes: np.ndarray
    betas: tuple[float, ...]
    log_mu: np.ndarray          # shape (len(betas), n_states)
    max_residual: float


def numeric_stable_estimate(game: Game, revision: RevisionProcess, beta_ladder: list[float] | None = None,
                            slope_tol: float | None = None, fit_points: int | None = None,
                            method: str = "gth", cap: int | None = None) -> NumericEstimate:
    betas = tuple(float(b) for b in (settings.BETA_LADDER if beta_ladder is None else beta_ladder))
    slope_tol = settings.SLOPE_TOL if slope_tol is None else slope_tol
    fit_points = settings.FIT_POINTS if fit_points is None else fit_points
    if len(betas) < 3 or any(a >= b for a, b in zip(betas, betas[1:])):
        raise InvalidParams(f"beta ladder must be strictly increasing with at least 3 points, got {betas}")
    if not 2 <= fit_points <= len(betas):
        raise InvalidParams(f"fit_points must be between 2 and {len(betas)}")

    rows, residual = [], 0.0
    for beta in betas:
        dist = stationary_distribution(transition_matrix(game, DynamicsConfig(beta, revision), cap), method)
        rows.append(np.log(np.maximum(dist.probabilities, PROBABILITY_FLOOR)))
        residual = max(residual, dist.residual)
        log.info("%s: beta=%s solved (%s), residual %.2e", game.name, beta, revision.label, dist.residual)
    log_mu = np.vstack(rows)

    # наклон log(μ^β(s) / max μ^β) по верхним точкам лестницы: общий множитель 1/Z(β) сокращается
    relative = log_mu - log_mu.max(axis=1, keepdims=True)
    tail = slice(len(betas) - fit_points, len(betas))
    slopes = np.polyfit(np.array(betas[tail]), relative[tail], 1)[0]
    vanishing = frozenset(int(s) for s in np.nonzero(slopes < -slope_tol)[0])
    persisting = frozenset(range(game.n_states)) - vanishing
    return NumericEstimate(persisting, vanishing, slopes, betas, log_mu, residual)
