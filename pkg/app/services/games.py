"""
Конечные игры в нормальной форме с точной (рациональной) арифметикой:
упаковка профилей в StateId, лучшие ответы, равновесия Нэша и проверка
взвешенного потенциала.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Any, Callable, Iterator

from app.config import settings
from app.errors import MissingPotential, StateSpaceTooLarge

log = logging.getLogger("games")

Profile = tuple[int, ...]
StateId = int


@dataclass(frozen=True)
class WeightedPotential:
    """φ и веса w_i: u_i(s) − u_i(s′) = (φ(s′) − φ(s))·w_i для односторонних отклонений."""
    phi: Callable[[Profile], Fraction]
    weights: tuple[Fraction, ...]


@dataclass(frozen=True)
class PotentialViolation:
    profile: Profile
    player: int
    deviation: int


@dataclass(frozen=True, eq=False)
class Game:
    name: str
    strategy_counts: tuple[int, ...]
    utility: Callable[[int, Profile], Fraction]
    cost: Callable[[Profile], Fraction]
    potential: WeightedPotential | None = None
    labels: tuple[tuple[str, ...], ...] | None = None
    signature: Callable[[Profile], str] | None = None
    spec: Any = None

    @property
    def n_players(self) -> int:
        return len(self.strategy_counts)

    @cached_property
    def n_states(self) -> int:
        return math.prod(self.strategy_counts)

    @cached_property
    def radix(self) -> tuple[int, ...]:
        # little-endian: игрок 0 занимает младший разряд
        out, mult = [], 1
        for k in self.strategy_counts:
            out.append(mult)
            mult *= k
        return tuple(out)

    def pack(self, profile: Profile) -> StateId:
        return sum(a * r for a, r in zip(profile, self.radix))

    def unpack(self, state: StateId) -> Profile:
        out = []
        for k in self.strategy_counts:
            state, a = divmod(state, k)
            out.append(a)
        return tuple(out)

    def describe(self, profile: Profile) -> str:
        if self.labels is None:
            return "(" + ",".join(str(a) for a in profile) + ")"
        return "(" + ",".join(self.labels[i][a] for i, a in enumerate(profile)) + ")"

    def class_signature(self, profile: Profile) -> str:
        return self.signature(profile) if self.signature else self.describe(profile)

    # ─────────── таблицы, кэшируемые на всё пространство состояний ───────────
    @cached_property
    def deviations(self) -> tuple[tuple[tuple[Fraction, ...], ...], ...]:
        """deviations[s][i][a] = u_i(a, s_{-i}); требует перечисления всех состояний."""
        table = []
        for profile in enumerate_states(self):
            row = []
            for i, k in enumerate(self.strategy_counts):
                row.append(tuple(self.utility(i, _replace(profile, i, a)) for a in range(k)))
            table.append(tuple(row))
        log.debug("deviation table for %s: %s states", self.name, len(table))
        return tuple(table)

    @cached_property
    def best_values(self) -> tuple[tuple[Fraction, ...], ...]:
        return tuple(tuple(max(alts) for alts in row) for row in self.deviations)

    @cached_property
    def costs(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(self.cost(p)) for p in enumerate_states(self))


def _replace(profile: Profile, player: int, strategy: int) -> Profile:
    return profile[:player] + (strategy,) + profile[player + 1:]


def deviation_set(profile: Profile, other: Profile) -> frozenset[int]:
    return frozenset(j for j, (a, b) in enumerate(zip(profile, other)) if a != b)


# ─────────────────── перечисление состояний ─────────────────────────────────
def check_state_cap(game: Game, cap: int | None = None) -> None:
    cap = settings.STATE_CAP if cap is None else cap
    if game.n_states > cap:
        raise StateSpaceTooLarge(f"{game.name}: {game.n_states} states exceed the cap {cap}")


def enumerate_states(game: Game, cap: int | None = None) -> Iterator[Profile]:
    """Все профили ровно по одному разу в порядке StateId."""
    check_state_cap(game, cap)
    for state in range(game.n_states):
        yield game.unpack(state)


# ─────────────────── лучшие ответы и равновесия ─────────────────────────────
def best_responses(game: Game, profile: Profile, player: int) -> frozenset[int]:
    values = [game.utility(player, _replace(profile, player, a))
              for a in range(game.strategy_counts[player])]
    top = max(values)
    return frozenset(a for a, v in enumerate(values) if v == top)


def nash_set(game: Game, cap: int | None = None) -> tuple[frozenset[StateId], frozenset[StateId]]:
    """(равновесия Нэша, строгие равновесия Нэша) как множества StateId."""
    check_state_cap(game, cap)
    nash, strict = set(), set()
    for state, row in enumerate(game.deviations):
        profile = game.unpack(state)
        is_nash, is_strict = True, True
        for i, alts in enumerate(row):
            top = max(alts)
            if alts[profile[i]] != top:
                is_nash = False
                break
            if sum(1 for v in alts if v == top) > 1:
                is_strict = False
        if is_nash:
            nash.add(state)
            if is_strict:
                strict.add(state)
    return frozenset(nash), frozenset(strict)


def social_cost(game: Game, profile: Profile) -> Fraction:
    return Fraction(game.cost(profile))


def optimum_cost(game: Game, cap: int | None = None) -> tuple[Fraction, frozenset[StateId]]:
    check_state_cap(game, cap)
    best = min(game.costs)
    return best, frozenset(s for s, c in enumerate(game.costs) if c == best)


# ─────────────────── потенциал ──────────────────────────────────────────────
def check_weighted_potential(game: Game, cap: int | None = None) -> PotentialViolation | None:
    """None, если тождество потенциала выполнено для всех односторонних отклонений."""
    if game.potential is None:
        raise MissingPotential(f"{game.name} has no potential attached")
    check_state_cap(game, cap)
    phi, weights = game.potential.phi, game.potential.weights
    phis = [Fraction(phi(p)) for p in enumerate_states(game)]
    for state, row in enumerate(game.deviations):
        profile = game.unpack(state)
        for i, alts in enumerate(row):
            for a in range(profile[i] + 1, len(alts)):
                other = game.pack(_replace(profile, i, a))
                if alts[profile[i]] - alts[a] != (phis[other] - phis[state]) * weights[i]:
                    return PotentialViolation(profile, i, a)
    return None


def potential_values(game: Game) -> tuple[Fraction, ...]:
    if game.potential is None:
        raise MissingPotential(f"{game.name} has no potential attached")
    return tuple(Fraction(game.potential.phi(p)) for p in enumerate_states(game))


def potential_minimizers(game: Game) -> frozenset[StateId]:
    values = potential_values(game)
    low = min(values)
    return frozenset(s for s, v in enumerate(values) if v == low)


def has_exact_potential(game: Game) -> bool:
    """Все веса равны, т.е. после масштабирования потенциал точный."""
    return game.potential is not None and len(set(game.potential.weights)) <= 1
