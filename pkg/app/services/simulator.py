"""
Траектории logit-response динамики с фиксированным seed и параллельный
прогон реплик в пуле потоков.
"""
from __future__ import annotations

import bisect
import logging
from dataclasses import dataclass

import anyio
import numpy as np

from app.errors import InvalidParams
from app.services.dynamics import DynamicsConfig, logit_tables
from app.services.games import Game, check_state_cap

log = logging.getLogger("simulator")

_CHUNK = 65536


@dataclass(frozen=True)
class SimulationResult:
    occupancy: np.ndarray       # сколько шагов закончилось в каждом StateId
    final_state: int
    transitions: int            # шаги, на которых состояние действительно сменилось
    seed: int

    @property
    def frequencies(self) -> np.ndarray:
        return self.occupancy / self.occupancy.sum()


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def simulate(game: Game, config: DynamicsConfig, steps: int, seed: int, start: int = 0) -> SimulationResult:
    """Каждый шаг: выбрать J ~ q, каждый j ∈ J выбирает по logit против профиля ДО шага."""
    if steps < 1:
        raise InvalidParams("steps must be >= 1")
    check_state_cap(game)
    n, revision = game.n_players, config.revision
    radix = game.radix
    cdfs = [[np.cumsum(p).tolist() for p in row] for row in logit_tables(game, config.beta)]
    rng = np.random.default_rng(seed & 0xFFFFFFFFFFFFFFFF)

    if revision.kind == "custom":
        support = revision.subsets(n)
        sets = [sorted(J) for J, _ in support]
        q = np.array([float(prob) for _, prob in support])
    p = float(revision.p) if revision.kind == "independent" else None

    occupancy = np.zeros(game.n_states, dtype=np.int64)
    state, profile = start, list(game.unpack(start))
    transitions, done = 0, 0

    while done < steps:
        size = min(_CHUNK, steps - done)
        picks = rng.random((size, n))
        if revision.kind == "independent":
            movers = [np.nonzero(row)[0].tolist() for row in rng.random((size, n)) < p]
        elif revision.kind == "asynchronous":
            movers = [[j] for j in rng.integers(0, n, size).tolist()]
        else:
            movers = [sets[k] for k in rng.choice(len(sets), size=size, p=q).tolist()]

        for t in range(size):
            old, new_state = state, state
            for j in movers[t]:
                cdf = cdfs[old][j]
                a = min(bisect.bisect_right(cdf, picks[t, j]), len(cdf) - 1)
                if a != profile[j]:
                    new_state += (a - profile[j]) * radix[j]
                    profile[j] = a
            if new_state != old:
                transitions += 1
            state = new_state
            occupancy[state] += 1
        done += size

    return SimulationResult(occupancy, state, transitions, seed)


# ─────────────────── реплики в пуле потоков ─────────────────────────────────
async def simulate_replicates(game: Game, config: DynamicsConfig, steps: int, seed: int,
                              replicates: int, workers: int = 4) -> list[SimulationResult]:
    """Реплика k получает seed + k; одновременно работают не более workers потоков."""
    limiter = anyio.CapacityLimiter(workers)
    results: list[SimulationResult | None] = [None] * replicates

    async def run_one(k: int):
        results[k] = await anyio.to_thread.run_sync(
            lambda: simulate(game, config, steps, seed + k), limiter=limiter
        )
        log.info("replicate %s/%s finished (seed %s)", k + 1, replicates, seed + k)

    async with anyio.create_task_group() as tg:
        for k in range(replicates):
            tg.start_soon(run_one, k)
    return results
