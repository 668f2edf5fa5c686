"""
JSON-схема игр: модели pydantic с дискриминатором "type", чтение файла
с точными рациональными числами и запись спецификации обратно в JSON.
"""
from __future__ import annotations

import json
import logging
import re
from fractions import Fraction
from pathlib import Path
from typing import Annotated, Literal, Union

from pydantic import BaseModel, Field, PlainSerializer, PlainValidator, TypeAdapter, ValidationError, model_validator

from app.errors import ParseError, SchemaError

log = logging.getLogger("game_specs")

_RATIONAL = re.compile(r"^-?\d+(/\d+)?$")


def parse_rational(value) -> Fraction:
    """'p/q' или 'n' → Fraction; десятичные дроби и float не принимаются."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int) and not isinstance(value, bool):
        return Fraction(value)
    if not isinstance(value, str) or not _RATIONAL.match(value.strip()):
        raise ValueError(f"expected a rational string 'p/q' or 'n', got {value!r}")
    numerator, _, denominator = value.strip().partition("/")
    if denominator and int(denominator) == 0:
        raise ValueError(f"zero denominator in {value!r}")
    return Fraction(int(numerator), int(denominator or 1))


def format_rational(value: Fraction) -> str:
    value = Fraction(value)
    return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"


Rational = Annotated[Fraction, PlainValidator(parse_rational), PlainSerializer(format_rational, return_type=str)]


def _positive(values: list[Fraction], field: str) -> None:
    if any(v <= 0 for v in values):
        raise ValueError(f"{field} must be positive rationals")


# ─────────────────── модели ─────────────────────────────────────────────────
class LoadBalancingSpec(BaseModel):
    type: Literal["load_balancing"] = "load_balancing"
    machines: int = Field(ge=1)
    jobs: list[Rational] = Field(min_length=1)
    name: str | None = None

    @model_validator(mode="after")
    def check_values(self):
        _positive(self.jobs, "jobs")
        return self


class ParallelLinksSpec(BaseModel):
    type: Literal["parallel_links"] = "parallel_links"
    costs: list[Rational] = Field(min_length=1)
    players: int = Field(ge=1)
    name: str | None = None

    @model_validator(mode="after")
    def check_values(self):
        _positive(self.costs, "costs")
        if any(a > b for a, b in zip(self.costs, self.costs[1:])):
            raise ValueError("costs must be nondecreasing")
        return self


class NetworkDesignSpec(BaseModel):
    type: Literal["network_design"] = "network_design"
    nodes: list[str] = Field(min_length=1)
    edges: list[tuple[str, str, Rational]]
    players: list[str] = Field(min_length=1)
    terminal: str
    name: str | None = None

    @model_validator(mode="after")
    def check_values(self):
        known = set(self.nodes)
        if len(known) != len(self.nodes):
            raise ValueError("node labels must be unique")
        for u, v, c in self.edges:
            if u not in known or v not in known:
                raise ValueError(f"edge ({u},{v}) uses an unknown node")
            if c <= 0:
                raise ValueError(f"edge ({u},{v}) must have a positive cost")
        for p in [*self.players, self.terminal]:
            if p not in known:
                raise ValueError(f"unknown node {p!r}")
        return self


class PotentialSpec(BaseModel):
    phi: list[Rational]
    weights: list[Rational]


class NormalFormSpec(BaseModel):
    type: Literal["normal_form"] = "normal_form"
    strategy_counts: list[int] = Field(min_length=1)
    utilities: list[list[Rational]]
    costs: list[Rational] | None = None
    potential: PotentialSpec | None = None
    labels: list[list[str]] | None = None
    name: str | None = None

    @model_validator(mode="after")
    def check_values(self):
        if any(k < 1 for k in self.strategy_counts):
            raise ValueError("strategy_counts must be positive")
        n_states = 1
        for k in self.strategy_counts:
            n_states *= k
        n = len(self.strategy_counts)
        if len(self.utilities) != n_states or any(len(row) != n for row in self.utilities):
            raise ValueError(f"utilities must be {n_states} rows of {n} values (StateId, then player)")
        if self.costs is not None:
            if len(self.costs) != n_states:
                raise ValueError(f"costs must have {n_states} entries")
            if any(c < 0 for c in self.costs):
                raise ValueError("costs must be nonnegative")
        if self.potential is not None:
            if len(self.potential.phi) != n_states or len(self.potential.weights) != n:
                raise ValueError("potential must give one phi per state and one weight per player")
            _positive(self.potential.weights, "potential.weights")
        if self.labels is not None and [len(x) for x in self.labels] != self.strategy_counts:
            raise ValueError("labels must match strategy_counts")
        return self


GameSpec = Annotated[
    Union[LoadBalancingSpec, ParallelLinksSpec, NetworkDesignSpec, NormalFormSpec],
    Field(discriminator="type"),
]
_adapter = TypeAdapter(GameSpec)


# ─────────────────── чтение / запись ────────────────────────────────────────
def parse_game_spec(text: str, source: str = "<string>"):
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise ParseError(f"{source}: line {err.lineno} column {err.colno}: {err.msg}") from err
    try:
        return _adapter.validate_python(raw)
    except ValidationError as err:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in e['loc']) or '<root>'}: {e['msg']}" for e in err.errors()
        )
        raise SchemaError(f"{source}: {problems}") from err


def load_game_from_file(path: Path):
    """Читает JSON-файл и строит игру (см. app.services.zoo.build_game)."""
    from app.services.zoo import build_game

    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ParseError(f"{path}: {err}") from err
    spec = parse_game_spec(text, str(path))
    log.info("loaded %s game from %s", spec.type, path)
    return build_game(spec)


def dump_game_spec(spec) -> str:
    return json.dumps(spec.model_dump(mode="json", exclude_none=True), ensure_ascii=False, indent=2)
