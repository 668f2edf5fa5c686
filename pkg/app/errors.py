"""Ошибки анализатора: у каждой есть код выхода CLI и человекочитаемое описание."""


class StabilityError(Exception):
    exit_code = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


# ───────────── ошибки входных данных (exit 2) ─────────────
class InvalidParams(StabilityError):
    exit_code = 2


class ParseError(StabilityError):
    exit_code = 2


class SchemaError(StabilityError):
    exit_code = 2


class UnknownBuiltin(StabilityError):
    exit_code = 2


class TooManyPaths(StabilityError):
    exit_code = 2


class DisconnectedPlayer(StabilityError):
    exit_code = 2


class MissingPotential(StabilityError):
    exit_code = 2


class EmptyStrategySet(StabilityError):
    exit_code = 2


# ───────────── размер пространства состояний (exit 3) ─────
class StateSpaceTooLarge(StabilityError):
    exit_code = 3


class TooLarge(StabilityError):
    exit_code = 3


# ───────────── внутренние противоречия (exit 4) ───────────
class Unreachable(StabilityError):
    exit_code = 4


class ReducibleChain(StabilityError):
    exit_code = 4


class SolveFailure(StabilityError):
    exit_code = 4


class InternalInconsistency(StabilityError):
    exit_code = 4


# ───────────── численная проверка не сошлась (exit 5) ─────
class VerificationMismatch(StabilityError):
    exit_code = 5
