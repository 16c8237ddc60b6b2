"""Typed errors shared across the package."""

from __future__ import annotations


class InvalidParameterError(ValueError):
    """A parameter is outside its documented range."""


class InvalidFamilyError(ValueError):
    """An operation was applied to a graph of the wrong family."""


class SizeLimitError(ValueError):
    """Exact computation refused beyond its enumeration bound."""


class ConnectivityError(RuntimeError):
    """A node set expected to induce a connected subgraph does not."""

    def __init__(self, message: str, unreachable: int | None = None):
        super().__init__(message)
        self.unreachable = unreachable


class PartitionDegenerateError(RuntimeError):
    """A geometric partition hit an empty tile; carries the tile index."""

    def __init__(self, message: str, tile_index: tuple[int, int] | None = None):
        super().__init__(message)
        self.tile_index = tile_index


class PolicyContractError(RuntimeError):
    """A policy violated its declared rate envelope."""


class NonTerminationError(RuntimeError):
    """A run exhausted its event budget or ran out of pending events."""
