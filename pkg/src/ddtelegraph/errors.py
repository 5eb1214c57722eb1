# Copyright (c) 2024 ddtelegraph developers
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You may obtain a copy of the License at
#     https:#www.gnu.org/licenses/gpl-3.0.txt

"""Exceptions raised by ddtelegraph."""

from typing import Any


class DDTelegraphError(Exception):
    """Base class of every error raised by the library."""


class ValidationError(DDTelegraphError, ValueError):
    """
    An input violates a model or sequence invariant.

    Parameters
    ----------
    msg : str
        Human readable message.
    invariant : str, optional
        Name of the violated invariant, e.g. ``"probability conservation"``.

    """

    def __init__(self, msg: str, invariant: str | None = None) -> None:
        super().__init__(msg)
        #: str | None : Name of the violated invariant.
        self.invariant = invariant


class AmbiguityError(ValidationError):
    """The generator has more than one stationary distribution."""


class DomainError(DDTelegraphError, ValueError):
    """An argument lies outside the domain of an operation."""


class ResourceError(DDTelegraphError, ValueError):
    """A size cap was exceeded."""


class NumericalError(DDTelegraphError, ArithmeticError):
    """A numerical procedure failed."""


class ConsistencyError(NumericalError):
    """An internal identity that must hold was violated."""


class DegenerateModelError(NumericalError):
    """The third-order scalar vanishes so the cubic law cannot be resolved."""


class ResolutionError(NumericalError):
    """The measured signal sits below the floating point floor."""


class SamplingError(DDTelegraphError, RuntimeError):
    """A rejection sampler ran out of attempts."""


class OptimizationError(DDTelegraphError, RuntimeError):
    """
    No start of a multi-start minimization converged.

    Parameters
    ----------
    msg : str
        Human readable message.
    diagnostics : list[dict], optional
        Per-start information (final point, objective, gradient norm).

    """

    def __init__(self, msg: str, diagnostics: list[dict[str, Any]] | None = None) -> None:
        super().__init__(msg)
        #: list[dict] : Per-start diagnostics.
        self.diagnostics = diagnostics if diagnostics is not None else []
