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

"""Ideal pi-pulse sequences on the normalized window [0, 1]."""

import logging
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from .errors import DomainError, ResourceError, ValidationError

logger = logging.getLogger(__name__)

#: float : Minimum separation between pulses and from the window ends.
GAP = 1e-9

#: int : Default cap on the concatenation level of :func:`cdd`.
CDD_MAX_LEVEL = 12


@dataclass(frozen=True, eq=False)
class PulseSequence:
    """
    Positions of ideal pi pulses as fractions of the total evolution time.

    Use :func:`from_positions` or the presets :func:`cpmg`, :func:`udd`,
    :func:`cdd` to build one; the constructor validates.

    Parameters
    ----------
    positions : numpy.ndarray
        Strictly increasing pulse positions :math:`\\alpha_n` in the open
        interval (0, 1).
    label : str, optional
        Name used in reports, e.g. ``"cpmg:4"``.

    """

    positions: np.ndarray
    label: str = ""

    def __post_init__(self) -> None:
        positions = np.array(self.positions, dtype=float).reshape(-1)
        _check_positions(positions)
        positions.setflags(write=False)
        object.__setattr__(self, "positions", positions)

    def __len__(self) -> int:
        return self.positions.size

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PulseSequence):
            return NotImplemented
        return np.array_equal(self.positions, other.positions)

    def __hash__(self) -> int:
        return hash(self.positions.tobytes())

    @property
    def n_pulses(self) -> int:
        """Number of pulses ``N``."""
        return self.positions.size

    @property
    def is_free(self) -> bool:
        """True for free evolution (no pulses)."""
        return self.positions.size == 0

    def intervals(self) -> np.ndarray:
        """Return the ``N + 1`` normalized intervals :math:`a_k`."""
        return intervals(self.positions)

    def signs(self) -> np.ndarray:
        """Return the switching function value :math:`(-1)^{k-1}` on each interval."""
        return signs(self.n_pulses)


def _check_positions(positions: np.ndarray) -> None:
    if positions.size == 0:
        return
    if not np.all(np.isfinite(positions)):
        msg = "pulse positions must be finite !"
        raise ValidationError(msg, invariant="physical boundary")
    if positions[0] < GAP or positions[-1] > 1.0 - GAP:
        msg = f"pulse positions must lie inside ({GAP}, {1 - GAP}), got {positions} !"
        raise ValidationError(msg, invariant="physical boundary")
    if np.any(np.diff(positions) < GAP):
        msg = f"pulse positions must increase by at least {GAP}, got {positions} !"
        raise ValidationError(msg, invariant="physical boundary")


def intervals(positions: ArrayLike) -> np.ndarray:
    """
    Return the intervals between consecutive pulses including the window ends.

    The positions are not validated, so unordered input gives signed
    intervals that still sum to one.
    """
    positions = np.asarray(positions, dtype=float)
    edges = np.concatenate(([0.0], positions, [1.0]))
    return np.diff(edges)


def signs(n_pulses: int) -> np.ndarray:
    """Return the alternating signs ``+1, -1, +1, ...`` of the ``n_pulses + 1`` intervals."""
    return np.where(np.arange(n_pulses + 1) % 2 == 0, 1.0, -1.0)


def from_positions(positions: ArrayLike, label: str = "") -> PulseSequence:
    """
    Return a validated sequence from explicit pulse positions.

    Raises
    ------
    ValidationError
        If the positions are not strictly increasing with separation
        :data:`GAP` inside (0, 1).

    """
    if not label:
        label = "pos:" + ",".join(repr(float(p)) for p in np.ravel(positions))
    return PulseSequence(np.asarray(positions, dtype=float), label)


def free() -> PulseSequence:
    """Return free evolution (no pulses)."""
    return PulseSequence(np.empty(0), "free")


def cpmg(count: int) -> PulseSequence:
    """
    Return the periodic sequence with pulses at :math:`(2n - 1) / (2N)`.

    ``count = 0`` returns free evolution.
    """
    if count < 0:
        msg = f"pulse count must be non-negative, got {count} !"
        raise DomainError(msg)
    if count == 0:
        logger.info("cpmg(0) is free evolution")
        return free()
    n = np.arange(1, count + 1)
    return PulseSequence((2 * n - 1) / (2 * count), f"cpmg:{count}")


def udd(count: int) -> PulseSequence:
    """
    Return Uhrig's sequence with pulses at :math:`\\sin^2(n\\pi / (2N + 2))`.

    The upper half is built by reflection so the sequence is exactly
    symmetric about one half.
    """
    if count < 1:
        msg = f"udd needs at least one pulse, got {count} !"
        raise DomainError(msg)
    n = np.arange(1, count + 1)
    positions = np.sin(n * np.pi / (2 * count + 2)) ** 2
    half = count // 2
    positions[count - half :] = 1.0 - positions[:half][::-1]
    if count % 2 == 1:
        positions[half] = 0.5
    # udd(1) and udd(2) coincide with CPMG up to rounding.
    grid = cpmg_positions(count)
    positions = np.where(np.abs(positions - grid) <= 4 * np.finfo(float).eps, grid, positions)
    return PulseSequence(positions, f"udd:{count}")


def cdd(level: int, max_level: int = CDD_MAX_LEVEL) -> PulseSequence:
    """
    Return concatenated decoupling of the given level.

    Each level places the previous level in both halves of the window with
    a pi pulse after each half. The pulse at the window end only flips the
    frame, so it is dropped; coincident pulse pairs cancel. The placement
    is the usual dephasing recursion and is not normative.

    Parameters
    ----------
    level : int
        Concatenation level :math:`L \\ge 1`.
    max_level : int, optional
        Largest level accepted; the pulse count is :math:`2^L - 1`.

    Raises
    ------
    ResourceError
        If ``level > max_level``.

    """
    if level < 1:
        msg = f"cdd level must be at least 1, got {level} !"
        raise DomainError(msg)
    if level > max_level:
        msg = f"cdd level {level} exceeds the cap {max_level} !"
        raise ResourceError(msg)
    positions = np.empty(0)
    for _ in range(level):
        raw = np.concatenate((0.5 * positions, [0.5], 0.5 + 0.5 * positions, [1.0]))
        positions = reduce_positions(raw)
    return PulseSequence(positions, f"cdd:{level}")


def hahn() -> PulseSequence:
    """Return the Hahn echo (a single pulse at one half)."""
    return PulseSequence(np.array([0.5]), "hahn")


def reduce_positions(raw: ArrayLike, gap: float = GAP) -> np.ndarray:
    """
    Remove pulses that act as null operations.

    Pulses within ``gap`` of 0 or 1 are dropped (a pulse at either end only
    flips the overall frame), then adjacent pairs closer than ``gap``
    cancel. End drops are applied before pair cancellation.

    Parameters
    ----------
    raw : numpy.ndarray
        Pulse positions, possibly touching the ends or each other.
    gap : float, optional
        Coincidence tolerance.

    Returns
    -------
    numpy.ndarray
        Positions of a valid sequence.

    """
    raw = np.sort(np.asarray(raw, dtype=float))
    kept = [p for p in raw if gap <= p <= 1.0 - gap]
    stack: list[float] = []
    for p in kept:
        if stack and p - stack[-1] < gap:
            stack.pop()
        else:
            stack.append(p)
    return np.array(stack, dtype=float)


def echo_residual(seq: PulseSequence) -> float:
    """
    Return the alternating sum of intervals :math:`a_1 - a_2 + \\cdots + (-1)^N a_{N+1}`.

    The echo condition is ``echo_residual(seq) == 0``.
    """
    return float(np.dot(seq.signs(), seq.intervals()))


def cpmg_positions(count: int) -> np.ndarray:
    """Return the CPMG grid :math:`(2n - 1) / (2N)` as an array."""
    n = np.arange(1, count + 1)
    return (2 * n - 1) / (2 * count)


def beta(seq: PulseSequence) -> np.ndarray:
    """
    Return the deviations :math:`\\beta_n = \\alpha_n - (2n - 1) / (2N)` from CPMG timing.

    Raises
    ------
    DomainError
        For free evolution.

    """
    if seq.is_free:
        msg = "beta is undefined for free evolution !"
        raise DomainError(msg)
    return seq.positions - cpmg_positions(seq.n_pulses)


def switching_value(seq: PulseSequence, s: float) -> float:
    """
    Return the switching function :math:`f(s)` at normalized time ``s``.

    The value is +1 before the first pulse and flips at each pulse; at a
    pulse position the value after the flip is returned.
    """
    if not 0.0 <= s <= 1.0:
        msg = f"normalized time must lie in [0, 1], got {s!r} !"
        raise DomainError(msg)
    flips = int(np.searchsorted(seq.positions, s, side="right"))
    return -1.0 if flips % 2 else 1.0


def cumulative_switching(seq: PulseSequence, s: ArrayLike) -> np.ndarray:
    """
    Return :math:`F(s) = \\int_0^s f(u) du`, exact and piecewise linear.

    Parameters
    ----------
    seq : PulseSequence
    s : float or numpy.ndarray
        Normalized times in [0, 1].

    """
    edges = np.concatenate(([0.0], seq.positions, [1.0]))
    knots = np.concatenate(([0.0], np.cumsum(seq.signs() * seq.intervals())))
    return np.interp(s, edges, knots)


def parse_sequence(spec: str) -> PulseSequence:
    """
    Build a sequence from a specification string.

    Accepted forms are ``cpmg:N``, ``udd:N``, ``cdd:L``, ``hahn``, ``free``
    and ``pos:0.1,0.5,0.9``.

    Raises
    ------
    ValidationError
        For an unknown or malformed specification.

    """
    text = spec.strip().lower()
    if text == "hahn":
        return hahn()
    if text == "free":
        return free()
    name, sep, arg = text.partition(":")
    if not sep:
        msg = f"unknown sequence spec '{spec}' !"
        raise ValidationError(msg, invariant="sequence spec")
    try:
        if name == "pos":
            values = [float(v) for v in arg.split(",") if v.strip()]
        else:
            count = int(arg)
    except ValueError as e:
        msg = f"malformed sequence spec '{spec}': {e}"
        raise ValidationError(msg, invariant="sequence spec") from e
    if name == "pos":
        return from_positions(values, label=f"pos:{arg}")
    builders = {"cpmg": cpmg, "udd": udd, "cdd": cdd}
    if name not in builders:
        msg = f"unknown sequence family '{name}' in '{spec}' !"
        raise ValidationError(msg, invariant="sequence spec")
    try:
        return builders[name](count)
    except DomainError as e:
        raise ValidationError(str(e), invariant="sequence spec") from e
