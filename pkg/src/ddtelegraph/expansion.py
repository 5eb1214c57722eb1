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

"""
Short-time expansion of the decoherence function.

Under the echo condition the only surviving term up to third order in time
is :math:`G \\, t^3 \\sum_j [W \\Gamma W y(0)]_j`, with

.. math:: G = -\\int_0^1 f(s_3) \\int_0^{s_3} \\int_0^{s_2} f(s_1) \\, ds_1 ds_2 ds_3.

Writing :math:`F(s) = \\int_0^s f` and :math:`D(s) = \\int_0^s F`, this is
:math:`G = \\int_0^1 F^2 - F(1) D(1)`.
"""

import logging
from dataclasses import dataclass
from math import factorial
from typing import Any

import numpy as np
from numpy.typing import ArrayLike

from . import engine
from .errors import (
    ConsistencyError,
    DegenerateModelError,
    DomainError,
    ResolutionError,
    ResourceError,
    ValidationError,
)
from .noise import NoiseModel
from .pulses import PulseSequence, cpmg_positions, echo_residual

logger = logging.getLogger(__name__)

#: float : Echo residual below which a sequence is treated as echo-satisfying.
ECHO_TOL = 1e-12

#: float : Largest tolerated linear-in-lambda coefficient of the scaled coefficient.
LINEAR_TOL = 1e-10

#: int : Largest order accepted by :func:`word_expansion`.
WORD_MAX_ORDER = 4

#: int : Largest pulse count accepted by :func:`word_expansion`.
WORD_MAX_PULSES = 6

# Interpolation nodes for the cubic in lambda.
_LAMBDA_NODES = np.array([0.0, 1.0, -1.0, 2.0])


@dataclass(frozen=True)
class ExpansionReport:
    """
    Third-order coefficient and its decomposition around CPMG timing.

    ``g_total = constant_part + quadratic_part + cubic_part``.
    """

    #: float : The coefficient :math:`G_N`.
    g_total: float
    #: float : The part :math:`h_N` quadratic in the deviations.
    quadratic_part: float
    #: float : The part :math:`g_N` cubic in the deviations.
    cubic_part: float
    #: float : :math:`1 / (12 N^2)`.
    constant_part: float
    #: float | None : :math:`\sum_j [W \Gamma W y(0)]_j`.
    scalar_s: float | None = None
    #: float | None : ``g_total * scalar_s``, the coefficient of :math:`t^3`.
    predicted_cubic: float | None = None

    def to_dict(self) -> dict[str, Any]:
        """Return the report with the field names as keys."""
        return {
            "g_total": self.g_total,
            "quadratic_part": self.quadratic_part,
            "cubic_part": self.cubic_part,
            "constant_part": self.constant_part,
            "scalar_s": self.scalar_s,
            "predicted_cubic": self.predicted_cubic,
        }


def _accumulate(positions: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Piecewise polynomial pass over the intervals.

    Returns ``G``, ``F(1)`` and ``D(1)`` along the leading axes of
    ``positions`` (shape ``(..., N)``). Interval lengths enter as signed
    numbers so unordered positions evaluate the polynomial extension.
    """
    positions = np.asarray(positions, dtype=float)
    batch = positions.shape[:-1]
    n = positions.shape[-1]
    edges = np.concatenate(
        (np.zeros(batch + (1,)), positions, np.ones(batch + (1,))), axis=-1
    )
    lengths = np.diff(edges, axis=-1)
    F = np.zeros(batch)
    D = np.zeros(batch)
    G = np.zeros(batch)
    for k in range(n + 1):
        sigma = 1.0 if k % 2 == 0 else -1.0
        L = lengths[..., k]
        G -= sigma * (D * L + F * L**2 / 2 + sigma * L**3 / 6)
        D = D + F * L + sigma * L**2 / 2
        F = F + sigma * L
    return G, F, D


def g3(seq: PulseSequence | ArrayLike) -> float:
    """
    Return the normalized third-order coefficient :math:`G`.

    The triple time-ordered integral is accumulated exactly, interval by
    interval: on an interval of sign :math:`\\sigma` starting with
    :math:`F_0, D_0`, :math:`F = F_0 + \\sigma u` and
    :math:`D = D_0 + F_0 u + \\sigma u^2 / 2`, and :math:`-\\sigma \\int D`
    is added to the result.

    Parameters
    ----------
    seq : PulseSequence or numpy.ndarray
        A sequence, or raw pulse positions (not validated, so points outside
        the physical boundary evaluate the polynomial extension).

    Returns
    -------
    float
        :math:`G`; for echo-satisfying sequences
        :math:`\\langle x(t) \\rangle = 1 + G s t^3 + O(t^4)` with
        ``s = third_order_scalar(model)``.

    """
    positions = seq.positions if isinstance(seq, PulseSequence) else np.asarray(seq, dtype=float)
    return float(_accumulate(positions)[0])


def g3_batch(positions: ArrayLike) -> np.ndarray:
    """Vectorized :func:`g3` over the rows of a ``(M, N)`` array of positions."""
    return _accumulate(np.atleast_2d(positions))[0]


def _switching_integrals(positions: np.ndarray) -> tuple[np.ndarray, np.ndarray, float, float]:
    # F and D evaluated at each pulse position, and at s = 1.
    lengths = np.diff(np.concatenate(([0.0], positions, [1.0])))
    n = positions.size
    F_at = np.empty(n)
    D_at = np.empty(n)
    F = D = 0.0
    for k in range(n + 1):
        sigma = 1.0 if k % 2 == 0 else -1.0
        L = lengths[k]
        D = D + F * L + sigma * L**2 / 2
        F = F + sigma * L
        if k < n:
            F_at[k] = F
            D_at[k] = D
    return F_at, D_at, F, D


def g3_gradient(positions: ArrayLike) -> np.ndarray:
    """
    Return :math:`\\partial G / \\partial \\alpha_n`.

    Moving pulse :math:`n` by :math:`d\\alpha` changes :math:`F` by
    :math:`2\\sigma_n d\\alpha` after it, giving

    .. math:: \\partial G / \\partial \\alpha_n = 2\\sigma_n [D(1) - 2 D(\\alpha_n) - F(1)(1 - \\alpha_n)]

    with :math:`\\sigma_n = (-1)^{n-1}` the sign before pulse :math:`n`.
    """
    positions = np.asarray(positions, dtype=float)
    F_at, D_at, F1, D1 = _switching_integrals(positions)
    sigma = np.where(np.arange(positions.size) % 2 == 0, 1.0, -1.0)
    return 2 * sigma * (D1 - 2 * D_at - F1 * (1 - positions))


def g3_hessian(positions: ArrayLike) -> np.ndarray:
    """
    Return the Hessian of :math:`G` with respect to the pulse positions.

    Off the diagonal :math:`-4\\sigma_n\\sigma_m |\\alpha_n - \\alpha_m|`,
    on the diagonal :math:`2\\sigma_n [F(1) - 2F(\\alpha_n)]`.
    """
    positions = np.asarray(positions, dtype=float)
    F_at, _, F1, _ = _switching_integrals(positions)
    sigma = np.where(np.arange(positions.size) % 2 == 0, 1.0, -1.0)
    H = -4 * np.outer(sigma, sigma) * np.abs(positions[:, None] - positions[None, :])
    np.fill_diagonal(H, 2 * sigma * (F1 - 2 * F_at))
    return H


def cubic_coefficients(beta: ArrayLike) -> np.ndarray:
    """
    Return the coefficients of :math:`\\lambda \\mapsto G(\\mathrm{CPMG} + \\lambda\\beta)`.

    :math:`G` is a cubic polynomial in the pulse positions, so four values
    at :math:`\\lambda \\in \\{0, \\pm 1, 2\\}` determine it exactly.

    Returns
    -------
    numpy.ndarray
        ``[c0, c1, c2, c3]`` in increasing powers of :math:`\\lambda`.

    """
    beta = np.asarray(beta, dtype=float)
    grid = cpmg_positions(beta.size)
    values = g3_batch(grid[None, :] + _LAMBDA_NODES[:, None] * beta[None, :])
    vander = np.vander(_LAMBDA_NODES, 4, increasing=True)
    return np.linalg.solve(vander, values)


def _parts(beta: np.ndarray) -> tuple[float, float, float]:
    n = beta.size
    constant = 1.0 / (12.0 * n**2)
    c = cubic_coefficients(beta)
    if abs(c[1]) > LINEAR_TOL:
        msg = (
            f"linear term {c[1]!r} of the scaled coefficient does not vanish, "
            "the echo condition is violated"
        )
        raise ConsistencyError(msg)
    quadratic, cubic = float(c[2]), float(c[3])
    if quadratic < -LINEAR_TOL:
        msg = f"quadratic part {quadratic!r} is negative"
        raise ConsistencyError(msg)
    return constant, max(quadratic, 0.0), cubic


def g3_parts(seq: PulseSequence) -> ExpansionReport:
    """
    Decompose :math:`G` into :math:`1/(12N^2) + h_N + g_N`.

    :math:`h_N` and :math:`g_N` are the degree two and three parts of the
    cubic :math:`\\lambda \\mapsto G(\\mathrm{CPMG} + \\lambda\\beta)`; the
    linear part vanishes under the echo condition.

    Returns
    -------
    ExpansionReport
        Without the model-dependent fields.

    Raises
    ------
    DomainError
        For free evolution.
    ValidationError
        If the sequence violates the echo condition.
    ConsistencyError
        If the linear part still exceeds :data:`LINEAR_TOL`.

    """
    if seq.is_free:
        msg = "the CPMG decomposition needs at least one pulse !"
        raise DomainError(msg)
    residual = echo_residual(seq)
    if abs(residual) > ECHO_TOL:
        msg = f"the CPMG decomposition needs an echo sequence, residual is {residual!r} !"
        raise ValidationError(msg, invariant="echo condition")
    beta = seq.positions - cpmg_positions(seq.n_pulses)
    constant, quadratic, cubic = _parts(beta)
    return ExpansionReport(
        g_total=constant + quadratic + cubic,
        quadratic_part=quadratic,
        cubic_part=cubic,
        constant_part=constant,
    )


def third_order_scalar(model: NoiseModel) -> float:
    """Return :math:`\\sum_j [W \\Gamma W y(0)]_j`."""
    w = model.levels
    return float(np.sum(w * (model.generator @ (w * model.initial_distribution))))


def expansion_report(model: NoiseModel, seq: PulseSequence) -> ExpansionReport:
    """Return :func:`g3_parts` completed with the third-order scalar and the predicted cubic."""
    parts = g3_parts(seq)
    s = third_order_scalar(model)
    return ExpansionReport(
        g_total=parts.g_total,
        quadratic_part=parts.quadratic_part,
        cubic_part=parts.cubic_part,
        constant_part=parts.constant_part,
        scalar_s=s,
        predicted_cubic=parts.g_total * s,
    )


def fit_cubic(model: NoiseModel, seq: PulseSequence, samples: int = 7) -> float:
    """
    Measure the :math:`t^3` coefficient of :math:`\\langle x(t) \\rangle - 1` from the exact engine.

    Times :math:`t_i = t_0 2^{-i}` are used, with :math:`t_0` such that the
    predicted decoherence at :math:`t_0` is :math:`10^{-5}`. The ratios
    :math:`(\\mathrm{Re}\\langle x(t_i) \\rangle - 1)/t_i^3` are refined by two
    levels of Richardson extrapolation in :math:`t`.

    Raises
    ------
    DegenerateModelError
        If ``third_order_scalar(model) == 0``.
    ResolutionError
        If the measured decoherence is below the floating point floor.

    """
    s = third_order_scalar(model)
    if s == 0:
        msg = "third order scalar vanishes, no cubic law to fit !"
        raise DegenerateModelError(msg)
    residual = echo_residual(seq)
    if abs(residual) > ECHO_TOL:
        logger.warning(f"echo residual {residual!r}, the t^3 law is not the leading term")
    predicted = g3(seq) * s
    t0 = (1e-5 / abs(predicted)) ** (1.0 / 3.0)
    times = t0 * 2.0 ** (-np.arange(samples))
    deviation = np.array([engine.coherence(model, seq, t).value.real - 1.0 for t in times])
    if abs(deviation[0]) < 1e-12:
        msg = f"decoherence {deviation[0]!r} at t = {t0!r} is below the numerical floor !"
        raise ResolutionError(msg)
    table = [deviation / times**3]
    for j in range(1, 3):
        prev = table[-1]
        table.append((2**j * prev[1:] - prev[:-1]) / (2**j - 1))
    estimate = float(table[-1][0])
    logger.info(f"fit_cubic: t0 = {t0:.3e}, estimate {estimate!r}, predicted {predicted!r}")
    return estimate


def contract(model: NoiseModel, word: str) -> float:
    """
    Return :math:`\\sum_j [w \\, y(0)]_j` for a word over ``"G"`` (:math:`\\Gamma`) and ``"W"``.

    The word is read as a matrix product, its rightmost letter acting first.
    """
    y = model.initial_distribution.copy()
    for letter in reversed(word):
        if letter == "G":
            y = model.generator @ y
        elif letter == "W":
            y = model.levels * y
        else:
            msg = f"unknown letter '{letter}' in word '{word}' !"
            raise DomainError(msg)
    return float(y.sum())


def word_expansion(seq: PulseSequence, order: int = 3) -> dict[str, complex]:
    """
    Expand :math:`\\langle x(t) \\rangle` into ordered words over :math:`\\Gamma` and :math:`W`.

    Each interval exponential :math:`e^{(\\Gamma + i s_k W) a_k t}` is
    expanded to ``order`` and the products collected by letter ordering, so
    that

    .. math:: \\langle x(t) \\rangle = \\sum_w c_w t^{|w|} \\sum_j [w \\, y(0)]_j + O(t^{\\mathrm{order}+1}).

    The factors :math:`i^{\\#W}` and the interval signs are folded into
    :math:`c_w`.

    Parameters
    ----------
    seq : PulseSequence
        At most :data:`WORD_MAX_PULSES` pulses.
    order : int, optional
        Highest word length, at most :data:`WORD_MAX_ORDER`.

    Returns
    -------
    dict[str, complex]
        Coefficients keyed by words such as ``"WGW"``, sorted
        lexicographically, the empty word included.

    Raises
    ------
    ResourceError
        If the order or pulse count caps are exceeded.

    """
    if order > WORD_MAX_ORDER or order < 0:
        msg = f"word expansion order must be in [0, {WORD_MAX_ORDER}], got {order} !"
        raise ResourceError(msg)
    if seq.n_pulses > WORD_MAX_PULSES:
        msg = f"word expansion supports at most {WORD_MAX_PULSES} pulses, got {seq.n_pulses} !"
        raise ResourceError(msg)

    # All words of each length with their number of W letters.
    words_by_length: list[list[tuple[str, int]]] = [[("", 0)]]
    for _ in range(order):
        words_by_length.append(
            [(u + letter, nw + (letter == "W")) for u, nw in words_by_length[-1] for letter in "GW"]
        )

    coefficients: dict[str, complex] = {"": 1.0 + 0.0j}
    for a, s in zip(seq.intervals(), seq.signs(), strict=True):
        updated: dict[str, complex] = {}
        for word, c in coefficients.items():
            for m in range(order - len(word) + 1):
                weight = a**m / factorial(m)
                for u, nw in words_by_length[m]:
                    # Later intervals multiply from the left.
                    key = u + word
                    updated[key] = updated.get(key, 0.0) + c * weight * (1j * s) ** nw
        coefficients = updated
    return dict(sorted(coefficients.items()))
