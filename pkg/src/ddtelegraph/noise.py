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

"""Multi-state telegraph-like noise processes."""

import logging
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import ArrayLike
from scipy.linalg import expm, null_space, solve

from .errors import AmbiguityError, DomainError, NumericalError, ValidationError

logger = logging.getLogger(__name__)

#: float : Tolerance on sums that are exact by construction (column sums, normalization).
SUM_TOL = 1e-12

#: float : Tolerance on the stationarity residual Gamma @ y(0).
STATIONARY_TOL = 1e-10

#: int : Largest number of noise levels accepted.
MAX_LEVELS = 64


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class NoiseModel:
    """
    A telegraph-like noise jumping among discrete frequency levels.

    The probability vector evolves as ``dY/dt = generator @ Y`` (column
    convention), so the rate from state ``j`` to state ``k != j`` is
    ``generator[k, j]``.

    Parameters
    ----------
    levels : numpy.ndarray
        The ``K`` angular frequencies :math:`w_j`.
    generator : numpy.ndarray
        The ``K x K`` rate matrix :math:`\\Gamma`.
    initial_distribution : numpy.ndarray, optional
        The initial (stationary) probability vector :math:`y(0)`. If omitted
        it is computed with :func:`stationary_distribution`.

    Raises
    ------
    ValidationError
        If any invariant of the model is violated.

    """

    levels: np.ndarray
    generator: np.ndarray
    initial_distribution: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        levels = np.asarray(self.levels, dtype=float).reshape(-1)
        generator = np.atleast_2d(np.asarray(self.generator, dtype=float))
        if self.initial_distribution is None:
            initial = stationary_distribution(generator)
        else:
            initial = np.asarray(self.initial_distribution, dtype=float).reshape(-1)
        object.__setattr__(self, "levels", _readonly(levels))
        object.__setattr__(self, "generator", _readonly(generator))
        object.__setattr__(self, "initial_distribution", _readonly(initial))
        self.validate()

    @property
    def n_levels(self) -> int:
        """Number of noise levels ``K``."""
        return self.levels.size

    @property
    def W(self) -> np.ndarray:
        """Diagonal matrix of the levels."""
        return np.diag(self.levels)

    def validate(self) -> None:
        """
        Check every invariant of the model.

        Raises
        ------
        ValidationError
            With :attr:`ValidationError.invariant` naming the first violated
            invariant.

        """
        _check_generator(self.generator, self.n_levels)
        y0 = self.initial_distribution
        if y0.shape != (self.n_levels,):
            msg = f"initial distribution has shape {y0.shape}, expected ({self.n_levels},) !"
            raise ValidationError(msg, invariant="shape")
        if not np.all(np.isfinite(self.levels)):
            msg = "levels must be finite !"
            raise ValidationError(msg, invariant="finite levels")
        if np.any(y0 < 0):
            msg = f"initial distribution has negative entries {y0} !"
            raise ValidationError(msg, invariant="normalization")
        if abs(y0.sum() - 1.0) > SUM_TOL:
            msg = f"initial distribution sums to {y0.sum()!r}, not 1 !"
            raise ValidationError(msg, invariant="normalization")
        residual = self.generator @ y0
        if np.max(np.abs(residual)) > STATIONARY_TOL:
            msg = (
                "initial distribution is not stationary, "
                f"max |Gamma y(0)| = {np.max(np.abs(residual))!r} !"
            )
            raise ValidationError(msg, invariant="stationarity")

    def is_absorbing(self) -> np.ndarray:
        """Return a boolean mask of the states that are never left."""
        return np.diag(self.generator) == 0

    def to_dict(self) -> dict[str, Any]:
        """Return a JSON-ready representation with keys ``levels``, ``generator``, ``initial``."""
        return {
            "levels": self.levels.tolist(),
            "generator": self.generator.tolist(),
            "initial": self.initial_distribution.tolist(),
        }

    @classmethod
    def from_dict(cls, config: Mapping[str, Any]) -> "NoiseModel":
        """
        Build a model from a mapping with keys ``levels``, ``generator`` and optional ``initial``.

        Raises
        ------
        ValidationError
            If a key is missing, unknown or malformed, or the model is invalid.

        """
        allowed = {"levels", "generator", "initial"}
        unknown = set(config) - allowed
        if unknown:
            msg = f"unknown configuration keys {sorted(unknown)} !"
            raise ValidationError(msg, invariant="configuration")
        for key in ("levels", "generator"):
            if key not in config:
                msg = f"missing configuration key '{key}' !"
                raise ValidationError(msg, invariant="configuration")
        try:
            levels = np.asarray(config["levels"], dtype=float)
            generator = np.asarray(config["generator"], dtype=float)
            initial = config.get("initial")
            if initial is not None:
                initial = np.asarray(initial, dtype=float)
        except (TypeError, ValueError) as e:
            msg = f"malformed numeric field in configuration: {e}"
            raise ValidationError(msg, invariant="configuration") from e
        if levels.ndim != 1:
            msg = "field 'levels' must be a flat list of numbers !"
            raise ValidationError(msg, invariant="configuration")
        return cls(levels, generator, initial)


def _check_generator(generator: np.ndarray, n_levels: int) -> None:
    if n_levels < 1:
        msg = "a noise model needs at least one level !"
        raise ValidationError(msg, invariant="shape")
    if n_levels > MAX_LEVELS:
        msg = f"{n_levels} levels exceed the supported maximum {MAX_LEVELS} !"
        raise ValidationError(msg, invariant="shape")
    if generator.shape != (n_levels, n_levels):
        msg = f"generator has shape {generator.shape}, expected ({n_levels}, {n_levels}) !"
        raise ValidationError(msg, invariant="shape")
    if not np.all(np.isfinite(generator)):
        msg = "generator entries must be finite !"
        raise ValidationError(msg, invariant="generator sign")
    off = generator[~np.eye(n_levels, dtype=bool)]
    if np.any(off < 0):
        msg = "off-diagonal generator entries must be non-negative !"
        raise ValidationError(msg, invariant="generator sign")
    if np.any(np.diag(generator) > 0):
        msg = "diagonal generator entries must be non-positive !"
        raise ValidationError(msg, invariant="generator sign")
    scale = max(1.0, float(np.max(np.abs(generator))))
    col_sums = generator.sum(axis=0)
    if np.max(np.abs(col_sums)) > SUM_TOL * scale:
        msg = (
            "generator columns must sum to zero (probability conservation), "
            f"got column sums {col_sums} !"
        )
        raise ValidationError(msg, invariant="probability conservation")


def two_state_rtn(amplitude: float, rate: float) -> NoiseModel:
    """
    Return symmetric random telegraph noise switching between ``+amplitude`` and ``-amplitude``.

    Parameters
    ----------
    amplitude : float
        Angular frequency :math:`\\omega` of the two levels.
    rate : float
        Switching rate :math:`\\gamma > 0`.

    Returns
    -------
    NoiseModel

    """
    if not rate > 0:
        msg = f"switching rate must be positive, got {rate!r} !"
        raise ValidationError(msg, invariant="generator sign")
    levels = np.array([amplitude, -amplitude], dtype=float)
    generator = np.array([[-rate, rate], [rate, -rate]], dtype=float)
    return NoiseModel(levels, generator, np.array([0.5, 0.5]))


def stationary_distribution(generator: ArrayLike) -> np.ndarray:
    """
    Return the unique normalized null vector of the generator.

    Parameters
    ----------
    generator : numpy.ndarray
        Valid ``K x K`` rate matrix.

    Returns
    -------
    numpy.ndarray
        Probability vector :math:`v` with :math:`\\Gamma v = 0`.

    Raises
    ------
    AmbiguityError
        If the chain is reducible (null space of dimension above one).
    NumericalError
        If the normalized null vector has a significantly negative entry.

    """
    generator = np.atleast_2d(np.asarray(generator, dtype=float))
    _check_generator(generator, generator.shape[0])
    scale = max(1.0, float(np.max(np.abs(generator))))
    kernel = null_space(generator, rcond=1e-12 * generator.shape[0])
    if kernel.shape[1] != 1:
        msg = f"generator has a {kernel.shape[1]}-dimensional null space (reducible chain) !"
        raise AmbiguityError(msg, invariant="unique stationary distribution")
    v = kernel[:, 0] / kernel[:, 0].sum()
    if np.any(v < -STATIONARY_TOL):
        msg = f"stationary vector has negative components {v} !"
        raise NumericalError(msg)
    v = np.clip(v, 0.0, None)
    v /= v.sum()
    logger.debug(f"stationary distribution {v}, residual {np.abs(generator @ v).max() / scale}")
    return v


def mean_level(model: NoiseModel) -> float:
    """Return the stationary mean :math:`\\sum_j w_j y_j(0)`."""
    return float(model.levels @ model.initial_distribution)


def correlation(model: NoiseModel, lag: float) -> float:
    """
    Return the stationary correlation :math:`\\langle w(t+\\tau) w(t) \\rangle`.

    Parameters
    ----------
    model : NoiseModel
    lag : float
        Time lag :math:`\\tau \\ge 0`.

    Returns
    -------
    float
        :math:`\\sum_j [W e^{\\Gamma \\tau} W y(0)]_j`.

    Notes
    -----
    The propagator is :math:`e^{\\Gamma\\tau}`, which decays because the
    eigenvalues of :math:`\\Gamma` have non-positive real part. The sign
    :math:`e^{-\\Gamma\\tau}` sometimes written in the literature grows
    instead and is not used.

    """
    if lag < 0:
        msg = f"correlation lag must be non-negative, got {lag!r} !"
        raise DomainError(msg)
    w = model.levels
    y0 = model.initial_distribution
    if lag == 0:
        return float(np.sum(w**2 * y0))
    return float(np.sum(w * (expm(model.generator * lag) @ (w * y0))))


def spectral_density(model: NoiseModel, frequency: float) -> float:
    """
    Return the power spectrum of the fluctuations around the mean level.

    Parameters
    ----------
    model : NoiseModel
        An ergodic model (unique stationary distribution).
    frequency : float
        Angular frequency :math:`\\nu`.

    Returns
    -------
    float
        :math:`S(\\nu) = \\int_{-\\infty}^{\\infty} [C(|\\tau|) - \\langle w \\rangle^2] e^{i\\nu\\tau} d\\tau`.

    Notes
    -----
    With :math:`\\Pi = y(0) 1^T`, :math:`e^{\\Gamma\\tau} - \\Pi = e^{(\\Gamma - \\Pi)\\tau} - e^{-\\tau}\\Pi`,
    and :math:`\\Gamma - \\Pi` is stable, so the half-line transform is

    .. math:: (\\Pi - \\Gamma - i\\nu)^{-1} - \\Pi / (1 - i\\nu).

    For symmetric telegraph noise this is the Lorentzian
    :math:`4\\gamma\\omega^2 / (4\\gamma^2 + \\nu^2)`.

    """
    K = model.n_levels
    w = model.levels
    y0 = model.initial_distribution
    Pi = np.outer(y0, np.ones(K))
    A = Pi - model.generator - 1j * frequency * np.eye(K)
    half = solve(A, w * y0) - y0 * (w @ y0) / (1 - 1j * frequency)
    return float(2.0 * np.real(np.sum(w * half)))
