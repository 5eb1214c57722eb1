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

"""Exact decoherence function of a qubit in telegraph-like noise under pulse control."""

import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike
from scipy.integrate import solve_ivp
from scipy.linalg import eig, solve

from .errors import DomainError, NumericalError, ResourceError
from .noise import MAX_LEVELS, NoiseModel
from .pulses import PulseSequence

logger = logging.getLogger(__name__)

#: float : Largest eigenvector condition number accepted by :class:`PropagatorCache`.
EIG_CONDITION_MAX = 1e8

#: float : Largest relative error of :math:`V \Lambda V^{-1}` accepted by :class:`PropagatorCache`.
RECONSTRUCTION_TOL = 1e-12

# Pade coefficients b_0 .. b_13 of the degree 13 diagonal approximant.
_PADE_B = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)
_THETA_13 = 5.371920351148152


@dataclass(frozen=True)
class DecoherenceSample:
    """
    Value of the decoherence function at one time.

    Parameters
    ----------
    t : float
        Total evolution time.
    value : complex
        :math:`\\langle x(t) \\rangle`.

    """

    t: float
    value: complex

    def __post_init__(self) -> None:
        if abs(self.value) > 1.0 + 1e-10:
            msg = f"|<x({self.t})>| = {abs(self.value)!r} exceeds one !"
            raise NumericalError(msg)

    @property
    def magnitude(self) -> float:
        """:math:`|\\langle x(t) \\rangle|`."""
        return abs(self.value)


def matrix_exponential(A: ArrayLike) -> np.ndarray:
    """
    Return the exponential of a square matrix.

    Scaling and squaring with the degree 13 Pade approximant: the matrix is
    scaled by :math:`2^{-s}` so its one-norm is below :math:`\\theta_{13}`,
    the approximant :math:`(V - U)^{-1}(V + U)` is evaluated and squared
    :math:`s` times. Diagonal input is exponentiated entrywise.

    Parameters
    ----------
    A : numpy.ndarray
        Finite ``K x K`` matrix, real or complex, ``K <= 64``.

    Returns
    -------
    numpy.ndarray

    Raises
    ------
    DomainError
        For non-finite entries or a non-square matrix.
    ResourceError
        For ``K > 64``.

    """
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        msg = f"matrix exponential needs a square matrix, got shape {A.shape} !"
        raise DomainError(msg)
    if A.shape[0] > MAX_LEVELS:
        msg = f"matrix of size {A.shape[0]} exceeds the supported {MAX_LEVELS} !"
        raise ResourceError(msg)
    if not np.all(np.isfinite(A)):
        msg = "matrix exponential needs finite entries !"
        raise DomainError(msg)
    dtype = np.result_type(A.dtype, float)
    A = A.astype(dtype)
    n = A.shape[0]

    if np.count_nonzero(A - np.diag(np.diagonal(A))) == 0:
        return np.diag(np.exp(np.diagonal(A)))

    norm = np.max(np.sum(np.abs(A), axis=0))
    s = max(0, int(np.ceil(np.log2(norm / _THETA_13)))) if norm > 0 else 0
    A = A * 2.0 ** (-s)

    b = _PADE_B
    eye = np.eye(n, dtype=dtype)
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A2 @ A4
    U = A @ (
        A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * eye
    )
    V = A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * eye
    R = solve(V - U, V + U)
    for _ in range(s):
        R = R @ R
    return R


class PropagatorCache:
    """
    Eigendecompositions of :math:`\\Gamma \\pm iW` reused across many times.

    The cache is only active when both matrices are diagonalizable with an
    eigenvector condition number below ``max_condition`` and the decomposition
    reproduces the matrix to :data:`RECONSTRUCTION_TOL`; otherwise
    :meth:`apply` falls back to :func:`matrix_exponential`.

    Parameters
    ----------
    model : NoiseModel
    max_condition : float, optional
        Threshold on the eigenvector condition number.

    """

    def __init__(self, model: NoiseModel, max_condition: float = EIG_CONDITION_MAX) -> None:
        self.model = model

        #: dict[float, tuple] : Eigenvalues, eigenvectors and inverse per sign.
        self.decompositions: dict[float, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}

        #: bool : Whether the eigendecompositions are used.
        self.active = True

        for sign in (1.0, -1.0):
            A = model.generator + 1j * sign * model.W
            evals, evecs = eig(A)
            cond = np.linalg.cond(evecs)
            if np.isfinite(cond) and cond <= max_condition:
                evecs_inv = np.linalg.inv(evecs)
                scale = max(1.0, float(np.max(np.abs(A))))
                residual = np.max(np.abs((evecs * evals) @ evecs_inv - A)) / scale
            else:
                residual = np.inf
            # Nearly defective matrices pass the condition test but not this one.
            if residual > RECONSTRUCTION_TOL:
                logger.info(
                    f"eigendecomposition rejected (condition {cond:.3e}, residual {residual:.3e}), "
                    "using scaling and squaring"
                )
                self.active = False
                self.decompositions = {}
                break
            self.decompositions[sign] = (evals, evecs, evecs_inv)

    def apply(self, sign: float, duration: float, y: np.ndarray) -> np.ndarray:
        """Return :math:`e^{(\\Gamma + i\\,\\mathrm{sign}\\,W)\\,\\mathrm{duration}} y`."""
        if not self.active:
            A = self.model.generator + 1j * sign * self.model.W
            return matrix_exponential(A * duration) @ y
        evals, evecs, evecs_inv = self.decompositions[sign]
        return evecs @ (np.exp(evals * duration) * (evecs_inv @ y))


def coherence_from_intervals(
    model: NoiseModel,
    lengths: ArrayLike,
    signs: ArrayLike,
    t: float,
    cache: PropagatorCache | None = None,
) -> complex:
    """
    Return :math:`\\sum_j [\\prod_k e^{(\\Gamma + i s_k W) a_k t} y(0)]_j`.

    The product is accumulated right to left as matrix-vector products, the
    first interval acting first.

    Parameters
    ----------
    model : NoiseModel
    lengths : numpy.ndarray
        Normalized interval lengths :math:`a_k`.
    signs : numpy.ndarray
        Switching function value on each interval.
    t : float
        Total time.
    cache : PropagatorCache, optional
        Reuse eigendecompositions instead of exponentiating each interval.

    """
    if t < 0:
        msg = f"evolution time must be non-negative, got {t!r} !"
        raise DomainError(msg)
    if t == 0:
        return 1.0 + 0.0j
    y = model.initial_distribution.astype(complex)
    for a, s in zip(np.asarray(lengths, dtype=float), np.asarray(signs, dtype=float), strict=True):
        if a == 0:
            continue
        if cache is not None:
            y = cache.apply(s, a * t, y)
        else:
            A = (model.generator + 1j * s * model.W) * (a * t)
            y = matrix_exponential(A) @ y
    return complex(y.sum())


def coherence(
    model: NoiseModel,
    seq: PulseSequence,
    t: float,
    cache: PropagatorCache | None = None,
) -> DecoherenceSample:
    """
    Return the exact decoherence function :math:`\\langle x(t) \\rangle`.

    Parameters
    ----------
    model : NoiseModel
    seq : PulseSequence
    t : float
        Total evolution time, pulses act at :math:`\\alpha_n t`.
    cache : PropagatorCache, optional
        Eigendecomposition cache for dense time grids.

    Returns
    -------
    DecoherenceSample

    """
    value = coherence_from_intervals(model, seq.intervals(), seq.signs(), t, cache)
    return DecoherenceSample(float(t), value)


def curve(
    model: NoiseModel,
    seq: PulseSequence,
    grid: Sequence[float] | np.ndarray,
    use_cache: bool = False,
    workers: int = 1,
) -> list[DecoherenceSample]:
    """
    Evaluate :func:`coherence` on a grid of times.

    Parameters
    ----------
    model : NoiseModel
    seq : PulseSequence
    grid : list[float]
        Sorted non-negative times.
    use_cache : bool, optional
        Use a :class:`PropagatorCache` when the model allows it.
    workers : int, optional
        Threads used to evaluate grid points. Each point is computed
        independently so the result does not depend on this value.

    Raises
    ------
    DomainError
        If the grid is unsorted or has negative times.

    """
    grid = np.asarray(grid, dtype=float).reshape(-1)
    if grid.size and grid[0] < 0:
        msg = "time grid must be non-negative !"
        raise DomainError(msg)
    if np.any(np.diff(grid) < 0):
        msg = "time grid must be sorted !"
        raise DomainError(msg)
    cache = PropagatorCache(model) if use_cache else None

    def point(t: float) -> DecoherenceSample:
        return coherence(model, seq, t, cache)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(point, grid))
    return [point(t) for t in grid]


def coherence_ode(
    model: NoiseModel,
    seq: PulseSequence,
    t: float,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> DecoherenceSample:
    """
    Integrate the controlled Liouville equation :math:`\\dot y = [\\Gamma + i f(t) W] y` directly.

    Each interval between pulses is integrated separately with
    :func:`scipy.integrate.solve_ivp`, so the discontinuities of
    :math:`f` fall on step boundaries. Slower and less accurate than
    :func:`coherence`, it serves as an independent check.
    """
    if t < 0:
        msg = f"evolution time must be non-negative, got {t!r} !"
        raise DomainError(msg)
    if t == 0:
        return DecoherenceSample(0.0, 1.0 + 0.0j)
    y = model.initial_distribution.astype(complex)
    for a, s in zip(seq.intervals(), seq.signs(), strict=True):
        A = model.generator + 1j * s * model.W
        sol = solve_ivp(
            lambda _, v, A=A: A @ v,
            (0.0, a * t),
            y,
            method="DOP853",
            rtol=rtol,
            atol=atol,
        )
        if not sol.success:
            msg = f"Liouville integration failed: {sol.message}"
            raise NumericalError(msg)
        y = sol.y[:, -1]
    return DecoherenceSample(float(t), complex(y.sum()))
