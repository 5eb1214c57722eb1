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
Minimization of the third-order coefficient over pulse timings.

Pulse positions are written as :math:`\\alpha = c + \\beta` with :math:`c`
the CPMG grid. The echo condition restricts :math:`\\beta` to the
hyperplane :math:`\\sum_n (-1)^{n+1} \\beta_n = 0`, and the physical
boundary to :math:`0 < \\alpha_1 < \\cdots < \\alpha_N < 1`.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import ArrayLike

from .errors import ConsistencyError, DomainError, OptimizationError, SamplingError
from .expansion import g3, g3_gradient, g3_hessian
from .optimize import DampedNewton
from .pulses import GAP, PulseSequence, cpmg_positions, from_positions, reduce_positions

logger = logging.getLogger(__name__)

#: int : Rejection budget of :func:`sample_admissible` per returned sample.
MAX_TRIES = 10_000

#: tuple[float, ...] : Barrier weights, applied in order.
BARRIER_SCHEDULE = (1e-2, 1e-4, 1e-6, 1e-8)

#: float : Deviations below this (infinity norm) count as CPMG timing.
ZERO_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class OptimizationResult:
    """Best pulse timing found by :func:`minimize`."""

    #: int : Number of pulses ``N``.
    pulse_count: int
    #: numpy.ndarray : Deviations from CPMG timing of the best start.
    best_beta: np.ndarray
    #: float : Third-order coefficient of the best start.
    best_g: float
    #: int : Number of starts.
    starts: int
    #: int : Number of starts whose gradient norm reached the tolerance.
    converged_starts: int
    #: float : Gradient norm (on the echo hyperplane) of the best start.
    gradient_norm_at_best: float

    def __post_init__(self) -> None:
        bound = 1.0 / (12.0 * self.pulse_count**2)
        if self.best_g < bound - 1e-12:
            msg = f"best coefficient {self.best_g!r} lies below the CPMG value {bound!r}"
            raise ConsistencyError(msg)

    def to_dict(self) -> dict[str, Any]:
        """Return the result with the field names as keys."""
        return {
            "pulse_count": self.pulse_count,
            "best_beta": [float(b) for b in self.best_beta],
            "best_g": self.best_g,
            "starts": self.starts,
            "converged_starts": self.converged_starts,
            "gradient_norm_at_best": self.gradient_norm_at_best,
        }


@dataclass(frozen=True)
class ReductionStep:
    """One boundary reduction ``N -> N'`` of :func:`reduction_path`."""

    #: int : Pulse count before the reduction.
    pulse_count: int
    #: int : Pulse count after the reduction.
    reduced_count: int
    #: float : Boundary scale :math:`\lambda_B`.
    lambda_b: float
    #: float : Coefficient at the starting deviation.
    g_start: float
    #: float : :math:`1/(12N^2) + f_N(\lambda_B)`.
    g_boundary: float
    #: float : Coefficient of the reduced sequence.
    g_reduced: float
    #: PulseSequence : The reduced sequence.
    reduced: PulseSequence = field(repr=False)


def echo_basis(count: int) -> np.ndarray:
    """
    Return the ``N x (N-1)`` matrix ``E`` with ``beta = E @ z`` spanning the echo hyperplane.

    The first ``N - 1`` deviations are kept as coordinates and
    :math:`\\beta_N = \\sum_{n<N} (-1)^{N+n+1} z_n`.
    """
    if count < 1:
        msg = f"pulse count must be at least 1, got {count} !"
        raise DomainError(msg)
    n = np.arange(1, count)
    return np.vstack((np.eye(count - 1), ((-1.0) ** (count + n + 1))[None, :]))


def _slack_operator(count: int) -> tuple[np.ndarray, np.ndarray]:
    # Slacks s = M alpha + m: alpha_1, the gaps alpha_{n+1} - alpha_n, 1 - alpha_N.
    M = np.zeros((count + 1, count))
    M[np.arange(count), np.arange(count)] = 1.0
    M[np.arange(1, count + 1), np.arange(count)] -= 1.0
    m = np.zeros(count + 1)
    m[-1] = 1.0
    return M, m


def _is_admissible(beta: np.ndarray) -> np.ndarray:
    # Rows of beta (shape (..., N)) whose positions respect the physical boundary.
    alpha = cpmg_positions(beta.shape[-1]) + beta
    edges = np.concatenate(
        (np.zeros(alpha.shape[:-1] + (1,)), alpha, np.ones(alpha.shape[:-1] + (1,))), axis=-1
    )
    return np.all(np.diff(edges, axis=-1) >= GAP, axis=-1)


def sample_admissible(
    count: int,
    rng_seed: int | np.random.Generator | None = None,
    size: int | None = None,
) -> np.ndarray:
    """
    Draw deviations from CPMG timing that satisfy the echo condition and the physical boundary.

    With intervals :math:`a_1, \\dots, a_{N+1}` between the window ends and
    the pulses, the echo condition splits the window into odd and even
    intervals each summing to one half. Both groups are drawn uniformly
    from their simplex, which makes the deviations uniform over the whole
    admissible polytope. Draws with an interval below
    :data:`~ddtelegraph.pulses.GAP` are rejected.

    Parameters
    ----------
    count : int
        Number of pulses ``N >= 1``.
    rng_seed : int or numpy.random.Generator, optional
        Seed or generator.
    size : int, optional
        If given, return ``size`` samples as rows of an array.

    Returns
    -------
    numpy.ndarray
        Shape ``(N,)``, or ``(size, N)``.

    Raises
    ------
    SamplingError
        If :data:`MAX_TRIES` draws per sample are rejected.

    """
    if count < 1:
        msg = f"pulse count must be at least 1, got {count} !"
        raise DomainError(msg)
    rng = np.random.default_rng(rng_seed)
    wanted = 1 if size is None else size
    if count == 1:
        samples = np.zeros((wanted, 1))
        return samples[0] if size is None else samples

    n_odd = (count + 2) // 2
    n_even = (count + 1) // 2
    grid = cpmg_positions(count)
    accepted: list[np.ndarray] = []
    n_accepted = 0
    budget = MAX_TRIES * wanted
    batch = max(16, 2 * wanted)
    while n_accepted < wanted:
        if budget <= 0:
            msg = f"no admissible deviation for N = {count} in {MAX_TRIES * wanted} draws !"
            raise SamplingError(msg)
        draws = min(batch, budget)
        budget -= draws
        a = np.empty((draws, count + 1))
        a[:, 0::2] = 0.5 * rng.dirichlet(np.ones(n_odd), size=draws)
        a[:, 1::2] = 0.5 * rng.dirichlet(np.ones(n_even), size=draws)
        beta = np.cumsum(a[:, :-1], axis=1) - grid
        ok = beta[_is_admissible(beta)]
        accepted.append(ok)
        n_accepted += ok.shape[0]
    samples = np.concatenate(accepted)[:wanted]
    return samples[0] if size is None else samples


def scaling_curve(beta: ArrayLike, lam: float) -> float:
    """
    Return :math:`f_N(\\lambda) = G(c + \\lambda\\beta) - 1/(12N^2)`.

    Outside the physical boundary this evaluates the polynomial extension,
    which equals :math:`\\lambda^2 h_N(\\beta) + \\lambda^3 g_N(\\beta)`.
    """
    beta = np.asarray(beta, dtype=float).reshape(-1)
    n = beta.size
    return g3(cpmg_positions(n) + lam * beta) - 1.0 / (12.0 * n**2)


def boundary_scale(beta: ArrayLike) -> tuple[float, PulseSequence]:
    """
    Scale the deviations up to the physical boundary and remove the null pulses.

    Parameters
    ----------
    beta : numpy.ndarray
        Non-zero deviations on the echo hyperplane.

    Returns
    -------
    lambda_b : float
        Largest :math:`\\lambda` keeping :math:`c + \\lambda\\beta` on the closed
        physical boundary.
    reduced : PulseSequence
        The sequence at :math:`\\lambda_B` with end pulses dropped and
        coincident pairs cancelled, end drops first.

    Raises
    ------
    DomainError
        If ``beta`` vanishes.

    """
    beta = np.asarray(beta, dtype=float).reshape(-1)
    if beta.size == 0 or np.max(np.abs(beta)) == 0:
        msg = "boundary scaling needs a non-zero direction !"
        raise DomainError(msg)
    n = beta.size
    M, m = _slack_operator(n)
    slack = M @ cpmg_positions(n) + m
    rate = M @ beta
    shrinking = rate < 0
    lambda_b = float(np.min(-slack[shrinking] / rate[shrinking]))
    raw = cpmg_positions(n) + lambda_b * beta
    reduced = from_positions(reduce_positions(raw))
    logger.info(f"boundary scale: N: {n}, lambda_B: {lambda_b}, N': {reduced.n_pulses}")
    return lambda_b, reduced


def reduction_path(beta: ArrayLike) -> list[ReductionStep]:
    """
    Repeat :func:`boundary_scale` until CPMG timing of the reduced count is reached.

    Each step scales the current deviations to the boundary, removes null
    pulses and restarts from the deviations of the reduced sequence. The
    coefficient at the boundary equals that of the reduced sequence.
    """
    beta = np.asarray(beta, dtype=float).reshape(-1)
    steps: list[ReductionStep] = []
    while beta.size > 1 and np.max(np.abs(beta)) > ZERO_TOL:
        n = beta.size
        lambda_b, reduced = boundary_scale(beta)
        steps.append(
            ReductionStep(
                pulse_count=n,
                reduced_count=reduced.n_pulses,
                lambda_b=lambda_b,
                g_start=g3(cpmg_positions(n) + beta),
                g_boundary=1.0 / (12.0 * n**2) + scaling_curve(beta, lambda_b),
                g_reduced=g3(reduced),
                reduced=reduced,
            )
        )
        if reduced.is_free:
            break
        beta = reduced.positions - cpmg_positions(reduced.n_pulses)
    return steps


class _EchoProblem:
    # The coefficient G and its log-barrier in hyperplane coordinates z.
    def __init__(self, count: int) -> None:
        self.count = count
        self.grid = cpmg_positions(count)
        self.E = echo_basis(count)
        M, m = _slack_operator(count)
        self.P = M @ self.E
        self.slack0 = M @ self.grid + m

    def slack(self, z: np.ndarray) -> np.ndarray:
        return self.slack0 + self.P @ z

    def feasible(self, z: np.ndarray) -> bool:
        return bool(np.all(self.slack(z) > 0))

    def beta(self, z: np.ndarray) -> np.ndarray:
        return self.E @ z

    def objective(self, z: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
        alpha = self.grid + self.E @ z
        return (
            g3(alpha),
            self.E.T @ g3_gradient(alpha),
            self.E.T @ g3_hessian(alpha) @ self.E,
        )

    def barrier(self, z: np.ndarray, mu: float) -> tuple[float, np.ndarray, np.ndarray]:
        value, gradient, hessian = self.objective(z)
        s = self.slack(z)
        if np.any(s <= 0):
            return np.inf, gradient, hessian
        inv = 1.0 / s
        return (
            value - mu * np.sum(np.log(s)),
            gradient - mu * (self.P.T @ inv),
            hessian + mu * (self.P.T * inv**2) @ self.P,
        )


def _run_start(
    problem: _EchoProblem, seed: int, index: int, tol: float, maxiter: int
) -> dict[str, Any]:
    rng = np.random.default_rng([seed, index])
    z = sample_admissible(problem.count, rng)[:-1]
    solver = DampedNewton(feasible=problem.feasible)
    for mu in BARRIER_SCHEDULE:
        z = solver.solve(problem.barrier, z, args=(mu,), tol=tol, maxiter=maxiter)
    z = solver.solve(problem.objective, z, tol=tol, maxiter=maxiter)
    value = problem.objective(z)[0]
    logger.info(
        f"start: {index}, G: {value}, norm(grad): {solver.norm}, converged: {solver.success}"
    )
    return {
        "start": index,
        "beta": problem.beta(z),
        "g": float(value),
        "norm": solver.norm,
        "converged": solver.success,
    }


def minimize(
    count: int,
    starts: int = 50,
    rng_seed: int | None = None,
    workers: int = 1,
    tol: float = 1e-10,
    maxiter: int = 200,
) -> OptimizationResult:
    """
    Minimize the third-order coefficient over echo-satisfying pulse timings.

    Each start draws a point with :func:`sample_admissible`, follows the
    log-barrier path over :data:`BARRIER_SCHEDULE` and finishes with
    Newton steps on the bare coefficient.

    Parameters
    ----------
    count : int
        Number of pulses ``N >= 1``.
    starts : int, optional
        Number of random starts.
    rng_seed : int, optional
        Start ``i`` draws from ``numpy.random.default_rng([rng_seed, i])``.
    workers : int, optional
        Threads running starts; the result does not depend on this value.
    tol : float, optional
        Gradient norm tolerance of every Newton stage.
    maxiter : int, optional
        Iteration cap of every Newton stage.

    Returns
    -------
    OptimizationResult

    Raises
    ------
    OptimizationError
        If no start converged.

    """
    if count < 1:
        msg = f"pulse count must be at least 1, got {count} !"
        raise DomainError(msg)
    if starts < 1:
        msg = f"number of starts must be at least 1, got {starts} !"
        raise DomainError(msg)
    if count == 1:
        return OptimizationResult(1, np.zeros(1), g3(cpmg_positions(1)), starts, starts, 0.0)

    if rng_seed is None:
        rng_seed = int(np.random.SeedSequence().entropy % 2**63)
    problem = _EchoProblem(count)

    def start(index: int) -> dict[str, Any]:
        return _run_start(problem, rng_seed, index, tol, maxiter)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            runs = list(executor.map(start, range(starts)))
    else:
        runs = [start(i) for i in range(starts)]

    converged = [run for run in runs if run["converged"]]
    if len(converged) < starts:
        logger.warning(f"{starts - len(converged)} of {starts} starts did NOT converge")
    if not converged:
        msg = f"no start of the N = {count} minimization converged !"
        raise OptimizationError(msg, diagnostics=runs)
    best = min(converged, key=lambda run: run["g"])
    logger.info(f"N: {count}, best G: {best['g']}, start: {best['start']}")
    return OptimizationResult(
        pulse_count=count,
        best_beta=best["beta"],
        best_g=best["g"],
        starts=starts,
        converged_starts=len(converged),
        gradient_norm_at_best=best["norm"],
    )
