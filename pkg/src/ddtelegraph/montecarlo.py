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
Monte Carlo estimate of the decoherence function.

Trajectories of the jump process are sampled exactly (holding times are
exponential) and each contributes the Kubo phase factor
:math:`e^{i\\varphi}`, :math:`\\varphi = \\int_0^t f(\\tau/t) w(\\tau) d\\tau`.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import DomainError
from .noise import NoiseModel
from .pulses import PulseSequence, cumulative_switching

logger = logging.getLogger(__name__)

#: int : Smallest number of trajectories accepted by :func:`mc_coherence`.
MIN_TRAJECTORIES = 100

#: int : Trajectories simulated together with one random stream.
BLOCK_SIZE = 4096


@dataclass(frozen=True)
class MonteCarloEstimate:
    """Sample mean of the phase factor over trajectories."""

    #: complex : Estimate of :math:`\langle x(t) \rangle`.
    mean: complex
    #: float : Larger of the standard errors of the real and imaginary parts.
    std_error: float
    #: int : Number of trajectories.
    trajectories: int
    #: int : Master seed.
    seed: int

    def to_dict(self) -> dict[str, Any]:
        """Return the estimate with the field names as keys, ``mean`` split in two."""
        return {
            "mean": {"re": self.mean.real, "im": self.mean.imag},
            "std_error": self.std_error,
            "trajectories": self.trajectories,
            "seed": self.seed,
        }


def _block_rng(seed: int, block: int) -> np.random.Generator:
    # Counter-based stream keyed by (seed, block) so scheduling never changes results.
    return np.random.Generator(np.random.Philox(key=(block << 64) | seed))


def _jump_table(model: NoiseModel) -> tuple[np.ndarray, np.ndarray]:
    # Leaving rates and the cumulative jump probabilities (column j: from state j).
    rates = -np.diag(model.generator)
    jumps = model.generator - np.diag(np.diag(model.generator))
    with np.errstate(divide="ignore", invalid="ignore"):
        jumps = np.where(rates > 0, jumps / rates, 0.0)
    return rates, np.cumsum(jumps, axis=0)


def sample_path(
    model: NoiseModel, horizon: float, rng: np.random.Generator
) -> list[tuple[float, int]]:
    """
    Sample one trajectory of the jump process on ``[0, horizon]``.

    Parameters
    ----------
    model : NoiseModel
    horizon : float
        Length of the path.
    rng : numpy.random.Generator

    Returns
    -------
    list[tuple[float, int]]
        ``(time, state)`` pairs, starting with ``(0.0, initial state)``
        followed by each jump time and the state entered. States with zero
        leaving rate are absorbing.

    """
    if horizon < 0:
        msg = f"path horizon must be non-negative, got {horizon!r} !"
        raise DomainError(msg)
    rates, cumulative = _jump_table(model)
    state = int(rng.choice(model.n_levels, p=model.initial_distribution))
    path = [(0.0, state)]
    time = 0.0
    while rates[state] > 0:
        time += rng.exponential(1.0 / rates[state])
        if time >= horizon:
            break
        u = rng.random()
        state = min(int(np.searchsorted(cumulative[:, state], u, side="right")), model.n_levels - 1)
        path.append((time, state))
    return path


def _block_phases(
    model: NoiseModel,
    seq: PulseSequence,
    t: float,
    size: int,
    rng: np.random.Generator,
) -> np.ndarray:
    # Phase of each of `size` trajectories, all advanced one segment at a time.
    rates, cumulative = _jump_table(model)
    state = rng.choice(model.n_levels, size=size, p=model.initial_distribution)
    now = np.zeros(size)
    phase = np.zeros(size)
    active = np.ones(size, dtype=bool)
    F_now = np.zeros(size)
    while np.any(active):
        idx = np.flatnonzero(active)
        s = state[idx]
        rate = rates[s]
        hold = np.full(idx.size, np.inf)
        moving = rate > 0
        hold[moving] = rng.exponential(1.0 / rate[moving])
        end = np.minimum(now[idx] + hold, t)
        F_end = cumulative_switching(seq, end / t)
        phase[idx] += model.levels[s] * t * (F_end - F_now[idx])
        now[idx] = end
        F_now[idx] = F_end
        jumped = end < t
        u = rng.random(int(np.count_nonzero(jumped)))
        column = cumulative[:, s[jumped]]
        new = np.minimum(np.sum(column <= u[None, :], axis=0), model.n_levels - 1)
        state[idx[jumped]] = new
        active[idx[~jumped]] = False
    return phase


def mc_coherence(
    model: NoiseModel,
    seq: PulseSequence,
    t: float,
    trajectories: int,
    seed: int,
    workers: int = 1,
    block_size: int = BLOCK_SIZE,
) -> MonteCarloEstimate:
    """
    Estimate :math:`\\langle x(t) \\rangle` by averaging :math:`e^{i\\varphi}` over sampled trajectories.

    The phase is exact piecewise arithmetic: on each segment of constant
    noise level the integral of the switching function is taken from
    :func:`ddtelegraph.pulses.cumulative_switching`, so pulse times need no
    extra segmentation.

    Parameters
    ----------
    model : NoiseModel
    seq : PulseSequence
    t : float
        Total evolution time.
    trajectories : int
        At least :data:`MIN_TRAJECTORIES`.
    seed : int
        Master seed in ``[0, 2**64)``. Block ``b`` draws from a Philox stream
        keyed by ``(seed, b)``.
    workers : int, optional
        Threads simulating blocks; the estimate does not depend on this value.
    block_size : int, optional
        Trajectories per block.

    Returns
    -------
    MonteCarloEstimate

    Raises
    ------
    DomainError
        For too few trajectories, a negative time or an invalid seed.

    """
    if trajectories < MIN_TRAJECTORIES:
        msg = f"need at least {MIN_TRAJECTORIES} trajectories, got {trajectories} !"
        raise DomainError(msg)
    if t < 0:
        msg = f"evolution time must be non-negative, got {t!r} !"
        raise DomainError(msg)
    if not 0 <= seed < 2**64:
        msg = f"seed must lie in [0, 2**64), got {seed} !"
        raise DomainError(msg)
    if np.any(model.is_absorbing()):
        logger.warning(f"states {np.flatnonzero(model.is_absorbing()).tolist()} are absorbing")
    if t == 0:
        return MonteCarloEstimate(1.0 + 0.0j, 0.0, trajectories, seed)

    sizes = [min(block_size, trajectories - start) for start in range(0, trajectories, block_size)]

    def block(b: int) -> np.ndarray:
        return _block_phases(model, seq, t, sizes[b], _block_rng(seed, b))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            phases = list(executor.map(block, range(len(sizes))))
    else:
        phases = [block(b) for b in range(len(sizes))]
    logger.info(f"mc: {len(sizes)} blocks, {trajectories} trajectories")

    phase = np.concatenate(phases)
    re = np.cos(phase)
    im = np.sin(phase)
    std_error = max(np.std(re, ddof=1), np.std(im, ddof=1)) / np.sqrt(trajectories)
    return MonteCarloEstimate(complex(re.mean(), im.mean()), float(std_error), trajectories, seed)
