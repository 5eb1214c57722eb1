# Copyright (c) 2021-2024 ddtelegraph developers
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

"""Abstract base class for Newton-type minimizers."""

import logging
from abc import ABC, abstractmethod
from collections.abc import Callable
from copy import deepcopy
from typing import Any

import numpy as np
from numpy.typing import ArrayLike

logger = logging.getLogger(__name__)

#: Objective callable returning ``(value, gradient, hessian)``.
ObjectiveType = Callable[..., tuple[float, np.ndarray, np.ndarray]]


class NewtonSolver(ABC):
    """
    Base class for Newton-type methods that minimize a smooth function.

    Parameters
    ----------
    history_size : int, optional
        Number of past iterates kept in :attr:`x`, :attr:`value` and
        :attr:`gradient`.

    Notes
    -----
    :meth:`update_x` must be defined in the inherited class.

    """

    def __init__(self, history_size: int = 6) -> None:
        self.history_size = history_size

        #: list[numpy.ndarray] : History of iterates, most recent first.
        self.x: list[np.ndarray] = []

        #: list[float] : History of objective values.
        self.value: list[float] = []

        #: list[numpy.ndarray] : History of gradients.
        self.gradient: list[np.ndarray] = []

        #: numpy.ndarray | None : Hessian at the most recent iterate.
        self.hessian: np.ndarray | None = None

        #: int : Iteration counter for solver.
        self.n: int = 0

        #: bool : Whether the solver converged to within tolerance.
        self.success: bool = False

        #: float : 2-norm of the most recent gradient.
        self.norm: float = np.inf

        self._fun: ObjectiveType | None = None
        self._args: tuple[Any, ...] = ()

    @staticmethod
    def _insert_vector(vec: list[Any], vec_new: Any, max_size: int | None = None) -> None:
        # Note these operations are mutable on input list
        vec.insert(0, vec_new)
        if max_size is not None and len(vec) > max_size:
            vec.pop()

    def evaluate(self, x: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
        """Evaluate the objective passed to :meth:`solve` at ``x``."""
        if self._fun is None:
            msg = "evaluate() called outside of solve() !"
            raise RuntimeError(msg)
        return self._fun(x, *self._args)

    @abstractmethod
    def update_x(self, **kwargs: Any) -> np.ndarray:
        """
        Return a single iteration for the new guess for :attr:`x`.

        Parameters
        ----------
        **kwargs : dict
            Keyword arguments specific to the solver implementation.

        Returns
        -------
        numpy.ndarray
            New iterate to add to history.

        """

    def solve(
        self,
        fun: ObjectiveType,
        x0: ArrayLike,
        args: tuple[Any, ...] = (),
        tol: float = 1e-10,
        maxiter: int = 200,
        options: dict[str, Any] | None = None,
    ) -> np.ndarray:
        """
        Minimize a function starting from ``x0``.

        Parameters
        ----------
        fun : callable
            The function to minimize. It must be callable as ``fun(x, *args)``
            and return ``(value, gradient, hessian)``.
        x0 : numpy.ndarray
            Initial guess.
        args : tuple, optional
            Additional arguments to pass to ``fun``.
        tol : float, optional
            The solver stops when the 2-norm of the gradient is below this.
        maxiter : int, optional
            Maximum number of iterations.
        options : dict, optional
            keyword arguments to pass to :meth:`update_x`.

        Returns
        -------
        numpy.ndarray
            The last iterate. :attr:`success` tells whether it is converged.

        """
        if options is None:
            options = {}
        self.success = False
        self._fun = fun
        self._args = args
        self.x, self.value, self.gradient = [], [], []
        x = deepcopy(np.asarray(x0, dtype=float))

        for self.n in range(maxiter):
            value, gradient, self.hessian = fun(x, *args)
            self._insert_vector(self.x, x, self.history_size)
            self._insert_vector(self.value, value, self.history_size)
            self._insert_vector(self.gradient, gradient, self.history_size)

            self.norm = float(np.linalg.norm(gradient))
            logger.debug(f"n: {self.n}, f: {value}, norm(grad): {self.norm}")
            if self.norm < tol:
                self.success = True
                break

            x_new = self.update_x(**options)
            if np.array_equal(x_new, x):
                logger.debug("step stalled")
                break
            x = x_new

        if self.success:
            logger.debug(f"The solution converged. nit: {self.n}, tol: {self.norm}")
        else:
            logger.debug(f"The solution did NOT converge. nit: {self.n} tol: {self.norm}")

        self._fun = None
        return x
