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

"""Damped Newton minimizer."""

from collections.abc import Callable
from typing import Any

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .solver_newton import NewtonSolver


# Newton step d = -(H + tau I)^{-1} g with tau raised until H + tau I is
# positive definite, then backtracking until the new point is feasible and
# satisfies the Armijo decrease.
class DampedNewton(NewtonSolver):
    """
    Newton minimizer with Hessian shifting and a feasibility-aware line search.

    Parameters
    ----------
    feasible : callable, optional
        ``feasible(x) -> bool``; trial points for which it is False are
        rejected by the line search.
    armijo : float, optional
        Sufficient decrease constant.
    max_backtrack : int, optional
        Largest number of step halvings.

    """

    def __init__(
        self,
        /,
        feasible: Callable[[np.ndarray], bool] | None = None,
        armijo: float = 1e-4,
        max_backtrack: int = 60,
        **kwargs: Any,
    ) -> None:
        super().__init__(**kwargs)
        self.feasible = feasible if feasible is not None else (lambda _: True)
        self.armijo = armijo
        self.max_backtrack = max_backtrack

    @staticmethod
    def newton_direction(gradient: np.ndarray, hessian: np.ndarray) -> np.ndarray:
        """Return the descent direction of the shifted Newton system."""
        n = gradient.size
        scale = max(1.0, float(np.max(np.abs(hessian)))) if n else 1.0
        tau = 0.0
        for _ in range(60):
            try:
                factor = cho_factor(hessian + tau * np.eye(n))
                return -cho_solve(factor, gradient)
            except LinAlgError:
                tau = max(2.0 * tau, 1e-8 * scale)
        return -gradient

    def update_x(self, alpha: float = 1.0) -> np.ndarray:
        """Return a new iterate from a damped Newton step of initial length ``alpha``."""
        x = self.x[0]
        value = self.value[0]
        gradient = self.gradient[0]
        norm = np.linalg.norm(gradient)
        direction = self.newton_direction(gradient, self.hessian)
        slope = float(gradient @ direction)
        # Decreases below this are lost to rounding in the objective.
        floor = 8 * np.finfo(float).eps * max(1.0, abs(value))
        step = alpha
        for _ in range(self.max_backtrack):
            trial = x + step * direction
            if self.feasible(trial):
                trial_value, trial_gradient, _ = self.evaluate(trial)
                if trial_value <= value + self.armijo * step * slope:
                    return trial
                if abs(trial_value - value) <= floor and np.linalg.norm(trial_gradient) < norm:
                    return trial
            step *= 0.5
        return x
