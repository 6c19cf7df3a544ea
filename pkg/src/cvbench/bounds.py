"""Fidelity benchmarks for the coherent-state scaling task.

The task: amplitudes alpha are drawn from the Gaussian prior of width lam and
the device must output |sqrt(eta) alpha>.  `classical_bound` is the best
average fidelity any measure-and-prepare strategy can reach; beating it
certifies quantum-domain operation.  For deamplification it also follows
from a variance argument that quantum-domain operation is implied whenever
the summed quadrature deviation stays below `quadrature_threshold`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, InvalidInput


def _check_task(eta, lam, n_copies):
    if not (eta > 0 and math.isfinite(eta)):
        raise InvalidInput(f"task gain eta must be positive and finite, got {eta}")
    if not (lam >= 0 and math.isfinite(lam)):
        raise InvalidInput(f"prior width lambda must be >= 0 and finite, got {lam}")
    if isinstance(n_copies, bool) or not isinstance(n_copies, int):
        raise InvalidInput(f"copy count must be an integer, got {n_copies!r}")
    if n_copies < 1:
        raise InvalidInput(f"copy count must be >= 1, got {n_copies}")


def classical_bound(eta: float, lam: float = 0.0, n_copies: int = 1) -> float:
    """Best measure-and-prepare average fidelity for the scaling task.

    Single copy: (1 + lam) / (1 + lam + eta).  Handing the device N identical
    copies rescales both task parameters by 1/N, giving
    (N + lam) / (N + lam + eta); the bound grows with N toward 1.
    """
    _check_task(eta, lam, n_copies)
    n = float(n_copies)
    return (n + lam) / (n + lam + eta)


def quadrature_threshold(eta: float, lam: float = 0.0) -> float:
    """Quadrature-deviation criterion: mean deviation below this implies quantum domain.

    The summed deviation statistic delta_bar of any measure-and-prepare
    channel is at least 2 eta / (1 + lam + eta).  Only the single-copy
    criterion is available.
    """
    _check_task(eta, lam, 1)
    return 2.0 * eta / (1.0 + lam + eta)


def quantum_amp_bound(eta: float) -> float:
    """Best quantum average fidelity for amplification (eta > 1) in the flat-prior limit."""
    if not (eta > 1.0):
        raise DomainError(f"the amplification bound 1/eta holds only for eta > 1, got {eta}")
    return 1.0 / eta


@dataclass(frozen=True)
class TaskSpec:
    """A scaling task: gain eta, prior width lam, copies per round."""

    eta: float
    lam: float = 0.0
    n_copies: int = 1

    def __post_init__(self):
        _check_task(self.eta, self.lam, self.n_copies)

    @property
    def classical_bound(self) -> float:
        return classical_bound(self.eta, self.lam, self.n_copies)

    @property
    def quadrature_threshold(self) -> float:
        return quadrature_threshold(self.eta, self.lam)
