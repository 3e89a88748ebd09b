"""Discrete component: interval-partition switching and the basic coupling.

Single chain. For source regime ``i`` the targets ``j != i`` get consecutive
half-open intervals of length ``q_ij(x)`` starting at 0. One step of length
``dt`` moves to ``j`` when ``u`` (uniform on [0, 1)) falls in ``dt * Delta_ij``.

Coupled chains. The basic coupling of ``Q(x)`` and ``Q(y)`` from ``(k, l)`` has

* first coordinate only, ``(k, l) -> (j, l)`` at rate ``(q_kj(x) - q_lj(y))^+``
* second coordinate only, ``(k, l) -> (k, j)`` at rate ``(q_lj(y) - q_kj(x))^+``
* both together, ``(k, l) -> (j, j)`` at rate ``q_kj(x) ^ q_lj(y)``

with diagonal entries treated as zero in all three sums. The sampling layout
lists, for each ``j`` in increasing order, the joint move and then the
first-only move, followed by all second-only moves. The first coordinate
therefore sees exactly the same intervals as :func:`step_switch` and a
coupled pair reuses the single-chain draw for its first component.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import RateMatrix, validate_q_property

__all__ = [
    "MAX_STEP_MASS",
    "SwitchingStepError",
    "IntervalPartition",
    "build_partition",
    "global_intervals",
    "step_switch",
    "CouplingRates",
    "build_coupling",
    "coupled_step_switch",
    "switch_batch",
    "coupled_switch_batch",
]

MAX_STEP_MASS = 0.1


class SwitchingStepError(ValueError):
    pass


def _entries(Q) -> np.ndarray:
    return np.asarray(Q.entries if isinstance(Q, RateMatrix) else Q, dtype=float)


@dataclass(frozen=True)
class IntervalPartition:
    source: int
    targets: tuple
    left: tuple
    right: tuple

    @property
    def total(self) -> float:
        return self.right[-1] if self.right else 0.0

    def interval(self, j: int) -> tuple:
        k = self.targets.index(j)
        return self.left[k], self.right[k]

    def lookup(self, z: float):
        """Target ``j`` whose interval contains ``z``, or None."""
        for j, lo, hi in zip(self.targets, self.left, self.right):
            if lo <= z < hi:
                return j
        return None


def build_partition(Q, i: int) -> IntervalPartition:
    q = _entries(Q)
    m = q.shape[0]
    targets, left, right = [], [], []
    edge = 0.0
    for j in range(1, m + 1):
        if j == i:
            continue
        targets.append(j)
        left.append(edge)
        edge = edge + q[i - 1, j - 1]
        right.append(edge)
    return IntervalPartition(i, tuple(targets), tuple(left), tuple(right))


def global_intervals(Q) -> dict:
    """Intervals Delta_ij laid end to end over all pairs in lexicographic order.

    This is the layout behind the Poisson-measure representation of the
    switching process; it is what the coupled generator intersects.
    """
    q = _entries(Q)
    m = q.shape[0]
    out = {}
    edge = 0.0
    for i in range(m):
        for j in range(m):
            if i == j:
                continue
            out[(i + 1, j + 1)] = (edge, edge + q[i, j])
            edge += q[i, j]
    return out


def _check_mass(mass, what="switching"):
    mass = np.max(mass) if np.ndim(mass) else mass
    if mass > MAX_STEP_MASS:
        raise SwitchingStepError(
            f"{what} step mass dt*rate = {mass:.3g} exceeds {MAX_STEP_MASS}; use a smaller dt"
        )


def step_switch(model, x, i: int, dt: float, u: float) -> int:
    """One first-order switching step from regime ``i`` at state ``x``."""
    q = model.rates(np.asarray(x, float).reshape(1, model.dim_x))[0]
    _check_mass(dt * np.max(-np.diag(q)))
    row = q[i - 1].copy()
    row[i - 1] = 0.0
    return int(switch_batch(row[None], np.array([i - 1]), dt, np.array([u]))[0]) + 1


def switch_batch(rows: np.ndarray, a: np.ndarray, dt: float, u: np.ndarray) -> np.ndarray:
    """Vectorized :func:`step_switch`.

    ``rows`` (n, m) holds the off-diagonal rates out of the current regime
    with the own-regime entry zeroed; ``a`` holds 0-based regimes.
    """
    cum = np.cumsum(rows * dt, axis=1)
    hit = u[:, None] < cum
    moved = hit[:, -1]
    target = np.argmax(hit, axis=1)
    return np.where(moved, target, a)


@dataclass(frozen=True)
class CouplingRates:
    k: int
    l: int
    joint: np.ndarray      # joint[j-1]: rate to (j, j)
    first: np.ndarray      # first[j-1]: rate to (j, l)
    second: np.ndarray     # second[j-1]: rate to (k, j)

    @property
    def total(self) -> float:
        return float(self.joint.sum() + self.first.sum() + self.second.sum())

    def as_dict(self) -> dict:
        """Nonzero rates keyed by target pair (1-based)."""
        out: dict = {}
        for j0 in range(len(self.joint)):
            j = j0 + 1
            for key, rate in (((j, j), self.joint[j0]), ((j, self.l), self.first[j0]), ((self.k, j), self.second[j0])):
                if rate > 0:
                    out[key] = out.get(key, 0.0) + float(rate)
        return out

    def layout(self):
        """Sampling order: (target, rate) pairs."""
        seq = []
        for j0 in range(len(self.joint)):
            seq.append(((j0 + 1, j0 + 1), self.joint[j0]))
            seq.append(((j0 + 1, self.l), self.first[j0]))
        for j0 in range(len(self.second)):
            seq.append(((self.k, j0 + 1), self.second[j0]))
        return seq


def _coupling_rows(qa, qb):
    joint = np.minimum(qa, qb)
    first = np.maximum(qa - qb, 0.0)
    second = np.maximum(qb - qa, 0.0)
    return joint, first, second


def build_coupling(Qx, Qy, k: int, l: int) -> CouplingRates:
    qx, qy = _entries(Qx), _entries(Qy)
    for q in (qx, qy):
        res = validate_q_property(q)
        if not res:
            raise ValueError("coupling needs valid rate matrices: " + "; ".join(res.violations))
    qa = qx[k - 1].copy()
    qa[k - 1] = 0.0
    qb = qy[l - 1].copy()
    qb[l - 1] = 0.0
    return CouplingRates(k, l, *_coupling_rows(qa, qb))


def coupled_step_switch(rates: CouplingRates, dt: float, u: float) -> tuple:
    _check_mass(dt * rates.total, "coupled switching")
    a, b = _pick_coupled(
        rates.joint[None], rates.first[None], rates.second[None],
        np.array([rates.k - 1]), np.array([rates.l - 1]), dt, np.array([u]),
    )
    return int(a[0]) + 1, int(b[0]) + 1


def coupled_switch_batch(qa, qb, a, b, dt, u):
    """Vectorized :func:`coupled_step_switch` on 0-based regimes.

    ``qa``/``qb`` (n, m) are the off-diagonal rows out of ``a`` under Q(x)
    and out of ``b`` under Q(y), own entries zeroed.
    """
    return _pick_coupled(*_coupling_rows(qa, qb), a, b, dt, u)


def _pick_coupled(joint, first, second, a, b, dt, u):
    n, m = joint.shape
    seg = np.empty((n, 3 * m))
    seg[:, 0:2 * m:2] = joint
    seg[:, 1:2 * m:2] = first
    seg[:, 2 * m:] = second
    cum = np.cumsum(seg * dt, axis=1)
    hit = u[:, None] < cum
    moved = hit[:, -1]
    s = np.argmax(hit, axis=1)
    j = np.where(s < 2 * m, s // 2, s - 2 * m)
    new_a = np.where(s < 2 * m, j, a)
    new_b = np.where(s < 2 * m, np.where(s % 2 == 0, j, b), j)
    return np.where(moved, new_a, a), np.where(moved, new_b, b)
