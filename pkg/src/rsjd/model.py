"""Regime-switching jump diffusion models.

A model is the tuple (b, sigma, g, lambda, pi, Q) of

    dX = b(X, a) dt + sigma(X, a) dw + dJ,   J(t) = sum of g(X-, a-, gamma) over jumps,

with the regime ``a`` switching at the state dependent rates ``Q(X)``.

Coefficient callables are vectorized over a leading batch axis:

* ``drift(x, i)``            x: (n, r), i: (n,) labels in 1..m  -> (n, r)
* ``diffusion(x, i)``        -> (n, r, d)
* ``jump_coeff(x, i, marks)``  marks: (n,)                      -> (n, r)
* ``rate_matrix(x)``         -> (n, m, m)

Regimes are labelled 1..m everywhere in the public API.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "QPropertyError",
    "ModelError",
    "RateMatrix",
    "QValidation",
    "validate_q_property",
    "MarkLaw",
    "RegimeModel",
    "LinearizedModel",
    "linearize",
    "builtin_example",
    "BUILTIN_IDS",
]

ROW_SUM_TOL = 1e-12


class ModelError(ValueError):
    """Invalid model definition. ``field`` names the offending attribute."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class QPropertyError(ModelError):
    def __init__(self, violations):
        super().__init__("rate_matrix", "q-property violated: " + "; ".join(violations))
        self.violations = list(violations)


@dataclass(frozen=True)
class QValidation:
    ok: bool
    violations: tuple = ()

    def __bool__(self):
        return self.ok


def validate_q_property(Q) -> QValidation:
    """Check nonnegative off-diagonals, zero row sums and finiteness.

    Violations are returned as data, indices 1-based.
    """
    q = np.asarray(Q.entries if isinstance(Q, RateMatrix) else Q, dtype=float)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        return QValidation(False, (f"not square: shape {q.shape}",))
    out = []
    if not np.all(np.isfinite(q)):
        bad = np.argwhere(~np.isfinite(q))
        out += [f"non-finite entry at ({a + 1},{b + 1})" for a, b in bad]
        return QValidation(False, tuple(out))
    m = q.shape[0]
    for a in range(m):
        for b in range(m):
            if a != b and q[a, b] < 0:
                out.append(f"negative off-diagonal at ({a + 1},{b + 1})")
    sums = q.sum(axis=1)
    for a in range(m):
        if abs(sums[a]) > ROW_SUM_TOL:
            out.append(f"row-sum {sums[a]:.3g} != 0 at row {a + 1}")
    return QValidation(not out, tuple(out))


@dataclass(frozen=True)
class RateMatrix:
    entries: np.ndarray

    def __post_init__(self):
        q = np.array(self.entries, dtype=float)
        res = validate_q_property(q)
        if not res:
            raise QPropertyError(res.violations)
        q.setflags(write=False)
        object.__setattr__(self, "entries", q)

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    def rate(self, i: int, j: int) -> float:
        return float(self.entries[i - 1, j - 1])


@dataclass(frozen=True)
class MarkLaw:
    """Jump mark distribution pi on Gamma.

    ``kind`` is one of ``degenerate``, ``uniform``, ``normal``, ``discrete``
    or ``custom`` (then ``sampler(rng, size)`` must be given).
    """

    kind: str = "degenerate"
    params: tuple = (0.0,)
    sampler: Optional[Callable] = None

    def __post_init__(self):
        p = self.params
        if self.kind == "degenerate" and len(p) != 1:
            raise ModelError("marks", "degenerate law needs a single value")
        if self.kind == "uniform" and (len(p) != 2 or not p[0] < p[1]):
            raise ModelError("marks", "uniform law needs low < high")
        if self.kind == "normal" and (len(p) != 2 or p[1] <= 0):
            raise ModelError("marks", "normal law needs std > 0")
        if self.kind == "discrete":
            vals, probs = p
            probs = np.asarray(probs, float)
            if len(vals) != len(probs) or np.any(probs < 0) or abs(probs.sum() - 1) > 1e-12:
                raise ModelError("marks", "discrete law needs matching values/probs summing to 1")
        if self.kind == "custom" and self.sampler is None:
            raise ModelError("marks", "custom law needs a sampler")
        if self.kind not in ("degenerate", "uniform", "normal", "discrete", "custom"):
            raise ModelError("marks", f"unknown mark law {self.kind!r}")

    @property
    def degenerate_value(self) -> Optional[float]:
        return float(self.params[0]) if self.kind == "degenerate" else None

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "degenerate":
            return np.full(size, float(self.params[0]))
        if self.kind == "uniform":
            return rng.uniform(self.params[0], self.params[1], size)
        if self.kind == "normal":
            return rng.normal(self.params[0], self.params[1], size)
        if self.kind == "discrete":
            vals, probs = self.params
            return np.asarray(vals, float)[rng.choice(len(vals), size=size, p=probs)]
        return np.asarray(self.sampler(rng, size), dtype=float)

    def describe(self) -> dict:
        if self.kind == "discrete":
            return {"type": "discrete", "values": list(self.params[0]), "probs": list(self.params[1])}
        names = {"degenerate": ("value",), "uniform": ("low", "high"), "normal": ("mean", "std")}
        if self.kind in names:
            return {"type": self.kind, **dict(zip(names[self.kind], map(float, self.params)))}
        return {"type": "custom"}


@dataclass(frozen=True, eq=False)
class RegimeModel:
    dim_x: int
    num_regimes: int
    dim_w: int
    drift: Callable
    diffusion: Callable
    jump_coeff: Callable
    jump_rate: float
    rate_matrix: Callable
    marks: MarkLaw = field(default_factory=MarkLaw)
    has_equilibrium: bool = False
    name: str = "custom"
    # optional spatial derivatives for scalar models, same batching conventions
    drift_dx: Optional[Callable] = None
    diffusion_dx: Optional[Callable] = None
    jump_coeff_dx: Optional[Callable] = None
    source: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for name in ("dim_x", "num_regimes", "dim_w"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ModelError(name, f"must be a positive integer, got {v!r}")
        lam = self.jump_rate
        if not np.isfinite(lam) or lam < 0:
            raise ModelError("jump_rate", f"must be finite and >= 0, got {lam!r}")
        if self.has_equilibrium:
            self.check_equilibrium()

    # -- batched evaluation with shape normalization -----------------------

    def b(self, x, i) -> np.ndarray:
        x = np.asarray(x, float)
        return np.asarray(self.drift(x, i), float).reshape(x.shape[0], self.dim_x)

    def sigma(self, x, i) -> np.ndarray:
        x = np.asarray(x, float)
        return np.asarray(self.diffusion(x, i), float).reshape(x.shape[0], self.dim_x, self.dim_w)

    def g(self, x, i, marks) -> np.ndarray:
        x = np.asarray(x, float)
        return np.asarray(self.jump_coeff(x, i, marks), float).reshape(x.shape[0], self.dim_x)

    def rates(self, x) -> np.ndarray:
        """Batched Q(x) with the diagonal rebuilt from the off-diagonal rates."""
        x = np.asarray(x, float)
        m = self.num_regimes
        q = np.array(self.rate_matrix(x), dtype=float).reshape(x.shape[0], m, m)
        diag = np.arange(m)
        q[:, diag, diag] = 0.0
        if np.any(q < 0):
            n, a, b_ = np.argwhere(q < 0)[0]
            raise QPropertyError([f"negative off-diagonal at ({a + 1},{b_ + 1}) for x={x[n].tolist()}"])
        q[:, diag, diag] = -q.sum(axis=2)
        return q

    def rate_matrix_at(self, x) -> RateMatrix:
        x = np.asarray(x, float).reshape(1, self.dim_x)
        raw = np.asarray(self.rate_matrix(x), float).reshape(self.num_regimes, self.num_regimes)
        return RateMatrix(raw)

    def check_equilibrium(self, n_marks: int = 100, seed: int = 0):
        """Assumption (A1) at the single point x = 0."""
        m = self.num_regimes
        zero = np.zeros((m, self.dim_x))
        labels = np.arange(1, m + 1)
        if np.any(np.abs(self.b(zero, labels)) > 0):
            raise ModelError("drift", "has_equilibrium set but drift(0, i) != 0")
        if np.any(np.abs(self.sigma(zero, labels)) > 0):
            raise ModelError("diffusion", "has_equilibrium set but diffusion(0, i) != 0")
        marks = self.marks.sample(np.random.default_rng(seed), n_marks)
        zx = np.zeros((n_marks, self.dim_x))
        for i in labels:
            if np.any(np.abs(self.g(zx, np.full(n_marks, i), marks)) > 0):
                raise ModelError("jump_coeff", f"has_equilibrium set but jump_coeff(0, {i}, .) != 0")

    def describe(self) -> dict:
        return {
            "name": self.name,
            "dim_x": self.dim_x,
            "num_regimes": self.num_regimes,
            "dim_w": self.dim_w,
            "jump_rate": self.jump_rate,
            "marks": self.marks.describe(),
            "has_equilibrium": self.has_equilibrium,
        }


@dataclass(frozen=True)
class LinearizedModel:
    b_mats: list
    sigma_mats: list
    q_hat: RateMatrix
    g_star: list
    jump_rate: float
    probe: dict = field(default_factory=dict)

    def __post_init__(self):
        if any(g < 0 for g in self.g_star):
            raise ModelError("g_star", "must be nonnegative")
        if len(self.b_mats) != self.q_hat.m or len(self.sigma_mats) != self.q_hat.m:
            raise ModelError("b_mats", "one matrix per regime required")

    @property
    def m(self) -> int:
        return self.q_hat.m

    @property
    def r(self) -> int:
        return np.asarray(self.b_mats[0]).shape[0]

    @classmethod
    def scalar(cls, b, sigma, q_hat, g_star, jump_rate):
        """Convenience constructor for r = d = 1."""
        q = q_hat if isinstance(q_hat, RateMatrix) else RateMatrix(np.atleast_2d(q_hat))
        return cls(
            b_mats=[np.array([[float(v)]]) for v in b],
            sigma_mats=[[np.array([[float(v)]])] for v in sigma],
            q_hat=q,
            g_star=[float(v) for v in g_star],
            jump_rate=float(jump_rate),
        )

    def relabel(self, perm) -> "LinearizedModel":
        """Regime ``perm[k]`` of the result is regime ``k`` of self (0-based perm)."""
        inv = np.argsort(perm)
        q = self.q_hat.entries[np.ix_(inv, inv)]
        return LinearizedModel(
            [self.b_mats[k] for k in inv],
            [self.sigma_mats[k] for k in inv],
            RateMatrix(q),
            [self.g_star[k] for k in inv],
            self.jump_rate,
            self.probe,
        )


def _central_jacobians(model: RegimeModel, h: float):
    r, d, m = model.dim_x, model.dim_w, model.num_regimes
    b_mats = [np.zeros((r, r)) for _ in range(m)]
    s_mats = [[np.zeros((r, r)) for _ in range(d)] for _ in range(m)]
    for i in range(1, m + 1):
        pts = np.concatenate([h * np.eye(r), -h * np.eye(r)])
        lab = np.full(2 * r, i)
        bv = model.b(pts, lab)
        sv = model.sigma(pts, lab)
        for k in range(r):
            b_mats[i - 1][:, k] = (bv[k] - bv[r + k]) / (2 * h)
            for l in range(d):
                s_mats[i - 1][l][:, k] = (sv[k, :, l] - sv[r + k, :, l]) / (2 * h)
    return b_mats, s_mats


def linearize(model: RegimeModel, fd_step: float = 1e-5, seed: int = 0) -> LinearizedModel:
    """Local-linear data at the origin.

    Jacobians come from central differences at ``fd_step`` and ``fd_step / 2``
    combined by Richardson extrapolation; the gap between the two passes is
    reported and warned about when large. ``g_star`` is the
    largest observed ratio |g(x, i, gamma)| / |x| over a probe set.
    """
    if not model.has_equilibrium:
        raise ModelError("has_equilibrium", "linearization needs an equilibrium at 0")
    if not fd_step > 0:
        raise ModelError("fd_step", "must be positive")
    b1, s1 = _central_jacobians(model, fd_step)
    b2, s2 = _central_jacobians(model, fd_step / 2)
    worst = 0.0
    for i in range(model.num_regimes):
        mats = [(b1[i], b2[i])] + list(zip(s1[i], s2[i]))
        for a, c in mats:
            scale = max(1.0, float(np.max(np.abs(c))))
            worst = max(worst, float(np.max(np.abs(a - c))) / scale)
    if worst > 1e-4:
        warnings.warn(f"finite-difference residual {worst:.2e} exceeds 1e-4 relative", RuntimeWarning)

    radii = np.logspace(-6, 2, 64)
    n_dirs, n_marks = 16, 100
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((n_dirs, model.dim_x))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    marks = model.marks.sample(rng, n_marks)
    pts = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, model.dim_x)
    big_x = np.repeat(pts, n_marks, axis=0)
    big_m = np.tile(marks, len(pts))
    norms = np.linalg.norm(big_x, axis=1)
    g_star = []
    with np.errstate(all="ignore"):
        for i in range(1, model.num_regimes + 1):
            gv = model.g(big_x, np.full(len(big_x), i), big_m)
            ratio = np.linalg.norm(gv, axis=1) / norms
            g_star.append(float(np.nanmax(ratio)))
    zero = np.zeros(model.dim_x)
    b_mats = [(4 * c - a) / 3 for a, c in zip(b1, b2)]
    s_mats = [[(4 * c - a) / 3 for a, c in zip(sa, sc)] for sa, sc in zip(s1, s2)]
    return LinearizedModel(
        b_mats=b_mats,
        sigma_mats=s_mats,
        q_hat=model.rate_matrix_at(zero),
        g_star=g_star,
        jump_rate=float(model.jump_rate),
        probe={
            "fd_step": fd_step,
            "fd_residual": worst,
            "g_star_radii": [1e-6, 1e2, 64],
            "g_star_directions": n_dirs,
            "g_star_marks": n_marks,
            "seed": seed,
        },
    )


# -- built-in examples -------------------------------------------------------

def _col(v):
    return np.asarray(v, float)[:, None]


def _ex61() -> RegimeModel:
    def drift(x, i):
        x = x[:, 0]
        return _col(np.where(np.asarray(i) == 1, x * np.sin(x) / 8, x * np.cos(x) / 2))

    def diffusion(x, i):
        x = x[:, 0]
        return np.where(np.asarray(i) == 1, 1.5 * x, 0.5 * x)[:, None, None]

    def jump(x, i, marks):
        return x.copy()

    q = np.array([[-1.0, 1.0], [3.0, -3.0]])

    def rates(x):
        return np.broadcast_to(q, (x.shape[0], 2, 2)).copy()

    def drift_dx(x, i):
        x = x[:, 0]
        return _col(np.where(np.asarray(i) == 1, (np.sin(x) + x * np.cos(x)) / 8, (np.cos(x) - x * np.sin(x)) / 2))

    def diffusion_dx(x, i):
        return np.broadcast_to(np.where(np.asarray(i) == 1, 1.5, 0.5), (x.shape[0],))[:, None, None].copy()

    def jump_dx(x, i, marks):
        return np.ones_like(x)

    return RegimeModel(
        dim_x=1, num_regimes=2, dim_w=1,
        drift=drift, diffusion=diffusion, jump_coeff=jump,
        jump_rate=1 / 8, rate_matrix=rates, has_equilibrium=True, name="ex61",
        drift_dx=drift_dx, diffusion_dx=diffusion_dx, jump_coeff_dx=jump_dx,
    )


def _ex62() -> RegimeModel:
    def drift(x, i):
        x = x[:, 0]
        s, c = np.sin(x), np.cos(x)
        i = np.asarray(i)
        return _col(np.select([i == 1, i == 2], [x + s, 2 * x + x * s * c], 3 * x + s * s))

    def diffusion(x, i):
        x = x[:, 0]
        s, c = np.sin(x), np.cos(x)
        i = np.asarray(i)
        with np.errstate(divide="ignore", invalid="ignore"):
            third = x + x / (1 + x) * s
        return np.select([i == 1, i == 2], [x + x * s, 3 * x + x * c * s], third)[:, None, None]

    def jump(x, i, marks):
        return x.copy()

    def rates(x):
        x = x[:, 0]
        s, c = np.sin(x), np.cos(x)
        ac = np.abs(c)
        x2 = x * x / (1 + x * x)
        ax = np.abs(x) / (1 + np.abs(x))
        q = np.empty((x.shape[0], 3, 3))
        q[:, 0, 0] = -3 - ac + s * s * c
        q[:, 0, 1] = 1 + ac
        q[:, 0, 2] = 2 - s * s * c
        q[:, 1, 0] = 1.0
        q[:, 1, 1] = -1 - x2
        q[:, 1, 2] = x2
        q[:, 2, 0] = 2 - s * c
        q[:, 2, 1] = 1 - ax * c
        q[:, 2, 2] = -3 + s * c + ax * c
        return q

    return RegimeModel(
        dim_x=1, num_regimes=3, dim_w=1,
        drift=drift, diffusion=diffusion, jump_coeff=jump,
        jump_rate=1.0, rate_matrix=rates, has_equilibrium=True, name="ex62",
    )


BUILTIN_IDS = ("ex61", "ex62")


def builtin_example(example_id: str) -> RegimeModel:
    """The two worked examples: ``ex61`` (Markov switching) and ``ex62``
    (state-dependent switching, three regimes)."""
    if example_id == "ex61":
        return _ex61()
    if example_id == "ex62":
        return _ex62()
    raise ModelError("example", f"unknown example {example_id!r}; choose from {BUILTIN_IDS}")
