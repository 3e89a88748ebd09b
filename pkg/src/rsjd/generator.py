"""Generators of the switching jump diffusion and Lyapunov-condition scans.

``G f(x, i) = 1/2 tr(sigma sigma' Hf) + b' grad f + sum_j q_ij(x) (f(x, j) - f(x, i))
            + lambda * E[f(x + g(x, i, gamma), i) - f(x, i)]``

The coupled generator acts on functions of the difference of the augmented
states ``x~^i - y~^j`` in R^{m r}, where ``x~^i`` places ``x`` in block ``i``
and zeros elsewhere.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .model import RegimeModel
from .switching import global_intervals

__all__ = [
    "GeneratorError",
    "TestFunction",
    "GeneratorTerms",
    "apply_generator",
    "generator_terms",
    "augment",
    "overlap_weights",
    "apply_coupled_generator",
    "ScanRegion",
    "ScanReport",
    "lyapunov_scan",
]


class GeneratorError(ValueError):
    def __init__(self, term: str, message: str):
        super().__init__(f"{term}: {message}")
        self.term = term


def _as_batch(x, r):
    x = np.asarray(x, float)
    return x.reshape(-1, r)


class TestFunction:
    """A batched function ``f(x, i)`` with optional analytic derivatives.

    ``value(x, i)``: x (n, r), i (n,) regime labels -> (n,).
    ``gradient`` -> (n, r), ``hessian`` -> (n, r, r). Missing derivatives
    are taken by central differences.
    """

    __test__ = False  # not a pytest class

    GRAD_STEP = 1e-6
    HESS_STEP = 1e-4

    def __init__(self, value: Callable, gradient: Optional[Callable] = None,
                 hessian: Optional[Callable] = None, name: str = "f"):
        self.value = value
        self._gradient = gradient
        self._hessian = hessian
        self.name = name

    def __call__(self, x, i):
        x = np.asarray(x, float)
        return np.asarray(self.value(x, np.broadcast_to(np.asarray(i), x.shape[:1])), float)

    @property
    def analytic(self) -> bool:
        return self._gradient is not None and self._hessian is not None

    def gradient(self, x, i):
        if self._gradient is not None:
            return np.asarray(self._gradient(x, i), float).reshape(x.shape)
        return self.fd_gradient(x, i)

    def hessian(self, x, i):
        if self._hessian is not None:
            n, r = x.shape
            return np.asarray(self._hessian(x, i), float).reshape(n, r, r)
        return self.fd_hessian(x, i)

    def fd_gradient(self, x, i):
        n, r = x.shape
        h = self.GRAD_STEP * np.maximum(1.0, np.abs(x))
        out = np.empty((n, r))
        for k in range(r):
            e = np.zeros_like(x)
            e[:, k] = h[:, k]
            out[:, k] = (self(x + e, i) - self(x - e, i)) / (2 * h[:, k])
        return out

    def fd_hessian(self, x, i):
        n, r = x.shape
        h = self.HESS_STEP * np.maximum(1.0, np.abs(x))
        f0 = self(x, i)
        out = np.empty((n, r, r))
        for k in range(r):
            ek = np.zeros_like(x)
            ek[:, k] = h[:, k]
            out[:, k, k] = (self(x + ek, i) - 2 * f0 + self(x - ek, i)) / h[:, k] ** 2
            for l in range(k + 1, r):
                el = np.zeros_like(x)
                el[:, l] = h[:, l]
                v = (self(x + ek + el, i) - self(x + ek - el, i)
                     - self(x - ek + el, i) + self(x - ek - el, i)) / (4 * h[:, k] * h[:, l])
                out[:, k, l] = out[:, l, k] = v
        return out

    def check_derivatives(self, points, regimes, rtol: float = 1e-4) -> float:
        """Largest relative mismatch between analytic and FD derivatives."""
        x = np.asarray(points, float)
        i = np.asarray(regimes)
        worst = 0.0
        pairs = []
        if self._gradient is not None:
            pairs.append((self.gradient(x, i), self.fd_gradient(x, i)))
        if self._hessian is not None:
            pairs.append((self.hessian(x, i), self.fd_hessian(x, i)))
        for a, b in pairs:
            scale = np.maximum(1.0, np.abs(a))
            worst = max(worst, float(np.max(np.abs(a - b) / scale)))
        if worst > rtol:
            raise GeneratorError(self.name, f"analytic derivatives disagree with finite differences ({worst:.3g} > {rtol})")
        return worst

    # common candidates

    @classmethod
    def power(cls, p: float, weights=None) -> "TestFunction":
        """``c_i |x|^p`` with per-regime weights ``c`` (default all ones)."""
        w = None if weights is None else np.asarray(weights, float)

        def c(i):
            return 1.0 if w is None else w[np.asarray(i, dtype=np.int64) - 1]

        def value(x, i):
            return c(i) * np.sum(x * x, axis=1) ** (p / 2)

        def gradient(x, i):
            s = np.sum(x * x, axis=1)
            return (c(i) * p * s ** (p / 2 - 1))[:, None] * x

        def hessian(x, i):
            n, r = x.shape
            s = np.sum(x * x, axis=1)
            cc = np.broadcast_to(c(i), (n,))
            eye = np.eye(r)[None]
            outer = x[:, :, None] * x[:, None, :]
            return (cc * p * s ** (p / 2 - 1))[:, None, None] * eye + (
                cc * p * (p - 2) * s ** (p / 2 - 2))[:, None, None] * outer

        return cls(value, gradient, hessian, name=f"|x|^{p:g}")

    @classmethod
    def quadratic(cls, weights=None) -> "TestFunction":
        return cls.power(2.0, weights)

    @classmethod
    def of_regime(cls, values) -> "TestFunction":
        """Function of the regime only."""
        v = np.asarray(values, float)
        return cls(lambda x, i: v[np.asarray(i, dtype=np.int64) - 1] * np.ones(x.shape[0]),
                   lambda x, i: np.zeros_like(x),
                   lambda x, i: np.zeros(x.shape + x.shape[1:]), name="regime")


@dataclass
class GeneratorTerms:
    diffusion: np.ndarray
    drift: np.ndarray
    switching: np.ndarray
    jump: np.ndarray
    jump_stderr: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.diffusion + self.drift + self.switching + self.jump


def _marks(model: RegimeModel, n_marks: int, seed: int):
    if n_marks < 1:
        raise ValueError("n_marks must be >= 1")
    dv = model.marks.degenerate_value
    if dv is not None:
        return np.array([dv])
    return model.marks.sample(np.random.default_rng(seed), n_marks)


def _check(term, arr):
    if not np.all(np.isfinite(arr)):
        raise GeneratorError(term, "non-finite value")
    return arr


def generator_terms(model: RegimeModel, f: TestFunction, x, i, n_marks: int = 10_000,
                    seed: int = 0, marks=None) -> GeneratorTerms:
    """Term-by-term ``G f`` on a batch of points ``x`` (n, r) with labels ``i``."""
    r, m = model.dim_x, model.num_regimes
    x = _as_batch(x, r)
    n = x.shape[0]
    i = np.broadcast_to(np.asarray(i, dtype=np.int64), (n,))
    if np.any((i < 1) | (i > m)):
        raise ValueError(f"regime outside 1..{m}")
    with np.errstate(all="ignore"):
        f0 = _check("f", f(x, i))
        sig = model.sigma(x, i)
        a = np.einsum("nrd,nsd->nrs", sig, sig)
        diffusion = _check("diffusion", 0.5 * np.einsum("nrs,nrs->n", a, f.hessian(x, i)))
        drift = _check("drift", np.einsum("nr,nr->n", model.b(x, i), f.gradient(x, i)))
        q = model.rates(x)
        fj = np.stack([f(x, np.full(n, j + 1)) for j in range(m)], axis=1)
        qrow = q[np.arange(n), i - 1]
        switching = _check("switching", np.einsum("nj,nj->n", qrow, fj - f0[:, None]))
        if model.jump_rate > 0:
            mk = _marks(model, n_marks, seed) if marks is None else np.asarray(marks, float)
            M = len(mk)
            xr = np.repeat(x, M, axis=0)
            ir = np.repeat(i, M)
            mr = np.tile(mk, n)
            diff = (f(xr + model.g(xr, ir, mr), ir) - np.repeat(f0, M)).reshape(n, M)
            diff = _check("jump", diff)
            jump = model.jump_rate * diff.mean(axis=1)
            jump_se = model.jump_rate * (diff.std(axis=1, ddof=1) / np.sqrt(M) if M > 1 else np.zeros(n))
        else:
            jump = np.zeros(n)
            jump_se = np.zeros(n)
    return GeneratorTerms(diffusion, drift, switching, jump, jump_se)


def apply_generator(model: RegimeModel, f: TestFunction, x, i: int, n_marks: int = 10_000, seed: int = 0) -> float:
    """``G f(x, i)`` at a single point."""
    terms = generator_terms(model, f, np.asarray(x, float).reshape(1, model.dim_x), i, n_marks, seed)
    return float(terms.total[0])


# -- coupled generator ----------------------------------------------------------

def augment(x, i: int, m: int) -> np.ndarray:
    """Place ``x`` (r,) in block ``i`` of a zero vector of length m*r."""
    x = np.asarray(x, float).reshape(-1)
    r = len(x)
    out = np.zeros(m * r)
    out[(i - 1) * r: i * r] = x
    return out


def overlap_weights(Qx, Qy, i: int, j: int) -> np.ndarray:
    """Lebesgue measure of Delta_ik(x) intersected with Delta_jl(y).

    Intervals come from the lexicographic end-to-end layout of each matrix.
    Entry ``[k-1, l-1]``; zero for ``k == i`` or ``l == j``.
    """
    Ix, Iy = global_intervals(Qx), global_intervals(Qy)
    m = np.asarray(Qx).shape[0]
    w = np.zeros((m, m))
    for k in range(1, m + 1):
        if k == i:
            continue
        a0, a1 = Ix[(i, k)]
        for l in range(1, m + 1):
            if l == j:
                continue
            b0, b1 = Iy[(j, l)]
            w[k - 1, l - 1] = max(0.0, min(a1, b1) - max(a0, b0))
    return w


def _fd_grad_hess(f, z):
    n = z.size
    h1 = TestFunction.GRAD_STEP * np.maximum(1.0, np.abs(z))
    h2 = TestFunction.HESS_STEP * np.maximum(1.0, np.abs(z))
    grad = np.empty(n)
    hess = np.empty((n, n))
    f0 = f(z)
    for k in range(n):
        e = np.zeros(n)
        e[k] = h1[k]
        grad[k] = (f(z + e) - f(z - e)) / (2 * h1[k])
        e[k] = h2[k]
        hess[k, k] = (f(z + e) - 2 * f0 + f(z - e)) / h2[k] ** 2
        for l in range(k + 1, n):
            d = np.zeros(n)
            d[l] = h2[l]
            hess[k, l] = hess[l, k] = (f(z + e + d) - f(z + e - d) - f(z - e + d) + f(z - e - d)) / (4 * h2[k] * h2[l])
    return grad, hess


def apply_coupled_generator(model: RegimeModel, f: Callable, x, i: int, y, j: int,
                            n_marks: int = 10_000, seed: int = 0,
                            gradient: Optional[Callable] = None, hessian: Optional[Callable] = None) -> float:
    """Coupled generator applied to ``f`` at ``x~^i - y~^j``.

    ``f`` maps a vector in R^{m r} to a real. Derivatives are central
    differences unless ``gradient``/``hessian`` are supplied.
    """
    r, m = model.dim_x, model.num_regimes
    x = np.asarray(x, float).reshape(1, r)
    y = np.asarray(y, float).reshape(1, r)
    F = lambda z: float(f(np.asarray(z, float)))  # noqa: E731

    def aug(v, k):
        return augment(v, k, m)

    z = aug(x[0], i) - aug(y[0], j)
    with np.errstate(all="ignore"):
        if gradient is not None and hessian is not None:
            grad = np.asarray(gradient(z), float)
            hess = np.asarray(hessian(z), float)
        else:
            grad, hess = _fd_grad_hess(F, z)
        li, lj = np.array([i]), np.array([j])
        S = np.zeros((m * r, model.dim_w))
        S[(i - 1) * r: i * r] += model.sigma(x, li)[0]
        S[(j - 1) * r: j * r] -= model.sigma(y, lj)[0]
        diffusion = _check("diffusion", 0.5 * np.sum((S @ S.T) * hess))
        bt = aug(model.b(x, li)[0], i) - aug(model.b(y, lj)[0], j)
        drift = _check("drift", float(bt @ grad))

        Qx, Qy = model.rates(x)[0], model.rates(y)[0]
        fz = lambda k, l: F(aug(x[0], k) - aug(y[0], l))  # noqa: E731
        switching = sum(Qx[i - 1, k - 1] * fz(k, j) for k in range(1, m + 1))
        switching += sum(Qy[j - 1, k - 1] * fz(i, k) for k in range(1, m + 1))
        w = overlap_weights(Qx, Qy, i, j)
        for k in range(1, m + 1):
            for l in range(1, m + 1):
                if w[k - 1, l - 1] > 0:
                    switching += w[k - 1, l - 1] * (fz(k, l) - fz(i, l) - fz(k, j) + fz(i, j))
        switching = _check("switching", switching)

        jump = 0.0
        if model.jump_rate > 0:
            mk = _marks(model, n_marks, seed)
            M = len(mk)
            gx = model.g(np.repeat(x, M, axis=0), np.full(M, i), mk)
            gy = model.g(np.repeat(y, M, axis=0), np.full(M, j), mk)
            f0 = F(z)
            vals = [F(aug(x[0] + gx[q], i) - aug(y[0] + gy[q], j)) - f0 for q in range(M)]
            jump = _check("jump", model.jump_rate * float(np.mean(vals)))
    return float(diffusion + drift + switching + jump)


# -- Lyapunov scans -------------------------------------------------------------

@dataclass(frozen=True)
class ScanRegion:
    """Annulus ``inner <= |x| <= outer`` sampled on a log-radial grid."""

    inner: float
    outer: float
    n_radii: int = 64
    n_directions: int = 16
    regimes: Optional[tuple] = None
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.inner < self.outer):
            raise ValueError("scan region needs 0 < inner < outer (x = 0 is excluded)")
        if self.n_radii < 1 or self.n_directions < 1:
            raise ValueError("scan grid must be nonempty")

    def directions(self, r: int) -> np.ndarray:
        if r == 1:
            return np.array([[1.0], [-1.0]])
        if r == 2:
            th = 2 * np.pi * np.arange(self.n_directions) / self.n_directions
            return np.stack([np.cos(th), np.sin(th)], axis=1)
        v = np.random.default_rng(self.seed).standard_normal((self.n_directions, r))
        return v / np.linalg.norm(v, axis=1, keepdims=True)

    def radii(self) -> np.ndarray:
        return np.geomspace(self.inner, self.outer, self.n_radii)

    def points(self, r: int) -> np.ndarray:
        rad = self.radii()
        dirs = self.directions(r)
        return (rad[:, None, None] * dirs[None]).reshape(-1, r)

    def spec(self, r: int, m: int) -> dict:
        return {
            "inner": self.inner, "outer": self.outer, "n_radii": self.n_radii,
            "n_directions": len(self.directions(r)), "spacing": "log-radial",
            "regimes": list(self.regimes or range(1, m + 1)),
        }


@dataclass
class ScanReport:
    max_violation: float
    argmax_point: list
    argmax_regime: int
    violation_fraction: float
    grid_spec: dict
    mode: str
    constant: float
    bounds: Optional[dict] = None
    radial_inf: Optional[list] = None
    values: np.ndarray = field(default=None, repr=False)

    @property
    def holds(self) -> bool:
        return self.violation_fraction == 0.0

    def to_dict(self) -> dict:
        out = {
            "max_violation": self.max_violation,
            "argmax_point": self.argmax_point,
            "argmax_regime": self.argmax_regime,
            "violation_fraction": self.violation_fraction,
            "grid_spec": {**self.grid_spec, "mode": self.mode, "constant": self.constant},
        }
        if self.bounds is not None:
            out["bounds"] = self.bounds
        if self.radial_inf is not None:
            out["radial_inf"] = self.radial_inf
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def lyapunov_scan(model: RegimeModel, V: TestFunction, region: ScanRegion, *,
                  k: Optional[float] = None, beta: Optional[float] = None,
                  p: Optional[float] = None, k1: Optional[float] = None, k2: Optional[float] = None,
                  n_marks: int = 1000, seed: int = 0) -> ScanReport:
    """Evaluate ``G V + c V`` over the grid, ``c`` being the decay rate ``k``
    or the margin ``beta``. A point violates the condition when the value is
    positive."""
    if (k is None) == (beta is None):
        raise ValueError("give exactly one of k (decay rate) or beta (margin)")
    c, mode = (k, "decay") if k is not None else (beta, "margin")
    r, m = model.dim_x, model.num_regimes
    regimes = list(region.regimes or range(1, m + 1))
    pts = region.points(r)
    n = len(pts)
    X = np.tile(pts, (len(regimes), 1))
    I = np.repeat(np.asarray(regimes, dtype=np.int64), n)
    v = V(X, I)
    bad = ~(v > 0)
    if bad.any():
        q = int(np.argmax(bad))
        raise GeneratorError("V", f"not positive at x={X[q].tolist()}, regime {int(I[q])}")
    marks = _marks(model, n_marks, seed) if model.jump_rate > 0 else None
    terms = generator_terms(model, V, X, I, marks=marks)
    vals = terms.total + c * v
    q = int(np.argmax(vals))

    bounds = None
    if p is not None:
        ratio = v / np.linalg.norm(X, axis=1) ** p
        lo, hi = float(ratio.min()), float(ratio.max())
        bounds = {"p": p, "min_ratio": lo, "max_ratio": hi}
        if k1 is not None and k2 is not None:
            bounds.update(k1=k1, k2=k2, ok=bool(k1 <= lo and hi <= k2))
    nd = len(region.directions(r))
    shells = v.reshape(len(regimes), region.n_radii, nd).min(axis=(0, 2))
    radial = [[float(rad), float(val)] for rad, val in zip(region.radii(), shells)]

    return ScanReport(
        max_violation=float(vals[q]),
        argmax_point=X[q].tolist(),
        argmax_regime=int(I[q]),
        violation_fraction=float(np.mean(vals > 0)),
        grid_spec=region.spec(r, m),
        mode=mode,
        constant=float(c),
        bounds=bounds,
        radial_inf=radial,
        values=vals.reshape(len(regimes), region.n_radii, nd),
    )
