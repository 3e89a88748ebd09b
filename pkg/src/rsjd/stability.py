"""Stability criteria and Monte Carlo stability diagnostics.

Closed-form pieces work on a :class:`~rsjd.model.LinearizedModel`:
stationary law of the frozen-at-zero chain, the weighted eigenvalue sum
criterion and, for scalar models, the sharp almost-sure exponent.

Monte Carlo pieces run ensembles through :mod:`rsjd.engine`: moment and
almost-sure exponents, an empirical Lyapunov function, tightness and
coupling diagnostics, and distribution distances between checkpoints.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from itertools import combinations
from typing import Optional

import numpy as np

from .engine import BLOCK_SIZE, AllPathsDivergedError, PathNoise, SimConfig, integrate, run_ensemble, _threads
from .model import LinearizedModel, RateMatrix, RegimeModel, validate_q_property

__all__ = [
    "ReducibleChainError",
    "StationaryDistribution",
    "stationary_distribution",
    "closed_classes",
    "jacobi_eigenvalues",
    "lambda_max_sym",
    "CriterionResult",
    "criterion_cor34",
    "scalar_sharp_exponent",
    "ExponentEstimate",
    "estimate_moment_exponent",
    "estimate_as_exponent",
    "empirical_lyapunov",
    "check_p1",
    "check_p2",
    "ks_threshold",
    "distribution_convergence",
    "StabilityReport",
    "verdict_from_ci",
]

EDGE_TOL = 1e-14
N_BOOT = 1000
KS_C_1PCT = 1.628


class ReducibleChainError(ValueError):
    def __init__(self, classes):
        self.classes = classes
        names = ", ".join("{" + ",".join(str(k) for k in c) + "}" for c in classes)
        super().__init__(f"rate matrix is reducible; closed classes: {names}")


def _q(Q) -> np.ndarray:
    return np.asarray(Q.entries if isinstance(Q, RateMatrix) else Q, float)


# -- stationary law -------------------------------------------------------------

def closed_classes(Q) -> list:
    """Closed communicating classes (1-based labels) of the rate digraph."""
    from scipy.sparse.csgraph import connected_components

    q = _q(Q)
    adj = (q > EDGE_TOL) & ~np.eye(len(q), dtype=bool)
    n_comp, lab = connected_components(adj, directed=True, connection="strong")
    out = []
    for c in range(n_comp):
        members = np.flatnonzero(lab == c)
        others = np.flatnonzero(lab != c)
        if not adj[np.ix_(members, others)].any():
            out.append(tuple(int(k) + 1 for k in members))
    return out


@dataclass(frozen=True)
class StationaryDistribution:
    mu: np.ndarray
    residual: float

    def __iter__(self):
        return iter(self.mu)

    def __len__(self):
        return len(self.mu)

    def __getitem__(self, k):
        return self.mu[k]


def stationary_distribution(Q) -> StationaryDistribution:
    """Solve ``mu Q = 0``, ``sum mu = 1`` for an irreducible rate matrix."""
    q = _q(Q)
    res = validate_q_property(q)
    if not res:
        raise ValueError("not a valid rate matrix: " + "; ".join(res.violations))
    m = len(q)
    if m > 1:
        comps = closed_classes(q)
        if len(comps) != 1 or len(comps[0]) != m:
            raise ReducibleChainError(comps)
    A = q.T.copy()
    A[-1, :] = 1.0
    rhs = np.zeros(m)
    rhs[-1] = 1.0
    mu = np.linalg.solve(A, rhs)
    mu = np.where(np.abs(mu) < 1e-300, 0.0, mu)
    return StationaryDistribution(mu, float(np.max(np.abs(mu @ q))))


# -- symmetric eigenvalues ------------------------------------------------------

def jacobi_eigenvalues(S, tol: float = 1e-12, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending."""
    A = np.array(S, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("square matrix required")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix must be finite")
    scale = max(np.max(np.abs(A)), 1e-300)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(A, -1) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1))
                c = 1 / math.sqrt(t * t + 1)
                s = t * c
                Ap, Aq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * Ap - s * Aq
                A[:, q] = s * Ap + c * Aq
                Ap, Aq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * Ap - s * Aq
                A[q, :] = s * Ap + c * Aq
    return np.sort(np.diag(A))


def lambda_max_sym(A) -> float:
    """Largest eigenvalue of the symmetric part ``(A + A') / 2``."""
    A = np.atleast_2d(np.asarray(A, float))
    return float(jacobi_eigenvalues((A + A.T) / 2)[-1])


# -- closed-form criteria -------------------------------------------------------

ELEMENTWISE_NOTE = (
    "The sum is a sufficient condition only: a value >= 0 is inconclusive, "
    "never evidence of instability."
)

EX62_NOTE = (
    "Known discrepancy: the worked three-regime example (ex62) is stated to be "
    "asymptotically stable in the large by this criterion, but evaluating the sum "
    "with its printed constants b=(2,2,3), sigma=(1,3,1), g*=(1,1,1), lambda=1, "
    "mu=(3/13,8/13,2/13) gives +79.5/13 > 0. Stability is supported instead by the "
    "scalar sharp exponent (about -0.1145) and the Monte Carlo almost-sure exponent. "
    "The criterion is implemented exactly as printed and not altered."
)


@dataclass
class CriterionResult:
    value: float
    verdict: str
    terms: list
    mu: list
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def criterion_cor34(lm: LinearizedModel) -> CriterionResult:
    """``sum_i mu_i (Lmax((B_i + B_i')/2) + 1/2 Lmax(sum_l S_li S_li') + lambda g*_i)``.

    Verdict is ``stable-evidence`` iff the sum is strictly negative.
    """
    mu = stationary_distribution(lm.q_hat).mu
    terms = []
    for i in range(lm.m):
        B = np.atleast_2d(np.asarray(lm.b_mats[i], float))
        SS = sum(np.atleast_2d(s) @ np.atleast_2d(s).T for s in lm.sigma_mats[i])
        t = lambda_max_sym(B) + 0.5 * lambda_max_sym(SS) + lm.jump_rate * lm.g_star[i]
        terms.append(float(t))
    value = float(np.dot(mu, terms))
    verdict = "stable-evidence" if value < 0 else "inconclusive"
    notes = [] if value < 0 else [ELEMENTWISE_NOTE]
    return CriterionResult(value, verdict, terms, mu.tolist(), notes)


def scalar_sharp_exponent(lm: LinearizedModel) -> float:
    """``sum_i mu_i (b_i - sigma_i^2 / 2 + lambda ln(1 + g*_i))`` for r = 1,
    reading the jumps as ``g(x, i) = g*_i x``."""
    if lm.r != 1:
        raise ValueError("scalar sharp exponent needs a scalar state (r = 1)")
    mu = stationary_distribution(lm.q_hat).mu
    tot = 0.0
    for i in range(lm.m):
        b = float(np.asarray(lm.b_mats[i]).reshape(-1)[0])
        s2 = sum(float(np.asarray(s).reshape(-1)[0]) ** 2 for s in lm.sigma_mats[i])
        tot += mu[i] * (b - s2 / 2 + lm.jump_rate * math.log1p(lm.g_star[i]))
    return float(tot)


# -- exponent estimates -----------------------------------------------------------

def verdict_from_ci(lo: float, hi: float) -> str:
    if hi < 0:
        return "stable-evidence"
    if lo > 0:
        return "unstable-evidence"
    return "inconclusive"


@dataclass
class ExponentEstimate:
    estimate: float
    ci: tuple
    window: tuple
    n_paths: int
    kind: str                 # "as", "moment-direct", "moment-resampled"
    p: Optional[float] = None
    divergent_fraction: float = 0.0
    frozen_fraction: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return verdict_from_ci(*self.ci)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["ci"] = list(self.ci)
        out["window"] = list(self.window)
        out["verdict"] = self.verdict
        return out


def _check_start(x0):
    x0 = np.asarray(x0, float).reshape(-1)
    if not np.all(np.isfinite(x0)) or np.linalg.norm(x0) == 0:
        raise ValueError("x0 must be finite and nonzero")
    return x0


def _slope(t, y):
    tc = t - t.mean()
    return float(np.dot(tc, y - y.mean()) / np.dot(tc, tc))


def _window(times, T):
    sel = times >= T / 2 - 1e-12
    if sel.sum() < 2:
        raise ValueError("fit window [T/2, T] holds fewer than two record times; lower record_stride")
    return sel


def estimate_moment_exponent(model: RegimeModel, x0, a0: int, p: float, cfg: SimConfig, *,
                             method: str = "resampled", threads: Optional[int] = None,
                             n_boot: int = N_BOOT) -> ExponentEstimate:
    """Growth rate of ``E|X(t)|^p``: least-squares slope of ``ln E|X(t)|^p``
    over ``[T/2, T]``. Negative values mean the moment decays.

    ``method="direct"`` averages ``|X(t)|^p`` over independent paths.
    ``method="resampled"`` propagates a population of walkers and, after
    every record interval, reweights by ``|X|^p`` growth and resamples; the
    log-moment is the running sum of log mean weights. The direct average is
    dominated by rare large paths when ``|X|^p`` is heavy tailed; the
    resampled form keeps the population where the moment's mass is.
    """
    x0 = _check_start(x0)
    if not p > 0:
        raise ValueError("p must be positive")
    if method == "direct":
        return _moment_direct(model, x0, a0, p, cfg, threads, n_boot)
    if method == "resampled":
        return _moment_resampled(model, x0, a0, p, cfg, threads)
    raise ValueError(f"unknown method {method!r}")


def _moment_direct(model, x0, a0, p, cfg, threads, n_boot):
    res = run_ensemble(model, x0, a0, cfg, threads=threads)
    ok = ~res.divergent
    if not ok.any():
        raise AllPathsDivergedError("all paths diverged")
    norms = np.linalg.norm(res.X[ok], axis=2) ** p
    sel = _window(res.times, cfg.T)
    t = res.times[sel]
    W = norms[:, sel]
    est = _slope(t, np.log(W.mean(axis=0)))
    rng = np.random.default_rng(cfg.seed)
    n = W.shape[0]
    slopes = np.empty(n_boot)
    for b in range(n_boot):
        counts = np.bincount(rng.integers(0, n, n), minlength=n)
        slopes[b] = _slope(t, np.log(counts @ W / n))
    lo, hi = np.percentile(slopes, [2.5, 97.5])
    return ExponentEstimate(
        est, (float(min(lo, est)), float(max(hi, est))), (float(t[0]), float(t[-1])), int(res.n),
        "moment-direct", p, float(1 - ok.mean()), float(np.mean(np.isfinite(res.freeze_time))),
    )


def _systematic(w, u):
    c = np.cumsum(w / w.sum())
    c[-1] = 1.0
    n = len(w)
    return np.searchsorted(c, (np.arange(n) + u) / n, side="right")


def _moment_resampled(model, x0, a0, p, cfg, threads):
    n, r = cfg.n_paths, model.dim_x
    stride = cfg.record_stride
    blocks = [(s, min(s + BLOCK_SIZE, n)) for s in range(0, n, BLOCK_SIZE)]
    noises = [PathNoise(model, cfg.seed, np.arange(lo, hi), cfg.T, cfg.n_steps) for lo, hi in blocks]
    X = np.broadcast_to(x0, (n, r)).copy()
    A = np.full(n, int(a0), dtype=np.int64)
    select_rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(2**32,)))
    nt = _threads(threads)
    times, logm, var = [0.0], [p * math.log(np.linalg.norm(x0))], [0.0]
    n_div = 0

    def advance(args):
        (lo, hi), noise, k0, k1 = args
        out = integrate(model, X[lo:hi], A[lo:hi], noise, cfg.dt, k0, k1, stride=k1 - k0, floor=cfg.underflow_floor)
        return out.final, out.final_regime, out.divergent

    k = 0
    from concurrent.futures import ThreadPoolExecutor
    pool = ThreadPoolExecutor(max_workers=nt) if nt > 1 and len(blocks) > 1 else None
    try:
        while k < cfg.n_steps:
            k1 = min(k + stride, cfg.n_steps)
            jobs = [(b, nz, k, k1) for b, nz in zip(blocks, noises)]
            parts = list(pool.map(advance, jobs)) if pool else [advance(j) for j in jobs]
            Xn = np.concatenate([q[0] for q in parts])
            An = np.concatenate([q[1] for q in parts])
            div = np.concatenate([q[2] for q in parts])
            n_div += int(div.sum())
            old = np.linalg.norm(X, axis=1) ** p
            new = np.linalg.norm(Xn, axis=1) ** p
            with np.errstate(all="ignore"):
                w = np.where(div | (old == 0), 0.0, new / old)
            w[~np.isfinite(w)] = 0.0
            mw = w.mean()
            if not mw > 0:
                raise AllPathsDivergedError("all walkers collapsed (diverged or hit the underflow floor)")
            times.append(k1 * cfg.dt)
            logm.append(logm[-1] + math.log(mw))
            var.append(var[-1] + float(w.var(ddof=1) / (n * mw * mw)) if n > 1 else 0.0)
            idx = _systematic(w, select_rng.random())
            X, A = Xn[idx], An[idx]
            k = k1
    finally:
        if pool:
            pool.shutdown()

    times, logm, var = map(np.asarray, (times, logm, var))
    sel = _window(times, cfg.T)
    t = times[sel]
    est = _slope(t, logm[sel])
    # slope = sum_k c_k logm_k and logm_k is a running sum of increments, so
    # increment j enters with weight sum_{k >= j} c_k; increments are treated
    # as independent (delta-method variance of each log mean weight)
    c = np.zeros(len(times))
    tc = t - t.mean()
    c[sel] = tc / np.dot(tc, tc)
    weight = np.cumsum(c[::-1])[::-1][1:]
    se = float(math.sqrt(np.dot(weight ** 2, np.diff(var))))
    return ExponentEstimate(
        est, (est - 1.96 * se, est + 1.96 * se), (float(t[0]), float(t[-1])), n,
        "moment-resampled", p, n_div / max(1, n * len(times[1:])), 0.0,
        extra={"log_moment": logm.tolist(), "times": times.tolist()},
    )


def estimate_as_exponent(model: RegimeModel, x0, a0: int, cfg: SimConfig, *,
                         threads: Optional[int] = None, n_boot: int = N_BOOT) -> ExponentEstimate:
    """Mean over paths of ``(1/T) ln(|X(T)| / |x0|)`` with a bootstrap CI.

    A path frozen at the underflow floor contributes ``(1/tau) ln(|X(tau-)|/|x0|)``
    with ``tau`` its freeze time.
    """
    x0 = _check_start(x0)
    run_cfg = SimConfig(cfg.dt, cfg.T, cfg.seed, cfg.n_paths, cfg.n_steps, cfg.underflow_floor)
    res = run_ensemble(model, x0, a0, run_cfg, threads=threads)
    ok = ~res.divergent
    if not ok.any():
        raise AllPathsDivergedError("all paths diverged")
    n0 = np.linalg.norm(x0)
    frozen = np.isfinite(res.freeze_time) & ok
    with np.errstate(divide="ignore"):
        stat = np.log(np.linalg.norm(res.final, axis=1) / n0) / cfg.T
        stat[frozen] = np.log(res.freeze_norm[frozen] / n0) / res.freeze_time[frozen]
    stat = stat[ok]
    est = float(stat.mean())
    rng = np.random.default_rng(cfg.seed)
    n = len(stat)
    boots = np.array([stat[rng.integers(0, n, n)].mean() for _ in range(n_boot)])
    lo, hi = np.percentile(boots, [2.5, 97.5])
    return ExponentEstimate(
        est, (float(min(lo, est)), float(max(hi, est))), (0.0, cfg.T), int(res.n), "as", None,
        float(1 - ok.mean()), float(frozen.mean()),
        extra={"std": float(stat.std(ddof=1)) if n > 1 else 0.0},
    )


# -- converse Lyapunov function -------------------------------------------------

def empirical_lyapunov(model: RegimeModel, p: float, T: float, grid, cfg: SimConfig, *,
                       regimes=None, threads: Optional[int] = None) -> dict:
    """Monte Carlo ``V(x, i) = int_0^T E|X^{x,i}(u)|^p du`` on a grid of
    start points, with the sandwich constants ``k1 <= V / |x|^p <= k2``.

    Every start point uses the same seed, so paths are common across points.
    """
    if not model.has_equilibrium:
        raise ValueError("empirical Lyapunov function needs a model with an equilibrium at 0")
    run_cfg = SimConfig(cfg.dt, T, cfg.seed, cfg.n_paths, cfg.record_stride, cfg.underflow_floor)
    pts = np.asarray(grid, float).reshape(-1, model.dim_x)
    regimes = list(regimes or range(1, model.num_regimes + 1))
    rows = []
    for i in regimes:
        for x in pts:
            if np.linalg.norm(x) == 0:
                rows.append({"x": x.tolist(), "regime": i, "V": 0.0, "ratio": None})
                continue
            res = run_ensemble(model, x, i, run_cfg, threads=threads)
            ok = ~res.divergent
            m = (np.linalg.norm(res.X[ok], axis=2) ** p).mean(axis=0)
            V = float(np.trapezoid(m, res.times) if hasattr(np, "trapezoid") else np.trapz(m, res.times))
            rows.append({"x": x.tolist(), "regime": i, "V": V, "ratio": V / np.linalg.norm(x) ** p})
    ratios = [r["ratio"] for r in rows if r["ratio"] is not None]
    return {
        "p": p, "T": T, "rows": rows,
        "k1": float(min(ratios)) if ratios else None,
        "k2": float(max(ratios)) if ratios else None,
    }


# -- distribution-stability diagnostics -------------------------------------------

def check_p1(model: RegimeModel, x0, a0: int, cfg: SimConfig, radii, *, threads: Optional[int] = None) -> dict:
    """``P(|X(t)| >= R)`` on the record grid for each ``R``, and its sup over t."""
    res = run_ensemble(model, x0, a0, cfg, threads=threads)
    norms = np.linalg.norm(res.X, axis=2)
    norms[res.divergent] = np.inf
    radii = [float(R) for R in radii]
    table = np.stack([(norms >= R).mean(axis=0) for R in radii], axis=1)
    return {
        "times": res.times.tolist(),
        "radii": radii,
        "exceedance": table.tolist(),
        "sup": table.max(axis=0).tolist(),
        "divergent_fraction": float(res.divergent.mean()),
    }


def check_p2(model: RegimeModel, x0, y0, i0: int, j0: int, cfg: SimConfig, *,
             eps=(1e-2,), threads: Optional[int] = None) -> dict:
    """Coupled-pair contraction diagnostics.

    * ``msd``: ``E|X^x - X^y|^2`` over t and its fitted exponential rate on [T/2, T]
    * ``augmented``: mean distance of the regime-indexed embeddings
      (equal regimes: ``|x - y|``; different regimes: ``sqrt(|x|^2 + |y|^2)``)
    * ``prob_within``: ``P(|X^x - X^y| <= eps)`` over t
    """
    res = run_ensemble(model, x0, i0, cfg, threads=threads, y0=y0, b0=j0)
    ok = ~res.divergent
    X, Y, A, B = res.X[ok], res.Y[ok], res.A[ok], res.B[ok]
    d2 = np.sum((X - Y) ** 2, axis=2)
    msd = d2.mean(axis=0)
    aug = np.where(A == B, np.sqrt(d2), np.sqrt(np.sum(X ** 2, axis=2) + np.sum(Y ** 2, axis=2))).mean(axis=0)
    sel = _window(res.times, cfg.T)
    rate = None
    if np.all(msd[sel] > 0):
        rate = _slope(res.times[sel], np.log(msd[sel]))
    return {
        "times": res.times.tolist(),
        "msd": msd.tolist(),
        "msd_rate": rate,
        "augmented": aug.tolist(),
        "prob_within": {str(e): (np.sqrt(d2) <= e).mean(axis=0).tolist() for e in eps},
        "regimes_agree": (A == B).mean(axis=0).tolist(),
        "divergent_fraction": float(1 - ok.mean()),
    }


def ks_threshold(n: int, m: int, c: float = KS_C_1PCT) -> float:
    """Asymptotic two-sample KS critical distance (1% level by default)."""
    return c * math.sqrt((n + m) / (n * m))


def _distance(xa, aa, xb, ab, m):
    from scipy.stats import ks_2samp

    fa = np.bincount(aa, minlength=m + 1)[1:] / len(aa)
    fb = np.bincount(ab, minlength=m + 1)[1:] / len(ab)
    tv = 0.5 * float(np.abs(fa - fb).sum())
    ks = 0.0
    for i in range(1, m + 1):
        sa, sb = xa[aa == i], xb[ab == i]
        if len(sa) == 0 and len(sb) == 0:
            continue
        d = 1.0 if (len(sa) == 0 or len(sb) == 0) else float(ks_2samp(sa, sb, method="asymp").statistic)
        ks += 0.5 * (fa[i - 1] + fb[i - 1]) * d
    return ks, tv


def distribution_convergence(model: RegimeModel, starts, cfg: SimConfig, t_checkpoints, *,
                             threads: Optional[int] = None) -> dict:
    """KS distances between empirical laws of ``(X(t), alpha(t))``.

    Rows compare every pair of checkpoints within a start and every pair of
    starts at each checkpoint. ``ks`` is the regime-weighted KS distance on
    X, ``tv`` the total variation between regime frequencies. All starts use
    the same seed, so identical starts give distance 0.
    """
    if model.dim_x != 1:
        raise ValueError("distribution distances are implemented for scalar state only")
    ks_idx = []
    for t in t_checkpoints:
        k = t / cfg.dt
        if abs(k - round(k)) > 1e-6 or not 0 < round(k) <= cfg.n_steps:
            raise ValueError(f"checkpoint {t} is not a grid time in (0, T]")
        ks_idx.append(int(round(k)))
    stride = math.gcd(*ks_idx) if len(ks_idx) > 1 else ks_idx[0]
    run_cfg = SimConfig(cfg.dt, cfg.T, cfg.seed, cfg.n_paths, stride, cfg.underflow_floor)
    m = model.num_regimes
    samples = []
    for x, a in starts:
        res = run_ensemble(model, x, a, run_cfg, threads=threads)
        cols = [k // stride for k in ks_idx]
        ok = ~res.divergent
        samples.append([(res.X[ok, c, 0], res.A[ok, c].astype(np.int64)) for c in cols])
    rows = []

    def add(sa, ta, sb, tb, A, B):
        ks, tv = _distance(A[0], A[1], B[0], B[1], m)
        rows.append({
            "start_a": sa, "t_a": ta, "start_b": sb, "t_b": tb, "ks": ks, "tv": tv,
            "threshold": ks_threshold(len(A[0]), len(B[0])),
        })

    for s, smp in enumerate(samples):
        for (u, ta), (v, tb) in combinations(enumerate(t_checkpoints), 2):
            add(s, ta, s, tb, smp[u], smp[v])
    for sa, sb in combinations(range(len(samples)), 2):
        for u, t in enumerate(t_checkpoints):
            add(sa, t, sb, t, samples[sa][u], samples[sb][u])
    return {
        "starts": [[np.asarray(x, float).reshape(-1).tolist(), int(a)] for x, a in starts],
        "checkpoints": list(t_checkpoints),
        "rows": rows,
    }


# -- report ---------------------------------------------------------------------

@dataclass
class StabilityReport:
    model: dict
    sections: dict = field(default_factory=dict)
    verdicts: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def add_verdict(self, name: str, verdict: str, cites: str, note: str = ""):
        if not cites:
            raise ValueError("a verdict must cite a numeric field")
        self.verdicts.append({"name": name, "verdict": verdict, "cites": cites, "note": note})

    def to_dict(self) -> dict:
        return {"model": self.model, **self.sections, "verdicts": self.verdicts, "failures": self.failures}
