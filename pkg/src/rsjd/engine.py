"""Path integration for regime-switching jump diffusions.

Scheme, per step of length ``dt``:

1. Poisson jump times are exact (exponential inter-arrivals). A step that
   contains a jump is split at the jump time; the Brownian increment over the
   step is shared between the pieces with a Brownian bridge, and the jump is
   applied with the pre-switch regime.
2. Between events, Euler-Maruyama: ``X += b dt + sigma dW``.
3. The regime is updated at the end of the step from the state at the start
   of the step (see :mod:`rsjd.switching`).

Randomness. Path ``k`` of a run with seed ``s`` owns two Philox streams
derived from ``SeedSequence(s, spawn_key=(k,))``: one for the per-step normals
and switching uniforms (drawn in chunks of ``min(CHUNK, n_steps)`` steps), one for
the jump schedule (times, marks, bridge normals). Paths are processed in
blocks of fixed size, so results never depend on the number of worker threads.
"""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import RegimeModel
from .switching import MAX_STEP_MASS, SwitchingStepError, coupled_switch_batch, switch_batch

__all__ = [
    "AllPathsDivergedError",
    "CHUNK",
    "BLOCK_SIZE",
    "SimConfig",
    "Event",
    "Trajectory",
    "PathNoise",
    "RunResult",
    "integrate",
    "run_ensemble",
    "simulate_path",
    "simulate_ensemble",
    "simulate_coupled_pair",
    "simulate_variational",
    "finite_difference_sensitivity",
    "SensitivityPair",
    "PairedTrajectory",
    "write_trajectory_csv",
    "write_ensemble_csv",
]

CHUNK = 1024
BLOCK_SIZE = 4096


class AllPathsDivergedError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimConfig:
    dt: float
    T: float
    seed: int = 0
    n_paths: int = 1
    record_stride: int = 1
    underflow_floor: float = 1e-150

    def __post_init__(self):
        if not (self.dt > 0 and self.T > 0):
            raise ValueError("dt and T must be positive")
        if self.dt > self.T * (1 + 1e-12):
            raise ValueError("dt must not exceed T")
        if abs(self.n_steps * self.dt - self.T) > 1e-9 * self.T:
            raise ValueError(f"T={self.T} is not a whole number of steps dt={self.dt}")
        if self.n_paths < 1 or self.record_stride < 1:
            raise ValueError("n_paths and record_stride must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    def as_dict(self) -> dict:
        return {
            "dt": self.dt, "T": self.T, "seed": self.seed, "n_paths": self.n_paths,
            "record_stride": self.record_stride, "underflow_floor": self.underflow_floor,
        }


@dataclass(frozen=True)
class Event:
    time: float
    kind: str          # "jump" or "switch"
    detail: object     # mark for jumps, (from, to) for switches
    pre: np.ndarray    # state just before the event
    post: np.ndarray   # state just after the event


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray      # (K, r)
    regimes: np.ndarray     # (K,) labels 1..m
    events: list
    labels: list            # per-row event label for CSV
    divergent: bool = False
    freeze_time: float = float("nan")
    path_index: int = 0


# -- randomness ---------------------------------------------------------------

def _streams(seed: int, path_index: int):
    ss = np.random.SeedSequence(seed, spawn_key=(path_index,))
    main, jump = ss.spawn(2)
    return np.random.Generator(np.random.Philox(main)), np.random.Generator(np.random.Philox(jump))


class PathNoise:
    """All random input for a block of paths.

    Per-step draws for global step ``k`` depend only on (seed, path index, k),
    so a block may be integrated over any sequence of sub-horizons.
    """

    def __init__(self, model: RegimeModel, seed: int, path_indices, horizon: float, n_steps: Optional[int] = None):
        self.d = model.dim_w
        self.chunk = CHUNK if n_steps is None else max(1, min(CHUNK, int(n_steps)))
        self.path_indices = np.asarray(path_indices, dtype=np.int64)
        n = len(self.path_indices)
        gens = [_streams(seed, int(k)) for k in self.path_indices]
        self._main = [g[0] for g in gens]
        self._chunk_id = -1
        self._xi = None
        self._u = None
        lam = model.jump_rate
        times, marks, bridges = [], [], []
        for _, jg in gens:
            t = []
            if lam > 0:
                batch = max(16, int(2 * lam * horizon) + 8)
                total = 0.0
                while total <= horizon:
                    inc = jg.exponential(1.0 / lam, size=batch)
                    cs = total + np.cumsum(inc)
                    t.extend(cs[cs <= horizon])
                    total = cs[-1]
            t = np.asarray(t, float)
            times.append(t)
            marks.append(model.marks.sample(jg, len(t)))
            bridges.append(jg.standard_normal((len(t), self.d)))
        jmax = max((len(t) for t in times), default=0)
        self.jump_times = np.full((n, jmax + 1), np.inf)
        self.jump_marks = np.zeros((n, max(jmax, 1)))
        self.jump_bridge = np.zeros((n, max(jmax, 1), self.d))
        for p, (t, mk, br) in enumerate(zip(times, marks, bridges)):
            self.jump_times[p, : len(t)] = t
            self.jump_marks[p, : len(t)] = mk
            self.jump_bridge[p, : len(t)] = br
        self.ptr = np.zeros(n, dtype=np.int64)

    def __len__(self):
        return len(self.path_indices)

    def step(self, k: int):
        c = k // self.chunk
        if c != self._chunk_id:
            n = len(self._main)
            self._xi = np.empty((n, self.chunk, self.d))
            self._u = np.empty((n, self.chunk))
            for p, g in enumerate(self._main):
                self._xi[p] = g.standard_normal((self.chunk, self.d))
                self._u[p] = g.random(self.chunk)
            self._chunk_id = c
        j = k % self.chunk
        return self._xi[:, j, :], self._u[:, j]

    def next_jump(self):
        return self.jump_times[np.arange(len(self.ptr)), self.ptr]

    def skip_until(self, t: float):
        """Drop jumps at or before ``t`` (used when starting mid-horizon)."""
        while True:
            nj = self.next_jump()
            late = nj <= t
            if not late.any():
                return
            self.ptr[late] += 1


# -- core integrator ------------------------------------------------------------

@dataclass
class RunResult:
    times: np.ndarray                 # record grid (K,)
    X: np.ndarray                     # (n, K, r)
    A: np.ndarray                     # (n, K) labels 1..m
    final: np.ndarray                 # (n, r)
    final_regime: np.ndarray          # (n,) labels
    divergent: np.ndarray             # (n,) bool
    freeze_time: np.ndarray           # (n,) nan if never frozen
    freeze_norm: np.ndarray           # (n,) |X| just before freezing
    n_jumps: np.ndarray               # (n,)
    Y: Optional[np.ndarray] = None    # coupled component (n, K, r)
    B: Optional[np.ndarray] = None    # its regimes
    S: Optional[np.ndarray] = None    # variational process (n, K)
    events: Optional[list] = None     # per path: list of Event
    events_y: Optional[list] = None   # same for the coupled component
    path_indices: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.X.shape[0]


def record_steps(n_steps: int, stride: int) -> np.ndarray:
    ks = np.arange(0, n_steps + 1, stride)
    if ks[-1] != n_steps:
        ks = np.append(ks, n_steps)
    return ks


def _fd_step(x):
    return 1e-6 * np.maximum(1.0, np.abs(x))


def _derivs(model: RegimeModel, x, lab):
    """Scalar spatial derivatives (b_x (n,), sigma_x (n, d))."""
    if model.drift_dx is not None:
        bx = np.asarray(model.drift_dx(x, lab), float).reshape(-1)
    else:
        h = _fd_step(x)
        bx = ((model.b(x + h, lab) - model.b(x - h, lab)) / (2 * h))[:, 0]
    if model.diffusion_dx is not None:
        sx = np.asarray(model.diffusion_dx(x, lab), float).reshape(x.shape[0], model.dim_w)
    else:
        h = _fd_step(x)
        sx = ((model.sigma(x + h, lab) - model.sigma(x - h, lab)) / (2 * h[:, :, None]))[:, 0, :]
    return bx, sx


def _jump_dx(model: RegimeModel, x, lab, marks):
    if model.jump_coeff_dx is not None:
        return np.asarray(model.jump_coeff_dx(x, lab, marks), float).reshape(-1)
    h = _fd_step(x)
    return ((model.g(x + h, lab, marks) - model.g(x - h, lab, marks)) / (2 * h))[:, 0]


def integrate(
    model: RegimeModel,
    x0,
    a0,
    noise: PathNoise,
    dt: float,
    k_start: int,
    k_end: int,
    *,
    stride: int = 1,
    floor: float = 1e-150,
    y0=None,
    b0=None,
    variational: bool = False,
    record_events: bool = False,
) -> RunResult:
    """Integrate a block from global step ``k_start`` to ``k_end``.

    ``x0`` (n, r) and ``a0`` (n,) labels. With ``y0``/``b0`` a second
    component is driven by the same noise and coupled regimes. With
    ``variational`` the derivative process along the base path is carried
    (scalar models only).
    """
    n = len(noise)
    r, m = model.dim_x, model.num_regimes
    X = np.array(x0, float).reshape(n, r)
    a = np.asarray(a0, dtype=np.int64).reshape(n) - 1
    if np.any((a < 0) | (a >= m)):
        raise ValueError(f"initial regime outside 1..{m}")
    if not np.all(np.isfinite(X)):
        raise ValueError("initial state must be finite")
    paired = y0 is not None
    if paired:
        Y = np.array(y0, float).reshape(n, r)
        b = np.asarray(b0 if b0 is not None else a0, dtype=np.int64).reshape(n) - 1
    if variational:
        if r != 1:
            raise ValueError("variational process is implemented for scalar state only")
        S = np.ones(n)

    t0 = k_start * dt
    noise.skip_until(t0)
    ks = record_steps(k_end - k_start, stride) + k_start
    K = len(ks)
    rec_X = np.empty((n, K, r))
    rec_A = np.empty((n, K), dtype=np.int16)
    rec_Y = np.empty((n, K, r)) if paired else None
    rec_B = np.empty((n, K), dtype=np.int16) if paired else None
    rec_S = np.empty((n, K)) if variational else None
    rec_pos = 0

    divergent = np.zeros(n, bool)
    frozen = np.zeros(n, bool)
    freeze_time = np.full(n, np.nan)
    freeze_norm = np.full(n, np.nan)
    n_jumps = np.zeros(n, dtype=np.int64)
    events = [[] for _ in range(n)] if record_events else None
    events_y = [[] for _ in range(n)] if (record_events and paired) else None
    use_floor = model.has_equilibrium
    rows_n = np.arange(n)

    def record():
        nonlocal rec_pos
        rec_X[:, rec_pos] = X
        rec_A[:, rec_pos] = a + 1
        if paired:
            rec_Y[:, rec_pos] = Y
            rec_B[:, rec_pos] = b + 1
        if variational:
            rec_S[:, rec_pos] = S
        rec_pos += 1

    def em(sel, h, dW):
        """Euler-Maruyama piece of length h (array) on rows ``sel``."""
        nonlocal X, S
        lab = a[sel] + 1
        xs = X[sel]
        hh = h[:, None]
        drift = model.b(xs, lab)
        sig = model.sigma(xs, lab)
        if variational:
            bx, sx = _derivs(model, xs, lab)
            S[sel] = S[sel] * (1 + bx * h + np.einsum("nd,nd->n", sx, dW))
        X[sel] = xs + drift * hh + np.einsum("nrd,nd->nr", sig, dW)
        if paired:
            ys = Y[sel]
            labb = b[sel] + 1
            Y[sel] = ys + model.b(ys, labb) * hh + np.einsum("nrd,nd->nr", model.sigma(ys, labb), dW)

    with np.errstate(all="ignore"):
        record()
        for k in range(k_start, k_end):
            t_lo = k * dt
            t_hi = (k + 1) * dt
            xi, u = noise.step(k)
            x_start = X.copy()
            y_start = Y.copy() if paired else None
            dW_rem = np.sqrt(dt) * xi
            seg_start = np.full(n, t_lo)

            # jumps inside (t_lo, t_hi]
            while True:
                nj = noise.next_jump()
                hit = nj <= t_hi
                if not hit.any():
                    break
                sel = np.flatnonzero(hit)
                p = noise.ptr[sel]
                tau = nj[sel]
                L = t_hi - seg_start[sel]
                h = tau - seg_start[sel]
                eta = noise.jump_bridge[sel, p]
                w_h = (h / L)[:, None] * dW_rem[sel] + np.sqrt(np.maximum(h * (L - h) / L, 0.0))[:, None] * eta
                em(sel, h, w_h)
                dW_rem[sel] -= w_h
                seg_start[sel] = tau
                marks = noise.jump_marks[sel, p]
                lab = a[sel] + 1
                pre = X[sel].copy()
                if variational:
                    gx = _jump_dx(model, pre, lab, marks)
                    S[sel] = S[sel] * (1 + gx)
                X[sel] = pre + model.g(pre, lab, marks)
                if paired:
                    pre_y = Y[sel].copy()
                    Y[sel] = pre_y + model.g(pre_y, b[sel] + 1, marks)
                noise.ptr[sel] += 1
                n_jumps[sel] += 1
                if record_events:
                    for q, row in enumerate(sel):
                        if not (frozen[row] or divergent[row]):
                            events[row].append(Event(float(tau[q]), "jump", float(marks[q]), pre[q].copy(), X[row].copy()))
                            if paired:
                                events_y[row].append(Event(float(tau[q]), "jump", float(marks[q]), pre_y[q].copy(), Y[row].copy()))

            em(rows_n, t_hi - seg_start, dW_rem)

            # switching from the state at the start of the step
            q = model.rates(x_start)
            exit_rate = -np.diagonal(q, axis1=1, axis2=2)
            qa = q[rows_n, a]
            qa[rows_n, a] = 0.0
            if paired:
                qy = model.rates(y_start)
                qb = qy[rows_n, b]
                qb[rows_n, b] = 0.0
                mass = dt * np.nanmax(qa.sum(axis=1) + np.maximum(qb - qa, 0).sum(axis=1))
                if mass > MAX_STEP_MASS:
                    raise SwitchingStepError(f"coupled switching step mass {mass:.3g} exceeds {MAX_STEP_MASS}; use a smaller dt")
                new_a, new_b = coupled_switch_batch(qa, qb, a, b, dt, u)
            else:
                mass = dt * np.nanmax(exit_rate)
                if mass > MAX_STEP_MASS:
                    raise SwitchingStepError(f"switching step mass {mass:.3g} exceeds {MAX_STEP_MASS}; use a smaller dt")
                new_a = switch_batch(qa, a, dt, u)
            if record_events:
                for row in np.flatnonzero(new_a != a):
                    if not (frozen[row] or divergent[row]):
                        events[row].append(Event(t_hi, "switch", (int(a[row]) + 1, int(new_a[row]) + 1), X[row].copy(), X[row].copy()))
                if paired:
                    for row in np.flatnonzero(new_b != b):
                        if not (frozen[row] or divergent[row]):
                            events_y[row].append(Event(t_hi, "switch", (int(b[row]) + 1, int(new_b[row]) + 1), Y[row].copy(), Y[row].copy()))
            a = new_a
            if paired:
                b = new_b

            # divergence and the underflow floor
            bad = ~np.all(np.isfinite(X), axis=1) & ~divergent
            if paired:
                bad |= ~np.all(np.isfinite(Y), axis=1) & ~divergent
            if bad.any():
                divergent |= bad
            if use_floor:
                norm = np.sqrt(np.einsum("nr,nr->n", X, X))
                low = (norm < floor) & ~frozen & ~divergent
                if low.any():
                    freeze_time[low] = t_hi
                    freeze_norm[low] = norm[low]
                    frozen |= low
                if frozen.any():
                    X[frozen] = 0.0
            if rec_pos < K and ks[rec_pos] == k + 1:
                record()

    return RunResult(
        times=ks * dt,
        X=rec_X, A=rec_A, final=X.copy(), final_regime=(a + 1).astype(np.int64),
        divergent=divergent, freeze_time=freeze_time, freeze_norm=freeze_norm,
        n_jumps=n_jumps, Y=rec_Y, B=rec_B, S=rec_S, events=events, events_y=events_y,
        path_indices=noise.path_indices.copy(),
    )


def _concat(parts: list) -> RunResult:
    if len(parts) == 1:
        return parts[0]

    def cat(name, axis=0):
        vals = [getattr(p, name) for p in parts]
        if vals[0] is None:
            return None
        return np.concatenate(vals, axis=axis)

    events = events_y = None
    if parts[0].events is not None:
        events = [e for p in parts for e in p.events]
    if parts[0].events_y is not None:
        events_y = [e for p in parts for e in p.events_y]
    return RunResult(
        times=parts[0].times,
        X=cat("X"), A=cat("A"), final=cat("final"), final_regime=cat("final_regime"),
        divergent=cat("divergent"), freeze_time=cat("freeze_time"), freeze_norm=cat("freeze_norm"),
        n_jumps=cat("n_jumps"), Y=cat("Y"), B=cat("B"), S=cat("S"), events=events, events_y=events_y,
        path_indices=cat("path_indices"),
    )


def _threads(threads: Optional[int]) -> int:
    if threads is None:
        return min(8, os.cpu_count() or 1)
    return max(1, int(threads))


def run_ensemble(
    model: RegimeModel,
    x0,
    a0,
    cfg: SimConfig,
    *,
    threads: Optional[int] = None,
    y0=None,
    b0=None,
    variational: bool = False,
    record_events: bool = False,
    path_offset: int = 0,
) -> RunResult:
    """Integrate ``cfg.n_paths`` paths from a common start (or per-path
    starts when ``x0`` has a leading path axis)."""
    n = cfg.n_paths
    r = model.dim_x
    x0 = np.asarray(x0, float)
    X0 = np.broadcast_to(x0.reshape(-1, r) if x0.ndim == 2 else x0.reshape(1, r), (n, r))
    A0 = np.broadcast_to(np.asarray(a0, dtype=np.int64).reshape(-1), (n,))
    if y0 is not None:
        y0 = np.asarray(y0, float)
        Y0 = np.broadcast_to(y0.reshape(-1, r) if y0.ndim == 2 else y0.reshape(1, r), (n, r))
        B0 = np.broadcast_to(np.asarray(b0 if b0 is not None else a0, dtype=np.int64).reshape(-1), (n,))
    blocks = [(s, min(s + BLOCK_SIZE, n)) for s in range(0, n, BLOCK_SIZE)]

    def work(block):
        lo, hi = block
        noise = PathNoise(model, cfg.seed, np.arange(lo, hi) + path_offset, cfg.T, cfg.n_steps)
        return integrate(
            model, X0[lo:hi], A0[lo:hi], noise, cfg.dt, 0, cfg.n_steps,
            stride=cfg.record_stride, floor=cfg.underflow_floor,
            y0=None if y0 is None else Y0[lo:hi], b0=None if y0 is None else B0[lo:hi],
            variational=variational, record_events=record_events,
        )

    nt = _threads(threads)
    if nt == 1 or len(blocks) == 1:
        parts = [work(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=nt) as pool:
            parts = list(pool.map(work, blocks))
    return _concat(parts)


# -- trajectories ---------------------------------------------------------------

def _trajectory(res: RunResult, p: int, which: str = "X") -> Trajectory:
    times = res.times
    states = getattr(res, which)[p]
    regimes = (res.A if which == "X" else res.B)[p].astype(np.int64)
    rows = {float(t): [float(t), states[q], int(regimes[q]), []] for q, t in enumerate(times)}
    log = res.events if which == "X" else res.events_y
    evs = log[p] if log is not None else []
    current = int(regimes[0])
    for ev in evs:  # chronological
        key = float(ev.time)
        if ev.kind == "jump":
            label = f"J:{ev.detail:.17g}"
        else:
            label = f"S:{ev.detail[0]}->{ev.detail[1]}"
            current = ev.detail[1]
        if key in rows:
            rows[key][3].append(label)
        else:
            rows[key] = [key, ev.post, current, [label]]
    ordered = [rows[k] for k in sorted(rows)]
    return Trajectory(
        times=np.array([o[0] for o in ordered]),
        states=np.array([o[1] for o in ordered]).reshape(len(ordered), -1),
        regimes=np.array([o[2] for o in ordered], dtype=np.int64),
        events=list(evs),
        labels=[";".join(o[3]) for o in ordered],
        divergent=bool(res.divergent[p]),
        freeze_time=float(res.freeze_time[p]),
        path_index=int(res.path_indices[p]) if res.path_indices is not None else p,
    )


def simulate_path(model: RegimeModel, x0, a0: int, cfg: SimConfig, path_index: int = 0) -> Trajectory:
    """One path, deterministic in (cfg.seed, path_index), with its event log."""
    one = SimConfig(cfg.dt, cfg.T, cfg.seed, 1, cfg.record_stride, cfg.underflow_floor)
    res = run_ensemble(model, x0, a0, one, threads=1, record_events=True, path_offset=path_index)
    return _trajectory(res, 0)


def simulate_ensemble(model: RegimeModel, x0, a0: int, cfg: SimConfig, threads: Optional[int] = None) -> list:
    res = run_ensemble(model, x0, a0, cfg, threads=threads, record_events=True)
    return [_trajectory(res, p) for p in range(res.n)]


@dataclass
class PairedTrajectory:
    first: Trajectory
    second: Trajectory
    times: np.ndarray
    sq_diff: np.ndarray     # |X^x - X^y|^2 on the record grid


def simulate_coupled_pair(model: RegimeModel, x0, y0, i0: int, j0: int, cfg: SimConfig, path_index: int = 0) -> PairedTrajectory:
    one = SimConfig(cfg.dt, cfg.T, cfg.seed, 1, cfg.record_stride, cfg.underflow_floor)
    res = run_ensemble(model, x0, i0, one, threads=1, y0=y0, b0=j0, record_events=True, path_offset=path_index)
    diff = res.X[0] - res.Y[0]
    return PairedTrajectory(_trajectory(res, 0), _trajectory(res, 0, "Y"), res.times, np.einsum("kr,kr->k", diff, diff))


@dataclass
class SensitivityPair:
    times: np.ndarray
    base: np.ndarray                     # (n, K) X from x0
    delta: Optional[float] = None
    perturbed: Optional[np.ndarray] = None   # (n, K) X from x0 + delta
    varsigma: Optional[np.ndarray] = None    # (n, K) variational process

    @property
    def z(self) -> np.ndarray:
        """Difference quotient (X~ - X) / delta."""
        return (self.perturbed - self.base) / self.delta


def _scalar_only(model):
    if model.dim_x != 1:
        raise ValueError("sensitivity processes are implemented for scalar state (dim_x = 1)")


def simulate_variational(model: RegimeModel, x0, a0: int, cfg: SimConfig, threads: Optional[int] = None) -> SensitivityPair:
    """Derivative of the path with respect to x0, carried along the base path."""
    _scalar_only(model)
    res = run_ensemble(model, x0, a0, cfg, threads=threads, variational=True)
    return SensitivityPair(res.times, res.X[:, :, 0], varsigma=res.S)


def finite_difference_sensitivity(model: RegimeModel, x0, delta: float, a0: int, cfg: SimConfig,
                                  threads: Optional[int] = None, with_variational: bool = True) -> SensitivityPair:
    """Paths from x0 and x0 + delta under shared noise and coupled regimes.

    With ``with_variational`` the derivative process along the same base path
    is returned too, so Z^delta and varsigma are directly comparable.
    """
    _scalar_only(model)
    if not delta or not np.isfinite(delta):
        raise ValueError("delta must be a finite nonzero number")
    x0 = float(np.asarray(x0).reshape(-1)[0])
    res = run_ensemble(model, x0, a0, cfg, threads=threads, y0=x0 + delta, b0=a0, variational=with_variational)
    return SensitivityPair(res.times, res.X[:, :, 0], float(delta), res.Y[:, :, 0], res.S)


# -- CSV export -----------------------------------------------------------------

def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def trajectory_rows(traj: Trajectory, path_id: Optional[int] = None):
    for t, x, a, lab in zip(traj.times, traj.states, traj.regimes, traj.labels):
        row = ([str(path_id)] if path_id is not None else []) + [_fmt(t)] + [_fmt(v) for v in x] + [str(int(a)), lab]
        yield row


def _header(r: int, long: bool):
    return (["path_id"] if long else []) + ["t"] + [f"x_{k + 1}" for k in range(r)] + ["alpha", "event"]


def write_trajectory_csv(traj: Trajectory, path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_header(traj.states.shape[1], False))
    w.writerows(trajectory_rows(traj))
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


def write_ensemble_csv(trajs: list, path) -> None:
    """Long format, one file, ``path_id`` column."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_header(trajs[0].states.shape[1], True))
    for tr in trajs:
        w.writerows(trajectory_rows(tr, tr.path_index))
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())
