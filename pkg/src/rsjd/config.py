"""Load a RegimeModel from a JSON config.

Example::

    {
      "name": "toy",
      "dim_x": 1, "num_regimes": 2, "dim_w": 1,
      "has_equilibrium": true,
      "jump_rate": 0.5,
      "marks": {"type": "uniform", "low": -0.5, "high": 0.5},
      "drift": [["-x[1]"], ["-2*x[1] + sin(x[1])"]],
      "diffusion": "x[1]/2",
      "jump_coeff": ["gamma*x[1]"],
      "rate_matrix": [[null, "1 + x[1]^2/(1 + x[1]^2)"], [2, null]]
    }

Coefficients are either shared by all regimes (and may use ``i``) or given
per regime as a list of length ``num_regimes``. A bare string is accepted
for scalar entries. Diagonal rate entries may be ``null``; they are then
filled in from the row sums.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .expr import ExpressionError, compile_expression
from .model import MarkLaw, ModelError, RegimeModel, validate_q_property

__all__ = ["ConfigError", "load_model", "model_from_dict"]


class ConfigError(ModelError):
    pass


def _depth(obj) -> int:
    d = 0
    while isinstance(obj, list):
        if not obj:
            return d + 1
        obj = obj[0]
        d += 1
    return d


def _compile_tensor(field, spec, shape, dim_x):
    """Compile a nested list of expressions with the given shape."""
    if len(shape) and not isinstance(spec, list):
        if all(s == 1 for s in shape):
            spec = np.reshape(np.array([spec], dtype=object), shape).tolist()
        else:
            raise ConfigError(field, f"expected nested list of shape {shape}")
    arr = np.array(spec, dtype=object)
    if arr.shape != tuple(shape):
        raise ConfigError(field, f"expected shape {tuple(shape)}, got {arr.shape}")
    out = np.empty(arr.shape, dtype=object)
    for idx in np.ndindex(*arr.shape) if arr.shape else [()]:
        try:
            out[idx] = compile_expression(arr[idx], dim_x)
        except ExpressionError as exc:
            raise ConfigError(field, str(exc)) from None
    return out


def _per_regime(field, spec, inner_shape, m, dim_x):
    """Return a list (length m) of compiled tensors of ``inner_shape``."""
    if spec is None:
        raise ConfigError(field, "missing")
    inner_depth = len(inner_shape)
    if isinstance(spec, list) and _depth(spec) == inner_depth + 1 and len(spec) == m:
        return [_compile_tensor(field, s, inner_shape, dim_x) for s in spec]
    # scalar coefficients listed per regime: ["-x[1]", "-2*x[1]"]
    if all(s == 1 for s in inner_shape) and isinstance(spec, list) and _depth(spec) == 1 and len(spec) == m:
        return [_compile_tensor(field, s, inner_shape, dim_x) for s in spec]
    shared = _compile_tensor(field, spec, inner_shape, dim_x)
    return [shared] * m


def _evaluator(tensors, out_shape):
    def evaluate(x, i, gamma=0.0):
        x = np.asarray(x, float)
        n = x.shape[0]
        i = np.broadcast_to(np.asarray(i), (n,))
        out = np.zeros((n,) + out_shape)
        for label, tens in enumerate(tensors, start=1):
            sel = i == label
            if not np.any(sel):
                continue
            g = np.broadcast_to(np.asarray(gamma, float), (n,))[sel]
            for idx in np.ndindex(*out_shape):
                out[(sel,) + idx] = tens[idx](x[sel], float(label), g)
        return out

    return evaluate


def model_from_dict(cfg: dict) -> RegimeModel:
    if not isinstance(cfg, dict):
        raise ConfigError("model", "config must be a JSON object")

    def integer(name, default=None):
        v = cfg.get(name, default)
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise ConfigError(name, f"must be a positive integer, got {v!r}")
        return v

    r = integer("dim_x")
    m = integer("num_regimes", 1)
    d = integer("dim_w", 1)
    lam = cfg.get("jump_rate", 0.0)
    if not isinstance(lam, (int, float)) or isinstance(lam, bool) or not np.isfinite(lam) or lam < 0:
        raise ConfigError("jump_rate", f"must be a finite number >= 0, got {lam!r}")

    marks_cfg = cfg.get("marks", {"type": "degenerate", "value": 0.0})
    try:
        kind = marks_cfg.get("type", "degenerate")
        if kind == "degenerate":
            marks = MarkLaw("degenerate", (float(marks_cfg.get("value", 0.0)),))
        elif kind == "uniform":
            marks = MarkLaw("uniform", (float(marks_cfg["low"]), float(marks_cfg["high"])))
        elif kind == "normal":
            marks = MarkLaw("normal", (float(marks_cfg["mean"]), float(marks_cfg["std"])))
        elif kind == "discrete":
            marks = MarkLaw("discrete", (tuple(marks_cfg["values"]), tuple(marks_cfg["probs"])))
        else:
            raise ConfigError("marks", f"unknown mark type {kind!r}")
    except (KeyError, TypeError, AttributeError) as exc:
        raise ConfigError("marks", f"malformed mark law ({exc})") from None

    drift = _evaluator(_per_regime("drift", cfg.get("drift"), (r,), m, r), (r,))
    diff = _evaluator(_per_regime("diffusion", cfg.get("diffusion"), (r, d), m, r), (r, d))
    jump = _evaluator(_per_regime("jump_coeff", cfg.get("jump_coeff", ["0"] * r), (r,), m, r), (r,))

    q_spec = cfg.get("rate_matrix", [[None]] if m == 1 else None)
    if not isinstance(q_spec, list) or np.array(q_spec, dtype=object).shape != (m, m):
        raise ConfigError("rate_matrix", f"must be an {m}x{m} nested list")
    q_fun = np.empty((m, m), dtype=object)
    for a in range(m):
        for b in range(m):
            e = q_spec[a][b]
            if e is None:
                if a != b:
                    raise ConfigError("rate_matrix", f"off-diagonal ({a + 1},{b + 1}) cannot be null")
                continue
            try:
                q_fun[a, b] = compile_expression(e, r)
            except ExpressionError as exc:
                raise ConfigError("rate_matrix", str(exc)) from None

    def rates(x):
        x = np.asarray(x, float)
        n = x.shape[0]
        q = np.zeros((n, m, m))
        for a in range(m):
            for b in range(m):
                if a != b:
                    q[:, a, b] = q_fun[a, b](x)
            given = q_fun[a, a]
            q[:, a, a] = given(x) if given is not None else -q[:, a].sum(axis=1)
        return q

    probe = np.vstack([np.zeros((1, r)), np.random.default_rng(0).normal(scale=3.0, size=(32, r))])
    qs = rates(probe)
    for x, q in zip(probe, qs):
        res = validate_q_property(q)
        if not res:
            raise ConfigError("rate_matrix", f"q-property fails at x={x.tolist()}: {res.violations[0]}")

    try:
        return RegimeModel(
            dim_x=r, num_regimes=m, dim_w=d,
            drift=drift, diffusion=diff, jump_coeff=jump,
            jump_rate=float(lam), rate_matrix=rates, marks=marks,
            has_equilibrium=bool(cfg.get("has_equilibrium", False)),
            name=str(cfg.get("name", "config")),
            source=cfg,
        )
    except ConfigError:
        raise
    except ModelError as exc:
        raise ConfigError(exc.field, str(exc).split(": ", 1)[-1]) from None


def load_model(path) -> RegimeModel:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("model", f"cannot read {path}: {exc.strerror}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("model", f"invalid JSON: {exc}") from None
    model = model_from_dict(cfg)
    object.__setattr__(model, "source", {**cfg, "_sha256": hashlib.sha256(text.encode()).hexdigest()})
    return model
