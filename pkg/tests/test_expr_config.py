import json

import numpy as np
import pytest

from rsjd.config import ConfigError, load_model, model_from_dict
from rsjd.expr import ExpressionError, compile_expression


def test_expression_arithmetic():
    x = np.array([[2.0, 3.0]])
    f = compile_expression("x[1]^2 + 3*x[2] - 1/2", 2)
    assert f(x)[0] == 4 + 9 - 0.5
    assert compile_expression("2^3^2", 1)(x[:, :1])[0] == 512.0
    assert compile_expression("-x[1]^2", 1)(x[:, :1])[0] == -4.0
    assert compile_expression("sin(pi/2) + ln(e) + abs(-2) + exp(0) + cos(0)", 1)(x[:, :1])[0] == pytest.approx(6.0)


def test_expression_regime_and_mark():
    f = compile_expression("i*x[1] + gamma", 1)
    out = f(np.array([[1.0], [2.0]]), np.array([1, 3]), np.array([0.5, 0.25]))
    assert out.tolist() == [1.5, 6.25]


def test_expression_constant_broadcasts():
    assert compile_expression(3, 1)(np.zeros((4, 1))).shape == (4,)


@pytest.mark.parametrize("bad", ["x[3]", "x[0]", "foo(x[1])", "1 +", "(1", "2 $ 3", "x[1]]"])
def test_expression_errors(bad):
    with pytest.raises(ExpressionError):
        compile_expression(bad, 2)


def test_expression_rejects_python():
    with pytest.raises(ExpressionError):
        compile_expression("__import__('os')", 1)


BASE = {
    "name": "toy", "dim_x": 1, "num_regimes": 2, "dim_w": 1, "has_equilibrium": True,
    "jump_rate": 0.5, "marks": {"type": "uniform", "low": -0.5, "high": 0.5},
    "drift": ["-x[1]", "-2*x[1] + sin(x[1])"],
    "diffusion": "x[1]/2",
    "jump_coeff": "gamma*x[1]",
    "rate_matrix": [[None, "1 + x[1]^2/(1 + x[1]^2)"], [2, None]],
}


def test_config_model():
    m = model_from_dict(BASE)
    x = np.array([[1.0], [1.0]])
    assert np.allclose(m.b(x, [1, 2])[:, 0], [-1.0, -2 + np.sin(1)])
    assert np.allclose(m.sigma(x, [1, 2])[:, 0, 0], [0.5, 0.5])
    assert np.allclose(m.g(x, [1, 1], np.array([0.2, -0.3]))[:, 0], [0.2, -0.3])
    q = m.rates(np.array([[1.0]]))[0]
    assert np.allclose(q, [[-1.5, 1.5], [2, -2]])


def test_config_vector_model():
    cfg = {"dim_x": 2, "num_regimes": 1, "dim_w": 2,
           "drift": ["-x[1] + x[2]", "-x[2]"],
           "diffusion": [["x[1]", "0"], ["0", "x[2]/2"]],
           "rate_matrix": [[0]]}
    m = model_from_dict(cfg)
    x = np.array([[1.0, 2.0]])
    assert m.b(x, [1]).tolist() == [[1.0, -2.0]]
    assert m.sigma(x, [1])[0].tolist() == [[1.0, 0.0], [0.0, 1.0]]


@pytest.mark.parametrize("field,value", [
    ("jump_rate", -1),
    ("jump_rate", "fast"),
    ("dim_x", 0),
    ("rate_matrix", [[None, -1], [2, None]]),
    ("rate_matrix", [[None, 1]]),
    ("drift", ["x[2]", "x[1]"]),
    ("marks", {"type": "cauchy"}),
])
def test_config_errors_name_field(field, value):
    cfg = {**BASE, field: value}
    with pytest.raises(ConfigError) as exc:
        model_from_dict(cfg)
    assert exc.value.field == field


def test_config_equilibrium_violation():
    cfg = {**BASE, "drift": "1 - x[1]"}
    with pytest.raises(ConfigError):
        model_from_dict(cfg)


def test_load_model(tmp_path):
    p = tmp_path / "m.json"
    p.write_text(json.dumps(BASE))
    m = load_model(p)
    assert m.name == "toy" and len(m.source["_sha256"]) == 64
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(ConfigError):
        load_model(tmp_path / "bad.json")
    with pytest.raises(ConfigError):
        load_model(tmp_path / "missing.json")
