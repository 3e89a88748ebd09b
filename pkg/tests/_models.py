"""Small models with closed-form behaviour, shared by the tests."""

import numpy as np

from rsjd.model import MarkLaw, RegimeModel


def const_q(q):
    q = np.asarray(q, float)

    def rates(x):
        return np.broadcast_to(q, (x.shape[0],) + q.shape).copy()

    return rates


def scalar_linear(b=-1.0, sigma=0.0, lam=0.0, g=0.0, equilibrium=True, marks=None):
    """dX = bX dt + sigma X dw + g X dN, single regime."""
    return RegimeModel(
        dim_x=1, num_regimes=1, dim_w=1,
        drift=lambda x, i: b * x,
        diffusion=lambda x, i: (sigma * x)[:, :, None],
        jump_coeff=lambda x, i, mk: g * x,
        jump_rate=lam, rate_matrix=const_q([[0.0]]),
        marks=marks or MarkLaw(), has_equilibrium=equilibrium,
        drift_dx=lambda x, i: np.full(x.shape[0], b),
        diffusion_dx=lambda x, i: np.full((x.shape[0], 1), sigma),
        jump_coeff_dx=lambda x, i, mk: np.full(x.shape[0], g),
    )


def ou(b=-1.0, noise=1.0):
    """dX = bX dt + noise dw (no equilibrium at 0)."""
    return RegimeModel(
        dim_x=1, num_regimes=1, dim_w=1,
        drift=lambda x, i: b * x,
        diffusion=lambda x, i: np.full((x.shape[0], 1, 1), noise),
        jump_coeff=lambda x, i, mk: np.zeros_like(x),
        jump_rate=0.0, rate_matrix=const_q([[0.0]]), has_equilibrium=False,
    )


def smooth_two_regime():
    """Mean-square stable two-regime scalar model with nonlinear coefficients,
    multiplicative jumps and constant switching rates."""
    def drift(x, i):
        i = np.asarray(i)
        return np.where(i[:, None] == 1, -x + 0.5 * np.sin(x), -2 * x + 0.3 * x * np.cos(x))

    def diffusion(x, i):
        i = np.asarray(i)
        return np.where(i[:, None] == 1, 0.3 * np.sin(x), 0.2 * x)[:, :, None]

    def jump(x, i, mk):
        return 0.3 * x * np.cos(x) + 0.1 * np.sin(x)

    return RegimeModel(
        dim_x=1, num_regimes=2, dim_w=1,
        drift=drift, diffusion=diffusion, jump_coeff=jump,
        jump_rate=0.5, rate_matrix=const_q([[-1.0, 1.0], [2.0, -2.0]]), has_equilibrium=True,
    )


def state_dependent_stable():
    """Two regimes, state-dependent Q, mean-square contractive."""
    def rates(x):
        s = x[:, 0] ** 2 / (1 + x[:, 0] ** 2)
        q = np.empty((x.shape[0], 2, 2))
        q[:, 0, 1] = 1 + s
        q[:, 0, 0] = -(1 + s)
        q[:, 1, 0] = 2 - s
        q[:, 1, 1] = -(2 - s)
        return q

    return RegimeModel(
        dim_x=1, num_regimes=2, dim_w=1,
        drift=lambda x, i: np.where(np.asarray(i)[:, None] == 1, -2.0, -1.0) * x,
        diffusion=lambda x, i: (0.5 * x)[:, :, None],
        jump_coeff=lambda x, i, mk: 0.2 * x,
        jump_rate=0.5, rate_matrix=rates, has_equilibrium=True,
    )


def planar_rotation():
    """r=2, d=2 model, two regimes."""
    A = [np.array([[-1.0, 2.0], [-2.0, -1.0]]), np.array([[-0.5, 0.0], [0.0, -1.5]])]

    def drift(x, i):
        i = np.asarray(i)
        return np.where(i[:, None] == 1, x @ A[0].T, x @ A[1].T)

    def diffusion(x, i):
        n = x.shape[0]
        out = np.zeros((n, 2, 2))
        out[:, 0, 0] = 0.3 * x[:, 0]
        out[:, 1, 1] = 0.2 * x[:, 1]
        return out

    return RegimeModel(
        dim_x=2, num_regimes=2, dim_w=2,
        drift=drift, diffusion=diffusion,
        jump_coeff=lambda x, i, mk: mk[:, None] * x,
        jump_rate=0.3, rate_matrix=const_q([[-1.0, 1.0], [1.0, -1.0]]),
        marks=MarkLaw("uniform", (-0.5, 0.5)), has_equilibrium=True,
    )
