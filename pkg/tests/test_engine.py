import numpy as np
import pytest
from scipy import stats

from rsjd.engine import (
    SimConfig,
    finite_difference_sensitivity,
    run_ensemble,
    simulate_coupled_pair,
    simulate_ensemble,
    simulate_path,
    simulate_variational,
    write_ensemble_csv,
    write_trajectory_csv,
)
from rsjd.model import MarkLaw, builtin_example

from _models import scalar_linear, smooth_two_regime, state_dependent_stable, planar_rotation


def test_simconfig_validation():
    with pytest.raises(ValueError):
        SimConfig(dt=2.0, T=1.0)
    with pytest.raises(ValueError):
        SimConfig(dt=0.3, T=1.0)
    with pytest.raises(ValueError):
        SimConfig(dt=0.1, T=1.0, n_paths=0)
    assert SimConfig(1e-3, 50.0).n_steps == 50_000


def test_deterministic_decay():
    dt = 1e-3
    tr = simulate_path(scalar_linear(b=-1.0), [1.0], 1, SimConfig(dt, 1.0))
    assert abs(tr.states[-1, 0] - np.exp(-1)) <= 5 * dt
    assert tr.times[0] == 0 and tr.times[-1] == 1.0
    assert np.all(np.diff(tr.times) > 0)


def test_poisson_doubling():
    lam, T = 1.0, 2.0
    res = run_ensemble(scalar_linear(b=0.0, lam=lam, g=1.0), 1.0, 1,
                       SimConfig(0.01, T, seed=3, n_paths=10_000, record_stride=200))
    l2 = np.log2(res.final[:, 0])
    assert np.allclose(l2, res.n_jumps)
    assert abs(l2.mean() - lam * T) < 3 * l2.std(ddof=1) / np.sqrt(len(l2))


def test_jump_counts_are_poisson():
    lam, T = 0.8, 2.5
    res = run_ensemble(scalar_linear(b=0.0, lam=lam, g=0.0), 1.0, 1,
                       SimConfig(0.05, T, seed=5, n_paths=10_000, record_stride=50))
    counts = res.n_jumps
    kmax = 6
    obs = np.array([np.sum(counts == k) for k in range(kmax)] + [np.sum(counts >= kmax)])
    pk = stats.poisson.pmf(np.arange(kmax), lam * T)
    exp = np.append(pk, 1 - pk.sum()) * len(counts)
    assert stats.chisquare(obs, exp).pvalue > 1e-3


def test_compensated_jump_integral_has_zero_mean():
    lam, T = 1.5, 2.0
    m = scalar_linear(b=0.0, lam=lam, g=0.0, marks=MarkLaw("uniform", (0.0, 1.0)))
    trajs = simulate_ensemble(m, [1.0], 1, SimConfig(0.05, T, seed=9, n_paths=4000, record_stride=40))
    h = np.cos  # bounded test function of the mark
    eh = np.sin(1.0)  # E cos(U), U ~ uniform(0,1)
    vals = np.array([sum(h(e.detail) for e in tr.events if e.kind == "jump") - lam * T * eh for tr in trajs])
    assert abs(vals.mean()) < 3 * vals.std(ddof=1) / np.sqrt(len(vals))


def test_equilibrium_start_stays_zero():
    for name in ("ex61", "ex62"):
        tr = simulate_path(builtin_example(name), [0.0], 1, SimConfig(1e-3, 2.0, seed=1, record_stride=10))
        assert np.all(tr.states == 0.0)


def test_single_path_equals_ensemble_member():
    m = builtin_example("ex62")
    cfg = SimConfig(1e-3, 1.0, seed=4, n_paths=1, record_stride=10)
    a = simulate_path(m, [0.5], 2, cfg)
    b = simulate_ensemble(m, [0.5], 2, cfg)[0]
    assert np.array_equal(a.states, b.states) and a.labels == b.labels
    many = run_ensemble(m, 0.5, 2, SimConfig(1e-3, 1.0, seed=4, n_paths=40, record_stride=10))
    c = simulate_path(m, [0.5], 2, cfg, path_index=37)
    on_grid = np.isin(c.times, many.times)
    assert np.array_equal(c.states[on_grid, 0], many.X[37, :, 0])


def test_thread_count_does_not_change_csv(tmp_path, monkeypatch):
    import rsjd.engine as eng

    monkeypatch.setattr(eng, "BLOCK_SIZE", 8)
    m = builtin_example("ex61")
    cfg = SimConfig(1e-2, 2.0, seed=12, n_paths=30, record_stride=5)
    outs = []
    for nt in (1, 4, 8):
        p = tmp_path / f"e{nt}.csv"
        write_ensemble_csv(simulate_ensemble(m, [1.0], 1, cfg, threads=nt), p)
        outs.append(p.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_split_horizon_matches_single_run():
    from rsjd.engine import PathNoise, integrate

    m = builtin_example("ex62")
    dt, n = 1e-3, 16
    whole = integrate(m, np.full((n, 1), 0.2), np.ones(n), PathNoise(m, 8, np.arange(n), 2.0), dt, 0, 2000)
    noise = PathNoise(m, 8, np.arange(n), 2.0)
    half = integrate(m, np.full((n, 1), 0.2), np.ones(n), noise, dt, 0, 1000)
    rest = integrate(m, half.final, half.final_regime, noise, dt, 1000, 2000)
    assert np.array_equal(whole.final, rest.final)
    assert np.array_equal(whole.final_regime, rest.final_regime)


def test_geometric_jump_diffusion_second_moment():
    b, s, lam, T = -1.0, 0.2, 0.25, 1.0
    res = run_ensemble(scalar_linear(b, s, lam, 1.0), 1.0, 1,
                       SimConfig(1e-3, T, seed=2, n_paths=10_000, record_stride=1000))
    x2 = res.final[:, 0] ** 2
    exact = np.exp((2 * b + s * s + 3 * lam) * T)
    assert abs(x2.mean() - exact) < 3 * x2.std(ddof=1) / np.sqrt(len(x2))


def test_weak_order_one():
    b, s, lam, T = -1.0, 0.3, 0.2, 1.0
    exact = np.exp((2 * b + s * s + 3 * lam) * T)
    errs = []
    for dt in (0.1, 0.05):
        res = run_ensemble(scalar_linear(b, s, lam, 1.0), 1.0, 1,
                           SimConfig(dt, T, seed=21, n_paths=100_000, record_stride=int(round(T / dt))))
        errs.append(abs(np.mean(res.final[:, 0] ** 2) - exact))
    assert 1.5 < errs[0] / errs[1] < 2.7


def test_trajectory_events_consistent():
    m = builtin_example("ex62")
    tr = simulate_path(m, [0.5], 1, SimConfig(1e-3, 3.0, seed=3, record_stride=100))
    assert len(tr.times) == len(tr.states) == len(tr.regimes) == len(tr.labels)
    assert np.all(np.diff(tr.times) > 0)
    kinds = {e.kind for e in tr.events}
    assert kinds == {"jump", "switch"}
    regime = 1
    for e in tr.events:
        if e.kind == "switch":
            assert e.detail[0] == regime and e.detail[1] != regime
            regime = e.detail[1]
        else:
            g = m.g(e.pre[None], [regime], np.array([e.detail]))[0]
            assert np.allclose(e.post, e.pre + g)
    # labels land on rows with the recorded regime
    for t, a, lab in zip(tr.times, tr.regimes, tr.labels):
        if lab.startswith("S:"):
            assert int(lab.split("->")[1].split(";")[0]) == a


def test_divergent_paths_flagged():
    m = scalar_linear(b=2000.0)
    res = run_ensemble(m, 1.0, 1, SimConfig(0.01, 5.0, n_paths=3, record_stride=100))
    assert res.divergent.all()


def test_underflow_freeze():
    m = scalar_linear(b=-400.0)
    res = run_ensemble(m, 1.0, 1, SimConfig(1e-3, 2.0, n_paths=2, record_stride=100))
    assert np.all(res.final == 0.0)
    assert np.all(np.isfinite(res.freeze_time)) and np.all(res.freeze_norm < 1e-150)


def test_freeze_only_with_equilibrium():
    m = scalar_linear(b=-400.0, equilibrium=False)
    res = run_ensemble(m, 1.0, 1, SimConfig(1e-3, 2.0, n_paths=1, record_stride=100))
    assert np.isnan(res.freeze_time).all()


def test_csv_format(tmp_path):
    tr = simulate_path(builtin_example("ex61"), [1.0], 1, SimConfig(1e-3, 1.0, seed=7, record_stride=100))
    p = tmp_path / "t.csv"
    write_trajectory_csv(tr, p)
    lines = p.read_text().splitlines()
    assert lines[0] == "t,x_1,alpha,event"
    assert len(lines) == len(tr.times) + 1
    row = lines[-1].split(",")
    assert float(row[1]) == tr.states[-1, 0]
    trajs = simulate_ensemble(planar_rotation(), [1.0, 0.5], 1, SimConfig(0.01, 1.0, seed=1, n_paths=3, record_stride=10))
    write_ensemble_csv(trajs, p)
    head = p.read_text().splitlines()[0]
    assert head == "path_id,t,x_1,x_2,alpha,event"


def test_coupled_pair_lockstep():
    m = builtin_example("ex62")
    pr = simulate_coupled_pair(m, [0.7], [0.7], 2, 2, SimConfig(1e-3, 2.0, seed=1, record_stride=10))
    assert np.all(pr.sq_diff == 0.0)
    assert np.array_equal(pr.first.regimes, pr.second.regimes)


def test_coupled_pair_first_component_is_simulate_path():
    m = builtin_example("ex62")
    cfg = SimConfig(1e-3, 2.0, seed=6, record_stride=10)
    pr = simulate_coupled_pair(m, [0.7], [0.2], 1, 3, cfg)
    tr = simulate_path(m, [0.7], 1, cfg)
    assert np.array_equal(pr.first.states, tr.states)
    assert np.array_equal(pr.first.regimes, tr.regimes)


def test_coupled_pair_contraction():
    dt = 1e-3
    pr = simulate_coupled_pair(scalar_linear(b=-1.0), [1.0], [3.0], 1, 1, SimConfig(dt, 2.0, record_stride=100))
    exact = 2.0 * np.exp(-pr.times)
    assert np.all(np.abs(np.sqrt(pr.sq_diff) - exact) <= 5 * dt * exact)


def test_coupled_ensemble_msd_decreases():
    m = state_dependent_stable()
    res = run_ensemble(m, 1.0, 1, SimConfig(1e-3, 4.0, seed=3, n_paths=2000, record_stride=100), y0=-0.5, b0=2)
    msd = np.mean((res.X - res.Y)[:, :, 0] ** 2, axis=0)
    slope = np.polyfit(res.times, np.log(msd), 1)[0]
    assert slope < 0


def test_variational_linear_drift():
    dt, b = 1e-3, -0.7
    sp = simulate_variational(scalar_linear(b=b), 1.0, 1, SimConfig(dt, 1.0, record_stride=100))
    assert np.all(np.abs(sp.varsigma[0] - np.exp(b * sp.times)) <= 5 * dt)
    sp = simulate_variational(scalar_linear(b=0.0), 1.0, 1, SimConfig(dt, 1.0, record_stride=100))
    assert np.all(sp.varsigma == 1.0)


def test_variational_doubles_at_jumps():
    res = run_ensemble(scalar_linear(b=0.0, lam=1.0, g=1.0), 1.0, 1,
                       SimConfig(0.01, 3.0, seed=2, n_paths=200, record_stride=300), variational=True)
    assert np.array_equal(res.S[:, -1], 2.0 ** res.n_jumps)


def test_variational_fd_coefficients_match_analytic():
    import dataclasses

    m = scalar_linear(b=-0.5, sigma=0.4, lam=0.7, g=0.3)
    bare = dataclasses.replace(m, drift_dx=None, diffusion_dx=None, jump_coeff_dx=None)
    cfg = SimConfig(1e-2, 2.0, seed=4, n_paths=50, record_stride=50)
    a = simulate_variational(m, 1.3, 1, cfg).varsigma
    b = simulate_variational(bare, 1.3, 1, cfg).varsigma
    assert np.allclose(a, b, rtol=1e-7)


def test_fd_sensitivity_linear_exact():
    b = -0.8
    sp = finite_difference_sensitivity(scalar_linear(b=b), 1.0, 0.1, 1, SimConfig(1e-3, 1.0, record_stride=100))
    em = (1 + b * 1e-3) ** (np.round(sp.times / 1e-3))
    assert np.allclose(sp.z[0], em, rtol=1e-12)
    assert np.allclose(sp.z[0], np.exp(b * sp.times), atol=5e-3)
    assert sp.z[0, 0] == pytest.approx(1.0) and sp.varsigma[0, 0] == 1.0


def test_fd_sensitivity_converges():
    m = smooth_two_regime()
    cfg = SimConfig(1e-3, 1.0, seed=1, n_paths=300, record_stride=1000)
    errs = []
    for d in (1e-1, 1e-2, 1e-3):
        sp = finite_difference_sensitivity(m, 1.0, d, 1, cfg)
        errs.append(np.mean((sp.z[:, -1] - sp.varsigma[:, -1]) ** 2))
    assert errs[0] > errs[1] > errs[2]


def test_fd_sensitivity_rejects_zero_delta_and_vectors():
    with pytest.raises(ValueError):
        finite_difference_sensitivity(scalar_linear(), 1.0, 0.0, 1, SimConfig(0.1, 1.0))
    with pytest.raises(ValueError):
        simulate_variational(planar_rotation(), [1.0, 1.0], 1, SimConfig(0.1, 1.0))


def test_bad_start():
    with pytest.raises(ValueError):
        simulate_path(builtin_example("ex61"), [np.nan], 1, SimConfig(0.01, 1.0))
    with pytest.raises(ValueError):
        simulate_path(builtin_example("ex61"), [1.0], 3, SimConfig(0.01, 1.0))
