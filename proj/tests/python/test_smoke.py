import numpy as np
import pytest

import epflow as ep


J = np.array([[0.0, -1.0], [1.0, 0.0]])


def test_rotation_closed_form():
    lin = ep.LocalLinearization(np.eye(2), J)
    for a in (-0.1, 0.0, 0.25, 0.5, 0.75, 1.0, 1.1):
        exact = 1.0 - np.sqrt(1.0 + 4.0 * a * (1.0 - a))
        assert abs(ep.leading_eig_linear(lin, a) - exact) <= 1e-10


def test_are_certificates():
    sol = ep.solve_are(ep.build_coeffs(ep.LocalLinearization(np.eye(2), J), 0.5))
    assert sol.residual <= 1e-10
    assert sol.stability_margin < 0
    assert np.allclose(sol.X, np.sqrt(0.5) * np.eye(2), atol=1e-12)


def test_philox_matches_numpy():
    from numpy.random import Philox

    for seed, stream in ((0, 0), (123, 7), (2**64 - 1, 5)):
        key = np.array([seed, stream], dtype=np.uint64)
        ours = ep.philox_keystream(seed, stream, 32)
        ref = Philox(key=key).random_raw(32)
        assert np.array_equal(ours, ref)


def test_model_and_critical_points():
    m = ep.make_twowell(1.0, 0.3)
    points = ep.find_critical_points(m)
    kinds = sorted(cp.kind for cp in points)
    assert kinds == ["min", "min", "saddle"]
    for cp in points:
        assert np.linalg.norm(m.grad_V(cp.location)) <= 1e-9
        assert cp.b_norm <= 1e-8


def test_rate_function_pipeline():
    m = ep.make_rotation(1.0)
    rep = ep.check_assumptions(m, 1024, 1)
    assert rep.pass_rb and rep.k_b_hat <= 1e-12
    grid = ep.default_alpha_grid(ep.alpha_interval(rep.k_b_hat, rep.h_b_hat), 101)
    curve = ep.semiclassical_cgf(m, grid)
    assert ep.gc_defect(curve) <= 1e-9
    rf = ep.legendre(curve, ep.default_sigma_grid(curve))
    assert min(rf.values) >= -1e-10
    assert ep.rate_gc_defect(rf) <= 1e-9


def test_admissibility_examples():
    assert ep.admissible_pair(0.33, 0.75, 0.5, 2.0)
    assert ep.admissible_pair(0.49, 1.5, 0.0, 2.0)
    assert not ep.admissible_pair(0.33, 0.75, 2.0, 2.0)


def test_simulation_reproducibility():
    m = ep.make_rotation(1.0)
    a = ep.simulate(m, eps=0.5, dt=1e-2, horizon=1.0, n_paths=32, seed=9, threads=1)
    b = ep.simulate(m, eps=0.5, dt=1e-2, horizon=1.0, n_paths=32, seed=9, threads=2)
    assert np.array_equal(a.samples, b.samples)
    assert np.array_equal(a.final_states, b.final_states)


def test_mc_mean_matches_theory():
    m = ep.make_rotation(1.0)
    ens = ep.simulate(m, eps=0.5, dt=1e-3, horizon=10.0, n_paths=2000, seed=3,
                      x0=np.array([1.0, 0.0]), threads=2)
    est = ep.estimate_mean_ep(ens)
    assert abs(est.value - 2.0) <= 3.0 * est.se


def test_spectral_route():
    m = ep.make_rotation(1.0)
    grid = ep.auto_grid(m, 0.5, 0.5, 64)
    res = ep.leading_eigenvalue(m, 0.5, 0.5, grid)
    assert abs(res.lambda_ - (1.0 - np.sqrt(2.0))) <= 1e-2
    assert min(res.eigvec) > 0.0


def test_numerical_guard_surfaces_as_exception():
    lin = ep.LocalLinearization(np.eye(2), J)
    with pytest.raises(RuntimeError):
        ep.solve_are(ep.build_coeffs(lin, 0.51 + 0.5 * np.sqrt(2.0)))


def test_sweep_and_raster_bindings():
    m = ep.make_twowell(1.0, 0.0)
    rows = ep.e_eps_sweep(m, 0.25, [0.2, 0.1])
    assert rows[1][2] <= rows[0][2] * 1.2  # error nonincreasing within slack

    alphas, ps, mask = ep.region_raster(0.33, 0.75, (-1.0, 2.0), (1.0, 6.0), 21)
    assert mask.shape == (21, 21)
    assert not mask[:, 0].any()  # p = 1 column outside the domain


def test_tail_histogram_binding():
    m = ep.make_rotation(1.0)
    ens = ep.simulate(m, eps=0.5, dt=1e-3, horizon=5.0, n_paths=2000, seed=13,
                      x0=np.array([1.0, 0.0]), threads=2)
    rows = ep.tail_histogram(ens, 21)
    mode = min(rows, key=lambda r: r[1])
    assert abs(mode[0] - 2.0) <= 1.0
