import numpy as np
import pytest

from heavyball import experiments as ex
from heavyball.gradcheck import central_diff, relative_error
from heavyball.momentum import HBConfig
from heavyball.numkit import Rng


@pytest.fixture(scope="module")
def saddle():
    return ex.sample_saddle(Rng(0), 10)


def test_sample_shape_and_mean(saddle):
    assert saddle.xs.shape == (10, 2)
    np.testing.assert_array_equal(saddle.x_bar, saddle.xs.mean(axis=0))
    np.testing.assert_array_equal(saddle.H, np.diag([1.0, -0.1]))
    with pytest.raises(ValueError):
        ex.sample_saddle(Rng(0), 0)


def test_sample_covariance():
    xs = ex.sample_saddle(Rng(1), 10**5).xs
    var = xs.var(axis=0)
    np.testing.assert_allclose(var, [0.1, 0.001], rtol=0.1)


def test_saddle_values_at_origin(saddle):
    assert ex.saddle_objective(saddle, np.zeros(2)) == 0.0
    np.testing.assert_array_equal(ex.saddle_gradient(saddle, np.zeros(2)), saddle.x_bar)


def test_saddle_gradient_finite_differences(saddle):
    rng = Rng(2)
    worst = 0.0
    for _ in range(100):
        w = 0.5 * rng.standard_normal(2)
        if np.min(np.abs(w)) < 1e-3:
            continue
        fd = central_diff(lambda v: ex.saddle_objective(saddle, v), w)
        worst = max(worst, relative_error(ex.saddle_gradient(saddle, w), fd))
    assert worst <= 1e-5


def test_l10_gradient_positive():
    flat = ex.SaddleInstance(xs=np.zeros((1, 2)), x_bar=np.zeros(2), H=np.zeros((2, 2)))
    for w in np.abs(Rng(3).standard_normal((50, 2))) + 1e-3:
        assert np.all(ex.saddle_gradient(flat, w) > 0)


def test_first_step(saddle):
    trace = ex.saddle_escape_run(saddle, HBConfig(eta=0.01, beta=0.5), 3)
    w1 = np.array([trace.rows[1]["w1"], trace.rows[1]["w2"]])
    np.testing.assert_array_equal(w1, -0.01 * saddle.x_bar)


def test_escape_time_definition(saddle):
    trace = ex.saddle_escape_run(saddle, HBConfig(eta=0.01, beta=0.9), 2000)
    t = ex.escape_time(trace)
    f = trace.column("f")
    assert f[t] <= -0.01 and np.all(f[:t] > -0.01)
    short = ex.saddle_escape_run(saddle, HBConfig(eta=0.01), 3)
    assert ex.escape_time(short) is None


def test_stationary_point_equations(saddle):
    trace = ex.saddle_escape_run(saddle, HBConfig(eta=0.01, beta=0.5), 20000)
    w = np.array([trace.rows[-1]["w1"], trace.rows[-1]["w2"]])
    x = saddle.x_bar
    assert abs((1 + 10 * abs(w[0]) ** 8) * w[0] + x[0]) <= 1e-6
    assert abs((-0.1 + 10 * abs(w[1]) ** 8) * w[1] + x[1]) <= 1e-6
    assert np.sign(w[1]) == -np.sign(x[1])


def test_top_eigvec_oracle():
    B = Rng(4).standard_normal((6, 6))
    A = B @ B.T
    u1, vals = ex.top_eigvec(A)
    vals_ref, vecs_ref = np.linalg.eigh(A)
    np.testing.assert_allclose(vals, vals_ref, rtol=1e-12)
    assert ex.sign_dist(vecs_ref[:, -1], u1) <= 1e-10


def test_sign_dist():
    u = np.array([0.6, 0.8])
    assert ex.sign_dist(3 * u, u) == pytest.approx(0.0, abs=1e-15)
    assert ex.sign_dist(-2 * u, u) == pytest.approx(0.0, abs=1e-15)
    assert ex.sign_dist(np.array([0.8, -0.6]), u) == pytest.approx(np.sqrt(2))


def test_eig_diag_power_like():
    trace = ex.eig_hb_run(np.diag([2.0, 1.0]), HBConfig(eta=0.1), w0=np.array([1.0, 1.0]), T=500)
    d = trace.column("dist")
    assert d[-1] < 1e-12
    assert np.all(np.diff(d) <= 0)
    assert trace.columns == ["t", "dist"]


def test_eig_projection_identity():
    B = Rng(5).standard_normal((5, 5))
    A = B @ B.T
    vals, U = np.linalg.eigh(A)
    eta, beta = 0.01, 0.7
    trace = ex.eig_hb_run(A, HBConfig(eta=eta, beta=beta), w0=Rng(6).standard_normal(5), T=200,
                          keep_iterates=True)
    P = trace.iterate_array() @ U
    prev = np.vstack([P[:1], P[:-2]])
    pred = (1 + eta * vals) * P[:-1] + beta * (P[:-1] - prev)
    scale = np.abs(P[1:]).max(axis=1, keepdims=True)
    assert np.max(np.abs(pred - P[1:]) / scale) <= 1e-10
    assert trace.meta["rescales"] == 0


def test_eig_rescaling_keeps_direction():
    A = np.diag([50.0, 10.0, 1.0])
    w0 = np.ones(3)
    trace = ex.eig_hb_run(A, HBConfig(eta=1.0, beta=0.9), w0=w0, T=200)
    assert trace.meta["rescales"] > 0
    assert trace.column("dist")[-1] < 1e-12


def test_eig_early_stop_and_iterations():
    trace = ex.eig_hb_run(np.diag([2.0, 1.0]), HBConfig(eta=0.1), w0=np.array([1.0, 1.0]),
                          T=10000, tol=1e-3)
    n = ex.iterations_to(trace, 1e-3)
    assert n == len(trace) - 1
    assert ex.iterations_to(trace, 1e-30) is None


def test_eig_start_guards():
    A = np.diag([2.0, 1.0])
    with pytest.raises(ValueError, match="orthogonal"):
        ex.eig_hb_run(A, HBConfig(eta=0.1), w0=np.array([0.0, 1.0]))
    with pytest.raises(ValueError, match="rng"):
        ex.eig_hb_run(A, HBConfig(eta=0.1))
    trace = ex.eig_hb_run(A, HBConfig(eta=0.1), rng=Rng(7), T=5)
    assert len(trace) == 6
    with pytest.raises(ValueError, match="semi-definite"):
        ex.eig_hb_run(np.diag([1.0, -1.0]), HBConfig(eta=0.1), w0=np.ones(2))
