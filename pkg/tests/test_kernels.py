import os
import subprocess
import sys

import numpy as np
import pytest

from zonal_clearing import ClearingConfig, clear_hour
from zonal_clearing._backend import ENV_VAR, HAVE_NUMBA
from zonal_clearing.kernels import get_kernels
from zonal_clearing.kernels.codes import AT_LOWER, BASIC, OPTIMAL
from zonal_clearing.serialize import results_to_json
from zonal_clearing.synthetic import italian_day

needs_numba = pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")


def random_graph(rng, n, p):
    upper = np.triu(rng.random((n, n)) < p, 1)
    return (upper | upper.T).astype(np.int8)


@needs_numba
def test_dfs_backends_agree():
    rng = np.random.default_rng(0)
    fast, ref = get_kernels("numba"), get_kernels("numpy")
    for _ in range(200):
        n = int(rng.integers(1, 30))
        adj = random_graph(rng, n, float(rng.uniform(0.02, 0.4)))
        start = int(rng.integers(0, n))
        np.testing.assert_array_equal(fast.dfs_reach(adj, start), ref.dfs_reach(adj, start))


def test_dfs_marks_start_and_isolated_node():
    k = get_kernels()
    adj = np.zeros((3, 3), dtype=np.int8)
    np.testing.assert_array_equal(k.dfs_reach(adj, 1), [False, True, False])


@needs_numba
def test_pivot_backends_agree():
    rng = np.random.default_rng(1)
    for _ in range(50):
        m, n = int(rng.integers(1, 8)), int(rng.integers(2, 12))
        T = rng.normal(size=(m, n))
        d = rng.normal(size=n)
        r, j = int(rng.integers(0, m)), int(rng.integers(0, n))
        out = []
        for name in ("numba", "numpy"):
            T2, d2 = T.copy(), d.copy()
            get_kernels(name).pivot(T2, d2, r, j)
            out.append((T2, d2))
        np.testing.assert_allclose(out[0][0], out[1][0], rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(out[0][1], out[1][1], rtol=1e-12, atol=1e-12)
        assert out[0][0][r, j] == 1.0 and (np.delete(out[0][0][:, j], r) == 0).all()


@pytest.mark.parametrize("name", ["numba", "numpy"])
def test_simplex_loop_on_box_problem(name):
    if name == "numba" and not HAVE_NUMBA:
        pytest.skip("numba not installed")
    # max x0 + x1 s.t. x0 + x1 + s = 3, 0 <= x <= 2
    T = np.array([[1.0, 1.0, 1.0]])
    beta = np.array([3.0])
    basis = np.array([2], dtype=np.int64)
    state = np.array([AT_LOWER, AT_LOWER, BASIC], dtype=np.int64)
    upper = np.array([2.0, 2.0, np.inf])
    d = np.array([-1.0, -1.0, 0.0])
    code, it = get_kernels(name).simplex_loop(T, beta, d, basis, state, upper, 100, 20, 1e-10, 1e-9)
    assert code == OPTIMAL and it >= 1
    x = np.where(state == 1, upper, 0.0)
    x[basis] = beta
    assert x[0] + x[1] == pytest.approx(3.0)


@needs_numba
def test_full_day_identical_across_backends():
    topo, offers, limits = italian_day(np.random.default_rng(8), 300, hours=range(1, 5))
    outs = []
    for name in ("numba", "numpy"):
        cfg = ClearingConfig(backend=name)
        outs.append(results_to_json([clear_hour(offers, topo, limits, h, cfg) for h in range(1, 5)]))
    assert outs[0] == outs[1]


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        get_kernels("fortran")


def _backend_in_subprocess(value):
    env = dict(os.environ, **{ENV_VAR: value})
    return subprocess.run(
        [sys.executable, "-c", "import zonal_clearing as z; print(z.BACKEND)"],
        env=env, capture_output=True, text=True,
    )


def test_env_flag_selects_numpy():
    proc = _backend_in_subprocess("numpy")
    assert proc.returncode == 0 and proc.stdout.strip() == "numpy"


def test_env_flag_rejects_unknown_value():
    proc = _backend_in_subprocess("gpu")
    assert proc.returncode != 0 and ENV_VAR in proc.stderr
