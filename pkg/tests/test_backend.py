import numpy as np
import pytest

from osc_conn import _backend
from osc_conn.dynamics import SimConfig, sample_dom


@pytest.mark.parametrize("raw", ["0", "-2", "two", "1.5"])
def test_thread_count_rejects(monkeypatch, raw):
    monkeypatch.setenv("OSC_CONN_THREADS", raw)
    with pytest.raises(ValueError):
        _backend.thread_count()


def test_thread_count_capped(monkeypatch):
    monkeypatch.setenv("OSC_CONN_THREADS", "4096")
    assert 1 <= _backend.thread_count() <= 4096
    monkeypatch.setenv("OSC_CONN_THREADS", "1")
    assert _backend.thread_count() == 1


def test_unknown_backend():
    with pytest.raises(ValueError):
        _backend.get_advance("fortran")


@pytest.mark.skipif(_backend.BACKEND != "cython", reason="extension not built")
def test_backends_agree():
    rng = np.random.default_rng(5)
    phases = rng.uniform(0, 2 * np.pi, (6, 26))
    omegas = 2 * np.pi * rng.uniform(4.0, 5.0, (6, 26))
    coupling = np.array([0.0, 0.1, 0.5, 1.0, 4.0, 20.0])
    cfg = SimConfig(dt=0.002)
    dc, rc = sample_dom(phases, omegas, coupling, cfg, backend="cython", threads=1)
    dp, rp = sample_dom(phases, omegas, coupling, cfg, backend="python")
    assert np.allclose(dc, dp, rtol=1e-7, atol=1e-10)
    assert np.allclose(rc, rp, rtol=1e-7, atol=1e-10)
