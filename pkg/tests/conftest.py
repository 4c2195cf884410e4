"""Shared fixtures: a constants table and archived runs reused across tests."""

import numpy as np
import pytest

import mhdgevrey as m


@pytest.fixture(scope="session")
def table():
    t = m.build_table(s_values=(0.5, 0.75, 1.0))
    t.ensure_C(0.0)
    return t


@pytest.fixture(scope="session")
def table_json(table, tmp_path_factory):
    """The session constants table serialised for CLI --table arguments."""
    path = tmp_path_factory.mktemp("table") / "constants.json"
    table.to_json(path)
    return str(path)


@pytest.fixture(scope="session")
def delta_std(table):
    """0.9 of the admissible maximum at nu = eta = 0.1."""
    return 0.9 * m.delta_max(table, 0.1, 0.1)


def full_diagnostics(delta, sigma=0.05):
    return m.DiagnosticsSpec(
        s_grid=(0.0, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0),
        delta=delta,
        derivative_s=(0.0, 1.0, -1.0, -3.0),
        wiener_s=(-1.0, 0.0, 1.0),
        lq_grid=((4.0, 1.0),),
        ft_sigma=sigma,
        ft_s=(0.75, 1.0),
        tilde_s=(0.0, 0.5, 1.0, 1.5),
    )


@pytest.fixture(scope="session")
def singlemode_state():
    return m.make_initial(
        "single-mode",
        {"n_v": (0, 0, 1), "amp_v": [1.0, 1j, 0.0], "n_b": None},
        N=8, nu=0.1, eta=0.1,
    )


@pytest.fixture(scope="session")
def singlemode_trace(tmp_path_factory, singlemode_state, delta_std):
    """Archived single-mode decay run with every diagnostic column."""
    out = tmp_path_factory.mktemp("singlemode")
    cfg = m.SolverConfig(N=8, nu=0.1, eta=0.1, dt=1e-3, t_end=0.05,
                         output_stride=5, scheme="integrating-factor-RK2")
    return m.simulate(cfg, singlemode_state, out,
                      diagnostics=full_diagnostics(delta_std))


@pytest.fixture(scope="session")
def random_trace(tmp_path_factory, delta_std):
    """Small random-spectrum run (N=6) with every diagnostic column."""
    out = tmp_path_factory.mktemp("random6")
    st = m.make_initial("random-spectrum",
                        {"a": 2.0, "b": 0.5, "norm_v": 0.3, "norm_b": 0.15},
                        N=6, seed=5, nu=0.1, eta=0.1)
    cfg = m.SolverConfig(N=6, nu=0.1, eta=0.1, dt=1e-3, t_end=0.04,
                         output_stride=4, scheme="integrating-factor-RK4")
    return m.simulate(cfg, st, out, diagnostics=full_diagnostics(delta_std))


def random_field(N, seed, scale=1.0):
    """Valid random solenoidal field (helper for property tests)."""
    st = m.make_initial("random-spectrum",
                        {"a": 1.5, "b": 0.4, "norm_v": scale, "norm_b": scale},
                        N=N, seed=seed)
    return st.V


def energy(state):
    return 0.5 * (m.sobolev_norm(state.V, 0.0) ** 2
                  + m.sobolev_norm(state.B, 0.0) ** 2)
