import numpy as np
import pytest

from boundsim.netmodel import ConnectivityGraph, NetworkConfig, hole_preset

# one line per shipping criterion, filled in by the acceptance suite and
# echoed after the run (plain prints are swallowed by output capture)
acceptance_lines = []


def pytest_terminal_summary(terminalreporter):
    if acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines:
            terminalreporter.write_line(line)


def graph(n, edges, positions=None, signal=None, center=None):
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    return ConnectivityGraph(
        n, e,
        positions=None if positions is None else np.asarray(positions, dtype=float),
        signal=None if signal is None else np.asarray(signal, dtype=np.uint8),
        center=center,
    )


def cycle_graph(n):
    return graph(n, [(i, (i + 1) % n) for i in range(n)])


def path_graph(n):
    return graph(n, [(i, i + 1) for i in range(n - 1)])


def desk_config(seed=0, **overrides):
    """30x30 perturbed grid with the cross-shaped hole, UDG, d_avg 12."""
    kwargs = dict(seed=seed, hole_mask=hole_preset("cross", 30.0, 30.0))
    kwargs.update(overrides)
    return NetworkConfig(**kwargs)


@pytest.fixture
def small_network():
    from boundsim.netmodel import generate_network
    return generate_network(NetworkConfig(area_width=8.0, area_height=8.0, seed=5))
