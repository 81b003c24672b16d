import math

import numpy as np
import pytest

import wkam


def test_systems_listed():
    assert {"pendulum", "free", "pendulum2d"} <= set(wkam.systems())


def test_alpha_values():
    assert abs(wkam.alpha("pendulum", [0.0], grid=256)) < 1e-3
    assert abs(wkam.alpha("pendulum", [1.5], grid=256) - 0.2446376406) < 2e-3


def test_free_action():
    assert wkam.action("free", [0.0], [0.3], 0.2) == pytest.approx(0.09 / 0.4, rel=1e-9)


def test_solution_closed_form():
    s = wkam.Solution("pendulum", grid=256)
    assert s.converged and s.dim == 1
    u = s.values()
    x = np.arange(256) / 256
    exact = 2 / math.pi * (1 - np.abs(np.cos(math.pi * x)))
    assert np.max(np.abs(u - exact)) < 2e-2
    assert s([0.5]) == pytest.approx(2 / math.pi, abs=2e-2)
    crit = np.sort(s.critical_points()[:, 0])
    assert len(crit) == 2 and abs(crit[1] - 0.5) < 1e-2
    assert s.singular_mask()[128]


def test_integrate_reaches_equilibrium():
    s = wkam.Solution("pendulum", grid=256)
    tr = s.integrate([0.3], 10.0, 0.01)
    assert tr["omega"] == "stationary"
    assert np.all(np.diff(tr["v"]) > -1e-3)


def test_twist_orbit():
    d = wkam.standard_map_orbit(0.0, 1, 3)
    assert abs(d["rotation_number"] - 1 / 3) < 1e-12


def test_bad_system_raises():
    with pytest.raises(ValueError):
        wkam.Solution("nope")
