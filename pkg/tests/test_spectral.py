import math
import warnings

import numpy as np
import pytest

from maxstable_sphere.geometry import fibonacci_grid, uniform_sphere_samples
from maxstable_sphere.rng import RngStream
from maxstable_sphere.spectral import (GRID_EXACT, SPHERE, InnovationField, InnovationSpec,
                                       LowerBoundWarning, RandomBumpInnovation,
                                       ResourceLimitError, eval_field, field_inf_bound,
                                       field_sup, read_events_csv, simulate_innovation,
                                       simulate_innovations, top_weights, write_events_csv)
from maxstable_sphere.validation import ks_frechet, simulate_at_points

EX, EZ = np.array([1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0])
F2_MAX = 2 * math.exp(2) / (4 * math.pi * math.sinh(2))
F2_MIN = 2 * math.exp(-2) / (4 * math.pi * math.sinh(2))


def test_frozen_realization():
    z = simulate_innovation(1.0, SPHERE, RngStream(123))
    assert len(z) == 4
    assert z.weights[:3].tolist() == [19.917018608434137, 7.452254632639093, 4.899045156416205]
    assert z.centers[0].tolist() == [0.9364877767918991, -0.0038060038113898577,
                                     0.35067956634847447]


def test_single_event_stub():
    z = InnovationField([1.0], [EZ], 2.0)
    assert eval_field(z, EZ) == pytest.approx(F2_MAX, rel=1e-14)
    assert eval_field(z, -EZ) == pytest.approx(F2_MIN, rel=1e-14)


def test_uniform_field_is_constant():
    z = InnovationField([2.0, 1.0], [EZ, EX], 0.0)
    vals = z.evaluate(fibonacci_grid(100).nodes)
    assert np.all(vals == 2 / (4 * math.pi))
    assert field_sup(z) == field_inf_bound(z) == 2 / (4 * math.pi)


def test_sup_and_inf_examples():
    z = InnovationField([1.0, 2.0], [EX, EZ], 2.0)
    assert z.weights.tolist() == [2.0, 1.0]
    assert field_sup(z) == pytest.approx(2 * F2_MAX, rel=1e-14)
    assert field_sup(z) == pytest.approx(0.64848, abs=2e-5)
    assert field_inf_bound(InnovationField([2.0], [EZ], 2.0)) == pytest.approx(0.0118778,
                                                                              abs=2e-7)


def test_invalid_fields():
    with pytest.raises(ValueError):
        InnovationField([], np.empty((0, 3)), 1.0)
    with pytest.raises(ValueError):
        InnovationField([-1.0], [EZ], 1.0)
    with pytest.raises(ValueError):
        InnovationSpec(kind="nope")
    with pytest.raises(ValueError):
        InnovationSpec(kind="custom")


@pytest.mark.parametrize("kappa", [0.0, 1.0, 5.0])
def test_sphere_exact_field_bounds(kappa):
    keys = RngStream(1).spawn_keys("t", np.arange(10, dtype=np.uint64))
    pts = fibonacci_grid(500).nodes
    for z in simulate_innovations(kappa, SPHERE, keys):
        assert np.all(np.diff(z.weights) <= 0)
        vals = z.evaluate(pts)
        assert vals.max() <= z.sup() and vals.min() >= z.inf_bound()


def test_top_weight_shortcut_matches_simulation():
    keys = RngStream(2).spawn_keys("t", np.arange(30, dtype=np.uint64))
    fields = simulate_innovations(2.0, SPHERE, keys)
    np.testing.assert_array_equal(top_weights(keys), [z.weights[0] for z in fields])


def test_grid_exact_matches_sphere_exact_on_grid():
    grid = fibonacci_grid(300)
    keys = RngStream(3).spawn_keys("t", np.arange(20, dtype=np.uint64))
    for a, b in zip(simulate_innovations(2.0, grid, keys), simulate_innovations(2.0, SPHERE, keys)):
        np.testing.assert_array_equal(a.evaluate(grid.nodes), b.evaluate(grid.nodes))


def test_grid_exact_warns_off_grid():
    grid = fibonacci_grid(50)
    z = simulate_innovation(1.0, grid, RngStream(4))
    assert z.mode == GRID_EXACT
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        eval_field(z, grid.nodes[3])
    with pytest.warns(LowerBoundWarning):
        eval_field(z, np.array([0.0, 0.6, 0.8]))


def test_event_cap():
    with pytest.raises(ResourceLimitError, match="kappa"):
        simulate_innovation(10.0, SPHERE, RngStream(5), event_cap=10)
    z = simulate_innovation(1.0, fibonacci_grid(64), RngStream(5), event_cap=500, stop=False)
    assert len(z) == 500


def test_successive_draws_differ():
    rng = RngStream(6)
    assert simulate_innovation(1.0, SPHERE, rng).weights[0] != \
        simulate_innovation(1.0, SPHERE, rng).weights[0]


def test_margins_are_standard_frechet():
    vals = simulate_at_points(1.0, np.array([[0.36, 0.48, 0.8]]), 5000, RngStream(7))
    assert ks_frechet(vals[:, 0]).passed


def test_unit_intensity_scales_weights():
    keys = RngStream(8).spawn_keys("t", np.arange(5, dtype=np.uint64))
    exact = top_weights(keys, "exact")
    unit = top_weights(keys, "unit")
    np.testing.assert_allclose(exact, 4 * math.pi * unit, rtol=1e-15)


def test_event_csv_roundtrip(tmp_path):
    z = simulate_innovation(2.0, SPHERE, RngStream(9))
    path = tmp_path / "z.csv"
    write_events_csv(z, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "weight,mu_x,mu_y,mu_z"
    w = [float(line.split(",")[0]) for line in lines[1:]]
    assert all(x > y for x, y in zip(w, w[1:]))
    back = read_events_csv(path, 2.0)
    np.testing.assert_array_equal(back.weights, z.weights)
    np.testing.assert_array_equal(back.centers, z.centers)


def test_custom_innovation_is_bounded():
    gen = RandomBumpInnovation(kappa=2.0)
    f = gen.sample(RngStream(10))
    vals = f.evaluate(fibonacci_grid(500).nodes)
    assert 0 < f.inf_bound() <= vals.min() and vals.max() <= f.sup()


def test_uniform_innovation_stops_at_first_event():
    keys = RngStream(11).spawn_keys("t", np.arange(20, dtype=np.uint64))
    for z in simulate_innovations(0.0, SPHERE, keys):
        assert len(z) == 1
        np.testing.assert_allclose(z.evaluate(EX[None, :]), z.weights[0] / (4 * math.pi),
                                   rtol=1e-15)


def test_stopped_equals_unstopped_everywhere():
    # sphere-exact stopping against a 10^4-event list at random points
    x = uniform_sphere_samples(RngStream(12), 20)
    keys = RngStream(12).spawn_keys("t", np.arange(5, dtype=np.uint64))
    stopped = simulate_innovations(1.0, SPHERE, keys)
    full = simulate_innovations(1.0, SPHERE, keys, event_cap=10_000, stop=False)
    for a, b in zip(stopped, full):
        assert len(b) == 10_000 and len(a) < len(b)
        np.testing.assert_array_equal(a.evaluate(x), b.evaluate(x))
