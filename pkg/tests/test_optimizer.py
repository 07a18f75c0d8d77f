import numpy as np
import pytest

from fsot.analysis import low_freq_power, power_spectrum
from fsot.classes import BoxFunction, Class, ClassConfig, StaircaseFunction
from fsot.core import Boundary, Domain, ExtendedPointSet, new_random_set
from fsot.errors import ConfigDegenerateError, InvalidArgumentError
from fsot.optimizer import OptimizerConfig, default_iterations, estimate_loss, run
from fsot.targets import empirical_density, uniform_density


def single_class_config(dim=2):
    return ClassConfig([Class(BoxFunction(0.0, 1.0), uniform_density(dim), 1.0)])


def test_single_point_converges_to_center_1d():
    domain = Domain(1, Boundary.BOUNDED)
    pset = new_random_set(domain, 1, seed=9)
    opt = OptimizerConfig(iterations=100, projections_per_iteration=64, oversample=8, seed=9)
    run(pset, single_class_config(1), opt)
    assert abs(pset.points[0, 0] - 0.5) < 0.01


def test_run_drives_loss_to_the_attainable_floor():
    # The sliced objective has a positive floor for any point set (a jittered
    # grid serves as the floor oracle); the optimizer must reach it.
    n = 256
    domain = Domain(2, Boundary.TOROIDAL)
    config = single_class_config()

    pset = new_random_set(domain, n, seed=2)
    initial = estimate_loss(pset, config, 256, np.random.default_rng(0))
    run(pset, config, OptimizerConfig(iterations=256, projections_per_iteration=32, seed=2))
    final = estimate_loss(pset, config, 256, np.random.default_rng(0))

    g = int(np.sqrt(n))
    ix, iy = np.meshgrid(np.arange(g), np.arange(g))
    jitter = np.random.default_rng(3).random((g, g, 2))
    grid = np.stack([(ix + jitter[..., 0]) / g, (iy + jitter[..., 1]) / g], -1).reshape(-1, 2)
    floor = estimate_loss(ExtendedPointSet(domain, grid), config, 256, np.random.default_rng(0))

    assert final <= 0.35 * initial
    assert final <= 1.15 * floor


def test_fixed_dimension_mask_is_honored():
    domain = Domain(2, Boundary.BOUNDED)
    pset = new_random_set(domain, 64, seed=3)
    frozen = pset.points[:, 0].copy()
    moving = pset.points[:, 1].copy()
    opt = OptimizerConfig(iterations=20, projections_per_iteration=8, seed=3, fixed_dims=(0,))
    run(pset, single_class_config(), opt)
    assert np.array_equal(pset.points[:, 0], frozen)
    assert not np.array_equal(pset.points[:, 1], moving)


def test_class_coords_and_order_bit_identical_after_run():
    domain = Domain(2, Boundary.TOROIDAL)
    pset = new_random_set(domain, 64, seed=4)
    coords_before = pset.class_coords.copy()
    run(pset, single_class_config(), OptimizerConfig(iterations=10, seed=4))
    assert np.array_equal(pset.class_coords, coords_before)


def test_run_depends_only_on_class_coord_and_position():
    # permuting the point order (class coords attached) permutes the output
    domain = Domain(2, Boundary.TOROIDAL)
    base = new_random_set(domain, 32, seed=5)
    perm = np.random.default_rng(99).permutation(32)
    permuted = ExtendedPointSet(domain, base.points[perm].copy(), base.class_coords[perm].copy())

    config = ClassConfig(
        [
            Class(StaircaseFunction(((0.0, 0.5, 1.0), (0.5, 1.0, 0.5))), uniform_density(2), 1.0),
            Class(BoxFunction(0.25, 1.0), uniform_density(2), 1.0),
        ]
    )
    opt = OptimizerConfig(iterations=1, projections_per_iteration=16, seed=5)
    run(base, config, opt)
    run(permuted, config, opt)
    assert np.array_equal(permuted.points, base.points[perm])


def test_run_is_deterministic():
    domain = Domain(2, Boundary.TOROIDAL)
    a = new_random_set(domain, 64, seed=6)
    b = new_random_set(domain, 64, seed=6)
    opt = OptimizerConfig(iterations=12, projections_per_iteration=8, seed=6)
    run(a, single_class_config(), opt)
    run(b, single_class_config(), opt)
    assert np.array_equal(a.points, b.points)


def test_loss_trace_trends_down():
    domain = Domain(2, Boundary.TOROIDAL)
    pset = new_random_set(domain, 256, seed=7)
    report = run(pset, single_class_config(), OptimizerConfig(iterations=200, seed=7))
    assert report.loss_trace.size == 200
    head = np.median(report.loss_trace[:20])
    tail = np.median(report.loss_trace[-20:])
    assert tail < head


def test_degenerate_config_raises():
    # support far from every class coordinate: every threshold draw is empty
    domain = Domain(2, Boundary.BOUNDED)
    pset = new_random_set(domain, 4, seed=8)  # class coords 0.125..0.875
    config = ClassConfig([Class(BoxFunction(0.9, 0.95), uniform_density(2), 1.0)])
    with pytest.raises(ConfigDegenerateError):
        run(pset, config, OptimizerConfig(iterations=4, seed=8))


def test_dimension_mismatch_rejected():
    domain = Domain(2, Boundary.BOUNDED)
    pset = new_random_set(domain, 8, seed=0)
    config = ClassConfig([Class(BoxFunction(), uniform_density(3), 1.0)])
    with pytest.raises(InvalidArgumentError):
        run(pset, config, OptimizerConfig(iterations=1))


def test_toroidal_translation_invariance_of_spectrum():
    # optimizing a pre-translated set yields a statistically matching profile
    domain = Domain(2, Boundary.TOROIDAL)
    shift = np.array([0.37, 0.61])
    lfp_plain, lfp_shifted = [], []
    for seed in range(3):
        pset = new_random_set(domain, 256, seed=seed)
        shifted = ExtendedPointSet(domain, (pset.points + shift) % 1.0, pset.class_coords.copy())
        opt = OptimizerConfig(iterations=256, projections_per_iteration=32, seed=seed)
        run(pset, single_class_config(), opt)
        run(shifted, single_class_config(), opt)
        lfp_plain.append(low_freq_power(power_spectrum(pset.points, 64), 0.5))
        lfp_shifted.append(low_freq_power(power_spectrum(shifted.points, 64), 0.5))
    assert abs(np.mean(lfp_plain) - np.mean(lfp_shifted)) < 0.1


# --- estimate_loss ----------------------------------------------------------


def test_estimate_loss_self_probe_is_zero():
    domain = Domain(2, Boundary.TOROIDAL)
    pset = new_random_set(domain, 32, seed=10)
    config = ClassConfig([Class(BoxFunction(), empirical_density(pset.points), 1.0)])
    loss = estimate_loss(pset, config, 16, np.random.default_rng(0))
    assert loss == 0.0


def test_estimate_loss_optimized_below_random_paired():
    domain = Domain(2, Boundary.TOROIDAL)
    random_set = new_random_set(domain, 128, seed=11)
    optimized = new_random_set(domain, 128, seed=11)
    config = single_class_config()
    run(optimized, config, OptimizerConfig(iterations=200, seed=11))
    for probe in range(10):
        loss_rand = estimate_loss(random_set, config, 64, np.random.default_rng(probe))
        loss_opt = estimate_loss(optimized, config, 64, np.random.default_rng(probe))
        assert loss_opt < loss_rand


def test_estimate_loss_variance_halves_with_probe_count():
    domain = Domain(2, Boundary.TOROIDAL)
    pset = new_random_set(domain, 32, seed=12)
    config = single_class_config()
    reps = 300
    small = [estimate_loss(pset, config, 8, np.random.default_rng(1000 + r)) for r in range(reps)]
    large = [estimate_loss(pset, config, 16, np.random.default_rng(5000 + r)) for r in range(reps)]
    ratio = np.var(large) / np.var(small)
    assert 0.3 < ratio < 0.7


def test_estimate_loss_validates_probe_count():
    domain = Domain(2, Boundary.TOROIDAL)
    pset = new_random_set(domain, 8, seed=0)
    with pytest.raises(InvalidArgumentError):
        estimate_loss(pset, single_class_config(), 0, np.random.default_rng(0))


# --- defaults ----------------------------------------------------------------


def test_default_iterations_by_class_tier():
    assert default_iterations(500, 1) == 1000
    assert default_iterations(4096, 1) == 4096
    assert default_iterations(1000, 3) == 1250
    assert default_iterations(1000, 7) == 1562


def test_optimizer_config_validation():
    with pytest.raises(InvalidArgumentError):
        OptimizerConfig(iterations=0)
    with pytest.raises(InvalidArgumentError):
        OptimizerConfig(projections_per_iteration=0)
    with pytest.raises(InvalidArgumentError):
        OptimizerConfig(learning_rate=-1.0)
    with pytest.raises(InvalidArgumentError):
        OptimizerConfig(decay="exponential")
