import json

import numpy as np
import pytest

from fsot.classes import (
    BoxFunction,
    Class,
    ClassConfig,
    PiecewiseLinearFunction,
    StaircaseFunction,
    filter_points,
    load_config,
    parse_preset,
    resolve_config,
    sample_threshold,
    select_class,
)
from fsot.core import Boundary, Domain, ExtendedPointSet, midpoint_class_coords
from fsot.errors import EmptySelectionError, InvalidArgumentError
from fsot.targets import uniform_density

FIG_STAIRCASE = StaircaseFunction(((0.0, 0.5, 1.0), (0.5, 1.0, 1.0 / 3.0)))


def midpoint_set(n):
    pts = np.random.default_rng(0).random((n, 2))
    return ExtendedPointSet(Domain(2, Boundary.TOROIDAL), pts, midpoint_class_coords(n))


# --- eval -------------------------------------------------------------------


def test_staircase_eval_levels():
    assert FIG_STAIRCASE(0.25) == pytest.approx(1.0)
    assert FIG_STAIRCASE(0.75) == pytest.approx(1.0 / 3.0)


def test_ramp_eval_midpoint():
    ramp = PiecewiseLinearFunction(((0.0, 0.0), (1.0, 1.0)))
    assert ramp(0.5) == pytest.approx(0.5)


def test_ramp_eval_exact_at_knots():
    knots = ((0.0, 0.2), (0.3, 0.9), (0.7, 0.4), (1.0, 1.0))
    ramp = PiecewiseLinearFunction(knots)
    for c, w in knots:
        assert ramp(c) == w


def test_eval_rejects_out_of_range():
    with pytest.raises(InvalidArgumentError):
        FIG_STAIRCASE(1.5)
    with pytest.raises(InvalidArgumentError):
        FIG_STAIRCASE(-0.1)


# --- filter_points ----------------------------------------------------------


def test_filter_staircase_third():
    pset = midpoint_set(8)
    idx = filter_points(pset, FIG_STAIRCASE, 1.0 / 3.0)
    assert idx.tolist() == [0, 1, 2, 3]


def test_filter_zero_selects_support():
    pset = midpoint_set(8)
    idx = filter_points(pset, FIG_STAIRCASE, 0.0)
    assert idx.tolist() == list(range(8))


def test_filter_box_membership():
    pset = midpoint_set(4)
    idx = filter_points(pset, BoxFunction(0.25, 0.75), 0.0)
    assert idx.tolist() == [1, 2]


def test_filter_empty_raises():
    pset = midpoint_set(8)
    with pytest.raises(EmptySelectionError):
        filter_points(pset, FIG_STAIRCASE, 1.0)


def test_filter_monotone_in_threshold():
    pset = midpoint_set(32)
    ramp = PiecewiseLinearFunction(((0.0, 1.0), (1.0, 0.0)))
    previous = None
    for z in np.linspace(0.0, 0.9, 10):
        sel = set(filter_points(pset, ramp, float(z)).tolist())
        if previous is not None:
            assert sel.issubset(previous)
        previous = sel


# --- select_class / sample_threshold ----------------------------------------


def test_select_single_class_always_zero():
    config = ClassConfig([Class(BoxFunction(), uniform_density(2), 1.0)])
    rng = np.random.default_rng(0)
    assert all(select_class(config, rng) == 0 for _ in range(32))


@pytest.mark.parametrize("weights,expected", [((0.5, 0.5), 0.5), ((0.8, 0.2), 0.8)])
def test_select_class_frequencies(weights, expected):
    u = uniform_density(2)
    config = ClassConfig([Class(BoxFunction(), u, w) for w in weights])
    rng = np.random.default_rng(42)
    draws = 100_000
    hits = sum(select_class(config, rng) == 0 for _ in range(draws))
    sigma = np.sqrt(expected * (1 - expected) / draws)
    assert abs(hits / draws - expected) < 3 * sigma


def test_sample_threshold_box_uniform():
    rng = np.random.default_rng(1)
    zs = [sample_threshold(BoxFunction(), rng) for _ in range(1000)]
    assert all(0.0 <= z < 1.0 for z in zs)


def test_sample_threshold_staircase_level_weights():
    # levels 1/3 and 1: P(select all) = 1/3, P(top step only) = 2/3
    rng = np.random.default_rng(2)
    draws = 100_000
    zs = np.array([sample_threshold(FIG_STAIRCASE, rng) for _ in range(draws)])
    frac_all = np.mean(zs < 1.0 / 3.0)
    sigma = np.sqrt((1 / 3) * (2 / 3) / draws)
    assert abs(frac_all - 1.0 / 3.0) < 3 * sigma


def test_sample_threshold_ramp_mean_selected_fraction():
    # w(c) = c with z uniform: mean selected fraction is 0.5
    ramp = PiecewiseLinearFunction(((0.0, 0.0), (1.0, 1.0)))
    rng = np.random.default_rng(3)
    draws = 100_000
    zs = np.array([sample_threshold(ramp, rng) for _ in range(draws)])
    fractions = 1.0 - zs  # measure of {c : c > z}
    sigma = (1.0 / np.sqrt(12.0)) / np.sqrt(draws)
    assert abs(fractions.mean() - 0.5) < 3 * sigma


def test_staircase_subset_distribution_matches_level_weights():
    # three-level staircase: selected subset sizes follow the level gaps
    func = StaircaseFunction(((0.0, 0.25, 1.0), (0.25, 0.5, 0.6), (0.5, 1.0, 0.2)))
    pset = midpoint_set(16)
    rng = np.random.default_rng(4)
    draws = 50_000
    counts = {16: 0, 8: 0, 4: 0}
    for _ in range(draws):
        z = sample_threshold(func, rng)
        counts[filter_points(pset, func, z).size] += 1
    for size, lam in ((16, 0.2), (8, 0.4), (4, 0.4)):
        sigma = np.sqrt(lam * (1 - lam) / draws)
        assert abs(counts[size] / draws - lam) < 3.5 * sigma


# --- config validation ------------------------------------------------------


def test_config_normalizes_weights():
    u = uniform_density(2)
    config = ClassConfig([Class(BoxFunction(), u, 2.0), Class(BoxFunction(), u, 6.0)])
    assert config.weights() == pytest.approx([0.25, 0.75])


def test_config_rescales_submaximal_functions():
    u = uniform_density(2)
    small = StaircaseFunction(((0.0, 1.0, 0.5),))
    with pytest.warns(UserWarning, match="rescaling"):
        config = ClassConfig([Class(small, u, 1.0)])
    assert config.classes[0].func.max_value == pytest.approx(1.0)


def test_config_rejects_empty():
    with pytest.raises(InvalidArgumentError):
        ClassConfig([])


# --- presets and config files -----------------------------------------------


def test_three_class_preset_structure():
    config = parse_preset("three-class", dim=2)
    assert config.n_classes == 2
    f0, f1 = (cl.func for cl in config.classes)
    assert f0(0.25) == pytest.approx(1.0)
    assert f0(0.75) == pytest.approx(1.0 / 3.0)
    assert f1(0.25) == pytest.approx(1.0 / 3.0)
    assert f1(0.75) == pytest.approx(1.0)


def test_seven_class_preset_structure():
    config = parse_preset("seven-class-rgb", dim=2)
    assert config.n_classes == 7
    union = config.classes[-1].func
    assert union(0.1) == union(0.5) == union(0.9) == 1.0


def test_progressive_preset_levels():
    config = parse_preset("progressive(3)", dim=2, n=16)
    func = config.classes[0].func
    pset = midpoint_set(16)
    sizes = {filter_points(pset, func, z).size for z in (0.0, 0.4, 0.8)}
    assert sizes == {16, 8, 4}


def test_continuous_split_preset():
    config = parse_preset("continuous-split", dim=2)
    assert config.n_classes == 2
    down, up = (cl.func for cl in config.classes)
    assert down(0.0) == pytest.approx(1.0)
    assert up(1.0) == pytest.approx(1.0)


def test_cmyk_preset_needs_image():
    with pytest.raises(InvalidArgumentError, match="stipple"):
        parse_preset("cmyk15", dim=2)


def test_unknown_preset():
    with pytest.raises(InvalidArgumentError, match="unknown preset"):
        parse_preset("no-such-preset", dim=2)


def test_load_config_json(tmp_path):
    doc = {
        "classes": [
            {"weight": 1.0, "target": "uniform", "func": {"type": "box", "lo": 0.0, "hi": 0.5}},
            {
                "weight": 3.0,
                "target": "uniform",
                "func": {"type": "staircase", "pieces": [[0.0, 0.5, 1.0], [0.5, 1.0, 0.25]]},
            },
            {"weight": 1.0, "target": "uniform", "func": {"type": "ramp", "knots": [[0, 0], [1, 1]]}},
            {"weight": 1.0, "target": "uniform", "func": {"type": "trapezoid", "lo": 0.2, "hi": 0.6}},
        ]
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    config = load_config(path, dim=2)
    assert config.n_classes == 4
    assert config.weights() == pytest.approx([1 / 6, 3 / 6, 1 / 6, 1 / 6])


def test_load_config_image_target_invert(tmp_path):
    from fsot.targets import save_pgm, sample_target

    img = tmp_path / "dens.pgm"
    save_pgm(img, np.array([[0.0, 1.0]]))  # bright right half
    doc = {
        "classes": [
            {"weight": 1, "target": str(img), "func": {"type": "box"}},
            {"weight": 1, "target": {"image": str(img), "invert": True}, "func": {"type": "box"}},
        ]
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    config = load_config(path, dim=2)
    rng = np.random.default_rng(0)
    plain = sample_target(config.classes[0].target, 500, rng)
    inverted = sample_target(config.classes[1].target, 500, rng)
    assert np.all(plain[:, 0] >= 0.5)  # weight follows pixel value
    assert np.all(inverted[:, 0] < 0.5)  # inverted: dark side becomes heavy


def test_resolve_config_accepts_preset_or_path(tmp_path):
    assert resolve_config("three-class", 2).n_classes == 2
    doc = {"classes": [{"weight": 1, "target": "uniform", "func": {"type": "box"}}]}
    path = tmp_path / "one.json"
    path.write_text(json.dumps(doc))
    assert resolve_config(str(path), 2).n_classes == 1
