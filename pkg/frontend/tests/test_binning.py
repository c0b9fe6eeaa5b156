import numpy as np
import pytest

from map_figures import bin_labels, percentile_bins


def test_outlier_lands_in_top_class():
    values = np.concatenate([np.linspace(0.001, 0.002, 40), [0.9]])
    classes, edges = percentile_bins(values, (50, 75, 85, 90, 95, 97))
    assert classes[-1] == 6  # above the 97th percentile
    assert classes.min() == 0 and len(edges) == 6


def test_uniform_values_collapse_gracefully():
    classes, edges = percentile_bins(np.full(12, 0.3), (50, 75, 85, 90, 95, 97))
    assert np.all(edges == 0.3)
    assert np.all(classes == classes[0])  # single class, no crash


def test_class_counts_match_percentile_mass():
    rng = np.random.default_rng(0)
    values = rng.standard_normal(10_000)
    classes, _ = percentile_bins(values, (50, 75, 85, 90, 95, 97))
    frac_below_median = np.mean(classes == 0)
    assert abs(frac_below_median - 0.5) < 0.02
    assert np.mean(classes == 6) == pytest.approx(0.03, abs=0.005)


def test_monotone_in_values():
    values = np.sort(np.random.default_rng(1).uniform(size=200))
    classes, _ = percentile_bins(values, (50, 75, 85, 90, 95, 97))
    assert np.all(np.diff(classes) >= 0)


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        percentile_bins(np.array([]), (50,))
    with pytest.raises(ValueError):
        percentile_bins(np.array([1.0, np.nan]), (50,))


def test_labels():
    labels = bin_labels(np.array([0.1, 0.2, 0.4]))
    assert labels[0] == "< 0.1"
    assert labels[-1] == "> 0.4"
    assert len(labels) == 4 and "0.1 – 0.2" in labels[1]
