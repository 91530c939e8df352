"""Signed-rank test against brute-force enumeration; distance summaries."""

import numpy as np
import pytest

from promptfield.errors import AllZeroDifferences, ConfigError, DegenerateWorld, DimensionMismatch
from promptfield.rng import SplitMix64
from promptfield.stats import (
    mean_pairwise_distance,
    summarize,
    wilcoxon_one_sample,
    wilcoxon_signed_rank,
)

from oracles import mean_pairwise_distance_oracle, wilcoxon_exact_oracle


def test_mean_pairwise_distance_matches_oracle():
    rng = SplitMix64(4)
    pts = rng.uniforms(40).reshape(20, 2) * 100.0
    assert mean_pairwise_distance(pts) == pytest.approx(
        mean_pairwise_distance_oracle(pts.tolist()), rel=1e-12
    )


def test_mean_pairwise_distance_simple_cases():
    assert mean_pairwise_distance(np.array([[0.0, 0.0], [3.0, 4.0]])) == 5.0
    tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    assert mean_pairwise_distance(tri) == pytest.approx((1 + 1 + np.sqrt(2)) / 3)
    with pytest.raises(DegenerateWorld):
        mean_pairwise_distance(np.array([[1.0, 1.0]]))


def test_summarize():
    s = summarize([1.0, 2.0, 3.0, 4.0])
    assert s.mean == 2.5
    assert s.std == pytest.approx(np.std([1, 2, 3, 4], ddof=1))
    assert s.n == 4
    assert summarize([7.0]).std == 0.0
    with pytest.raises(ValueError):
        summarize([])


def test_wilcoxon_frozen_example():
    # three positive pairs: W = 6, one-sided p = 1/8
    res = wilcoxon_signed_rank([1.0, 2.0, 3.0], [0.0, 0.0, 0.0], "greater")
    assert res.statistic == 6.0
    assert res.p_value == 0.125
    assert res.method == "exact"
    assert res.n_effective == 3


def test_wilcoxon_one_sample_equivalence():
    x = [0.6, 0.7, 0.4, 0.9]
    a = wilcoxon_one_sample(x, 0.5, "greater")
    b = wilcoxon_signed_rank(x, [0.5] * 4, "greater")
    assert (a.statistic, a.p_value) == (b.statistic, b.p_value)


@pytest.mark.parametrize("alternative", ["two_sided", "greater", "less"])
def test_wilcoxon_matches_enumeration_with_ties(alternative):
    rng = SplitMix64({"two_sided": 1, "greater": 2, "less": 3}[alternative])
    for _ in range(40):
        n = 2 + rng.next_below(8)
        # small integers force plenty of tied magnitudes
        x = [float(rng.next_below(5)) for _ in range(n)]
        y = [float(rng.next_below(5)) for _ in range(n)]
        diffs = [a - b for a, b in zip(x, y) if a != b]
        if not diffs:
            continue
        w_want, p_want = wilcoxon_exact_oracle(diffs, alternative)
        res = wilcoxon_signed_rank(x, y, alternative)
        assert res.statistic == w_want
        assert res.p_value == pytest.approx(p_want, rel=1e-12)


def test_wilcoxon_drops_zero_differences():
    res = wilcoxon_signed_rank([1.0, 5.0, 2.0], [1.0, 4.0, 3.0], "two_sided")
    assert res.n_effective == 2
    with pytest.raises(AllZeroDifferences):
        wilcoxon_signed_rank([1.0, 2.0], [1.0, 2.0])


def test_wilcoxon_tied_average_ranks():
    # |d| = [1, 1, 2]: tied pair gets rank 1.5 each; positives are d1, d3
    res = wilcoxon_signed_rank([1.0, -1.0, 2.0], [0.0, 0.0, 0.0], "greater")
    assert res.statistic == 4.5
    w_want, p_want = wilcoxon_exact_oracle([1.0, -1.0, 2.0], "greater")
    assert res.statistic == w_want
    assert res.p_value == pytest.approx(p_want, rel=1e-12)


def test_wilcoxon_mirror_symmetry():
    rng = SplitMix64(77)
    x = rng.uniforms(12).tolist()
    y = rng.uniforms(12).tolist()
    assert (
        wilcoxon_signed_rank(x, y, "less").p_value
        == wilcoxon_signed_rank(y, x, "greater").p_value
    )


def test_wilcoxon_normal_approximation_tracks_exact():
    rng = SplitMix64(31)
    x = rng.uniforms(40).tolist()
    y = rng.uniforms(40).tolist()
    exact = wilcoxon_signed_rank(x, y, "greater", method="exact")
    approx = wilcoxon_signed_rank(x, y, "greater", method="normal")
    assert exact.method == "exact"
    assert approx.method == "normal_approx"
    assert approx.p_value == pytest.approx(exact.p_value, abs=0.01)


def test_wilcoxon_auto_method_switch():
    x = list(range(1, 26))
    assert wilcoxon_signed_rank([float(v) for v in x], [0.0] * 25, "greater").method == "exact"
    x = list(range(1, 27))
    res = wilcoxon_signed_rank([float(v) for v in x], [0.0] * 26, "greater")
    assert res.method == "normal_approx"


def test_wilcoxon_exact_limit():
    n = 70
    x = [float(i + 1) for i in range(n)]
    with pytest.raises(ConfigError):
        wilcoxon_signed_rank(x, [0.0] * n, "greater", method="exact")


def test_wilcoxon_input_validation():
    with pytest.raises(DimensionMismatch):
        wilcoxon_signed_rank([1.0], [1.0, 2.0])
    with pytest.raises(DimensionMismatch):
        wilcoxon_signed_rank([], [])
    with pytest.raises(ConfigError):
        wilcoxon_signed_rank([1.0], [0.0], alternative="sideways")
    with pytest.raises(ConfigError):
        wilcoxon_signed_rank([1.0], [0.0], method="guess")
