import itertools
from collections import Counter

import numpy as np
import pytest
from scipy.stats import chisquare

from planarmaps.degrees import DegreeSequence, derive_stats
from planarmaps.forest import (
    BRIDGE,
    LUKASIEWICZ,
    LatticePath,
    MalformedPathError,
    decode_forest,
    degree_bridge_jumps,
    encode_forest,
    first_passage_check,
    height_process,
    lr_counts,
    lr_counts_direct,
    sample_degree_bridge,
    spine_sample,
    vervaat_shift,
)

from conftest import (
    FIG_D,
    FIG_HEIGHTS,
    FIG_JUMPS,
    FIG_PARENTS,
    random_degree_sequence,
    rng_for,
)


# -- bridges ---------------------------------------------------------------


def test_bridge_multiset_and_terminal():
    rng = rng_for("bridge-multiset")
    d = DegreeSequence({2: 1}, 1)
    for _ in range(20):
        b = sample_degree_bridge(d, rng)
        assert sorted(b.jumps.tolist()) == [-1, -1, 1]
        assert b.terminal == -1


def test_bridge_empty_sequence():
    rng = rng_for("bridge-empty")
    b = sample_degree_bridge(DegreeSequence({}, 1), rng)
    assert b.jumps.tolist() == [-1]


@pytest.mark.parametrize(
    "counts,rho,n_orderings",
    [({2: 1}, 1, 3), ({1: 1, 2: 1}, 1, 12)],
)
def test_bridge_ordering_uniform(counts, rho, n_orderings):
    rng = rng_for(f"bridge-uniform-{n_orderings}")
    d = DegreeSequence(counts, rho)
    reps = 10**5
    seen = Counter(
        tuple(sample_degree_bridge(d, rng).jumps.tolist()) for _ in range(reps)
    )
    assert len(seen) == n_orderings
    _, p = chisquare(list(seen.values()))
    assert p > 1e-3


# -- Vervaat ---------------------------------------------------------------


def test_vervaat_single_jump():
    rng = rng_for("vervaat-single")
    out = vervaat_shift(LatticePath(np.array([-1]), BRIDGE), rng)
    assert out.jumps.tolist() == [-1]


def test_vervaat_exhaustive_uniform_over_shapes():
    # all 12 orderings of the multiset {0, +1, -1, -1}, rho = 1: the shift is
    # deterministic and the 3 decoded forest shapes appear 4 times each
    rng = rng_for("vervaat-exhaustive")
    shapes = Counter()
    perms = set(itertools.permutations([0, 1, -1, -1]))
    assert len(perms) == 12
    for perm in perms:
        w = vervaat_shift(LatticePath(np.array(perm), BRIDGE), rng)
        f = decode_forest(w)
        shapes[tuple(f.parent.tolist())] += 1
    assert sorted(shapes.values()) == [4, 4, 4]
    # cardinality check: (rho / upsilon) * upsilon! / prod d(k)! forests
    import math

    d = DegreeSequence({1: 1, 2: 1}, 1)
    st = derive_stats(d)
    n_forests = d.rho * math.factorial(st.upsilon) // (st.upsilon * 2)  # d(0)! = 2!
    assert len(shapes) == n_forests == 3


def test_vervaat_first_passage_postcondition():
    rng = rng_for("vervaat-postcondition")
    for _ in range(50):
        d = random_degree_sequence(rng)
        w = vervaat_shift(sample_degree_bridge(d, rng), rng)
        assert first_passage_check(w) == d.rho


def test_shift_index_uniform_and_independent():
    # i_n is uniform on {1..upsilon} and independent of the shifted path
    rng = rng_for("shift-index")
    d = DegreeSequence({1: 1, 2: 1}, 1)
    joint = Counter()
    reps = 4 * 10**4
    for _ in range(reps):
        b = sample_degree_bridge(d, rng)
        w, i_n = vervaat_shift(b, rng, return_index=True)
        joint[(i_n, tuple(w.jumps.tolist()))] += 1
    idx_counts = Counter(i for i, _ in joint)
    assert sorted(idx_counts) == [1, 2, 3, 4]
    _, p = chisquare([idx_counts[i] for i in sorted(idx_counts)])
    assert p > 1e-3
    shapes = sorted({s for _, s in joint})
    table = np.array([[joint.get((i, s), 0) for s in shapes] for i in range(1, 5)])
    from scipy.stats import chi2_contingency

    _, p, _, _ = chi2_contingency(table)
    assert p > 1e-3


# -- decoding ---------------------------------------------------------------


def test_decode_single_leaf():
    f = decode_forest(LatticePath(np.array([-1]), LUKASIEWICZ))
    assert f.upsilon == 1 and f.rho == 1
    assert f.parent.tolist() == [-1]


def test_decode_worked_example(fig_forest):
    assert fig_forest.parent.tolist() == FIG_PARENTS
    assert fig_forest.rho == 4
    assert encode_forest(fig_forest).jumps.tolist() == FIG_JUMPS
    assert fig_forest.tree_id.tolist() == [0, 1, 2, 2, 2, 2, 2, 2, 2, 2, 3, 3, 3, 3, 3, 3]


def test_encode_decode_identity_random():
    rng = rng_for("encode-decode")
    for _ in range(200):
        d = random_degree_sequence(rng)
        w = vervaat_shift(sample_degree_bridge(d, rng), rng)
        assert encode_forest(decode_forest(w)).jumps.tolist() == w.jumps.tolist()


def test_decode_malformed_paths():
    with pytest.raises(MalformedPathError):
        decode_forest(LatticePath(np.array([-1, 0]), LUKASIEWICZ))  # early passage
    with pytest.raises(MalformedPathError):
        decode_forest(LatticePath(np.array([-2]), LUKASIEWICZ))  # jump below -1
    with pytest.raises(MalformedPathError):
        decode_forest(LatticePath(np.array([1, -1]), LUKASIEWICZ))  # never closes


# -- height process -----------------------------------------------------------


def test_height_single_leaf():
    f = decode_forest(LatticePath(np.array([-1]), LUKASIEWICZ))
    assert height_process(f).tolist() == [0, 1]


def test_height_worked_example(fig_forest):
    assert height_process(fig_forest).tolist() == FIG_HEIGHTS


def test_height_increments_bounded():
    rng = rng_for("height-increments")
    for _ in range(30):
        d = random_degree_sequence(rng)
        f = decode_forest(vervaat_shift(sample_degree_bridge(d, rng), rng))
        assert np.diff(height_process(f)).max() <= 1


# -- branching-off counts -------------------------------------------------------


def test_lr_root_is_zero(fig_forest):
    for r in fig_forest.roots():
        assert lr_counts(fig_forest, int(r))["R"] == 0


def test_lr_formula_matches_direct_oracle():
    rng = rng_for("lr-oracle")
    for _ in range(30):
        d = random_degree_sequence(rng)
        f = decode_forest(vervaat_shift(sample_degree_bridge(d, rng), rng))
        for i in range(f.upsilon):
            assert lr_counts(f, i) == lr_counts_direct(f, i)


def test_lr_worked_example(fig_forest):
    # vertex x_5: W(5) - min W(0..5) = 2 - (-2) = 4
    assert lr_counts(fig_forest, 5)["R"] == 4
    assert lr_counts_direct(fig_forest, 5)["R"] == 4


# -- spine sampling ---------------------------------------------------------------


def test_spine_mean_matches_ratio():
    rng = rng_for("spine-mean")
    d = DegreeSequence({1: 40, 2: 30, 3: 20, 5: 10}, 3)
    st = derive_stats(d)
    xi, chi = spine_sample(d, st.eps, rng)
    assert xi.shape == (st.eps,)
    # without replacement over the whole urn the mean is exact
    assert float(xi.mean() - 1) == pytest.approx(st.sigma2 / st.eps)
    assert np.all((1 <= chi) & (chi <= xi))


def test_spine_first_draw_moments():
    rng = rng_for("spine-first")
    d = DegreeSequence({2: 50, 4: 25}, 1)
    st = derive_stats(d)
    reps = 10**5
    draws = np.array([spine_sample(d, 1, rng)[0][0] for _ in range(reps)])
    mean_target = st.sigma2 / st.eps
    se = draws.std() / np.sqrt(reps)
    assert abs((draws - 1).mean() - mean_target) < 3 * se
    assert (draws - 1).var() <= st.delta * st.sigma2 / st.eps * 1.05


def test_spine_deterministic_case():
    rng = rng_for("spine-deterministic")
    d = DegreeSequence({3: 1}, 1)
    xi, chi = spine_sample(d, 3, rng)
    assert xi.tolist() == [3, 3, 3]
    chis = np.array([spine_sample(d, 1, rng)[1][0] for _ in range(30000)])
    _, p = chisquare(np.bincount(chis, minlength=4)[1:])
    assert p > 1e-3


def test_spine_exhausted_urn():
    with pytest.raises(ValueError):
        spine_sample(DegreeSequence({2: 2}, 1), 5, rng_for("spine-exhausted"))


def test_bridge_jumps_layout():
    d = DegreeSequence({3: 2, 1: 1}, 2)
    j = degree_bridge_jumps(d)
    st = derive_stats(d)
    assert len(j) == st.upsilon
    assert sorted(j.tolist()) == sorted([-1] * st.leaves + [0] + [2, 2])
