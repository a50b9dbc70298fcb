import numpy as np
import pytest

from planarmaps.degrees import DegreeSequence
from planarmaps.forest import LUKASIEWICZ, LatticePath, decode_forest
from planarmaps.labels import LabelledForest

# The worked 16-vertex example: a planted forest with rho = 4 trees and
# out-degree counts (1, 2, 1, 1), its labels, and its known encodings.
FIG_JUMPS = [-1, -1, 1, 0, 3, -1, -1, -1, -1, -1, 1, 2, -1, -1, -1, -1]
FIG_LABELS = [-1, -2, 1, 0, 0, -1, -2, -1, 0, 1, 0, -1, -2, 0, -1, 0]
FIG_HEIGHTS = [0, 1, 1, 1, 2, 3, 4, 4, 4, 4, 2, 1, 2, 3, 3, 3, 2]
FIG_PARENTS = [-1, -1, -1, 2, 3, 4, 4, 4, 4, 2, -1, 10, 11, 11, 11, 10]
FIG_D = DegreeSequence({1: 1, 2: 2, 3: 1, 4: 1}, 4)


@pytest.fixture
def fig_forest():
    return decode_forest(LatticePath(np.array(FIG_JUMPS), LUKASIEWICZ))


@pytest.fixture
def fig_labelled(fig_forest):
    lab = np.array(FIG_LABELS, dtype=np.int64)
    b = np.zeros(fig_forest.rho + 1, dtype=np.int64)
    b[1:] = lab[fig_forest.roots()]
    return LabelledForest(forest=fig_forest, label=lab, b=b)


def rng_for(name: str) -> np.random.Generator:
    seed = int.from_bytes(name.encode(), "little") % (1 << 63)
    return np.random.default_rng(seed)


def random_degree_sequence(rng, max_k=6, max_count=5, max_rho=5) -> DegreeSequence:
    counts = {}
    for k in range(1, max_k):
        c = int(rng.integers(0, max_count))
        if c:
            counts[k] = c
    return DegreeSequence(counts, int(rng.integers(1, max_rho)))


def random_labelled_forest(rng, d: DegreeSequence | None = None):
    from planarmaps.forest import sample_degree_bridge, vervaat_shift
    from planarmaps.labels import decorate

    if d is None:
        d = random_degree_sequence(rng)
    f = decode_forest(vervaat_shift(sample_degree_bridge(d, rng), rng))
    return d, decorate(f, rng)
