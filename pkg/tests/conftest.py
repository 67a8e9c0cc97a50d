import math

import numpy as np
import pytest

from hotspots.geometry import Polygon
from hotspots.mesh import triangulate
from hotspots.eigensolver import solve_second

CORPUS_SEED = 20260808

_solve_cache = {}


def solve_polygon(P: Polygon, h: float, **kw):
    """Session-wide cache of eigensolves keyed by geometry and mesh size."""
    key = (np.round(P.vertices, 12).tobytes(), round(h, 12))
    if key not in _solve_cache:
        mesh = triangulate(P, h, **kw)
        _solve_cache[key] = solve_second(mesh)
    return _solve_cache[key]


@pytest.fixture(scope="session")
def solve_cached():
    return solve_polygon


@pytest.fixture(scope="session")
def corpus_rng():
    return np.random.default_rng(CORPUS_SEED)


@pytest.fixture(scope="session")
def polygon_corpus():
    """20 random simply connected polygons, 5-7 sides, no right angles."""
    from hotspots.corpus import random_simple_polygon
    rng = np.random.default_rng(CORPUS_SEED)
    out = []
    for k in range(20):
        n = int(rng.integers(5, 8))
        out.append(random_simple_polygon(rng, n))
    return out


@pytest.fixture(scope="session")
def corpus_solutions(polygon_corpus):
    """Solved corpus, reused by the index-formula and simple-arc criteria."""
    return [solve_polygon(P, P.diameter / 26) for P in polygon_corpus]
