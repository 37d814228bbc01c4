from __future__ import annotations

import numpy as np
import pytest

from tuplewise_clt.rng import MAX_SEED, random_signs, stream


def test_same_key_same_stream():
    a = stream(3, "moment", 6, (1, 2), 0.5).random(8)
    b = stream(3, "moment", 6, (1, 2), 0.5).random(8)
    assert np.array_equal(a, b)


def test_different_paths_differ():
    draws = {tuple(stream(3, *path).integers(0, 2**62, 4)) for path in [(), (0,), (1,), ("a",), ("a", 0)]}
    assert len(draws) == 5


def test_seed_range():
    stream(MAX_SEED)
    with pytest.raises(ValueError):
        stream(-1)
    with pytest.raises(ValueError):
        stream(MAX_SEED + 1)
    with pytest.raises(ValueError):
        stream(0, -3)
    with pytest.raises(ValueError):
        stream(0, True)


def test_random_signs_are_balanced():
    s = random_signs(stream(0), 100_000)
    assert set(np.unique(s)) == {-1.0, 1.0}
    assert abs(s.mean()) < 0.015
