import numpy as np
import pytest

from ionduet.seeding import (
    STREAM_CALIBRATION,
    STREAM_DETECTION,
    STREAM_TRIALS,
    point_seed,
    rng_for,
)


def test_streams_are_distinct_constants():
    assert len({STREAM_TRIALS, STREAM_DETECTION, STREAM_CALIBRATION}) == 3


def test_rng_for_is_deterministic_and_tag_sensitive():
    a = rng_for(7, STREAM_TRIALS).random(4)
    b = rng_for(7, STREAM_TRIALS).random(4)
    c = rng_for(7, STREAM_DETECTION).random(4)
    d = rng_for(8, STREAM_TRIALS).random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_rng_for_rejects_bad_seeds():
    with pytest.raises(ValueError):
        rng_for(-1, 0)
    with pytest.raises(TypeError):
        rng_for("seed", 0)


def test_point_seed_spreads_indices():
    base = 123
    seeds = {point_seed(base, i) for i in range(200)}
    assert len(seeds) == 200
    assert point_seed(base, 5) == point_seed(base, 5)
    assert point_seed(base + 1, 5) != point_seed(base, 5)
