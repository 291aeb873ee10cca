import numpy as np
import pytest

from obsdet import BoundingBox, Detection


def random_box(rng, field=100.0, min_side=2.0, max_side=40.0):
    w = rng.uniform(min_side, max_side)
    h = rng.uniform(min_side, max_side)
    x1 = rng.uniform(0.0, field - w)
    y1 = rng.uniform(0.0, field - h)
    return BoundingBox(x1, y1, x1 + w, y1 + h)


def exact_simplex(rng, length):
    """Random simplex vector whose float64 sum is exactly 1.0.

    Lets tests assert bitwise identities (singleton fusion) without
    renormalization moving the values.
    """
    for _ in range(100):
        w = rng.random(length) + 1e-3
        w = w / w.sum()
        for _ in range(10):
            err = 1.0 - w.sum()
            if err == 0.0:
                return w
            w[int(np.argmax(w))] += err
    raise AssertionError("could not construct an exactly-normalized vector")


def random_detection(rng, k=5, field=100.0, pass_index=0, **box_kwargs):
    return Detection(
        scores=exact_simplex(rng, k + 1),
        box=random_box(rng, field=field, **box_kwargs),
        pass_index=pass_index,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
