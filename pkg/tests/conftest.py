import numpy as np
import pytest


def disk_mask(size, radius, centre=None):
    cy = cx = (size - 1) / 2.0 if centre is None else None
    if centre is not None:
        cx, cy = centre
    yy, xx = np.mgrid[0:size, 0:size]
    return (xx - cx) ** 2 + (yy - cy) ** 2 <= radius * radius


def rect_mask(size, y0, y1, x0, x1):
    m = np.zeros((size, size), dtype=bool)
    m[y0:y1, x0:x1] = True
    return m


def circle_polygon(radius, n=1000, centre=(0.0, 0.0)):
    theta = np.linspace(0, 2 * np.pi, n, endpoint=False)
    return np.column_stack([centre[0] + radius * np.cos(theta),
                            centre[1] + radius * np.sin(theta)])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
