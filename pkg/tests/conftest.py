"""Shared builders for the test suite."""

import numpy as np
import pytest

from msreg import DisparityMap

# one line per acceptance criterion, replayed after the run so the
# verdicts are visible without -s
acceptance_lines = []


def pytest_terminal_summary(terminalreporter):
    if acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines:
            terminalreporter.write_line(line)


def make_layered_map(rng, height=64, width=64, n_layers=None, d_max=16):
    """Piecewise-constant integer disparity: a base plane plus random rects.

    Later rectangles overwrite earlier ones, mimicking nearer objects.
    """
    if n_layers is None:
        n_layers = int(rng.integers(2, 6))
    data = np.full((height, width), float(rng.integers(0, d_max // 2 + 1)))
    for _ in range(n_layers - 1):
        y0 = int(rng.integers(0, height - 8))
        x0 = int(rng.integers(0, width - 8))
        y1 = int(rng.integers(y0 + 4, min(y0 + height // 2, height) + 1))
        x1 = int(rng.integers(x0 + 4, min(x0 + width // 2, width) + 1))
        data[y0:y1, x0:x1] = float(rng.integers(0, d_max + 1))
    return DisparityMap(data=data)


def shift_int(arr, sx, sy, fill=0.0):
    """Translate an array by integer (sx, sy), padding with ``fill``."""
    h, w = arr.shape
    out = np.full_like(arr, fill)
    ys_src = slice(max(-sy, 0), h - max(sy, 0))
    xs_src = slice(max(-sx, 0), w - max(sx, 0))
    ys_dst = slice(max(sy, 0), h + min(sy, 0))
    xs_dst = slice(max(sx, 0), w + min(sx, 0))
    out[ys_dst, xs_dst] = arr[ys_src, xs_src]
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
