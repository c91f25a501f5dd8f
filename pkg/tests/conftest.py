import numpy as np
import pytest

from flickerband import ImagePlanes, kernels

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=["numpy", "numba"])
def backend(request):
    return kernels.get_backend(request.param)


def _natural_sources():
    data = pytest.importorskip("skimage.data")
    return [
        ("astronaut", data.astronaut(), (40, 120)),
        ("astronaut_b", data.astronaut(), (250, 200)),
        ("chelsea", data.chelsea(), (20, 150)),
        ("coffee", data.coffee(), (100, 200)),
        ("ihc", data.immunohistochemistry(), (100, 100)),
        ("motorcycle_l", data.stereo_motorcycle()[0], (120, 240)),
        ("motorcycle_r", data.stereo_motorcycle()[1], (200, 400)),
        ("rocket", data.rocket(), (80, 300)),
        ("retina", data.retina(), (500, 500)),
        ("hubble", data.hubble_deep_field(), (300, 400)),
    ]


def natural_images(size=256):
    """Ten 256x256 crops of photographs bundled with scikit-image."""
    out = []
    for name, arr, (top, left) in _natural_sources():
        crop = arr[top:top + size, left:left + size, :3].astype(np.float64) / 255.0
        assert crop.shape == (size, size, 3), name
        out.append((name, ImagePlanes.from_hwc(crop)))
    return out


@pytest.fixture(scope="session")
def natural():
    return natural_images()
