import numpy as np
import pytest
from scipy.ndimage import gaussian_filter


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def smooth_dark_image(rng, h=48, w=64, sigma=3.0, scale=0.3):
    """Smooth random scene, darkened, with mild per-channel tint and grain."""
    base = gaussian_filter(rng.random((h, w)), sigma)
    base = (base - base.min()) / (base.max() - base.min() + 1e-12)
    tint = 0.6 + 0.4 * rng.random(3)
    img = base[..., None] * scale * tint + 0.01 * rng.random((h, w, 3))
    return np.clip(img, 0.0, 1.0)


def half_dark_image(h=32, w=32, dark=0.1, bright=0.9):
    img = np.full((h, w, 3), bright)
    img[:, : w // 2] = dark
    return img


_ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for the acceptance summary, then assert."""

    def check(number, title, ok, detail=""):
        _ACCEPTANCE.append((number, title, bool(ok), detail))
        assert ok, f"criterion {number} ({title}) failed: {detail}"

    return check


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(_ACCEPTANCE, key=lambda r: (int(r[0].rstrip('ab')), r[0])):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number:>4} {title}: {detail}")
