import numpy as np
import pytest


def mask(art: str) -> np.ndarray:
    """Build a boolean mask from ASCII art ('#' = on, '.' = off)."""
    rows = [r.strip() for r in art.strip().splitlines()]
    return np.array([[c == "#" for c in row] for row in rows], dtype=bool)


def labels(art: str) -> np.ndarray:
    """Build a label map from ASCII art of digits ('.' = background)."""
    rows = [r.strip() for r in art.strip().splitlines()]
    return np.array(
        [[0 if c == "." else int(c) for c in row] for row in rows], dtype=np.int32
    )


def random_mask(rng: np.random.Generator, h: int, w: int, p: float = 0.4) -> np.ndarray:
    return rng.random((h, w)) < p


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(1234))
