import numpy as np
import pytest

from snapcs import RngSpec


@pytest.fixture
def gen():
    return RngSpec(1234, 77).generator()


def dense_forward(masks, x):
    """Oracle: dense H times the frame-stacked signal."""
    x = np.asarray(x)
    v = np.concatenate([x[:, :, i].ravel() for i in range(x.shape[2])])
    return (masks.to_dense() @ v).reshape(x.shape[:2])
