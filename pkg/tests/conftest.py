import os

import numpy as np
import pytest

from ocal.context import ENV_PREFIX
from ocal.data import make_blobs_with_outliers
from ocal.signatures import BlobsSpec, DatasetRef


@pytest.fixture(autouse=True)
def _clear_ocal_env(monkeypatch):
    for key in list(os.environ):
        if key.startswith(ENV_PREFIX):
            monkeypatch.delenv(key)


@pytest.fixture
def blobs():
    return make_blobs_with_outliers(60, 4, seed=3)


@pytest.fixture
def blobs_ref():
    return DatasetRef(name="blobs", synthetic=BlobsSpec(n_inliers=60, n_outliers=4, seed=3))


@pytest.fixture
def points():
    return np.random.default_rng(7).standard_normal((15, 2))
