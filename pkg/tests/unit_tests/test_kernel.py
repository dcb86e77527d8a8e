import math

import numpy as np
import pytest

from ocal.errors import OcalError, UnsupportedHeuristicError
from ocal.kernel import (
    KernelCache,
    KernelConfig,
    cost_tax,
    gamma_scott,
    gram_matrix,
    rbf,
    resolve_gamma,
)


def test_rbf_values() -> None:
    cfg = KernelConfig(gamma=0.5)
    assert rbf(np.array([1.0, 2.0]), np.array([1.0, 2.0]), cfg) == 1.0
    assert rbf(np.array([0.0, 0.0]), np.array([1.0, 1.0]), cfg) == pytest.approx(math.exp(-1.0))


def test_rbf_dimension_mismatch() -> None:
    with pytest.raises(OcalError):
        rbf(np.zeros(2), np.zeros(3), KernelConfig(gamma=1.0))


def test_kernel_config_rejects_non_positive_gamma() -> None:
    with pytest.raises(ValueError):
        KernelConfig(gamma=0.0)


def test_gram_matrix_is_symmetric_with_unit_diagonal(points) -> None:
    K = gram_matrix(points, KernelConfig(gamma=0.7))
    np.testing.assert_array_equal(K, K.T)
    np.testing.assert_array_equal(np.diag(K), 1.0)
    assert K[0, 3] == pytest.approx(rbf(points[0], points[3], KernelConfig(gamma=0.7)))


def test_kernel_cache_reuses_read_only_matrices(points) -> None:
    cache = KernelCache()
    first = cache.get("points", points, KernelConfig(gamma=1.0))
    assert cache.get("points", points, KernelConfig(gamma=1.0)) is first
    assert not first.flags.writeable
    cache.get("points", points, KernelConfig(gamma=2.0))
    assert len(cache) == 2


def test_gamma_scott() -> None:
    h = 2 ** (-1 / 5) * math.sqrt(2.0)
    assert gamma_scott(np.array([[0.0], [2.0]])) == pytest.approx(1.0 / (2.0 * h * h))


def test_resolve_gamma() -> None:
    X = np.array([[0.0], [2.0]])
    assert resolve_gamma("fixed:2.5", X) == 2.5
    assert resolve_gamma("scott", X) == pytest.approx(gamma_scott(X))
    with pytest.raises(UnsupportedHeuristicError):
        resolve_gamma("wang", X)
    with pytest.raises(OcalError):
        resolve_gamma("fixed:-1", X)
    with pytest.raises(OcalError):
        resolve_gamma("silverman", X)


def test_cost_tax() -> None:
    costs = cost_tax(100, 0.05)
    assert costs.C == pytest.approx(0.2)
    assert costs.C1 == costs.C2 == costs.C
    assert cost_tax(10, 0.05).C == 1.0
    assert cost_tax(100, 0.05, kappa=0.3, c2=0.5).C2 == 0.5
    with pytest.raises(OcalError):
        cost_tax(0, 0.05)
    with pytest.raises(OcalError):
        cost_tax(10, 0.0)


@pytest.mark.parametrize("gamma", [0.1, 1.0, 10.0])
def test_gram_matrix_is_positive_semidefinite(points, gamma) -> None:
    K = gram_matrix(points, KernelConfig(gamma=gamma))
    assert np.linalg.eigvalsh(K).min() >= -1e-10
