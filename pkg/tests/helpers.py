import numpy as np

from vech2bekk.core.linalg import kron


def random_symmetric(rng: np.random.Generator, n: int) -> np.ndarray:
    m = rng.standard_normal((n, n))
    return m + m.T


def orthogonal_components(rng: np.random.Generator, n: int, k: int, scales=None) -> list:
    """k positive matrices on disjoint index groups with the given Frobenius norms"""
    scales = scales if scales is not None else [1.0 / (j + 1) for j in range(k)]
    groups = np.array_split(rng.permutation(n), k)
    components = []
    for group, scale in zip(groups, scales):
        a = np.zeros((n, n))
        a[np.ix_(group, group)] = rng.uniform(0.2, 1.0, (group.size, group.size))
        components.append(scale * a / np.linalg.norm(a))
    return components


def kron_sum(components) -> np.ndarray:
    return sum(kron(a, a) for a in components)
