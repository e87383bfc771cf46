import itertools

import numpy as np
import pytest

from infocausality.boxes import random_box


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def random_boxes():
    gen = np.random.default_rng(7)
    return [random_box(gen) for _ in range(100)]


def brute_force_success(box, n, dataset, b, outcomes):
    """Replays one trial for an explicit outcome per box pair (heap order).

    Returns ``(probability of this outcome string, success)``.
    """
    weight = 1.0
    bits = [((b >> (n - 1 - j)) & 1) for j in range(n)]
    bob_out = {}

    def alice(j, i):
        nonlocal weight
        if j == n:
            return dataset[i]
        m_left = alice(j + 1, 2 * i)
        m_right = alice(j + 1, 2 * i + 1)
        A, B = divmod(outcomes[(1 << j) - 1 + i], 2)
        weight *= box.p[m_left ^ m_right, bits[j], A, B]
        bob_out[j, i] = B
        return A ^ m_left

    guess = alice(0, 0)
    for j in range(n):
        guess ^= bob_out[j, b >> (n - j)]
    return weight, guess == dataset[b]


def brute_force_stats(box, n, dataset=None):
    """P_k by summing over every outcome string, and every dataset when
    ``dataset`` is None."""
    N = 1 << n
    datasets = [tuple(dataset)] if dataset is not None else list(itertools.product((0, 1), repeat=N))
    out = []
    for b in range(N):
        total = 0.0
        for data in datasets:
            for outcomes in itertools.product(range(4), repeat=N - 1):
                w, ok = brute_force_success(box, n, data, b, outcomes)
                if ok:
                    total += w
        out.append(total / len(datasets))
    return out


def binomial_tolerance(p, trials, sigmas=5.0):
    return sigmas * np.sqrt(max(p * (1 - p), 1e-300) / trials)
