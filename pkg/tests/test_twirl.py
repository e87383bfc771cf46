import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from infocausality.boxes import (
    Box,
    anisotropy,
    chsh_value,
    isotropic_box,
    local_deterministic_box,
    no_signaling,
    random_box,
)
from infocausality.twirl import (
    ALL_RELABELINGS,
    IDENTITY,
    apply_twirl,
    depolarize,
    relabel,
    relabel_outputs,
    symmetrize_outputs,
)

seeds = st.integers(0, 2**32 - 1)


def _box(seed):
    return random_box(np.random.default_rng(seed))


def test_identity_relabeling(random_boxes):
    for box in random_boxes[:5]:
        assert relabel(box, IDENTITY) == box


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_relabel_permutes_success(seed):
    box = _box(seed)
    s = sorted(box.success_vector())
    for r in ALL_RELABELINGS:
        assert sorted(relabel(box, r).success_vector()) == pytest.approx(s, abs=1e-15)


def test_relabel_preserves_game_parity():
    for r in ALL_RELABELINGS:
        for a, b, A, B in itertools.product((0, 1), repeat=4):
            Ao, Bo = relabel_outputs(A, B, a, b, r)
            inner = A ^ B ^ ((a ^ r.alpha) * (b ^ r.beta))
            assert Ao ^ Bo ^ (a * b) == inner


def test_relabel_outputs_arrays():
    A = np.array([0, 1, 1])
    B = np.array([1, 1, 0])
    a = np.array([1, 0, 1])
    b = np.array([1, 1, 0])
    Ao, Bo = relabel_outputs(A, B, a, b, ALL_RELABELINGS[7])
    for i in range(3):
        assert (Ao[i], Bo[i]) == relabel_outputs(int(A[i]), int(B[i]), int(a[i]), int(b[i]), ALL_RELABELINGS[7])


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_depolarize_invariants(seed):
    box = _box(seed)
    d = depolarize(box)
    assert abs(chsh_value(d) - chsh_value(box)) <= 1e-14
    assert anisotropy(d) <= 1e-12
    assert np.allclose(d.alice_marginal(), 0.5, atol=1e-12)
    assert np.allclose(d.bob_marginal(), 0.5, atol=1e-12)
    assert depolarize(d).allclose(d, atol=1e-15)


def test_depolarize_local_vertex_is_isotropic():
    d = depolarize(local_deterministic_box(0, 0, 0, 0))
    assert d.allclose(isotropic_box(3.0), atol=1e-15)
    assert no_signaling(d).passes


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_symmetrize_bitwise(seed):
    box = _box(seed)
    s = symmetrize_outputs(box)
    assert s.success_vector() == box.success_vector()
    assert np.allclose(s.alice_marginal(), 0.5, atol=1e-15)


def test_apply_twirl_modes(random_boxes):
    box = random_boxes[0]
    assert apply_twirl(box, "none") is box
    assert apply_twirl(box, "depolarize") == depolarize(box)
    assert apply_twirl(box, "symmetrize") == symmetrize_outputs(box)
    with pytest.raises(ValueError):
        apply_twirl(box, "shuffle")


def test_twirl_results_are_boxes(random_boxes):
    for box in random_boxes[:10]:
        assert isinstance(depolarize(box), Box)
