"""Shared-randomness relabelings of boxes.

A relabeling ``(alpha, beta, gamma)`` feeds ``(a ^ alpha, b ^ beta)`` to the
inner box and outputs ``A ^ beta*a ^ alpha*beta ^ gamma`` and
``B ^ alpha*b ^ gamma``. This leaves ``A ^ B ^ a*b`` equal to the inner box's
``A ^ B ^ (a ^ alpha)(b ^ beta)``, so the set of per-setting success
probabilities is only permuted.
"""

from __future__ import annotations

import itertools
from typing import NamedTuple

import numpy as np

from .boxes import Box


class Relabeling(NamedTuple):
    alpha: int = 0
    beta: int = 0
    gamma: int = 0


IDENTITY = Relabeling(0, 0, 0)
ALL_RELABELINGS = tuple(Relabeling(*bits) for bits in itertools.product((0, 1), repeat=3))


def relabel_outputs(A, B, a, b, r: Relabeling):
    """Outer outputs from inner outputs; works on ints or int arrays."""
    alpha, beta, gamma = r
    return A ^ (beta * a) ^ (alpha * beta) ^ gamma, B ^ (alpha * b) ^ gamma


def relabel(box: Box, r: Relabeling) -> Box:
    alpha, beta, gamma = (int(x) & 1 for x in r)
    p = np.empty_like(box.p)
    for a, b, A, B in itertools.product((0, 1), repeat=4):
        Ao, Bo = relabel_outputs(A, B, a, b, (alpha, beta, gamma))
        p[a, b, Ao, Bo] = box.p[a ^ alpha, b ^ beta, A, B]
    return Box(p)


def depolarize(box: Box) -> Box:
    """Uniform mixture over all eight relabelings: isotropic, same CHSH value."""
    acc = np.zeros((2, 2, 2, 2))
    for r in ALL_RELABELINGS:
        acc += relabel(box, r).p
    return Box(acc / 8.0)


def symmetrize_outputs(box: Box) -> Box:
    """Average over a joint output flip; marginals become uniform while each
    setting's success probability is kept."""
    flipped = box.p[:, :, ::-1, ::-1]
    return Box((box.p + flipped) * 0.5)


TWIRL_MODES = ("none", "symmetrize", "depolarize")


def apply_twirl(box: Box, mode: str) -> Box:
    if mode == "none":
        return box
    if mode == "symmetrize":
        return symmetrize_outputs(box)
    if mode == "depolarize":
        return depolarize(box)
    raise ValueError(f"unknown twirl mode {mode!r}; choose from {TWIRL_MODES}")
