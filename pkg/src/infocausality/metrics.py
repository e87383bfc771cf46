"""Figures of merit for the information-causality game.

All information quantities are in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np


class UndefinedConditionalError(ValueError):
    """Mutual information requested for an index whose data bit never varies."""


def binary_entropy(p: float) -> float:
    p = float(p)
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"probability must lie in [0, 1], got {p!r}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


@dataclass(frozen=True)
class MeritReport:
    i_bound: float
    efficiency: float
    info_terms: tuple[float, ...]
    efficiency_terms: tuple[float, ...]
    ic_violated: bool
    rac_violated: bool


def _check_length(n_items: int) -> None:
    if n_items < 2 or n_items & (n_items - 1):
        raise ValueError(f"need 2^n success probabilities with n >= 1, got {n_items}")


def merit(P: Sequence[float], message_bits: int = 1) -> MeritReport:
    """Information bound sum(1 - h(P_k)) and efficiency sum((2 P_k - 1)^2).

    Terms with ``P_k < 1/2`` enter the information bound with their (negative)
    sign.
    """
    P = [float(x) for x in P]
    _check_length(len(P))
    info = tuple(1.0 - binary_entropy(x) for x in P)
    eff = tuple((2.0 * x - 1.0) ** 2 for x in P)
    i_bound = math.fsum(info)
    efficiency = math.fsum(eff)
    return MeritReport(
        i_bound=i_bound,
        efficiency=efficiency,
        info_terms=info,
        efficiency_terms=eff,
        ic_violated=i_bound > message_bits,
        rac_violated=efficiency > 1.0,
    )


def mutual_information_from_counts(counts) -> float:
    """Plug-in Shannon mutual information of a 2x2 joint count table ``[a, g]``."""
    c = np.asarray(counts, dtype=float)
    total = c.sum()
    if total <= 0:
        raise ValueError("empty count table")
    pj = c / total
    pa = pj.sum(axis=1)
    pg = pj.sum(axis=0)
    if (pa == 0).any():
        raise UndefinedConditionalError("data bit is constant; mutual information undefined")
    mi = 0.0
    for a in range(2):
        for g in range(2):
            if pj[a, g] > 0:
                mi += pj[a, g] * math.log2(pj[a, g] / (pa[a] * pg[g]))
    return max(mi, 0.0)


def _pair_counts(samples) -> np.ndarray:
    arr = np.asarray(samples, dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != 2 or len(arr) == 0:
        raise ValueError("samples for each index must be a non-empty (T, 2) array of bits")
    table = np.zeros((2, 2), dtype=np.int64)
    np.add.at(table, (arr[:, 0], arr[:, 1]), 1)
    return table


def empirical_mutual_information(samples: Sequence | Mapping) -> float:
    """Sum over indices k of the plug-in I(a_k : G | b = k).

    ``samples`` maps each index (or lists, in index order) to a sequence of
    ``(a_k, G)`` bit pairs. No bias correction is applied.
    """
    groups = samples.values() if isinstance(samples, Mapping) else samples
    return math.fsum(mutual_information_from_counts(_pair_counts(s)) for s in groups)
