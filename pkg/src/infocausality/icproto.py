"""Nested information-causality protocol with one bit of communication.

Alice holds ``N = 2**n`` bits and Bob wants bit ``b``. Box pairs are arranged
as a binary tree of ``n`` levels in heap order: level ``j`` holds ``2**j``
pairs, and pair ``i`` on level ``j`` covers data bits
``[i * 2**(n-j), (i+1) * 2**(n-j))``. The most significant bit of ``b`` is
Bob's input on the root level, the least significant bit on the leaf level.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .boxes import Box, cumulative_table, outcomes_from_uniform
from .metrics import merit
from .twirl import relabel_outputs

MAX_LEVELS = 8
DATASET_MODES = ("fixed", "random_per_run", "random_per_trial")
DEFAULT_TOTAL_TRIALS = 100_000
BLOCK_SIZE = 8192

_TAG_TRIALS = 0
_TAG_DATASET = 1


def _check_levels(n: int) -> int:
    if not isinstance(n, (int, np.integer)) or not (1 <= n <= MAX_LEVELS):
        raise ValueError(f"level count must be an integer in [1, {MAX_LEVELS}], got {n!r}")
    return int(n)


def _bits(values, length: int, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.int64).ravel()
    if arr.shape != (length,) or not np.isin(arr, (0, 1)).all():
        raise ValueError(f"{what} must be {length} bits, got {list(values)!r}")
    return arr


@dataclass(frozen=True)
class ProtocolConfig:
    """Run parameters.

    ``trials_per_index`` defaults to ``100000 // 2**n``. ``shot_twirl`` draws a
    fresh depolarizing relabeling for every box use. ``stream`` is an extra
    label mixed into every random substream so distinct rows of a larger
    experiment never share randomness.
    """

    n: int
    dataset_mode: str = "random_per_trial"
    dataset: tuple[int, ...] | None = None
    trials_per_index: int | None = None
    replicates: int = 5
    seed: int = 0
    shot_twirl: bool = False
    stream: tuple[int, ...] = ()

    def __post_init__(self):
        _check_levels(self.n)
        if self.dataset_mode not in DATASET_MODES:
            raise ValueError(f"dataset_mode must be one of {DATASET_MODES}, got {self.dataset_mode!r}")
        if self.dataset_mode == "fixed":
            if self.dataset is None:
                raise ValueError("fixed dataset mode needs a dataset")
            object.__setattr__(self, "dataset", tuple(int(x) for x in _bits(self.dataset, self.N, "dataset")))
        elif self.dataset is not None:
            raise ValueError("a dataset may only be given in fixed mode")
        if self.trials_per_index is None:
            object.__setattr__(self, "trials_per_index", max(1, DEFAULT_TOTAL_TRIALS // self.N))
        if self.trials_per_index < 1 or self.replicates < 1:
            raise ValueError("trials_per_index and replicates must be >= 1")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def N(self) -> int:
        return 1 << self.n


@dataclass(frozen=True)
class TrialTranscript:
    dataset: tuple[int, ...]
    b: int
    alice_inputs: tuple[tuple[int, ...], ...]  # per level, one entry per box pair
    bob_inputs: tuple[int, ...]  # per level, shared by all pairs on the level
    alice_outputs: tuple[tuple[int, ...], ...]
    bob_outputs: tuple[tuple[int, ...], ...]
    message: int
    bob_path_outputs: tuple[int, ...]
    guess: int
    success: bool

    @property
    def box_uses(self) -> int:
        return sum(len(level) for level in self.alice_inputs)


def address_bits(b: int, n: int) -> list[int]:
    """Bob's input per level, root first."""
    return [(b >> (n - 1 - j)) & 1 for j in range(n)]


def path_indices(b: int, n: int) -> list[int]:
    """Index of the box pair Bob reads on each level, root first."""
    return [b >> (n - j) for j in range(n)]


def bob_decode(message, path_outputs) -> np.ndarray:
    """Bob's guess from Alice's single bit and his own outputs along the path."""
    g = np.asarray(message).copy()
    for out in path_outputs:
        g = g ^ out
    return g


def _play(cdf: np.ndarray, n: int, b: int, data: np.ndarray, u: np.ndarray, tbits=None):
    """Vectorized protocol over T trials.

    ``data`` is ``(T, N)``, ``u`` is ``(T, N-1)`` uniforms in heap order and
    ``tbits`` optional ``(T, N-1, 3)`` relabeling bits. Returns per-level
    arrays (root first), the message and the guess.
    """
    ys = address_bits(b, n)
    x_lv = [None] * n
    A_lv = [None] * n
    B_lv = [None] * n
    msgs = data
    for j in range(n - 1, -1, -1):
        left, right = msgs[:, 0::2], msgs[:, 1::2]
        x = left ^ right
        y = ys[j]
        sl = slice((1 << j) - 1, (1 << (j + 1)) - 1)
        if tbits is None:
            A, B = outcomes_from_uniform(cdf, x, y, u[:, sl])
        else:
            r = tbits[:, sl]
            alpha, beta, gamma = r[..., 0], r[..., 1], r[..., 2]
            A, B = outcomes_from_uniform(cdf, x ^ alpha, y ^ beta, u[:, sl])
            A, B = relabel_outputs(A, B, x, y, (alpha, beta, gamma))
        x_lv[j], A_lv[j], B_lv[j] = x, A, B
        msgs = A ^ left
    message = msgs[:, 0]
    path = [B_lv[j][:, i] for j, i in enumerate(path_indices(b, n))]
    guess = bob_decode(message, path)
    return x_lv, ys, A_lv, B_lv, message, path, guess


def run_trial(
    box: Box, n: int, dataset: Sequence[int], b: int, rng: np.random.Generator,
    shot_twirl: bool = False,
) -> TrialTranscript:
    """One shot of the nested protocol; draws ``N - 1`` uniforms from ``rng``
    (plus ``3 (N - 1)`` relabeling bits first when ``shot_twirl``)."""
    n = _check_levels(n)
    N = 1 << n
    data = _bits(dataset, N, "dataset")
    if not (0 <= b < N):
        raise ValueError(f"target index must lie in [0, {N}), got {b}")
    tbits = rng.integers(0, 2, size=(1, N - 1, 3)) if shot_twirl else None
    u = rng.random((1, N - 1))
    x_lv, ys, A_lv, B_lv, message, path, guess = _play(cumulative_table(box), n, b, data[None, :], u, tbits)
    g = int(guess[0])
    return TrialTranscript(
        dataset=tuple(int(v) for v in data),
        b=int(b),
        alice_inputs=tuple(tuple(int(v) for v in x[0]) for x in x_lv),
        bob_inputs=tuple(ys),
        alice_outputs=tuple(tuple(int(v) for v in A[0]) for A in A_lv),
        bob_outputs=tuple(tuple(int(v) for v in B[0]) for B in B_lv),
        message=int(message[0]),
        bob_path_outputs=tuple(int(p[0]) for p in path),
        guess=g,
        success=g == int(data[b]),
    )


# -- batched runs --------------------------------------------------------------

def _stream(config: ProtocolConfig, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=config.seed, spawn_key=(*config.stream, *key))
    return np.random.default_rng(ss)


def _run_dataset(config: ProtocolConfig, replicate: int) -> np.ndarray | None:
    if config.dataset_mode == "fixed":
        return np.asarray(config.dataset, dtype=np.int64)
    if config.dataset_mode == "random_per_run":
        return _stream(config, _TAG_DATASET, replicate).integers(0, 2, size=config.N)
    return None


def _run_index(cdf, config: ProtocolConfig, replicate: int, k: int, run_data) -> np.ndarray:
    """Joint counts ``[a_k, G]`` for ``trials_per_index`` trials with ``b = k``."""
    N, n = config.N, config.n
    counts = np.zeros((2, 2), dtype=np.int64)
    remaining = config.trials_per_index
    block = 0
    while remaining > 0:
        T = min(BLOCK_SIZE, remaining)
        rng = _stream(config, _TAG_TRIALS, replicate, k, block)
        if run_data is None:
            data = rng.integers(0, 2, size=(T, N))
        else:
            data = np.broadcast_to(run_data, (T, N))
        tbits = rng.integers(0, 2, size=(T, N - 1, 3)) if config.shot_twirl else None
        u = rng.random((T, N - 1))
        guess = _play(cdf, n, k, data, u, tbits)[-1]
        np.add.at(counts, (data[:, k], guess), 1)
        remaining -= T
        block += 1
    return counts


@dataclass
class RunSummary:
    """Aggregated protocol statistics.

    ``P`` pools successes over all replicates; ``replicate_P`` keeps each
    replicate separately, and the ``*_mean``/``*_std`` fields summarize the
    per-replicate figures of merit (sample standard deviation, 0 for a single
    replicate).
    """

    config: ProtocolConfig
    joint_counts: np.ndarray  # (replicates, N, 2, 2) indexed [r, k, a_k, G]
    P: tuple[float, ...] = field(init=False)
    replicate_P: np.ndarray = field(init=False)
    i_bound: float = field(init=False)
    efficiency: float = field(init=False)
    i_bound_replicates: tuple[float, ...] = field(init=False)
    efficiency_replicates: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        c = self.joint_counts
        succ = c[..., 0, 0] + c[..., 1, 1]
        self.replicate_P = succ / c.sum(axis=(2, 3))
        pooled = succ.sum(axis=0) / c.sum(axis=(0, 2, 3))
        self.P = tuple(float(x) for x in pooled)
        m = merit(self.P)
        self.i_bound, self.efficiency = m.i_bound, m.efficiency
        reps = [merit(row) for row in self.replicate_P]
        self.i_bound_replicates = tuple(r.i_bound for r in reps)
        self.efficiency_replicates = tuple(r.efficiency for r in reps)

    @property
    def n(self) -> int:
        return self.config.n

    @property
    def successes(self) -> np.ndarray:
        c = self.joint_counts
        return c[..., 0, 0] + c[..., 1, 1]

    @property
    def trials(self) -> np.ndarray:
        return self.joint_counts.sum(axis=(2, 3))

    @staticmethod
    def _spread(values) -> tuple[float, float]:
        v = np.asarray(values, dtype=float)
        return float(v.mean()), float(v.std(ddof=1)) if len(v) > 1 else 0.0

    @property
    def i_bound_stats(self) -> tuple[float, float]:
        return self._spread(self.i_bound_replicates)

    @property
    def efficiency_stats(self) -> tuple[float, float]:
        return self._spread(self.efficiency_replicates)

    def pooled_counts(self) -> np.ndarray:
        """``(N, 2, 2)`` joint counts of ``(a_k, G)`` over all replicates."""
        return self.joint_counts.sum(axis=0)

    def csv_rows(self, S_of_box: float) -> list[list]:
        i_mean, i_std = self.i_bound_stats
        e_mean, e_std = self.efficiency_stats
        trials = self.trials.sum(axis=0)
        return [
            [self.n, S_of_box, k, self.P[k], i_mean, i_std, e_mean, e_std, int(trials[k]), self.config.seed]
            for k in range(self.config.N)
        ]


RUN_CSV_HEADER = ["n", "S_of_box", "k", "P_k", "i_bound_mean", "i_bound_std", "eff_mean", "eff_std", "trials", "seed"]


def run_protocol(box: Box, config: ProtocolConfig, threads: int = 1) -> RunSummary:
    """Shot-by-shot protocol run with ``b`` fixed per batch of trials.

    Every batch of trials draws from its own substream keyed by
    ``(seed, stream, replicate, k, block)``, so the result does not depend on
    ``threads``.
    """
    cdf = cumulative_table(box)
    tasks = []
    for r in range(config.replicates):
        data = _run_dataset(config, r)
        tasks.extend((r, k, data) for k in range(config.N))

    def work(task):
        r, k, data = task
        return _run_index(cdf, config, r, k, data)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, tasks))
    else:
        results = [work(t) for t in tasks]
    counts = np.stack(results).reshape(config.replicates, config.N, 2, 2)
    return RunSummary(config=config, joint_counts=counts)


# -- exact statistics ----------------------------------------------------------

def _dataset_argument(dataset_mode, N: int):
    """``None`` for dataset-averaged statistics, else the fixed bit array."""
    if isinstance(dataset_mode, str):
        if dataset_mode in ("random_per_trial", "random_per_run", "random"):
            return None
        raise ValueError(f"fixed datasets must be passed as a bit sequence, got {dataset_mode!r}")
    return _bits(dataset_mode, N, "dataset")


def exact_protocol_stats(box: Box, n: int, dataset_mode="random_per_trial") -> list[float]:
    """Exact success probability ``P_k`` for every target index.

    ``dataset_mode`` is either a random mode (average over uniformly random
    datasets) or a fixed bit sequence of length ``2**n``. The sum over all box
    outcomes is organized along the tree: subtrees off Bob's path only
    contribute the distribution of their message, which keeps the cost linear
    in the number of box pairs.
    """
    n = _check_levels(n)
    N = 1 << n
    data = _dataset_argument(dataset_mode, N)
    p = box.p
    uniform = np.array([0.5, 0.5])

    def leaf_dist(i):
        if data is None:
            return uniform
        d = np.zeros(2)
        d[data[i]] = 1.0
        return d

    def combine_off(qL, qR, y):
        q = np.zeros(2)
        for mL in (0, 1):
            for mR in (0, 1):
                w = qL[mL] * qR[mR]
                if w == 0.0:
                    continue
                pa = p[mL ^ mR, y].sum(axis=1)  # P(A | x, y)
                for A in (0, 1):
                    q[A ^ mL] += w * pa[A]
        return q

    def off_path(j, i, ys):
        """Message distribution of pair ``i`` on level ``j`` (not on the path)."""
        if j == n:
            return leaf_dist(i)
        return combine_off(off_path(j + 1, 2 * i, ys), off_path(j + 1, 2 * i + 1, ys), ys[j])

    def on_path(j, i, ys, k):
        """Joint ``Q[m, c, t]``: message, XOR of Bob's path outputs below and
        at this node, and the target bit."""
        if j == n:
            Q = np.zeros((2, 2, 2))
            d = leaf_dist(i)
            for t in (0, 1):
                Q[t, 0, t] = d[t]
            return Q
        y = ys[j]
        sel = on_path(j + 1, 2 * i + y, ys, k)
        other = off_path(j + 1, 2 * i + (1 - y), ys)
        Q = np.zeros((2, 2, 2))
        for ms, cs, t in np.ndindex(2, 2, 2):
            ws = sel[ms, cs, t]
            if ws == 0.0:
                continue
            for mo in (0, 1):
                w = ws * other[mo]
                if w == 0.0:
                    continue
                mL, mR = (ms, mo) if y == 0 else (mo, ms)
                for A, B in np.ndindex(2, 2):
                    q = p[mL ^ mR, y, A, B]
                    if q:
                        Q[A ^ mL, B ^ cs, t] += w * q
        return Q

    out = []
    for k in range(N):
        ys = address_bits(k, n)
        Q = on_path(0, 0, ys, k)
        out.append(float(sum(Q[m, c, t] for m, c, t in np.ndindex(2, 2, 2) if (m ^ c) == t)))
    return out


def isotropic_success(S: float, n: int) -> float:
    """Closed-form ``P_k`` for an isotropic box with CHSH value ``S``."""
    return 0.5 * (1.0 + (S / 2.0 - 1.0) ** n)


def binomial_sigma(p: float, trials: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / trials)
