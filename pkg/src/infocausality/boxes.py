"""Bipartite binary-input, binary-output correlation boxes.

A box is the full conditional distribution ``p[a, b, A, B] = P(A, B | a, b)``
with Alice's input ``a``, Bob's input ``b`` and outputs ``A``, ``B`` all bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

NORM_TOL = 1e-12
CLAMP_TOL = 1e-15
NS_TOL = 1e-12

CLASSICAL_BOUND = 3.0
TSIRELSON_BOUND = 2.0 + math.sqrt(2.0)
ALGEBRAIC_MAX = 4.0

# (a, b, A, B) index tuples satisfying A xor B = a*b, one pair per setting.
_WIN = {(a, b): ((0, a * b), (1, 1 ^ (a * b))) for a in (0, 1) for b in (0, 1)}


class BoxError(ValueError):
    """Raised for invalid box data or construction parameters."""


class BoxParseError(BoxError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


@dataclass(frozen=True, eq=False)
class Box:
    """Immutable conditional distribution ``P(A, B | a, b)``.

    ``p`` has shape ``(2, 2, 2, 2)`` indexed ``[a, b, A, B]``. Entries in
    ``[-1e-15, 0)`` are clamped to zero; anything more negative, or a setting
    whose entries do not sum to one within 1e-12, raises :class:`BoxError`.
    """

    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float, copy=True)
        if p.shape != (2, 2, 2, 2):
            raise BoxError(f"box must have shape (2, 2, 2, 2), got {p.shape}")
        if not np.all(np.isfinite(p)):
            raise BoxError("box entries must be finite")
        if p.min() < -CLAMP_TOL:
            raise BoxError(f"negative probability {p.min():.3e}")
        p[p < 0] = 0.0
        sums = p.sum(axis=(2, 3))
        bad = np.abs(sums - 1.0) > NORM_TOL
        if bad.any():
            a, b = map(int, np.argwhere(bad)[0])
            raise BoxError(f"setting (a={a}, b={b}) sums to {sums[a, b]!r}")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    def __eq__(self, other):
        if not isinstance(other, Box):
            return NotImplemented
        return bool(np.array_equal(self.p, other.p))

    def __hash__(self):
        return hash(self.p.tobytes())

    def allclose(self, other: "Box", atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.p, other.p, rtol=0.0, atol=atol))

    def success(self, a: int, b: int) -> float:
        """P(A xor B = ab | a, b)."""
        (A0, B0), (A1, B1) = _WIN[a, b]
        return float(self.p[a, b, A0, B0] + self.p[a, b, A1, B1])

    def success_vector(self) -> tuple[float, float, float, float]:
        """Per-setting success probabilities ordered (00, 01, 10, 11)."""
        return tuple(self.success(a, b) for a in (0, 1) for b in (0, 1))

    def alice_marginal(self) -> np.ndarray:
        """``P(A | a, b)`` with shape ``(2, 2, 2)``."""
        return self.p.sum(axis=3)

    def bob_marginal(self) -> np.ndarray:
        """``P(B | a, b)`` with shape ``(2, 2, 2)``."""
        return self.p.sum(axis=2)


@dataclass(frozen=True)
class NoSignalingReport:
    max_violation: float
    passes: bool


def _box_from_rule(rule) -> Box:
    p = np.zeros((2, 2, 2, 2))
    for a in (0, 1):
        for b in (0, 1):
            for A in (0, 1):
                for B in (0, 1):
                    p[a, b, A, B] = rule(a, b, A, B)
    return Box(p)


def pr_box() -> Box:
    """The Popescu-Rohrlich box: A xor B = ab with uniform marginals."""
    return _box_from_rule(lambda a, b, A, B: 0.5 if (A ^ B) == a * b else 0.0)


def uniform_box() -> Box:
    return Box(np.full((2, 2, 2, 2), 0.25))


def isotropic_box(S: float) -> Box:
    """Isotropic box with CHSH value ``S`` in ``[2, 4]``.

    Every setting succeeds with probability ``S/4`` and both marginals are
    uniform.
    """
    S = float(S)
    if not (2.0 <= S <= 4.0) or math.isnan(S):
        raise BoxError(f"isotropic S must lie in [2, 4], got {S!r}")
    win = S / 8.0
    lose = (1.0 - S / 4.0) / 2.0
    return _box_from_rule(lambda a, b, A, B: win if (A ^ B) == a * b else lose)


def local_deterministic_box(A0: int, A1: int, B0: int, B1: int) -> Box:
    """Vertex of the local polytope: Alice outputs ``A_a``, Bob ``B_b``."""
    alice = (A0 & 1, A1 & 1)
    bob = (B0 & 1, B1 & 1)
    return _box_from_rule(
        lambda a, b, A, B: 1.0 if (A == alice[a] and B == bob[b]) else 0.0
    )


def chsh_value(box: Box) -> float:
    """S = sum over settings of P(A xor B = ab | a, b)."""
    return math.fsum(box.success_vector())


def anisotropy(box: Box) -> float:
    """Spread (max - min) of the four per-setting success probabilities."""
    s = box.success_vector()
    return max(s) - min(s)


def no_signaling(box: Box, tol: float = NS_TOL) -> NoSignalingReport:
    """Largest dependence of one party's marginal on the other's input."""
    pa = box.alice_marginal()  # [a, b, A]
    pb = box.bob_marginal()  # [a, b, B]
    alice_dev = np.abs(pa[:, 0, :] - pa[:, 1, :]).max()
    bob_dev = np.abs(pb[0, :, :] - pb[1, :, :]).max()
    worst = float(max(alice_dev, bob_dev))
    return NoSignalingReport(max_violation=worst, passes=worst <= tol)


def cumulative_table(box: Box) -> np.ndarray:
    """Inverse-CDF table with shape ``(2, 2, 3)`` over flat outcome ``2A + B``."""
    return np.cumsum(box.p.reshape(2, 2, 4), axis=2)[:, :, :3]


def outcomes_from_uniform(cdf: np.ndarray, a, b, u):
    """Map uniforms ``u`` to joint outcomes using a :func:`cumulative_table`.

    ``a``, ``b`` and ``u`` broadcast together. Returns ``(A, B)`` int arrays.
    """
    a = np.asarray(a, dtype=np.intp)
    b = np.asarray(b, dtype=np.intp)
    u = np.asarray(u)
    c = cdf[a, b]
    idx = (u[..., None] >= c).sum(axis=-1)
    return idx >> 1, idx & 1


def sample(box: Box, a: int, b: int, rng: np.random.Generator) -> tuple[int, int]:
    """Draw one joint outcome for inputs ``(a, b)``; uses exactly one uniform."""
    A, B = outcomes_from_uniform(cumulative_table(box), a, b, rng.random())
    return int(A), int(B)


def mix(boxes: Sequence[Box], weights: Sequence[float]) -> Box:
    """Convex combination of boxes."""
    if len(boxes) != len(weights):
        raise BoxError(f"{len(boxes)} boxes but {len(weights)} weights")
    if not boxes:
        raise BoxError("cannot mix an empty list of boxes")
    w = np.asarray(weights, dtype=float)
    if (w < 0).any() or abs(w.sum() - 1.0) > NORM_TOL:
        raise BoxError(f"weights must be a probability vector, got {list(w)}")
    stacked = np.stack([bx.p for bx in boxes])
    return Box(np.tensordot(w, stacked, axes=1))


def random_box(rng: np.random.Generator) -> Box:
    """Box with each setting drawn from a flat Dirichlet; generally signaling."""
    return Box(rng.dirichlet(np.ones(4), size=(2, 2)).reshape(2, 2, 2, 2))


# -- plain-text serialization -------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.16e}"


def format_box(box: Box) -> str:
    lines = []
    for a in (0, 1):
        for b in (0, 1):
            vals = " ".join(_fmt(box.p[a, b, A, B]) for A in (0, 1) for B in (0, 1))
            lines.append(f"{a} {b} : {vals}")
    return "\n".join(lines) + "\n"


def parse_box(text: str) -> Box:
    """Parse the four-line ``a b : p00 p01 p10 p11`` format.

    Blank lines and ``#`` comments are ignored. Errors carry line numbers.
    """
    p = np.full((2, 2, 2, 2), np.nan)
    seen: dict[tuple[int, int], int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise BoxParseError("expected 'a b : p00 p01 p10 p11'", lineno)
        head, tail = line.split(":", 1)
        keys = head.split()
        if len(keys) != 2 or any(k not in ("0", "1") for k in keys):
            raise BoxParseError(f"bad input pair {head.strip()!r}", lineno)
        a, b = int(keys[0]), int(keys[1])
        if (a, b) in seen:
            raise BoxParseError(
                f"duplicate setting ({a}, {b}), first on line {seen[a, b]}", lineno
            )
        fields = tail.split()
        if len(fields) != 4:
            raise BoxParseError(f"expected 4 probabilities, got {len(fields)}", lineno)
        try:
            vals = [float(f) for f in fields]
        except ValueError as exc:
            raise BoxParseError(str(exc), lineno) from None
        p[a, b] = np.array(vals).reshape(2, 2)
        seen[a, b] = lineno
        try:
            Box(np.where(np.isnan(p), 0.25, p))
        except BoxError as exc:
            raise BoxParseError(str(exc), lineno) from None
    missing = [(a, b) for a in (0, 1) for b in (0, 1) if (a, b) not in seen]
    if missing:
        raise BoxParseError(f"missing settings {missing}")
    return Box(p)


def read_box(path: str | Path) -> Box:
    try:
        return parse_box(Path(path).read_text(encoding="utf-8"))
    except BoxParseError as exc:
        raise BoxParseError(f"{path}: {exc}") from None


def write_box(box: Box, path: str | Path) -> None:
    Path(path).write_text(format_box(box), encoding="utf-8", newline="\n")
