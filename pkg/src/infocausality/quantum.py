"""Two-qubit states under lossy phase gates with post-selection.

Polarization basis ordering is ``{HH, HV, VH, VV}``; output bit 0 is ``H`` and
1 is ``V`` on both sides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .boxes import Box, chsh_value

TWO_PI = 2.0 * math.pi
EXTINCTION_TOL = 1e-12
GRID_POINTS = 32
PHASE_RESOLUTION = 1e-6
TIE_TOL = 1e-9
SNAP_UNIT = math.pi / 16
SNAP_RADIUS = 1e-7


class QuantumError(ValueError):
    pass


class DegeneratePostselectionError(QuantumError):
    """A setting's post-selection probability fell below 1e-12."""


@dataclass(frozen=True, eq=False)
class TwoQubitState:
    rho: np.ndarray
    name: str = ""

    def __post_init__(self):
        rho = np.array(self.rho, dtype=complex, copy=True)
        if rho.shape != (4, 4):
            raise QuantumError(f"density matrix must be 4x4, got {rho.shape}")
        if not np.allclose(rho, rho.conj().T, rtol=0.0, atol=1e-12):
            raise QuantumError("density matrix is not Hermitian")
        if abs(np.trace(rho).real - 1.0) > 1e-12:
            raise QuantumError(f"trace is {np.trace(rho).real!r}, expected 1")
        if np.linalg.eigvalsh(rho).min() < -1e-10:
            raise QuantumError("density matrix is not positive semidefinite")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    def purity(self) -> float:
        return float(np.trace(self.rho @ self.rho).real)


def pure_state(vec, name: str = "") -> TwoQubitState:
    v = np.asarray(vec, dtype=complex)
    v = v / np.linalg.norm(v)
    return TwoQubitState(np.outer(v, v.conj()), name=name)


def psi_plus() -> TwoQubitState:
    """(|HV> + |VH>)/sqrt(2)."""
    return pure_state([0, 1, 1, 0], name="psi-plus")


def hv() -> TwoQubitState:
    return pure_state([0, 1, 0, 0], name="hv")


def vh() -> TwoQubitState:
    return pure_state([0, 0, 1, 0], name="vh")


def rho_sep() -> TwoQubitState:
    """Fully decohered psi-plus: (|HV><HV| + |VH><VH|)/2."""
    return TwoQubitState(np.diag([0.0, 0.5, 0.5, 0.0]), name="rho-sep")


def product_state(bloch_a, bloch_b, name: str = "product") -> TwoQubitState:
    """Product of two single-qubit states given as Bloch vectors (|r| <= 1)."""
    return TwoQubitState(np.kron(_qubit(bloch_a), _qubit(bloch_b)), name=name)


_PAULI = np.array(
    [[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex
)


def _qubit(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return 0.5 * (np.eye(2) + np.tensordot(r, _PAULI, axes=1))


NAMED_STATES = {
    "psi-plus": psi_plus,
    "rho-sep": rho_sep,
    "hv": hv,
    "vh": vh,
}


def named_state(name: str) -> TwoQubitState:
    try:
        return NAMED_STATES[name]()
    except KeyError:
        raise QuantumError(
            f"unknown state {name!r}; choose from {sorted(NAMED_STATES)}"
        ) from None


# -- lossy phase gates ---------------------------------------------------------

def u_state(kappa: float) -> np.ndarray:
    return np.array([math.sqrt(1 + kappa), math.sqrt(1 - kappa)]) / math.sqrt(2)


def w_state(kappa: float) -> np.ndarray:
    return np.array([math.sqrt(1 + kappa), -math.sqrt(1 - kappa)]) / math.sqrt(2)


def _check_kappa(kappa: float) -> float:
    kappa = float(kappa)
    if not (0.0 <= kappa < 1.0):
        raise QuantumError(f"kappa must lie in [0, 1), got {kappa!r}")
    return kappa


@dataclass(frozen=True, eq=False)
class PdlGate:
    """Non-unitary phase gate: identity on |u>, phase ``phi`` on |w>.

    ``matrix`` is scaled so its largest singular value is 1, which makes it a
    valid post-selected filter.
    """

    kappa: float
    phi: float
    matrix: np.ndarray


def _raw_gates(kappa: float, phis) -> np.ndarray:
    """Unscaled gates ``|u><u~| + e^{i phi}|w><w~|`` for an array of phases."""
    basis = np.column_stack([u_state(kappa), w_state(kappa)]).astype(complex)
    dual = np.linalg.inv(basis)  # rows are <u~| and <w~|
    phase = np.exp(1j * np.asarray(phis, dtype=float))
    return (
        np.outer(basis[:, 0], dual[0])
        + phase[..., None, None] * np.outer(basis[:, 1], dual[1])
    )


def _normalized_gates(kappa: float, phis) -> np.ndarray:
    raw = _raw_gates(kappa, phis)
    smax = np.linalg.svd(raw, compute_uv=False)[..., 0]
    return raw / smax[..., None, None]


def pdl_gate(kappa: float, phi: float) -> PdlGate:
    kappa = _check_kappa(kappa)
    m = _normalized_gates(kappa, phi)
    m.setflags(write=False)
    return PdlGate(kappa=kappa, phi=float(phi), matrix=m)


@dataclass(frozen=True)
class MeasurementSettings:
    """Gate phases per input bit, stored modulo 2*pi."""

    phases_alice: tuple[float, float]
    phases_bob: tuple[float, float]

    def __post_init__(self):
        for label in ("phases_alice", "phases_bob"):
            vals = tuple(float(x) for x in getattr(self, label))
            if len(vals) != 2 or not all(math.isfinite(x) for x in vals):
                raise QuantumError(f"{label} must be two finite phases")
            object.__setattr__(self, label, tuple(_wrap(x) for x in vals))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (*self.phases_alice, *self.phases_bob)

    @classmethod
    def from_tuple(cls, phases) -> "MeasurementSettings":
        a0, a1, b0, b1 = phases
        return cls((a0, a1), (b0, b1))


def _wrap(x: float) -> float:
    y = math.fmod(x, TWO_PI)
    if y < 0:
        y += TWO_PI
    if y >= TWO_PI - 1e-12:
        y = 0.0
    return y


# -- post-selected statistics -------------------------------------------------

def _joint_counts(rho: np.ndarray, gates_a: np.ndarray, gates_b: np.ndarray) -> np.ndarray:
    """Unnormalized ``<AB|G rho G^dag|AB>`` for every gate pair.

    ``gates_a`` has shape ``(na, 2, 2)``, ``gates_b`` ``(nb, 2, 2)``; returns
    real array ``(na, nb, 2, 2)`` indexed ``[i, j, A, B]``.
    """
    r = rho.reshape(2, 2, 2, 2)
    out = np.einsum(
        "iAx,jBy,xyXY,iAX,jBY->ijAB",
        gates_a, gates_b, r, gates_a.conj(), gates_b.conj(),
        optimize=True,
    )
    return out.real


def postselected_box(
    state: TwoQubitState, gates_alice, gates_bob
) -> tuple[Box, np.ndarray]:
    """Box from explicit per-input gate matrices, plus success rates ``[a, b]``."""
    ga = np.asarray(gates_alice, dtype=complex).reshape(2, 2, 2)
    gb = np.asarray(gates_bob, dtype=complex).reshape(2, 2, 2)
    counts = _joint_counts(state.rho, ga, gb)
    counts = np.clip(counts, 0.0, None)
    rates = counts.sum(axis=(2, 3))
    if (rates < EXTINCTION_TOL).any():
        a, b = map(int, np.argwhere(rates < EXTINCTION_TOL)[0])
        raise DegeneratePostselectionError(
            f"post-selection probability {rates[a, b]:.3e} at setting ({a}, {b})"
        )
    return Box(counts / rates[:, :, None, None]), rates


def quantum_box_with_rates(
    state: TwoQubitState, kappa: float, settings: MeasurementSettings
) -> tuple[Box, np.ndarray]:
    kappa = _check_kappa(kappa)
    ga = _normalized_gates(kappa, settings.phases_alice)
    gb = _normalized_gates(kappa, settings.phases_bob)
    return postselected_box(state, ga, gb)


def quantum_box(state: TwoQubitState, kappa: float, settings: MeasurementSettings) -> Box:
    """Post-selected box of ``state`` measured through lossy phase gates."""
    return quantum_box_with_rates(state, kappa, settings)[0]


def count_mixture_box(
    components: list[tuple[TwoQubitState, float]],
    kappa: float,
    settings: MeasurementSettings,
) -> Box:
    """Mix coincidence counts of several states, then post-select.

    Each component's box is weighted by its prior weight times its own
    post-selection rate for that setting, i.e. the shared-denominator mixture.
    """
    num = np.zeros((2, 2, 2, 2))
    den = np.zeros((2, 2))
    for state, weight in components:
        bx, rates = quantum_box_with_rates(state, kappa, settings)
        num += weight * rates[:, :, None, None] * bx.p
        den += weight * rates
    return Box(num / den[:, :, None, None])


# -- closed-form curve ---------------------------------------------------------

def theta_approx(kappa: float) -> float:
    return math.pi * (17.0 + math.cos(math.pi * kappa)) / 12.0


def theory_S(kappa: float) -> float:
    """Closed-form CHSH value of psi-plus versus loss ``kappa``.

    The expression is 0/0 at ``kappa = 1``; there it is evaluated at
    ``1 - 1e-6`` instead.
    """
    kappa = float(kappa)
    if not (0.0 <= kappa <= 1.0):
        raise QuantumError(f"kappa must lie in [0, 1], got {kappa!r}")
    if kappa == 1.0:
        kappa = 1.0 - 1e-6
    theta = theta_approx(kappa)
    k2 = kappa * kappa
    c1 = math.cos(theta / 2)
    c3 = math.cos(3 * theta / 2)
    return 3 * (k2 - c1) / (2 * (1 - k2 * c1)) - (k2 - c3) / (2 * (1 - k2 * c3)) + 2


# -- setting optimization ------------------------------------------------------

class _Objective:
    """CHSH value as a function of the four phases, for a fixed state and kappa."""

    def __init__(self, state: TwoQubitState, kappa: float):
        self.rho = state.rho
        self.kappa = kappa

    def __call__(self, phases) -> float:
        gates = _normalized_gates(self.kappa, np.asarray(phases, dtype=float))
        counts = _joint_counts(self.rho, gates[:2], gates[2:])
        rates = counts.sum(axis=(2, 3))
        if (rates < EXTINCTION_TOL).any():
            return -math.inf
        p = counts / rates[:, :, None, None]
        return float(
            p[0, 0, 0, 0] + p[0, 0, 1, 1]
            + p[0, 1, 0, 0] + p[0, 1, 1, 1]
            + p[1, 0, 0, 0] + p[1, 0, 1, 1]
            + p[1, 1, 0, 1] + p[1, 1, 1, 0]
        )

    def grid(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """CHSH value over an ``n^4`` phase grid, returned with the grid phases."""
        phis = TWO_PI * np.arange(n) / n
        gates = _normalized_gates(self.kappa, phis)
        counts = _joint_counts(self.rho, gates, gates)
        rates = counts.sum(axis=(2, 3))
        with np.errstate(divide="ignore", invalid="ignore"):
            same = (counts[..., 0, 0] + counts[..., 1, 1]) / rates
            diff = (counts[..., 0, 1] + counts[..., 1, 0]) / rates
        dead = rates < EXTINCTION_TOL
        same[dead] = -math.inf
        diff[dead] = -math.inf
        # S[i0, i1, j0, j1] = same[i0,j0] + same[i0,j1] + same[i1,j0] + diff[i1,j1]
        S = (
            same[:, None, :, None]
            + same[:, None, None, :]
            + same[None, :, :, None]
            + diff[None, :, None, :]
        )
        return S, phis


def _coordinate_descent(f, x0, step: float, max_sweeps: int = 500) -> tuple[np.ndarray, float]:
    x = np.array(x0, dtype=float)
    fx = f(x)
    for _ in range(max_sweeps):
        moved = 0.0
        for i in range(len(x)):
            def line(t, i=i):
                y = x.copy()
                y[i] = t
                return -f(y)

            res = minimize_scalar(
                line, bounds=(x[i] - step, x[i] + step), method="bounded",
                options={"xatol": PHASE_RESOLUTION * 1e-3},
            )
            if -res.fun > fx:
                moved = max(moved, abs(res.x - x[i]))
                x[i] = res.x
                fx = -res.fun
        if moved < PHASE_RESOLUTION:
            break
    return x, fx


def _newton_polish(f, x, fx, h: float = 1e-4, iters: int = 6) -> tuple[np.ndarray, float]:
    """Finite-difference Newton steps; pseudo-inverse handles flat directions."""
    d = len(x)
    eye = np.eye(d) * h
    for _ in range(iters):
        g = np.array([(f(x + e) - f(x - e)) / (2 * h) for e in eye])
        H = np.empty((d, d))
        for i in range(d):
            for j in range(i, d):
                H[i, j] = H[j, i] = (
                    f(x + eye[i] + eye[j]) - f(x + eye[i] - eye[j])
                    - f(x - eye[i] + eye[j]) + f(x - eye[i] - eye[j])
                ) / (4 * h * h)
        step = -np.linalg.pinv(H, rcond=1e-6) @ g
        if not np.all(np.isfinite(step)) or np.abs(step).max() > 1e-2:
            break
        y = x + step
        fy = f(y)
        if fy < fx - 1e-15:
            break
        x, fx = y, max(fx, fy)
        if np.abs(step).max() < 1e-13:
            break
    return x, fx


def _snap(f, x: np.ndarray, fx: float) -> tuple[np.ndarray, float]:
    """Move phases lying within round-off of a multiple of pi/16 onto it.

    Finite-difference polishing leaves flat optima displaced by ~1e-12; a
    snap is kept only if the objective does not drop by more than 1e-14.
    """
    x = x.copy()
    for i in range(len(x)):
        target = round(x[i] / SNAP_UNIT) * SNAP_UNIT
        if target != x[i] and abs(target - x[i]) <= SNAP_RADIUS:
            y = x.copy()
            y[i] = target
            fy = f(y)
            if fy >= fx - 1e-14:
                x, fx = y, max(fx, fy)
    return x, fx


def _canonical(f, x: np.ndarray, fx: float) -> np.ndarray:
    """Apply the joint shift (+d, +d, -d, -d) that zeroes Alice's input-1
    phase, if the objective is invariant under it for this state."""
    d = -x[1]
    shifted = x + np.array([d, d, -d, -d])
    if abs(f(shifted) - fx) <= 1e-12:
        x = shifted
    return np.array([_wrap(v) for v in x])


def _tie_key(x) -> tuple[float, ...]:
    return (x[1], x[0], x[2], x[3])


def optimize_settings(
    state: TwoQubitState, kappa: float, grid_points: int = GRID_POINTS, candidates: int = 6
) -> tuple[MeasurementSettings, float]:
    """Phases maximizing the CHSH value of ``quantum_box(state, kappa, .)``.

    A ``grid_points^4`` grid seeds coordinate descent (phase resolution 1e-6)
    from the best few distinct grid points, followed by a Newton polish and
    a round-off snap onto multiples of pi/16.
    Results within 1e-9 of the best are tied; the tie goes to the
    lexicographically smallest ``(phi_A1, phi_A0, phi_B0, phi_B1)``.
    """
    kappa = _check_kappa(kappa)
    f = _Objective(state, kappa)
    S_grid, phis = f.grid(grid_points)
    if not np.isfinite(S_grid).any():
        raise DegeneratePostselectionError("every grid setting is extinguished")
    flat = np.argsort(-S_grid, axis=None, kind="stable")
    step = TWO_PI / grid_points

    results = []
    starts: list[np.ndarray] = []
    for idx in flat:
        if len(starts) >= candidates:
            break
        x0 = phis[np.array(np.unravel_index(idx, S_grid.shape))]
        if not np.isfinite(S_grid.flat[idx]):
            break
        if any(np.abs(np.angle(np.exp(1j * (x0 - s)))).max() < 1.5 * step for s in starts):
            continue
        starts.append(x0)
    for x0 in starts:
        x, fx = _coordinate_descent(f, x0, step)
        x, fx = _newton_polish(f, x, fx)
        x = _canonical(f, x, fx)
        x, fx = _snap(f, x, f(x))
        results.append((f(x), x))

    best = max(r[0] for r in results)
    tied = [x for S, x in results if S >= best - TIE_TOL]
    x = min(tied, key=_tie_key)
    settings = MeasurementSettings.from_tuple(x)
    return settings, chsh_value(quantum_box(state, kappa, settings))


def best_product_state(
    kappa: float, settings: MeasurementSettings, points: int = 24
) -> tuple[float, tuple[np.ndarray, np.ndarray]]:
    """Coarse search over pure product states at fixed settings (experimental).

    Both Bloch vectors range over a ``points x points`` polar/azimuth grid; the
    post-selected box of a product state factorizes, so each party is tabulated
    once. Returns the best CHSH value and the two Bloch vectors.
    """
    kappa = _check_kappa(kappa)
    theta = np.linspace(0.0, math.pi, points)
    azim = TWO_PI * np.arange(points) / points
    t, ph = np.meshgrid(theta, azim, indexing="ij")
    bloch = np.stack(
        [np.sin(t) * np.cos(ph), np.sin(t) * np.sin(ph), np.cos(t)], axis=-1
    ).reshape(-1, 3)
    rhos = 0.5 * (np.eye(2) + np.einsum("nk,kij->nij", bloch, _PAULI))

    def local_probs(phases):
        g = _normalized_gates(kappa, phases)  # (2, 2, 2)
        c = np.einsum("aAx,nxy,aAy->naA", g, rhos, g.conj()).real
        c = np.clip(c, 0.0, None)
        tot = c.sum(axis=2, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            return c / tot, tot[..., 0]

    pa, ra = local_probs(settings.phases_alice)  # [n, a, A]
    pb, rb = local_probs(settings.phases_bob)  # [m, b, B]
    S = np.zeros((len(bloch), len(bloch)))
    for a in (0, 1):
        for b in (0, 1):
            eq = np.outer(pa[:, a, 0], pb[:, b, 0]) + np.outer(pa[:, a, 1], pb[:, b, 1])
            S += eq if a * b == 0 else 1.0 - eq
    alive = (ra.min(axis=1) >= EXTINCTION_TOL)[:, None] & (rb.min(axis=1) >= EXTINCTION_TOL)[None, :]
    S = np.where(alive & np.isfinite(S), S, -math.inf)
    i, j = np.unravel_index(int(np.argmax(S)), S.shape)
    return float(S[i, j]), (bloch[i], bloch[j])
