"""Numerical checks of time-reflection symmetry and of function parity.

A solution started from rest is even in time: ``y(t0 + s) == y(t0 - s)``.
A softened system started with every body at the origin has an odd
solution: ``y(t0 + s) == -y(t0 - s)``.  Both properties are checked twice,
once on the Taylor coefficients at ``t0`` (the odd or the even ones must
vanish) and once on trajectories integrated forward and backward.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import series as ps
from .errors import CollisionError, EvaluationError, InvalidModelError
from .forces import ForceModel, State, accel, jacobian_fd
from .taylor import DEFAULT_TOL, integrate, taylor_coefficients

DEFAULT_SAMPLES = 32
PARITY_RTOL = 1e-10


@dataclass(frozen=True)
class SymmetryReport:
    """Outcome of one even or odd symmetry check.

    ``coeff_defect`` is the largest normalized Taylor coefficient among those
    that should vanish; ``mirror_defect`` the largest normalized trajectory
    mirror residual over ``samples`` values of ``s`` in ``(0, T]``.  The
    velocity and acceleration residuals are recorded but do not enter
    ``passed``.
    """

    kind: str
    coeff_defect: float
    mirror_defect: float
    samples: int
    tolerance: float
    velocity_defect: float = 0.0
    accel_defect: float = 0.0
    span: float = 0.0
    passed: bool = field(init=False)

    def __post_init__(self):
        ok = self.coeff_defect <= self.tolerance and self.mirror_defect <= self.tolerance
        object.__setattr__(self, "passed", bool(ok))

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "coeff_defect": self.coeff_defect,
            "mirror_defect": self.mirror_defect,
            "velocity_defect": self.velocity_defect,
            "accel_defect": self.accel_defect,
            "samples": self.samples,
            "span": self.span,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def coefficient_defect(coeffs: np.ndarray, kind: str) -> float:
    """Largest ``|c_m| / (1 + max|c|)`` over the orders that vanish for ``kind``.

    ``kind="even"`` inspects the odd orders, ``kind="odd"`` the even ones.
    """
    c = np.asarray(coeffs, dtype=float)
    start = 1 if kind == "even" else 0
    vanishing = c[..., start::2]
    if vanishing.size == 0:
        return 0.0
    return float(np.max(np.abs(vanishing)) / (1.0 + np.max(np.abs(c))))


def _mirror_runs(model, state, T, step_tol, K):
    runs, errors = {}, []
    for sign in (1, -1):
        try:
            runs[sign] = integrate(model, state, state.t + sign * T, tol=step_tol, K=K)
        except CollisionError as exc:
            errors.append(exc)
    if errors:
        first = errors[0]
        mirror = errors[1].t if len(errors) > 1 else None
        raise CollisionError(first.pair, first.distance, first.t, mirror) from first
    return runs[1], runs[-1]


def measure_symmetry(
    model: ForceModel,
    state: State,
    T: float,
    kind: str,
    tol: float = 1e-9,
    K: int = ps.DEFAULT_ORDER,
    step_tol: float = DEFAULT_TOL,
    samples: int = DEFAULT_SAMPLES,
) -> SymmetryReport:
    """Measure the ``kind`` symmetry about ``state.t`` for an arbitrary start.

    No initial data are forced, so this also quantifies how badly the
    symmetry fails for starts outside the theorems.
    """
    if kind not in ("even", "odd"):
        raise ValueError("kind must be 'even' or 'odd'")
    if not T > 0:
        raise ValueError("span T must be positive")
    series = taylor_coefficients(model, state.positions, state.velocities, K, t0=state.t)
    coeff = coefficient_defect(series.coeffs, kind)

    fwd, bwd = _mirror_runs(model, state, T, step_tol, K)
    sgn = 1.0 if kind == "even" else -1.0
    mirror = vel = acc = 0.0
    for s in T * np.arange(1, samples + 1) / samples:
        a = fwd(state.t + s)
        b = bwd(state.t - s)
        scale = 1.0 + np.max(np.abs(a.positions))
        mirror = max(mirror, np.max(np.abs(a.positions - sgn * b.positions)) / scale)
        vel = max(vel, np.max(np.abs(a.velocities + sgn * b.velocities))
                  / (1.0 + np.max(np.abs(a.velocities))))
        fa = accel(model, a.positions)
        fb = accel(model, b.positions)
        acc = max(acc, np.max(np.abs(fa - sgn * fb)) / (1.0 + np.max(np.abs(fa))))
    return SymmetryReport(
        kind, coeff, float(mirror), samples, tol, float(vel), float(acc), float(T)
    )


def verify_even(
    model: ForceModel,
    y0,
    T: float,
    tol: float = 1e-9,
    K: int = ps.DEFAULT_ORDER,
    step_tol: float = DEFAULT_TOL,
    samples: int = DEFAULT_SAMPLES,
) -> SymmetryReport:
    """Check that the solution started at rest from ``y0`` is even in time."""
    y0 = np.asarray(y0, dtype=float).reshape(-1)
    state = State(0.0, y0, np.zeros_like(y0))
    return measure_symmetry(model, state, T, "even", tol, K, step_tol, samples)


def verify_odd(
    model: ForceModel,
    eta,
    T: float,
    tol: float = 1e-9,
    K: int = ps.DEFAULT_ORDER,
    step_tol: float = DEFAULT_TOL,
    samples: int = DEFAULT_SAMPLES,
) -> SymmetryReport:
    """Check that the solution started at the origin with velocities ``eta`` is odd.

    Newtonian gravity is rejected since every pair starts in collision.  The
    pendulum is accepted: its force is odd and analytic at the origin.
    """
    if model.kind not in ("softened", "pendulum"):
        raise InvalidModelError(
            f"odd-solution check needs a softened or pendulum model, got {model.kind!r}"
        )
    eta = np.asarray(eta, dtype=float).reshape(-1)
    state = State(0.0, np.zeros_like(eta), eta)
    return measure_symmetry(model, state, T, "odd", tol, K, step_tol, samples)


# ---------------------------------------------------------------------------
# parity of functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParityVerdict:
    """Sampled parity of a scalar function in the vector and strict senses.

    Each ``*_defects`` dict maps ``"even"`` and ``"odd"`` to the largest
    residual seen for that hypothesis.
    """

    vector_sense: str
    strict_sense: str
    vector_defects: dict
    strict_defects: dict
    threshold: float


def _classify(defects: dict, threshold: float) -> str:
    if defects["even"] <= threshold:
        return "even"
    if defects["odd"] <= threshold:
        return "odd"
    return "neither"


def _evaluate(H, y) -> float:
    value = float(H(y))
    if not np.isfinite(value):
        raise EvaluationError(f"non-finite value {value!r} at y={y.tolist()!r}")
    return value


def parity_probe(H, dim: int, samples: int = 200, box: float = 1.0, seed: int = 0) -> ParityVerdict:
    """Classify ``H`` by sampling uniform points of ``[-box, box]**dim``.

    The vector sense compares ``H(-y)`` with ``H(y)``; the strict sense flips
    one coordinate at a time.
    """
    rng = np.random.default_rng(seed)
    ys = rng.uniform(-box, box, size=(samples, dim))
    vec = {"even": 0.0, "odd": 0.0}
    strict = {"even": 0.0, "odd": 0.0}
    hmax = 0.0
    for y in ys:
        h = _evaluate(H, y)
        hm = _evaluate(H, -y)
        hmax = max(hmax, abs(h), abs(hm))
        vec["even"] = max(vec["even"], abs(hm - h))
        vec["odd"] = max(vec["odd"], abs(hm + h))
        for j in range(dim):
            flipped = y.copy()
            flipped[j] = -flipped[j]
            hj = _evaluate(H, flipped)
            hmax = max(hmax, abs(hj))
            strict["even"] = max(strict["even"], abs(hj - h))
            strict["odd"] = max(strict["odd"], abs(hj + h))
    threshold = PARITY_RTOL * (1.0 + hmax)
    return ParityVerdict(
        _classify(vec, threshold), _classify(strict, threshold), vec, strict, threshold
    )


def lemma5_check(model: ForceModel, samples: int = 100, box: float = 1.0, seed: int = 0) -> float:
    """Largest ``|J(y) - J(-y)| / (1 + |J(y)|_inf)`` over random ``y``.

    For an odd force the Jacobian is even, so the result should be at the
    finite-difference noise level.  Samples that hit the collision floor of
    a Newtonian model are redrawn.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    taken = 0
    while taken < samples:
        y = rng.uniform(-box, box, size=model.dim)
        try:
            jp = jacobian_fd(model, y)
            jm = jacobian_fd(model, -y)
        except CollisionError:
            continue
        worst = max(worst, float(np.max(np.abs(jp - jm)) / (1.0 + np.max(np.abs(jp)))))
        taken += 1
    return worst
