"""Taylor-series integration of ``y'' = f(y)``.

The coefficients of ``y(t0 + dt)`` are generated order by order: once
``y_0 .. y_m`` are known, the ``m``-th coefficient of ``f(y(t))`` follows from
series arithmetic on the pair separations, and ``y_{m+2}`` from
``(m+1)(m+2) y_{m+2} = f_m``.  Steps are chosen from the decay of the last two
coefficients and capped by the guaranteed convergence radius ``sqrt(2b/M)``.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from . import series as ps
from .errors import (
    CollisionError,
    InvalidModelError,
    InvalidRadiusParameterError,
    OutOfRangeError,
    SingularExpansionError,
)
from .forces import (
    ForceModel,
    State,
    accel_bound,
    as_bodies,
    characteristic_length,
    collision_floor,
    min_pair_distance,
    pairwise_distances,
)

DEFAULT_TOL = 1e-10
SAFETY = 0.8
TAIL_FLOOR = 1e-300
#: a softened pair closer than this fraction of its softening length is
#: expanded as an exact coincidence
COINCIDENCE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class SeriesState:
    """Taylor coefficients of every coordinate about ``t0``.

    ``coeffs[i, k]`` is ``y_i^(k)(t0) / k!``; ``direction`` records which side
    of ``t0`` the expansion is valid on when the solution is not analytic at
    ``t0`` (a softened pair in exact coincidence).
    """

    t0: float
    coeffs: np.ndarray
    direction: int = 1

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def order(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def dim(self) -> int:
        return self.coeffs.shape[0]

    def coord(self, i: int) -> ps.PowerSeries:
        return ps.PowerSeries(self.coeffs[i])

    def position(self, dt: float) -> np.ndarray:
        return ps.horner(self.coeffs, dt)

    def velocity(self, dt: float) -> np.ndarray:
        return ps.horner(ps.derivative(self.coeffs), dt)

    def derivatives(self, m: int) -> np.ndarray:
        """``y^(m)(t0)``."""
        return self.coeffs[:, m] * math.factorial(m)


# ---------------------------------------------------------------------------
# coefficient recursion
# ---------------------------------------------------------------------------

def taylor_coefficients(
    model: ForceModel,
    y0,
    v0,
    K: int = ps.DEFAULT_ORDER,
    *,
    t0: float = 0.0,
    direction: int = 1,
    floor: float | None = None,
) -> SeriesState:
    """Taylor coefficients of the solution through ``(y0, v0)`` up to order ``K``.

    For the Newtonian law ``floor`` is the collision distance (default: the
    collision floor of ``y0``); a closer pair raises :class:`CollisionError`.
    """
    if K < 2:
        raise ValueError("order must be at least 2")
    y0 = np.asarray(y0, dtype=float).reshape(-1)
    v0 = np.asarray(v0, dtype=float).reshape(-1)
    if y0.size != model.dim or v0.size != model.dim:
        raise ValueError(f"expected {model.dim} coordinates")
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    if model.kind == "pendulum":
        c = _pendulum_coeffs(y0, v0, K)
    elif model.is_gravity:
        c = _gravity_coeffs(model, y0, v0, K, direction, floor)
    else:
        raise InvalidModelError(f"no series recursion for model kind {model.kind!r}")
    return SeriesState(t0, c, direction)


def _pendulum_coeffs(y0, v0, K):
    y = np.zeros((y0.size, K + 1))
    y[:, 0] = y0
    y[:, 1] = v0
    sn = np.zeros_like(y)
    cs = np.zeros_like(y)
    sn[:, 0] = np.sin(y0)
    cs[:, 0] = np.cos(y0)
    for m in range(K - 1):
        if m > 0:
            sn[:, m], cs[:, m] = ps.sincos_term(y, sn, cs, m)
        y[:, m + 2] = -sn[:, m] / ((m + 1) * (m + 2))
    return y


def _gravity_coeffs(model, y0, v0, K, direction, floor):
    sys_ = model.system
    n = sys_.n_bodies
    Y = np.zeros((n, 3, K + 1))
    Y[:, :, 0] = y0.reshape(n, 3)
    Y[:, :, 1] = v0.reshape(n, 3)
    if n == 1:
        return Y.reshape(3, K + 1)

    I, J = np.triu_indices(n, 1)
    npair = I.size
    m_ = sys_.masses
    # accel_k += G m_j g_kj, accel_j -= G m_k g_kj for g_kj = d_kj / |d_kj|**3
    incidence = np.zeros((n, npair))
    incidence[I, np.arange(npair)] = sys_.G * m_[J]
    incidence[J, np.arange(npair)] = -sys_.G * m_[I]

    D = np.zeros((npair, 3, K + 1))
    D[:, :, :2] = Y[J, :, :2] - Y[I, :, :2]
    r0 = np.sqrt(np.sum(D[:, :, 0] ** 2, axis=1))

    softened = model.kind == "softened"
    if softened:
        eps = sys_.softening[I, J]
        coincident = r0 <= COINCIDENCE_RTOL * eps
    else:
        if floor is None:
            floor = collision_floor(y0)
        close = r0 < floor
        if np.any(close):
            p = int(np.argmax(close))
            raise SingularExpansionError((int(I[p]), int(J[p])), float(r0[p]))
        eps = np.zeros(npair)
        coincident = np.zeros(npair, dtype=bool)

    # a coincident pair moving apart has |d(t)| = |t| * sqrt(d.d / t**2); the
    # sign of the branch follows the integration direction.  A coincident pair
    # with no relative velocity feels identical fields and never separates.
    vscale = float(np.max(np.abs(v0), initial=0.0))
    r1 = np.sqrt(np.sum(D[:, :, 1] ** 2, axis=1))
    merged = coincident & (r1 <= COINCIDENCE_RTOL * vscale)
    branch = np.flatnonzero(coincident & ~merged)
    regular = np.flatnonzero(~coincident)

    Q = np.zeros((npair, K + 1))  # d . d
    S = np.zeros((npair, K + 1))  # |d|
    Pb = np.zeros((branch.size, K + 1))  # |d| / t on branch pairs
    W = np.zeros((npair, K + 1))  # |d| + eps
    W2 = np.zeros((npair, K + 1))
    W3 = np.zeros((npair, K + 1))
    U = np.zeros((npair, K + 1))  # 1 / W3

    Dr = D[regular]
    for m in range(K - 1):
        if m >= 2:
            D[:, :, m] = Y[J, :, m] - Y[I, :, m]
            Dr = D[regular]
        if regular.size:
            Q[regular, m] = (Dr[:, :, : m + 1] * Dr[:, :, m::-1]).sum(axis=(1, 2))
            if m == 0:
                S[regular, 0] = np.sqrt(Q[regular, 0])
            else:
                S[regular, m] = ps.sqrt_term(Q[regular, m], S[regular], m)
        if branch.size and m >= 1:
            Db = D[branch]
            qt = (Db[:, :, 1 : m + 1] * Db[:, :, m:0:-1]).sum(axis=(1, 2))
            j = m - 1
            Pb[:, j] = np.sqrt(qt) if j == 0 else ps.sqrt_term(qt, Pb, j)
            S[branch, m] = direction * Pb[:, j]

        W[:, m] = S[:, m] + (eps if m == 0 else 0.0)
        W2[:, m] = ps.cauchy_term(W, W, m)
        W3[:, m] = ps.cauchy_term(W2, W, m)
        U[:, m] = 1.0 / W3[:, 0] if m == 0 else ps.recip_term(W3, U, m)

        g = (D[:, :, : m + 1] * U[:, None, m::-1]).sum(axis=2)
        if merged.any():
            g[merged] = 0.0
        Y[:, :, m + 2] = (incidence @ g) / ((m + 1) * (m + 2))

    return Y.reshape(3 * n, K + 1)


# ---------------------------------------------------------------------------
# step control
# ---------------------------------------------------------------------------

def default_radius_parameter(model: ForceModel, y0) -> float:
    """Ball radius ``b`` used when none is given."""
    if model.kind == "newtonian":
        r, _ = min_pair_distance(y0)
        return 0.25 * r if np.isfinite(r) else 1.0
    if model.kind == "softened":
        L = characteristic_length(y0)
        if L > 0:
            return L
        n = model.system.n_bodies
        off = ~np.eye(n, dtype=bool)
        return float(np.max(model.system.softening[off])) if n > 1 else 1.0
    return 1.0


def force_bound(model: ForceModel, y0, b: float) -> float:
    """Upper bound ``M`` of ``|f|`` on the ball ``|y - y0| <= b``.

    Gravity bounds are per body: every separation can shrink by at most ``2b``.
    """
    if not (b > 0 and np.isfinite(b)):
        raise InvalidRadiusParameterError(f"ball radius must be positive, got {b!r}")
    if model.kind == "pendulum":
        return 1.0
    if model.kind == "softened":
        return accel_bound(model)
    if model.kind != "newtonian":
        raise InvalidModelError(f"no force bound for model kind {model.kind!r}")
    sys_ = model.system
    n = sys_.n_bodies
    if n < 2:
        return 0.0
    r = pairwise_distances(as_bodies(np.asarray(y0, dtype=float).reshape(-1)))
    off = ~np.eye(n, dtype=bool)
    rmin = float(np.min(r[off]))
    if not b < 0.5 * rmin:
        raise InvalidRadiusParameterError(
            f"ball radius {b!r} must be below half the closest separation ({0.5 * rmin!r})"
        )
    worst = np.where(off, r - 2.0 * b, np.inf)
    return float(np.max(np.sum(sys_.G * sys_.masses / worst**2, axis=1)))


def radius_estimate(model: ForceModel, y0, b: float | None = None) -> float:
    """Guaranteed existence radius ``sqrt(2b/M)`` (``inf`` for a force-free system)."""
    if b is None:
        b = default_radius_parameter(model, y0)
    M = force_bound(model, y0, b)
    if M == 0:
        return math.inf
    return math.sqrt(2.0 * b / M)


def encounter_radius(model: ForceModel, series: SeriesState) -> float:
    """Distance from ``t0`` to the nearest complex zero of any pair's ``d . d``.

    ``|d(t)|`` has branch points where ``d(t) . d(t)`` vanishes, so these
    zeros bound the convergence radius of the solution series; they are
    located on the quadratic approximation ``d0 + d1 dt + d2 dt**2``.  Pairs
    in exact coincidence at ``t0`` contribute the zeros of ``d . d / dt**2``.
    """
    if not model.is_gravity or model.n_bodies < 2:
        return math.inf
    n = model.n_bodies
    c = series.coeffs[:, :3].reshape(n, 3, 3)
    I, J = np.triu_indices(n, 1)
    d = c[J] - c[I]  # (pair, xyz, order)
    q = np.zeros((I.size, 5))
    for i in range(3):
        for j in range(3):
            q[:, i + j] += np.sum(d[:, :, i] * d[:, :, j], axis=1)
    scale = np.max(np.abs(q), axis=1)
    best = math.inf
    for row, s in zip(q, scale):
        if s == 0.0:
            continue
        if abs(row[0]) <= (COINCIDENCE_RTOL**2) * s and abs(row[1]) <= COINCIDENCE_RTOL * s:
            row = row[2:]
        poly = np.trim_zeros(row[::-1], "f")
        if poly.size < 2:
            continue
        roots = np.roots(poly)
        if roots.size:
            best = min(best, float(np.min(np.abs(roots))))
    return best


def _tail_magnitude(series: SeriesState) -> float:
    K = series.order
    return max(float(np.max(np.abs(series.coeffs[:, K - 1 :]))), TAIL_FLOOR)


def tail_step(series: SeriesState, tol: float) -> float:
    """Largest ``h`` with ``A * h**K <= tol``, ``A`` the larger of the last two coefficients."""
    K = series.order
    return (tol / _tail_magnitude(series)) ** (1.0 / K)


def step_size(series: SeriesState, tol: float, radius_cap: float) -> float:
    """Step length from the size of the two highest coefficients.

    Both the position tail ``A h**K`` and the velocity tail ``K A h**(K-1)``
    (the derivative series loses one power of ``h``) are kept below ``tol``;
    the result never exceeds ``0.8 * radius_cap``.
    """
    K = series.order
    if K < 8:
        raise ValueError("step control needs order >= 8")
    if not (tol > 0 and radius_cap > 0):
        raise ValueError("tol and radius_cap must be positive")
    A = _tail_magnitude(series)
    h_pos = (tol / A) ** (1.0 / K)
    h_vel = (tol / (K * A)) ** (1.0 / (K - 1))
    return min(SAFETY * radius_cap, h_pos, h_vel)


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TrajectorySegment:
    series: SeriesState
    h: float
    direction: int

    @property
    def t0(self) -> float:
        return self.series.t0

    @property
    def t1(self) -> float:
        return self.series.t0 + self.direction * self.h


@dataclass(eq=False)
class Trajectory:
    """Abutting Taylor segments from ``t_start`` to ``t_end``."""

    model: ForceModel
    segments: list = field(default_factory=list)
    t_start: float = 0.0
    t_end: float = 0.0
    direction: int = 1

    def __post_init__(self):
        self._keys = [self.direction * s.t0 for s in self.segments]

    def _append(self, seg: TrajectorySegment):
        self.segments.append(seg)
        self._keys.append(self.direction * seg.t0)

    def __len__(self):
        return len(self.segments)

    @property
    def joints(self) -> list[float]:
        return [s.t0 for s in self.segments[1:]]

    def covers(self, t: float) -> bool:
        lo, hi = sorted((self.t_start, self.t_end))
        return lo <= t <= hi

    def segment_at(self, t: float) -> TrajectorySegment:
        if not self.covers(t):
            raise OutOfRangeError(
                f"t={t!r} outside trajectory span [{self.t_start!r}, {self.t_end!r}]"
            )
        i = bisect.bisect_right(self._keys, self.direction * t) - 1
        return self.segments[min(max(i, 0), len(self.segments) - 1)]

    def __call__(self, t: float) -> State:
        return dense_eval(self, t)

    def sample(self, times) -> tuple[np.ndarray, np.ndarray]:
        """Positions and velocities at each of ``times`` (shape ``(len, n)``)."""
        pos, vel = [], []
        for t in times:
            s = dense_eval(self, t)
            pos.append(s.positions)
            vel.append(s.velocities)
        return np.array(pos), np.array(vel)

    @property
    def final(self) -> State:
        return dense_eval(self, self.t_end)


def dense_eval(traj: Trajectory, t: float) -> State:
    seg = traj.segment_at(t)
    dt = t - seg.t0
    return State(t, seg.series.position(dt), seg.series.velocity(dt))


def _screen(model, series, dt, floor, t0):
    for frac in (0.5, 1.0):
        pos = series.position(frac * dt)
        r, pair = min_pair_distance(pos)
        if r < floor:
            raise CollisionError(pair, r, t0 + frac * dt)


def integrate(
    model: ForceModel,
    initial: State,
    t_end: float,
    tol: float = DEFAULT_TOL,
    K: int = ps.DEFAULT_ORDER,
    b: float | None = None,
    max_steps: int = 1_000_000,
) -> Trajectory:
    """Integrate from ``initial`` to ``t_end`` (either direction).

    Each step re-expands about the state reached by the previous one.  With
    ``b=None`` the ball radius for the step cap is re-derived at every step;
    a Newtonian ``b`` is never allowed to exceed a quarter of the current
    closest separation.
    """
    if not (ps.MIN_ORDER <= K <= ps.MAX_ORDER):
        raise ValueError(f"order must lie in [{ps.MIN_ORDER}, {ps.MAX_ORDER}]")
    t = initial.t
    direction = 1 if t_end >= t else -1
    traj = Trajectory(model, [], t, float(t_end), direction)
    y = np.array(initial.positions)
    v = np.array(initial.velocities)
    newtonian = model.kind == "newtonian"
    floor = collision_floor(y) if newtonian else None

    steps = 0
    while True:
        try:
            series = taylor_coefficients(
                model, y, v, K, t0=t, direction=direction, floor=floor
            )
        except CollisionError as exc:
            raise CollisionError(exc.pair, exc.distance, t) from None
        remaining = abs(t_end - t)
        if remaining == 0.0:
            traj._append(TrajectorySegment(series, 0.0, direction))
            break
        if b is None:
            b_step = default_radius_parameter(model, y)
        elif newtonian:
            b_step = min(b, default_radius_parameter(model, y))
        else:
            b_step = b
        cap = min(radius_estimate(model, y, b_step), encounter_radius(model, series))
        h = step_size(series, tol, cap)
        last = h >= remaining
        if last:
            h = remaining
        dt = direction * h
        if newtonian:
            _screen(model, series, dt, floor, t)
        traj._append(TrajectorySegment(series, h, direction))
        if last:
            break
        t_next = t + dt
        if t_next == t:
            raise RuntimeError(f"step size underflow at t={t!r}")
        y = series.position(dt)
        v = series.velocity(dt)
        t = t_next
        steps += 1
        if steps >= max_steps:
            raise RuntimeError(f"step limit {max_steps} reached at t={t!r}")
    return traj
