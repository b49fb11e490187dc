"""Force laws for ``y'' = f(y)``: Newtonian and softened gravity, the pendulum.

Positions of ``N`` bodies are handled either as an ``(N, 3)`` array or as the
flat ``3N`` vector ``[x1, y1, z1, x2, ...]``; every evaluator accepts extra
leading batch axes.  Pair sums run over a fixed index order so results are
reproducible bit for bit, and the laws are evaluated so that ``f(-y)`` is the
exact floating point negation of ``f(y)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import CollisionError, InvalidModelError

KINDS = ("newtonian", "softened", "pendulum", "custom")

#: collision floor as a fraction of the characteristic length
COLLISION_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class BodySystem:
    """Masses, gravitational constant and optional pair softening lengths."""

    masses: np.ndarray
    G: float = 1.0
    softening: Optional[np.ndarray] = None

    def __post_init__(self):
        m = np.array(self.masses, dtype=float).reshape(-1)
        if m.size == 0 or not np.all(m > 0) or not np.all(np.isfinite(m)):
            raise InvalidModelError("masses must be positive and finite")
        if not (self.G > 0 and np.isfinite(self.G)):
            raise InvalidModelError("G must be positive")
        m.setflags(write=False)
        object.__setattr__(self, "masses", m)
        object.__setattr__(self, "G", float(self.G))
        if self.softening is not None:
            eps = np.asarray(self.softening, dtype=float)
            n = m.size
            if eps.ndim == 0:
                eps = np.full((n, n), float(eps))
            if eps.shape != (n, n):
                raise InvalidModelError(f"softening matrix must be {n}x{n}")
            off = ~np.eye(n, dtype=bool)
            if not np.array_equal(eps, eps.T):
                raise InvalidModelError("softening matrix must be symmetric")
            if not np.all(eps[off] > 0) or not np.all(np.isfinite(eps[off])):
                raise InvalidModelError("softening lengths must be positive")
            eps = eps.copy()
            # diagonal is never used; keep it harmless for vectorised kernels
            np.fill_diagonal(eps, 1.0)
            eps.setflags(write=False)
            object.__setattr__(self, "softening", eps)

    @property
    def n_bodies(self) -> int:
        return self.masses.size


@dataclass(frozen=True, eq=False)
class ForceModel:
    """A right-hand side ``f`` of ``y'' = f(y)``.

    ``kind`` is one of ``newtonian``, ``softened``, ``pendulum`` or ``custom``
    (an arbitrary vectorised callable, used for probing parity arguments).
    """

    kind: str
    system: Optional[BodySystem] = None
    func: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)
    custom_dim: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidModelError(f"unknown model kind {self.kind!r}")
        if self.kind in ("newtonian", "softened") and self.system is None:
            raise InvalidModelError(f"{self.kind} model needs a BodySystem")
        if self.kind == "softened" and self.system.softening is None:
            raise InvalidModelError("softened model needs a softening matrix")
        if self.kind == "custom" and (self.func is None or self.custom_dim < 1):
            raise InvalidModelError("custom model needs func and custom_dim")

    @classmethod
    def newtonian(cls, masses, G=1.0) -> ForceModel:
        return cls("newtonian", BodySystem(masses, G))

    @classmethod
    def softened(cls, masses, softening, G=1.0) -> ForceModel:
        return cls("softened", BodySystem(masses, G, softening))

    @classmethod
    def pendulum(cls) -> ForceModel:
        return cls("pendulum")

    @classmethod
    def from_function(cls, func, dim: int) -> ForceModel:
        return cls("custom", func=func, custom_dim=dim)

    @property
    def is_gravity(self) -> bool:
        return self.kind in ("newtonian", "softened")

    @property
    def n_bodies(self) -> int:
        return self.system.n_bodies if self.is_gravity else 1

    @property
    def dim(self) -> int:
        if self.is_gravity:
            return 3 * self.system.n_bodies
        if self.kind == "pendulum":
            return 1
        return self.custom_dim

    def accel(self, y, floor: float | None = None) -> np.ndarray:
        """``f(y)`` for a flat coordinate vector (or a batch of them)."""
        return accel(self, y, floor)


@dataclass(frozen=True, eq=False)
class State:
    """Phase point: flat positions and velocities at time ``t``."""

    t: float
    positions: np.ndarray
    velocities: np.ndarray

    def __post_init__(self):
        y = np.array(self.positions, dtype=float).reshape(-1)
        v = np.array(self.velocities, dtype=float).reshape(-1)
        if y.shape != v.shape:
            raise ValueError("positions and velocities differ in length")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(v)) and np.isfinite(self.t)):
            raise ValueError("state components must be finite")
        y.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "positions", y)
        object.__setattr__(self, "velocities", v)
        object.__setattr__(self, "t", float(self.t))


# ---------------------------------------------------------------------------
# geometry helpers
# ---------------------------------------------------------------------------

def as_bodies(y, n_bodies: int | None = None) -> np.ndarray:
    """View coordinates as ``(..., N, 3)``.

    A 1-D array is read as one flat configuration; a higher-rank array is
    taken to be body-shaped already unless ``n_bodies`` says otherwise.
    """
    y = np.asarray(y, dtype=float)
    if n_bodies is not None:
        return y.reshape(y.shape[:-1] + (n_bodies, 3))
    if y.ndim == 1:
        return y.reshape(-1, 3)
    if y.shape[-1] != 3:
        raise ValueError(f"cannot read shape {y.shape} as body positions")
    return y


def pair_separations(pos) -> np.ndarray:
    """``out[..., k, j, :] = y_j - y_k``."""
    p = as_bodies(pos)
    return p[..., None, :, :] - p[..., :, None, :]


def pairwise_distances(pos) -> np.ndarray:
    return np.sqrt(np.sum(pair_separations(pos) ** 2, axis=-1))


def min_pair_distance(pos) -> tuple[float, tuple[int, int]]:
    """Smallest separation of a single configuration and the pair attaining it."""
    p = as_bodies(pos)
    n = p.shape[-2]
    if n < 2:
        return np.inf, (0, 0)
    r = pairwise_distances(p)
    iu = np.triu_indices(n, 1)
    rr = r[iu]
    i = int(np.argmin(rr))
    return float(rr[i]), (int(iu[0][i]), int(iu[1][i]))


def characteristic_length(pos) -> float:
    """Largest pairwise distance of a configuration (0 for one body)."""
    p = as_bodies(pos)
    if p.shape[-2] < 2:
        return 0.0
    return float(np.max(pairwise_distances(p)))


def collision_floor(pos) -> float:
    return COLLISION_RTOL * characteristic_length(pos)


# ---------------------------------------------------------------------------
# force laws
# ---------------------------------------------------------------------------

def _check_collisions(p: np.ndarray, floor=None) -> np.ndarray:
    r = pairwise_distances(p)
    n = p.shape[-2]
    if floor is None:
        floor = COLLISION_RTOL * np.max(r, axis=(-2, -1), keepdims=True)
    off = ~np.eye(n, dtype=bool)
    hit = (r < floor) & off
    if np.any(hit):
        idx = np.argwhere(hit)[0]
        k, j = int(idx[-2]), int(idx[-1])
        raise CollisionError((min(k, j), max(k, j)), float(r[tuple(idx)]))
    return r


def newtonian_accel(model: ForceModel, positions, floor: float | None = None) -> np.ndarray:
    """Accelerations ``(..., N, 3)`` under the inverse-square law.

    Raises :class:`CollisionError` when any pairwise distance is below
    ``floor`` (default: the collision floor of the configuration itself).
    """
    sys_ = model.system
    p = as_bodies(positions)
    n = p.shape[-2]
    if n == 1:
        return np.zeros_like(p)
    r = _check_collisions(p, floor)
    d = pair_separations(p)
    r = np.where(np.eye(n, dtype=bool), np.inf, r)
    w = sys_.G * sys_.masses / r**3
    return np.sum(w[..., None] * d, axis=-2)


def softened_accel(model: ForceModel, positions) -> np.ndarray:
    """Accelerations ``(..., N, 3)`` with ``|y_k - y_j| + eps(j, k)`` in the denominator."""
    sys_ = model.system
    p = as_bodies(positions)
    d = pair_separations(p)
    r = np.sqrt(np.sum(d**2, axis=-1))
    w = sys_.G * sys_.masses / (r + sys_.softening) ** 3
    # diagonal: d == 0 there, so its weight never contributes
    return np.sum(w[..., None] * d, axis=-2)


def pendulum_accel(y):
    return -np.sin(y)


def accel(model: ForceModel, y, floor: float | None = None) -> np.ndarray:
    """``f(y)`` on flat coordinates ``(..., n)``."""
    y = np.asarray(y, dtype=float)
    if model.kind == "pendulum":
        return pendulum_accel(y)
    if model.kind == "custom":
        return np.asarray(model.func(y), dtype=float)
    p = as_bodies(y, model.n_bodies)
    if model.kind == "newtonian":
        a = newtonian_accel(model, p, floor)
    else:
        a = softened_accel(model, p)
    return a.reshape(y.shape)


def accel_bound(model: ForceModel) -> float:
    """``N * G * max(m) * max(1 / eps**2)`` over pairs; 0 for a single body.

    The factor is ``N`` even though each body feels ``N - 1`` pair forces,
    which leaves some slack in the bound.
    """
    sys_ = model.system
    if sys_ is None or sys_.softening is None:
        raise InvalidModelError("acceleration bound needs a softened model")
    n = sys_.n_bodies
    if n < 2:
        return 0.0
    off = ~np.eye(n, dtype=bool)
    inv_eps2 = np.max(1.0 / sys_.softening[off] ** 2)
    return n * sys_.G * float(np.max(sys_.masses)) * float(inv_eps2)


def pair_potential(model: ForceModel, r, eps=None):
    """Potential energy of one unit-``G m_j m_k`` pair at separation ``r``.

    Softened: ``-[1/(r+eps) - eps / (2 (r+eps)**2)]``, whose radial derivative
    is ``r / (r+eps)**3``, the magnitude of the softened pair attraction.
    """
    r = np.asarray(r, dtype=float)
    if eps is None:
        return -1.0 / r
    s = r + eps
    return -(1.0 / s - eps / (2.0 * s * s))


def total_energy(model: ForceModel, state: State) -> float:
    """Kinetic plus potential energy of a state."""
    y = state.positions
    v = state.velocities
    if model.kind == "pendulum":
        return float(np.sum(0.5 * v**2 - np.cos(y)))
    if not model.is_gravity:
        raise InvalidModelError("energy is defined for gravity and the pendulum only")
    sys_ = model.system
    m = sys_.masses
    vb = as_bodies(v)
    kinetic = 0.5 * float(np.sum(m * np.sum(vb**2, axis=-1)))
    n = sys_.n_bodies
    if n < 2:
        return kinetic
    p = as_bodies(y)
    if model.kind == "newtonian":
        r = _check_collisions(p)
    else:
        r = pairwise_distances(p)
    iu = np.triu_indices(n, 1)
    mm = sys_.G * m[iu[0]] * m[iu[1]]
    rr = r[iu]
    if model.kind == "newtonian":
        pot = mm * pair_potential(model, rr)
    else:
        pot = mm * pair_potential(model, rr, sys_.softening[iu])
    return kinetic + float(np.sum(pot))


def default_fd_step(y) -> float:
    return 1e-5 * (1.0 + float(np.max(np.abs(y), initial=0.0)))


def jacobian_fd(model: ForceModel, y, h: float | None = None, floor: float | None = None) -> np.ndarray:
    """Central-difference Jacobian ``J[j, k] ~ d f_j / d y_k``."""
    y = np.asarray(y, dtype=float).reshape(-1)
    n = y.size
    if h is None:
        h = default_fd_step(y)
    if model.kind == "newtonian" and floor is None:
        floor = collision_floor(y)
    probes = np.concatenate([y + h * np.eye(n), y - h * np.eye(n)])
    f = accel(model, probes, floor)
    return ((f[:n] - f[n:]) / (2.0 * h)).T
