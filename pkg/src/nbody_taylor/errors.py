"""Exception types shared across the package."""

from __future__ import annotations


class OrderMismatchError(ValueError):
    """Two series with different truncation orders were combined."""


class NearSingularSeriesError(ArithmeticError):
    """Reciprocal or square root of a series whose leading term is (nearly) zero."""


class CollisionError(RuntimeError):
    """Two bodies came closer than the collision floor under the Newtonian law.

    ``pair`` holds zero-based body indices, ``t`` the time at which the
    encounter was detected (``None`` for a static evaluation).  A symmetry
    run that fails in both time directions also records ``mirror_t``.
    """

    def __init__(
        self,
        pair: tuple[int, int],
        distance: float,
        t: float | None = None,
        mirror_t: float | None = None,
    ):
        self.pair = pair
        self.distance = distance
        self.t = t
        self.mirror_t = mirror_t
        where = "" if t is None else f" at t={t!r}"
        if mirror_t is not None:
            where += f" and t={mirror_t!r}"
        super().__init__(
            f"collision between bodies {pair[0]} and {pair[1]}{where} "
            f"(distance {distance:.3e})"
        )


class InvalidRadiusParameterError(ValueError):
    """Ball radius ``b`` outside the range where a force bound is available."""


class OutOfRangeError(ValueError):
    """Dense output requested outside the integrated span."""


class InvalidModelError(ValueError):
    """Model kind or parameters unsuitable for the requested operation."""


class EvaluationError(ValueError):
    """A probed function returned a non-finite value."""


class SingularExpansionError(CollisionError, NearSingularSeriesError):
    """A Newtonian series expansion was requested about a collision."""
