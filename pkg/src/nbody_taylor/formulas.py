"""Closed-form third to sixth time derivatives of a solution of ``y'' = f(y)``.

Each derivative is a contraction of partial-derivative tensors of ``f`` with
lower derivatives of ``y``.  The tensors come from nested central finite
differences, so this module shares no code with the series recursion and can
serve as an independent check of it at low order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .forces import ForceModel, accel, collision_floor

MAX_DENSE_DIM = 12


def fd_step(y, l: int) -> float:
    """Step for an ``l``-fold central difference: ``1e-16**(1/(l+2)) * (1 + |y|_inf)``."""
    return 1e-16 ** (1.0 / (l + 2)) * (1.0 + float(np.max(np.abs(y), initial=0.0)))


@dataclass(frozen=True, eq=False)
class DerivativeTensor:
    """``entries[j, k1, ..., kl]`` approximates ``d^l f_j / dy_kl ... dy_k1``."""

    order: int
    entries: np.ndarray

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def contract(self, *vectors) -> np.ndarray:
        """``sum T[j, k1..kl] u1[k1] ... ul[kl]``, vectors listed for ``k1 .. kl``."""
        if len(vectors) != self.order:
            raise ValueError(f"order-{self.order} tensor needs {self.order} vectors")
        out = self.entries
        for u in reversed(vectors):
            out = out @ np.asarray(u, dtype=float)
        return out


def derivative_tensor(
    model: ForceModel, y, l: int, h: float | None = None, richardson: bool = True
) -> DerivativeTensor:
    """All ``l``-th partial derivatives of ``f`` at ``y`` by nested central differences.

    With ``richardson`` the differences at ``h`` and ``h/2`` are combined to
    cancel the leading ``h**2`` error term.
    """
    if not 1 <= l <= 4:
        raise ValueError("tensor order must be between 1 and 4")
    y = np.asarray(y, dtype=float).reshape(-1)
    n = y.size
    if l >= 3 and n > MAX_DENSE_DIM:
        raise ValueError(f"dense order-{l} tensors are limited to {MAX_DENSE_DIM} coordinates")
    if h is None:
        h = fd_step(y, l)
    if richardson:
        coarse = _central_tensor(model, y, l, h)
        fine = _central_tensor(model, y, l, 0.5 * h)
        return DerivativeTensor(l, (4.0 * fine - coarse) / 3.0)
    return DerivativeTensor(l, _central_tensor(model, y, l, h))


def _central_tensor(model, y, l, h):
    n = y.size

    idx = np.array(list(itertools.product(range(n), repeat=l)), dtype=int)  # (n**l, l)
    signs = np.array(list(itertools.product((1.0, -1.0), repeat=l)))  # (2**l, l)
    eye = np.eye(n)
    offsets = np.zeros((idx.shape[0], signs.shape[0], n))
    for i in range(l):
        offsets += signs[None, :, i, None] * eye[idx[:, i]][:, None, :]
    probes = y + h * offsets.reshape(-1, n)

    floor = collision_floor(y) if model.kind == "newtonian" else None
    f = accel(model, probes, floor).reshape(idx.shape[0], signs.shape[0], -1)
    weights = np.prod(signs, axis=1) / (2.0 * h) ** l
    d = np.einsum("tsj,s->tj", f, weights)  # (n**l, m)
    return np.moveaxis(d.reshape((n,) * l + (f.shape[-1],)), -1, 0)


def _tensors(model, y, orders, tensors):
    tensors = dict(tensors or {})
    for l in orders:
        if l not in tensors:
            tensors[l] = derivative_tensor(model, y, l)
    return tensors


def third_derivative(model: ForceModel, y, v, tensors=None) -> np.ndarray:
    t = _tensors(model, y, (1,), tensors)
    return t[1].contract(v)


def fourth_derivative(model: ForceModel, y, v, a, tensors=None) -> np.ndarray:
    t = _tensors(model, y, (1, 2), tensors)
    return t[1].contract(a) + t[2].contract(v, v)


def fifth_derivative(model: ForceModel, y, v, a, y3, tensors=None) -> np.ndarray:
    t = _tensors(model, y, (1, 2, 3), tensors)
    T1, T2, T3 = t[1], t[2], t[3]
    # second-order weights as displayed: 2 v_k2 a_k1 + a_k2 v_k1
    return (
        T1.contract(y3)
        + 2.0 * T2.contract(a, v)
        + T2.contract(v, a)
        + T3.contract(v, v, v)
    )


def sixth_derivative(model: ForceModel, y, v, a, y3, y4, tensors=None) -> np.ndarray:
    t = _tensors(model, y, (1, 2, 3, 4), tensors)
    T1, T2, T3, T4 = t[1], t[2], t[3], t[4]
    # vectors are given in (k1, k2, ...) order
    second = 3.0 * T2.contract(y3, v) + T2.contract(v, y3) + 3.0 * T2.contract(a, a)
    third = (
        3.0 * T3.contract(a, v, v)
        + 2.0 * T3.contract(v, a, v)
        + T3.contract(v, v, a)
    )
    return T1.contract(y4) + second + third + T4.contract(v, v, v, v)


def derivatives_3_to_6(model: ForceModel, y, v) -> dict[int, np.ndarray]:
    """``{3: y''', 4: ..., 6: ...}`` at ``(y, v)``, sharing one set of tensors."""
    y = np.asarray(y, dtype=float).reshape(-1)
    v = np.asarray(v, dtype=float).reshape(-1)
    tensors = _tensors(model, y, (1, 2, 3, 4), None)
    a = accel(model, y)
    y3 = third_derivative(model, y, v, tensors)
    y4 = fourth_derivative(model, y, v, a, tensors)
    y5 = fifth_derivative(model, y, v, a, y3, tensors)
    y6 = sixth_derivative(model, y, v, a, y3, y4, tensors)
    return {3: y3, 4: y4, 5: y5, 6: y6}
