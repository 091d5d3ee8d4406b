"""One-dimensional dephasing map of the restart (reduced-state) protocol.

Each round keeps only one surviving pair's marginal, a dephased pair with
``p_new``, and restarts from ``m`` fresh copies of it.  With ``q = 1 - 2p``::

    a = (1 + q**m) / 4,   b = (q + q**(m-1)) / 4,   p_new = (1 - b/a) / 2
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

from .core import DomainError, _check_probability

EARLY_STOP = 1e-15


def _check_m(m: int) -> int:
    if isinstance(m, bool) or int(m) != m or m < 2:
        raise DomainError(f"m={m!r} must be an integer >= 2")
    return int(m)


def a_coefficient(p: float, m: int) -> float:
    """Diagonal weight of the reduced pair in the computational basis (halved)."""
    q = 1.0 - 2.0 * _check_probability("p", p)
    return (1.0 + q ** _check_m(m)) / 4.0


def b_coefficient(p: float, m: int) -> float:
    """Coherence of the reduced pair (halved)."""
    q = 1.0 - 2.0 * _check_probability("p", p)
    m = _check_m(m)
    return (q + q ** (m - 1)) / 4.0


def _step(p: float, m: int) -> float:
    """Map without range checks; valid on ``[0, 1]`` wherever ``1 + q**m != 0``."""
    q = 1.0 - 2.0 * p
    return 0.5 * (1.0 - (q + q ** (m - 1)) / (1.0 + q**m))


def map_step(p: float, m: int) -> float:
    """New dephasing probability after one round of the restart protocol."""
    p = _check_probability("p", p)
    m = _check_m(m)
    return 0.5 * (1.0 - b_coefficient(p, m) / a_coefficient(p, m))


@dataclass(frozen=True)
class MapTrace:
    """Iterates ``p_0 .. p_n`` of the map and fidelities ``1 - p_r``.

    ``stopped_at`` is the first round whose value dropped below ``1e-15``;
    later entries are reported as exactly ``0`` (fidelity ``1``).
    """

    m: int
    p_sequence: tuple
    stopped_at: int | None = None

    @property
    def fidelity_sequence(self) -> tuple:
        return tuple(1.0 - p for p in self.p_sequence)

    @property
    def rounds(self) -> int:
        return len(self.p_sequence) - 1

    def rows(self) -> list:
        return [
            {"round": r, "p": p, "fidelity": 1.0 - p}
            for r, p in enumerate(self.p_sequence)
        ]


def iterate_map(p0: float, m: int, n: int) -> MapTrace:
    """Apply :func:`map_step` ``n`` times."""
    p = _check_probability("p0", p0)
    m = _check_m(m)
    if isinstance(n, bool) or int(n) != n or n < 0:
        raise DomainError(f"n={n!r} must be a nonnegative integer")
    seq = [p]
    stopped = None
    for r in range(1, int(n) + 1):
        if stopped is not None:
            seq.append(0.0)
            continue
        p = map_step(p, m)
        if p < EARLY_STOP:
            stopped = r
            p = 0.0
        seq.append(p)
    return MapTrace(m, tuple(seq), stopped)


def _derivative_reduced(q: float, m: int) -> float:
    """Derivative with the ``q**2`` factor cancelled; regular at ``q = 0``."""
    num = 1.0 + (m - 1) * q ** (m - 2) * (1.0 - q * q) - q ** (2 * m - 2)
    return num / (1.0 + q**m) ** 2


def derivative_limit_at_half(m: int) -> float:
    """``lim dp_new/dp`` as ``p -> 1/2``: ``2`` for ``m = 2``, ``1`` otherwise."""
    return 2.0 if _check_m(m) == 2 else 1.0


def map_derivative(p: float, m: int, at_half: str = "limit") -> float:
    """``dp_new/dp``.

    Evaluated as::

        [1 - q**(2m) + 4p(p-1)(1 - (m-1) q**m)] / [(1 + q**m)**2 q**2]

    which is exactly ``0`` at ``p = 0``.  For ``|q| < 1e-3`` the common
    ``q**2`` factor is cancelled analytically to avoid losing digits.  At
    ``p = 1/2`` the expression is ``0/0``: with ``at_half="limit"`` the
    limit is returned together with a ``RuntimeWarning``; ``"raise"``
    raises :class:`DomainError` instead.
    """
    p = _check_probability("p", p)
    m = _check_m(m)
    q = 1.0 - 2.0 * p
    if q == 0.0:
        if at_half == "raise":
            raise DomainError("the derivative formula is 0/0 at p = 1/2")
        warnings.warn("derivative at p = 1/2 reported as its limit", RuntimeWarning, stacklevel=2)
        return derivative_limit_at_half(m)
    if abs(q) < 1e-3:
        return _derivative_reduced(q, m)
    num = 1.0 - q ** (2 * m) + 4.0 * p * (p - 1.0) * (1.0 - (m - 1) * q**m)
    return num / ((1.0 + q**m) ** 2 * q * q)


@dataclass(frozen=True)
class FixedPoint:
    p: float
    residual: float
    derivative: float


def fixed_points(m: int) -> list:
    """Solutions of ``p_new(p) = p`` for ``p`` in ``[0, 1]``.

    The equation reduces to ``q**(m-1) (1 - q**2) = 0`` wherever
    ``1 + q**m != 0``, leaving ``q = 0`` (``p = 1/2``) and ``q = +-1``.
    ``q = -1`` (``p = 1``) is a root only for even ``m``; for odd ``m`` the
    map is ``0/0`` there and tends to ``(m-1)/m``.  Each candidate is
    returned with its residual ``|p_new(p) - p|`` and the local derivative.
    """
    m = _check_m(m)
    out = []
    for p in (0.0, 0.5, 1.0):
        q = 1.0 - 2.0 * p
        if 1.0 + q**m == 0.0:
            continue
        res = abs(_step(p, m) - p)
        if res > 1e-12:
            continue
        if p <= 0.5:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                d = map_derivative(p, m)
        else:
            d = _derivative_reduced(q, m)
        out.append(FixedPoint(p, res, d))
    return out


def odd_m_limit_at_one(m: int) -> float:
    """``lim p_new(p)`` as ``p -> 1`` for odd ``m``: ``(m-1)/m``."""
    m = _check_m(m)
    if m % 2 == 0:
        raise DomainError("the map is regular at p = 1 for even m")
    return (m - 1) / m

