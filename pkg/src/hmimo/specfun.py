"""Special functions backing the closed-form radiated-power series.

Everything here is real-valued and pure.  Bessel and Beta evaluations are
delegated to scipy; the generalized hypergeometric series 1F2 is evaluated
by direct term recursion with explicit truncation control, because its
convergence status must be reported to the caller (the radiated-power
series propagates it).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special as _sp


@dataclass(frozen=True)
class SeriesControl:
    """Truncation policy for series evaluations.

    rel_tol is the largest acceptable relative contribution of the last
    added term; max_terms caps the number of terms before the evaluation
    is declared non-convergent.
    """

    rel_tol: float = 1e-12
    max_terms: int = 200

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")


class SeriesConvergenceError(ArithmeticError):
    """Series did not converge within max_terms.

    Carries the partial sum and the number of terms that were evaluated so
    callers can decide whether the partial value is still usable.
    """

    def __init__(self, message, partial, terms):
        super().__init__(message)
        self.partial = partial
        self.terms = terms


def bessel_j(n: int, x: float) -> float:
    """Bessel function of the first kind J_n(x) for integer order n >= 0."""
    if n < 0 or int(n) != n:
        raise ValueError("order n must be a non-negative integer")
    if not np.isfinite(x):
        raise ValueError("argument must be finite")
    return float(_sp.jv(int(n), x))


def beta_fn(m: float, n: float) -> float:
    """Euler Beta function B(m, n) = Gamma(m)Gamma(n)/Gamma(m+n), m, n > 0.

    Evaluated in log space so that large arguments do not overflow.
    """
    if m <= 0 or n <= 0:
        raise ValueError("beta_fn arguments must be positive")
    return float(np.exp(_sp.gammaln(m) + _sp.gammaln(n) - _sp.gammaln(m + n)))


def hyp1f2(a1: float, b1: float, b2: float, z: float,
           ctrl: SeriesControl = SeriesControl()) -> float:
    """Generalized hypergeometric function 1F2(a1; b1, b2; z).

    Uses the standard rising-factorial (Pochhammer) convention,

        1F2 = sum_k (a1)_k z^k / [(b1)_k (b2)_k k!],

    evaluated by term recursion.  Raises SeriesConvergenceError when the
    terms have not dropped below ctrl.rel_tol relative contribution within
    ctrl.max_terms terms.
    """
    for b in (b1, b2):
        if b <= 0 and float(b).is_integer():
            raise ValueError("lower parameters must not be non-positive integers")
    total = 1.0
    term = 1.0
    for k in range(ctrl.max_terms):
        term *= (a1 + k) * z / ((b1 + k) * (b2 + k) * (k + 1))
        total += term
        if abs(term) <= ctrl.rel_tol * max(abs(total), np.finfo(float).tiny):
            return total
    raise SeriesConvergenceError(
        f"1F2 series did not converge in {ctrl.max_terms} terms (z={z})",
        partial=total, terms=ctrl.max_terms)


def sinc_k(x):
    """sin(x)/x with the removable singularity sinc_k(0) = 1.

    Accepts scalars or arrays.  Note this is the unnormalized sinc; numpy's
    np.sinc carries an extra factor of pi in the argument.
    """
    return np.sinc(np.asarray(x) / np.pi)
