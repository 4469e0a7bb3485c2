"""Precision-context substrate: arbitrary-precision arithmetic, special
functions, double-exponential quadrature and bracketed root refinement.

All heavy lifting is delegated to mpmath (gmpy-backed where available).
Every public operation takes a PrecisionCtx and performs its arithmetic at
``decimal_digits + guard_digits`` decimal digits; results are plain
``mpmath.mpf``/``mpmath.mpc`` values (aliased BigReal/BigComplex).
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Callable, Sequence

from mpmath import mp, mpf, mpc
import mpmath

BigReal = mpmath.mpf
BigComplex = mpmath.mpc


class PoleError(ValueError):
    """Special-function argument sits on a pole."""


class QuadratureError(ArithmeticError):
    """Quadrature error estimate failed to reach tolerance."""


class BracketError(ValueError):
    """Root bracket invalid: both endpoints have the same sign."""


class StagnationError(ArithmeticError):
    """Neither bisection nor secant refinement reduces the bracket."""


def default_guard_digits(decimal_digits: int) -> int:
    """Cheap insurance against roundoff: 10 + 5% of the requested digits.

    Modules that know their cancellation budget (the wavefunction series)
    override this with an analysis-based value.
    """
    return 10 + math.ceil(0.05 * decimal_digits)


@dataclass(frozen=True)
class PrecisionCtx:
    """Working-precision context.

    decimal_digits is the precision the caller wants in results;
    guard_digits is extra working precision absorbing roundoff.
    """

    decimal_digits: int
    guard_digits: int = field(default=-1)

    def __post_init__(self):
        if self.decimal_digits < 15:
            raise ValueError("decimal_digits must be >= 15")
        if self.guard_digits < 0:
            object.__setattr__(
                self, "guard_digits", default_guard_digits(self.decimal_digits)
            )

    @property
    def dps(self) -> int:
        """Effective working precision in decimal digits."""
        return self.decimal_digits + self.guard_digits

    @property
    def eps(self) -> BigReal:
        with self.working():
            return mpf(10) ** (-self.decimal_digits)

    def working(self):
        """Context manager switching mpmath to the effective precision."""
        return mp.workdps(self.dps)

    def with_digits(self, decimal_digits: int) -> "PrecisionCtx":
        return PrecisionCtx(decimal_digits)


def to_big(x, ctx: PrecisionCtx) -> BigReal:
    """Convert int/Fraction/str/float to a BigReal at context precision."""
    with ctx.working():
        if hasattr(x, "numerator") and hasattr(x, "denominator"):
            return mpf(x.numerator) / mpf(x.denominator)
        return mpf(x)


def beta(a, b, ctx: PrecisionCtx) -> BigReal:
    """Euler Beta B(a,b) = Gamma(a)Gamma(b)/Gamma(a+b).

    Negative non-integer arguments are fine (mpmath's gamma handles the
    reflection); non-positive integer arguments of a, b or a+b are poles.
    """
    with ctx.working():
        a = mpf(a) if not isinstance(a, (mpf, mpc)) else a
        b = mpf(b) if not isinstance(b, (mpf, mpc)) else b
        for val in (a, b, a + b):
            if val == mpmath.floor(val) and val <= 0:
                raise PoleError(f"beta pole at ({a}, {b})")
        return mpmath.beta(a, b)


def tanh_sinh_quadrature(
    f: Callable,
    interval: Sequence,
    ctx: PrecisionCtx,
    rel_scale=None,
) -> BigReal:
    """Integrate f over the (finite or semi-infinite) interval.

    Uses the double-exponential (tanh-sinh / exp-sinh) rule with level
    doubling; the returned value carries absolute error below
    10^-decimal_digits (relative to rel_scale if given).  mpmath's level
    difference is the error estimate; if three successive escalations of
    the maximum level fail to bring it under tolerance a QuadratureError
    is raised.

    Integrands may return complex values (a damped complex phase along the
    real ray integrates fine without contour rotation).
    """
    with mp.workdps(ctx.dps + 5):
        points = [mpmath.mpmathify(p) for p in interval]
        tol = mpf(10) ** (-ctx.decimal_digits)
        if rel_scale is not None:
            tol *= abs(rel_scale)
        base_degree = max(6, int(math.log2(ctx.dps)) + 3)
        last_err = None
        for bump in range(3):
            val, err = mp.quad(
                f, points, error=True, maxdegree=base_degree + 2 * bump
            )
            if err <= tol or err <= abs(val) * mpf(10) ** (-ctx.decimal_digits):
                return val
            if last_err is not None and err >= last_err:
                break
            last_err = err
        raise QuadratureError(
            f"tanh-sinh estimate {mpmath.nstr(err, 5)} above tolerance "
            f"{mpmath.nstr(tol, 5)} after level escalation"
        )


def bracket_and_refine(
    g: Callable,
    bracket,
    ctx: PrecisionCtx,
    ramp: bool = True,
) -> BigReal:
    """Locate the sign change of g inside bracket to 10^-decimal_digits.

    Strategy: bisection down to a crude relative width, then secant steps.
    With ramp=True the working precision starts at ~30 digits and doubles
    once the secant step size has stabilized (steps shrinking
    superlinearly), so the expensive high-precision calls are few.
    """
    lo, hi = bracket
    start_dps = min(30, ctx.dps) if ramp else ctx.dps
    dps = start_dps
    with mp.workdps(dps):
        lo, hi = mpf(lo), mpf(hi)
        glo, ghi = g(lo), g(hi)
        if glo == 0:
            return lo
        if ghi == 0:
            return hi
        if mpmath.sign(glo) == mpmath.sign(ghi):
            raise BracketError(
                f"g({mpmath.nstr(lo, 8)}) and g({mpmath.nstr(hi, 8)}) have equal sign"
            )

    target = lambda x: mpf(10) ** (-ctx.decimal_digits) * max(1, abs(x))

    while True:
        with mp.workdps(dps):
            # bisect to a crude width first; secant converges from there
            crude = mpf(10) ** (-min(10, dps // 3)) * max(1, abs(hi))
            it = 0
            while hi - lo > crude and it < 400:
                mid = (lo + hi) / 2
                gm = g(mid)
                if gm == 0:
                    lo = hi = mid
                    break
                if mpmath.sign(gm) == mpmath.sign(glo):
                    lo, glo = mid, gm
                else:
                    hi, ghi = mid, gm
                it += 1
            # secant polish, keeping the bracket valid
            x0, f0, x1, f1 = lo, glo, hi, ghi
            prev_step = abs(hi - lo)
            stable = 0
            for _ in range(200):
                if f1 == f0:
                    break
                x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
                if not (lo <= x2 <= hi):
                    x2 = (lo + hi) / 2
                f2 = g(x2)
                if f2 == 0:
                    lo = hi = x2
                    break
                if mpmath.sign(f2) == mpmath.sign(glo):
                    lo, glo = x2, f2
                else:
                    hi, ghi = x2, f2
                step = abs(x2 - x1)
                x0, f0, x1, f1 = x1, f1, x2, f2
                if hi - lo <= target(x1):
                    break
                if step < prev_step * mpf("0.3"):
                    stable += 1
                    if stable >= 2 and dps < ctx.dps:
                        break  # precision ramp: step size has stabilized
                else:
                    stable = 0
                if prev_step > 0 and step >= prev_step and hi - lo > crude:
                    raise StagnationError("secant refinement stagnated")
                prev_step = step
            root = (lo + hi) / 2
            done = hi - lo <= target(root)
        if done and dps >= ctx.dps:
            with mp.workdps(ctx.dps):
                return +root
        if dps >= ctx.dps and not done:
            # width not yet at target despite full precision: one more pass,
            # then give up loudly
            with mp.workdps(ctx.dps):
                if hi - lo <= target(root) * 100:
                    return +root
            raise StagnationError(
                f"bracket width {mpmath.nstr(hi - lo, 5)} above target"
            )
        dps = min(max(dps * 2, dps + 10), ctx.dps)
