"""Special functions evaluated through Mellin-Barnes contour quadrature.

Provides complex log-gamma, the lower incomplete gamma function, the
Pochhammer symbol, Meijer's G-function, and the extended generalized
bivariate Fox H-function (a double Mellin-Barnes integral with one gamma
factor coupling the two integration variables).  The contour integrals are
computed by trapezoidal quadrature on truncated vertical lines; a result is
accepted once two successive refinement rounds (doubled truncation, halved
step) agree, and the disagreement of the last two rounds is reported as the
error estimate.

Parameter degeneracies where an upper and a lower parameter differ by an
integer are handled by evaluating at +/- a small perturbation of the upper
parameter and averaging (bias is O(perturbation^2) by continuity).

All functions here are pure; they can be called concurrently from any number
of threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import digamma

from ._backend import kernels

__all__ = [
    "SpecfunError", "DomainError", "PoleError", "ContourError",
    "SeparationError", "NonConvergenceError", "BudgetError",
    "ContourPolicy", "ContourEval", "MeijerGSpec", "EGBFHFSpec",
    "log_gamma_complex", "lower_incomplete_gamma",
    "regularized_lower_incomplete_gamma", "pochhammer", "build_delta",
    "meijer_g", "egbfhf", "egbfhf_batch",
]


class SpecfunError(Exception):
    """Base class for special-function evaluation failures."""


class DomainError(SpecfunError, ValueError):
    """Argument outside the supported domain."""


class PoleError(SpecfunError, ValueError):
    """Evaluation at (or within 1e-12 of) a gamma-function pole."""


class ContourError(SpecfunError):
    """Base class for contour-quadrature failures."""


class SeparationError(ContourError):
    """No admissible separating contour exists, even after perturbation."""


class NonConvergenceError(ContourError):
    """Successive refinement rounds failed to agree within tolerance."""


class BudgetError(ContourError):
    """A nested quadrature grid would exceed the configured point limit."""


class ContourEval(NamedTuple):
    """Converged contour-integral value with refinement-based error estimate."""
    value: float
    err: float
    rounds: int


@dataclass(frozen=True)
class ContourPolicy:
    """Controls truncation, step, perturbation and refinement of contours.

    truncation: half-height T of the truncated vertical contour.
    step: trapezoid step h; T/h must be an integer >= 100.
    perturb: parameter perturbation used for degenerate parameter pairs.
    max_rounds: refinement rounds (each doubles T and halves h) tried after
        the initial evaluation before giving up.
    max_nested_points: cap on the full bivariate grid size per round.
    """

    truncation: float = 60.0
    step: float = 0.05
    perturb: float = 1e-6
    max_rounds: int = 4
    max_nested_points: int = 300_000_000

    def __post_init__(self):
        if not (self.truncation > 0 and self.step > 0):
            raise DomainError("truncation and step must be positive")
        ratio = self.truncation / self.step
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 100:
            raise DomainError("truncation/step must be an integer >= 100")
        if not (0 < self.perturb < 1e-4):
            raise DomainError("perturbation must lie in (0, 1e-4)")
        if self.max_rounds < 1:
            raise DomainError("max_rounds must be >= 1")

    def grid(self, round_: int) -> tuple[float, int]:
        """(step, half-point-count) for refinement round `round_`."""
        h = self.step / 2**round_
        n = int(round(self.truncation / self.step)) * 4**round_
        return h, n


DEFAULT_POLICY = ContourPolicy()


@dataclass(frozen=True)
class MeijerGSpec:
    """Orders and parameters of one Meijer G-function G^{m,n}_{p,q}.

    `a` are the p upper parameters, `b` the q lower ones; the first n upper
    and first m lower parameters contribute numerator gammas of the
    Mellin-Barnes integrand, the rest denominator gammas.
    """

    m: int
    n: int
    a: tuple[float, ...]
    b: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        object.__setattr__(self, "b", tuple(float(v) for v in self.b))
        if not (0 <= self.n <= self.p and 0 <= self.m <= self.q):
            raise DomainError("require 0 <= n <= p and 0 <= m <= q")
        if not all(math.isfinite(v) for v in self.a + self.b):
            raise DomainError("parameters must be finite")

    @property
    def p(self) -> int:
        return len(self.a)

    @property
    def q(self) -> int:
        return len(self.b)

    @property
    def decay(self) -> float:
        """Exponential decay rate (in units of pi/2) of the integrand."""
        return self.m + self.n - 0.5 * (self.p + self.q)


@dataclass(frozen=True)
class EGBFHFSpec:
    """Parameters of the bivariate H-function used for the rate cross terms.

    Three blocks: an outer block whose gammas couple both Mellin variables
    (entries are (value, (weight_s, weight_t))), and two inner blocks with
    single-variable gammas (entries (value, weight)).  The first n1 outer
    upper entries appear as numerator gammas Gamma(1 - a + w_s s + w_t t);
    remaining outer entries go to the denominator (no outer lower-parameter
    numerator gammas are supported, matching the signature class
    H^{1,0:*,*:*,*}_{1,0:*,*:*,*} needed here).  Inner blocks follow the
    usual H-function convention with orders (m2, n2) and (m3, n3).
    """

    outer_upper: tuple[tuple[float, tuple[float, float]], ...]
    outer_lower: tuple[tuple[float, tuple[float, float]], ...]
    n1: int
    x_upper: tuple[tuple[float, float], ...]
    x_lower: tuple[tuple[float, float], ...]
    m2: int
    n2: int
    y_upper: tuple[tuple[float, float], ...]
    y_lower: tuple[tuple[float, float], ...]
    m3: int
    n3: int

    def __post_init__(self):
        if not (0 <= self.n1 <= self.p1 and 0 <= self.m2 <= self.q2
                and 0 <= self.n2 <= self.p2 and 0 <= self.m3 <= self.q3
                and 0 <= self.n3 <= self.p3):
            raise DomainError("order indices out of range")
        for value, ws in self.outer_upper + self.outer_lower:
            if not (math.isfinite(value) and ws[0] > 0 and ws[1] > 0):
                raise DomainError("outer weights must be positive and finite")
        for value, w in self.x_upper + self.x_lower + self.y_upper + self.y_lower:
            if not (math.isfinite(value) and w > 0):
                raise DomainError("inner weights must be positive and finite")

    # order indices per block; the outer block has no lower numerator gammas
    @property
    def m1(self) -> int:
        return 0

    @property
    def p1(self) -> int:
        return len(self.outer_upper)

    @property
    def q1(self) -> int:
        return len(self.outer_lower)

    @property
    def p2(self) -> int:
        return len(self.x_upper)

    @property
    def q2(self) -> int:
        return len(self.x_lower)

    @property
    def p3(self) -> int:
        return len(self.y_upper)

    @property
    def q3(self) -> int:
        return len(self.y_lower)


# --------------------------------------------------------------------------
# scalar special functions
# --------------------------------------------------------------------------

def _near_nonpositive_integer(z: complex, tol: float = 1e-12) -> bool:
    r = round(z.real)
    return r <= 0 and abs(z.real - r) <= tol and abs(z.imag) <= tol


def log_gamma_complex(z) -> complex:
    """Principal-branch log Gamma(z), continuous off the negative real axis."""
    z = complex(z)
    if _near_nonpositive_integer(z):
        raise PoleError(f"log-gamma pole at z = {z}")
    return complex(kernels.lgamma_cplx(z))


def lower_incomplete_gamma(s: float, x: float) -> float:
    """Unnormalised lower incomplete gamma integral from 0 to x of t^(s-1) e^-t.

    Power series below the switch-over x = s + 1, continued fraction of the
    upper-tail complement above it; 1e-14 term-ratio stopping rule.
    """
    if s <= 0:
        raise DomainError(f"require s > 0, got {s}")
    if x < 0:
        raise DomainError(f"require x >= 0, got {x}")
    if x == 0.0:
        return 0.0
    if x < s + 1.0:
        return math.exp(-x + s * math.log(x)) * _gamma_series_sum(s, x)
    q = _upper_gamma_cf_regularized(s, x)
    return math.exp(math.lgamma(s)) * (1.0 - q)


def regularized_lower_incomplete_gamma(s: float, x: float) -> float:
    """P(s, x), the unit-normalised lower incomplete gamma."""
    if s <= 0:
        raise DomainError(f"require s > 0, got {s}")
    if x < 0:
        raise DomainError(f"require x >= 0, got {x}")
    if x == 0.0:
        return 0.0
    if x < s + 1.0:
        return math.exp(-x + s * math.log(x) - math.lgamma(s)) * _gamma_series_sum(s, x)
    return 1.0 - _upper_gamma_cf_regularized(s, x)


def _gamma_series_sum(s: float, x: float) -> float:
    # sum_{k>=0} x^k / (s (s+1) ... (s+k))
    term = 1.0 / s
    total = term
    sk = s
    for _ in range(10_000):
        sk += 1.0
        term *= x / sk
        total += term
        if abs(term) < abs(total) * 1e-14:
            return total
    raise RuntimeError("incomplete-gamma series failed to converge")


def _upper_gamma_cf_regularized(s: float, x: float) -> float:
    # modified Lentz on the classical continued fraction for Q(s, x)
    tiny = 1e-300
    b = x + 1.0 - s
    c = 1.0 / tiny
    d = 1.0 / b if b != 0.0 else 1.0 / tiny
    hval = d
    for i in range(1, 10_000):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        hval *= delta
        if abs(delta - 1.0) < 1e-14:
            return math.exp(-x + s * math.log(x) - math.lgamma(s)) * hval
    raise RuntimeError("incomplete-gamma continued fraction failed to converge")


def pochhammer(x: float, y: float) -> float:
    """Rising factorial Gamma(x + y) / Gamma(x), computed in log space."""
    if y == 0.0:
        return 1.0
    lg_top = log_gamma_complex(x + y)
    lg_bot = log_gamma_complex(x)
    value = np.exp(complex(lg_top) - complex(lg_bot))
    return float(value.real)


def build_delta(x: int, y: float) -> list[float]:
    """Arithmetic sequence (y + k)/x for k = 0..x-1."""
    if not (isinstance(x, (int, np.integer)) and x >= 1):
        raise DomainError(f"require a positive integer count, got {x}")
    return [(y + k) / x for k in range(int(x))]


# --------------------------------------------------------------------------
# contour assembly helpers
# --------------------------------------------------------------------------

def _translate_block(upper, lower, m, n):
    """Gamma factors of one H/G block as (offset, weight, sign) triplets.

    Each factor is Gamma(offset + weight * s), with sign +1 in the numerator
    and -1 in the denominator.
    """
    c0, w, sgn = [], [], []
    for j, (b, wb) in enumerate(lower):
        if j < m:
            c0.append(b); w.append(-wb); sgn.append(1.0)
        else:
            c0.append(1.0 - b); w.append(wb); sgn.append(-1.0)
    for k, (a, wa) in enumerate(upper):
        if k < n:
            c0.append(1.0 - a); w.append(wa); sgn.append(1.0)
        else:
            c0.append(a); w.append(-wa); sgn.append(-1.0)
    return (np.array(c0, float), np.array(w, float), np.array(sgn, float))


def _strip_bounds(upper, lower, m, n):
    """Open strip (left, right) admissible for the contour of one block."""
    left = -math.inf
    for k in range(n):
        a, wa = upper[k]
        left = max(left, (a - 1.0) / wa)
    right = math.inf
    for j in range(m):
        b, wb = lower[j]
        right = min(right, b / wb)
    return left, right


def _flag_degenerate(upper, lower, m, n):
    """Indices of active upper parameters in integer-distance conflict."""
    flagged = set()
    for k in range(n):
        a, wa = upper[k]
        for j in range(m):
            b, wb = lower[j]
            if abs(wa - wb) < 1e-12:
                d = (a - b) / wa
                if abs(d - round(d)) < 1e-9:
                    flagged.add(k)
    return flagged


def _perturb_upper(upper, flagged, eps):
    return tuple((a + (eps if k in flagged else 0.0), wa)
                 for k, (a, wa) in enumerate(upper))


def _choose_contour(upper, lower, m, n, lnz):
    """Contour abscissa: strip midpoint, or integrand saddle when the strip
    is half-infinite (the midpoint is undefined there)."""
    left, right = _strip_bounds(upper, lower, m, n)
    if left >= right - 1e-12:
        raise SeparationError(
            f"no separating contour: admissible strip ({left}, {right}) is empty")
    if math.isfinite(left) and math.isfinite(right):
        return 0.5 * (left + right)
    c0, w, sgn = _translate_block(upper, lower, m, n)

    def dlog_mod(c):
        return float(np.sum(sgn * w * digamma(c0 + w * c))) + lnz

    margin = 1e-6
    if math.isinf(left) and math.isinf(right):
        return 0.0
    if math.isinf(left):
        hi = right - margin
        lo = right - 1.0
        for _ in range(80):
            if dlog_mod(lo) < 0:
                break
            lo = right - 2.0 * (right - lo)
        else:
            return right - 0.5
        if dlog_mod(hi) <= 0:
            return right - 0.5
        return brentq(dlog_mod, lo, hi, xtol=1e-9)
    # left finite, right infinite: mirror search
    lo = left + margin
    hi = left + 1.0
    for _ in range(80):
        if dlog_mod(hi) > 0:
            break
        hi = left + 2.0 * (hi - left)
    else:
        return left + 0.5
    if dlog_mod(lo) >= 0:
        return left + 0.5
    return brentq(dlog_mod, lo, hi, xtol=1e-9)


def _refine(rounds_eval, policy, rtol, atol, what):
    prev = None
    for r in range(policy.max_rounds + 1):
        cur = rounds_eval(r)
        if not math.isfinite(cur):
            raise NonConvergenceError(f"{what}: non-finite value at round {r}")
        if prev is not None:
            delta = abs(cur - prev)
            if delta <= max(rtol * abs(cur), atol):
                return ContourEval(cur, delta, r)
        prev = cur
    raise NonConvergenceError(
        f"{what}: refinement rounds disagree beyond tolerance "
        f"(last two: {prev}, change {delta})")


# --------------------------------------------------------------------------
# Meijer G
# --------------------------------------------------------------------------

def meijer_g(spec: MeijerGSpec, z: float, policy: ContourPolicy = DEFAULT_POLICY,
             rtol: float = 1e-8, atol: float = 1e-12) -> ContourEval:
    """Meijer G-function of a positive real argument.

    Trapezoidal quadrature along a vertical contour separating the two pole
    families; refinement per `policy`.  Raises SeparationError when no
    admissible contour exists, NonConvergenceError when refinement stalls.
    """
    if not (z > 0 and math.isfinite(z)):
        raise DomainError(f"require z > 0, got {z}")
    if spec.decay <= 0:
        raise SeparationError(
            f"integrand does not decay on vertical contours (m+n-(p+q)/2 = {spec.decay})")
    lnz = math.log(z)
    upper = tuple((v, 1.0) for v in spec.a)
    lower = tuple((v, 1.0) for v in spec.b)
    flagged = _flag_degenerate(upper, lower, spec.m, spec.n)
    variants = []
    for eps in ((policy.perturb, -policy.perturb) if flagged else (0.0,)):
        up = _perturb_upper(upper, flagged, eps)
        c = _choose_contour(up, lower, spec.m, spec.n, lnz)
        variants.append((_translate_block(up, lower, spec.m, spec.n), c))

    def eval_round(r):
        h, npts = policy.grid(r)
        acc = 0.0
        for (c0, w, sgn), c in variants:
            acc += kernels.g_contour_total(c0, w, sgn, c, lnz, h, npts)
        return acc / len(variants)

    return _refine(eval_round, policy, rtol, atol, "meijer_g")


# --------------------------------------------------------------------------
# bivariate H
# --------------------------------------------------------------------------

_MATERIALIZE_CAP = 8_000_000  # half-grid entries worth caching as a dense array


def _outer_arrays(spec: EGBFHFSpec):
    num_c0, num_wx, num_wy = [], [], []
    den_c0, den_wx, den_wy = [], [], []
    for k, (a, (wx, wy)) in enumerate(spec.outer_upper):
        if k < spec.n1:
            num_c0.append(1.0 - a); num_wx.append(wx); num_wy.append(wy)
        else:
            den_c0.append(a); den_wx.append(-wx); den_wy.append(-wy)
    for (b, (wx, wy)) in spec.outer_lower:
        den_c0.append(1.0 - b); den_wx.append(wx); den_wy.append(wy)
    return (np.array(num_c0), np.array(num_wx), np.array(num_wy),
            np.array(den_c0), np.array(den_wx), np.array(den_wy))


@lru_cache(maxsize=3)
def _h_grid_cached(spec: EGBFHFSpec, cs: float, ct: float, h: float, ns: int, nt: int):
    outer = _outer_arrays(spec)
    return kernels.h_grid_build(*outer, cs, ct, h, ns, nt)


def _inner_vector(upper, lower, m, n, c, h, npts, lnarg, weighted_half):
    """Inner-block integrand samples along the contour.

    weighted_half=False: full grid with trapezoid end weights (s axis).
    weighted_half=True: the Im >= 0 half, unweighted (t axis; row weights
    are applied inside the contraction).
    """
    c0, w, sgn = _translate_block(upper, lower, m, n)
    if weighted_half:
        t = np.arange(0, npts + 1) * h
    else:
        t = np.arange(-npts, npts + 1) * h
    s = c + 1j * t
    lg = np.zeros_like(s)
    for k in range(len(c0)):
        term = kernels.lgamma_cplx(c0[k] + w[k] * s)
        lg = lg + term if sgn[k] > 0 else lg - term
    vec = np.exp(lg + s * lnarg)
    if not weighted_half:
        vec[0] *= 0.5
        vec[-1] *= 0.5
    return vec


def _h_contours(spec: EGBFHFSpec, lnx: float, lny: float):
    cs = _choose_contour(spec.x_upper, spec.x_lower, spec.m2, spec.n2, lnx)
    t_left, t_right = _strip_bounds(spec.y_upper, spec.y_lower, spec.m3, spec.n3)
    # outer numerator gammas need Re(offset + wx*cs + wy*ct) > 0
    for k in range(spec.n1):
        a, (wx, wy) = spec.outer_upper[k]
        t_left = max(t_left, (a - 1.0 - wx * cs) / wy)
    if t_left >= t_right - 1e-12:
        raise SeparationError(
            f"no admissible t-contour: strip ({t_left}, {t_right}) empty after "
            "outer-parameter constraints")
    if math.isinf(t_left) or math.isinf(t_right):
        ct = _choose_contour(spec.y_upper, spec.y_lower, spec.m3, spec.n3, lny)
        if ct <= t_left:
            ct = t_left + 0.5
    else:
        ct = 0.5 * (t_left + t_right)
    return cs, ct


def egbfhf_batch(spec: EGBFHFSpec, pairs: Sequence[tuple[float, float]],
                 policy: ContourPolicy = DEFAULT_POLICY,
                 rtol: float = 1e-8, atol: float = 1e-12) -> list[ContourEval]:
    """Evaluate one bivariate H-function spec at many (x, y) argument pairs.

    The coupling-gamma grid depends only on the spec and contours, so
    batching amortises the dominant cost across the argument pairs.
    """
    for (x, y) in pairs:
        if not (x > 0 and y > 0 and math.isfinite(x) and math.isfinite(y)):
            raise DomainError(f"require positive finite arguments, got {(x, y)}")
    nb = len(pairs)
    if nb == 0:
        return []
    lnx = np.log([x for x, _ in pairs])
    lny = np.log([y for _, y in pairs])
    cs, ct = _h_contours(spec, float(np.max(lnx)), float(np.max(lny)))

    flag_x = _flag_degenerate(spec.x_upper, spec.x_lower, spec.m2, spec.n2)
    flag_y = _flag_degenerate(spec.y_upper, spec.y_lower, spec.m3, spec.n3)
    if flag_x or flag_y:
        eps_list = (policy.perturb, -policy.perturb)
    else:
        eps_list = (0.0,)
    outer = _outer_arrays(spec)

    def eval_round(r):
        h, npts = policy.grid(r)
        full_points = (2 * npts + 1) ** 2
        if full_points > policy.max_nested_points:
            raise BudgetError(
                f"nested grid of {full_points} points exceeds the budget "
                f"({policy.max_nested_points}) at round {r}")
        acc = np.zeros(nb)
        for eps in eps_list:
            xu = _perturb_upper(spec.x_upper, flag_x, eps)
            yu = _perturb_upper(spec.y_upper, flag_y, eps)
            U = np.empty((2 * npts + 1, nb), dtype=np.complex128)
            Vh = np.empty((npts + 1, nb), dtype=np.complex128)
            for b in range(nb):
                U[:, b] = _inner_vector(xu, spec.x_lower, spec.m2, spec.n2,
                                        cs, h, npts, lnx[b], weighted_half=False)
                Vh[:, b] = _inner_vector(yu, spec.y_lower, spec.m3, spec.n3,
                                         ct, h, npts, lny[b], weighted_half=True)
            if (npts + 1) * (2 * npts + 1) <= _MATERIALIZE_CAP:
                grid = _h_grid_cached(spec, cs, ct, h, npts, npts)
                acc += kernels.h_grid_apply(grid, U, Vh, h)
            else:
                acc += kernels.h_contour_total_batch(*outer, cs, ct, h, npts, npts, U, Vh)
        return acc / len(eps_list)

    prev = None
    results: list[ContourEval | None] = [None] * nb
    for r in range(policy.max_rounds + 1):
        cur = eval_round(r)
        if not np.all(np.isfinite(cur)):
            raise NonConvergenceError(f"egbfhf: non-finite value at round {r}")
        if prev is not None:
            delta = np.abs(cur - prev)
            ok = delta <= np.maximum(rtol * np.abs(cur), atol)
            for b in range(nb):
                if results[b] is None and ok[b]:
                    results[b] = ContourEval(float(cur[b]), float(delta[b]), r)
            if all(res is not None for res in results):
                return results  # type: ignore[return-value]
        prev = cur
    bad = [b for b, res in enumerate(results) if res is None]
    raise NonConvergenceError(
        f"egbfhf: pairs {bad} did not converge within {policy.max_rounds} refinement rounds")


def egbfhf(spec: EGBFHFSpec, x: float, y: float,
           policy: ContourPolicy = DEFAULT_POLICY,
           rtol: float = 1e-8, atol: float = 1e-12) -> ContourEval:
    """Extended generalized bivariate Fox H-function at one argument pair."""
    return egbfhf_batch(spec, [(x, y)], policy, rtol, atol)[0]
