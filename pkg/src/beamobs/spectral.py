"""Spectral problem of a pinned-pinned beam carrying a mass-spring body.

The beam occupies [0, l] with linear density rho and bending stiffness EI;
a body of mass m hangs from the point x = l0 through a spring of stiffness
kappa.  Separation of variables turns the coupled PDE/ODE system into a
fourth-order two-point problem for the deflection shape W:

    W'''' = omega^2 (rho / EI) W          on (0, l0) and (l0, l),
    W(0) = W(l) = W''(0) = W''(l) = 0,
    W, W', W'' continuous at l0,
    W'''(l0-) - W'''(l0+) = ((kappa - omega^2 m) / EI) W(l0),

with omega = mu^2 sqrt(EI / rho).  On each side of the attachment point the
shape is a combination of sin and sinh (the boundary conditions kill cos and
cosh), so four coefficients and the four matching conditions at l0 give a
4x4 homogeneous system; its determinant is the characteristic function whose
positive roots mu_1 < mu_2 < ... are computed here.

Numerical notes
---------------
* ``char_fn`` evaluates the textbook form and overflows for mu*l beyond
  roughly 700 because of sinh/cosh.  ``char_fn_scaled`` multiplies by
  4 mu^2 exp(-mu l) exp(-mu |l - 2 l0|), which keeps every intermediate
  bounded; all root finding uses the scaled form.
* Hyperbolic basis functions are stored exponent-scaled (see :class:`Mode`),
  so eigenfunction evaluation never forms a bare sinh either.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate
from scipy.linalg import qr

from .errors import (
    AccuracyError,
    AmbiguityError,
    DegenerateModeError,
    DegenerateSpectrumError,
    DomainError,
    NotAnEigenvalueError,
    NumericRangeError,
    ParameterError,
    SearchRangeError,
)

__all__ = [
    "BeamParams",
    "Mode",
    "char_fn",
    "char_fn_scaled",
    "find_modes",
    "solve_eigenfunction",
    "eval_mode",
    "inner_product",
    "gram_matrix",
]

# scan starts just above zero; mu = 0 is never an eigenvalue
SCAN_START = 1e-6
# scaled characteristic residual accepted at a returned root
CHAR_RESIDUAL_TOL = 1e-9
# matching-system residual accepted for eigenfunction coefficients
MATCHING_RESIDUAL_TOL = 1e-8
# sigma_min/sigma_max above this means mu is not a characteristic root
_RANK_TOL = 1e-6
# sigma_2/sigma_max below this means a null space of dimension >= 2
_DEGENERATE_TOL = 1e-8


@dataclass(frozen=True)
class BeamParams:
    """Physical constants of the beam-body plant.

    rho     linear mass density of the beam (kg/m)
    EI      bending stiffness (N m^2)
    m       attached body mass (kg)
    kappa   spring stiffness (N/m)
    length  beam length l (m)
    attach  attachment abscissa l0, strictly inside (0, l)
    """

    rho: float
    EI: float
    m: float
    kappa: float
    length: float
    attach: float

    def __post_init__(self):
        for name in ("rho", "EI", "length"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ParameterError("%s must be finite and positive, got %r" % (name, v))
        for name in ("m", "kappa"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v >= 0):
                raise ParameterError("%s must be finite and nonnegative, got %r" % (name, v))
        if not 0.0 < self.attach < self.length:
            raise ParameterError(
                "attach must lie strictly inside (0, length), got %r" % (self.attach,)
            )

    def omega_of_mu(self, mu):
        """Angular frequency omega = mu^2 sqrt(EI / rho)."""
        return mu * mu * math.sqrt(self.EI / self.rho)


@dataclass(frozen=True)
class Mode:
    """One eigenpair of the beam-body spectral problem.

    The eigenfunction is

        W(x) = a1 sin(mu x)        + b1 sinh(mu x)          on [0, l0],
        W(x) = a2 sin(mu (l - x))  + b2 sinh(mu (l - x))    on [l0, l].

    The hyperbolic coefficients are stored exponent-scaled,

        b1s = b1 exp(mu l0),   b2s = b2 exp(mu (l - l0)),

    paired with the bounded basis sinh(mu x) exp(-mu l0) (and its mirror),
    so evaluation stays inside double range for any mu.  Coefficients are
    normalized so the largest-magnitude plain coefficient equals one.
    ``norm_sq`` is <W, W> in the weighted space (see :func:`inner_product`).
    """

    index: int
    mu: float
    omega: float
    a1: float
    b1s: float
    a2: float
    b2s: float
    norm_sq: float
    params: BeamParams

    @property
    def coeffs_left(self):
        """(a1, b1) against the plain sin/sinh basis on [0, l0]."""
        return self.a1, self.b1s * math.exp(-self.mu * self.params.attach)

    @property
    def coeffs_right(self):
        """(a2, b2) against the plain basis in (l - x) on [l0, l]."""
        d = self.params.length - self.params.attach
        return self.a2, self.b2s * math.exp(-self.mu * d)


def _check_mu(mu):
    mu = np.asarray(mu, dtype=float)
    if mu.size == 0:
        raise ParameterError("mu must be nonempty")
    if np.any(~np.isfinite(mu)) or np.any(mu <= 0.0):
        raise ParameterError("mu must be finite and positive")
    return mu


def char_fn(mu, params):
    """Characteristic function Delta(mu) of the beam-body spectral problem.

    Three groups: a mass group with prefactor m / (4 mu rho), the bare-beam
    term -sin(mu l) sinh(mu l) / mu^2, and a spring group with prefactor
    kappa / (4 EI mu^5).  Both bracketed groups are built from the same two
    differences (cosh mu g - cosh mu l) and (cos mu g - cos mu l) with
    g = |l - 2 l0|, because the attachment enters the matching system only
    through the single jump coefficient (kappa - omega^2 m).

    Accepts a scalar or array mu > 0.  Raises :class:`NumericRangeError`
    once sinh/cosh overflow (mu*l beyond ~700); use :func:`char_fn_scaled`
    there.
    """
    mu = _check_mu(mu)
    l = params.length
    g = abs(l - 2.0 * params.attach)
    with np.errstate(over="ignore", invalid="ignore"):
        sl, cl = np.sin(mu * l), np.cos(mu * l)
        shl, chl = np.sinh(mu * l), np.cosh(mu * l)
        cg, chg = np.cos(mu * g), np.cosh(mu * g)
        mass_group = params.m / (4.0 * mu * params.rho) * ((chg - chl) * sl + (cg - cl) * shl)
        spring_group = (
            params.kappa / (4.0 * params.EI * mu**5) * ((chl - chg) * sl - (cg - cl) * shl)
        )
        out = mass_group - sl * shl / mu**2 + spring_group
    if not np.all(np.isfinite(out)):
        raise NumericRangeError(
            "characteristic function overflowed double range; use char_fn_scaled"
        )
    return float(out) if out.ndim == 0 else out


def char_fn_scaled(mu, params):
    """char_fn times 4 mu^2 exp(-mu l) exp(-mu g), g = |l - 2 l0|.

    Same roots as :func:`char_fn`, but every intermediate stays bounded:
    the hyperbolic content is reduced to expm1 of negative arguments,

        A = 1 - exp(-2 mu l),
        B = (1 - exp(-2 mu l0)) (1 - exp(-2 mu (l - l0))),
        scaled = exp(-mu g) [ -2 sin(mu l) A
                              + (J/2) (sin(mu l) B - 2 sin(mu l0) sin(mu (l-l0)) A) ],

    with J = (kappa - omega^2 m) / (EI mu^3).  This form is also free of the
    cancellation that makes the plain cosh differences unusable below
    mu ~ 1e-3.
    """
    mu = _check_mu(mu)
    s = params.attach
    l = params.length
    d = l - s
    g = abs(l - 2.0 * s)
    sl = np.sin(mu * l)
    A = -np.expm1(-2.0 * mu * l)
    B = np.expm1(-2.0 * mu * s) * np.expm1(-2.0 * mu * d)
    J = params.kappa / (params.EI * mu**3) - params.m * mu / params.rho
    bracket = -2.0 * sl * A + 0.5 * J * (sl * B - 2.0 * np.sin(mu * s) * np.sin(mu * d) * A)
    scale = np.exp(-mu * g)
    out = scale * bracket
    if np.any((scale == 0.0) & (bracket != 0.0)):
        raise NumericRangeError(
            "scale factor exp(-mu g) underflowed; mu is far beyond the usable range"
        )
    return float(out) if out.ndim == 0 else out


def _bisect(f, a, b):
    """Refine a sign-change bracket down to floating-point resolution."""
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if (fa < 0.0) == (fb < 0.0):
        raise ParameterError("not a sign-change bracket: [%g, %g]" % (a, b))
    while True:
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            return mid if a < mid < b else b
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm < 0.0) == (fa < 0.0):
            a, fa = mid, fm
        else:
            b, fb = mid, fm


def _scan_sign_changes(f, lo, hi, step0, n_wanted):
    """Walk [lo, hi] left to right collecting n_wanted sign-change brackets.

    The step shrinks to half the smallest gap between bracket midpoints seen
    so far (never above step0).  A sample that is ~zero relative to the
    running scale while both neighbours share a sign flags a grazing root
    and raises :class:`DegenerateSpectrumError`.  Raises
    :class:`SearchRangeError` when the interval ends short of n_wanted.
    """
    brackets = []
    step = step0
    x, fx = lo, f(lo)
    scale = abs(fx)
    min_gap = math.inf
    last_mid = None
    while x < hi and len(brackets) < n_wanted:
        y = min(x + step, hi)
        fy = f(y)
        scale = max(scale, abs(fy))
        if fy == 0.0 or (fx < 0.0) != (fy < 0.0):
            brackets.append((x, y))
            mid = 0.5 * (x + y)
            if last_mid is not None:
                min_gap = min(min_gap, mid - last_mid)
                step = min(step0, 0.5 * min_gap)
            last_mid = mid
            if fy == 0.0:
                # start the next probe clear of the exact zero
                y = min(y + 0.5 * step, hi)
                fy = f(y)
        elif scale > 0.0 and abs(fy) < 1e-12 * scale:
            z = min(y + step, hi)
            fz = f(z)
            if (fz < 0.0) == (fx < 0.0) and abs(fz) > 1e-10 * scale:
                raise DegenerateSpectrumError(
                    "characteristic function grazes zero near mu = %g without a "
                    "sign change; repeated root suspected" % y
                )
        x, fx = y, fy
    if len(brackets) < n_wanted:
        raise SearchRangeError(
            "found %d of %d sign changes in [%g, %g]" % (len(brackets), n_wanted, lo, hi),
            interval=(lo, hi),
            found=len(brackets),
        )
    return brackets


def _matching_matrix(mu, params):
    """4x4 matching system at the attachment point, column-scaled.

    Unknown ordering (a1, b1s, a2, b2s) against the bounded basis
    sin(mu x), sinh(mu x) e^{-mu l0}, sin(mu u), sinh(mu u) e^{-mu (l-l0)}
    with u = l - x.  Rows: continuity of W, W', W'' and the third-derivative
    jump, divided by mu, mu^2, mu^3 so all entries are O(1).
    """
    s = params.attach
    d = params.length - s
    S, C = math.sin(mu * s), math.cos(mu * s)
    T, D = math.sin(mu * d), math.cos(mu * d)
    Shs = -0.5 * math.expm1(-2.0 * mu * s)
    Chs = 0.5 * (1.0 + math.exp(-2.0 * mu * s))
    Shd = -0.5 * math.expm1(-2.0 * mu * d)
    Chd = 0.5 * (1.0 + math.exp(-2.0 * mu * d))
    J = params.kappa / (params.EI * mu**3) - params.m * mu / params.rho
    return np.array(
        [
            [S, Shs, -T, -Shd],
            [C, Chs, D, Chd],
            [-S, Shs, T, -Shd],
            [-C - J * S, Chs - J * Shs, -D, Chd],
        ]
    )


def _null_vector(K):
    """Null vector of the near-singular matching matrix.

    Row-normalizes, confirms rank deficiency by SVD, then fixes the
    largest-norm column as pivot and solves the best-conditioned 3x3
    subsystem (rows picked by column-pivoted QR of the transpose).  Falls
    back to the smallest right singular vector if the solve misbehaves.
    """
    rn = np.linalg.norm(K, axis=1)
    Kn = K / rn[:, None]
    sig = np.linalg.svd(Kn, compute_uv=False)
    if sig[3] > _RANK_TOL * sig[0]:
        raise NotAnEigenvalueError(
            "matching system is nonsingular (sigma_min/sigma_max = %.3e); "
            "mu is not a characteristic root" % (sig[3] / sig[0])
        )
    if sig[2] < _DEGENERATE_TOL * sig[0]:
        raise DegenerateModeError(
            "matching system has a null space of dimension >= 2 "
            "(sigma_2/sigma_max = %.3e)" % (sig[2] / sig[0])
        )
    p = int(np.argmax(np.linalg.norm(Kn, axis=0)))
    rest = [c for c in range(4) if c != p]
    A = Kn[:, rest]
    rhs = -Kn[:, p]
    v = None
    try:
        _, _, piv = qr(A.T, pivoting=True)
        rows = np.sort(piv[:3])
        v_rest = np.linalg.solve(A[rows], rhs[rows])
        cand = np.empty(4)
        cand[p] = 1.0
        cand[rest] = v_rest
        if np.all(np.isfinite(cand)):
            v = cand
    except np.linalg.LinAlgError:
        v = None
    if v is None or np.linalg.norm(Kn @ v) > MATCHING_RESIDUAL_TOL * np.linalg.norm(v):
        v = np.linalg.svd(Kn)[2][3]
    resid = np.linalg.norm(Kn @ v) / np.linalg.norm(v)
    if resid > MATCHING_RESIDUAL_TOL:
        raise NotAnEigenvalueError(
            "matching residual %.3e exceeds %.1e" % (resid, MATCHING_RESIDUAL_TOL)
        )
    return v


def _mode_from_mu(index, mu, params):
    """Assemble a Mode (without norm) from a characteristic root."""
    v = _null_vector(_matching_matrix(mu, params))
    s = params.attach
    d = params.length - s
    # normalize so the largest plain (unscaled) coefficient is exactly 1
    plain = v * np.array([1.0, math.exp(-mu * s), 1.0, math.exp(-mu * d)])
    k = int(np.argmax(np.abs(plain)))
    v = v / plain[k]
    return Mode(
        index=index,
        mu=float(mu),
        omega=params.omega_of_mu(mu),
        a1=float(v[0]),
        b1s=float(v[1]),
        a2=float(v[2]),
        b2s=float(v[3]),
        norm_sq=math.nan,
        params=params,
    )


def solve_eigenfunction(mu, params):
    """Plain matching coefficients (a1, b1, a2, b2) at a characteristic root.

    Normalized so the largest-magnitude coefficient equals one.  Raises
    :class:`NotAnEigenvalueError` if mu does not make the matching system
    singular, :class:`DegenerateModeError` on a multi-dimensional null space.
    """
    mu = float(mu)
    if not (math.isfinite(mu) and mu > 0.0):
        raise ParameterError("mu must be finite and positive")
    mode = _mode_from_mu(0, mu, params)
    al, bl = mode.coeffs_left
    ar, br = mode.coeffs_right
    return (al, bl, ar, br)


def find_modes(params, n, scan_step=None):
    """First n eigenpairs of the beam-body problem, sorted by frequency.

    Scans the scaled characteristic function from just above zero with step
    min(pi / (4 l), half the smallest root gap seen so far), refines each
    sign change by bisection to floating-point resolution, solves the
    matching system for the shape coefficients, and fills in the weighted
    norm by quadrature.

    Returns a list of n :class:`Mode` with strictly increasing mu and
    scaled characteristic residual below 1e-9 at each root.
    """
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 1:
        raise ParameterError("n must be a positive integer, got %r" % (n,))
    n = int(n)
    l = params.length
    step0 = math.pi / (4.0 * l) if scan_step is None else float(scan_step)
    if not step0 > 0.0:
        raise ParameterError("scan_step must be positive")
    hi = (n + 10) * math.pi / l + 1.0

    def f(mu):
        return char_fn_scaled(mu, params)

    brackets = _scan_sign_changes(f, SCAN_START, hi, step0, n)
    roots = [_bisect(f, a, b) for a, b in brackets]
    if np.any(np.diff(roots) <= 0.0):
        raise DegenerateSpectrumError("two brackets refined to the same root")
    bad = [r for r in roots if abs(f(r)) > CHAR_RESIDUAL_TOL]
    if bad:
        raise NumericRangeError(
            "scaled characteristic residual above %.1e at mu = %g"
            % (CHAR_RESIDUAL_TOL, bad[0])
        )
    modes = []
    for j, mu in enumerate(roots, start=1):
        mode = _mode_from_mu(j, mu, params)
        nsq = inner_product(mode, mode, params)
        if not nsq > 0.0:
            raise NumericRangeError("nonpositive norm for mode %d" % j)
        modes.append(replace(mode, norm_sq=nsq))
    return modes


_TRIG = (np.sin, np.cos, lambda z: -np.sin(z), lambda z: -np.cos(z))


def _hyp(mu, x, anchor, k):
    """k-th derivative (in mu*x) of sinh(mu x), times exp(-mu anchor).

    Overflow-free for 0 <= x <= anchor + O(1/mu).
    """
    e1 = np.exp(mu * (x - anchor))
    e2 = np.exp(-mu * (x + anchor))
    return 0.5 * (e1 - e2) if k % 2 == 0 else 0.5 * (e1 + e2)


def eval_mode(mode, x, derivative=0, side=None):
    """Evaluate W or a derivative of it at abscissa x (scalar or array).

    ``derivative`` in {0, 1, 2, 3}.  The third derivative jumps at the
    attachment point, so requesting it exactly there needs ``side`` set to
    'left' or 'right'; elsewhere ``side`` only selects which closed piece
    serves the attachment abscissa.
    """
    if derivative not in (0, 1, 2, 3):
        raise ParameterError("derivative must be 0, 1, 2 or 3")
    if side not in (None, "left", "right"):
        raise ParameterError("side must be None, 'left' or 'right'")
    p = mode.params
    xs = np.asarray(x, dtype=float)
    scalar = xs.ndim == 0
    xs = np.atleast_1d(xs).astype(float)
    if np.any(~np.isfinite(xs)) or np.any(xs < 0.0) or np.any(xs > p.length):
        raise DomainError("abscissa outside [0, %g]" % p.length)
    at_joint = xs == p.attach
    if derivative == 3 and side is None and np.any(at_joint):
        raise AmbiguityError(
            "third derivative is two-valued at the attachment point; pass side="
            "'left' or side='right'"
        )
    use_left = (xs < p.attach) | (at_joint & (side != "right"))
    mu = mode.mu
    k = derivative
    out = np.empty_like(xs)
    xl = xs[use_left]
    out[use_left] = mode.a1 * _TRIG[k](mu * xl) + mode.b1s * _hyp(mu, xl, p.attach, k)
    u = p.length - xs[~use_left]
    d = p.length - p.attach
    sgn = -1.0 if k % 2 else 1.0
    out[~use_left] = sgn * (mode.a2 * _TRIG[k](mu * u) + mode.b2s * _hyp(mu, u, d, k))
    out *= mu**k
    return float(out[0]) if scalar else out


def _eval_scalar(mode, x):
    """Fast scalar W(x) for quadrature loops (math module, no numpy)."""
    p = mode.params
    mu = mode.mu
    if x <= p.attach:
        h = 0.5 * (math.exp(mu * (x - p.attach)) - math.exp(-mu * (x + p.attach)))
        return mode.a1 * math.sin(mu * x) + mode.b1s * h
    u = p.length - x
    d = p.length - p.attach
    h = 0.5 * (math.exp(mu * (u - d)) - math.exp(-mu * (u + d)))
    return mode.a2 * math.sin(mu * u) + mode.b2s * h


def _sup_bound(mode):
    """Cheap upper bound for max |W| (scaled hyperbolic basis is <= 1)."""
    return max(abs(mode.a1) + abs(mode.b1s), abs(mode.a2) + abs(mode.b2s))


def inner_product(mode_i, mode_j, params=None, rel_tol=1e-12):
    """Weighted inner product <Wi, Wj> = int_0^l rho Wi Wj dx + m Wi(l0) Wj(l0).

    The integral is split at the attachment point (W is only piecewise
    smooth) and each piece handled by adaptive Gauss-Kronrod quadrature.
    Raises :class:`AccuracyError` when the quadrature error estimate exceeds
    rel_tol against the natural scale rho * l * max|Wi| * max|Wj|.
    """
    if params is None:
        params = mode_i.params
    if mode_i.params != params or mode_j.params != params:
        raise ParameterError("modes belong to a different parameter set")

    rho = params.rho

    def f(x):
        return rho * _eval_scalar(mode_i, x) * _eval_scalar(mode_j, x)

    scale = params.rho * params.length * _sup_bound(mode_i) * _sup_bound(mode_j)
    eps_abs = rel_tol * max(scale, 1e-300)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        i1, e1 = integrate.quad(f, 0.0, params.attach, epsabs=eps_abs, epsrel=rel_tol, limit=400)
        i2, e2 = integrate.quad(
            f, params.attach, params.length, epsabs=eps_abs, epsrel=rel_tol, limit=400
        )
    val = i1 + i2 + params.m * _eval_scalar(mode_i, params.attach) * _eval_scalar(
        mode_j, params.attach
    )
    err = e1 + e2
    if err > 10.0 * max(eps_abs, rel_tol * abs(val)):
        raise AccuracyError(
            "quadrature error estimate %.3e exceeds tolerance" % err, achieved=err
        )
    return val


def gram_matrix(modes, params=None):
    """Symmetric matrix of pairwise inner products <Wi, Wj>."""
    n = len(modes)
    if n == 0:
        raise ParameterError("modes must be nonempty")
    if params is None:
        params = modes[0].params
    G = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            G[i, j] = inner_product(modes[i], modes[j], params)
            G[j, i] = G[i, j]
    return G
