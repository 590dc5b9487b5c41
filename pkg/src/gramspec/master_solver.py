"""Damped Picard solver for the coupled kernel fixed-point system.

For a ratio ``c = lim N/n`` in (0, 1], a variance profile ``sigma2`` and a
discrete limit measure ``H`` with atoms ``(u_i, lambda_i, w_i)``, the
deterministic limiting spectrum of the Gram matrices is characterized by a
pair of complex kernels ``(pi_z, pi_tilde_z)`` solving, at each z in the
upper half plane,

    pi weight at (u_i, lambda_i):
        w_i / [ -z (1 + A_i) + lambda_i / (1 + c B_i) ]

    pi_tilde atomic weight at (c u_i, lambda_i):
        c w_i / [ -z (1 + c B_i) + lambda_i / (1 + A_i) ]

    pi_tilde quadrature weight at (t_j, 0), t_j in [c, 1]:
        omega_j / [ -z (1 + c C_j) ]

where A_i integrates ``sigma2(u_i, .)`` against pi_tilde, while B_i and C_j
integrate ``sigma2(., c u_i)`` and ``sigma2(., t_j)`` against pi.  The
Stieltjes transforms of the limiting spectra (Gram and transposed Gram
side) are the total masses ``f = sum(pi)`` and ``f_tilde = sum(pi_tilde)``.

The map is iterated from the cold start ``pi = pi_tilde = -H / z``.  Above
the contraction height (see :func:`contraction_start_height`) plain Picard
contracts geometrically in total variation; below it the solver damps the
update and relies on warm starts supplied by imaginary-axis continuation.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDenominator, InvalidInput, NoConvergence, NumericalFailure
from .measures import ComplexKernel, lambda_moment

__all__ = [
    "SolverOptions", "SolveReport", "contraction_start_height", "theta_bound",
    "init_kernels", "profile_integrals", "picard_step", "solve_master",
    "solve_with_continuation", "sweep_line",
]

DEFAULT_MIN_DENOMINATOR = 1e-14


@dataclass
class SolverOptions:
    """Knobs for the fixed-point iteration.

    ``damping=None`` selects the default policy: undamped Picard when
    Im(z) is at or above the contraction height, factor 0.5 below it.
    """

    tol: float = 1e-12
    max_iters: int = 10000
    damping: float | None = None
    min_denominator: float = DEFAULT_MIN_DENOMINATOR

    def __post_init__(self):
        if not self.tol > 0:
            raise InvalidInput("tol must be > 0")
        if self.max_iters < 1:
            raise InvalidInput("max_iters must be >= 1")
        if self.damping is not None and not 0 < self.damping <= 1:
            raise InvalidInput("damping must lie in (0, 1]")
        if not self.min_denominator >= 0:
            raise InvalidInput("min_denominator must be >= 0")


@dataclass
class SolveReport:
    """Converged kernels, their total masses, and the residual history."""

    pi: ComplexKernel
    pi_tilde: ComplexKernel
    f: complex
    f_tilde: complex
    residuals: list = field(default_factory=list)
    iterations: int = 0


def contraction_start_height(sigma_max_sq, c, lambda_m1):
    """Smallest Im(z) above which all four contraction bounds are < 1/2.

    The bounds are 2 c s2 m1 / y^2, sqrt(2) s2 / y, 3 s2 / y and
    2 s2 m1 / y^2 with s2 = sigma_max_sq and m1 the first lambda moment.
    """
    if sigma_max_sq < 0 or c < 0 or lambda_m1 < 0:
        raise InvalidInput("inputs must be >= 0")
    s2 = float(sigma_max_sq)
    return max(
        2.0 * math.sqrt(c * s2 * lambda_m1),
        2.0 * math.sqrt(2.0) * s2,
        6.0 * s2,
        2.0 * math.sqrt(s2 * lambda_m1),
    )


def theta_bound(sigma_max_sq, c, lambda_m1, im_z):
    """Largest of the four contraction bounds at height Im(z) = im_z."""
    if im_z <= 0:
        raise InvalidInput("im_z must be > 0")
    s2 = float(sigma_max_sq)
    return max(
        2.0 * c * s2 * lambda_m1 / im_z ** 2,
        math.sqrt(2.0) * s2 / im_z,
        3.0 * s2 / im_z,
        2.0 * s2 * lambda_m1 / im_z ** 2,
    )


def init_kernels(H, quad, z, c):
    """Cold-start kernels: both equal -H/z, placed on H's own points.

    Only the first iterate keeps this layout for the second kernel; from
    then on it lives on the image points (c u_i, lambda_i) joined with the
    quadrature nodes (t_j, 0).
    """
    z = complex(z)
    if z.imag <= 0:
        raise InvalidInput("z must lie in the upper half plane")
    if not 0 < c <= 1:
        raise InvalidInput("c must lie in (0, 1]")
    w0 = -H.w / z
    pi0 = ComplexKernel(H.u.copy(), H.lam.copy(), w0)
    pi_tilde0 = ComplexKernel(H.u.copy(), H.lam.copy(), w0.copy())
    return pi0, pi_tilde0


def profile_integrals(profile, kernel, side, v):
    """Integrate a profile slice against a kernel.

    side="first":  sum_k sigma2(v, t_k) * weight_k
    side="second": sum_k sigma2(t_k, v) * weight_k
    """
    if side == "first":
        vals = profile.evaluate(v, kernel.t)
    elif side == "second":
        vals = profile.evaluate(kernel.t, v)
    else:
        raise InvalidInput("side must be 'first' or 'second'")
    return complex(np.dot(np.atleast_1d(vals), kernel.weights)) if len(kernel) else 0j


def _iterate_points(H, quad, c):
    t = np.concatenate([c * H.u, quad.nodes])
    zeta = np.concatenate([H.lam, np.zeros(len(quad))])
    return t, zeta


def _weights_from_integrals(z, c, lam, w, omega, A, B, C, min_den):
    """One application of the fixed-point map given the three integrals."""
    one_a = 1.0 + A            # the d-tilde denominators
    one_b = 1.0 + c * B        # the d denominators
    kappa = -z * (1.0 + c * C)
    floor = min(np.min(np.abs(one_a)), np.min(np.abs(one_b)))
    if kappa.size:
        floor = min(floor, np.min(np.abs(kappa)))
    d_big = -z * one_a + lam / one_b
    d_big_tilde = -z * one_b + lam / one_a
    floor = min(floor, np.min(np.abs(d_big)), np.min(np.abs(d_big_tilde)))
    if floor < min_den:
        raise DegenerateDenominator(
            f"denominator magnitude {floor:.3e} below floor {min_den:.3e} at z={z}")
    return w / d_big, (c * w) / d_big_tilde, omega / kappa


class _Stepper:
    """Precomputed profile matrices for repeated steps at fixed (H, quad, c)."""

    def __init__(self, H, profile, quad, c):
        self.H = H
        self.quad = quad
        self.c = float(c)
        self.u = H.u
        self.lam = H.lam
        self.w = H.w
        self.tq = quad.nodes
        self.omega = quad.weights
        # sig_cu[k, i] = sigma2(u_k, c u_i); sig_tq[k, j] = sigma2(u_k, t_j)
        self.sig_cu = np.asarray(profile.evaluate(self.u[:, None], (c * self.u)[None, :]))
        self.sig_tq = (np.asarray(profile.evaluate(self.u[:, None], self.tq[None, :]))
                       if len(quad) else np.zeros((self.u.size, 0)))
        self._sig_uu = None
        self._profile = profile
        self.tilde_t, self.tilde_zeta = _iterate_points(H, quad, c)

    def integrals_cold(self, p, q0):
        # first step only: the second kernel still sits on H's own points
        if self._sig_uu is None:
            self._sig_uu = np.asarray(
                self._profile.evaluate(self.u[:, None], self.u[None, :]))
        A = self._sig_uu @ q0
        return A, self.sig_cu.T @ p, self.sig_tq.T @ p

    def integrals(self, p, pa, r):
        A = self.sig_cu @ pa
        if r.size:
            A = A + self.sig_tq @ r
        return A, self.sig_cu.T @ p, self.sig_tq.T @ p

    def step(self, z, p, pa, r, min_den):
        A, B, C = self.integrals(p, pa, r)
        return _weights_from_integrals(z, self.c, self.lam, self.w, self.omega,
                                       A, B, C, min_den)

    def pack(self, p, pa, r):
        pi = ComplexKernel(self.u, self.lam, p)
        pi_tilde = ComplexKernel(self.tilde_t, self.tilde_zeta,
                                 np.concatenate([pa, r]))
        return pi, pi_tilde


def picard_step(z, c, H, profile, quad, pi_prev, pi_tilde_prev):
    """One application of the fixed-point map to arbitrary input kernels.

    ``pi_prev`` must live on H's points; ``pi_tilde_prev`` may live on any
    point set (its points are read generically), which covers both the cold
    start layout and the iterate layout.  The returned second kernel always
    uses the iterate layout.
    """
    z = complex(z)
    if z.imag <= 0:
        raise InvalidInput("z must lie in the upper half plane")
    if not 0 < c <= 1:
        raise InvalidInput("c must lie in (0, 1]")
    if not (np.allclose(pi_prev.t, H.u) and np.allclose(pi_prev.zeta, H.lam)):
        raise InvalidInput("pi_prev must be supported on H's atoms")
    sig_first = np.asarray(profile.evaluate(H.u[:, None], pi_tilde_prev.t[None, :]))
    A = sig_first @ pi_tilde_prev.weights
    sig_cu = np.asarray(profile.evaluate(H.u[:, None], (c * H.u)[None, :]))
    B = sig_cu.T @ pi_prev.weights
    sig_tq = (np.asarray(profile.evaluate(H.u[:, None], quad.nodes[None, :]))
              if len(quad) else np.zeros((H.u.size, 0)))
    C = sig_tq.T @ pi_prev.weights
    p, pa, r = _weights_from_integrals(z, c, H.lam, H.w, quad.weights, A, B, C,
                                       DEFAULT_MIN_DENOMINATOR)
    t, zeta = _iterate_points(H, quad, c)
    return (ComplexKernel(H.u, H.lam, p),
            ComplexKernel(t, zeta, np.concatenate([pa, r])))


def _check_solution(z, f, f_tilde):
    bound = 1.0 / z.imag + 1e-9 * (1.0 + 1.0 / z.imag)
    slack = 1e-10 * (1.0 + abs(z))
    for name, val in (("f", f), ("f_tilde", f_tilde)):
        if abs(val) > bound:
            raise NumericalFailure(f"|{name}|={abs(val):.6g} exceeds 1/Im(z) at z={z}")
        if val.imag < -slack:
            raise NumericalFailure(f"Im {name} negative ({val.imag:.3e}) at z={z}")
        if (z * val).imag < -slack:
            raise NumericalFailure(f"Im(z*{name}) negative at z={z}")


def _solve(z, stepper, height, opts, initial):
    z = complex(z)
    damping = opts.damping
    if damping is None:
        damping = 1.0 if z.imag >= height else 0.5
    m = stepper.u.size
    residuals = []
    iterations = 0
    if initial is None:
        p = -stepper.w / z
        q0 = p.copy()
        A, B, C = stepper.integrals_cold(p, q0)
        p, pa, r = _weights_from_integrals(z, stepper.c, stepper.lam, stepper.w,
                                           stepper.omega, A, B, C,
                                           opts.min_denominator)
        iterations = 1
    else:
        pi0, pi_tilde0 = initial
        if (pi0.weights.size != m
                or pi_tilde0.weights.size != m + len(stepper.quad)
                or not np.allclose(pi0.t, stepper.u)
                or not np.allclose(pi_tilde0.t, stepper.tilde_t)):
            raise InvalidInput("initial kernels do not match the system layout")
        p = pi0.weights.astype(complex, copy=True)
        pa = pi_tilde0.weights[:m].astype(complex, copy=True)
        r = pi_tilde0.weights[m:].astype(complex, copy=True)
    while iterations < opts.max_iters:
        p_new, pa_new, r_new = stepper.step(z, p, pa, r, opts.min_denominator)
        if damping < 1.0:
            p_new = damping * p_new + (1.0 - damping) * p
            pa_new = damping * pa_new + (1.0 - damping) * pa
            r_new = damping * r_new + (1.0 - damping) * r
        res = (np.abs(p_new - p).sum() + np.abs(pa_new - pa).sum()
               + np.abs(r_new - r).sum())
        residuals.append(float(res))
        p, pa, r = p_new, pa_new, r_new
        iterations += 1
        if res <= opts.tol:
            f = complex(p.sum())
            f_tilde = complex(pa.sum() + r.sum())
            _check_solution(z, f, f_tilde)
            pi, pi_tilde = stepper.pack(p, pa, r)
            return SolveReport(pi, pi_tilde, f, f_tilde, residuals, iterations)
    last = f"{residuals[-1]:.3e}" if residuals else "n/a"
    raise NoConvergence(
        f"no convergence at z={z} after {iterations} iterations, "
        f"last residual {last}, tol {opts.tol:.1e}")


def solve_master(z, c, H, profile, quad, opts=None, initial=None):
    """Solve the coupled system at one z in the upper half plane.

    ``initial`` optionally warm-starts the iteration from a (pi, pi_tilde)
    pair in the iterate layout, e.g. the kernels of a neighbouring solve.
    Raises :class:`NoConvergence` when the iteration budget runs out and
    :class:`DegenerateDenominator` on numerical breakdown.
    """
    z = complex(z)
    if z.imag <= 0:
        raise InvalidInput("z must lie in the upper half plane")
    if not 0 < c <= 1:
        raise InvalidInput("c must lie in (0, 1]")
    opts = opts or SolverOptions()
    stepper = _Stepper(H, profile, quad, c)
    height = contraction_start_height(profile.sigma_max_sq, c, lambda_moment(H))
    return _solve(z, stepper, height, opts, initial)


def solve_with_continuation(z_targets, c, H, profile, quad, opts=None, *,
                            factor=0.7, y_start=None):
    """Solve at each target z by stepping down from a safe height.

    Each target is first solved at Im(z) = max(contraction height, Im z),
    then the height is reduced geometrically by ``factor``, warm-starting
    every rung from the previous kernels, until the target is reached.
    Returns a dict mapping each target z to its SolveReport.
    """
    targets = [complex(zt) for zt in z_targets]
    if any(zt.imag <= 0 for zt in targets):
        raise InvalidInput("all targets must lie in the upper half plane")
    if not 0 < factor < 1:
        raise InvalidInput("factor must lie in (0, 1)")
    opts = opts or SolverOptions()
    stepper = _Stepper(H, profile, quad, c)
    height = contraction_start_height(profile.sigma_max_sq, c, lambda_moment(H))
    out = {}
    for zt in targets:
        y0 = max(height, zt.imag) if y_start is None else max(y_start, zt.imag)
        rungs = [y0]
        while rungs[-1] > zt.imag * (1 + 1e-12):
            rungs.append(max(zt.imag, factor * rungs[-1]))
        state = None
        for y in rungs:
            zr = complex(zt.real, y)
            try:
                report = _solve(zr, stepper, height, opts, state)
            except NoConvergence as exc:
                raise NoConvergence(
                    f"target z={zt}: rung Im={y:.6g} failed: {exc}") from exc
            state = (report.pi, report.pi_tilde)
        out[zt] = report
    return out


def sweep_line(x_values, epsilon, c, H, profile, quad, opts=None, *, factor=0.7):
    """Solve along the horizontal line Im(z) = epsilon, warm-starting
    each point from its left neighbour.

    Points where the warm-started iteration stalls are retried with a cold
    vertical continuation.  Returns the list of SolveReports in x order.
    """
    if epsilon <= 0:
        raise InvalidInput("epsilon must be > 0")
    opts = opts or SolverOptions()
    stepper = _Stepper(H, profile, quad, c)
    height = contraction_start_height(profile.sigma_max_sq, c, lambda_moment(H))
    reports = []
    state = None
    for x in np.asarray(x_values, dtype=float):
        z = complex(x, epsilon)
        try:
            report = _solve(z, stepper, height, opts, state)
        except (NoConvergence, DegenerateDenominator):
            report = None
        if report is None:
            # vertical rescue: continue down from the contraction height
            y = max(height, epsilon)
            rungs = [y]
            while rungs[-1] > epsilon * (1 + 1e-12):
                rungs.append(max(epsilon, factor * rungs[-1]))
            rescue_state = None
            for yv in rungs:
                report = _solve(complex(x, yv), stepper, height, opts, rescue_state)
                rescue_state = (report.pi, report.pi_tilde)
        state = (report.pi, report.pi_tilde)
        reports.append(report)
    return reports
