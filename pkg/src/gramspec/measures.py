"""Variance profiles, discrete joint measures, quadrature, and complex kernels.

The limiting-spectrum machinery works with four ingredients:

* a variance profile, an evaluable map ``(x, y) in [0,1]^2 -> sigma^2 >= 0``;
* a discrete probability measure on ``[0,1] x R+`` holding atoms
  ``(u_i, lambda_i, w_i)`` where ``lambda`` is the squared diagonal offset;
* a quadrature rule for the Lebesgue component living on ``[c, 1]``;
* complex weighted point measures whose weights are iterated by the solver,
  compared in the discrete total-variation metric.

All types are immutable after construction and all operations are pure, so
instances can be shared freely across threads.
"""

import numpy as np

from .errors import InvalidInput

_MASS_TOL = 1e-12

PROFILE_KINDS = ("constant", "separable-product", "bilinear-grid",
                 "piecewise-constant-blocks")


class VarianceProfile:
    """Evaluable variance profile on the unit square.

    Four closed-form kinds are supported, built through the classmethods
    below.  Every kind guarantees ``0 <= sigma2(x, y) <= sigma_max_sq`` and
    bit-reproducible evaluation.  All kinds except the block profile are
    continuous.
    """

    def __init__(self, kind, sigma_max_sq, params):
        if kind not in PROFILE_KINDS:
            raise InvalidInput(f"unknown profile kind {kind!r}")
        self.kind = kind
        self.sigma_max_sq = float(sigma_max_sq)
        self._params = params

    @classmethod
    def constant(cls, value):
        """sigma2(x, y) = value."""
        value = float(value)
        if not np.isfinite(value) or value < 0:
            raise InvalidInput("constant profile needs a finite value >= 0")
        return cls("constant", value, (value,))

    @classmethod
    def separable(cls, g_values, h_values):
        """sigma2(x, y) = g(x) * h(y), g and h piecewise linear on [0, 1].

        ``g_values`` and ``h_values`` are sampled on uniform grids over
        [0, 1] (at least two points each) and must be nonnegative.
        """
        g = np.asarray(g_values, dtype=float)
        h = np.asarray(h_values, dtype=float)
        for name, arr in (("g_values", g), ("h_values", h)):
            if arr.ndim != 1 or arr.size < 2:
                raise InvalidInput(f"{name} must be a 1-d sequence, length >= 2")
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise InvalidInput(f"{name} must be finite and >= 0")
        gx = np.linspace(0.0, 1.0, g.size)
        hx = np.linspace(0.0, 1.0, h.size)
        smax = float(g.max() * h.max())
        return cls("separable-product", smax, (g, gx, h, hx))

    @classmethod
    def bilinear(cls, values):
        """Bilinear interpolation of an (R+1) x (R+1) grid of sigma2 values.

        With i = floor(x*R), s = x*R - i (and j, t likewise in y):

            sigma2 = (1-s)(1-t) v[i,j] + s(1-t) v[i+1,j]
                     + (1-s)t v[i,j+1] + s t v[i+1,j+1]

        The interpolant attains its maximum at grid nodes, so
        ``sigma_max_sq = values.max()``.
        """
        v = np.asarray(values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] < 2:
            raise InvalidInput("bilinear grid must be square, at least 2x2")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise InvalidInput("bilinear grid values must be finite and >= 0")
        return cls("bilinear-grid", float(v.max()), (v,))

    @classmethod
    def blocks(cls, values):
        """Piecewise-constant profile: sigma2 is v[i, j] on block (i, j)."""
        v = np.asarray(values, dtype=float)
        if v.ndim != 2 or v.size == 0:
            raise InvalidInput("block values must form a 2-d array")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise InvalidInput("block values must be finite and >= 0")
        return cls("piecewise-constant-blocks", float(v.max()), (v,))

    def evaluate(self, x, y):
        """Vectorized sigma2(x, y); x and y broadcast together."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == "constant":
            (value,) = self._params
            out = np.broadcast_arrays(x, y)[0]
            return np.full(out.shape, value) if out.shape else float(value)
        if self.kind == "separable-product":
            g, gx, h, hx = self._params
            xb, yb = np.broadcast_arrays(x, y)
            gv = np.interp(xb.ravel(), gx, g).reshape(xb.shape)
            hv = np.interp(yb.ravel(), hx, h).reshape(yb.shape)
            out = gv * hv
            return out if out.shape else float(out)
        if self.kind == "bilinear-grid":
            (v,) = self._params
            r = v.shape[0] - 1
            xb, yb = np.broadcast_arrays(x, y)
            i = np.clip(np.floor(xb * r).astype(int), 0, r - 1)
            j = np.clip(np.floor(yb * r).astype(int), 0, r - 1)
            s = xb * r - i
            t = yb * r - j
            out = ((1 - s) * (1 - t) * v[i, j] + s * (1 - t) * v[i + 1, j]
                   + (1 - s) * t * v[i, j + 1] + s * t * v[i + 1, j + 1])
            return out if out.shape else float(out)
        (v,) = self._params
        bx, by = v.shape
        xb, yb = np.broadcast_arrays(x, y)
        i = np.clip(np.floor(xb * bx).astype(int), 0, bx - 1)
        j = np.clip(np.floor(yb * by).astype(int), 0, by - 1)
        out = v[i, j]
        return out if out.shape else float(out)

    def __repr__(self):
        return f"VarianceProfile(kind={self.kind!r}, sigma_max_sq={self.sigma_max_sq})"


class JointLimitMeasure:
    """Discrete probability measure on [0,1] x R+ as atoms (u, lambda, w).

    ``lambda`` stores squared diagonal offsets, so it is nonnegative by
    construction and the sign of the offset itself is irrelevant.
    """

    def __init__(self, u, lam, w):
        u = np.asarray(u, dtype=float)
        lam = np.asarray(lam, dtype=float)
        w = np.asarray(w, dtype=float)
        if not (u.ndim == lam.ndim == w.ndim == 1) or not (u.size == lam.size == w.size):
            raise InvalidInput("u, lam, w must be 1-d sequences of equal length")
        if u.size == 0:
            raise InvalidInput("measure needs at least one atom")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(lam)) and np.all(np.isfinite(w))):
            raise InvalidInput("atoms must be finite")
        if np.any(u < 0) or np.any(u > 1):
            raise InvalidInput("positions u must lie in [0, 1]")
        if np.any(lam < 0):
            raise InvalidInput("lambda values must be >= 0")
        if np.any(w <= 0):
            raise InvalidInput("weights must be > 0")
        if abs(w.sum() - 1.0) > _MASS_TOL:
            raise InvalidInput(f"weights must sum to 1, got {w.sum()!r}")
        self.u = u
        self.lam = lam
        self.w = w

    @property
    def size(self):
        return self.u.size

    @property
    def atoms(self):
        return list(zip(self.u.tolist(), self.lam.tolist(), self.w.tolist()))

    def __repr__(self):
        return f"JointLimitMeasure({self.size} atoms)"


class ComplexKernel:
    """Complex weighted point measure: fixed points, iterated complex weights."""

    def __init__(self, t, zeta, weights):
        t = np.asarray(t, dtype=float)
        zeta = np.asarray(zeta, dtype=float)
        weights = np.asarray(weights, dtype=complex)
        if not (t.ndim == zeta.ndim == weights.ndim == 1):
            raise InvalidInput("kernel arrays must be 1-d")
        if not (t.size == zeta.size == weights.size):
            raise InvalidInput("points and weights must have equal length")
        self.t = t
        self.zeta = zeta
        self.weights = weights

    def total(self):
        """Total mass, the integral of 1 against the kernel."""
        return complex(self.weights.sum())

    def __len__(self):
        return self.t.size

    def __repr__(self):
        return f"ComplexKernel({len(self)} points, total={self.total():.6g})"


class QuadratureRule:
    """Positive quadrature on [c, 1] with total weight 1 - c.

    Empty when c == 1 (the interval degenerates).  The default construction
    is the composite midpoint rule, which keeps all weights positive and
    never evaluates at the endpoints.
    """

    def __init__(self, lower, nodes, weights):
        lower = float(lower)
        nodes = np.asarray(nodes, dtype=float)
        weights = np.asarray(weights, dtype=float)
        if not 0 < lower <= 1:
            raise InvalidInput("lower endpoint must lie in (0, 1]")
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise InvalidInput("nodes and weights must be 1-d of equal length")
        if nodes.size:
            if np.any(np.diff(nodes) <= 0):
                raise InvalidInput("nodes must be strictly increasing")
            if nodes[0] < lower or nodes[-1] > 1:
                raise InvalidInput("nodes must lie in [lower, 1]")
            if np.any(weights <= 0):
                raise InvalidInput("weights must be > 0")
        if abs(weights.sum() - (1.0 - lower)) > _MASS_TOL:
            raise InvalidInput("weights must sum to 1 - lower")
        self.lower = lower
        self.nodes = nodes
        self.weights = weights

    @classmethod
    def midpoint(cls, lower, count=256):
        lower = float(lower)
        if not 0 < lower <= 1:
            raise InvalidInput("lower endpoint must lie in (0, 1]")
        if lower == 1.0:
            return cls(1.0, np.empty(0), np.empty(0))
        if count < 1:
            raise InvalidInput("count must be >= 1")
        width = 1.0 - lower
        nodes = lower + width * (np.arange(count) + 0.5) / count
        weights = np.full(count, width / count)
        return cls(lower, nodes, weights)

    def __len__(self):
        return self.nodes.size


def empirical_H_from_diagonal(lambda_diag, size=None):
    """Atoms (i/N, Lambda_ii^2, 1/N) from a length-N diagonal of offsets."""
    lam = np.asarray(lambda_diag, dtype=float)
    if lam.ndim != 1 or lam.size == 0:
        raise InvalidInput("diagonal must be a nonempty 1-d sequence")
    if size is not None and size != lam.size:
        raise InvalidInput(f"size {size} does not match diagonal length {lam.size}")
    n = lam.size
    u = np.arange(1, n + 1) / n
    return JointLimitMeasure(u, lam ** 2, np.full(n, 1.0 / n))


def product_H(h_lambda, count):
    """Discretize du (x) H_lambda into `count` atoms at positions i/count.

    The lambda values are interleaved along u with a largest-deficit quota
    rule, so each value's total weight stays within 1/count of its target
    and the u-marginal is independent of lambda in the large-count limit.
    """
    pairs = list(h_lambda)
    if not pairs:
        raise InvalidInput("h_lambda must be nonempty")
    lam_vals = np.asarray([p[0] for p in pairs], dtype=float)
    probs = np.asarray([p[1] for p in pairs], dtype=float)
    if np.any(lam_vals < 0) or not np.all(np.isfinite(lam_vals)):
        raise InvalidInput("lambda values must be finite and >= 0")
    if np.any(probs <= 0):
        raise InvalidInput("h_lambda weights must be > 0")
    if abs(probs.sum() - 1.0) > _MASS_TOL:
        raise InvalidInput(f"h_lambda weights must sum to 1, got {probs.sum()!r}")
    if count < len(pairs):
        raise InvalidInput("count must be >= number of lambda values")
    assigned = np.zeros(len(pairs))
    lam = np.empty(count)
    for i in range(1, count + 1):
        k = int(np.argmax(i * probs - assigned))
        assigned[k] += 1
        lam[i - 1] = lam_vals[k]
    u = np.arange(1, count + 1) / count
    return JointLimitMeasure(u, lam, np.full(count, 1.0 / count))


def uniform_H(count, lam=0.0):
    """Midpoint discretization of du (x) delta_lam with `count` atoms."""
    if count < 1:
        raise InvalidInput("count must be >= 1")
    if lam < 0:
        raise InvalidInput("lam must be >= 0")
    u = (np.arange(count) + 0.5) / count
    return JointLimitMeasure(u, np.full(count, float(lam)), np.full(count, 1.0 / count))


def lambda_moment(measure):
    """First lambda moment: sum of w_i * lambda_i."""
    return float(np.dot(measure.w, measure.lam))


def tv_distance(a, b):
    """Discrete total-variation distance of two kernels on the same points."""
    if not (np.array_equal(a.t, b.t) and np.array_equal(a.zeta, b.zeta)):
        raise InvalidInput("kernels must share the identical point sequence")
    return float(np.abs(a.weights - b.weights).sum())
