"""Finite random-matrix realizations and their empirical spectral objects.

Samples N x n matrices Sigma = Y + Lambda with Y_ij = sigma(i/N, j/n) /
sqrt(n) * X_ij and a diagonal offset, computes Gram spectra, diagonal
resolvent kernels, row-deletion identities, and empirical-vs-limit
distances.  Sampling uses the counter-based Philox generator keyed by the
seed, so every sample is reproducible independently of scheduling.
"""

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import InvalidInput, NumericalFailure
from .measures import ComplexKernel

ENTRY_LAWS = ("gaussian", "rademacher", "uniform", "complex-gaussian")
RNG_NAME = "philox4x64"

_EIG_CLAMP = -1e-10


@dataclass
class EnsembleSpec:
    """Entry law, seed and dimensions of one matrix ensemble.

    All built-in laws are centered with unit (absolute) second moment and
    have all moments finite.
    """

    entry_law: str
    seed: int
    N: int
    n: int

    def __post_init__(self):
        if self.entry_law not in ENTRY_LAWS:
            raise InvalidInput(f"unknown entry law {self.entry_law!r}")
        if self.N < 1 or self.n < 1:
            raise InvalidInput("dimensions must be >= 1")
        if self.N > self.n:
            raise InvalidInput("N must not exceed n (transpose the model first)")


@dataclass
class SpectrumSample:
    """Sorted Gram eigenvalues of one realization."""

    eigenvalues: np.ndarray
    seed: int | None
    dims: tuple

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float)
        if ev.ndim != 1 or ev.size == 0:
            raise InvalidInput("eigenvalues must be a nonempty 1-d array")
        if np.any(np.diff(ev) < 0):
            raise InvalidInput("eigenvalues must be sorted ascending")
        if ev[0] < _EIG_CLAMP:
            raise InvalidInput(f"negative eigenvalue {ev[0]:.3e} beyond round-off")
        self.eigenvalues = np.clip(ev, 0.0, None)
        self.dims = tuple(self.dims)


def _draw_entries(spec):
    rng = np.random.Generator(np.random.Philox(key=spec.seed))
    shape = (spec.N, spec.n)
    if spec.entry_law == "gaussian":
        return rng.standard_normal(shape)
    if spec.entry_law == "rademacher":
        return rng.integers(0, 2, size=shape) * 2.0 - 1.0
    if spec.entry_law == "uniform":
        root3 = math.sqrt(3.0)
        return rng.uniform(-root3, root3, size=shape)
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) / math.sqrt(2.0)


def sample_sigma_matrix(spec, profile, lambda_diag):
    """One realization Sigma_ij = sigma(i/N, j/n)/sqrt(n) X_ij + Lambda_ii 1{i=j}."""
    lam = np.asarray(lambda_diag, dtype=float)
    if lam.shape != (spec.N,):
        raise InvalidInput(f"lambda_diag must have length N={spec.N}")
    rows = np.arange(1, spec.N + 1) / spec.N
    cols = np.arange(1, spec.n + 1) / spec.n
    sig = np.sqrt(np.asarray(profile.evaluate(rows[:, None], cols[None, :])))
    x = _draw_entries(spec)
    sigma = sig * x / math.sqrt(spec.n)
    idx = np.arange(spec.N)
    sigma[idx, idx] = sigma[idx, idx] + lam
    return sigma


def gram_eigenvalues(sigma, seed=None):
    """Sorted eigenvalues of Sigma Sigma*; trace must match ||Sigma||_F^2."""
    sigma = np.asarray(sigma)
    if sigma.ndim != 2 or sigma.size == 0:
        raise InvalidInput("sigma must be a nonempty matrix")
    gram = sigma @ sigma.conj().T
    try:
        ev = sla.eigvalsh(gram)
    except sla.LinAlgError as exc:
        raise NumericalFailure(f"eigensolve failed: {exc}") from exc
    if ev[0] < _EIG_CLAMP:
        raise NumericalFailure(f"negative eigenvalue {ev[0]:.3e} beyond round-off")
    ev = np.clip(ev, 0.0, None)
    fro2 = float(np.sum(np.abs(sigma) ** 2))
    if abs(ev.sum() - fro2) > 1e-8 * max(1.0, fro2):
        raise NumericalFailure(
            f"trace identity violated: sum(eig)={ev.sum():.12g}, ||Sigma||_F^2={fro2:.12g}")
    return SpectrumSample(ev, seed, sigma.shape)


def sample_spectrum(spec, profile, lambda_diag):
    """Sample a matrix and return its Gram spectrum, tagged with the seed."""
    sigma = sample_sigma_matrix(spec, profile, lambda_diag)
    return gram_eigenvalues(sigma, seed=spec.seed)


def empirical_stieltjes(sigma, lambda_diag, z):
    """Diagonal resolvent kernel of Sigma Sigma* and its normalized trace.

    Returns (L, f_n) where L puts weight q_ii(z)/N on (i/N, Lambda_ii^2)
    and f_n = (1/N) Tr (Sigma Sigma* - z)^{-1}.  The resolvent comes from a
    single dense LU factorization, never an explicit inverse routine.
    """
    z = complex(z)
    if z.imag <= 0:
        raise InvalidInput("z must lie in the upper half plane")
    sigma = np.asarray(sigma)
    n_rows = sigma.shape[0]
    lam = np.asarray(lambda_diag, dtype=float)
    if lam.shape != (n_rows,):
        raise InvalidInput("lambda_diag must match the row count")
    gram = sigma @ sigma.conj().T
    try:
        lu, piv = sla.lu_factor(gram - z * np.eye(n_rows))
        resolvent = sla.lu_solve((lu, piv), np.eye(n_rows, dtype=complex))
    except sla.LinAlgError as exc:
        raise NumericalFailure(f"resolvent solve failed: {exc}") from exc
    q_diag = np.diag(resolvent)
    if np.max(np.abs(q_diag)) > (1.0 + 1e-9) / z.imag:
        raise NumericalFailure("diagonal resolvent entries exceed 1/Im(z)")
    points_u = np.arange(1, n_rows + 1) / n_rows
    kernel = ComplexKernel(points_u, lam ** 2, q_diag / n_rows)
    return kernel, complex(q_diag.mean())


def empirical_f_tilde(sample, z):
    """Normalized resolvent trace of the transposed Gram matrix.

    Computed from the Gram spectrum: the transposed matrix shares the
    nonzero eigenvalues and carries n - N extra zeros.
    """
    z = complex(z)
    if z.imag <= 0:
        raise InvalidInput("z must lie in the upper half plane")
    n_rows, n_cols = sample.dims
    trace = np.sum(1.0 / (sample.eigenvalues - z)) + (n_cols - n_rows) * (-1.0 / z)
    return complex(trace / n_cols)


def schur_identity_check(sigma, z, i):
    """Residual of the row-deletion resolvent identity at 1-based row i.

    Compares q_ii(z) against 1 / (-z - z xi (S_i* S_i - z)^{-1} xi*) where
    xi is row i and S_i is sigma with that row removed.  The identity is
    exact in exact arithmetic; the residual measures round-off only.
    """
    z = complex(z)
    if z.imag <= 0:
        raise InvalidInput("z must lie in the upper half plane")
    sigma = np.asarray(sigma)
    n_rows, n_cols = sigma.shape
    if not 1 <= i <= n_rows:
        raise InvalidInput(f"row index must lie in [1, {n_rows}]")
    gram = sigma @ sigma.conj().T
    try:
        lu, piv = sla.lu_factor(gram - z * np.eye(n_rows))
        e_i = np.zeros(n_rows, dtype=complex)
        e_i[i - 1] = 1.0
        q_ii = sla.lu_solve((lu, piv), e_i)[i - 1]
        xi = sigma[i - 1]
        rest = np.delete(sigma, i - 1, axis=0)
        small = rest.conj().T @ rest - z * np.eye(n_cols)
        inner = xi @ sla.solve(small, xi.conj())
    except sla.LinAlgError as exc:
        raise NumericalFailure(f"linear solve failed: {exc}") from exc
    return float(abs(q_ii - 1.0 / (-z - z * inner)))


def truncate_diagonal(lambda_diag, bound_sq):
    """Zero out offsets with squared value above bound_sq.

    Returns (truncated diagonal, number of entries zeroed).  Each zeroed
    entry perturbs the empirical distribution function by at most 1/N in
    sup norm, being a rank-one change.
    """
    if bound_sq < 0:
        raise InvalidInput("bound_sq must be >= 0")
    lam = np.asarray(lambda_diag, dtype=float)
    keep = lam ** 2 <= bound_sq
    return np.where(keep, lam, 0.0), int(np.count_nonzero(~keep))


def ks_compare(sample, cdf):
    """Sup over sample jump points of |ECDF - cdf|.

    The ECDF is evaluated right-continuously (ties share the rank of the
    last equal point), so a sample compared against its own step function
    gives exactly zero.
    """
    ev = sample.eigenvalues
    ecdf = np.searchsorted(ev, ev, side="right") / ev.size
    ref = np.asarray(cdf(ev), dtype=float)
    return float(np.max(np.abs(ecdf - ref)))


def export_csv(sample, path, metadata=None):
    """One eigenvalue per line with seed/dims/rng header comments."""
    with open(path, "w", newline="") as fh:
        fh.write(_csv_text(sample, metadata))


def _csv_text(sample, metadata=None):
    buf = io.StringIO()
    buf.write(f"# seed: {sample.seed}\n")
    buf.write(f"# N: {sample.dims[0]}\n")
    buf.write(f"# n: {sample.dims[1]}\n")
    buf.write(f"# rng: {RNG_NAME}\n")
    for key, value in (metadata or {}).items():
        if key not in ("seed", "N", "n", "rng"):
            buf.write(f"# {key}: {value}\n")
    writer = csv.writer(buf)
    writer.writerow(["eigenvalue"])
    for val in sample.eigenvalues:
        writer.writerow([repr(float(val))])
    return buf.getvalue()


def load_csv(path):
    """Read back an exported spectrum; returns (sample, metadata dict)."""
    meta = {}
    values = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].partition(":")
                meta[key.strip()] = val.strip()
            elif line != "eigenvalue":
                values.append(float(line))
    seed = int(meta["seed"]) if meta.get("seed", "None") != "None" else None
    dims = (int(meta["N"]), int(meta["n"]))
    return SpectrumSample(np.asarray(values), seed, dims), meta
