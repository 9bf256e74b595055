"""Rational filtering and subspace iteration for large structured pencils.

The boundary contour integral of the spectral projector is discretized by a
k-point trapezoid rule on the circle, giving the rational filter

    zeta(x) = sum_j g_j / (s_j - x),   s_j = c + r e^{i theta_j},
    g_j = (r/k) e^{i theta_j},         theta_j = (2j - 1) pi / k,

whose exact value is ``1 / (1 + ((x - c)/r)^k)``. Applying the filter to a
block of vectors costs one structured shift-invert solve per pole, each of
which reduces to forward block recurrences plus a single n x n solve with
``P(s_j)`` (factored once per rule).
"""

import csv
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .eigensolve import extract_nep_eigenpairs
from .pencil import BlockLU, SingularShiftError

__all__ = ["QuadratureRule", "SIFConfig", "SIFResult", "SIFStep", "PoleHitError",
           "quadrature", "scalar_filter", "shift_invert", "apply_filter",
           "default_shift", "sif", "write_sif_trace_csv"]


class PoleHitError(Exception):
    """Raised when the filter is evaluated exactly at a quadrature pole."""


@dataclass(frozen=True)
class QuadratureRule:
    """Trapezoid-rule poles and weights on the circle |s - center| = radius."""

    k: int
    poles: np.ndarray
    weights: np.ndarray
    center: complex
    radius: float


def quadrature(center, radius, k):
    """Build the k-point trapezoid rule for the disk boundary."""
    if k < 1:
        raise ValueError("quadrature order must be at least 1")
    if radius <= 0:
        raise ValueError("radius must be positive")
    theta = (2.0 * np.arange(1, k + 1) - 1.0) * np.pi / k
    phase = np.exp(1j * theta)
    return QuadratureRule(k=k, poles=center + radius * phase,
                          weights=(radius / k) * phase,
                          center=complex(center), radius=float(radius))


def scalar_filter(rule, x):
    """Evaluate the rational filter at scalar or array ``x``."""
    x = np.asarray(x, dtype=complex)
    diff = rule.poles - x[..., None]
    if np.any(diff == 0):
        hits = np.unique(x[np.any(diff == 0, axis=-1)])
        raise PoleHitError(f"filter evaluated at quadrature pole(s) {hits.tolist()}")
    vals = (rule.weights / diff).sum(axis=-1)
    return complex(vals) if vals.ndim == 0 else vals


def shift_invert(pencil, mu, Y, lu=None):
    """Solve ``(mu C1 - C0) Z = C1 Y`` through the structured factorization."""
    if lu is None:
        lu = BlockLU(pencil, mu)
    elif lu.mu != mu or lu.pencil is not pencil:
        raise ValueError("supplied factorization does not match shift or pencil")
    return lu.solve(Y)


def apply_filter(pencil, rule, Y, lus=None):
    """Apply the rational filter to the block ``Y``.

    ``lus`` may hold pre-built :class:`BlockLU` factorizations, one per pole;
    the weighted sum is accumulated in pole order so results are reproducible.
    """
    if lus is None:
        lus = _factor_poles(pencil, rule)
    Z = None
    for g, lu in zip(rule.weights, lus):
        term = g * lu.solve(Y)
        Z = term if Z is None else Z + term
    return Z


def _factor_poles(pencil, rule):
    lus = []
    for j, s in enumerate(rule.poles):
        try:
            lus.append(BlockLU(pencil, s))
        except SingularShiftError as exc:
            raise SingularShiftError(
                f"quadrature pole {j + 1} of {rule.k} at {s} hits the "
                f"spectrum: {exc}") from exc
    return lus


def default_shift(region):
    """Deterministic shift just outside the disk, off the spectrum's usual axes."""
    return region.center + 1.1 * region.radius * np.exp(1j * np.pi / 7)


@dataclass(frozen=True)
class SIFConfig:
    """Subspace-iteration parameters: block width, shift, quadrature, thresholds."""

    subspace: int
    shift: complex = None
    quad_order: int = 16
    tol_residual: float = 1e-4
    tol_ghost: float = 1e-2
    max_iters: int = 30
    seed: int = 0

    def __post_init__(self):
        if self.subspace < 1:
            raise ValueError("subspace must have at least one column")
        if not 0 < self.tol_residual < self.tol_ghost:
            raise ValueError("need 0 < tol_residual < tol_ghost")


@dataclass(frozen=True)
class SIFStep:
    """One subspace-iteration record."""

    iteration: int
    in_region_count: int
    ghost_count: int
    max_sigma: float
    min_sigma: float


@dataclass(frozen=True)
class SIFResult:
    """Converged (or flagged partial) eigenpairs with the iteration trace."""

    eigenpairs: list
    trace: tuple
    converged: bool
    iterations: int


def _orth(U):
    # thin QR without pivoting; columns with negligible diagonal are dropped
    Q, R = np.linalg.qr(U)
    diag = np.abs(np.diag(R))
    keep = diag > 1e-12 * diag.max() if diag.max() > 0 else diag > 0
    return Q[:, keep]


def sif(pencil, nep, region, config):
    """Subspace iteration with the rational filter on a structured pencil.

    Ritz pairs are classified by the scale-free residual
    ``sigma = ||T(lam) v_1|| / ((|c| + r) ||v_1||)`` (``v_1`` = leading block):
    pairs at or above ``tol_ghost`` are ghosts. The iteration stops once no
    ghost remains inside the region, every in-region pair is below
    ``tol_residual``, and the in-region count is stable across consecutive
    iterations. All Ritz vectors are carried into the next sweep regardless
    of region membership.
    """
    rule = quadrature(region.center, region.radius, config.quad_order)
    lus = _factor_poles(pencil, rule)
    sigma_shift = config.shift if config.shift is not None else default_shift(region)
    scale = abs(region.center) + region.radius
    row_scale = pencil.equilibration_scale()
    split = (pencil.gamma - 1) * pencil.n
    rng = np.random.default_rng(config.seed)
    Y = (rng.standard_normal((pencil.dim, config.subspace))
         + 1j * rng.standard_normal((pencil.dim, config.subspace)))

    trace = []
    converged = False
    prev_count = None
    prev_max_sigma = None
    ritz = []
    for it in range(1, config.max_iters + 1):
        U = apply_filter(pencil, rule, Y, lus=lus)
        V = _orth(U)
        # equilibrated left scaling (a diagonal equivalence on the pencil)
        C0V = pencil.apply_C0(V)
        C1V = pencil.apply_C1(V)
        C0V[split:] *= row_scale
        C1V[split:] *= row_scale
        W = _orth(C0V - sigma_shift * C1V)
        lam, X = scipy.linalg.eig(W.conj().T @ C0V, W.conj().T @ C1V)
        finite = np.isfinite(lam)
        lam, X = lam[finite], X[:, finite]
        Ritz = V @ X

        ritz = []
        ghost_count = 0  # ghosts inside the region
        sigmas_in = []
        for i in range(lam.size):
            if not bool(region.contains(lam[i])):
                continue
            v = Ritz[:, i]
            v1 = v[: pencil.n]
            nv1 = np.linalg.norm(v1)
            sig = (np.inf if nv1 == 0
                   else float(np.linalg.norm(nep.apply(lam[i], v1)) / (scale * nv1)))
            if sig >= config.tol_ghost:
                ghost_count += 1
            else:
                sigmas_in.append(sig)
                ritz.append((lam[i], v))
        count = len(sigmas_in)
        max_sigma = max(sigmas_in) if sigmas_in else float("nan")
        min_sigma = min(sigmas_in) if sigmas_in else float("nan")
        trace.append(SIFStep(it, count, ghost_count, max_sigma, min_sigma))

        if it > 2 and prev_max_sigma is not None and np.isfinite(prev_max_sigma) \
                and np.isfinite(max_sigma) and max_sigma > prev_max_sigma * (1 + 1e-8):
            warnings.warn(
                f"in-region residual increased at iteration {it} "
                f"({prev_max_sigma:.3e} -> {max_sigma:.3e})", stacklevel=2)
        prev_max_sigma = max_sigma

        done = (ghost_count == 0 and count == prev_count
                and (count == 0 or max_sigma < config.tol_residual))
        prev_count = count
        if done:
            converged = True
            break
        Y = Ritz

    eigenpairs = extract_nep_eigenpairs(ritz, pencil.poly.basis, nep, region)
    return SIFResult(eigenpairs=eigenpairs, trace=tuple(trace),
                     converged=converged, iterations=len(trace))


def write_sif_trace_csv(trace, path_or_file):
    """Write iteration records as ``iter,in_region_count,ghost_count,max_sigma,min_sigma``."""
    own = isinstance(path_or_file, (str, bytes))
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        writer = csv.writer(fh)
        writer.writerow(["iter", "in_region_count", "ghost_count",
                         "max_sigma", "min_sigma"])
        for step in trace:
            writer.writerow([step.iteration, step.in_region_count,
                             step.ghost_count, repr(step.max_sigma),
                             repr(step.min_sigma)])
    finally:
        if own:
            fh.close()
