"""Constrained least-squares unmixing against a fixed endmember matrix.

Three models share one deterministic active-set core, run in Gram space so
per-pixel iterations cost O(P^3) regardless of band count:

- "lmm": classic (fully) constrained least squares per pixel.
- "elmm-global": one positive scale per pixel on top of the simplex.
- "elmm-full": per-material scales, solved per pixel by block-coordinate
  descent with an exact convex refinement step.

Per-pixel problems are independent and touch no shared mutable state, so
pixels may be solved concurrently with results identical to a serial run.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any

import numpy as np

from .core import EndmemberMatrix, FloatArray, HyperCube, UnmixResult

SOLVER_MODELS = ("lmm", "elmm-global", "elmm-full")

#: Reduced-gradient slack at the active-set exit; well inside the 1e-8
#: feasibility the result contract promises for data of order unity.
_KKT_RTOL = 1e-10
_DROP_TOL = 1e-12
_MAX_OUTER_FACTOR = 30


@dataclass(frozen=True)
class SolverConfig:
    """Model choice, constraint flags and iteration budget for unmixing.

    Scaled models keep sum-to-one on: without it the product of scale and
    abundance is unidentifiable.  psi_bounds must bracket 1 so the plain
    mixing model stays inside the feasible set.
    """

    model: str = "elmm-full"
    sum_to_one: bool = True
    max_iters: int = 500
    tol: float = 1e-8
    psi_bounds: tuple[float, float] = (1e-2, 1e2)

    def __post_init__(self) -> None:
        if self.model not in SOLVER_MODELS:
            raise ValueError(f"unknown solver model {self.model!r}; expected one of {SOLVER_MODELS}")
        lo, hi = self.psi_bounds
        if not (0.0 < lo <= 1.0 <= hi):
            raise ValueError(f"psi_bounds must satisfy 0 < low <= 1 <= high, got {self.psi_bounds}")
        object.__setattr__(self, "psi_bounds", (float(lo), float(hi)))
        if not self.tol > 0.0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.model != "lmm" and not self.sum_to_one:
            raise ValueError(f"{self.model} requires sum_to_one: the scale/abundance split is "
                             "unidentifiable without the simplex constraint")

    def to_dict(self) -> dict[str, Any]:
        return {
            "model": self.model,
            "sum_to_one": self.sum_to_one,
            "max_iters": self.max_iters,
            "tol": self.tol,
            "psi_bounds": list(self.psi_bounds),
        }

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "SolverConfig":
        cfg = cls(
            model=raw.get("model", "elmm-full"),
            sum_to_one=bool(raw.get("sum_to_one", True)),
            max_iters=int(raw.get("max_iters", 500)),
            tol=float(raw.get("tol", 1e-8)),
            psi_bounds=tuple(raw.get("psi_bounds", (1e-2, 1e2))),
        )
        return cfg


# ---------------------------------------------------------------------------
# active-set core (Gram space)
# ---------------------------------------------------------------------------

def _nnls_gram(G: FloatArray, c: FloatArray) -> FloatArray:
    """min 0.5 a'Ga - c'a over a >= 0 (Lawson-Hanson on the Gram system).

    Entering variable: most negative multiplier, lowest index on ties.
    Exit guarantees every active multiplier >= -tol, tol scaled to the data.
    """
    n = c.size
    kkt_tol = _KKT_RTOL * max(1.0, float(np.max(np.abs(c))) if n else 1.0)
    a = np.zeros(n)
    free = np.zeros(n, dtype=bool)
    for _ in range(_MAX_OUTER_FACTOR * n + 30):
        w = c - G @ a  # negative gradient; actives want w <= tol
        w[free] = -np.inf
        j = int(np.argmax(w))
        if w[j] <= kkt_tol:
            return a
        free[j] = True
        for _ in range(_MAX_OUTER_FACTOR * n + 30):
            idx = np.flatnonzero(free)
            target = np.linalg.solve(G[np.ix_(idx, idx)], c[idx])
            if np.all(target > _DROP_TOL):
                a = np.zeros(n)
                a[idx] = target
                break
            current = a[idx]
            sink = target <= _DROP_TOL
            steps = current[sink] / (current[sink] - target[sink])
            alpha = float(np.min(steps))
            a[idx] = current + alpha * (target - current)
            drop = idx[a[idx] <= _DROP_TOL]
            a[drop] = 0.0
            free[drop] = False
            if not free.any():
                a = np.zeros(n)
                break
        else:
            raise RuntimeError("non-negative least squares inner loop did not converge")
    raise RuntimeError("non-negative least squares did not converge")


def _sum_constrained_gram(G: FloatArray, c: FloatArray, total: float) -> FloatArray:
    """min 0.5 a'Ga - c'a over a >= 0, sum(a) = total (> 0).

    Primal active set started from the uniform feasible point.  The KKT
    system carries the equality row; the entering variable is the active
    index with the most negative multiplier (lowest index on ties).
    """
    n = c.size
    kkt_tol = _KKT_RTOL * max(1.0, float(np.max(np.abs(c))) if n else 1.0)
    drop_tol = _DROP_TOL * max(1.0, total)
    a = np.full(n, total / n)
    free = np.ones(n, dtype=bool)
    lam = 0.0
    for _ in range(_MAX_OUTER_FACTOR * n + 30):
        for _ in range(_MAX_OUTER_FACTOR * n + 30):
            idx = np.flatnonzero(free)
            k = idx.size
            kkt = np.zeros((k + 1, k + 1))
            kkt[:k, :k] = G[np.ix_(idx, idx)]
            kkt[:k, k] = 1.0
            kkt[k, :k] = 1.0
            rhs = np.append(c[idx], total)
            solution = np.linalg.solve(kkt, rhs)
            target, lam = solution[:k], -solution[k]
            if np.all(target >= -drop_tol):
                a = np.zeros(n)
                a[idx] = np.maximum(target, 0.0)
                break
            current = a[idx]
            sink = target < -drop_tol
            steps = current[sink] / (current[sink] - target[sink])
            alpha = min(1.0, float(np.min(steps)))
            a[idx] = current + alpha * (target - current)
            drop = idx[a[idx] <= drop_tol]
            if drop.size == idx.size:
                # keep the largest entry so the sum constraint stays satisfiable
                drop = np.delete(drop, int(np.argmax(a[drop])))
            a[drop] = 0.0
            free[drop] = False
        active = ~free
        if not active.any():
            return a
        grad = G @ a - c
        multipliers = np.where(active, grad - lam, np.inf)
        j = int(np.argmin(multipliers))
        if multipliers[j] >= -kkt_tol:
            return a
        free[j] = True
    raise RuntimeError("sum-constrained least squares did not converge")


def _constrained_lstsq_gram(G: FloatArray, c: FloatArray, total: float | None) -> FloatArray:
    if total is None:
        return _nnls_gram(G, c)
    return _sum_constrained_gram(G, c, total)


def _best_mixture(G: FloatArray, c: FloatArray, lo: float, hi: float) -> FloatArray:
    """Exact minimizer of the mixture fit over {z >= 0, lo <= sum(z) <= hi}.

    This box on the coefficient sum is precisely the image of the scaled
    simplex parameterizations, so it bounds every scaled model from below.
    """
    z = _nnls_gram(G, c)
    s = float(z.sum())
    if s < lo:
        return _sum_constrained_gram(G, c, lo)
    if s > hi:
        return _sum_constrained_gram(G, c, hi)
    return z


def _quad_objective(G: FloatArray, c: FloatArray, x_sq: float, z: FloatArray) -> float:
    return float(x_sq - 2.0 * (c @ z) + z @ G @ z)


# ---------------------------------------------------------------------------
# public per-pixel operations
# ---------------------------------------------------------------------------

def _endmember_array(S0) -> FloatArray:
    arr = S0.values if isinstance(S0, EndmemberMatrix) else np.asarray(S0, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"endmember matrix must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("endmember matrix must be finite")
    return arr


def _check_endmembers(S: FloatArray) -> None:
    n_bands, n_materials = S.shape
    if n_bands < n_materials:
        raise ValueError(
            f"need at least as many bands as materials, got {n_bands} bands for {n_materials}"
        )
    if np.linalg.matrix_rank(S) < n_materials:
        raise ValueError("endmember matrix is rank deficient; materials are not independent")


def fcls(x, S0, sum_to_one: bool = True) -> FloatArray:
    """Least-squares abundances of one pixel under non-negativity.

    Minimizes |x - S0 a| subject to a >= 0 and, when sum_to_one is set,
    sum(a) = 1.  The active-set exit verifies the reduced gradient of every
    zeroed material is > -1e-8, i.e. the KKT conditions hold.
    """
    S = _endmember_array(S0)
    x_arr = np.asarray(x, dtype=float)
    if x_arr.ndim != 1 or x_arr.size != S.shape[0]:
        raise ValueError(f"pixel spectrum length {x_arr.shape} does not match {S.shape[0]} bands")
    _check_endmembers(S)
    return _constrained_lstsq_gram(S.T @ S, S.T @ x_arr, 1.0 if sum_to_one else None)


@dataclass(frozen=True)
class GlobalScalingFit:
    """Per-pixel result of the globally scaled mixing model."""

    abundances: FloatArray
    scale: float
    degenerate: bool = False


def _global_pixel(
    G: FloatArray, c: FloatArray, lo: float, hi: float
) -> tuple[FloatArray, float, bool]:
    z = _nnls_gram(G, c)
    s = float(z.sum())
    if s <= 0.0:
        # x has no component in the cone: scale is arbitrary, report floor
        n = c.size
        return np.full(n, 1.0 / n), lo, True
    if lo <= s <= hi:
        return z / s, s, False
    bound = lo if s < lo else hi
    v = _sum_constrained_gram(G, c, bound)
    return v / bound, bound, False


def unmix_elmm_global(x, S0, config: SolverConfig) -> GlobalScalingFit:
    """Fit one pixel as a single positive scale times a simplex mixture.

    Solves non-negative least squares for the scaled abundances z, then
    splits z into scale = sum(z) and abundances z / sum(z).  When the sum
    falls outside psi_bounds the fit is re-solved on that bound, which is
    the exact constrained optimum.  A pixel with no component in the
    endmember cone (z = 0) is degenerate: uniform abundances are returned
    with the scale clamped to the lower bound and the flag set.
    """
    S = _endmember_array(S0)
    x_arr = np.asarray(x, dtype=float)
    if x_arr.ndim != 1 or x_arr.size != S.shape[0]:
        raise ValueError(f"pixel spectrum length {x_arr.shape} does not match {S.shape[0]} bands")
    _check_endmembers(S)
    lo, hi = config.psi_bounds
    a, scale, degenerate = _global_pixel(S.T @ S, S.T @ x_arr, lo, hi)
    return GlobalScalingFit(abundances=a, scale=scale, degenerate=degenerate)


# ---------------------------------------------------------------------------
# per-material scaling: block-coordinate descent per pixel
# ---------------------------------------------------------------------------

def _bcd_pixel(
    G: FloatArray,
    c: FloatArray,
    x_sq: float,
    best_z: FloatArray,
    best_f: float,
    lo: float,
    hi: float,
    max_iters: int,
    tol: float,
) -> tuple[FloatArray, FloatArray, FloatArray, bool]:
    """Minimize |x - S0 (psi * a)|^2 over the simplex and psi in [lo, hi].

    Each iteration: (i) exact simplex-constrained abundances against the
    psi-scaled matrix, (ii) a Gauss-Seidel sweep of closed-form psi updates
    projected onto the bounds (materials with zero abundance keep psi = 1
    by convention), (iii) adoption of the precomputed exact optimum of the
    equivalent convex program when it does not lose to the sweep iterate.
    Every step is an exact minimization from a feasible point, so the
    recorded objective never increases.  The returned factorization is
    canonical: abundances z / sum(z) with one shared scale sum(z).
    """
    n = c.size
    diag = np.diag(G).copy()
    a = _sum_constrained_gram(G, c, 1.0)
    psi = np.ones(n)
    z = psi * a
    f = _quad_objective(G, c, x_sq, z)
    trace = [f]
    converged = False
    for _ in range(max_iters):
        scaled_G = G * np.outer(psi, psi)
        a = _sum_constrained_gram(scaled_G, psi * c, 1.0)
        z = psi * a
        for p in range(n):
            if a[p] <= 0.0:
                psi[p] = 1.0
                z[p] = 0.0
                continue
            # correlation of column p with the residual excluding material p
            column_fit = c[p] - (G[p] @ z - G[p, p] * z[p])
            psi[p] = min(max(column_fit / (a[p] * diag[p]), lo), hi)
            z[p] = psi[p] * a[p]
        f_sweep = _quad_objective(G, c, x_sq, z)
        if best_f <= f_sweep:
            total = float(best_z.sum())
            a = best_z / total
            psi = np.where(a > 0.0, total, 1.0)
            z = best_z
            f_new = best_f
        else:
            f_new = f_sweep
        trace.append(f_new)
        if f - f_new <= tol * max(f, np.finfo(float).tiny):
            f = f_new
            converged = True
            break
        f = f_new
    total = float(z.sum())
    if total > 0.0:
        a = z / total
        psi = np.where(a > 0.0, total, 1.0)
    return a, psi, np.asarray(trace), converged


def unmix_elmm_full(cube: HyperCube, S0, config: SolverConfig | None = None) -> UnmixResult:
    """Unmix a cube with per-pixel, per-material scaling factors."""
    config = config or SolverConfig(model="elmm-full")
    return unmix_cube(cube, S0, replace(config, model="elmm-full"))


def unmix_cube(cube: HyperCube, S0, config: SolverConfig) -> UnmixResult:
    """Unmix every pixel of a cube under the configured model.

    Returns abundances, scaling factors (all ones for the plain mixing
    model), per-pixel reconstruction RMSE, iteration counts and the
    per-pixel objective traces.
    """
    X = cube.values if isinstance(cube, HyperCube) else np.asarray(cube, dtype=float)
    S = _endmember_array(S0)
    if X.ndim != 2 or X.shape[0] != S.shape[0]:
        raise ValueError(
            f"cube has {X.shape[0] if X.ndim == 2 else '?'} bands, endmembers have {S.shape[0]}"
        )
    _check_endmembers(S)
    n_bands, n_pixels = X.shape
    n_materials = S.shape[1]
    lo, hi = config.psi_bounds

    G = S.T @ S
    C = S.T @ X  # P x N cross terms: the only O(L) work per pixel
    x_sq = np.einsum("ln,ln->n", X, X)

    A = np.empty((n_materials, n_pixels))
    psi = np.ones((n_materials, n_pixels))
    iterations = np.ones(n_pixels, dtype=np.int64)
    degenerate = np.zeros(n_pixels, dtype=bool)
    traces: list[FloatArray] = []
    all_converged = True

    if config.model == "lmm":
        total = 1.0 if config.sum_to_one else None
        for n in range(n_pixels):
            a = _constrained_lstsq_gram(G, C[:, n], total)
            A[:, n] = a
            traces.append(np.asarray([_quad_objective(G, C[:, n], float(x_sq[n]), a)]))
    elif config.model == "elmm-global":
        for n in range(n_pixels):
            a, scale, is_degenerate = _global_pixel(G, C[:, n], lo, hi)
            A[:, n] = a
            psi[:, n] = scale
            degenerate[n] = is_degenerate
            traces.append(
                np.asarray([_quad_objective(G, C[:, n], float(x_sq[n]), scale * a)])
            )
    else:
        for n in range(n_pixels):
            c = C[:, n]
            best_z = _best_mixture(G, c, lo, hi)
            best_f = _quad_objective(G, c, float(x_sq[n]), best_z)
            a, p, trace, converged = _bcd_pixel(
                G, c, float(x_sq[n]), best_z, best_f, lo, hi, config.max_iters, config.tol
            )
            A[:, n] = a
            psi[:, n] = p
            iterations[n] = trace.size - 1
            traces.append(trace)
            all_converged &= converged

    residual = X - S @ (psi * A)
    residual_rmse = np.sqrt(np.mean(residual * residual, axis=0))
    return UnmixResult(
        abundances=A,
        scales=psi,
        residual_rmse=residual_rmse,
        iterations=iterations,
        converged=bool(all_converged),
        sum_to_one=config.sum_to_one,
        objective_traces=tuple(traces),
        degenerate=degenerate,
    )
