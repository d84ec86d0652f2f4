"""Denoising of two-level step data on a quadratic manifold.

Four regimes: direct least squares on the noisy samples (small or
manifold-attached noise), known-variance moment de-biasing, k-NN index
voting, and an iterative scheme that projects the estimated noise onto the
subspace allowed by a set of moment constraints.

All x-coordinates are rescaled to [-1, 1] internally for conditioning; the
four manifold coefficients are reported in raw coordinates.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .linalg import RankDeficiencyError, pivoted_qr, weighted_lsq
from .orthopoly import legendre_row
from .representation import (
    BASIS_MONOMIAL,
    Degree2Rep,
    IndexFunction,
    PolyCoeffs,
    _branch_roots,
    eval_rep,
)

__all__ = [
    "NoisyDataset",
    "MomentSet",
    "ManifoldFit4",
    "NoiseConstraintSet",
    "MomentSystemError",
    "SingularConstraintError",
    "normal_stream",
    "step_ground_truth",
    "generate_noisy",
    "fit_manifold_ls",
    "compute_noisy_moments",
    "debias_moments",
    "solve_moment_system",
    "nearest_root_signs",
    "knn_vote_index",
    "reconstruct",
    "clamped_reconstruct",
    "ls_vote_baseline",
    "denoise_case3",
    "Case3Result",
    "noise_constraints",
    "project_noise",
    "constraint_residuals",
    "denoise_iterative",
    "IterativeResult",
    "write_dataset",
    "read_dataset",
    "ALL_CONSTRAINTS",
    "NOISE_PRESETS",
]

STEP_LOW = 25.0
STEP_HIGH = 255.0
STEP_JUMP_AT = 140.0

ALL_CONSTRAINTS = ("1", "x", "x2", "f", "xf", "x2f", "f2", "xf2")

# presets: (noise model, sigma)
NOISE_PRESETS = {
    "case1": ("function", 30.0),
    "case2": ("manifold", 5000.0),
    "case3": ("function", 150.0),
    "case4": ("function", 200.0),
}


class MomentSystemError(ArithmeticError):
    """The 4x4 moment system is singular or too ill-conditioned to trust."""

    def __init__(self, message: str, condition: float):
        super().__init__(message)
        self.condition = condition


class SingularConstraintError(ValueError):
    """The noise-constraint system is inconsistent (dependent constraints disagree)."""

    def __init__(self, message: str, dependent: tuple[str, ...]):
        super().__init__(message)
        self.dependent = dependent


def normal_stream(seed: int, n: int) -> np.ndarray:
    """Standard normal deviates from a 64-bit counter-based stream (Philox)
    plus Box-Muller, so sequences are reproducible across platforms."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return np.empty(0)
    pairs = (n + 1) // 2
    bits = np.random.Philox(key=seed).random_raw(2 * pairs)
    u = (bits >> np.uint64(11)) * (2.0 ** -53)  # uniforms in [0, 1)
    u1, u2 = u[0::2], u[1::2]
    radius = np.sqrt(-2.0 * np.log1p(-u1))  # 1-u1 in (0, 1]: log is finite
    angle = 2.0 * np.pi * u2
    z = np.empty(2 * pairs)
    z[0::2] = radius * np.cos(angle)
    z[1::2] = radius * np.sin(angle)
    return z[:n]


@dataclass(frozen=True)
class NoisyDataset:
    """Observed samples at strictly increasing positions, plus noise metadata."""

    positions: np.ndarray
    observed: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        positions = np.asarray(self.positions, dtype=float)
        observed = np.asarray(self.observed, dtype=float)
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "observed", observed)
        if positions.ndim != 1 or positions.shape != observed.shape or positions.size < 2:
            raise ValueError("positions/observed must be matching 1-D arrays")
        if np.any(np.diff(positions) <= 0):
            raise ValueError("positions must be strictly increasing")
        if not np.all(np.isfinite(observed)):
            raise ValueError("observed values must be finite")

    @property
    def size(self) -> int:
        return self.positions.size

    @property
    def domain(self) -> tuple[float, float]:
        return (float(self.positions[0]), float(self.positions[-1]))

    def unit_positions(self) -> np.ndarray:
        lo, hi = self.domain
        return (2.0 * self.positions - (lo + hi)) / (hi - lo)


def step_ground_truth(positions) -> np.ndarray:
    """The two-level reference signal: 25 up to x=140 inclusive, 255 after."""
    positions = np.asarray(positions, dtype=float)
    return np.where(positions <= STEP_JUMP_AT, STEP_LOW, STEP_HIGH)


def generate_noisy(positions, truth, model: str, sigma: float, seed: int,
                   roots: tuple[float, float] = (STEP_LOW, STEP_HIGH)) -> NoisyDataset:
    """Synthesize noisy observations of ``truth`` at ``positions``.

    ``function`` noise adds sigma * z pointwise.  ``manifold`` noise perturbs
    the quadratic relation (f-r_lo)(f-r_hi) = eps and re-solves for the
    observation on the ground-truth branch; points whose perturbed
    discriminant goes negative are clamped to the vertex and counted.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    positions = np.asarray(positions, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if truth.shape != positions.shape:
        raise ValueError("truth and positions must have matching shapes")
    z = normal_stream(seed, positions.size)
    eps = sigma * z
    meta = {"noise_model": model, "sigma": float(sigma), "seed": int(seed)}
    if model == "function":
        observed = truth + eps
    elif model == "manifold":
        r_lo, r_hi = roots
        mid = 0.5 * (r_lo + r_hi)
        half = 0.5 * (r_hi - r_lo)
        disc = half * half + eps
        clamped = disc < 0.0
        root_offset = np.sqrt(np.maximum(disc, 0.0))
        on_high = truth > mid
        observed = np.where(on_high, mid + root_offset, mid - root_offset)
        meta["clamped_points"] = int(np.sum(clamped))
    else:
        raise ValueError(f"unknown noise model {model!r}")
    return NoisyDataset(positions=positions, observed=observed, metadata=meta)


# --------------------------------------------------------------------------
# four-coefficient manifold fits
# --------------------------------------------------------------------------

_LS_COLUMN_NAMES = ("f", "x*f", "1", "x")


@dataclass(frozen=True)
class ManifoldFit4:
    """Coefficients of f^2 - (b0 + b1 x) f - (c0 + c1 x) = 0 in raw x."""

    b0: float
    b1: float
    c0: float
    c1: float
    method: str
    residual: float = float("nan")
    condition: float = float("nan")

    def as_rep(self, domain: tuple[float, float]) -> Degree2Rep:
        return Degree2Rep(
            a=PolyCoeffs(BASIS_MONOMIAL, [1.0], domain),
            b=PolyCoeffs(BASIS_MONOMIAL, [self.b0, self.b1], domain),
            c=PolyCoeffs(BASIS_MONOMIAL, [self.c0, self.c1], domain),
            index=None,
            fit_residual=self.residual,
            provenance={"method": self.method},
        )


def _unit_to_raw(b0, b1, c0, c1, lo, hi):
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    return (b0 - b1 * center / half, b1 / half,
            c0 - c1 * center / half, c1 / half)


def fit_manifold_ls(data: NoisyDataset) -> ManifoldFit4:
    """Plain least squares of f~^2 against {f~, x f~, 1, x} (Cases 1 and 2)."""
    if data.size < 4:
        raise ValueError("need at least 4 samples")
    t = data.unit_positions()
    f = data.observed
    design = np.column_stack([f, t * f, np.ones_like(t), t])
    try:
        beta, resid = weighted_lsq(design, f * f, np.ones_like(t))
    except RankDeficiencyError as exc:
        fact = pivoted_qr(design)
        worst = _LS_COLUMN_NAMES[fact.perm[-1]]
        raise RankDeficiencyError(
            f"degenerate design (column {worst!r} dependent); is f~ constant?",
            exc.numerical_rank,
        ) from exc
    cond = float(np.linalg.cond(design))
    lo, hi = data.domain
    b0, b1, c0, c1 = _unit_to_raw(beta[0], beta[1], beta[2], beta[3], lo, hi)
    return ManifoldFit4(b0=b0, b1=b1, c0=c0, c1=c1, method="ls",
                        residual=resid, condition=cond)


# --------------------------------------------------------------------------
# moments and de-biasing
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MomentSet:
    """Discrete inner-product moments (unit weights) in the rescaled coordinate.

    ``center`` and ``halfwidth`` record the affine map raw_x = center +
    halfwidth * x used when the moments were computed, so solutions can be
    reported in raw coordinates.
    """

    s0: float
    sx: float
    sx2: float
    m_f: float
    m_xf: float
    m_x2f: float
    m_f2: float
    m_xf2: float
    m_x2f2: float
    m_f3: float
    m_xf3: float
    center: float = 0.0
    halfwidth: float = 1.0

    def __post_init__(self):
        if self.s0 <= 0:
            raise ValueError("S0 must be positive")
        if self.sx2 < self.sx * self.sx / self.s0 - 1e-9 * max(self.sx2, 1.0):
            raise ValueError("moment set violates Cauchy-Schwarz")


def compute_noisy_moments(data: NoisyDataset) -> MomentSet:
    """All eleven moments of the observed data (sums over samples)."""
    t = data.unit_positions()
    f = data.observed
    lo, hi = data.domain
    return MomentSet(
        s0=float(data.size),
        sx=float(np.sum(t)),
        sx2=float(np.sum(t * t)),
        m_f=float(np.sum(f)),
        m_xf=float(np.sum(t * f)),
        m_x2f=float(np.sum(t * t * f)),
        m_f2=float(np.sum(f * f)),
        m_xf2=float(np.sum(t * f * f)),
        m_x2f2=float(np.sum(t * t * f * f)),
        m_f3=float(np.sum(f ** 3)),
        m_xf3=float(np.sum(t * f ** 3)),
        center=0.5 * (lo + hi),
        halfwidth=0.5 * (hi - lo),
    )


def debias_moments(noisy: MomentSet, sigma2: float) -> MomentSet:
    """Remove the known-variance noise bias from the f^2 and f^3 moments.

    First-order moments are already unbiased; the quadratic ones lose
    sigma^2 * S-terms and the cubic ones 3 sigma^2 times the first-order
    moments.
    """
    if sigma2 < 0:
        raise ValueError("sigma2 must be >= 0")
    return replace(
        noisy,
        m_f2=noisy.m_f2 - sigma2 * noisy.s0,
        m_xf2=noisy.m_xf2 - sigma2 * noisy.sx,
        m_x2f2=noisy.m_x2f2 - sigma2 * noisy.sx2,
        m_f3=noisy.m_f3 - 3.0 * sigma2 * noisy.m_f,
        m_xf3=noisy.m_xf3 - 3.0 * sigma2 * noisy.m_xf,
    )


def solve_moment_system(m: MomentSet, method: str = "debias") -> ManifoldFit4:
    """Solve the 4x4 orthogonality system for (b0, b1, c0, c1).

    Rows enforce <r,1> = <r,x> = <r,f> = <r,xf> = 0 for the manifold residual
    r = f^2 - (b0+b1x) f - (c0+c1x).
    """
    a = np.array([
        [m.m_f, m.m_xf, m.s0, m.sx],
        [m.m_xf, m.m_x2f, m.sx, m.sx2],
        [m.m_f2, m.m_xf2, m.m_f, m.m_xf],
        [m.m_xf2, m.m_x2f2, m.m_xf, m.m_x2f],
    ])
    rhs = np.array([m.m_f2, m.m_xf2, m.m_f3, m.m_xf3])
    cond = float(np.linalg.cond(a))
    if not np.isfinite(cond) or cond > 1e10:
        raise MomentSystemError(f"moment system condition {cond:.3e}", cond)
    sol = np.linalg.solve(a, rhs)
    lo = m.center - m.halfwidth
    hi = m.center + m.halfwidth
    b0, b1, c0, c1 = _unit_to_raw(sol[0], sol[1], sol[2], sol[3], lo, hi)
    return ManifoldFit4(b0=b0, b1=b1, c0=c0, c1=c1, method=method, condition=cond)


# --------------------------------------------------------------------------
# index voting and the Case-3 pipeline
# --------------------------------------------------------------------------


def nearest_root_signs(rep: Degree2Rep, positions, values) -> np.ndarray:
    """+1 where the plus branch is nearer the observation, else -1 (ties +1)."""
    positions = np.asarray(positions, dtype=float)
    values = np.asarray(values, dtype=float)
    minus, plus, _, _, _, complex_mask = _branch_roots(rep, positions, raise_on_complex=False)
    signs = np.where(np.abs(values - plus) <= np.abs(values - minus), 1, -1)
    for i in np.nonzero(complex_mask)[0]:
        signs[i] = signs[i - 1] if i > 0 else 1
    return signs


def _knn_windows(positions: np.ndarray, k: int) -> np.ndarray:
    """Start index of each point's (k+1)-wide nearest-neighbor window."""
    n = positions.size
    starts = np.empty(n, dtype=int)
    for i in range(n):
        lo_min = max(0, i - k)
        lo_max = min(i, n - k - 1)
        best_lo, best_span = lo_min, math.inf
        for lo in range(lo_min, lo_max + 1):
            span = max(positions[i] - positions[lo], positions[lo + k] - positions[i])
            if span < best_span:
                best_lo, best_span = lo, span
        starts[i] = best_lo
    return starts


def knn_vote_index(signs, positions, k: int = 10, max_rounds: int = 100):
    """Iterated majority vote of each point with its k nearest neighbors.

    Rounds are synchronous; voting stops when a round changes nothing.
    Returns (IndexFunction, rounds used, converged flag).  An exact tie
    (possible only for odd k, even electorate) keeps the current sign.
    """
    signs = np.asarray(signs, dtype=int).copy()
    positions = np.asarray(positions, dtype=float)
    n = signs.size
    if positions.shape != signs.shape:
        raise ValueError("signs and positions must match")
    if not 1 <= k < n:
        raise ValueError("need 1 <= k < sample count")
    starts = _knn_windows(positions, k)
    cumlen = k + 1
    rounds = 0
    converged = False
    for rounds in range(1, max_rounds + 1):
        csum = np.concatenate([[0], np.cumsum(signs)])
        totals = csum[starts + cumlen] - csum[starts]
        new = np.where(totals > 0, 1, np.where(totals < 0, -1, signs))
        if np.array_equal(new, signs):
            converged = True
            break
        signs = new
    return IndexFunction.from_dense(positions, signs), rounds, converged


@dataclass(frozen=True)
class Case3Result:
    fit: ManifoldFit4
    index: IndexFunction
    reconstructed: np.ndarray
    noise_estimate: np.ndarray
    vote_rounds: int
    vote_converged: bool
    clamped_points: int = 0


def reconstruct(rep: Degree2Rep, positions, index: IndexFunction) -> np.ndarray:
    """Root values selected by the (possibly externally voted) index."""
    return np.atleast_1d(eval_rep(replace(rep, index=index), np.asarray(positions, dtype=float)))


def clamped_reconstruct(rep: Degree2Rep, positions, index: IndexFunction):
    """Like reconstruct, but nodes whose discriminant is negative get the
    manifold vertex b/(2a) instead of failing; returns (values, clamp count).

    Mirrors the clamp-to-vertex convention of manifold-noise generation.
    """
    positions = np.asarray(positions, dtype=float)
    minus, plus, _, _, _, complex_mask = _branch_roots(rep, positions, raise_on_complex=False)
    zeta = np.atleast_1d(index.signs_at(positions))
    values = np.where(zeta > 0, plus, minus)
    n_clamped = int(np.sum(complex_mask))
    if n_clamped:
        av = np.atleast_1d(rep.a.evaluate(positions[complex_mask]))
        bv = np.atleast_1d(rep.b.evaluate(positions[complex_mask]))
        values = values.copy()
        values[complex_mask] = bv / (2.0 * av)
    return values, n_clamped


def denoise_case3(data: NoisyDataset, sigma2: float, k: int = 10) -> Case3Result:
    """Known-variance pipeline: moments -> de-bias -> 4x4 solve -> vote -> rebuild."""
    if sigma2 <= 0:
        raise ValueError("case 3 needs a known sigma2 > 0")
    moments = compute_noisy_moments(data)
    fit = solve_moment_system(debias_moments(moments, sigma2), method="debias")
    rep = fit.as_rep(data.domain)
    signs = nearest_root_signs(rep, data.positions, data.observed)
    index, rounds, converged = knn_vote_index(signs, data.positions, k=k)
    values, n_clamped = clamped_reconstruct(rep, data.positions, index)
    return Case3Result(fit=fit, index=index, reconstructed=values,
                       noise_estimate=data.observed - values,
                       vote_rounds=rounds, vote_converged=converged,
                       clamped_points=n_clamped)


# --------------------------------------------------------------------------
# constraint projection and the Case-4 iteration
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class NoiseConstraintSet:
    """Sampled constraint functionals g_j with <g_j, eps> = 0 expected.

    ``gram_rank`` is the numerical rank of the vectors: constraint sets built
    from values lying exactly on a quadratic manifold are structurally
    dependent (f^2 is then a combination of {1, x, f, xf}), which is legal as
    long as the dependent constraints stay consistent.
    """

    names: tuple[str, ...]
    vectors: np.ndarray
    unit_positions: np.ndarray
    gram_rank: int
    dependent: tuple[str, ...]

    @property
    def count(self) -> int:
        return len(self.names)


def noise_constraints(unit_positions, f_values,
                      names: tuple[str, ...] = ALL_CONSTRAINTS) -> NoiseConstraintSet:
    """Build constraint vectors from {1, x, x^2, f, xf, x^2 f, f^2, xf^2}."""
    t = np.asarray(unit_positions, dtype=float)
    f = np.asarray(f_values, dtype=float)
    table = {
        "1": np.ones_like(t),
        "x": t,
        "x2": t * t,
        "f": f,
        "xf": t * f,
        "x2f": t * t * f,
        "f2": f * f,
        "xf2": t * f * f,
    }
    unknown = [n for n in names if n not in table]
    if unknown:
        raise ValueError(f"unknown constraint names {unknown}")
    vectors = np.column_stack([table[n] for n in names])
    scaled = vectors / np.linalg.norm(vectors, axis=0, keepdims=True)
    fact = pivoted_qr(scaled)
    rank = fact.rank(1e-10)
    dependent = tuple(names[j] for j in fact.perm[rank:])
    return NoiseConstraintSet(names=tuple(names), vectors=vectors,
                              unit_positions=t, gram_rank=rank, dependent=dependent)


def project_noise(residual, constraints: NoiseConstraintSet,
                  n_modes: int | None = None):
    """Split the estimated noise into a smooth Legendre part fixed by the
    constraints and a remainder satisfying them.

    Solves <g_j, sum_n c_n L_n> = <g_j, residual> for the mode coefficients
    (minimum-norm when the constraint set is dependent but consistent) and
    returns (corrected residual, mode coefficients).  The corrected residual
    satisfies every constraint to 1e-9 * ||residual||; if it cannot (the
    dependent constraints disagree), SingularConstraintError is raised.
    """
    eps = np.asarray(residual, dtype=float)
    k = constraints.count if n_modes is None else n_modes
    modes = legendre_row(k - 1, np.clip(constraints.unit_positions, -1.0, 1.0))
    # row-normalize: the constraints are homogeneous and their vectors span
    # wildly different scales (f^2 vs 1), so solve in unit-norm rows
    g = constraints.vectors / np.linalg.norm(constraints.vectors, axis=0, keepdims=True)
    system = g.T @ modes
    rhs = g.T @ eps
    coeffs, *_ = np.linalg.lstsq(system, rhs, rcond=1e-10)
    corrected = eps - modes @ coeffs
    scale = float(np.linalg.norm(eps))
    # constraints are homogeneous: check them per unit constraint-vector norm
    leftover = constraint_residuals(corrected, constraints)
    if scale > 0 and np.any(leftover > 1e-9 * scale):
        raise SingularConstraintError(
            "constraint system is inconsistent; dependent constraints "
            f"{constraints.dependent} disagree", constraints.dependent)
    assert scale == 0 or np.all(leftover <= 1e-9 * scale)
    return corrected, coeffs


def constraint_residuals(residual, constraints: NoiseConstraintSet) -> np.ndarray:
    """|<g_j, residual>| / ||g_j|| for every constraint vector."""
    g = constraints.vectors
    norms = np.linalg.norm(g, axis=0)
    return np.abs(g.T @ np.asarray(residual, dtype=float)) / norms


@dataclass(frozen=True)
class IterativeResult:
    fit: ManifoldFit4
    index: IndexFunction
    reconstructed: np.ndarray
    coefficient_trace: tuple
    converged: bool
    iterations: int
    max_constraint_residual: float


def _fit_and_vote(data_like: NoisyDataset, k: int):
    fit = fit_manifold_ls(data_like)
    rep = fit.as_rep(data_like.domain)
    signs = nearest_root_signs(rep, data_like.positions, data_like.observed)
    index, _, _ = knn_vote_index(signs, data_like.positions, k=k)
    return fit, rep, index


def ls_vote_baseline(data: NoisyDataset, k: int = 10):
    """Case-1 style least squares plus voting; returns (fit, index, values, clamps)."""
    fit, rep, index = _fit_and_vote(data, k)
    values, n_clamped = clamped_reconstruct(rep, data.positions, index)
    return fit, index, values, n_clamped


def denoise_iterative(data: NoisyDataset,
                      constraint_names: tuple[str, ...] = ALL_CONSTRAINTS,
                      init: str = "case1",
                      sigma2_0: float | None = None,
                      k: int = 10,
                      max_iter: int = 50,
                      tol: float = 1e-6) -> IterativeResult:
    """Iterative noise projection (Case 4).

    Per iteration: estimate the noise as data minus the current on-manifold
    reconstruction, project it onto the constraint-compatible subspace,
    subtract the smooth excess from the data, refit the manifold and re-vote
    the index.  Converged when the coefficients move by < tol (relative) and
    no index sign flips.  Constraint vectors that involve f use the current
    iterate, rebuilt every iteration.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    t = data.unit_positions()
    if init in ("case1", "case2"):
        fit, rep, index = _fit_and_vote(data, k)
    elif init == "case3":
        if sigma2_0 is None:
            raise ValueError("case3 initialization needs sigma2_0")
        res = denoise_case3(data, sigma2_0, k=k)
        fit, index = res.fit, res.index
        rep = fit.as_rep(data.domain)
    else:
        raise ValueError(f"unknown init mode {init!r}")

    values, _ = clamped_reconstruct(rep, data.positions, index)
    prev_coeffs = np.array([fit.b0, fit.b1, fit.c0, fit.c1])
    prev_signs = index.dense(data.positions)
    trace = [tuple(prev_coeffs)]
    converged = False
    iterations = 0
    max_constraint_residual = 0.0
    for iterations in range(1, max_iter + 1):
        est_noise = data.observed - values
        try:
            constraints = noise_constraints(t, values, constraint_names)
            corrected, _ = project_noise(est_noise, constraints)
            scale = np.linalg.norm(est_noise)
            if scale > 0:
                res_now = float(np.max(constraint_residuals(corrected, constraints)) / scale)
                max_constraint_residual = max(max_constraint_residual, res_now)
            improved = NoisyDataset(positions=data.positions,
                                    observed=data.observed - corrected,
                                    metadata=data.metadata)
            new_fit, rep, new_index = _fit_and_vote(improved, k)
            new_values, _ = clamped_reconstruct(rep, data.positions, new_index)
        except (ArithmeticError, np.linalg.LinAlgError, SingularConstraintError):
            # iterate left the representable region: keep the last good one
            break
        fit, index, values = new_fit, new_index, new_values
        coeffs = np.array([fit.b0, fit.b1, fit.c0, fit.c1])
        trace.append(tuple(coeffs))
        signs = index.dense(data.positions)
        # coefficient movement relative to the coefficient scale
        denom = max(float(np.max(np.abs(prev_coeffs))), 1e-12)
        coeff_move = float(np.max(np.abs(coeffs - prev_coeffs)) / denom)
        flips = int(np.sum(signs != prev_signs))
        prev_coeffs, prev_signs = coeffs, signs
        if coeff_move < tol and flips == 0:
            converged = True
            break
    fit = replace(fit, method="iterative")
    return IterativeResult(fit=fit, index=index, reconstructed=values,
                           coefficient_trace=tuple(trace), converged=converged,
                           iterations=iterations,
                           max_constraint_residual=max_constraint_residual)


# --------------------------------------------------------------------------
# CSV + metadata sidecar
# --------------------------------------------------------------------------


def _sidecar_path(path: str) -> str:
    stem = path[:-4] if str(path).endswith(".csv") else str(path)
    return f"{stem}.meta.json"


def write_dataset(path, data: NoisyDataset) -> None:
    """CSV with header ``x,f`` plus a metadata sidecar JSON."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "f"])
        for x, f in zip(data.positions, data.observed):
            writer.writerow([repr(float(x)), repr(float(f))])
    with open(_sidecar_path(str(path)), "w") as fh:
        json.dump(data.metadata, fh, indent=2)
        fh.write("\n")


def read_dataset(path) -> NoisyDataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip() for h in header[:2]] != ["x", "f"]:
            raise ValueError(f"expected 'x,f' header, got {header}")
        rows = [(float(r[0]), float(r[1])) for r in reader if r]
    positions = np.array([r[0] for r in rows])
    observed = np.array([r[1] for r in rows])
    metadata = {}
    try:
        with open(_sidecar_path(str(path))) as fh:
            metadata = json.load(fh)
    except FileNotFoundError:
        pass
    return NoisyDataset(positions=positions, observed=observed, metadata=metadata)
