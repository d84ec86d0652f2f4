"""Degree-0/1/2 function representations, their fits, and stable evaluation.

The degree-2 object is a triple of coefficient polynomials (a, b, c) with
``a f^2 - b f - c = 0`` plus a per-location sign (the index) choosing between
the two quadratic roots.  Roots are always computed with the
cancellation-free form of the quadratic formula.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.polynomial import legendre as npleg
from numpy.polynomial import polynomial as nppoly

from .dictionary import SampleGrid, assemble, STREAM_PLAIN, STREAM_F, STREAM_F2
from .linalg import RankDeficiencyError, pivoted_qr, weighted_lsq
from .orthopoly import legendre_row

__all__ = [
    "BASIS_LEGENDRE",
    "BASIS_MONOMIAL",
    "ComplexRootError",
    "PoleError",
    "EvaluationError",
    "PolyCoeffs",
    "Degree0Rep",
    "Degree1Rep",
    "IndexFunction",
    "Degree2Rep",
    "RootResult",
    "basis_convert",
    "fit_degree0",
    "fit_degree1",
    "fit_degree2_uniform",
    "roots_at",
    "assign_index",
    "eval_rep",
    "compose_piecewise_manifold",
    "residual_l2",
    "relative_l2",
    "rep_to_dict",
    "rep_from_dict",
    "save_rep",
    "load_rep",
]

BASIS_LEGENDRE = "legendre-normalized"
BASIS_MONOMIAL = "monomial"

A_DEGENERACY_RTOL = 1e-10  # |a(x)| below this times max|a| -> treat as linear
SQRT2 = math.sqrt(2.0)


class ComplexRootError(ArithmeticError):
    """The manifold discriminant is negative beyond tolerance."""

    def __init__(self, message: str, discriminant: float):
        super().__init__(message)
        self.discriminant = discriminant


class PoleError(ArithmeticError):
    """A rational representation was evaluated at (numerically) a pole."""


class EvaluationError(ArithmeticError):
    """The representation cannot produce a value at the requested point."""


@dataclass(frozen=True)
class PolyCoeffs:
    """Polynomial coefficients in one basis over one domain.

    ``legendre-normalized`` coefficients multiply L_n(t) with t the affine map
    of x onto [-1, 1]; ``monomial`` coefficients multiply x^n in the raw
    coordinate.
    """

    basis: str
    coeffs: np.ndarray
    domain: tuple[float, float]

    def __post_init__(self):
        if self.basis not in (BASIS_LEGENDRE, BASIS_MONOMIAL):
            raise ValueError(f"unknown basis {self.basis!r}")
        coeffs = np.atleast_1d(np.asarray(self.coeffs, dtype=float))
        if coeffs.ndim != 1 or coeffs.size == 0:
            raise ValueError("coeffs must be a nonempty 1-D array")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("coefficients must be finite")
        lo, hi = float(self.domain[0]), float(self.domain[1])
        if not lo < hi:
            raise ValueError(f"degenerate domain {self.domain}")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "domain", (lo, hi))

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def _unit(self, x: np.ndarray) -> np.ndarray:
        lo, hi = self.domain
        t = (2.0 * x - (lo + hi)) / (hi - lo)
        # tolerate endpoint roundoff, reject genuine overshoot
        tol = 4 * np.finfo(float).eps
        if np.any(np.abs(t) > 1.0 + tol):
            raise ValueError(f"evaluation outside domain {self.domain}")
        return np.clip(t, -1.0, 1.0)

    def evaluate(self, x):
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        if self.basis == BASIS_MONOMIAL:
            out = nppoly.polyval(arr, self.coeffs)
        else:
            out = legendre_row(self.degree, self._unit(arr)) @ self.coeffs
        if np.isscalar(x) or np.asarray(x).ndim == 0:
            return float(out[0])
        return out

    __call__ = evaluate


def _affine_compose(coeffs: np.ndarray, shift: float, scale: float) -> np.ndarray:
    """Coefficients of p(shift + scale*x) for monomial p, by Horner on polynomials."""
    out = np.zeros(1)
    q = np.array([shift, scale])
    for c in coeffs[::-1]:
        out = nppoly.polyadd(nppoly.polymul(out, q), [c])
    return np.atleast_1d(out)


def _leg_norms(n: int) -> np.ndarray:
    return np.sqrt((2 * np.arange(n) + 1) / 2.0)


def basis_convert(coeffs: PolyCoeffs, target_basis: str) -> PolyCoeffs:
    """Exact linear change of basis (degree <= 60), domain-aware."""
    if target_basis not in (BASIS_LEGENDRE, BASIS_MONOMIAL):
        raise ValueError(f"unknown basis {target_basis!r}")
    if coeffs.degree > 60:
        raise ValueError("basis conversion supported up to degree 60")
    if coeffs.basis == target_basis:
        return PolyCoeffs(target_basis, coeffs.coeffs.copy(), coeffs.domain)
    lo, hi = coeffs.domain
    identity = lo == -1.0 and hi == 1.0
    if coeffs.basis == BASIS_LEGENDRE:
        classical = coeffs.coeffs * _leg_norms(coeffs.coeffs.size)
        mono_t = npleg.leg2poly(classical)
        if identity:
            mono_x = mono_t
        else:
            # t(x) = (2x - (lo+hi)) / (hi-lo)
            mono_x = _affine_compose(mono_t, -(lo + hi) / (hi - lo), 2.0 / (hi - lo))
        return PolyCoeffs(BASIS_MONOMIAL, mono_x, coeffs.domain)
    mono_x = coeffs.coeffs
    if identity:
        mono_t = mono_x
    else:
        # x(t) = (hi-lo)/2 * t + (lo+hi)/2
        mono_t = _affine_compose(mono_x, (lo + hi) / 2.0, (hi - lo) / 2.0)
    classical = npleg.poly2leg(mono_t)
    normalized = classical / _leg_norms(classical.size)
    return PolyCoeffs(BASIS_LEGENDRE, normalized, coeffs.domain)


@dataclass(frozen=True)
class Degree0Rep:
    """Plain linear-combination approximation of f."""

    coeffs: PolyCoeffs
    fit_residual: float = float("nan")
    provenance: dict = field(default_factory=dict)


def _denominator_constant(basis: str) -> float:
    # the constant term "1" is sqrt(2)*L_0 in the orthonormal basis
    return SQRT2 if basis == BASIS_LEGENDRE else 1.0


@dataclass(frozen=True)
class Degree1Rep:
    """Rational approximation c(x)/b(x) with the constant term of b pinned to 1."""

    numerator: PolyCoeffs
    denominator: PolyCoeffs
    fit_residual: float = float("nan")
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        expected = _denominator_constant(self.denominator.basis)
        if abs(self.denominator.coeffs[0] - expected) > 1e-9:
            raise ValueError("denominator constant term must be fixed to 1")


@dataclass(frozen=True)
class IndexFunction:
    """Piecewise-constant +-1 branch selector, breakpoint-compressed.

    Signs alternate starting from ``first_sign``; the sign at x flips once per
    breakpoint <= x.  ``undefined`` records sample locations where both roots
    were complex and no selection is meaningful.
    """

    breakpoints: np.ndarray
    first_sign: int
    undefined: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        bp = np.atleast_1d(np.asarray(self.breakpoints, dtype=float))
        if bp.size and np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if self.first_sign not in (-1, 1):
            raise ValueError("first_sign must be -1 or +1")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "undefined", np.atleast_1d(np.asarray(self.undefined, dtype=float)))

    @classmethod
    def from_dense(cls, positions, signs, undefined=()) -> "IndexFunction":
        positions = np.asarray(positions, dtype=float)
        signs = np.asarray(signs, dtype=int)
        if positions.shape != signs.shape or positions.ndim != 1 or positions.size == 0:
            raise ValueError("positions and signs must be matching nonempty 1-D arrays")
        if not np.all(np.isin(signs, (-1, 1))):
            raise ValueError("signs must be +-1")
        flips = np.nonzero(signs[1:] != signs[:-1])[0]
        breakpoints = 0.5 * (positions[flips] + positions[flips + 1])
        return cls(breakpoints=breakpoints, first_sign=int(signs[0]), undefined=np.asarray(undefined, dtype=float))

    def signs_at(self, x):
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        count = np.searchsorted(self.breakpoints, arr, side="right")
        out = np.where(count % 2 == 0, self.first_sign, -self.first_sign).astype(int)
        if np.isscalar(x) or np.asarray(x).ndim == 0:
            return int(out[0])
        return out

    def dense(self, positions) -> np.ndarray:
        return self.signs_at(positions)


@dataclass(frozen=True)
class Degree2Rep:
    """Quadratic-manifold representation: a f^2 - b f - c = 0 plus an index.

    The constant-basis coefficient of ``a`` is pinned to 1 (the fit's
    reporting normalization), which fixes the overall scale of the triple.
    """

    a: PolyCoeffs
    b: PolyCoeffs
    c: PolyCoeffs
    index: IndexFunction | None
    fit_residual: float = float("nan")
    degeneracy: dict | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (self.a.basis == self.b.basis == self.c.basis):
            raise ValueError("a, b, c must share a basis")
        if not (self.a.domain == self.b.domain == self.c.domain):
            raise ValueError("a, b, c must share a domain")
        if self.a.coeffs[0] != 1.0:
            raise ValueError("constant-basis coefficient of a must be 1")

    @property
    def domain(self) -> tuple[float, float]:
        return self.a.domain


@dataclass(frozen=True)
class RootResult:
    """Both quadratic roots at a point, ordered lo <= hi when real."""

    lo: float
    hi: float
    discriminant: float
    linear: bool = False
    clamped: bool = False


def _a_scale(rep: Degree2Rep, extra: np.ndarray | None = None) -> float:
    lo, hi = rep.domain
    probes = np.linspace(lo, hi, 129)
    vals = np.abs(rep.a.evaluate(probes))
    scale = float(vals.max())
    if extra is not None and extra.size:
        scale = max(scale, float(np.max(np.abs(extra))))
    return scale if scale > 0 else 1.0


def _branch_roots(rep: Degree2Rep, x: np.ndarray, *, raise_on_complex: bool = True):
    """Vectorized stable roots; returns (minus, plus, D, linear, clamped, complex_mask)."""
    av = np.atleast_1d(rep.a.evaluate(x))
    bv = np.atleast_1d(rep.b.evaluate(x))
    cv = np.atleast_1d(rep.c.evaluate(x))
    scale = _a_scale(rep, av)
    linear = np.abs(av) < A_DEGENERACY_RTOL * scale

    disc = bv * bv + 4.0 * av * cv
    tol_d = 1e-8 * (bv * bv + 4.0 * np.abs(av * cv) + 1.0)
    complex_mask = disc < -tol_d
    if np.any(complex_mask) and raise_on_complex:
        worst = float(disc[complex_mask].min())
        raise ComplexRootError(f"negative discriminant {worst:.3e}", worst)
    clamped = (disc < 0.0) & ~complex_mask
    disc_eff = np.where(disc < 0.0, 0.0, disc)

    sq = np.sqrt(disc_eff)
    s = np.where(bv >= 0.0, 1.0, -1.0)
    q = bv + s * sq
    a_safe = np.where(linear, 1.0, av)
    q_safe = np.where(q == 0.0, 1.0, q)
    r1 = np.where(q == 0.0, 0.0, q / (2.0 * a_safe))
    r2 = np.where(q == 0.0, 0.0, -2.0 * cv / q_safe)
    plus = np.where(s > 0, r1, r2)
    minus = np.where(s > 0, r2, r1)

    if np.any(linear):
        b_lin = bv[linear]
        if np.any(np.abs(b_lin) < 1e-300):
            raise EvaluationError("both a(x) and b(x) vanish: no root")
        lin_root = -cv[linear] / b_lin
        plus = plus.copy()
        minus = minus.copy()
        plus[linear] = lin_root
        minus[linear] = lin_root
    return minus, plus, disc, linear, clamped, complex_mask


def roots_at(rep: Degree2Rep, x) -> RootResult:
    """Both roots of a(x) r^2 - b(x) r - c(x) = 0, cancellation-safe.

    If |a(x)| is negligible relative to a's scale on the domain, the manifold
    is treated as linear and both slots carry -c/b with ``linear`` set.
    Discriminants in [-tol, 0) are clamped to 0 with ``clamped`` set; more
    negative ones raise ComplexRootError.
    """
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.size != 1:
        raise ValueError("roots_at takes a single point; use eval_rep for vectors")
    minus, plus, disc, linear, clamped, _ = _branch_roots(rep, arr)
    lo = float(min(minus[0], plus[0]))
    hi = float(max(minus[0], plus[0]))
    return RootResult(lo=lo, hi=hi, discriminant=float(disc[0]),
                      linear=bool(linear[0]), clamped=bool(clamped[0]))


def assign_index(rep: Degree2Rep, grid: SampleGrid) -> IndexFunction:
    """Per-node sign whose root is nearest the sample value (ties -> +1).

    Nodes with complex roots get no meaningful selection; they inherit the
    previous node's sign and are reported in ``undefined``.
    """
    if rep.domain != grid.domain:
        raise ValueError("representation and grid domains differ")
    minus, plus, _, _, _, complex_mask = _branch_roots(rep, grid.nodes, raise_on_complex=False)
    f = grid.values
    signs = np.where(np.abs(f - plus) <= np.abs(f - minus), 1, -1)
    if np.any(complex_mask):
        idx = np.nonzero(complex_mask)[0]
        for i in idx:
            signs[i] = signs[i - 1] if i > 0 else 1
    undefined = grid.nodes[complex_mask]
    return IndexFunction.from_dense(grid.nodes, signs, undefined=undefined)


def eval_rep(rep, x):
    """Evaluate any representation; scalar in -> scalar out."""
    scalar = np.isscalar(x) or np.asarray(x).ndim == 0
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if isinstance(rep, Degree0Rep):
        out = np.atleast_1d(rep.coeffs.evaluate(arr))
    elif isinstance(rep, Degree1Rep):
        num = np.atleast_1d(rep.numerator.evaluate(arr))
        den = np.atleast_1d(rep.denominator.evaluate(arr))
        bad = np.abs(den) <= 1e-13
        if np.any(bad):
            raise PoleError(f"denominator vanishes near x={arr[bad][0]:.6g}")
        out = num / den
    elif isinstance(rep, Degree2Rep):
        if rep.index is None:
            raise EvaluationError("degree-2 representation has no index assigned")
        minus, plus, _, _, _, _ = _branch_roots(rep, arr)
        zeta = rep.index.signs_at(arr)
        out = np.where(np.atleast_1d(zeta) > 0, plus, minus)
    else:
        raise TypeError(f"not a representation: {type(rep)!r}")
    return float(out[0]) if scalar else out


def compose_piecewise_manifold(p_minus: PolyCoeffs, p_plus: PolyCoeffs,
                               truncate_tol: float = 0.0) -> Degree2Rep:
    """Exact manifold through two polynomial branches: b = p- + p+, c = -p- p+.

    The result satisfies (f - p-)(f - p+) = 0 identically, so fitting error is
    zero by construction.  With ``truncate_tol`` > 0, coefficients of b and c
    below the tolerance are dropped (in the normalized Legendre basis).  The
    index is left unassigned.
    """
    if p_minus.domain != p_plus.domain:
        raise ValueError("branch polynomials must share a domain")
    if p_minus.basis != p_plus.basis:
        p_plus = basis_convert(p_plus, p_minus.basis)
    domain = p_minus.domain
    basis = p_minus.basis
    if basis == BASIS_MONOMIAL:
        b = nppoly.polyadd(p_minus.coeffs, p_plus.coeffs)
        c = -nppoly.polymul(p_minus.coeffs, p_plus.coeffs)
        a = np.array([1.0])
    else:
        # a == [1] denotes a(x) = L_0 = 1/sqrt(2); scale b, c to match
        lm = p_minus.coeffs * _leg_norms(p_minus.coeffs.size)
        lp = p_plus.coeffs * _leg_norms(p_plus.coeffs.size)
        b_cl = npleg.legadd(lm, lp) / SQRT2
        c_cl = -npleg.legmul(lm, lp) / SQRT2
        b = b_cl / _leg_norms(b_cl.size)
        c = c_cl / _leg_norms(c_cl.size)
        a = np.array([1.0])

    def _truncate(coeffs: np.ndarray) -> np.ndarray:
        if truncate_tol <= 0.0:
            return coeffs
        pc = PolyCoeffs(basis, coeffs, domain)
        leg = basis_convert(pc, BASIS_LEGENDRE).coeffs
        leg = np.where(np.abs(leg) < truncate_tol, 0.0, leg)
        last = np.max(np.nonzero(leg)[0]) if np.any(leg) else 0
        leg = leg[: last + 1]
        return basis_convert(PolyCoeffs(BASIS_LEGENDRE, leg, domain), basis).coeffs

    return Degree2Rep(
        a=PolyCoeffs(basis, a, domain),
        b=PolyCoeffs(basis, _truncate(b), domain),
        c=PolyCoeffs(basis, _truncate(c), domain),
        index=None,
        fit_residual=0.0,
        provenance={"method": "compose", "truncate_tol": truncate_tol},
    )


def fit_degree0(grid: SampleGrid, n: int) -> Degree0Rep:
    """Least-squares Legendre expansion of f on the grid.

    On quadrature grids with enough exactness the coefficients are plain
    inner products (the orthonormal shortcut); otherwise a weighted QR solve
    is used.
    """
    if n + 1 > grid.size:
        raise ValueError("more coefficients than samples")
    table = grid.legendre_table(n)
    lo, hi = grid.domain
    # the mapped basis is orthonormal under 2/(hi-lo) * weights
    wscale = 2.0 / (hi - lo)
    if grid.is_quadrature and 2 * n <= 2 * grid.size - 1:
        coeffs = table.T @ (grid.weights * grid.values) * wscale
        resid = float(np.sqrt(np.sum(grid.weights * (grid.values - table @ coeffs) ** 2)))
    else:
        coeffs, resid = weighted_lsq(table, grid.values, grid.weights)
    return Degree0Rep(
        coeffs=PolyCoeffs(BASIS_LEGENDRE, coeffs, grid.domain),
        fit_residual=resid,
        provenance={"method": "degree0", "n": n},
    )


def fit_degree1(grid: SampleGrid, n0: int, n1: int) -> Degree1Rep:
    """Rational fit min || b(x) f - c(x) || with the constant f-term folded into
    the target, which pins the denominator's constant term to 1."""
    if n0 + n1 + 1 > grid.size:
        raise ValueError("more coefficients than samples")
    table = grid.legendre_table(max(n0, n1))
    cols = [table[:, : n0 + 1]]
    if n1 >= 1:
        cols.append(table[:, 1 : n1 + 1] * grid.values[:, None])
    v = np.hstack(cols)
    eta, resid = weighted_lsq(v, grid.values, grid.weights)
    num = PolyCoeffs(BASIS_LEGENDRE, eta[: n0 + 1], grid.domain)
    den_coeffs = np.zeros(n1 + 1)
    den_coeffs[0] = SQRT2
    if n1 >= 1:
        den_coeffs[1:] = -eta[n0 + 1 :]
    den = PolyCoeffs(BASIS_LEGENDRE, den_coeffs, grid.domain)
    return Degree1Rep(
        numerator=num,
        denominator=den,
        fit_residual=resid,
        provenance={"method": "degree1", "n0": n0, "n1": n1},
    )


def coefficients_to_rep(grid: SampleGrid, tags, values, fit_residual: float,
                        degeneracy: dict | None = None,
                        provenance: dict | None = None,
                        with_index: bool = True) -> Degree2Rep:
    """Package per-column dictionary coefficients into a Degree2Rep.

    ``values`` are the least-squares coefficients of the raw dictionary
    columns listed in ``tags``; stream-3 coefficients enter a(x) negated,
    below the pinned unit constant term.
    """
    n0 = max((d for s, d in tags if s == STREAM_PLAIN), default=0)
    n1 = max((d for s, d in tags if s == STREAM_F), default=0)
    n2 = max((d for s, d in tags if s == STREAM_F2), default=0)
    c = np.zeros(n0 + 1)
    b = np.zeros(n1 + 1)
    a = np.zeros(max(n2, 0) + 1)
    a[0] = 1.0
    for (stream, degree), val in zip(tags, values):
        if stream == STREAM_PLAIN:
            c[degree] += val
        elif stream == STREAM_F:
            b[degree] += val
        elif stream == STREAM_F2:
            a[degree] -= val
        else:
            raise ValueError(f"unknown stream in tag {(stream, degree)}")
    rep = Degree2Rep(
        a=PolyCoeffs(BASIS_LEGENDRE, a, grid.domain),
        b=PolyCoeffs(BASIS_LEGENDRE, b, grid.domain),
        c=PolyCoeffs(BASIS_LEGENDRE, c, grid.domain),
        index=None,
        fit_residual=fit_residual,
        degeneracy=degeneracy,
        provenance=provenance or {},
    )
    if with_index:
        rep = replace(rep, index=assign_index(rep, grid))
    return rep


def fit_degree2_uniform(grid: SampleGrid, n0: int, n1: int, n2: int) -> Degree2Rep:
    """Non-adaptive degree-2 fit over the full (n0, n1, n2) dictionary.

    A rank-deficient dictionary does not fail the fit: the solve falls back
    to the numerically independent pivoted subset and the dropped columns are
    listed in the degeneracy report.
    """
    if n0 + n1 + n2 + 2 > grid.size:
        raise ValueError("more coefficients than samples")
    d = assemble(grid, n0, n1, n2)
    v = d.columns
    provenance = {"method": "uniform", "n0": n0, "n1": n1, "n2": n2}
    degeneracy = None
    try:
        eta, resid = weighted_lsq(v, d.target, grid.weights)
        tags = d.tags
    except RankDeficiencyError:
        sw = np.sqrt(grid.weights)
        fact = pivoted_qr(v * sw[:, None])
        rank = fact.rank()
        y = d.target * sw
        proj = fact.q[:, :rank].T @ y
        from scipy.linalg import solve_triangular

        gamma = solve_triangular(fact.r[:rank, :rank], proj, lower=False)
        resid = float(np.linalg.norm(y - fact.q[:, :rank] @ proj))
        tags = tuple(d.tags[j] for j in fact.perm[:rank])
        eta = gamma
        degeneracy = {
            "numerical_rank": int(rank),
            "dropped_tags": [list(d.tags[j]) for j in fact.perm[rank:]],
        }
    return coefficients_to_rep(grid, tags, eta, resid,
                               degeneracy=degeneracy, provenance=provenance)


def residual_l2(rep, grid: SampleGrid, reference=None) -> float:
    """Weighted L2 distance between the representation and a reference.

    The reference defaults to the grid's stored samples; a callable is
    evaluated at the grid nodes.  Evaluation failures (poles, complex roots)
    count as +inf with a warning.
    """
    if reference is None:
        ref = grid.values
    elif callable(reference):
        ref = np.asarray([reference(x) for x in grid.nodes], dtype=float)
    else:
        ref = np.asarray(reference, dtype=float)
    try:
        vals = eval_rep(rep, grid.nodes)
    except (ComplexRootError, PoleError, EvaluationError) as exc:
        warnings.warn(f"evaluation failed, residual reported as inf: {exc}")
        return float("inf")
    return float(np.sqrt(np.sum(grid.weights * (vals - ref) ** 2)))


def relative_l2(rep, grid: SampleGrid, reference=None) -> float:
    """residual_l2 normalized by the reference norm (when nonzero)."""
    if reference is None:
        ref = grid.values
    elif callable(reference):
        ref = np.asarray([reference(x) for x in grid.nodes], dtype=float)
    else:
        ref = np.asarray(reference, dtype=float)
    denom = float(np.sqrt(np.sum(grid.weights * ref * ref)))
    err = residual_l2(rep, grid, ref)
    return err / denom if denom > 0 else err


# --------------------------------------------------------------------------
# JSON serialization
# --------------------------------------------------------------------------

def _coeff_list(pc: PolyCoeffs | None):
    return None if pc is None else [float(v) for v in pc.coeffs]


def rep_to_dict(rep) -> dict:
    if isinstance(rep, Degree0Rep):
        base, a, b, c, index = rep.coeffs, None, None, rep.coeffs, None
        kind = "degree0"
    elif isinstance(rep, Degree1Rep):
        base, a, b, c, index = rep.numerator, None, rep.denominator, rep.numerator, None
        kind = "degree1"
    elif isinstance(rep, Degree2Rep):
        base, a, b, c, index = rep.a, rep.a, rep.b, rep.c, rep.index
        kind = "degree2"
    else:
        raise TypeError(f"not a representation: {type(rep)!r}")
    doc = {
        "type": kind,
        "domain": [float(base.domain[0]), float(base.domain[1])],
        "basis": base.basis,
        "a": _coeff_list(a),
        "b": _coeff_list(b),
        "c": _coeff_list(c),
        "index": None,
        "fit_residual": float(rep.fit_residual),
        "provenance": rep.provenance,
    }
    if index is not None:
        doc["index"] = {
            "breakpoints": [float(v) for v in index.breakpoints],
            "first_sign": int(index.first_sign),
        }
        if index.undefined.size:
            doc["index"]["undefined"] = [float(v) for v in index.undefined]
    if isinstance(rep, Degree2Rep) and rep.degeneracy is not None:
        doc["degeneracy"] = rep.degeneracy
    return doc


def rep_from_dict(doc: dict):
    kind = doc["type"]
    domain = (float(doc["domain"][0]), float(doc["domain"][1]))
    basis = doc["basis"]

    def pc(values):
        return PolyCoeffs(basis, np.asarray(values, dtype=float), domain)

    residual = float(doc.get("fit_residual", float("nan")))
    provenance = doc.get("provenance", {})
    if kind == "degree0":
        return Degree0Rep(coeffs=pc(doc["c"]), fit_residual=residual, provenance=provenance)
    if kind == "degree1":
        return Degree1Rep(numerator=pc(doc["c"]), denominator=pc(doc["b"]),
                          fit_residual=residual, provenance=provenance)
    if kind == "degree2":
        index = None
        if doc.get("index") is not None:
            index = IndexFunction(
                breakpoints=np.asarray(doc["index"]["breakpoints"], dtype=float),
                first_sign=int(doc["index"]["first_sign"]),
                undefined=np.asarray(doc["index"].get("undefined", []), dtype=float),
            )
        return Degree2Rep(a=pc(doc["a"]), b=pc(doc["b"]), c=pc(doc["c"]), index=index,
                          fit_residual=residual, degeneracy=doc.get("degeneracy"),
                          provenance=provenance)
    raise ValueError(f"unknown representation type {kind!r}")


def save_rep(rep, path) -> None:
    with open(path, "w") as fh:
        json.dump(rep_to_dict(rep), fh, indent=2)
        fh.write("\n")


def load_rep(path):
    with open(path) as fh:
        return rep_from_dict(json.load(fh))
