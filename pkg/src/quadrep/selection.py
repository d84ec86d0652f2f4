"""Adaptive basis selection for degree-2 fits.

Two strategies: a stream-competition greedy (draw the next unused batch from
each of the three candidate streams, keep whichever batch lowers the
least-squares residual most) and rank-revealing pivoted-QR truncation of the
full candidate matrix.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .dictionary import SampleGrid, assemble, STREAM_PLAIN, STREAM_F, STREAM_F2
from .linalg import pivoted_qr
from .representation import coefficients_to_rep

__all__ = [
    "SelectionConfig",
    "StepRecord",
    "SelectionTrace",
    "RankReport",
    "greedy_select",
    "rrqr_select",
]

_STREAMS = (STREAM_PLAIN, STREAM_F, STREAM_F2)
_TIE_RTOL = 1e-12
_DEP_TOL = 1e-13


@dataclass(frozen=True)
class SelectionConfig:
    """Knobs for the greedy run; either target_residual or max_terms must stop it."""

    batch_size: int = 1
    target_residual: float | None = None
    max_terms: int | None = None
    stream_cap: int = 60
    rng_seed: int = 0

    def __post_init__(self):
        if self.batch_size not in (1, 3, 5):
            raise ValueError("batch_size must be 1, 3, or 5")
        if self.stream_cap < 1:
            raise ValueError("stream_cap must be >= 1")
        if self.target_residual is None and self.max_terms is None:
            raise ValueError("set target_residual and/or max_terms")
        if self.target_residual is not None and self.target_residual <= 0:
            raise ValueError("target_residual must be > 0")
        if self.max_terms is not None and self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")


@dataclass(frozen=True)
class StepRecord:
    step: int
    candidates: dict
    chosen_stream: int
    chosen_tags: tuple
    residual_after: float


@dataclass(frozen=True)
class SelectionTrace:
    steps: tuple
    final_residual: float
    rng_seed: int
    exhausted: bool = False
    notes: tuple = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "rng_seed": self.rng_seed,
            "final_residual": self.final_residual,
            "exhausted": self.exhausted,
            "notes": list(self.notes),
            "steps": [
                {
                    "step": s.step,
                    "candidates": {
                        str(stream): info for stream, info in s.candidates.items()
                    },
                    "chosen_stream": s.chosen_stream,
                    "chosen_tags": [list(t) for t in s.chosen_tags],
                    "residual_after": s.residual_after,
                }
                for s in self.steps
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


@dataclass(frozen=True)
class RankReport:
    rank: int
    diag_magnitudes: np.ndarray
    selected_tags: tuple
    truncate_tol: float
    n_candidates: int


def _orthonormalize_against(q_basis: np.ndarray, block: list[np.ndarray], dep_tol: float):
    """CGS2-orthonormalize block columns against q_basis and one another.

    Returns (accepted orthonormal columns, mask of accepted positions).
    """
    accepted = []
    mask = []
    for col in block:
        u = col
        for qmat in (q_basis,):
            if qmat.shape[1]:
                u = u - qmat @ (qmat.T @ u)
                u = u - qmat @ (qmat.T @ u)
        for q in accepted:
            u = u - q * (q @ u)
            u = u - q * (q @ u)
        rho = np.linalg.norm(u)
        if rho < dep_tol * np.linalg.norm(col) or rho == 0.0:
            mask.append(False)
            continue
        accepted.append(u / rho)
        mask.append(True)
    return accepted, mask


def greedy_select(grid: SampleGrid, config: SelectionConfig):
    """Stream-competition greedy selection; returns (Degree2Rep, SelectionTrace).

    Each step draws the next ``batch_size`` unused columns from every stream,
    W-normalizes them, and keeps the stream whose tentative least-squares
    residual is smallest.  Exact ties (relative 1e-12) are broken by a seeded
    uniform draw.  Rejected draws stay available; only the chosen stream's
    cursor advances.
    """
    cap = config.stream_cap
    d = assemble(grid, cap, cap, cap)
    sw = np.sqrt(grid.weights)
    scaled = {s: d.stream(s) * sw[:, None] for s in _STREAMS}
    tags_by_stream = {
        STREAM_PLAIN: [(STREAM_PLAIN, k) for k in range(cap + 1)],
        STREAM_F: [(STREAM_F, k) for k in range(cap + 1)],
        STREAM_F2: [(STREAM_F2, k) for k in range(1, cap + 1)],
    }
    y = d.target * sw
    rng = np.random.Generator(np.random.Philox(key=config.rng_seed))

    q_basis = np.empty((grid.size, 0))
    resid_vec = y.copy()
    cursors = {s: 0 for s in _STREAMS}
    kept_tags: list = []
    kept_norms: list = []
    kept_cols: list = []
    steps = []
    notes = []
    exhausted = False
    step_no = 0

    def selected_count():
        return len(kept_tags)

    while True:
        if config.max_terms is not None and selected_count() >= config.max_terms:
            break
        budget = None
        if config.max_terms is not None:
            budget = config.max_terms - selected_count()
        step_no += 1
        candidates = {}
        per_stream = {}
        for s in _STREAMS:
            total = scaled[s].shape[1]
            avail = total - cursors[s]
            take = min(config.batch_size, avail)
            if budget is not None:
                take = min(take, budget)
            if take <= 0:
                candidates[s] = {"tags": [], "residual": None, "note": "exhausted"}
                continue
            idx = range(cursors[s], cursors[s] + take)
            cols = []
            norms = []
            ctags = []
            for j in idx:
                col = scaled[s][:, j]
                norm = np.linalg.norm(col)
                ctags.append(tags_by_stream[s][j])
                if norm == 0.0:
                    cols.append(None)
                    norms.append(0.0)
                else:
                    cols.append(col / norm)
                    norms.append(norm)
            usable = [c for c in cols if c is not None]
            qs, mask = _orthonormalize_against(q_basis, usable, _DEP_TOL)
            if not qs:
                candidates[s] = {
                    "tags": [list(t) for t in ctags],
                    "residual": None,
                    "note": "dependent",
                }
                continue
            reduction = sum(float(q @ resid_vec) ** 2 for q in qs)
            cand_resid = float(np.sqrt(max(float(resid_vec @ resid_vec) - reduction, 0.0)))
            candidates[s] = {"tags": [list(t) for t in ctags], "residual": cand_resid}
            per_stream[s] = (ctags, cols, norms, take)
        if not per_stream:
            exhausted = True
            notes.append("all candidate streams exhausted or dependent")
            break
        resids = {s: candidates[s]["residual"] for s in per_stream}
        rmin = min(resids.values())
        tied = [s for s in _STREAMS if s in per_stream
                and resids[s] - rmin <= _TIE_RTOL * max(rmin, 1e-300)]
        if len(tied) == 1:
            chosen = tied[0]
        else:
            chosen = tied[int(rng.integers(len(tied)))]
        ctags, cols, norms, take = per_stream[chosen]
        chosen_tags = []
        for tag, col, norm in zip(ctags, cols, norms):
            if col is None:
                notes.append(f"skipped zero column {tag}")
                continue
            qs, mask = _orthonormalize_against(q_basis, [col], _DEP_TOL)
            if not qs:
                notes.append(f"skipped dependent column {tag}")
                continue
            q = qs[0]
            q_basis = np.column_stack([q_basis, q])
            resid_vec = resid_vec - q * (q @ resid_vec)
            kept_tags.append(tag)
            kept_norms.append(norm)
            kept_cols.append(col * norm)  # scaled, unnormalized column
            chosen_tags.append(tag)
        cursors[chosen] += take
        residual_after = float(np.linalg.norm(resid_vec))
        steps.append(StepRecord(step=step_no, candidates=candidates,
                                chosen_stream=chosen, chosen_tags=tuple(chosen_tags),
                                residual_after=residual_after))
        if config.target_residual is not None and residual_after <= config.target_residual:
            break

    if not kept_tags:
        raise ValueError("greedy selection kept no columns")
    # final least-squares coefficients on the kept (normalized) columns
    a_kept = np.column_stack([c / n for c, n in zip(kept_cols, kept_norms)])
    q_fin, r_fin = np.linalg.qr(a_kept, mode="reduced")
    proj = q_fin.T @ y
    eta_hat = solve_triangular(r_fin, proj, lower=False)
    final_residual = float(np.linalg.norm(y - q_fin @ proj))
    coefs = np.asarray(eta_hat) / np.asarray(kept_norms)

    trace = SelectionTrace(steps=tuple(steps), final_residual=final_residual,
                           rng_seed=config.rng_seed, exhausted=exhausted,
                           notes=tuple(notes))
    rep = coefficients_to_rep(
        grid, kept_tags, coefs, final_residual,
        provenance={"method": "greedy", "seed": config.rng_seed,
                    "batch_size": config.batch_size,
                    "max_terms": config.max_terms,
                    "target_residual": config.target_residual,
                    "stream_cap": config.stream_cap},
    )
    return rep, trace


def rrqr_select(grid: SampleGrid, stream_cap: int = 60, truncate_tol: float = 1e-12,
                max_terms: int | None = None):
    """Pivoted-QR basis ranking; returns (Degree2Rep, RankReport).

    The weighted candidate matrix is factorized with column pivoting,
    truncated at the first |R_kk| < truncate_tol * |R_11| (and optionally at
    ``max_terms`` columns), and the target is fit in the truncated orthogonal
    basis.  Coefficients are mapped back through R and the permutation;
    columns pivoted out of the truncation get zero coefficients.
    """
    if stream_cap < 1:
        raise ValueError("stream_cap must be >= 1")
    d = assemble(grid, stream_cap, stream_cap, stream_cap)
    sw = np.sqrt(grid.weights)
    a = d.columns * sw[:, None]
    fact = pivoted_qr(a)
    rank = fact.rank(truncate_tol)
    if max_terms is not None:
        rank = min(rank, max_terms)
    if rank == 0:
        raise ValueError("truncation removed every candidate column")
    y = d.target * sw
    eta = fact.q[:, :rank].T @ y
    residual = float(np.linalg.norm(y - fact.q[:, :rank] @ eta))
    gamma = solve_triangular(fact.r[:rank, :rank], eta, lower=False)
    tags = tuple(d.tags[j] for j in fact.perm[:rank])
    rep = coefficients_to_rep(
        grid, tags, gamma, residual,
        provenance={"method": "rrqr", "stream_cap": stream_cap,
                    "truncate_tol": truncate_tol, "max_terms": max_terms},
    )
    report = RankReport(rank=rank, diag_magnitudes=fact.diag,
                        selected_tags=tags, truncate_tol=truncate_tol,
                        n_candidates=d.n_columns)
    return rep, report
