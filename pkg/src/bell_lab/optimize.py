"""CH-maximizing analyzer angles and critical detection efficiency.

The CH landscape over the four analyzer angles is smooth but multimodal
under the symmetry group (reflections, 90 degree relabelings, arm swap),
and for ideal polarizers its maximum is exactly degenerate along a one
parameter family of quads. The search strategy is therefore a coarse
deterministic grid over [0,180)^4, simplex refinement from the best grid
cells, and a canonicalization step that picks a fixed representative of
the degenerate set (the one with theta2' = 0 whenever that loses nothing,
reduced to the theta2' in [0,45] cell).

critical_efficiency locates the detector efficiency below which the
singles-mode CH violation disappears. In singles mode the four joint
terms scale as eta^2 and the two removed-analyzer terms as eta, so each
quad's CH value is an upward parabola in eta, negative below S/J; the
max over quads changes sign exactly once and bisection is safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .metrics import (
    MODE_COINCIDENCE,
    MODE_SINGLES,
    AnalyzerQuad,
    DegenerateInputError,
    ch_sum,
    normalize_mode,
    qm_counts,
)
from .qm import DetectionModel, EntangledState, ModelError, PolarizerModel


class NoThresholdError(ModelError):
    """The singles-mode CH sum has no sign change in (0, 1]."""


@dataclass(frozen=True)
class OptimizationResult:
    quad: AnalyzerQuad
    ch_max: float
    r_at_max: float | None
    evaluations: int
    converged: bool


@dataclass(frozen=True)
class EfficiencyThreshold:
    f: float
    eta_star: float
    quad_at_threshold: AnalyzerQuad


@dataclass(frozen=True)
class ScanFReport:
    """Per-f optimization results plus a monotonicity diagnostic.

    ch_nondecreasing reports whether ch_max never drops along the given
    f order (for real f rising toward 1 it must not); violations lists
    the offending indices.
    """

    f_values: tuple
    results: tuple
    ch_nondecreasing: bool
    violations: tuple


def ideal_ch_max(f):
    """Closed-form CH maximum per pair for ideal polarizers.

    With lam = 2f/(1+f^2) the maximum of the CH sum over all quads is
    (sqrt(1+lam^2) - 1)/2. Used as an analytic cross-check of the search.
    """
    f = float(f)
    lam = 2.0 * f / (1.0 + f * f)
    return 0.5 * (math.sqrt(1.0 + lam * lam) - 1.0)


def _objective(state, pol, mode, det):
    """Scalar CH objective ch(t1, t2, t1p, t2p) in counts for `det`.

    Includes the accidental floor, so the returned value equals
    ch_sum(qm_counts(...)).ch at the same quad for any detector model.
    Written in plain math calls; the simplex refinement hits this tens of
    thousands of times.
    """
    f = state.f
    af2 = abs(f) ** 2
    nf = 1.0 / (1.0 + af2)
    cross = 2.0 * f.real
    p1, q1 = pol.arm(1)
    p2, q2 = pol.arm(2)
    d1, d2 = p1 - q1, p2 - q2
    e1, e2 = det.eta_1, det.eta_2
    rate, dur, tau = det.pair_rate, det.duration, det.window
    k1, k2 = det.dark_1, det.dark_2

    def parts(tdeg, par, perp):
        t = math.radians(tdeg)
        s, c = math.sin(t), math.cos(t)
        s2 = s * s
        return par * s2 + perp * (1.0 - s2), par * (1.0 - s2) + perp * s2, s * c

    def joint(a, b):
        t1h, t1v, sc1 = parts(a, p1, q1)
        t2h, t2v, sc2 = parts(b, p2, q2)
        return (t1h * t2h + af2 * t1v * t2v + cross * d1 * sc1 * d2 * sc2) * nf

    def single(t, arm):
        th, tv, _ = parts(t, p1 if arm == 1 else p2, q1 if arm == 1 else q2)
        return (th + af2 * tv) * nf

    s1_open = rate * e1 + k1  # singles with analyzer 1 removed
    s2_open = rate * e2 + k2

    def ch(x):
        t1, t2, t1p, t2p = x
        m1, m1p = single(t1, 1), single(t1p, 1)
        m2, m2p = single(t2, 2), single(t2p, 2)
        jsum = joint(t1, t2) - joint(t1, t2p) + joint(t1p, t2) + joint(t1p, t2p)
        s1, s1p = rate * e1 * m1 + k1, rate * e1 * m1p + k1
        s2, s2p = rate * e2 * m2 + k2, rate * e2 * m2p + k2
        acc = tau * (s1 * s2 - s1 * s2p + s1p * s2 + s1p * s2p)
        value = rate * e1 * e2 * (jsum - m1p - m2) + acc
        if mode == MODE_COINCIDENCE:
            # removed-analyzer terms stay two-detector coincidences
            value -= tau * (s1p * s2_open + s1_open * s2)
        else:
            # true single-arm counts replace the marginal coincidences
            value += rate * e1 * e2 * (m1p + m2)
            value -= rate * (e1 * m1p + e2 * m2) + k1 + k2
        return value * dur

    return ch


@lru_cache(maxsize=32)
def _pair_tables(f, pol_key, grid_deg):
    """Pairwise probability tables on the coarse grid (cached per state)."""
    state = EntangledState(f)
    pol = PolarizerModel(*pol_key)
    axis = np.arange(0.0, 180.0, grid_deg)
    from .qm import joint_pass_probability, single_pass_probability

    jt = joint_pass_probability(state, axis[:, None], axis[None, :], pol)
    m1 = single_pass_probability(state, axis, 1, pol)
    m2 = single_pass_probability(state, axis, 2, pol)
    return axis, jt, m1, m2


def _grid_stage(state, pol, mode, det, grid_deg, top_k):
    """Best top_k grid quads of the full CH tensor over [0,180)^4."""
    pol_key = (pol.eps_par_1, pol.eps_perp_1, pol.eps_par_2, pol.eps_perp_2)
    axis, jt, m1, m2 = _pair_tables(state.f, pol_key, float(grid_deg))
    e1, e2 = det.eta_1, det.eta_2
    rate, dur, tau = det.pair_rate, det.duration, det.window
    s1 = rate * e1 * m1 + det.dark_1
    s2 = rate * e2 * m2 + det.dark_2
    s1_open = rate * e1 + det.dark_1
    s2_open = rate * e2 + det.dark_2

    # index order (i, j, k, l) = (t1, t2, t1p, t2p)
    jsum = (
        jt[:, :, None, None]
        - jt[:, None, None, :]
        + jt.T[None, :, :, None]
        + jt[None, None, :, :]
    )
    acc = tau * (
        s1[:, None, None, None] * s2[None, :, None, None]
        - s1[:, None, None, None] * s2[None, None, None, :]
        + s1[None, None, :, None] * s2[None, :, None, None]
        + s1[None, None, :, None] * s2[None, None, None, :]
    )
    ch = rate * e1 * e2 * (jsum - m1[None, None, :, None] - m2[None, :, None, None])
    ch = ch + acc
    if mode == MODE_COINCIDENCE:
        ch = ch - tau * (s1[None, None, :, None] * s2_open + s1_open * s2[None, :, None, None])
    else:
        ch = ch + rate * e1 * e2 * (m1[None, None, :, None] + m2[None, :, None, None])
        ch = ch - rate * (e1 * m1[None, None, :, None] + e2 * m2[None, :, None, None])
        ch = ch - (det.dark_1 + det.dark_2)
    ch = ch * dur
    flat = ch.reshape(-1)
    k = min(top_k, flat.size)
    idx = np.argpartition(flat, -k)[-k:]
    idx = idx[np.argsort(flat[idx])[::-1]]
    quads = np.stack(np.unravel_index(idx, ch.shape), axis=1) * grid_deg
    return [tuple(map(float, q)) for q in quads], float(flat[idx[0]])


def _nelder_mead(fn, x0, step, max_evals, diam_tol=1e-6, spread_tol=1e-12):
    """Minimize fn over R^n from x0. Returns (x, fx, evals, converged).

    Standard reflection/expansion/contraction/shrink simplex with the
    stopping rule: simplex diameter < diam_tol or value spread <
    spread_tol, whichever happens first.
    """
    n = len(x0)
    pts = [np.asarray(x0, dtype=float)]
    for i in range(n):
        p = pts[0].copy()
        p[i] += step
        pts.append(p)
    vals = [fn(p) for p in pts]
    evals = n + 1
    converged = False
    while evals < max_evals:
        order = np.argsort(vals)
        pts = [pts[i] for i in order]
        vals = [vals[i] for i in order]
        diam = max(np.max(np.abs(p - pts[0])) for p in pts[1:])
        if diam < diam_tol or vals[-1] - vals[0] < spread_tol:
            converged = True
            break
        centroid = np.mean(pts[:-1], axis=0)
        xr = centroid + (centroid - pts[-1])
        fr = fn(xr)
        evals += 1
        if fr < vals[0]:
            xe = centroid + 2.0 * (centroid - pts[-1])
            fe = fn(xe)
            evals += 1
            if fe < fr:
                pts[-1], vals[-1] = xe, fe
            else:
                pts[-1], vals[-1] = xr, fr
        elif fr < vals[-2]:
            pts[-1], vals[-1] = xr, fr
        else:
            if fr < vals[-1]:
                xc = centroid + 0.5 * (xr - centroid)
            else:
                xc = centroid + 0.5 * (pts[-1] - centroid)
            fc = fn(xc)
            evals += 1
            if fc < min(fr, vals[-1]):
                pts[-1], vals[-1] = xc, fc
            else:
                for i in range(1, n + 1):
                    pts[i] = pts[0] + 0.5 * (pts[i] - pts[0])
                    vals[i] = fn(pts[i])
                    evals += 1
    i = int(np.argmin(vals))
    return pts[i], vals[i], evals, converged


def _orbit(quad):
    """Discrete symmetry candidates of a quad (tuples mod 180)."""
    t1, t2, t1p, t2p = quad

    def red(x):
        return tuple(v % 180.0 for v in x)

    base = [
        (t1, t2, t1p, t2p),
        (t2, t1, t2p, t1p),  # arm swap
    ]
    out = []
    for b in base:
        out.append(red(b))
        out.append(red(tuple(180.0 - v for v in b)))  # reflection
        out.append(red(tuple(v + 90.0 for v in b)))  # H/V relabel
        out.append(red(tuple(90.0 - v for v in b)))  # both
    return out


def optimize_angles(
    state,
    pol=None,
    mode=MODE_COINCIDENCE,
    det=None,
    grid_deg=5.0,
    refine_starts=8,
    budget=20000,
):
    """Global maximum of the CH sum over the four analyzer angles.

    Deterministic: a grid stage at grid_deg spacing picks refine_starts
    starting cells, each refined by Nelder-Mead under a shared evaluation
    budget, then the winner is canonicalized (theta2' pinned to 0 when
    that costs nothing, symmetry orbit reduced to theta2' in [0, 45],
    lexicographic tie-break). The evaluations field counts refinement
    objective calls; the vectorized grid stage is not included.
    """
    mode = normalize_mode(mode)
    pol = pol or PolarizerModel.ideal()
    det = det or DetectionModel.ideal()
    if budget < 8:
        raise ModelError("evaluation budget too small to build a simplex")
    ch = _objective(state, pol, mode, det)
    neg = lambda x: -ch(x)

    starts, _ = _grid_stage(state, pol, mode, det, grid_deg, refine_starts)
    step = grid_deg / 2.0
    evals_total = 0
    best_x, best_v = None, -math.inf
    all_converged = True
    per_start = max(budget // max(len(starts), 1), 8)
    for x0 in starts:
        remaining = budget - evals_total
        if remaining < 8:
            all_converged = False
            break
        x, fv, used, conv = _nelder_mead(neg, x0, step, min(per_start, remaining))
        evals_total += used
        v = -fv
        if v > best_v + 1e-12 or (
            abs(v - best_v) <= 1e-12
            and best_x is not None
            and tuple(x % 180.0) < tuple(best_x % 180.0)
        ):
            best_x, best_v = x, v
            winner_converged = conv
    if best_x is None:
        raise ModelError("optimization produced no candidate")

    # Pin theta2' to 0 and re-polish. The ideal-polarizer maximum is
    # degenerate along a ridge that crosses theta2' = 0; adopting the
    # constrained point when it loses nothing fixes the representative.
    remaining = budget - evals_total
    if remaining >= 8:
        neg3 = lambda y: -ch((y[0], y[1], y[2], 0.0))
        y0 = np.array(best_x[:3])
        y, fv3, used, conv3 = _nelder_mead(neg3, y0, step, remaining)
        evals_total += used
        if -fv3 >= best_v - 1e-9:
            if -fv3 > best_v:
                best_v = -fv3
            best_x = np.array([y[0], y[1], y[2], 0.0])
            winner_converged = winner_converged and conv3

    # Symmetry orbit, filtered to value preservers, canonical cell pick.
    candidates = []
    for cand in _orbit(tuple(best_x % 180.0)):
        v = ch(cand)
        evals_total += 1
        if v >= best_v - 1e-9:
            candidates.append(cand)
    in_cell = [c for c in candidates if c[3] <= 45.0 + 1e-9]
    pool = in_cell or candidates
    key = lambda c: tuple(round(x, 9) for x in (c[3], c[1], c[2], c[0]))
    final = min(pool, key=key)
    final_v = ch(final)
    evals_total += 1

    quad = AnalyzerQuad(*final)
    try:
        r_at_max = ch_sum(qm_counts(state, quad, pol, det, mode)).r
    except DegenerateInputError:
        r_at_max = None
    return OptimizationResult(
        quad=quad,
        ch_max=final_v,
        r_at_max=r_at_max,
        evaluations=evals_total,
        converged=bool(winner_converged and evals_total <= budget),
    )


def scan_f(f_values, pol=None, mode=MODE_COINCIDENCE, det=None, **kwargs):
    """optimize_angles over a list of real f values, with diagnostics."""
    fs = [float(v) for v in f_values]
    if any(v < 0 for v in fs):
        raise ModelError("scan_f takes real f >= 0")
    results = [
        optimize_angles(EntangledState(v), pol, mode, det, **kwargs) for v in fs
    ]
    violations = [
        i
        for i in range(1, len(results))
        if results[i].ch_max < results[i - 1].ch_max - 1e-9
    ]
    return ScanFReport(
        f_values=tuple(fs),
        results=tuple(results),
        ch_nondecreasing=not violations,
        violations=tuple(violations),
    )


def critical_efficiency(f, background=0.0, tol=1e-3):
    """Detection efficiency where the singles-mode CH violation vanishes.

    Bisects g(eta) = max-over-quads CH in singles mode with symmetric
    efficiencies eta and per-arm dark-to-pair-rate ratio `background`.
    Each quad's CH is an upward parabola in eta (negative below its own
    root), so g changes sign exactly once; the returned eta_star satisfies
    g(eta_star - tol) <= 0 < g(eta_star + tol).
    """
    f = float(f)
    if not (0.0 < f <= 1.0):
        raise NoThresholdError(
            f"threshold defined for 0 < f <= 1, got f={f!r} "
            "(a product state never violates)"
        )
    if background < 0:
        raise ModelError("background must be >= 0")
    if tol <= 0:
        raise ModelError("tol must be > 0")
    state = EntangledState(f)

    def g(eta):
        det = DetectionModel(
            eta_1=eta, eta_2=eta, dark_1=background, dark_2=background
        )
        return optimize_angles(state, mode=MODE_SINGLES, det=det)

    hi = 1.0
    res_hi = g(hi)
    if res_hi.ch_max <= 0.0:
        raise NoThresholdError(
            f"no violation at eta=1 (ch_max={res_hi.ch_max:.3g}); "
            "no threshold exists in (0, 1]"
        )
    lo = min(tol, 1e-3)
    if g(lo).ch_max > 0.0:
        raise NoThresholdError("violation persists at eta -> 0; no sign change")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        res = g(mid)
        if res.ch_max > 0.0:
            hi, res_hi = mid, res
        else:
            lo = mid
    return EfficiencyThreshold(
        f=f, eta_star=0.5 * (lo + hi), quad_at_threshold=res_hi.quad
    )
