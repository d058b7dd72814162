"""Numerical certificates for the structural claims about the flow.

Each certificate samples random unit-Frobenius symmetric states (standard
normal entries, symmetrized, normalized) with a recorded seed, evaluates a
family of residuals or ranks, and reports the worst case against a fixed
tolerance.  Certificates carry enough detail (seeds, per-sample worst
offenders) to be reproduced exactly.

Rank-based verdicts are only issued where a closed-form expected value
exists: nullity 0 or 1 for independence, and the two extreme frequency
patterns for the frozen Casimir basis.  Everything else is reported
without a verdict.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .matrix_core import max_abs, numerical_rank, random_sym
from .invariants import (
    admissible_indices,
    gradient_table,
    invariant_count,
    recursion_residual,
)
from .poisson import (
    RankInstabilityError,
    SkewCanonicalForm,
    canonical_form,
    frozen_bracket,
    frozen_casimir_gradients,
    frozen_tensor,
    leaf_dimensions,
    lie_poisson_bracket,
    lie_poisson_casimir_gradients,
    lie_poisson_tensor,
)
from .dynamics import lax_residual, vector_field

#: Default tolerance for identity-type residuals.
IDENTITY_TOL = 1e-10

#: Default relative tolerance for rank decisions.
RANK_TOL = 1e-9

#: Minimum infinity-norm separation of the two 2x2 right-hand sides in the
#: sectional-operator comparison, away from the a = d coincidence locus.
SECTIONAL_SEPARATION = 1e-3


@dataclass
class Certificate:
    """Outcome of one sampled verification suite.

    ``passed`` is None for report-only runs (no closed-form expectation);
    otherwise it equals ``max_residual <= tolerance``.
    """

    name: str
    n: int
    p: int
    d: int
    sample_count: int
    max_residual: float
    tolerance: float
    passed: bool | None
    seed: int
    details: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def involution_certificate(
    n_skew: np.ndarray,
    samples: int,
    seed: int,
    tol: float = IDENTITY_TOL,
) -> Certificate:
    """Worst pairwise bracket value among all conserved-family members.

    Every admissible pair is evaluated in both the Lie-Poisson and the
    frozen bracket at each sampled state; all must vanish to roundoff.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    form = canonical_form(n_skew)
    n = n_skew.shape[0]
    keys = admissible_indices(n)
    rng = np.random.default_rng(seed)
    worst = 0.0
    details = []
    for s in range(samples):
        x = random_sym(n, rng)
        grads = gradient_table(x, n_skew).gradients
        g = [grads[key] for key in keys]
        sample_worst, worst_pair, worst_bracket = 0.0, None, None
        for i in range(len(keys)):
            for j in range(i + 1, len(keys)):
                lp = abs(lie_poisson_bracket(g[i], g[j], x, n_skew))
                fr = abs(frozen_bracket(g[i], g[j], n_skew))
                for val, name in ((lp, "lie_poisson"), (fr, "frozen")):
                    if val > sample_worst:
                        sample_worst, worst_pair, worst_bracket = val, (keys[i], keys[j]), name
        worst = max(worst, sample_worst)
        details.append({
            "sample": s,
            "max_abs_bracket": sample_worst,
            "worst_pair": worst_pair,
            "worst_bracket": worst_bracket,
        })
    return Certificate(
        name="involution", n=n, p=form.p, d=form.d, sample_count=samples,
        max_residual=worst, tolerance=tol, passed=worst <= tol, seed=seed,
        details=details,
    )


def independence_certificate(
    form: SkewCanonicalForm,
    samples: int,
    rank_tol: float = RANK_TOL,
    seed: int = 0,
    max_resamples: int = 3,
) -> Certificate:
    """Rank of the stacked conserved-family gradients at sampled states.

    For nullity 0 or 1 the expected rank is p(p+d), the full member count,
    and a verdict is issued; larger nullities are reported rank-only since
    the family is then redundant.  Gradients are normalized before the rank
    computation (scale does not affect independence) and the rank is
    re-checked one tolerance decade higher; disagreement is flagged in the
    details rather than averaged away.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    n, p, d = form.n, form.p, form.d
    expected = p * (p + d) if d in (0, 1) else None
    keys = admissible_indices(n)
    rng = np.random.default_rng(seed)
    details = []
    worst_gap = 0.0
    for s in range(samples):
        attempt = 0
        while True:
            x = random_sym(n, rng)
            grads = gradient_table(x, form.skew).gradients
            vecs = []
            for key in keys:
                v = grads[key].ravel()
                nrm = np.linalg.norm(v)
                vecs.append(v / nrm if nrm > 0 else v)
            rank = numerical_rank(vecs, rank_tol)
            rank_loose = numerical_rank(vecs, 10.0 * rank_tol)
            stable = rank == rank_loose
            if expected is None or rank == expected or attempt >= max_resamples:
                break
            attempt += 1  # degenerate sample; resample per the genericity claim
        gap = 0.0 if expected is None else abs(rank - expected)
        worst_gap = max(worst_gap, float(gap))
        details.append({
            "sample": s,
            "rank": rank,
            "expected": expected,
            "stable": stable,
            "resamples": attempt,
        })
    return Certificate(
        name="independence", n=n, p=p, d=d, sample_count=samples,
        max_residual=worst_gap, tolerance=0.0,
        passed=None if expected is None else worst_gap <= 0.0,
        seed=seed, details=details,
    )


@dataclass
class IntegrabilitySummary:
    """Counted conserved quantities against the half-leaf-dimension target."""

    n: int
    p: int
    d: int
    counted: int
    required: int
    casimirs: int
    leaf_dim: int
    assessed: bool
    verdict: str

    def to_dict(self) -> dict:
        return asdict(self)


def integrability_summary(form: SkewCanonicalForm) -> IntegrabilitySummary:
    """Compare the member count with half the generic Lie-Poisson leaf dimension.

    Nullity 0 or 1 gives exact agreement, the complete-integrability count;
    nullity >= 2 yields a surplus whose redundancy is reported, not judged.
    """
    p, d = form.p, form.d
    counted = invariant_count(form.n) if form.n >= 2 else 0
    required = p * (p + d)
    casimirs = p + d * (d + 1) // 2
    leaf = 2 * p * (p + d)
    if d in (0, 1):
        assessed = True
        verdict = "match" if counted == required else "mismatch"
    else:
        assessed = False
        verdict = f"surplus of {counted - required}, redundancy expected, no verdict"
    return IntegrabilitySummary(
        n=form.n, p=p, d=d, counted=counted, required=required,
        casimirs=casimirs, leaf_dim=leaf, assessed=assessed, verdict=verdict,
    )


def casimir_certificate(
    form: SkewCanonicalForm,
    samples: int,
    seed: int,
    tol: float = 1e-11,
    rank_tol: float = RANK_TOL,
) -> Certificate:
    """Annihilation residuals and gradient ranks of both Casimir families.

    Works in the canonical basis with the exact block structure matrix.
    The Lie-Poisson family must be tensor-annihilated at every sampled
    state and keep gradient rank p + d(d+1)/2; the frozen family is
    state-independent with rank p + d(d+1)/2 (distinct frequencies) or
    p^2 + d(d+1)/2 (all equal).  Mixed patterns skip the frozen basis,
    which only exists in the two extreme cases.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    n, p, d = form.n, form.p, form.d
    n_can = form.canonical_skew
    mode = form.mode()
    lp_expected_rank = p + d * (d + 1) // 2

    frozen_grads: list[np.ndarray] | None = None
    frozen_expected = None
    if mode in ("distinct", "equal"):
        frozen_grads = frozen_casimir_gradients(form, mode)
        frozen_expected = (p if mode == "distinct" else p * p) + d * (d + 1) // 2

    worst = 0.0
    details = []
    frozen_residual = 0.0
    frozen_rank = None
    if frozen_grads:
        frozen_residual = max(max_abs(frozen_tensor(e, n_can)) for e in frozen_grads)
        frozen_rank = numerical_rank([e.ravel() for e in frozen_grads], rank_tol)
        worst = max(worst, frozen_residual, float(abs(frozen_rank - frozen_expected)))

    rng = np.random.default_rng(seed)
    rank_ok = frozen_grads is None or frozen_rank == frozen_expected
    for s in range(samples):
        x = random_sym(n, rng)
        grads = lie_poisson_casimir_gradients(form, x)
        residual = max(max_abs(lie_poisson_tensor(x, g, n_can)) for g in grads) if grads else 0.0
        lp_rank = numerical_rank([g.ravel() for g in grads], rank_tol) if grads else 0
        rank_ok = rank_ok and lp_rank == lp_expected_rank
        worst = max(worst, residual, float(abs(lp_rank - lp_expected_rank)))
        details.append({"sample": s, "lie_poisson_residual": residual, "lie_poisson_rank": lp_rank})
    details.append({
        "frozen_mode": mode,
        "frozen_residual": frozen_residual,
        "frozen_rank": frozen_rank,
        "frozen_expected_rank": frozen_expected,
        "lie_poisson_expected_rank": lp_expected_rank,
    })
    return Certificate(
        name="casimir", n=n, p=p, d=d, sample_count=samples,
        max_residual=worst, tolerance=tol, passed=worst <= tol and rank_ok,
        seed=seed, details=details,
    )


def leaf_dimension_certificate(
    form: SkewCanonicalForm,
    samples: int,
    seed: int,
    rank_tol: float = RANK_TOL,
) -> Certificate:
    """Sampled leaf dimensions against the closed-form counts.

    The Lie-Poisson side expects 2p(p+d) always; the frozen side expects
    2p(p+d) for distinct frequencies and p(p+1+2d) when they all coincide.
    Mixed patterns are reported without a verdict.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    n, p, d = form.n, form.p, form.d
    mode = form.mode()
    expect_lp = 2 * p * (p + d)
    expect_frozen = {"distinct": 2 * p * (p + d), "equal": p * (p + 1 + 2 * d)}.get(mode)
    rng = np.random.default_rng(seed)
    details = []
    worst = 0.0
    for s in range(samples):
        x = random_sym(n, rng)
        try:
            dim_lp, dim_frozen = leaf_dimensions(form, x, rank_tol)
        except RankInstabilityError as exc:
            details.append({"sample": s, "unstable": str(exc)})
            worst = max(worst, float(n * (n + 1) // 2))
            continue
        gap = abs(dim_lp - expect_lp)
        if expect_frozen is not None:
            gap = max(gap, abs(dim_frozen - expect_frozen))
        worst = max(worst, float(gap))
        details.append({
            "sample": s,
            "dims": [dim_lp, dim_frozen],
            "expected": [expect_lp, expect_frozen],
        })
    return Certificate(
        name="leaf_dims", n=n, p=p, d=d, sample_count=samples,
        max_residual=worst, tolerance=0.0,
        passed=None if expect_frozen is None else worst <= 0.0,
        seed=seed, details=details,
    )


def recursion_certificate(
    n_skew: np.ndarray,
    samples: int,
    seed: int,
    tol: float = 1e-11,
) -> Certificate:
    """Worst recursion residual over all admissible index pairs."""
    if samples < 1:
        raise ValueError("need at least one sample")
    form = canonical_form(n_skew)
    n = n_skew.shape[0]
    rng = np.random.default_rng(seed)
    worst = 0.0
    details = []
    pairs = [(k, r) for k in range(1, n) for r in range(1, k + 1) if (k - r) % 2 == 0]
    for s in range(samples):
        x = random_sym(n, rng)
        sample_worst, worst_pair = 0.0, None
        for (k, r) in pairs:
            res = recursion_residual(x, n_skew, k, r)
            if res > sample_worst:
                sample_worst, worst_pair = res, (k, r)
        worst = max(worst, sample_worst)
        details.append({"sample": s, "max_residual": sample_worst, "worst_pair": worst_pair})
    return Certificate(
        name="recursion", n=n, p=form.p, d=form.d, sample_count=samples,
        max_residual=worst, tolerance=tol, passed=worst <= tol, seed=seed,
        details=details,
    )


def lax_certificate(
    n_skew: np.ndarray,
    samples: int,
    seed: int,
    tol: float = 1e-12,
    lambdas: tuple = (-1.0, -0.5, 0.0, 0.5, 1.0),
) -> Certificate:
    """Worst parametric commutator defect over a lambda grid."""
    if samples < 1:
        raise ValueError("need at least one sample")
    form = canonical_form(n_skew)
    n = n_skew.shape[0]
    rng = np.random.default_rng(seed)
    worst = 0.0
    details = []
    for s in range(samples):
        x = random_sym(n, rng)
        res = max(lax_residual(x, n_skew, lam) for lam in lambdas)
        worst = max(worst, res)
        details.append({"sample": s, "max_residual": res})
    return Certificate(
        name="lax", n=n, p=form.p, d=form.d, sample_count=samples,
        max_residual=worst, tolerance=tol, passed=worst <= tol, seed=seed,
        details=details,
    )


def sectional_comparison_2x2(alpha: float, beta: float, x2: np.ndarray):
    """Both 2x2 right-hand sides: sectional-operator flow versus this flow.

    For ``X = [[a, b], [b, d]]`` and the canonical 2x2 structure matrix the
    sectional-operator equations give (beta/alpha) diag(-2ab, 2bd) while
    this flow gives (a+d) [[-2b, a-d], [a-d, 2b]]; the two coincide only on
    the a = d locus.  Returns (sectional_rhs, flow_rhs, differ).
    """
    if alpha == 0:
        raise ValueError("alpha must be nonzero")
    x2 = np.asarray(x2, dtype=float)
    if x2.shape != (2, 2):
        raise ValueError("comparison is specific to 2x2 states")
    a, b, d = x2[0, 0], x2[0, 1], x2[1, 1]
    sectional = (beta / alpha) * np.array([[-2.0 * a * b, 0.0], [0.0, 2.0 * b * d]])
    flow = (a + d) * np.array([[-2.0 * b, a - d], [a - d, 2.0 * b]])
    differ = max_abs(sectional - flow) > 1e-12
    return sectional, flow, differ


def sectional_certificate(
    samples: int,
    seed: int,
    min_gap: float = 0.1,
    separation: float = SECTIONAL_SEPARATION,
) -> Certificate:
    """Sampled demonstration that the flow is not a sectional-operator system.

    Draws (a, b, d, alpha, beta) uniformly from [-1, 1], rejecting
    |a - d| <= min_gap and alpha = 0, and requires the two right-hand sides
    to stay at least ``separation`` apart in max-abs norm.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    smallest = np.inf
    details = []
    for s in range(samples):
        while True:
            a, b, d, alpha, beta = rng.uniform(-1.0, 1.0, size=5)
            if abs(a - d) > min_gap and alpha != 0.0:
                break
        sectional, flow, _ = sectional_comparison_2x2(alpha, beta, np.array([[a, b], [b, d]]))
        diff = max_abs(sectional - flow)
        if diff < smallest:
            smallest = diff
            details = [{"sample": s, "point": [a, b, d, alpha, beta], "difference": diff}]
    residual = max(0.0, separation - smallest)
    return Certificate(
        name="sectional2x2", n=2, p=1, d=0, sample_count=samples,
        max_residual=residual, tolerance=0.0, passed=residual <= 0.0,
        seed=seed, details=[{"min_difference": smallest, "separation": separation}] + details,
    )


def flow_generation_defect(x: np.ndarray, n_skew: np.ndarray) -> tuple[float, float]:
    """Defects of generating the flow through each Poisson structure.

    The Lie-Poisson tensor applied to the gradient of trace(x^2)/2 and the
    frozen tensor applied to the gradient of trace(x^3)/3 must both equal
    the right-hand side.
    """
    f = vector_field(x, n_skew)
    lp = max_abs(f - lie_poisson_tensor(x, x, n_skew))
    fr = max_abs(f - frozen_tensor(x @ x, n_skew))
    return lp, fr
