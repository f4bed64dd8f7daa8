"""Fast self-checks of the package's core mathematical properties.

Each check is deterministic (fixed internal seeds), runs in milliseconds,
and returns pass/fail with a short detail string. The CLI validate
subcommand prints one line per check and exits nonzero if any fail.
"""

from dataclasses import dataclass
import math

import numpy as np

from .assignment import match_points, matching_cost, solve_assignment
from .bounds import (
    StabilityConstants,
    admissible,
    contraction_factor,
    critical_lambda,
    tau_n,
)
from .correction import mixture_density, sample_corrected
from .csvio import format_float
from .engine import AccrualPolicy, accrue
from .gaussian import (
    Dataset,
    GaussianParams,
    from_param_vector,
    sample_gaussian,
    to_param_vector,
)
from .metrics import empirical_w2, gaussian_w2


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str = ""


def _random_params(rng: np.random.Generator, d: int) -> GaussianParams:
    mean = rng.normal(size=d)
    a = rng.normal(size=(d, d))
    cov = a @ a.T / d + 0.2 * np.eye(d)
    cov = (cov + cov.T) / 2.0
    return GaussianParams(mean=mean, cov=cov)


def _check_w2_metric_axioms() -> CheckResult:
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(60):
        d = int(rng.integers(1, 4))
        p, q = _random_params(rng, d), _random_params(rng, d)
        dpq, dqp = gaussian_w2(p, q), gaussian_w2(q, p)
        worst = max(worst, abs(dpq - dqp), -min(dpq, 0.0), gaussian_w2(p, p))
    ok = worst <= 1e-9
    return CheckResult("w2_metric_axioms", ok, f"worst deviation {worst:.2e}")


def _check_w2_triangle() -> CheckResult:
    rng = np.random.default_rng(102)
    worst = -np.inf
    for _ in range(60):
        d = int(rng.integers(1, 4))
        p, q, r = (_random_params(rng, d) for _ in range(3))
        slack = gaussian_w2(p, r) - gaussian_w2(p, q) - gaussian_w2(q, r)
        worst = max(worst, slack)
    ok = worst <= 1e-9
    return CheckResult("w2_triangle_inequality", ok, f"max violation {worst:.2e}")


def _check_param_vector_roundtrip() -> CheckResult:
    rng = np.random.default_rng(103)
    for _ in range(40):
        d = int(rng.integers(1, 5))
        p = _random_params(rng, d)
        vec = to_param_vector(p)
        if vec.shape != (d + d * d,):
            return CheckResult("param_vector_roundtrip", False, "bad length")
        q = from_param_vector(vec, d)
        if not (
            np.array_equal(p.mean, q.mean) and np.array_equal(p.cov, q.cov)
        ):
            return CheckResult("param_vector_roundtrip", False, "values changed")
    return CheckResult("param_vector_roundtrip", True)


def _check_mixture_normalizes() -> CheckResult:
    p = GaussianParams(mean=[0.5], cov=[[1.4]])
    t = GaussianParams(mean=[-0.3], cov=[[0.6]])
    grid = np.linspace(-12.0, 12.0, 4001)
    worst = 0.0
    for gamma in (0.0, 0.5, 1.0, 4.0, math.inf):
        dens = np.array([mixture_density(p, t, gamma, np.array([v])) for v in grid])
        mass = float(np.trapezoid(dens, grid))
        worst = max(worst, abs(mass - 1.0))
    ok = worst <= 1e-4
    return CheckResult("mixture_normalizes", ok, f"worst |mass-1| {worst:.2e}")


def _check_mixture_extremes() -> CheckResult:
    rng = np.random.default_rng(104)
    p, t = _random_params(rng, 2), _random_params(rng, 2)
    from .gaussian import log_pdf

    for _ in range(20):
        x = rng.normal(size=2)
        dp, dt = math.exp(log_pdf(p, x)), math.exp(log_pdf(t, x))
        if not (
            math.isclose(mixture_density(p, t, 0.0, x), dp, rel_tol=1e-12)
            and math.isclose(
                mixture_density(p, t, 1.0, x), (dp + dt) / 2, rel_tol=1e-12
            )
            and mixture_density(p, t, math.inf, x) == dt
        ):
            return CheckResult("mixture_extreme_strengths", False, f"at {x}")
    return CheckResult("mixture_extreme_strengths", True)


def _check_mixture_pulls_toward_target() -> CheckResult:
    p = GaussianParams(mean=[0.8], cov=[[1.0]])
    t = GaussianParams(mean=[0.0], cov=[[1.0]])
    from .gaussian import log_pdf

    grid = np.linspace(-4.0, 4.0, 100)
    for gamma, toward_target in ((2.0, True), (4.0, True), (0.25, False), (0.5, False)):
        for v in grid:
            x = np.array([v])
            mix = mixture_density(p, t, gamma, x)
            gap_t = abs(mix - math.exp(log_pdf(t, x)))
            gap_p = abs(mix - math.exp(log_pdf(p, x)))
            ok = gap_t <= gap_p + 1e-15 if toward_target else gap_p <= gap_t + 1e-15
            if not ok:
                return CheckResult(
                    "mixture_pulls_toward_target",
                    False,
                    f"gamma={gamma} at x={v:.3f}",
                )
    return CheckResult("mixture_pulls_toward_target", True)


def _brute_force_perm(cost: np.ndarray) -> np.ndarray:
    # Exhaustive reference: float totals screen the candidates, then the
    # survivors are re-summed exactly (floats are dyadic rationals) so
    # ties are resolved toward the lexicographically smallest permutation
    # with no dependence on float accumulation order.
    import itertools
    from fractions import Fraction

    n = cost.shape[0]
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.intp)
    totals = cost[np.arange(n), perms].sum(axis=1)
    lim = totals.min() + 1e-9 * max(1.0, abs(float(totals.min())))
    best_perm = None
    best_total = None
    for k in np.flatnonzero(totals <= lim):
        p = tuple(int(v) for v in perms[k])
        exact = sum(Fraction(float(cost[i, p[i]])) for i in range(n))
        if best_total is None or exact < best_total or (
            exact == best_total and p < best_perm
        ):
            best_total, best_perm = exact, p
    return np.array(best_perm, dtype=np.intp)


def _check_matching_bruteforce() -> CheckResult:
    from scipy.spatial.distance import cdist

    rng = np.random.default_rng(105)
    for trial in range(30):
        n = int(rng.integers(2, 8))
        d = int(rng.integers(1, 3))
        src = rng.normal(size=(n, d))
        dst = rng.normal(size=(n, d))
        for squared in (False, True):
            metric = "sqeuclidean" if squared else "euclidean"
            want = _brute_force_perm(cdist(src, dst, metric=metric))
            got = match_points(src, dst, squared=squared)
            if not np.array_equal(want, got):
                return CheckResult(
                    "matching_matches_bruteforce",
                    False,
                    f"trial {trial} squared={squared}",
                )
    return CheckResult("matching_matches_bruteforce", True)


def _check_duplicate_reduction() -> CheckResult:
    from scipy.spatial.distance import cdist

    rng = np.random.default_rng(106)
    for trial in range(10):
        n = 40
        src = rng.normal(size=(n, 2))
        dst = rng.normal(size=(n, 2))
        copy_idx = rng.choice(n, size=n // 2, replace=False)
        dst[: n // 2] = src[copy_idx]  # force many exact duplicates
        perm = match_points(src, dst, squared=False)
        cost = matching_cost(src, dst, perm, squared=False)
        full = solve_assignment(cdist(src, dst, metric="euclidean"))
        ref = matching_cost(src, dst, full, squared=False)
        if not math.isclose(cost, ref, rel_tol=1e-9, abs_tol=1e-12):
            return CheckResult(
                "duplicate_prematch_cost_exact",
                False,
                f"trial {trial}: {cost} vs {ref}",
            )
    return CheckResult("duplicate_prematch_cost_exact", True)


def _check_empirical_w2_converges() -> CheckResult:
    rng = np.random.default_rng(107)
    worst = 0.0
    for _ in range(10):
        mu = rng.uniform(-2, 2, size=2)
        sd = rng.uniform(0.5, 2, size=2)
        z = rng.standard_normal(512)
        a = Dataset((mu[0] + sd[0] * z)[:, None])
        b = Dataset((mu[1] + sd[1] * z)[:, None])
        truth = gaussian_w2(
            GaussianParams(mean=[mu[0]], cov=[[sd[0] ** 2]]),
            GaussianParams(mean=[mu[1]], cov=[[sd[1] ** 2]]),
        )
        if truth == 0:
            continue
        worst = max(worst, abs(empirical_w2(a, b) - truth) / truth)
    ok = worst <= 0.15
    return CheckResult("empirical_w2_tracks_exact", ok, f"worst rel err {worst:.3f}")


def _check_corrected_branch_fractions() -> CheckResult:
    rng = np.random.default_rng(108)
    target = GaussianParams(mean=[0.0, 0.0], cov=np.eye(2))
    synth = sample_gaussian(_random_params(rng, 2), 500, rng)
    members = {synth.points[i].tobytes() for i in range(len(synth))}

    def synth_fraction(gamma: float, m: int) -> float:
        out = sample_corrected(synth, target, gamma, m, np.random.default_rng(109))
        hits = sum(out.points[i].tobytes() in members for i in range(m))
        return hits / m

    if synth_fraction(0.0, 2000) != 1.0:
        return CheckResult("corrected_branch_fractions", False, "strength 0 leaked")
    if synth_fraction(math.inf, 2000) != 0.0:
        return CheckResult(
            "corrected_branch_fractions", False, "infinite strength kept synth"
        )
    frac = synth_fraction(1.0, 20000)
    ok = abs(frac - 0.5) <= 0.02
    return CheckResult("corrected_branch_fractions", ok, f"strength 1 kept {frac:.3f}")


def _check_admissible_implies_contraction() -> CheckResult:
    rng = np.random.default_rng(110)
    for _ in range(200):
        consts = StabilityConstants(
            alpha=float(rng.uniform(0.2, 3.0)),
            L=float(rng.uniform(0.0, 2.0)),
            epsilon=float(rng.uniform(0.0, 0.5)),
        )
        lam = float(rng.uniform(0.0, 1.2))
        gamma = float(rng.choice([0.0, 0.1, 0.5, 1.0, 4.0, math.inf]))
        if admissible(lam, gamma, consts):
            kappa = contraction_factor(lam, gamma, consts)
            if kappa is None or not (0.0 <= kappa < 1.0):
                return CheckResult(
                    "admissible_implies_contraction",
                    False,
                    f"lam={lam:.3f} gamma={gamma} kappa={kappa}",
                )
    return CheckResult("admissible_implies_contraction", True)


def _check_threshold_doubles() -> CheckResult:
    rng = np.random.default_rng(111)
    for _ in range(50):
        consts = StabilityConstants(
            alpha=float(rng.uniform(0.2, 3.0)),
            L=float(rng.uniform(0.0, 2.0)),
            epsilon=0.0,
        )
        lo = critical_lambda(0.0, consts)
        hi = critical_lambda(math.inf, consts)
        if hi != 2.0 * lo:
            return CheckResult(
                "infinite_strength_doubles_threshold", False, f"{hi} vs 2*{lo}"
            )
    return CheckResult("infinite_strength_doubles_threshold", True)


def _check_error_floor_scaling() -> CheckResult:
    consts = StabilityConstants(alpha=1.0, eps_opt=0.3, a=1.7, b=4.0)
    for n in (1, 9, 100):
        full = tau_n(0.1, n, consts) - consts.eps_opt
        quarter = tau_n(0.1, 4 * n, consts) - consts.eps_opt
        if not math.isclose(quarter, full / 2.0, rel_tol=1e-12):
            return CheckResult(
                "error_floor_statistical_scaling", False, f"n={n}"
            )
    return CheckResult("error_floor_statistical_scaling", True)


def _check_log_accrual_law() -> CheckResult:
    batch = Dataset(np.zeros((1, 1)))
    pool: list = []
    for t in range(1, 34):
        pool = accrue(pool, batch, t, AccrualPolicy.LOG_ACCRUAL)
        want = sorted(
            {g for g in range(1, t) if (g & (g - 1)) == 0 and g >= 1} | {t}
        )
        got = [g for (g, _) in pool]
        if got != want:
            return CheckResult("log_accrual_pool_law", False, f"t={t}: {got}")
    fresh = accrue(pool, batch, 34, AccrualPolicy.FRESH_EACH_GENERATION)
    if [g for (g, _) in fresh] != [34]:
        return CheckResult("log_accrual_pool_law", False, "fresh pool not singleton")
    return CheckResult("log_accrual_pool_law", True)


def _check_csv_float_roundtrip() -> CheckResult:
    rng = np.random.default_rng(112)
    vals = list(rng.normal(size=400))
    vals += list(rng.normal(size=300) * 1e300)
    vals += list(rng.normal(size=300) * 1e-300)
    vals += [0.0, -0.0, math.inf, -math.inf, 2.0**-1074, 1.7976931348623157e308]
    for v in vals:
        if float(format_float(float(v))) != float(v):
            return CheckResult("csv_float_roundtrip", False, f"value {v!r}")
    return CheckResult("csv_float_roundtrip", True)


ALL_CHECKS = (
    _check_w2_metric_axioms,
    _check_w2_triangle,
    _check_param_vector_roundtrip,
    _check_mixture_normalizes,
    _check_mixture_extremes,
    _check_mixture_pulls_toward_target,
    _check_matching_bruteforce,
    _check_duplicate_reduction,
    _check_empirical_w2_converges,
    _check_corrected_branch_fractions,
    _check_admissible_implies_contraction,
    _check_threshold_doubles,
    _check_error_floor_scaling,
    _check_log_accrual_law,
    _check_csv_float_roundtrip,
)


def run_checks() -> list[CheckResult]:
    return [check() for check in ALL_CHECKS]
