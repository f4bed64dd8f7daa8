"""Closed-form stability quantities for the corrected fine-tuning update.

All functions are pure float arithmetic. Quantities that are undefined
for a given parameter combination (augmentation too aggressive for the
geometric series to exist) return None rather than raising, so grids can
tabulate them uniformly.
"""

from dataclasses import dataclass
import math

from .errors import InvalidDeltaError, NonPositiveLogArgumentError


@dataclass(frozen=True)
class StabilityConstants:
    """Problem constants entering the stability and error-floor formulas.

    alpha: curvature of the estimation map, > 0.
    L: smoothness of the parameter-to-law map, >= 0.
    epsilon: amplification of parameter error into sampling error, >= 0.
    eps_opt: irreducible optimization floor, >= 0.
    a: scale of the statistical fluctuation term, >= 0.
    b: confidence prefactor inside the logarithm, > 0.
    """

    alpha: float
    L: float = 0.0
    epsilon: float = 0.0
    eps_opt: float = 0.0
    a: float = 1.0
    b: float = 2.0

    def __post_init__(self):
        vals = (self.alpha, self.L, self.epsilon, self.eps_opt, self.a, self.b)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("stability constants must be finite")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if min(self.L, self.epsilon, self.eps_opt, self.a) < 0:
            raise ValueError("L, epsilon, eps_opt, a must be nonnegative")
        if self.b <= 0:
            raise ValueError("b must be positive")


def rho(lam: float, consts: StabilityConstants) -> float | None:
    """Uncorrected per-step error amplification under augmentation lam.

    rho = lam (alpha + epsilon L) / (alpha - lam (alpha + epsilon L)).
    None when the denominator is not positive (series diverges).
    """
    if lam < 0 or not math.isfinite(lam):
        raise ValueError(f"augmentation ratio must be finite and >= 0, got {lam}")
    s = lam * (consts.alpha + consts.epsilon * consts.L)
    denom = consts.alpha - s
    if denom <= 0:
        return None
    return s / denom


def strength_threshold(gamma: float) -> float:
    """Admissible augmentation threshold factor (1+gamma)/(2+gamma).

    Rises from 1/2 at strength zero toward 1 as the strength grows; the
    infinite-strength value is exactly 1, twice the uncorrected one.
    """
    if math.isnan(gamma) or gamma < 0:
        raise ValueError(f"correction strength must be >= 0, got {gamma}")
    if math.isinf(gamma):
        return 1.0
    return (1.0 + gamma) / (2.0 + gamma)


def admissible(lam: float, gamma: float, consts: StabilityConstants) -> bool:
    """Whether lam (1 + epsilon L / alpha) < (1+gamma)/(2+gamma)."""
    if lam < 0 or not math.isfinite(lam):
        raise ValueError(f"augmentation ratio must be finite and >= 0, got {lam}")
    return lam * (1.0 + consts.epsilon * consts.L / consts.alpha) < strength_threshold(
        gamma
    )


def critical_lambda(gamma: float, consts: StabilityConstants) -> float:
    """Largest admissible augmentation ratio for a given strength."""
    return strength_threshold(gamma) / (1.0 + consts.epsilon * consts.L / consts.alpha)


def contraction_factor(
    lam: float, gamma: float, consts: StabilityConstants
) -> float | None:
    """Per-step contraction rho/(1+gamma); exactly 0 at infinite strength.

    None whenever rho is undefined.
    """
    if math.isnan(gamma) or gamma < 0:
        raise ValueError(f"correction strength must be >= 0, got {gamma}")
    r = rho(lam, consts)
    if r is None:
        return None
    if math.isinf(gamma):
        return 0.0
    return r / (1.0 + gamma)


def tau_n(delta: float, n: int, consts: StabilityConstants) -> float:
    """High-probability single-step error floor at sample size n.

    eps_opt + (a / sqrt(n)) sqrt(log(b / delta)). With a = 0 the
    statistical term is absent and the floor is eps_opt for any n and
    delta. For a > 0 the log argument must exceed 1.
    """
    if not (0.0 < delta < 1.0):
        raise InvalidDeltaError(f"delta must lie in (0, 1), got {delta}")
    if n < 1:
        raise ValueError(f"sample size must be at least 1, got {n}")
    if consts.a == 0.0:
        return consts.eps_opt
    ratio = consts.b / delta
    if ratio <= 1.0:
        raise NonPositiveLogArgumentError(
            f"log argument b/delta = {ratio} must exceed 1"
        )
    return consts.eps_opt + (consts.a / math.sqrt(n)) * math.sqrt(math.log(ratio))


def bound_trajectory(
    t: int,
    n: int,
    delta: float,
    theta0_dist: float,
    lam: float,
    gamma: float,
    consts: StabilityConstants,
) -> float | None:
    """High-probability parameter-error bound after t corrected steps.

    tau_n(delta/t) * sum_{i=0}^{t} kappa^i + kappa^t * theta0_dist with
    kappa the contraction factor; the confidence budget is split evenly
    over the t steps. None when the contraction factor is undefined.
    """
    if t < 1:
        raise ValueError(f"step count must be at least 1, got {t}")
    if theta0_dist < 0 or not math.isfinite(theta0_dist):
        raise ValueError("initial parameter distance must be finite and >= 0")
    kappa = contraction_factor(lam, gamma, consts)
    if kappa is None:
        return None
    tau = tau_n(delta / t, n, consts)
    if kappa == 1.0:
        series = float(t + 1)
    else:
        series = (1.0 - kappa ** (t + 1)) / (1.0 - kappa)
    return tau * series + kappa**t * theta0_dist


@dataclass(frozen=True)
class GridCell:
    """One (lam, gamma) cell of an admissibility table."""

    lam: float
    gamma: float
    admissible: bool
    rho: float | None
    contraction: float | None


def admissibility_grid(
    lambdas: list[float], gammas: list[float], consts: StabilityConstants
) -> list[GridCell]:
    """Tabulate admissibility, rho, and contraction over a cartesian grid.

    Row order is lam-major: all gammas for the first lam, then the next.
    """
    if not lambdas or not gammas:
        raise ValueError("lambda and gamma lists must be nonempty")
    cells = []
    for lam in lambdas:
        r = rho(lam, consts)
        for gamma in gammas:
            cells.append(
                GridCell(
                    lam=lam,
                    gamma=gamma,
                    admissible=admissible(lam, gamma, consts),
                    rho=r,
                    contraction=contraction_factor(lam, gamma, consts),
                )
            )
    return cells
