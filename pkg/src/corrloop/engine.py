"""The iterative retraining loop and multi-run orchestration.

One run: fit the real data, then repeatedly synthesize from the latest
fit, pass the batch through the correction operator, pool it with the
real data under the accrual policy, and refit. Everything is driven by
one numpy Generator derived from the run seed, so runs are bit
reproducible.
"""

from dataclasses import dataclass, replace
from enum import Enum
import hashlib
import math
import statistics

import numpy as np

from .correction import (
    CorrectionMode,
    CorrectionSpec,
    apply_pointwise_correction,
    sample_corrected,
)
from .errors import (
    CorrloopError,
    DimensionMismatchError,
    EmptyInputError,
    LoopFailureError,
    SizeMismatchError,
)
from .gaussian import Dataset, GaussianParams, concat_datasets, fit_gaussian, sample_gaussian
from .metrics import gaussian_w2, param_distance


class AccrualPolicy(str, Enum):
    # fresh: only the newest corrected batch joins the real data.
    # log: the newest batch plus every batch from a power-of-two
    # generation is retained, so the pool grows logarithmically.
    FRESH_EACH_GENERATION = "fresh"
    LOG_ACCRUAL = "log"


@dataclass(frozen=True)
class LoopConfig:
    """Static description of one training-loop run."""

    dim: int
    n: int
    lam: float
    correction: CorrectionSpec
    generations: int
    accrual: AccrualPolicy = AccrualPolicy.FRESH_EACH_GENERATION
    seed: int = 0
    cov_floor: float = 1e-9

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be at least 1, got {self.dim}")
        if self.n < 1:
            raise ValueError(f"n must be at least 1, got {self.n}")
        if self.lam < 0 or not math.isfinite(self.lam):
            raise ValueError(f"lambda must be finite and >= 0, got {self.lam}")
        if self.generations < 1:
            raise ValueError(
                f"generations must be at least 1, got {self.generations}"
            )
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if self.cov_floor < 0 or not math.isfinite(self.cov_floor):
            raise ValueError("cov_floor must be finite and >= 0")
        object.__setattr__(self, "accrual", AccrualPolicy(self.accrual))

    @property
    def synth_per_generation(self) -> int:
        return int(self.lam * self.n)


@dataclass(frozen=True)
class GenerationRecord:
    """Fit state and diagnostics after one generation."""

    generation: int
    params: GaussianParams
    w2_to_target: float
    param_dist_to_target: float
    synth_pool_size: int


@dataclass(frozen=True)
class Trajectory:
    config: LoopConfig
    target: GaussianParams
    records: tuple[GenerationRecord, ...]


def _is_power_of_two(g: int) -> bool:
    return g >= 1 and (g & (g - 1)) == 0


def accrue(
    pool: list[tuple[int, Dataset]],
    new_batch: Dataset,
    generation: int,
    policy: AccrualPolicy,
) -> list[tuple[int, Dataset]]:
    """Next synthetic pool after generation's corrected batch arrives.

    Entries are (generation index, batch) pairs in increasing generation
    order. Under log accrual only batches from power-of-two generations
    survive from the previous pool.
    """
    if generation < 1:
        raise ValueError(f"generation must be at least 1, got {generation}")
    policy = AccrualPolicy(policy)
    if policy is AccrualPolicy.FRESH_EACH_GENERATION:
        return [(generation, new_batch)]
    kept = [(g, b) for (g, b) in pool if _is_power_of_two(g)]
    return kept + [(generation, new_batch)]


def _record(
    t: int, params: GaussianParams, target: GaussianParams, pool_size: int
) -> GenerationRecord:
    return GenerationRecord(
        generation=t,
        params=params,
        w2_to_target=gaussian_w2(params, target),
        param_dist_to_target=param_distance(params, target),
        synth_pool_size=pool_size,
    )


def run_loop(
    config: LoopConfig,
    target: GaussianParams,
    real_data: Dataset | None = None,
    rng: np.random.Generator | None = None,
) -> Trajectory:
    """Run the corrected retraining loop and record every generation.

    Real data is drawn once from the target unless supplied. Numerical
    failures are re-raised as LoopFailureError tagged with the generation
    at which they occurred (generation 0 is the initial fit).
    """
    if target.dim != config.dim:
        raise DimensionMismatchError(
            f"target dim {target.dim} does not match config dim {config.dim}"
        )
    if rng is None:
        rng = np.random.Generator(np.random.PCG64(config.seed))
    if real_data is None:
        real = sample_gaussian(target, config.n, rng)
    else:
        if real_data.dim != config.dim:
            raise DimensionMismatchError(
                f"real data dim {real_data.dim} does not match config dim {config.dim}"
            )
        if len(real_data) != config.n:
            raise SizeMismatchError(
                f"real data has {len(real_data)} points, config expects {config.n}"
            )
        real = real_data

    def guarded(t, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except CorrloopError as e:
            raise LoopFailureError(t, str(e)) from e
        except np.linalg.LinAlgError as e:
            raise LoopFailureError(t, str(e)) from e

    params = guarded(0, fit_gaussian, real, config.cov_floor)
    records = [_record(0, params, target, 0)]
    m = config.synth_per_generation
    spec = config.correction
    pool: list[tuple[int, Dataset]] = []
    for t in range(1, config.generations + 1):
        if m > 0:
            synth = guarded(t, sample_gaussian, params, m, rng)
            if spec.mode is CorrectionMode.DISTRIBUTION_WISE:
                corrected = guarded(
                    t, sample_corrected, synth, target, spec.gamma, m, rng
                )
            else:
                corrected = guarded(
                    t, apply_pointwise_correction, synth, target, spec.gamma, rng
                )
            pool = accrue(pool, corrected, t, config.accrual)
        train = concat_datasets([real] + [b for (_, b) in pool])
        params = guarded(t, fit_gaussian, train, config.cov_floor)
        records.append(_record(t, params, target, len(train) - len(real)))
    return Trajectory(config=config, target=target, records=tuple(records))


def derive_seed(base_seed: int, config_index: int, replicate: int) -> int:
    """Stable per-run seed for sweeps.

    base_seed XOR the first 8 bytes of a salted SHA-256 over the config
    and replicate indices; platform and process independent.
    """
    digest = hashlib.sha256(
        b"corrloop.sweep:"
        + int(config_index).to_bytes(8, "big")
        + int(replicate).to_bytes(8, "big")
    ).digest()
    return (int(base_seed) ^ int.from_bytes(digest[:8], "big")) & (2**64 - 1)


@dataclass(frozen=True)
class SweepRun:
    """One completed (or failed) run of a sweep."""

    config_index: int
    replicate: int
    seed: int
    trajectory: Trajectory | None
    error: str | None


def sweep(
    configs: list[LoopConfig],
    target: GaussianParams,
    base_seed: int,
    replicates: int,
    real_data: Dataset | None = None,
) -> list[SweepRun]:
    """Run every config with `replicates` derived seeds each.

    Failures are collected per run, never aborting the sweep. Results are
    ordered by (config index, replicate) regardless of execution order.
    A supplied real dataset is shared by every run; otherwise each run
    draws its own from the target under its derived seed.
    """
    if not configs:
        raise EmptyInputError("no configs to sweep")
    if replicates < 1:
        raise ValueError(f"replicates must be at least 1, got {replicates}")
    runs = []
    for ci, config in enumerate(configs):
        for r in range(replicates):
            seed = derive_seed(base_seed, ci, r)
            cfg = replace(config, seed=seed)
            try:
                traj = run_loop(cfg, target, real_data=real_data)
                runs.append(SweepRun(ci, r, seed, traj, None))
            except CorrloopError as e:
                runs.append(SweepRun(ci, r, seed, None, str(e)))
    return runs


@dataclass(frozen=True)
class ConfigSummary:
    """Aggregate statistics for all replicates of one config."""

    dim: int
    n: int
    lam: float
    gamma: float
    mode: CorrectionMode
    generations: int
    accrual: AccrualPolicy
    cov_floor: float
    replicates: int
    w2_late_mean: float
    w2_late_std: float
    param_dist_late_mean: float
    contraction_ratio_median: float


def _config_key(c: LoopConfig):
    return (
        c.dim,
        c.n,
        c.lam,
        c.correction.gamma,
        c.correction.mode,
        c.generations,
        c.accrual,
        c.cov_floor,
    )


def summarize(trajectories: list[Trajectory], late_window: int) -> list[ConfigSummary]:
    """Group trajectories by config (seed ignored) and aggregate.

    Late statistics pool the last late_window generations across all
    replicates of a config. The contraction ratio is the per-step ratio
    of parameter distances, median over every step of every replicate.
    """
    if not trajectories:
        raise EmptyInputError("no trajectories to summarize")
    if late_window < 1:
        raise ValueError(f"late_window must be at least 1, got {late_window}")
    groups: dict[tuple, list[Trajectory]] = {}
    for traj in trajectories:
        groups.setdefault(_config_key(traj.config), []).append(traj)
    out = []
    for key, members in groups.items():
        c = members[0].config
        if late_window > c.generations + 1:
            raise ValueError(
                f"late_window {late_window} exceeds recorded generations "
                f"{c.generations + 1}"
            )
        w2_late: list[float] = []
        pd_late: list[float] = []
        ratios: list[float] = []
        for traj in members:
            recs = traj.records
            w2_late.extend(r.w2_to_target for r in recs[-late_window:])
            pd_late.extend(r.param_dist_to_target for r in recs[-late_window:])
            for prev, cur in zip(recs, recs[1:]):
                if prev.param_dist_to_target > 0:
                    ratios.append(
                        cur.param_dist_to_target / prev.param_dist_to_target
                    )
        out.append(
            ConfigSummary(
                dim=c.dim,
                n=c.n,
                lam=c.lam,
                gamma=c.correction.gamma,
                mode=c.correction.mode,
                generations=c.generations,
                accrual=c.accrual,
                cov_floor=c.cov_floor,
                replicates=len(members),
                w2_late_mean=statistics.fmean(w2_late),
                w2_late_std=(
                    statistics.stdev(w2_late) if len(w2_late) > 1 else 0.0
                ),
                param_dist_late_mean=statistics.fmean(pd_late),
                contraction_ratio_median=(
                    float(np.median(ratios)) if ratios else float("nan")
                ),
            )
        )
    return out
