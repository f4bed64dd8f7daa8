"""Experiment files: TOML schema, overrides, validation.

The file has five sections: [target], [loop], [sweep], [constants],
[output]. Only [target] and [loop] are required. Unknown sections or
keys are rejected outright so typos cannot silently change an
experiment. Values are validated before anything runs.

Infinite correction strength is written as the bare TOML token inf,
for example `gamma = inf` or `--set loop.gamma=inf`.
"""

from dataclasses import dataclass
import math

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

import numpy as np

from .bounds import StabilityConstants
from .correction import CorrectionMode, CorrectionSpec
from .engine import AccrualPolicy, LoopConfig
from .errors import ConfigError, CorrloopError, ParseError
from .gaussian import GaussianParams

_SECTION_KEYS = {
    "target": {"dim", "mean", "cov"},
    "loop": {
        "n",
        "lambda",
        "gamma",
        "mode",
        "generations",
        "accrual",
        "seed",
        "cov_floor",
        "real_data",
    },
    "sweep": {"lambdas", "gammas", "replicates", "base_seed", "late_window"},
    "constants": {
        "alpha",
        "L",
        "epsilon",
        "eps_opt",
        "a",
        "b",
        "delta",
        "theta0_dist",
        "horizon",
    },
    "output": {"directory", "formats"},
}


@dataclass(frozen=True)
class SweepSpec:
    lambdas: tuple[float, ...]
    gammas: tuple[float, ...]
    replicates: int
    base_seed: int
    late_window: int


@dataclass(frozen=True)
class BoundsSpec:
    constants: StabilityConstants
    delta: float
    theta0_dist: float
    horizon: int | None  # None: use loop.generations


@dataclass(frozen=True)
class OutputSpec:
    directory: str
    formats: tuple[str, ...]


@dataclass(frozen=True)
class Experiment:
    target: GaussianParams
    loop: LoopConfig
    real_data_path: str | None
    sweep: SweepSpec
    bounds: BoundsSpec
    constants_given: bool  # whether the file spelled out [constants]
    output: OutputSpec


def _require(cond: bool, msg: str):
    if not cond:
        raise ConfigError(msg)


def _num(value, path: str) -> float:
    _require(
        isinstance(value, (int, float)) and not isinstance(value, bool),
        f"{path}: expected a number, got {value!r}",
    )
    return float(value)


def _int(value, path: str) -> int:
    _require(
        isinstance(value, int) and not isinstance(value, bool),
        f"{path}: expected an integer, got {value!r}",
    )
    return value


def _str(value, path: str) -> str:
    _require(isinstance(value, str), f"{path}: expected a string, got {value!r}")
    return value


def _check_keys(section: str, table: dict):
    _require(isinstance(table, dict), f"[{section}] must be a table")
    known = _SECTION_KEYS[section]
    for key in table:
        _require(key in known, f"unknown key '{key}' in [{section}]")


def apply_overrides(doc: dict, assignments: list[str]) -> dict:
    """Apply --set style section.key=value assignments to a parsed doc.

    The value is parsed as a TOML literal; anything that fails to parse
    is taken as a bare string, so --set loop.mode=pointwise_matched works
    without extra quoting.
    """
    doc = {k: dict(v) if isinstance(v, dict) else v for k, v in doc.items()}
    for item in assignments:
        key, sep, raw = item.partition("=")
        _require(bool(sep), f"override {item!r} must look like section.key=value")
        parts = key.strip().split(".")
        _require(
            len(parts) == 2 and all(parts),
            f"override key {key!r} must look like section.key",
        )
        section, field = parts
        try:
            value = tomllib.loads(f"v = {raw.strip()}")["v"]
        except tomllib.TOMLDecodeError:
            value = raw.strip()
        doc.setdefault(section, {})
        _require(
            isinstance(doc[section], dict), f"cannot override non-table [{section}]"
        )
        doc[section][field] = value
    return doc


def _parse_target(table: dict) -> GaussianParams:
    _check_keys("target", table)
    _require("dim" in table, "[target] needs dim")
    dim = _int(table["dim"], "target.dim")
    _require(dim >= 1, "target.dim must be at least 1")
    mean = table.get("mean", [0.0] * dim)
    cov = table.get("cov")
    _require(isinstance(mean, list), "target.mean must be an array")
    mean_arr = np.array([_num(v, "target.mean") for v in mean])
    if cov is None:
        cov_arr = np.eye(dim)
    else:
        _require(
            isinstance(cov, list) and all(isinstance(r, list) for r in cov),
            "target.cov must be an array of arrays",
        )
        cov_arr = np.array([[_num(v, "target.cov") for v in row] for row in cov])
    try:
        params = GaussianParams(mean=mean_arr, cov=cov_arr)
    except (CorrloopError, ValueError) as e:
        raise ConfigError(f"target: {e}") from e
    _require(params.dim == dim, "target.mean length must equal target.dim")
    return params


def _parse_loop(table: dict, dim: int) -> tuple[LoopConfig, str | None]:
    _check_keys("loop", table)
    for key in ("n", "lambda", "gamma", "generations"):
        _require(key in table, f"[loop] needs {key}")
    mode_token = _str(table.get("mode", "distribution_wise"), "loop.mode")
    try:
        mode = CorrectionMode(mode_token)
    except ValueError:
        raise ConfigError(
            f"loop.mode must be one of "
            f"{[m.value for m in CorrectionMode]}, got {mode_token!r}"
        ) from None
    accrual_token = _str(table.get("accrual", "fresh"), "loop.accrual")
    try:
        accrual = AccrualPolicy(accrual_token)
    except ValueError:
        raise ConfigError(
            f"loop.accrual must be one of "
            f"{[a.value for a in AccrualPolicy]}, got {accrual_token!r}"
        ) from None
    real_data = table.get("real_data")
    if real_data is not None:
        real_data = _str(real_data, "loop.real_data")
    try:
        config = LoopConfig(
            dim=dim,
            n=_int(table["n"], "loop.n"),
            lam=_num(table["lambda"], "loop.lambda"),
            correction=CorrectionSpec(
                gamma=_num(table["gamma"], "loop.gamma"), mode=mode
            ),
            generations=_int(table["generations"], "loop.generations"),
            accrual=accrual,
            seed=_int(table.get("seed", 0), "loop.seed"),
            cov_floor=_num(table.get("cov_floor", 1e-9), "loop.cov_floor"),
        )
    except (CorrloopError, ValueError) as e:
        raise ConfigError(f"loop: {e}") from e
    return config, real_data


def _parse_sweep(table: dict | None, loop: LoopConfig) -> SweepSpec:
    if table is None:
        table = {}
    _check_keys("sweep", table)
    lambdas = table.get("lambdas", [loop.lam])
    gammas = table.get("gammas", [loop.correction.gamma])
    _require(isinstance(lambdas, list), "sweep.lambdas must be an array")
    _require(isinstance(gammas, list), "sweep.gammas must be an array")
    if not lambdas:
        raise ParseError("sweep.lambdas must be a nonempty array")
    if not gammas:
        raise ParseError("sweep.gammas must be a nonempty array")
    lams = tuple(_num(v, "sweep.lambdas") for v in lambdas)
    gams = tuple(_num(v, "sweep.gammas") for v in gammas)
    for lam in lams:
        _require(lam >= 0 and math.isfinite(lam), f"sweep.lambdas: bad value {lam}")
    for g in gams:
        _require(g >= 0 and not math.isnan(g), f"sweep.gammas: bad value {g}")
    replicates = _int(table.get("replicates", 1), "sweep.replicates")
    _require(replicates >= 1, "sweep.replicates must be at least 1")
    base_seed = _int(table.get("base_seed", loop.seed), "sweep.base_seed")
    _require(0 <= base_seed < 2**64, "sweep.base_seed must fit in 64 bits")
    late_window = _int(
        table.get("late_window", min(10, loop.generations + 1)), "sweep.late_window"
    )
    _require(
        1 <= late_window <= loop.generations + 1,
        "sweep.late_window must be between 1 and generations + 1",
    )
    return SweepSpec(
        lambdas=lams,
        gammas=gams,
        replicates=replicates,
        base_seed=base_seed,
        late_window=late_window,
    )


def _parse_constants(table: dict | None, loop: LoopConfig) -> BoundsSpec:
    if table is None:
        table = {}
    _check_keys("constants", table)
    try:
        consts = StabilityConstants(
            alpha=_num(table.get("alpha", 1.0), "constants.alpha"),
            L=_num(table.get("L", 0.0), "constants.L"),
            epsilon=_num(table.get("epsilon", 0.0), "constants.epsilon"),
            eps_opt=_num(table.get("eps_opt", 0.0), "constants.eps_opt"),
            a=_num(table.get("a", 1.0), "constants.a"),
            b=_num(table.get("b", 2.0), "constants.b"),
        )
    except ValueError as e:
        raise ConfigError(f"constants: {e}") from e
    delta = _num(table.get("delta", 0.05), "constants.delta")
    _require(0.0 < delta < 1.0, "constants.delta must lie in (0, 1)")
    theta0 = _num(table.get("theta0_dist", 1.0), "constants.theta0_dist")
    _require(
        theta0 >= 0 and math.isfinite(theta0),
        "constants.theta0_dist must be finite and >= 0",
    )
    horizon = table.get("horizon")
    if horizon is not None:
        horizon = _int(horizon, "constants.horizon")
        _require(horizon >= 1, "constants.horizon must be at least 1")
    return BoundsSpec(
        constants=consts, delta=delta, theta0_dist=theta0, horizon=horizon
    )


def _parse_output(table: dict | None) -> OutputSpec:
    if table is None:
        table = {}
    _check_keys("output", table)
    directory = _str(table.get("directory", "out"), "output.directory")
    formats = table.get("formats", ["csv"])
    _require(
        isinstance(formats, list) and formats, "output.formats must be a nonempty array"
    )
    fmts = tuple(_str(f, "output.formats") for f in formats)
    for f in fmts:
        _require(f == "csv", f"unsupported output format {f!r} (only 'csv')")
    return OutputSpec(directory=directory, formats=fmts)


def parse_experiment(text: str, overrides: list[str] | None = None) -> Experiment:
    """Parse and validate an experiment document, applying overrides."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ParseError(f"invalid TOML: {e}") from e
    if overrides:
        doc = apply_overrides(doc, overrides)
    for section in doc:
        _require(section in _SECTION_KEYS, f"unknown section [{section}]")
    _require("target" in doc, "missing required section [target]")
    _require("loop" in doc, "missing required section [loop]")
    target = _parse_target(doc["target"])
    loop, real_data_path = _parse_loop(doc["loop"], target.dim)
    sweep_spec = _parse_sweep(doc.get("sweep"), loop)
    bounds_spec = _parse_constants(doc.get("constants"), loop)
    output = _parse_output(doc.get("output"))
    return Experiment(
        target=target,
        loop=loop,
        real_data_path=real_data_path,
        sweep=sweep_spec,
        bounds=bounds_spec,
        constants_given="constants" in doc,
        output=output,
    )


def load_experiment(path: str, overrides: list[str] | None = None) -> Experiment:
    """Read, parse, and validate an experiment file."""
    with open(path, "rb") as fh:
        text = fh.read().decode("utf-8")
    return parse_experiment(text, overrides)


def configs_for_sweep(exp: Experiment) -> list[LoopConfig]:
    """Cartesian (lambda, gamma) grid over the base loop config.

    lam-major order: all gammas for the first lambda, then the next.
    The config index used for seed derivation is the position here.
    """
    from dataclasses import replace

    configs = []
    for lam in exp.sweep.lambdas:
        for gamma in exp.sweep.gammas:
            configs.append(
                replace(
                    exp.loop,
                    lam=lam,
                    correction=CorrectionSpec(
                        gamma=gamma, mode=exp.loop.correction.mode
                    ),
                )
            )
    return configs
