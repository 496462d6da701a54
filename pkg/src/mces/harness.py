"""Experiment harness: benchmark configurations, dataset ingestion, persistence.

Each experiment writes one output directory containing a flat
``config.snapshot`` (every sampler parameter is a key), per-replicate
``trace_*.csv`` / ``mass_*.csv`` files, an ``ess.csv`` table and a
``summary.csv`` table, plus experiment-specific artifacts. All numeric
CSV output carries 17 significant digits so reruns with an identical
spec are byte-identical.
"""

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .diagnostics import ess_per_l, summarize
from .exceptions import ContractViolationError, DataFormatError
from .hamiltonian import MassMatrix
from .models import (
    LGCPModel,
    LogisticRegressionModel,
    RosenbrockTarget,
    grid_covariance,
    load_eight_schools,
)
from .sampler import (
    MCESConfig,
    frozen_start,
    mces_run,
    run_standard_hmc,
    save_trace,
    write_snapshot,
    read_snapshot,
)
from . import gaussian_theory

EXPERIMENTS = ("gauss1d", "rosenbrock", "eight_schools", "german_credit", "lgcp", "robustness")

GAUSS1D_TIME_FRACTIONS = (0.45, 0.49, 0.5, 0.95, 0.99, 1.0)
ROSENBROCK_B_VALUES = tuple(round(0.05 * i, 2) for i in range(1, 15))  # 0.05 .. 0.70

# Appendix-style robustness variants for the hierarchical-model benchmark:
# baseline tuning table, lower acceptance floor, single-strike freeze,
# and a larger step-count cap.
ROBUSTNESS_VARIANTS = (
    ("baseline", {}),
    ("accmin40", {"acc_min": 0.40, "i_max": 2}),
    ("imax1", {"i_max": 1}),
    ("lmax100", {"l_max": 100, "i_max": 2}),
)


# ---------------------------------------------------------------------------
# exact-flow chain for the univariate Gaussian study


def _cos_sin_pi(fraction):
    """(cos, sin) of fraction*pi, exact at multiples of pi/2.

    The harness specifies integration times as fractions of pi; resolving
    the quarter-turn cases exactly lets the degenerate time T = pi
    reproduce the deterministic flip x -> -x without rounding residue.
    """
    r = math.fmod(float(fraction), 2.0)
    if r < 0:
        r += 2.0
    table = {0.0: (1.0, 0.0), 0.5: (0.0, 1.0), 1.0: (-1.0, 0.0), 1.5: (0.0, -1.0)}
    if r in table:
        return table[r]
    return math.cos(math.pi * r), math.sin(math.pi * r)


def run_exact_flow_chain(t_over_pi, n_samples, x_init, rng):
    """HMC on the standard 1-d Gaussian using the closed-form flow.

    The flow is the phase rotation by angle T = t_over_pi * pi (unit mass,
    unit variance), so energy is conserved to rounding and essentially
    every proposal is accepted. Returns (x, p, accepted) arrays where p
    is the momentum state at the end of each proposal.
    """
    c, s = _cos_sin_pi(t_over_pi)
    xs = np.empty(n_samples)
    ps = np.empty(n_samples)
    accepted = np.zeros(n_samples, dtype=bool)
    x = float(x_init)
    for t in range(n_samples):
        p = rng.standard_normal()
        x_new = c * x + s * p
        p_new = c * p - s * x
        dh = 0.5 * ((x_new * x_new + p_new * p_new) - (x * x + p * p))
        u = rng.uniform()
        if dh <= 0.0 or u < math.exp(-dh):
            x = x_new
            accepted[t] = True
        xs[t] = x
        ps[t] = p_new
    return xs, ps, accepted


# ---------------------------------------------------------------------------
# dataset ingestion


def bundled_german_path():
    """Path of the bundled schema-compatible stand-in credit dataset."""
    from importlib.resources import files

    return str(files("mces").joinpath("datasets/german_standin.data-numeric"))


def load_german_credit(path):
    """Parse a ``german.data-numeric``-format file into a regression model.

    Expects 1000 whitespace-separated rows of 24 integer features plus a
    label in {1, 2}. Features are standardized to zero mean and unit
    variance, an intercept column is prepended, and labels are mapped
    1 -> 0 (good) and 2 -> 1 (bad).
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            rows = [line.split() for line in fh if line.strip()]
    except OSError as exc:
        raise DataFormatError(
            f"cannot read credit data file {path} "
            f"(expected german.data-numeric format: 1000 rows x 25 columns): {exc}"
        ) from exc
    if len(rows) != 1000:
        raise DataFormatError(f"{path}: expected 1000 rows, found {len(rows)}")
    widths = {len(r) for r in rows}
    if widths != {25}:
        raise DataFormatError(f"{path}: expected 25 columns per row, found {sorted(widths)}")
    try:
        table = np.array([[float(v) for v in row] for row in rows])
    except ValueError as exc:
        raise DataFormatError(f"{path}: non-numeric entry: {exc}") from exc
    features, labels = table[:, :24], table[:, 24]
    if not np.all((labels == 1) | (labels == 2)):
        raise DataFormatError(f"{path}: labels must be 1 or 2")
    sds = features.std(axis=0)
    if np.any(sds == 0):
        raise DataFormatError(f"{path}: constant feature column cannot be standardized")
    standardized = (features - features.mean(axis=0)) / sds
    design = np.column_stack([np.ones(len(table)), standardized])
    return LogisticRegressionModel(design, labels - 1.0)


# ---------------------------------------------------------------------------
# synthetic data for the Cox-process benchmark


@dataclass(frozen=True)
class LGCPGroundTruth:
    """Synthetic grid data: latent field, intensity and Poisson counts."""

    latent: np.ndarray
    intensity: np.ndarray
    counts: np.ndarray


def generate_lgcp_data(grid_side, seed, alpha=1.91, beta=1.0 / 33.0, mu=None, s=None):
    """Draw a latent field from the grid prior and Poisson counts from it."""
    d = int(grid_side)
    if d < 2:
        raise ContractViolationError("grid side must be at least 2")
    mu = math.log(126.0) - alpha / 2.0 if mu is None else float(mu)
    s = 1.0 / d**2 if s is None else float(s)
    rng = np.random.default_rng(seed)
    chol = np.linalg.cholesky(grid_covariance(d, alpha, beta))
    latent = (mu + chol @ rng.standard_normal(d * d)).reshape(d, d)
    intensity = s * np.exp(latent)
    counts = rng.poisson(intensity).astype(np.float64)
    return LGCPGroundTruth(latent=latent, intensity=intensity, counts=counts)


def save_grid_csv(grid, path, integer=False):
    fmt = (lambda v: str(int(v))) if integer else (lambda v: f"{v:.17g}")
    with open(path, "w", encoding="utf-8") as fh:
        for row in np.atleast_2d(grid):
            fh.write(",".join(fmt(v) for v in row) + "\n")


def load_grid_csv(path, expected_side=None):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            rows = [line.strip().split(",") for line in fh if line.strip()]
    except OSError as exc:
        raise DataFormatError(
            f"cannot read grid file {path} (expected a d x d CSV of values): {exc}"
        ) from exc
    try:
        grid = np.array([[float(v) for v in row] for row in rows])
    except ValueError as exc:
        raise DataFormatError(f"{path}: non-numeric entry: {exc}") from exc
    if grid.ndim != 2 or grid.shape[0] != grid.shape[1]:
        raise DataFormatError(f"{path}: expected a square grid, got shape {grid.shape}")
    if expected_side is not None and grid.shape[0] != expected_side:
        raise DataFormatError(
            f"{path}: expected a {expected_side}x{expected_side} grid, got {grid.shape}"
        )
    return grid


def save_lgcp_data(truth, directory):
    os.makedirs(directory, exist_ok=True)
    save_grid_csv(truth.counts, os.path.join(directory, "counts.csv"), integer=True)
    save_grid_csv(truth.latent, os.path.join(directory, "latent_truth.csv"))
    save_grid_csv(truth.intensity, os.path.join(directory, "intensity_truth.csv"))


# ---------------------------------------------------------------------------
# experiment specification


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to reproduce one experiment run."""

    experiment: str
    config: MCESConfig
    replicates: int
    seed: int
    out_dir: str
    draws: int
    discard: int
    paper_scale: bool = False
    workers: int = 1
    data_path: Optional[str] = None
    params: dict = field(default_factory=dict)


_EXPERIMENT_DEFAULTS = {
    # draws = retained samples after the burn-in discard
    "gauss1d": dict(draws=100, discard=0, replicates=1),
    "rosenbrock": dict(draws=10000, discard=1000, replicates=10),
    "eight_schools": dict(draws=100000, discard=1000, replicates=1),
    "german_credit": dict(draws=10000, discard=1000, replicates=10),
    "lgcp": dict(draws=20000, discard=2000, replicates=1),
    "robustness": dict(draws=9000, discard=1000, replicates=1),
}


def build_spec(experiment, out_dir, seed=None, replicates=None, config_file=None,
               paper_scale=False, workers=1, data_path=None, **param_overrides):
    """Resolve an experiment spec from defaults, a config file and overrides.

    Precedence: explicit arguments beat config-file keys beat defaults.
    """
    if experiment not in EXPERIMENTS:
        raise ContractViolationError(
            f"unknown experiment {experiment!r}; expected one of {', '.join(EXPERIMENTS)}"
        )
    defaults = dict(_EXPERIMENT_DEFAULTS[experiment])
    params = {}
    if experiment == "gauss1d":
        params["time_fractions"] = GAUSS1D_TIME_FRACTIONS
    elif experiment == "rosenbrock":
        params["b_values"] = ROSENBROCK_B_VALUES
        if paper_scale:
            defaults["replicates"] = 100
    elif experiment == "german_credit":
        if paper_scale:
            defaults["replicates"] = 100
    elif experiment == "lgcp":
        params["grid_side"] = 32 if paper_scale else 16
        if paper_scale:
            defaults["draws"] = 500000
            defaults["discard"] = 50000

    overrides = {}
    if config_file is not None:
        mapping = read_snapshot(config_file)
        overrides = {k: v for k, v in mapping.items()}
        for key in ("draws", "discard", "replicates"):
            if key in overrides:
                defaults[key] = int(float(overrides.pop(key)))
        if "grid_side" in overrides:
            params["grid_side"] = int(float(overrides.pop("grid_side")))
    params.update(param_overrides)

    if seed is None:
        seed = int(float(overrides.pop("seed", 0)))
    config = MCESConfig(seed=seed)
    if overrides:
        merged = config.to_snapshot()
        merged.update(overrides)
        config = MCESConfig.from_snapshot(merged).with_overrides(seed=seed)
    if replicates is None:
        replicates = defaults["replicates"]
    draws, discard = defaults["draws"], defaults["discard"]
    if experiment != "gauss1d" and "N_max" not in overrides:
        config = config.with_overrides(n_max=config.n0 + draws)

    return ExperimentSpec(
        experiment=experiment,
        config=config,
        replicates=int(replicates),
        seed=int(seed),
        out_dir=str(out_dir),
        draws=int(draws),
        discard=int(discard),
        paper_scale=bool(paper_scale),
        workers=int(workers),
        data_path=data_path,
        params=params,
    )


def _experiment_snapshot(spec, extra=None):
    mapping = {
        "experiment": spec.experiment,
        "seed": str(spec.seed),
        "replicates": str(spec.replicates),
        "draws": str(spec.draws),
        "discard": str(spec.discard),
        "paper_scale": str(int(spec.paper_scale)),
    }
    mapping.update(spec.config.to_snapshot())
    for key, value in sorted(spec.params.items()):
        mapping[key] = repr(value) if not isinstance(value, str) else value
    if extra:
        mapping.update(extra)
    return mapping


def _pmap(fn, tasks, workers):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


# ---------------------------------------------------------------------------
# replicate workers (module level so they pickle for the process pool)


def _build_model(kind, model_args):
    if kind == "rosenbrock":
        return RosenbrockTarget(model_args["b"])
    if kind == "eight_schools":
        return load_eight_schools(model_args.get("path"))
    if kind == "german_credit":
        return load_german_credit(model_args["path"])
    if kind == "lgcp":
        return LGCPModel(model_args["grid_side"], model_args["counts"])
    raise ContractViolationError(f"unknown model kind {kind!r}")


def _default_x_init(kind, model):
    if kind == "lgcp":
        return np.full(model.dim, model.mu)
    return np.zeros(model.dim)


def _mces_task(payload):
    """Run one adaptive chain and persist its trace; returns report rows."""
    kind = payload["kind"]
    model = _build_model(kind, payload["model_args"])
    config = payload["config"]
    rng = np.random.default_rng((payload["seed"], *payload["stream"]))
    trace = mces_run(model, config, _default_x_init(kind, model), rng)

    save_trace(trace, payload["trace_path"])
    save_grid_csv(trace.final_mass, payload["mass_path"])

    discard = payload["discard"]
    means, sds = summarize(trace, discard, transform=model.constrain)
    report = ess_per_l(trace, discard, transform=model.constrain)
    frozen = frozen_start(trace, config.n_m)
    result = {
        "names": model.parameter_names,
        "means": means,
        "sds": sds,
        "ess": report.ess,
        "ess_per_l": report.ess_per_l,
        "mean_l": report.mean_l,
        "acceptance": trace.acceptance_rate(discard),
        "frozen_acceptance": trace.acceptance_rate(frozen),
    }
    if kind == "lgcp":
        result["posterior_mean"] = trace.samples[discard:].mean(axis=0)
    return result


# ---------------------------------------------------------------------------
# experiment runners


def run_experiment(spec):
    """Run one experiment spec; returns a small dict of result locations."""
    os.makedirs(spec.out_dir, exist_ok=True)
    runner = {
        "gauss1d": _run_gauss1d,
        "rosenbrock": _run_rosenbrock,
        "eight_schools": _run_eight_schools,
        "german_credit": _run_german_credit,
        "lgcp": _run_lgcp,
        "robustness": _run_robustness,
    }[spec.experiment]
    return runner(spec)


def _run_gauss1d(spec):
    fractions = spec.params["time_fractions"]
    write_snapshot(_experiment_snapshot(spec), os.path.join(spec.out_dir, "config.snapshot"))
    files = []
    for idx, frac in enumerate(fractions):
        rng = np.random.default_rng((spec.seed, idx))
        xs, ps, accepted = run_exact_flow_chain(frac, spec.draws, 1.0, rng)
        name = f"samples_T{frac:g}pi.csv"
        path = os.path.join(spec.out_dir, name)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("iter,accepted,x,p\n")
            for t in range(spec.draws):
                fh.write(f"{t + 1},{int(accepted[t])},{xs[t]:.17g},{ps[t]:.17g}\n")
        files.append(name)
    return {"out_dir": spec.out_dir, "files": files}


def _write_ess_csv(path, rows, context_cols):
    header = ",".join(context_cols + ["dim", "ess", "ess_per_l"])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for context, result in rows:
            for i in range(len(result["ess"])):
                fh.write(
                    ",".join(str(c) for c in context)
                    + f",{i},{result['ess'][i]:.17g},{result['ess_per_l'][i]:.17g}\n"
                )


def _write_summary_csv(path, rows, context_cols):
    header = ",".join(context_cols + ["param", "mean", "sd"])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for context, result in rows:
            for name, mean, sd in zip(result["names"], result["means"], result["sds"]):
                fh.write(
                    ",".join(str(c) for c in context) + f",{name},{mean:.17g},{sd:.17g}\n"
                )


def _standard_payload(spec, kind, model_args, stream, tag):
    return {
        "kind": kind,
        "model_args": model_args,
        "config": spec.config,
        "seed": spec.seed,
        "stream": stream,
        "discard": spec.discard,
        "trace_path": os.path.join(spec.out_dir, f"trace_{tag}.csv"),
        "mass_path": os.path.join(spec.out_dir, f"mass_{tag}.csv"),
    }


def _run_rosenbrock(spec):
    b_values = spec.params["b_values"]
    write_snapshot(_experiment_snapshot(spec), os.path.join(spec.out_dir, "config.snapshot"))
    payloads = []
    contexts = []
    for bi, b in enumerate(b_values):
        for r in range(spec.replicates):
            payloads.append(
                _standard_payload(spec, "rosenbrock", {"b": b}, (bi, r), f"b{b:g}_r{r}")
            )
            contexts.append((f"{b:g}", r))
    results = _pmap(_mces_task, payloads, spec.workers)
    rows = list(zip(contexts, results))
    _write_ess_csv(os.path.join(spec.out_dir, "ess.csv"), rows, ["b", "replicate"])
    _write_summary_csv(os.path.join(spec.out_dir, "summary.csv"), rows, ["b", "replicate"])
    return {"out_dir": spec.out_dir, "runs": len(results)}


def _run_eight_schools(spec):
    write_snapshot(_experiment_snapshot(spec), os.path.join(spec.out_dir, "config.snapshot"))
    model_args = {"path": spec.data_path}
    payloads = [
        _standard_payload(spec, "eight_schools", model_args, (r,), str(r))
        for r in range(spec.replicates)
    ]
    results = _pmap(_mces_task, payloads, spec.workers)
    rows = [((r,), res) for r, res in enumerate(results)]
    _write_ess_csv(os.path.join(spec.out_dir, "ess.csv"), rows, ["replicate"])
    _write_summary_csv(os.path.join(spec.out_dir, "summary.csv"), rows, ["replicate"])
    return {"out_dir": spec.out_dir, "runs": len(results)}


def run_reference_hmc(model, x_init, n_samples, seed, epsilon=0.04, n_steps=40):
    """Long fixed-parameter HMC run used for self-consistency checks."""
    rng = np.random.default_rng((seed, 0xEF))
    return run_standard_hmc(
        model, x_init, MassMatrix.identity(model.dim), epsilon, n_steps, n_samples, rng
    )


def _run_german_credit(spec):
    path = spec.data_path or bundled_german_path()
    model = load_german_credit(path)  # validate before doing any work
    extra = {"data_path": path, "bundled_standin": str(int(spec.data_path is None))}
    write_snapshot(_experiment_snapshot(spec, extra), os.path.join(spec.out_dir, "config.snapshot"))

    payloads = [
        _standard_payload(spec, "german_credit", {"path": path}, (r,), str(r))
        for r in range(spec.replicates)
    ]
    results = _pmap(_mces_task, payloads, spec.workers)
    rows = [((r,), res) for r, res in enumerate(results)]
    _write_ess_csv(os.path.join(spec.out_dir, "ess.csv"), rows, ["replicate"])
    _write_summary_csv(os.path.join(spec.out_dir, "summary.csv"), rows, ["replicate"])

    # self-consistency reference: plain HMC, conservative stepsize, long run
    ref_draws = 30000 if not spec.paper_scale else 100000
    ref_trace = run_reference_hmc(model, np.zeros(model.dim), ref_draws, spec.seed)
    ref_means, ref_sds = summarize(ref_trace, ref_draws // 5)
    with open(os.path.join(spec.out_dir, "reference_summary.csv"), "w", encoding="utf-8") as fh:
        fh.write("param,mean,sd\n")
        for name, mean, sd in zip(model.parameter_names, ref_means, ref_sds):
            fh.write(f"{name},{mean:.17g},{sd:.17g}\n")

    pooled = np.mean([res["means"] for res in results], axis=0)
    with open(os.path.join(spec.out_dir, "consistency.csv"), "w", encoding="utf-8") as fh:
        fh.write("param,mces_mean,reference_mean,abs_diff\n")
        for name, a, b in zip(model.parameter_names, pooled, ref_means):
            fh.write(f"{name},{a:.17g},{b:.17g},{abs(a - b):.17g}\n")
    return {
        "out_dir": spec.out_dir,
        "runs": len(results),
        "max_reference_gap": float(np.max(np.abs(pooled - ref_means))),
    }


def _run_lgcp(spec):
    d = spec.params["grid_side"]
    data_dir = spec.data_path
    truth_latent = None
    if data_dir is None:
        data_dir = os.path.join(spec.out_dir, "data")
        os.makedirs(spec.out_dir, exist_ok=True)
        truth = generate_lgcp_data(d, (spec.seed, 0xDA7A))
        save_lgcp_data(truth, data_dir)
        counts = truth.counts
        truth_latent = truth.latent
    else:
        counts_path = os.path.join(data_dir, "counts.csv")
        if not os.path.exists(counts_path):
            raise DataFormatError(
                f"missing LGCP counts file {counts_path} "
                f"(expected a {d}x{d} CSV of integer counts; see `mces gen-lgcp`)"
            )
        counts = load_grid_csv(counts_path, expected_side=d)
        latent_path = os.path.join(data_dir, "latent_truth.csv")
        if os.path.exists(latent_path):
            truth_latent = load_grid_csv(latent_path, expected_side=d)

    extra = {"data_dir": data_dir}
    write_snapshot(_experiment_snapshot(spec, extra), os.path.join(spec.out_dir, "config.snapshot"))

    model_args = {"grid_side": d, "counts": counts}
    payloads = [
        _standard_payload(spec, "lgcp", model_args, (r,), str(r))
        for r in range(spec.replicates)
    ]
    results = _pmap(_mces_task, payloads, spec.workers)
    rows = [((r,), res) for r, res in enumerate(results)]
    _write_ess_csv(os.path.join(spec.out_dir, "ess.csv"), rows, ["replicate"])
    _write_summary_csv(os.path.join(spec.out_dir, "summary.csv"), rows, ["replicate"])

    with open(os.path.join(spec.out_dir, "lgcp_report.csv"), "w", encoding="utf-8") as fh:
        fh.write("replicate,acceptance,frozen_acceptance,latent_truth_correlation\n")
        for r, res in enumerate(results):
            mean_grid = res["posterior_mean"].reshape(d, d)
            save_grid_csv(mean_grid, os.path.join(spec.out_dir, f"posterior_mean_{r}.csv"))
            corr = float("nan")
            if truth_latent is not None:
                corr = float(np.corrcoef(mean_grid.reshape(-1), truth_latent.reshape(-1))[0, 1])
            fh.write(
                f"{r},{res['acceptance']:.17g},{res['frozen_acceptance']:.17g},{corr:.17g}\n"
            )
    return {"out_dir": spec.out_dir, "runs": len(results)}


def _run_robustness(spec):
    write_snapshot(_experiment_snapshot(spec), os.path.join(spec.out_dir, "config.snapshot"))
    payloads = []
    contexts = []
    for vi, (name, overrides) in enumerate(ROBUSTNESS_VARIANTS):
        config = spec.config.with_overrides(**overrides)
        for r in range(spec.replicates):
            payload = _standard_payload(
                spec, "eight_schools", {"path": spec.data_path}, (vi, r), f"{name}_r{r}"
            )
            payload["config"] = config
            payloads.append(payload)
            contexts.append((name, r))
    results = _pmap(_mces_task, payloads, spec.workers)
    rows = list(zip(contexts, results))
    _write_ess_csv(os.path.join(spec.out_dir, "ess.csv"), rows, ["variant", "replicate"])
    _write_summary_csv(os.path.join(spec.out_dir, "summary.csv"), rows, ["variant", "replicate"])
    with open(os.path.join(spec.out_dir, "variants.csv"), "w", encoding="utf-8") as fh:
        fh.write("variant,replicate,Acc_min,I_max,L_max,acceptance,frozen_acceptance\n")
        for (name, r), res in rows:
            cfg = spec.config.with_overrides(**dict(ROBUSTNESS_VARIANTS)[name])
            fh.write(
                f"{name},{r},{cfg.acc_min:g},{cfg.i_max},{cfg.l_max},"
                f"{res['acceptance']:.17g},{res['frozen_acceptance']:.17g}\n"
            )
    return {"out_dir": spec.out_dir, "runs": len(results)}


# ---------------------------------------------------------------------------
# closed-form optimality verification


def verify_theorem(dim=4, grid_points=2000, n_pairs=20, seed=0):
    """Grid-check the optimal integration time on random commuting pairs.

    For each random SPD pair (Sigma, M = Sigma^-1) the T-grid argmax of
    the conditional log-determinant objective must land within one grid
    cell of pi/2, and the conditional covariance at T = pi/2 must equal
    Sigma to 1e-8. Returns (all_passed, per-pair rows).
    """
    from .models import GaussianTarget

    if not 1 <= dim <= 5:
        raise ContractViolationError("dim must lie in [1, 5]")
    rng = np.random.default_rng(seed)
    grid = np.linspace(0.0, math.pi, grid_points + 1)[1:]  # (0, pi]
    cell = grid[1] - grid[0]
    rows = []
    all_ok = True
    for pair in range(n_pairs):
        sigma, _ = gaussian_theory.random_commuting_pair(rng, dim)
        target = GaussianTarget(np.zeros(dim), sigma)
        mass = MassMatrix.from_covariance(sigma)
        system = gaussian_theory.SpectralSystem.build(sigma, mass.matrix)
        values = [
            gaussian_theory.log_det_conditional_cov(target, mass, t, system=system)
            for t in grid
        ]
        t_star = grid[int(np.argmax(values))]
        cov_gap = float(
            np.abs(
                gaussian_theory.conditional_covariance(target, mass, math.pi / 2, system=system)
                - sigma
            ).max()
        )
        ok = abs(t_star - math.pi / 2) <= cell + 1e-12 and cov_gap <= 1e-8
        all_ok &= ok
        rows.append({"pair": pair, "argmax_T": t_star, "cov_gap": cov_gap, "ok": ok})
    return all_ok, rows
