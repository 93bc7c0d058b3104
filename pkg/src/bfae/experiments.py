"""Config-driven experiment runners behind the CLI.

Configs are plain JSON dicts with a ``schema_version`` field.  Every run is
reproducible from (config, master seed): per-replication seeds derive from
``SeedSequence([master_seed, replication])``, floats are written with 17
significant digits, and row order is fixed, so rerunning a command produces
byte-identical report files.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from copy import deepcopy
from pathlib import Path

import numpy as np

from .data import SplitSpec, load_csv, save_csv, train_test_split
from .evaluate import (
    PipelineConfig,
    PipelineData,
    evaluate_pipeline,
    fit_reducer,
    functional_rmse,
)
from .gp import MaternParams, SimConfig, sample_gp
from .grids import make_uniform_grid
from .model import bottleneck_config, build, save_model, train
from .report import BENCHMARK_COLUMNS, PIPELINE_COLUMNS, Report, summarize_benchmark
from .standins import make_adelaide_standin, make_phoneme_standin

__all__ = [
    "default_config",
    "load_config",
    "apply_overrides",
    "apply_paper_scale",
    "config_hash",
    "run_simulate",
    "run_train",
    "run_benchmark",
    "run_realdata",
]

SCHEMA_VERSION = 1
KINDS = ("sim1", "sim10", "phoneme", "adelaide", "custom")


def default_config(kind: str) -> dict:
    """Desk-scale defaults for each experiment kind.

    Learning rates and epoch counts are calibration choices for these grid
    sizes (the discrete-exact gradients scale with the squared grid spacing,
    so usable learning rates grow roughly like M^2).
    """
    if kind not in KINDS:
        raise ValueError(f"unknown experiment kind {kind!r}; choose from {KINDS}")
    cfg = {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "master_seed": 0,
        "replications": 10,
        "sim": {
            "n_samples": 100,
            "n_features": 1,
            "m_points": 50,
            "interval": [0.0, 1.0],
            "matern": {"sigma2": 1.0, "rho": 0.5, "nu": 2.5},
            "noise_sd": 0.1,
        },
        "split": {"train_fraction": 0.8, "shuffle": True},
        "bfae": {
            "latent_features": 1,
            "latent_points": 50,
            "n_layers": 2,
            "hidden_activation": "tanh",
            "lr": 30.0,
            "epochs": 5000,
            "init_scheme": "uniform",
            "momentum": 0.0,
        },
        "bfae_reduced_points": 10,
        "ae": {"lr": 0.005, "epochs": 3000},
        "baselines": {"pca": True, "ae": True, "fpca": True},
        "variance_target": 0.99,
        "standardize": False,
        "downstream": {"ridge": None},
        "standin": True,
        "paths": {
            "dataset": None,
            "phoneme": None,
            "adelaide_temperature": None,
            "adelaide_demand": None,
        },
    }
    if kind == "sim10":
        cfg["replications"] = 5
        cfg["sim"]["n_features"] = 10
        cfg["bfae"].update(latent_features=4, lr=20.0, epochs=6000)
        cfg["ae"].update(lr=0.003, epochs=3000)
    elif kind == "phoneme":
        cfg["replications"] = 1
        cfg["sim"] = {"n_samples": 800, "m_points": 150}
        cfg["bfae"] = {
            "latent_features": 1,
            "latent_points": 150,
            "n_layers": 2,
            "hidden_activation": "tanh",
            "lr": 100.0,
            "epochs": 3000,
            "init_scheme": "uniform",
            "momentum": 0.0,
        }
        cfg["bfae_reduced_points"] = 30
        cfg["standardize"] = True
        cfg["standin_class_sep"] = 5.0
    elif kind == "adelaide":
        cfg["replications"] = 1
        cfg["sim"] = {"n_samples": 508, "m_points": 48}
        cfg["split"]["train_fraction"] = 400.0 / 508.0
        cfg["bfae"] = {
            "latent_features": 4,
            "latent_points": 48,
            "n_layers": 2,
            "hidden_activation": "tanh",
            "lr": 30.0,
            "epochs": 6000,
            "init_scheme": "uniform",
            "momentum": 0.0,
        }
        cfg["bfae_reduced_points"] = 12
        cfg["standardize"] = True
    return cfg


def load_config(path) -> dict:
    cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    version = cfg.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported config schema_version: {version}")
    base = default_config(cfg.get("kind", "custom"))
    return _deep_merge(base, cfg)


def _deep_merge(base: dict, override: dict) -> dict:
    out = deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], val)
        else:
            out[key] = deepcopy(val)
    return out


def apply_overrides(cfg: dict, assignments) -> dict:
    """Apply ``dot.path=value`` overrides; values parse as JSON when possible."""
    cfg = deepcopy(cfg)
    for assignment in assignments:
        if "=" not in assignment:
            raise ValueError(f"override must look like key.path=value, got {assignment!r}")
        dotted, raw = assignment.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        *heads, last = dotted.split(".")
        for head in heads:
            node = node.setdefault(head, {})
        node[last] = value
    return cfg


def apply_paper_scale(cfg: dict) -> dict:
    """Full replication count (100); desk runs default to far fewer."""
    cfg = deepcopy(cfg)
    cfg["replications"] = 100
    return cfg


def config_hash(cfg: dict) -> str:
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:12]


def _derived_seeds(master_seed: int, replication: int, n: int = 4):
    return [int(s) for s in np.random.SeedSequence([master_seed, replication]).generate_state(n)]


def _sim_config(cfg: dict, seed: int) -> SimConfig:
    sim = cfg["sim"]
    a, b = sim.get("interval", [0.0, 1.0])
    grid = make_uniform_grid(a, b, sim["m_points"])
    mat = sim.get("matern", {})
    return SimConfig(
        n_samples=sim["n_samples"],
        n_features=sim.get("n_features", 1),
        grid=grid,
        matern=MaternParams(
            sigma2=mat.get("sigma2", 1.0),
            rho=mat.get("rho", 0.5),
            nu=mat.get("nu", 2.5),
        ),
        noise_sd=sim.get("noise_sd", 0.1),
        seed=seed,
    )


def _bfae_config(cfg: dict, n_features: int, m_points: int, latent_points: int, seed: int):
    b = cfg["bfae"]
    interval = tuple(cfg["sim"].get("interval", [0.0, 1.0]))
    return bottleneck_config(
        n_features=n_features,
        n_points=m_points,
        latent_features=b["latent_features"],
        latent_points=latent_points,
        n_layers=b.get("n_layers", 2),
        hidden=b.get("hidden_activation", "tanh"),
        interval=interval,
        lr=b["lr"],
        epochs=b["epochs"],
        init_scheme=b.get("init_scheme", "uniform"),
        momentum=b.get("momentum", 0.0),
        seed=seed,
    )


# --- simulate ---------------------------------------------------------------------


def run_simulate(cfg: dict, out_dir) -> list:
    """Write the configured synthetic dataset; returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sim_seed = _derived_seeds(cfg["master_seed"], 0)[0]
    written = []
    kind = cfg["kind"]
    if kind == "phoneme":
        ds = make_phoneme_standin(
            n_samples=cfg["sim"]["n_samples"],
            m_points=cfg["sim"]["m_points"],
            class_sep=cfg.get("standin_class_sep", 5.0),
            seed=sim_seed,
        )
        written.append(save_csv(ds, out_dir / "phoneme_standin.csv"))
    elif kind == "adelaide":
        temp, demand = make_adelaide_standin(
            n_weeks=cfg["sim"]["n_samples"],
            m_points=cfg["sim"]["m_points"],
            seed=sim_seed,
        )
        written.append(save_csv(temp, out_dir / "adelaide_temperature_standin.csv"))
        written.append(save_csv(demand, out_dir / "adelaide_demand_standin.csv"))
    else:
        sim_cfg = _sim_config(cfg, sim_seed)
        ds = sample_gp(sim_cfg)
        written.append(save_csv(ds, out_dir / f"{kind}_dataset.csv"))
        print(
            f"simulated N={ds.n_samples} R={ds.n_features} M={ds.n_points} "
            f"seed={sim_cfg.seed}"
        )
    return written


# --- train ------------------------------------------------------------------------


def run_train(cfg: dict, out_dir) -> list:
    """Train the configured model on the dataset (file or fresh simulation)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sim_seed, _, bfae_seed, _ = _derived_seeds(cfg["master_seed"], 0)
    dataset_path = cfg["paths"].get("dataset")
    if dataset_path:
        ds = load_csv(dataset_path)
    else:
        ds = sample_gp(_sim_config(cfg, sim_seed))
    model_cfg = _bfae_config(
        cfg, ds.n_features, ds.n_points, cfg["bfae"]["latent_points"], bfae_seed
    )
    model = build(model_cfg)
    history = train(model, ds.values)
    model_path = save_model(model, out_dir / "model.json")
    lines = ["epoch,loss"]
    lines.extend(f"{e},{format(v, '.17g')}" for e, v in enumerate(history.losses))
    history_path = out_dir / "history.csv"
    history_path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    print(f"final loss {history.losses[-1]:.6g} (initial {history.losses[0]:.6g})")
    return [model_path, history_path]


# --- benchmark ---------------------------------------------------------------------


def _benchmark_methods(cfg: dict):
    methods = []
    toggles = cfg["baselines"]
    for name in ("pca", "ae", "fpca"):
        if toggles.get(name, True):
            methods.append(name)
    methods.extend(["bfae", "bfae_reduced"])
    return methods


def _benchmark_replication(args):
    cfg, rep = args
    sim_seed, split_seed, bfae_seed, ae_seed = _derived_seeds(cfg["master_seed"], rep)
    sim_cfg = _sim_config(cfg, sim_seed)
    ds = sample_gp(sim_cfg)
    split = SplitSpec(
        train_fraction=cfg["split"]["train_fraction"],
        seed=split_seed,
        shuffle=cfg["split"].get("shuffle", True),
    )
    train_ds, test_ds = train_test_split(ds, split)
    n, r, m = ds.values.shape
    plain_cfg = _bfae_config(cfg, r, m, cfg["bfae"]["latent_points"], bfae_seed)
    reduced_cfg = _bfae_config(cfg, r, m, cfg["bfae_reduced_points"], bfae_seed)

    rows = []
    figure = None
    ok = True
    for method in _benchmark_methods(cfg):
        reducer = "bfae" if method in ("bfae", "bfae_reduced") else method
        model_cfg = {"bfae": plain_cfg, "bfae_reduced": reduced_cfg}.get(method, plain_cfg)
        m_latent = model_cfg.latent_shape[1] if method.startswith("bfae") else None
        r_latent = model_cfg.latent_shape[0] if method.startswith("bfae") else None
        base = {
            "method": method, "n": n, "m": m, "r": r,
            "m_latent": m_latent, "r_latent": r_latent, "replication": rep,
        }
        try:
            reconstruct = fit_reducer(
                reducer, train_ds.values, ds.grid,
                bfae_config=model_cfg,
                variance_target=cfg["variance_target"],
                ae_lr=cfg["ae"]["lr"], ae_epochs=cfg["ae"]["epochs"],
                seed=ae_seed,
            )
            for split_name, part in (("train", train_ds), ("test", test_ds)):
                rows.append({
                    **base, "split": split_name, "metric": "functional_rmse",
                    "value": functional_rmse(part.values, reconstruct(part.values), ds.grid),
                })
            if rep == 0:
                if figure is None:
                    figure = {"t": ds.grid.points, "truth": test_ds.values[0, 0]}
                figure[method] = reconstruct(test_ds.values[:1])[0, 0]
        except Exception as exc:  # cell failure: flush a marker row, keep going
            ok = False
            rows.append({
                **base, "split": "error", "metric": "failure", "value": float("nan"),
            })
            print(f"replication {rep} method {method} failed: {exc}")
    return rep, rows, figure, ok


def run_benchmark(cfg: dict, out_dir, jobs: int = 1):
    """Replicated simulation benchmark; returns ``(paths, all_cells_ok)``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    reps = int(cfg["replications"])
    if reps < 1:
        raise ValueError("replications must be >= 1")
    tasks = [(cfg, rep) for rep in range(reps)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_benchmark_replication, tasks))
    else:
        results = [_benchmark_replication(task) for task in tasks]
    results.sort(key=lambda item: item[0])

    report = Report(columns=BENCHMARK_COLUMNS)
    figure = None
    ok = True
    for _, rows, fig, rep_ok in results:
        report.extend(rows)
        ok = ok and rep_ok
        if fig is not None:
            figure = fig
    summarize_benchmark(report)

    paths = [
        report.write_csv(out_dir / "report.csv"),
        report.write_json(out_dir / "report.json"),
    ]
    if figure is not None:
        columns = ["t", "truth"] + [m for m in _benchmark_methods(cfg) if m in figure]
        lines = [",".join(columns)]
        for i in range(len(figure["t"])):
            lines.append(",".join(format(float(figure[c][i]), ".17g") for c in columns))
        fig_path = out_dir / "figure_reconstruction.csv"
        fig_path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
        paths.append(fig_path)
    return paths, ok


# --- real data ----------------------------------------------------------------------


def _phoneme_data(cfg: dict):
    paths = cfg["paths"]
    if paths.get("phoneme"):
        return load_csv(paths["phoneme"], expect_m=cfg["sim"]["m_points"])
    if not cfg.get("standin", True):
        raise FileNotFoundError(
            "no phoneme CSV configured and stand-in mode is off; convert the "
            "source data to the documented CSV schema and set paths.phoneme, "
            "or set standin=true"
        )
    seed = _derived_seeds(cfg["master_seed"], 0)[0]
    return make_phoneme_standin(
        n_samples=cfg["sim"]["n_samples"],
        m_points=cfg["sim"]["m_points"],
        class_sep=cfg.get("standin_class_sep", 5.0),
        seed=seed,
    )


def _adelaide_data(cfg: dict):
    paths = cfg["paths"]
    if paths.get("adelaide_temperature") and paths.get("adelaide_demand"):
        temp = load_csv(paths["adelaide_temperature"], expect_m=cfg["sim"]["m_points"])
        demand = load_csv(paths["adelaide_demand"], expect_m=cfg["sim"]["m_points"])
        if temp.n_samples != demand.n_samples:
            raise ValueError("temperature and demand files must pair sample for sample")
        return temp, demand
    if not cfg.get("standin", True):
        raise FileNotFoundError(
            "no Adelaide CSVs configured and stand-in mode is off; convert the "
            "source data to the documented CSV schema and set "
            "paths.adelaide_temperature / paths.adelaide_demand, or set standin=true"
        )
    seed = _derived_seeds(cfg["master_seed"], 0)[0]
    return make_adelaide_standin(
        n_weeks=cfg["sim"]["n_samples"], m_points=cfg["sim"]["m_points"], seed=seed
    )


def run_realdata(cfg: dict, out_dir):
    """Real-data (or stand-in) protocol; returns ``(paths, all_cells_ok)``."""
    kind = cfg["kind"]
    if kind not in ("phoneme", "adelaide"):
        raise ValueError("realdata runs need kind 'phoneme' or 'adelaide'")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _, split_seed, bfae_seed, _ = _derived_seeds(cfg["master_seed"], 0)
    split = SplitSpec(
        train_fraction=cfg["split"]["train_fraction"],
        seed=split_seed,
        shuffle=cfg["split"].get("shuffle", True),
    )

    if kind == "phoneme":
        ds = _phoneme_data(cfg)
        train_in, test_in = train_test_split(ds, split)
        data = PipelineData(train_inputs=train_in, test_inputs=test_in)
        task = "classify"
    else:
        temp, demand = _adelaide_data(cfg)
        order = np.random.default_rng(split.seed).permutation(temp.n_samples)
        n_train = int(round(split.train_fraction * temp.n_samples))
        tr_idx, te_idx = order[:n_train], order[n_train:]
        data = PipelineData(
            train_inputs=temp.subset(tr_idx),
            test_inputs=temp.subset(te_idx),
            train_outputs=demand.subset(tr_idx),
            test_outputs=demand.subset(te_idx),
        )
        task = "regress"

    r, m = data.train_inputs.n_features, data.train_inputs.n_points
    plain_cfg = _bfae_config(cfg, r, m, cfg["bfae"]["latent_points"], bfae_seed)
    reduced_cfg = _bfae_config(cfg, r, m, cfg["bfae_reduced_points"], bfae_seed)
    chash = config_hash(cfg)

    report = Report(columns=PIPELINE_COLUMNS)
    ok = True
    methods = ["none"] + [
        name for name in ("pca", "ae", "fpca") if cfg["baselines"].get(name, True)
    ] + ["bfae", "bfae_reduced"]
    for method in methods:
        reducer = "bfae" if method in ("bfae", "bfae_reduced") else method
        model_cfg = {"bfae": plain_cfg, "bfae_reduced": reduced_cfg}.get(method, plain_cfg)
        pipe_cfg = PipelineConfig(
            bfae=model_cfg,
            ridge=cfg["downstream"].get("ridge"),
            standardize=cfg["standardize"],
            variance_target=cfg["variance_target"],
            ae_lr=cfg["ae"]["lr"],
            ae_epochs=cfg["ae"]["epochs"],
            seed=cfg["master_seed"],
        )
        try:
            for row in evaluate_pipeline(reducer, task, data, pipe_cfg):
                report.add(method=method, dataset=kind, seed=cfg["master_seed"],
                           config_hash=chash, **row)
        except Exception as exc:
            ok = False
            report.add(method=method, dataset=kind, split="error", metric="failure",
                       value=float("nan"), seed=cfg["master_seed"], config_hash=chash)
            print(f"method {method} failed: {exc}")

    paths = [
        report.write_csv(out_dir / "report.csv"),
        report.write_json(out_dir / "report.json"),
    ]
    paths.append(_write_curves_csv(out_dir / "sample_curves.csv", data))
    return paths, ok


def _write_curves_csv(path: Path, data: PipelineData) -> Path:
    """Plot-ready curves for a handful of test samples (figure data)."""
    ds = data.test_inputs
    k = min(3, ds.n_samples)
    columns = ["t"]
    series = [ds.grid.points]
    for i in range(k):
        tag = f"sample{i}"
        if ds.labels is not None:
            tag += f"_{ds.labels[i]}"
        for r, name in enumerate(ds.feature_names):
            columns.append(f"{tag}_{name}")
            series.append(ds.values[i, r])
    if data.test_outputs is not None:
        for i in range(k):
            for r, name in enumerate(data.test_outputs.feature_names):
                columns.append(f"sample{i}_{name}_output")
                series.append(data.test_outputs.values[i, r])
    lines = [",".join(columns)]
    for j in range(len(ds.grid.points)):
        lines.append(",".join(format(float(s[j]), ".17g") for s in series))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path
