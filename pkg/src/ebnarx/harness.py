"""Experiment orchestration: dataset assembly, sweeps and density exports.

An ExperimentSpec pins everything needed to reproduce a result: the data
source (generator settings or a CSV path), the lag window, the model family
and the hyperparameter ranges.  ``run_sweep`` trains one model per
(width, batch size, seed) combination, evaluates MAP-based validation MSE
and mean log likelihood, and reports the best trial; records append to a
newline-delimited JSON file keyed by a hash of the spec.
"""

import hashlib
import json
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import ebm, fcn
from .data import (
    IoSeries,
    WindowConfig,
    load_csv,
    make_windows,
    simulate_ar,
    simulate_arx,
    simulate_chen,
    split_windows,
)
from .ebm import EbNarxModel, NceConfig, TrainConfig, train_ebnarx
from .fcn import FcnModel, fcn_predict, train_fcn
from .inference import (
    AscentConfig,
    default_grid,
    density,
    hdr_intervals,
    map_estimate,
    prediction_to_dict,
)

logger = logging.getLogger(__name__)


def make_series(generator=None, data_path=None):
    """Build an IoSeries from generator settings or a CSV file."""
    if (generator is None) == (data_path is None):
        raise ValueError("specify exactly one of generator settings or a data path")
    if data_path is not None:
        return load_csv(data_path)
    gen = dict(generator)
    name = gen.pop("name", None)
    if name == "ar":
        return simulate_ar(gen["noise_kind"], gen["n_samples"], gen["seed"])
    if name == "arx":
        return simulate_arx(gen["n_samples"], gen["seed"])
    if name == "chen":
        return simulate_chen(gen["n_samples"], gen["sigma_v"], gen["sigma_w"], gen["seed"])
    raise ValueError(f"unknown generator {name!r}")


@dataclass
class ExperimentSpec:
    """Reproducible description of one sweep."""

    window: WindowConfig
    model_kind: str
    generator: dict | None = None
    data_path: str | None = None
    widths: tuple = (50, 100, 200)
    batch_sizes: tuple = (32, 64)
    seeds: tuple = (0, 1, 2, 3)
    split_fraction: float = 0.5
    train: dict = field(default_factory=dict)
    nce: dict = field(default_factory=dict)
    fcn_layers: int = 3
    fcn_activation: str = "relu"
    grid_points: int = 2048
    ascent_iters: int = 50
    levels: tuple = (0.65, 0.95, 0.99)

    def __post_init__(self):
        if self.model_kind not in ("ebm", "fcn"):
            raise ValueError("model kind must be 'ebm' or 'fcn'")
        if not 0.0 < self.split_fraction < 1.0:
            raise ValueError("split fraction must be in (0, 1)")
        if self.n_trials < 1:
            raise ValueError("sweep needs at least one trial")

    @property
    def n_trials(self):
        return len(self.widths) * len(self.batch_sizes) * len(self.seeds)

    def to_dict(self):
        return {
            "window": {"y_lags": self.window.y_lags, "u_lags": self.window.u_lags},
            "model": self.model_kind,
            "generator": self.generator,
            "data_path": self.data_path,
            "widths": list(self.widths),
            "batch_sizes": list(self.batch_sizes),
            "seeds": list(self.seeds),
            "split_fraction": self.split_fraction,
            "train": self.train,
            "nce": self.nce,
            "fcn_layers": self.fcn_layers,
            "fcn_activation": self.fcn_activation,
            "grid_points": self.grid_points,
            "ascent_iters": self.ascent_iters,
            "levels": list(self.levels),
        }

    @classmethod
    def from_dict(cls, doc):
        window = WindowConfig(doc["window"]["y_lags"], doc["window"]["u_lags"])
        kwargs = {}
        for key in ("generator", "data_path", "split_fraction", "train", "nce",
                    "fcn_layers", "fcn_activation", "grid_points", "ascent_iters"):
            if key in doc and doc[key] is not None:
                kwargs[key] = doc[key]
        for key in ("widths", "batch_sizes", "seeds", "levels"):
            if key in doc:
                kwargs[key] = tuple(doc[key])
        return cls(window=window, model_kind=doc["model"], **kwargs)

    def spec_hash(self):
        payload = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


@dataclass
class ResultRecord:
    """Outcome of one sweep trial."""

    spec_hash: str
    model_kind: str
    width: int
    batch_size: int
    seed: int
    mse: float
    log_likelihood: float
    wall_time_s: float
    model_path: str | None = None

    def to_dict(self):
        return {
            "spec_hash": self.spec_hash,
            "model": self.model_kind,
            "width": self.width,
            "batch_size": self.batch_size,
            "seed": self.seed,
            "mse": self.mse,
            "log_likelihood": self.log_likelihood,
            "wall_time_s": self.wall_time_s,
            "model_path": self.model_path,
        }


def evaluate_mse(model, dataset, grid=None, ascent=None):
    """Mean squared error of MAP point predictions, raw units.

    For the baseline the MAP equals the predicted mean; for the energy model
    every row runs the grid-plus-ascent MAP search.
    """
    if len(dataset) == 0:
        raise ValueError("validation set is empty")
    if isinstance(model, FcnModel):
        preds, _ = fcn_predict(model, dataset.x)
    else:
        grid = grid or default_grid(model.standardizer)
        ascent = ascent or AscentConfig()
        preds = np.array([
            map_estimate(model, row, grid, ascent) for row in dataset.x
        ])
    err = dataset.y - preds
    return float((err * err).mean())


def evaluate_log_likelihood(model, dataset, grid=None):
    """Mean log predictive density of the targets, raw units."""
    if isinstance(model, FcnModel):
        return fcn.log_likelihood(model, dataset)
    return ebm.log_likelihood(model, dataset, grid or default_grid(model.standardizer))


def predictive_density(model, x, grid):
    """Normalized density on a grid for either model family."""
    if isinstance(model, FcnModel):
        return fcn.predictive_density(model, x, grid)
    return density(model, x, grid)


def _train_trial(spec, train_ds, width, batch_size, seed):
    tc = TrainConfig(batch_size=batch_size, **spec.train)
    if spec.model_kind == "ebm":
        nce_kwargs = dict(spec.nce)
        nce_kwargs.setdefault("seed", seed)
        model, log = train_ebnarx(train_ds, NceConfig(**nce_kwargs), tc, width=width, seed=seed)
    else:
        model, log = train_fcn(train_ds, tc, width=width, n_layers=spec.fcn_layers,
                               activation=spec.fcn_activation, seed=seed)
    return model, log


def run_sweep(spec, records_path=None, best_model_path=None):
    """Train and evaluate every trial in the spec.

    Individual trial failures are logged and skipped; the sweep fails only if
    every trial fails.  Returns ``(records, best_record)`` with the best trial
    chosen by validation MSE; records are appended to ``records_path`` as
    newline-delimited JSON when given, and the best model is saved to
    ``best_model_path`` when given.
    """
    series = make_series(spec.generator, spec.data_path)
    dataset = make_windows(series, spec.window)
    train_ds, val_ds = split_windows(dataset, spec.split_fraction)

    records = []
    best = None
    best_model = None
    spec_hash = spec.spec_hash()
    for width in spec.widths:
        for batch_size in spec.batch_sizes:
            for seed in spec.seeds:
                start = time.perf_counter()
                try:
                    model, _ = _train_trial(spec, train_ds, width, batch_size, seed)
                    grid = default_grid(model.standardizer, spec.grid_points)
                    ascent = AscentConfig(iters=spec.ascent_iters)
                    mse = evaluate_mse(model, val_ds, grid, ascent)
                    ll = evaluate_log_likelihood(model, val_ds, grid)
                except Exception as err:  # noqa: BLE001 - trial isolation
                    logger.warning(
                        "trial (width=%s, batch=%s, seed=%s) failed: %s",
                        width, batch_size, seed, err,
                    )
                    continue
                record = ResultRecord(
                    spec_hash, spec.model_kind, width, batch_size, seed,
                    mse, ll, time.perf_counter() - start,
                )
                records.append(record)
                if best is None or mse < best.mse:
                    best, best_model = record, model
    if not records:
        raise RuntimeError("all sweep trials failed")
    if best_model_path is not None:
        if spec.model_kind == "ebm":
            ebm.save_model(best_model, best_model_path)
        else:
            fcn.save_model(best_model, best_model_path)
        best.model_path = str(best_model_path)
    if records_path is not None:
        with open(records_path, "a", encoding="utf-8") as fh:
            for record in records:
                fh.write(json.dumps(record.to_dict()) + "\n")
    return records, best


def export_density_sequence(model, dataset, out_prefix, grid=None, ascent=None,
                            levels=(0.65, 0.95, 0.99)):
    """Export per-timestep densities and predictions for plotting elsewhere.

    Writes ``{out_prefix}_density.csv`` in long form (t, y, density) and
    ``{out_prefix}_predictions.json`` with the MAP point and highest-density
    intervals per timestep, where ``t`` indexes dataset rows.  Returns the two
    paths.
    """
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    std = model.standardizer
    grid = grid or default_grid(std)
    ascent = ascent or AscentConfig()
    csv_path = f"{out_prefix}_density.csv"
    json_path = f"{out_prefix}_predictions.json"
    summaries = []
    try:
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write("t,y,density\n")
            for t, row in enumerate(dataset.x):
                dens = predictive_density(model, row, grid)
                if isinstance(model, FcnModel):
                    map_point, _ = fcn_predict(model, row)
                else:
                    map_point = map_estimate(model, row, grid, ascent)
                for y_val, d_val in zip(dens.ys, dens.density):
                    fh.write(f"{t},{float(y_val)!r},{float(d_val)!r}\n")
                summaries.append({
                    "t": t,
                    "map": map_point,
                    "intervals": {
                        f"{level:g}": [[a, b] for a, b in ivals]
                        for level, ivals in hdr_intervals(dens, levels).items()
                    },
                })
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump(summaries, fh, indent=1)
    except OSError as err:
        raise RuntimeError(f"could not write export files at {out_prefix!r}: {err}") from err
    return csv_path, json_path


def load_model(path):
    """Load a saved model of either family, dispatching on its kind tag."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    kind = doc.get("kind")
    if kind == "ebnarx":
        return ebm.model_from_dict(doc)
    if kind == "fcn":
        return fcn.model_from_dict(doc)
    raise ValueError(f"unknown model kind {kind!r} in {path}")
