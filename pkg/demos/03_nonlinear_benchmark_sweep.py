#!/usr/bin/env python3
"""Point-prediction quality on the Chen nonlinear benchmark via a small sweep.

The benchmark recursion is nonlinear in the lagged outputs and driven by both
process and measurement noise.  A sweep trains one model per (width, batch
size, seed) combination and reports the best validation MSE of MAP
predictions, mirroring how best-of-sweep numbers are usually reported.
Records append to chen_records.ndjson for later inspection.
"""

from ebnarx import ExperimentSpec, WindowConfig, run_sweep

spec = ExperimentSpec(
    window=WindowConfig(y_lags=2, u_lags=2),
    model_kind="ebm",
    generator={"name": "chen", "n_samples": 1002, "sigma_v": 0.3,
               "sigma_w": 0.3, "seed": 0},
    widths=(50, 100),
    batch_sizes=(32,),
    seeds=(0, 1),
    split_fraction=0.5,
    train={"max_epochs": 120, "patience": 119},
    nce={"n_noise": 64, "sigmas": [0.1, 0.8]},
)

print(f"running {spec.n_trials} energy-model trials (several minutes)...")
records, best = run_sweep(spec, records_path="chen_records.ndjson")
print(f"\n{'width':>6} {'batch':>6} {'seed':>5} {'val MSE':>9} {'mean ll':>9} {'secs':>6}")
for rec in records:
    print(f"{rec.width:>6} {rec.batch_size:>6} {rec.seed:>5} "
          f"{rec.mse:>9.4f} {rec.log_likelihood:>9.4f} {rec.wall_time_s:>6.0f}")
print(f"\nbest trial: width={best.width}, batch={best.batch_size}, "
      f"seed={best.seed}, MSE={best.mse:.4f}")

# the same spec with model_kind="fcn" sweeps the least-squares baseline;
# with sigma_v = sigma_w = 0.3 the irreducible one-step error alone is
# sigma_v^2 + sigma_w^2 = 0.18, so numbers around 0.3 are strong
