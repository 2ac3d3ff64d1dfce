"""Per-point KL for several configs: which query states fail and by how much."""
import time

import numpy as np

from ebnarx.data import WindowConfig, make_windows, simulate_ar
from ebnarx.ebm import NceConfig, TrainConfig, train_ebnarx
from ebnarx.inference import default_grid, density
from ebnarx.mathutil import normal_log_pdf

CFG = WindowConfig(1, 0)
train_ds = make_windows(simulate_ar("gaussian", 1000, seed=100), CFG)
val_ds = make_windows(simulate_ar("gaussian", 400, seed=200), CFG)
rng = np.random.default_rng(4)
IDX = rng.choice(len(val_ds), size=20, replace=False)


def report(tag, m, width, sigmas, epochs):
    t0 = time.perf_counter()
    model, log = train_ebnarx(
        train_ds, NceConfig(m, sigmas, seed=0),
        TrainConfig(batch_size=64, max_epochs=epochs, patience=epochs - 1),
        width=width, seed=0,
    )
    grid = default_grid(model.standardizer)
    rows = []
    for i in IDX:
        dens = density(model, val_ds.x[i], grid)
        true = np.exp(normal_log_pdf(grid.ys, 0.95 * val_ds.x[i, 0], 0.2))
        true /= np.trapezoid(true, grid.ys)
        p = np.clip(dens.density, 1e-300, None)
        kl = float(np.trapezoid(p * np.log(p / np.clip(true, 1e-300, None)), grid.ys))
        rows.append((abs(val_ds.x[i, 0]), kl))
    rows.sort()
    best_ep = min(log, key=lambda r: r.val_loss).epoch
    n_bad = sum(kl > 0.05 for _, kl in rows)
    print(f"{tag}: wall={time.perf_counter()-t0:.0f}s best_ep={best_ep} "
          f"bad={n_bad}/20 mean={np.mean([k for _, k in rows]):.4f}")
    for absx, kl in rows:
        print(f"   |x|={absx:5.2f} kl={kl:8.4f}{' BAD' if kl > 0.05 else ''}")


if __name__ == "__main__":
    report("A m128 w64 s(0.1,0.8)", 128, 64, (0.1, 0.8), 300)
    report("B m128 w64 s(0.1,0.8,2.0)", 128, 64, (0.1, 0.8, 2.0), 300)
    report("C m128 w100 s(0.1,0.8)", 128, 100, (0.1, 0.8), 300)
    report("D m128 w64 s(0.2,1.0)", 128, 64, (0.2, 1.0), 300)
