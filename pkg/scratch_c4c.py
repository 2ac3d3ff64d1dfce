"""KL trajectory vs epochs for the Gaussian AR case."""
import sys
import time

import numpy as np

from ebnarx.data import WindowConfig, make_windows, simulate_ar
from ebnarx.ebm import NceConfig, TrainConfig, train_ebnarx
from ebnarx.inference import default_grid, density
from ebnarx.mathutil import normal_log_pdf

CFG = WindowConfig(1, 0)


def kl_on_grid(p, q, ys):
    p = np.clip(p, 1e-300, None)
    q = np.clip(q, 1e-300, None)
    return float(np.trapezoid(p * np.log(p / q), ys))


def mean_max_kl(model, val_ds, n=20):
    grid = default_grid(model.standardizer)
    rng = np.random.default_rng(4)
    idx = rng.choice(len(val_ds), size=n, replace=False)
    kls = []
    for i in idx:
        dens = density(model, val_ds.x[i], grid)
        true = np.exp(normal_log_pdf(grid.ys, 0.95 * val_ds.x[i, 0], 0.2))
        true /= np.trapezoid(true, grid.ys)
        kls.append(kl_on_grid(dens.density, true, grid.ys))
    return float(np.mean(kls)), float(np.max(kls))


if __name__ == "__main__":
    m = int(sys.argv[1]) if len(sys.argv) > 1 else 64
    width = int(sys.argv[2]) if len(sys.argv) > 2 else 64
    train_ds = make_windows(simulate_ar("gaussian", 1000, seed=100), CFG)
    val_ds = make_windows(simulate_ar("gaussian", 400, seed=200), CFG)
    for epochs in (40, 80, 160, 240):
        t0 = time.perf_counter()
        nce = NceConfig(m, (0.1, 0.8), seed=0)
        # patience = epochs - 1: no early stop, pure epoch-count comparison
        tc = TrainConfig(batch_size=64, max_epochs=epochs, patience=epochs - 1)
        model, log = train_ebnarx(train_ds, nce, tc, width=width, seed=0)
        mean_kl, max_kl = mean_max_kl(model, val_ds)
        print(f"M={m} width={width} epochs={epochs:3d} wall={time.perf_counter()-t0:5.0f}s "
              f"best_val={min(r.val_loss for r in log):.4f} "
              f"(at ep {min(log, key=lambda r: r.val_loss).epoch}) "
              f"mean_kl={mean_kl:.4f} max_kl={max_kl:.4f}")
