"""Diagnose criterion 4a/4b failures per query point."""
import sys
import time

import numpy as np

from ebnarx.data import WindowConfig, make_windows, simulate_ar
from ebnarx.ebm import NceConfig, TrainConfig, train_ebnarx
from ebnarx.inference import default_grid, density, hdr_intervals
from ebnarx.mathutil import normal_log_pdf

CFG = WindowConfig(1, 0)


def kl_on_grid(p, q, ys):
    p = np.clip(p, 1e-300, None)
    q = np.clip(q, 1e-300, None)
    return float(np.trapezoid(p * np.log(p / q), ys))


def gaussian_diag(sigmas, m, width, epochs, patience, batch=64, seed=0):
    t0 = time.perf_counter()
    train_ds = make_windows(simulate_ar("gaussian", 1000, seed=100), CFG)
    val_ds = make_windows(simulate_ar("gaussian", 400, seed=200), CFG)
    nce = NceConfig(m, sigmas, seed=seed)
    tc = TrainConfig(batch_size=batch, max_epochs=epochs, patience=patience)
    model, log = train_ebnarx(train_ds, nce, tc, width=width, seed=seed)
    grid = default_grid(model.standardizer)
    rng = np.random.default_rng(4)
    idx = rng.choice(len(val_ds), size=20, replace=False)
    print(f"  wall {time.perf_counter()-t0:.0f}s epochs {len(log)} "
          f"train_y range [{train_ds.y.min():.2f},{train_ds.y.max():.2f}]")
    rows = []
    for i in idx:
        dens = density(model, val_ds.x[i], grid)
        true = np.exp(normal_log_pdf(grid.ys, 0.95 * val_ds.x[i, 0], 0.2))
        true /= np.trapezoid(true, grid.ys)
        rows.append((abs(val_ds.x[i, 0]), kl_on_grid(dens.density, true, grid.ys)))
    rows.sort()
    for absx, kl in rows:
        flag = " <-- BAD" if kl > 0.05 else ""
        print(f"  |x|={absx:5.2f} kl={kl:8.4f}{flag}")


def bimodal_diag(sigmas, m, width, epochs, patience, batch=64, seed=0):
    t0 = time.perf_counter()
    train_ds = make_windows(simulate_ar("bimodal", 1000, seed=100), CFG)
    val_ds = make_windows(simulate_ar("bimodal", 400, seed=200), CFG)
    nce = NceConfig(m, sigmas, seed=seed)
    tc = TrainConfig(batch_size=batch, max_epochs=epochs, patience=patience)
    model, log = train_ebnarx(train_ds, nce, tc, width=width, seed=seed)
    grid = default_grid(model.standardizer)
    rng = np.random.default_rng(4)
    idx = rng.choice(len(val_ds), size=20, replace=False)
    good = 0
    errs = []
    for i in idx:
        dens = density(model, val_ds.x[i], grid)
        ivals = hdr_intervals(dens, [0.65])[0.65]
        center = 0.95 * val_ds.x[i, 0]
        point_errs = []
        for target in (center + 0.4, center - 0.4):
            w = (grid.ys > target - 0.2) & (grid.ys < target + 0.2)
            peak = grid.ys[w][np.argmax(dens.density[w])]
            point_errs.append(abs(peak - target))
        errs.extend(point_errs)
        if len(ivals) == 2 and max(point_errs) <= 0.05:
            good += 1
    errs = np.array(errs)
    print(f"  wall {time.perf_counter()-t0:.0f}s epochs {len(log)} "
          f"good_frac {good/len(idx):.2f} err mean {errs.mean():.3f} "
          f"p80 {np.quantile(errs, 0.8):.3f} max {errs.max():.3f}")


if __name__ == "__main__":
    which = sys.argv[1]
    if which == "g1":
        print("gaussian width64 M64 300ep pat40:")
        gaussian_diag((0.1, 0.8), 64, 64, 300, 40)
    elif which == "g2":
        print("gaussian width100 M96 300ep pat40:")
        gaussian_diag((0.1, 0.8), 96, 100, 300, 40)
    elif which == "b1":
        print("bimodal sharp sigmas (0.05,0.2,0.8) M96 250ep pat30:")
        bimodal_diag((0.05, 0.2, 0.8), 96, 64, 250, 30)
    elif which == "b2":
        print("bimodal default sigmas M64 250ep pat30:")
        bimodal_diag((0.1, 0.8), 64, 64, 250, 30)
