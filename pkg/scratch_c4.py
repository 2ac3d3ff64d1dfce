"""Exploration: criterion 4 configs (AR pedagogical cases)."""
import sys
import time

import numpy as np

from ebnarx.data import WindowConfig, make_windows, simulate_ar
from ebnarx.ebm import NceConfig, TrainConfig, train_ebnarx
from ebnarx.inference import GridSpec, default_grid, density, hdr_intervals
from ebnarx.mathutil import normal_log_pdf

CFG = WindowConfig(1, 0)


def kl_on_grid(p, q, ys):
    p = np.clip(p, 1e-300, None)
    q = np.clip(q, 1e-300, None)
    return float(np.trapezoid(p * np.log(p / q), ys))


def run_case(kind, sigmas, m, width, epochs, batch=64, seed=0):
    t0 = time.perf_counter()
    train_ds = make_windows(simulate_ar(kind, 1000, seed=100), CFG)
    val_ds = make_windows(simulate_ar(kind, 400, seed=200), CFG)
    nce = NceConfig(m, sigmas, seed=seed)
    tc = TrainConfig(batch_size=batch, max_epochs=epochs, patience=20)
    model, log = train_ebnarx(train_ds, nce, tc, width=width, seed=seed)
    wall = time.perf_counter() - t0
    grid = default_grid(model.standardizer)
    rng = np.random.default_rng(4)
    idx = rng.choice(len(val_ds), size=20, replace=False)
    out = {"wall": wall, "epochs": len(log)}

    if kind == "gaussian":
        kls = []
        for i in idx:
            dens = density(model, val_ds.x[i], grid)
            true = np.exp(normal_log_pdf(grid.ys, 0.95 * val_ds.x[i, 0], 0.2))
            true /= np.trapezoid(true, grid.ys)
            kls.append(kl_on_grid(dens.density, true, grid.ys))
        out["kl_max"] = max(kls)
        out["kl_mean"] = float(np.mean(kls))
    elif kind == "bimodal":
        two, mode_errs = 0, []
        for i in idx:
            dens = density(model, val_ds.x[i], grid)
            ivals = hdr_intervals(dens, [0.65])[0.65]
            if len(ivals) == 2:
                two += 1
            center = 0.95 * val_ds.x[i, 0]
            for target in (center + 0.4, center - 0.4):
                w = (grid.ys > target - 0.2) & (grid.ys < target + 0.2)
                peak = grid.ys[w][np.argmax(dens.density[w])]
                mode_errs.append(abs(peak - target))
        out["frac_two"] = two / len(idx)
        out["mode_err_max"] = max(mode_errs)
    else:  # state_dependent
        inner = [i for i in range(len(val_ds)) if abs(val_ds.x[i, 0]) < 0.5][:20]
        outer = [i for i in range(len(val_ds)) if abs(val_ds.x[i, 0]) >= 0.5][:20]
        stds_in = [density(model, val_ds.x[i], grid).std() for i in inner]
        stds_out = [density(model, val_ds.x[i], grid).std() for i in outer]
        out["std_in_mean"] = float(np.mean(stds_in))
        out["std_out_mean"] = float(np.mean(stds_out))
        out["ratio"] = float(np.mean(stds_in) / np.mean(stds_out))
    return out


if __name__ == "__main__":
    which = sys.argv[1] if len(sys.argv) > 1 else "all"
    if which in ("gaussian", "all"):
        print("gaussian", run_case("gaussian", (0.1, 0.8), 64, 64, 150))
    if which in ("bimodal", "all"):
        print("bimodal A", run_case("bimodal", (0.1, 0.8), 64, 64, 150))
    if which in ("state", "all"):
        print("state A", run_case("state_dependent", (0.1, 0.8), 64, 64, 150))
        print("state B", run_case("state_dependent", (0.05, 0.15, 0.8), 96, 64, 150))
