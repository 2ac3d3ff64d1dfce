"""Track several held-out criteria per epoch to pick a reliable stopping signal."""
import time

import numpy as np

from ebnarx.data import WindowConfig, make_windows, simulate_ar, fit_standardizer
from ebnarx.ebm import NceConfig, TrainConfig, build_ebnarx, nce_loss, log_likelihood
from ebnarx.inference import GridSpec, default_grid, density
from ebnarx.mathutil import normal_log_pdf
from ebnarx.nn import adam_step, init_adam

CFG = WindowConfig(1, 0)


def kl_stats(model, val_ds, n=20):
    grid = default_grid(model.standardizer)
    rng = np.random.default_rng(4)
    idx = rng.choice(len(val_ds), size=n, replace=False)
    kls = []
    for i in idx:
        try:
            dens = density(model, val_ds.x[i], grid)
        except Exception:
            return np.nan, np.nan
        true = np.exp(normal_log_pdf(grid.ys, 0.95 * val_ds.x[i, 0], 0.2))
        true /= np.trapezoid(true, grid.ys)
        p = np.clip(dens.density, 1e-300, None)
        q = np.clip(true, 1e-300, None)
        kls.append(float(np.trapezoid(p * np.log(p / q), grid.ys)))
    return float(np.mean(kls)), float(np.max(kls))


def main():
    dataset = make_windows(simulate_ar("gaussian", 1000, seed=100), CFG)
    ext_val = make_windows(simulate_ar("gaussian", 400, seed=200), CFG)
    nce = NceConfig(64, (0.1, 0.8), seed=0)
    tc = TrainConfig(batch_size=64, max_epochs=200, patience=199)

    std = fit_standardizer(dataset)
    n_val = max(1, int(round(len(dataset) * tc.val_fraction)))
    n_train = len(dataset) - n_val
    x_train, y_train = dataset.x[:n_train], dataset.y[:n_train]
    x_val, y_val = dataset.x[n_train:], dataset.y[n_train:]
    val_slice = type(dataset)(x_val, y_val, dataset.t0 + n_train, CFG)

    ss = np.random.SeedSequence(0)
    s_model, s_shuffle = ss.spawn(2)
    model = build_ebnarx(CFG, width=64, seed=s_model, standardizer=std, nce=nce)
    params = model.parameters()
    state = init_adam(params, learning_rate=tc.learning_rate)
    shuffle_rng = np.random.default_rng(s_shuffle)
    noise_ss = np.random.SeedSequence(nce.seed)
    tr_ss, va_ss = noise_ss.spawn(2)
    train_rng = np.random.default_rng(tr_ss)
    big_nce = NceConfig(512, nce.sigmas, nce.seed)

    lo = std.y_min - 3 * std.std_y
    hi = std.y_max + 3 * std.std_y
    ll_grid = GridSpec(lo, hi, 512)

    print("epoch  val64    val512   val_ll    mean_kl  max_kl")
    for epoch in range(tc.max_epochs):
        state.learning_rate = tc.learning_rate * tc.lr_decay**epoch
        order = shuffle_rng.permutation(n_train)
        for start in range(0, n_train, tc.batch_size):
            idx = order[start:start + tc.batch_size]
            _, grads = nce_loss(model, x_train[idx], y_train[idx], nce, train_rng)
            adam_step(params, grads, state)
        if epoch % 10 == 0 or epoch == tc.max_epochs - 1:
            v64, _ = nce_loss(model, x_val, y_val, nce,
                              np.random.default_rng(va_ss), compute_grads=False)
            v512, _ = nce_loss(model, x_val, y_val, big_nce,
                               np.random.default_rng(va_ss), compute_grads=False)
            try:
                vll = log_likelihood(model, val_slice, ll_grid)
            except Exception:
                vll = np.nan
            mk, xk = kl_stats(model, ext_val)
            print(f"{epoch:5d}  {v64:.4f}  {v512:.4f}  {vll: .4f}  {mk:.4f}  {xk:.4f}")


if __name__ == "__main__":
    t0 = time.perf_counter()
    main()
    print(f"total {time.perf_counter()-t0:.0f}s")
