"""Energy-based NARX model and its noise-contrastive training procedure.

The model assigns a scalar energy to every (regressor, output) pair through
two networks: a feature net embeds the regressor once, and a predictor net
scores candidate outputs against that embedding.  Exponentiating and
normalizing the energy over a grid of outputs yields the predictive density;
training maximizes a multi-class classification objective that discriminates
the observed output from samples of a known Gaussian-mixture noise
distribution centered on it.

All energies are evaluated in standardized coordinates internally; public
entry points accept raw units and the stored standardizer keeps a trained
model self-contained.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .data import fit_standardizer, Standardizer, WindowConfig
from .mathutil import logsumexp, normal_log_pdf
from .nn import (
    TrainingError,
    fit_minibatch,
    init_adam,
    init_network,
    network_from_dict,
    network_to_dict,
)


@dataclass(frozen=True)
class NceConfig:
    """Noise distribution settings: ``n_noise`` samples per target drawn from
    an equal-weight Gaussian mixture with the given standard deviations
    (standardized output units), centered at the target."""

    n_noise: int = 256
    sigmas: tuple = (0.1, 0.8)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "sigmas", tuple(float(s) for s in self.sigmas))
        if self.n_noise < 1:
            raise ValueError("n_noise must be at least 1")
        if not self.sigmas or any(s <= 0 for s in self.sigmas):
            raise ValueError("sigmas must be positive and non-empty")


@dataclass(frozen=True)
class TrainConfig:
    """Minibatch Adam schedule shared by the energy model and the baseline."""

    batch_size: int = 64
    max_epochs: int = 300
    patience: int = 20
    learning_rate: float = 1e-3
    lr_decay: float = 0.99
    val_fraction: float = 0.1

    def __post_init__(self):
        if min(self.batch_size, self.max_epochs, self.patience) < 1:
            raise ValueError("batch_size, max_epochs and patience must be positive")
        if self.patience >= self.max_epochs:
            raise ValueError("patience must be smaller than max_epochs")
        if not 0.0 < self.lr_decay <= 1.0:
            raise ValueError("lr_decay must be in (0, 1]")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError("val_fraction must be in (0, 1)")


class EbNarxModel:
    """Feature net + predictor net + standardizer over a lag window."""

    def __init__(self, feature_net, predictor_net, standardizer, window_cfg, nce=None):
        if predictor_net.output_dim != 1:
            raise ValueError("predictor net must output a scalar energy")
        if predictor_net.input_dim != feature_net.output_dim + 1:
            raise ValueError(
                f"predictor input dim {predictor_net.input_dim} must equal "
                f"feature dim {feature_net.output_dim} + 1"
            )
        if feature_net.input_dim != window_cfg.dim:
            raise ValueError(
                f"feature net expects {feature_net.input_dim} inputs but the "
                f"window produces {window_cfg.dim}"
            )
        self.feature_net = feature_net
        self.predictor_net = predictor_net
        self.standardizer = standardizer
        self.window_cfg = window_cfg
        self.nce = nce

    @property
    def input_dim(self):
        return self.feature_net.input_dim

    def parameters(self):
        return self.feature_net.parameters() + self.predictor_net.parameters()

    def _check_x(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.input_dim,):
            raise ValueError(f"regressor must have shape ({self.input_dim},), got {x.shape}")
        return x

    def energy(self, x, y):
        """Scalar energy of one raw-unit (regressor, output) pair."""
        x = self._check_x(x)
        if not np.isfinite(y):
            raise ValueError("output value must be finite")
        feat, _ = self.feature_net.forward(self.standardizer.apply_x(x))
        out, _ = self.predictor_net.forward(np.append(feat, self.standardizer.apply_y(y)))
        return float(out[0])

    def energy_grid(self, x, ys):
        """Energies over many candidate outputs for one regressor.

        The feature net runs once; the predictor net is evaluated for every
        candidate, which is what makes grid prediction cheap.
        """
        x = self._check_x(x)
        ys = np.asarray(ys, dtype=float)
        feat, _ = self.feature_net.forward(self.standardizer.apply_x(x))
        pred_in = np.empty((ys.size, feat.size + 1))
        pred_in[:, :-1] = feat
        pred_in[:, -1] = self.standardizer.apply_y(ys)
        out, _ = self.predictor_net.forward(pred_in)
        return out[:, 0]

    def energy_and_ygrad(self, x, y):
        """Energy and its derivative with respect to the raw output value."""
        x = self._check_x(x)
        feat, _ = self.feature_net.forward(self.standardizer.apply_x(x))
        out, cache = self.predictor_net.forward(np.append(feat, self.standardizer.apply_y(y)))
        _, input_grad = self.predictor_net.backward(cache, np.ones(1))
        return float(out[0]), float(input_grad[-1] / self.standardizer.std_y)


def build_ebnarx(window_cfg, width=100, seed=0, standardizer=None, nce=None):
    """Fresh model: 2-layer relu feature net and a 4-layer tanh predictor net
    with residual skips spanning two layers each."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    s_feat, s_pred = ss.spawn(2)
    feature = init_network(
        [window_cfg.dim, width, width], ["relu", "relu"], seed=s_feat
    )
    predictor = init_network(
        [width + 1, width, width, width, 1],
        ["tanh", "tanh", "tanh", "identity"],
        skips=[(0, 2), (1, 3)],
        seed=s_pred,
    )
    if standardizer is None:
        dim = window_cfg.dim
        standardizer = Standardizer(np.zeros(dim), np.ones(dim), 0.0, 1.0, -1.0, 1.0)
    return EbNarxModel(feature, predictor, standardizer, window_cfg, nce)


def mixture_log_pdf(y, center, sigmas):
    """Exact log density of the equal-weight Gaussian mixture noise."""
    sigmas = np.asarray(sigmas, dtype=float)
    per_comp = normal_log_pdf(
        np.asarray(y, dtype=float)[..., None], np.asarray(center, dtype=float)[..., None], sigmas
    )
    return logsumexp(per_comp, axis=-1) - np.log(sigmas.size)


def sample_noise(y_center, cfg, rng):
    """Draw noise outputs around one or many centers.

    Returns ``(samples, log_q)``: for a scalar center both have shape
    ``(n_noise,)``, for a vector of centers ``(len(centers), n_noise)``.
    ``log_q`` is the exact mixture log density at each sample.
    """
    centers = np.atleast_1d(np.asarray(y_center, dtype=float))
    sigmas = np.asarray(cfg.sigmas)
    comp = rng.integers(0, sigmas.size, size=(centers.size, cfg.n_noise))
    z = rng.standard_normal((centers.size, cfg.n_noise))
    samples = centers[:, None] + sigmas[comp] * z
    log_q = mixture_log_pdf(samples, centers[:, None], sigmas)
    if np.isscalar(y_center) or np.ndim(y_center) == 0:
        return samples[0], log_q[0]
    return samples, log_q


def nce_loss_value(energies, log_q):
    """Noise-contrastive loss from precomputed energies and noise log densities.

    Both arguments have shape (batch, 1 + n_noise) with the observed output in
    column 0.  The loss is the mean cross-entropy of picking column 0 among
    the candidates, with logits ``energy - log_q``; it is invariant to adding
    a constant to all energies and bounded below by zero.
    """
    logits = np.asarray(energies, dtype=float) - np.asarray(log_q, dtype=float)
    m = logits.max(axis=1, keepdims=True)
    log_norm = m[:, 0] + np.log(np.exp(logits - m).sum(axis=1))
    return float(-(logits[:, 0] - log_norm).mean())


def nce_loss(model, x_batch, y_batch, cfg, rng, compute_grads=True):
    """Noise-contrastive loss of a raw-unit minibatch, with exact gradients.

    For every target, ``cfg.n_noise`` fresh noise samples are drawn around the
    standardized target.  Gradients are exact for the sampled noise set and
    ordered like ``model.parameters()``.

    Returns ``(loss, grads)``; ``grads`` is None when ``compute_grads`` is
    false (cheap held-out evaluation).
    """
    x_batch = np.atleast_2d(np.asarray(x_batch, dtype=float))
    y_batch = np.atleast_1d(np.asarray(y_batch, dtype=float))
    n = len(y_batch)
    if n == 0:
        raise ValueError("batch must be non-empty")
    if x_batch.shape != (n, model.input_dim):
        raise ValueError(f"x batch must have shape ({n}, {model.input_dim})")

    std = model.standardizer
    ys = std.apply_y(y_batch)
    noise, noise_log_q = sample_noise(ys, cfg, rng)
    candidates = np.concatenate([ys[:, None], noise], axis=1)
    sigmas = np.asarray(cfg.sigmas)
    log_q_center = float(logsumexp(normal_log_pdf(0.0, 0.0, sigmas)) - np.log(sigmas.size))
    log_q = np.concatenate([np.full((n, 1), log_q_center), noise_log_q], axis=1)

    feats, feat_cache = model.feature_net.forward(std.apply_x(x_batch))
    n_cand = cfg.n_noise + 1
    pred_in = np.empty((n * n_cand, feats.shape[1] + 1))
    pred_in[:, :-1] = np.repeat(feats, n_cand, axis=0)
    pred_in[:, -1] = candidates.reshape(-1)
    g_flat, pred_cache = model.predictor_net.forward(pred_in)
    energies = g_flat.reshape(n, n_cand)

    logits = energies - log_q
    finite_rows = np.isfinite(logits).all(axis=1)
    if not finite_rows.all():
        bad = int(np.flatnonzero(~finite_rows)[0])
        raise TrainingError(f"non-finite NCE logits for batch element {bad}")
    m = logits.max(axis=1, keepdims=True)
    exps = np.exp(logits - m)
    norm = exps.sum(axis=1, keepdims=True)
    loss = float(-(logits[:, 0] - m[:, 0] - np.log(norm[:, 0])).mean())
    if not compute_grads:
        return loss, None

    # d loss / d energy = (softmax - onehot_0) / batch
    resid = exps / norm
    resid[:, 0] -= 1.0
    pred_grads, d_in = model.predictor_net.backward(pred_cache, resid.reshape(-1, 1) / n)
    d_feats = d_in[:, :-1].reshape(n, n_cand, feats.shape[1]).sum(axis=1)
    feat_grads, _ = model.feature_net.backward(feat_cache, d_feats)
    return loss, feat_grads + pred_grads


def train_ebnarx(dataset, nce=None, tc=None, width=100, seed=0):
    """Fit an energy-based NARX model on a window dataset.

    A random ``tc.val_fraction`` of the rows (seeded, deterministic) is held
    out for early stopping: training stops once the held-out loss has not
    improved for ``tc.patience`` epochs and the best parameters are restored.
    A random slice is used because neighbouring rows of an autocorrelated
    series are nearly redundant, which would make a chronological tail useless
    for ranking.  Fresh noise is drawn every epoch for the training rows; the
    held-out rows reuse one frozen noise set so the stopping signal is
    comparable across epochs.

    Returns ``(model, log)`` where ``log`` is a list of per-epoch statistics.
    """
    nce = nce or NceConfig()
    tc = tc or TrainConfig()
    if len(dataset) < tc.batch_size:
        raise ValueError(
            f"dataset has {len(dataset)} rows, need at least batch_size={tc.batch_size}"
        )
    std = fit_standardizer(dataset)
    ss = np.random.SeedSequence(seed)
    s_model, s_shuffle, s_split = ss.spawn(3)
    n_val = max(1, int(round(len(dataset) * tc.val_fraction)))
    n_train = len(dataset) - n_val
    perm = np.random.default_rng(s_split).permutation(len(dataset))
    train_idx, val_idx = perm[:n_train], perm[n_train:]
    x_train, y_train = dataset.x[train_idx], dataset.y[train_idx]
    x_val, y_val = dataset.x[val_idx], dataset.y[val_idx]
    model = build_ebnarx(dataset.cfg, width=width, seed=s_model, standardizer=std, nce=nce)
    params = model.parameters()
    state = init_adam(params, learning_rate=tc.learning_rate)

    noise_ss = np.random.SeedSequence(nce.seed)
    train_noise_ss, val_noise_ss = noise_ss.spawn(2)
    train_noise_rng = np.random.default_rng(train_noise_ss)

    def batch_fn(idx):
        return nce_loss(model, x_train[idx], y_train[idx], nce, train_noise_rng)

    def val_fn():
        loss, _ = nce_loss(
            model, x_val, y_val, nce, np.random.default_rng(val_noise_ss), compute_grads=False
        )
        return loss

    log = fit_minibatch(
        params, state, n_train, batch_fn, val_fn,
        batch_size=tc.batch_size, max_epochs=tc.max_epochs,
        patience=tc.patience, lr_decay=tc.lr_decay,
        rng=np.random.default_rng(s_shuffle),
    )
    return model, log


def log_likelihood(model, dataset, grid):
    """Mean log predictive density over a dataset, normalized by quadrature.

    The normalizing integral is evaluated on the raw-unit grid with
    log-sum-exp-stabilized trapezoidal quadrature, so the result is the mean
    log density in raw output units.

    Raises GridTooNarrowError when any row leaves more than 1e-3 density mass
    at a grid boundary.
    """
    from .inference import GridTooNarrowError  # local import avoids a cycle

    ys_grid = grid.ys
    log_w = np.log(np.r_[grid.h / 2.0, np.full(grid.n_points - 2, grid.h), grid.h / 2.0])
    std = model.standardizer
    ys_grid_std = std.apply_y(ys_grid)

    total = 0.0
    chunk = max(1, 131072 // grid.n_points)
    for start in range(0, len(dataset), chunk):
        x_rows = dataset.x[start:start + chunk]
        y_rows = dataset.y[start:start + chunk]
        c = len(y_rows)
        feats, _ = model.feature_net.forward(std.apply_x(x_rows))
        width = feats.shape[1]
        pred_in = np.empty((c * grid.n_points, width + 1))
        pred_in[:, :-1] = np.repeat(feats, grid.n_points, axis=0)
        pred_in[:, -1] = np.tile(ys_grid_std, c)
        g_flat, _ = model.predictor_net.forward(pred_in)
        g = g_flat.reshape(c, grid.n_points)
        log_z = logsumexp(g + log_w, axis=1)

        edge = np.maximum(g[:, 0], g[:, -1]) - log_z + np.log(grid.h)
        if np.any(edge > np.log(1e-3)):
            bad = int(np.flatnonzero(edge > np.log(1e-3))[0])
            raise GridTooNarrowError(
                f"density mass at the grid boundary exceeds 1e-3 for row "
                f"{start + bad}; widen [{grid.lo}, {grid.hi}]"
            )
        target_in = np.empty((c, width + 1))
        target_in[:, :-1] = feats
        target_in[:, -1] = std.apply_y(y_rows)
        g_target, _ = model.predictor_net.forward(target_in)
        total += float((g_target[:, 0] - log_z).sum())
    return total / len(dataset)


def model_to_dict(model):
    doc = {
        "kind": "ebnarx",
        "feature_net": network_to_dict(model.feature_net),
        "predictor_net": network_to_dict(model.predictor_net),
        "standardizer": model.standardizer.to_dict(),
        "window": {"y_lags": model.window_cfg.y_lags, "u_lags": model.window_cfg.u_lags},
    }
    if model.nce is not None:
        doc["nce"] = {
            "n_noise": model.nce.n_noise,
            "sigmas": list(model.nce.sigmas),
            "seed": model.nce.seed,
        }
    return doc


def model_from_dict(doc):
    if doc.get("kind") != "ebnarx":
        raise ValueError(f"expected an ebnarx model document, got kind {doc.get('kind')!r}")
    nce = None
    if "nce" in doc:
        nce = NceConfig(doc["nce"]["n_noise"], tuple(doc["nce"]["sigmas"]), doc["nce"]["seed"])
    return EbNarxModel(
        network_from_dict(doc["feature_net"]),
        network_from_dict(doc["predictor_net"]),
        Standardizer.from_dict(doc["standardizer"]),
        WindowConfig(doc["window"]["y_lags"], doc["window"]["u_lags"]),
        nce,
    )


def save_model(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh)


def load_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
