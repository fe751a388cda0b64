"""Field-aware factorization machine: the learning engine being tuned.

The model scores an instance as

    phi = bias + sum_i w_i x_i + sum_{i<j} <v[i, field_j], v[j, field_i]> x_i x_j

and predicts sigmoid(phi). Training minimizes L2-regularized logistic loss
(bias unregularized) by per-instance SGD with AdaGrad coordinate scaling,
compiled with numba. Within one instance the pair updates are applied
sequentially, each pair reading the current vectors, libffm-style. AdaGrad
accumulators start at 1.0.

Datasets are stored CSR-style (row_ptr / fields / feats / values) so the
training loop touches flat arrays only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .space import ConfigSpace, Configuration, ParamSpec

PROB_CLIP = 1e-12


class DatasetError(ValueError):
    """Malformed dataset text or invalid instance."""


class TrainingDiverged(RuntimeError):
    """Training produced non-finite weights or loss."""


class SingleClassError(ValueError):
    """Relative information gain needs both label classes."""


@dataclass(frozen=True)
class FfmInstance:
    label: int
    features: tuple[tuple[int, int, float], ...]  # (field, feature, value)


@dataclass
class Dataset:
    labels: np.ndarray    # int8 (n,)
    row_ptr: np.ndarray   # int64 (n+1,)
    fields: np.ndarray    # int32 (nnz,)
    feats: np.ndarray     # int32 (nnz,)
    values: np.ndarray    # float64 (nnz,)
    n_fields: int
    n_features: int

    def __len__(self) -> int:
        return len(self.labels)

    def instance(self, i: int) -> FfmInstance:
        s, t = self.row_ptr[i], self.row_ptr[i + 1]
        return FfmInstance(
            label=int(self.labels[i]),
            features=tuple(
                (int(self.fields[a]), int(self.feats[a]), float(self.values[a]))
                for a in range(s, t)
            ),
        )

    def __iter__(self):
        return (self.instance(i) for i in range(len(self)))

    @staticmethod
    def from_instances(instances: list[FfmInstance],
                       n_fields: int | None = None,
                       n_features: int | None = None) -> "Dataset":
        if not instances:
            raise DatasetError("dataset must contain at least one instance")
        labels = np.array([inst.label for inst in instances], dtype=np.int8)
        row_ptr = np.zeros(len(instances) + 1, dtype=np.int64)
        fields, feats, values = [], [], []
        for i, inst in enumerate(instances):
            seen = set()
            for fld, ft, val in inst.features:
                if (fld, ft) in seen:
                    raise DatasetError(f"instance {i}: duplicate (field, feature) ({fld}, {ft})")
                seen.add((fld, ft))
                fields.append(fld)
                feats.append(ft)
                values.append(val)
            row_ptr[i + 1] = len(fields)
        fields_arr = np.array(fields, dtype=np.int32)
        feats_arr = np.array(feats, dtype=np.int32)
        max_field = int(fields_arr.max()) if len(fields_arr) else -1
        max_feat = int(feats_arr.max()) if len(feats_arr) else -1
        n_fields = n_fields if n_fields is not None else max_field + 1
        n_features = n_features if n_features is not None else max_feat + 1
        if max_field >= n_fields or max_feat >= n_features:
            raise DatasetError("field or feature index out of declared range")
        return Dataset(labels, row_ptr, fields_arr, feats_arr,
                       np.array(values, dtype=np.float64), n_fields, n_features)

    def to_text(self) -> str:
        lines = []
        for i in range(len(self)):
            s, t = self.row_ptr[i], self.row_ptr[i + 1]
            parts = [str(int(self.labels[i]))]
            parts.extend(
                f"{self.fields[a]}:{self.feats[a]}:{self.values[a]:g}" for a in range(s, t)
            )
            lines.append(" ".join(parts))
        return "\n".join(lines) + "\n"


def parse_dataset(text: str) -> Dataset:
    """Parse libffm-style lines: ``label field:feature:value ...``."""
    instances = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        if tokens[0] not in ("0", "1"):
            raise DatasetError(f"line {lineno}: label must be 0 or 1, got {tokens[0]!r}")
        features = []
        seen = set()
        for tok in tokens[1:]:
            parts = tok.split(":")
            if len(parts) != 3:
                raise DatasetError(f"line {lineno}: malformed entry {tok!r}")
            try:
                fld, ft, val = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError:
                raise DatasetError(f"line {lineno}: malformed entry {tok!r}") from None
            if fld < 0 or ft < 0:
                raise DatasetError(f"line {lineno}: negative index in {tok!r}")
            if (fld, ft) in seen:
                raise DatasetError(f"line {lineno}: duplicate (field, feature) in {tok!r}")
            seen.add((fld, ft))
            features.append((fld, ft, val))
        instances.append(FfmInstance(label=int(tokens[0]), features=tuple(features)))
    if not instances:
        raise DatasetError("dataset is empty")
    return Dataset.from_instances(instances)


@dataclass(frozen=True)
class FfmHyperParams:
    learning_rate: float
    latent_dim: int
    l2_reg: float
    epochs: int

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.latent_dim < 1:
            raise ValueError("latent_dim must be >= 1")
        if self.l2_reg < 0:
            raise ValueError("l2_reg must be >= 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass
class FfmModel:
    bias: float
    linear: np.ndarray  # (n_features,)
    latent: np.ndarray  # (n_features, n_fields, latent_dim)

    @property
    def n_features(self) -> int:
        return self.linear.shape[0]

    @property
    def n_fields(self) -> int:
        return self.latent.shape[1]

    @property
    def latent_dim(self) -> int:
        return self.latent.shape[2]


def _sigmoid(phi: float) -> float:
    if phi >= 0:
        return 1.0 / (1.0 + math.exp(-phi))
    e = math.exp(phi)
    return e / (1.0 + e)


def phi_instance(model: FfmModel, instance: FfmInstance) -> float:
    """Raw model score for one instance."""
    for fld, ft, _ in instance.features:
        if not (0 <= fld < model.n_fields and 0 <= ft < model.n_features):
            raise ValueError(f"index ({fld}, {ft}) out of range for model "
                             f"({model.n_fields} fields, {model.n_features} features)")
    phi = model.bias
    active = instance.features
    for fld, ft, val in active:
        phi += model.linear[ft] * val
    for a in range(len(active)):
        fa, ia, xa = active[a]
        for b in range(a + 1, len(active)):
            fb, ib, xb = active[b]
            phi += float(np.dot(model.latent[ia, fb], model.latent[ib, fa])) * xa * xb
    return float(phi)


def predict_ffm(model: FfmModel, instance: FfmInstance) -> float:
    """Click probability for one instance."""
    return _sigmoid(phi_instance(model, instance))


# ---------------------------------------------------------------------------
# compiled kernels


@njit(cache=True, nogil=True)
def _phi_all(row_ptr, fields, feats, values, bias, w, v, out):
    k = v.shape[2]
    for i in range(row_ptr.shape[0] - 1):
        s = row_ptr[i]
        t = row_ptr[i + 1]
        phi = bias
        for a in range(s, t):
            phi += w[feats[a]] * values[a]
        for a in range(s, t):
            fa = feats[a]
            Fa = fields[a]
            xa = values[a]
            for b in range(a + 1, t):
                dot = 0.0
                for d in range(k):
                    dot += v[fa, fields[b], d] * v[feats[b], Fa, d]
                phi += dot * xa * values[b]
        out[i] = phi


@njit(cache=True, nogil=True)
def _sgd_epochs(labels, row_ptr, fields, feats, values, orders,
                lr, l2, bias_arr, w, v, gb_arr, gw, gv):
    n = labels.shape[0]
    k = v.shape[2]
    last_loss = 0.0
    for e in range(orders.shape[0]):
        loss_sum = 0.0
        for oi in range(n):
            i = orders[e, oi]
            s = row_ptr[i]
            t = row_ptr[i + 1]
            phi = bias_arr[0]
            for a in range(s, t):
                phi += w[feats[a]] * values[a]
            for a in range(s, t):
                fa = feats[a]
                Fa = fields[a]
                xa = values[a]
                for b in range(a + 1, t):
                    dot = 0.0
                    for d in range(k):
                        dot += v[fa, fields[b], d] * v[feats[b], Fa, d]
                    phi += dot * xa * values[b]
            if not np.isfinite(phi):
                return np.nan
            if phi >= 0:
                p = 1.0 / (1.0 + np.exp(-phi))
            else:
                ez = np.exp(phi)
                p = ez / (1.0 + ez)
            y = labels[i]
            pc = p if y == 1 else 1.0 - p
            if pc < PROB_CLIP:
                pc = PROB_CLIP
            loss_sum -= np.log(pc)
            g = p - y

            gb_arr[0] += g * g
            bias_arr[0] -= lr * g / np.sqrt(gb_arr[0])
            for a in range(s, t):
                fa = feats[a]
                grad = g * values[a] + l2 * w[fa]
                gw[fa] += grad * grad
                w[fa] -= lr * grad / np.sqrt(gw[fa])
            for a in range(s, t):
                fa = feats[a]
                Fa = fields[a]
                xa = values[a]
                for b in range(a + 1, t):
                    fb = feats[b]
                    Fb = fields[b]
                    coef = g * xa * values[b]
                    for d in range(k):
                        va = v[fa, Fb, d]
                        vb = v[fb, Fa, d]
                        ga = coef * vb + l2 * va
                        gb = coef * va + l2 * vb
                        gv[fa, Fb, d] += ga * ga
                        v[fa, Fb, d] -= lr * ga / np.sqrt(gv[fa, Fb, d])
                        gv[fb, Fa, d] += gb * gb
                        v[fb, Fa, d] -= lr * gb / np.sqrt(gv[fb, Fa, d])
        last_loss = loss_sum / n
    return last_loss


def train(dataset: Dataset, hp: FfmHyperParams, rng: np.random.Generator,
          init_latent: np.ndarray | None = None) -> FfmModel:
    """Train an FFM on the dataset; deterministic given (dataset, hp, rng).

    Latent weights initialize uniform in [0, 1/sqrt(latent_dim)); bias and
    linear weights start at zero. init_latent overrides the initialization
    (used by tests). Raises TrainingDiverged when the loss leaves the floats.
    """
    k = hp.latent_dim
    n = len(dataset)
    if init_latent is not None:
        if init_latent.shape != (dataset.n_features, dataset.n_fields, k):
            raise ValueError("init_latent has wrong shape")
        v = np.ascontiguousarray(init_latent, dtype=np.float64).copy()
    else:
        v = rng.uniform(0.0, 1.0 / math.sqrt(k),
                        size=(dataset.n_features, dataset.n_fields, k))
    orders = np.empty((hp.epochs, n), dtype=np.int64)
    for e in range(hp.epochs):
        orders[e] = rng.permutation(n)

    bias_arr = np.zeros(1)
    w = np.zeros(dataset.n_features)
    gb_arr = np.ones(1)
    gw = np.ones(dataset.n_features)
    gv = np.ones_like(v)

    last_loss = _sgd_epochs(dataset.labels, dataset.row_ptr, dataset.fields,
                            dataset.feats, dataset.values, orders,
                            hp.learning_rate, hp.l2_reg, bias_arr, w, v, gb_arr, gw, gv)
    if not np.isfinite(last_loss) or not np.isfinite(bias_arr[0]) \
            or not np.all(np.isfinite(w)) or not np.all(np.isfinite(v)):
        raise TrainingDiverged(f"training logloss became non-finite under {hp}")
    return FfmModel(bias=float(bias_arr[0]), linear=w, latent=v)


def predict_proba(model: FfmModel, dataset: Dataset) -> np.ndarray:
    """Predicted probabilities for every instance."""
    if dataset.n_features > model.n_features or dataset.n_fields > model.n_fields:
        raise ValueError("dataset indices exceed model dimensions")
    phi = np.empty(len(dataset))
    _phi_all(dataset.row_ptr, dataset.fields, dataset.feats, dataset.values,
             model.bias, model.linear, model.latent, phi)
    out = np.empty_like(phi)
    pos = phi >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-phi[pos]))
    ez = np.exp(phi[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def log_loss(labels: np.ndarray, probs: np.ndarray) -> float:
    p = np.clip(probs, PROB_CLIP, 1.0 - PROB_CLIP)
    y = np.asarray(labels, dtype=np.float64)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def evaluate(model: FfmModel, dataset: Dataset) -> tuple[float, float]:
    """(logloss, relative information gain) on the dataset.

    RIG = 1 - logloss / H where H is the logloss of the constant predictor
    that always outputs the empirical positive rate.
    """
    probs = predict_proba(model, dataset)
    ll = log_loss(dataset.labels, probs)
    p_bar = float(np.mean(dataset.labels))
    if p_bar in (0.0, 1.0):
        raise SingleClassError("RIG is undefined on a single-class dataset")
    entropy = -(p_bar * math.log(p_bar) + (1.0 - p_bar) * math.log(1.0 - p_bar))
    return ll, 1.0 - ll / entropy


# ---------------------------------------------------------------------------
# full-batch loss and gradient (reference implementation for verification)


def dataset_loss(model: FfmModel, dataset: Dataset, l2: float) -> float:
    """Mean logistic loss plus (l2/2) * (||linear||^2 + ||latent||^2).

    Smooth (no probability clipping), so it is finite-difference friendly.
    """
    phi = np.empty(len(dataset))
    _phi_all(dataset.row_ptr, dataset.fields, dataset.feats, dataset.values,
             model.bias, model.linear, model.latent, phi)
    y = dataset.labels.astype(np.float64)
    loss = np.logaddexp(0.0, phi) - y * phi
    penalty = 0.5 * l2 * (float(np.dot(model.linear, model.linear))
                          + float(np.sum(model.latent * model.latent)))
    return float(np.mean(loss)) + penalty


def dataset_loss_gradients(model: FfmModel, dataset: Dataset, l2: float
                           ) -> tuple[float, np.ndarray, np.ndarray]:
    """Analytic gradient of :func:`dataset_loss` w.r.t. (bias, linear, latent)."""
    probs = predict_proba(model, dataset)
    g = probs - dataset.labels.astype(np.float64)
    n = len(dataset)
    g_bias = float(np.mean(g))
    g_lin = l2 * model.linear.copy()
    g_lat = l2 * model.latent.copy()
    for i in range(n):
        s, t = dataset.row_ptr[i], dataset.row_ptr[i + 1]
        gi = g[i] / n
        for a in range(s, t):
            g_lin[dataset.feats[a]] += gi * dataset.values[a]
        for a in range(s, t):
            fa, Fa, xa = dataset.feats[a], dataset.fields[a], dataset.values[a]
            for b in range(a + 1, t):
                fb, Fb, xb = dataset.feats[b], dataset.fields[b], dataset.values[b]
                coef = gi * xa * xb
                g_lat[fa, Fb] += coef * model.latent[fb, Fa]
                g_lat[fb, Fa] += coef * model.latent[fa, Fb]
    return g_bias, g_lin, g_lat


# ---------------------------------------------------------------------------
# synthetic CTR data


def generate_ctr_data(gen_seed: int, n_train: int, n_valid: int,
                      n_fields: int = 5, features_per_field: int = 20,
                      noise: float = 0.5) -> tuple[Dataset, Dataset, FfmModel]:
    """Synthetic click data from a random ground-truth FFM.

    Every instance activates one feature per field with value 1; labels are
    Bernoulli(sigmoid(phi_truth + noise * eps)). Feature j belongs to field
    j // features_per_field. The ground-truth model (latent_dim 4, standard
    normal weights scaled by 1/sqrt(4)) is returned for oracle checks.
    """
    if n_train < 1 or n_valid < 1:
        raise ValueError("counts must be >= 1")
    if noise < 0:
        raise ValueError("noise must be >= 0")
    rng = np.random.default_rng(np.random.SeedSequence(int(gen_seed) & (2**64 - 1)))
    k = 4
    n_features = n_fields * features_per_field
    scale = 1.0 / math.sqrt(k)
    truth = FfmModel(
        bias=float(rng.standard_normal()) * scale,
        linear=rng.standard_normal(n_features) * scale,
        latent=rng.standard_normal((n_features, n_fields, k)) * scale,
    )

    def make_split(n):
        per_field = rng.integers(0, features_per_field, size=(n, n_fields))
        offsets = np.arange(n_fields) * features_per_field
        feats = (per_field + offsets).astype(np.int32).ravel()
        fields = np.tile(np.arange(n_fields, dtype=np.int32), n)
        row_ptr = np.arange(0, n * n_fields + 1, n_fields, dtype=np.int64)
        values = np.ones(n * n_fields)
        ds = Dataset(np.zeros(n, dtype=np.int8), row_ptr, fields, feats, values,
                     n_fields, n_features)
        phi = np.empty(n)
        _phi_all(ds.row_ptr, ds.fields, ds.feats, ds.values,
                 truth.bias, truth.linear, truth.latent, phi)
        eps = rng.standard_normal(n)
        p = 1.0 / (1.0 + np.exp(-(phi + noise * eps)))
        ds.labels = (rng.random(n) < p).astype(np.int8)
        return ds

    return make_split(n_train), make_split(n_valid), truth


# ---------------------------------------------------------------------------
# objective adapter

FFM_PARAM_NAMES = ("learning_rate", "latent_dim", "l2_reg", "epochs")


def ffm_search_space() -> ConfigSpace:
    """The four engine knobs exposed to the optimizer."""
    return ConfigSpace(params=(
        ParamSpec("learning_rate", "continuous", 1e-3, 1.0, scale="log10"),
        ParamSpec("latent_dim", "integer", 2, 32),
        ParamSpec("l2_reg", "continuous", 1e-6, 1e-1, scale="log10"),
        ParamSpec("epochs", "integer", 1, 10),
    ))


def bind_hyper_params(space: ConfigSpace, config: Configuration) -> FfmHyperParams:
    by_name = {p.name: v for p, v in zip(space.params, config.values)}
    missing = [n for n in FFM_PARAM_NAMES if n not in by_name]
    if missing:
        raise ValueError(f"space is missing FFM parameters: {missing}")
    return FfmHyperParams(
        learning_rate=float(by_name["learning_rate"]),
        latent_dim=int(by_name["latent_dim"]),
        l2_reg=float(by_name["l2_reg"]),
        epochs=int(by_name["epochs"]),
    )


def ffm_objective(train_data: Dataset, valid_data: Dataset, space: ConfigSpace):
    """Objective closure: train on train_data, score -RIG on valid_data.

    Training divergence propagates as TrainingDiverged, which the optimizer
    records as a failed evaluation.
    """

    def objective(config: Configuration, seed: int) -> tuple[float, dict]:
        hp = bind_hyper_params(space, config)
        rng = np.random.default_rng(np.random.SeedSequence(int(seed) & (2**64 - 1)))
        model = train(train_data, hp, rng)
        train_ll = log_loss(train_data.labels, predict_proba(model, train_data))
        valid_ll, valid_rig = evaluate(model, valid_data)
        meta = {"train_logloss": train_ll, "valid_logloss": valid_ll,
                "valid_rig": valid_rig}
        return -valid_rig, meta

    return objective
