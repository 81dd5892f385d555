"""Desk-scale stereo localization experiment.

The task: two randomized cameras observe a single point in a workspace box;
the model sees only the two projected pixel coordinates (normalized to
[0,1]^2) plus, depending on the variant, a camera-geometry conditioning
payload, and must regress the 3D point. With fully randomized cameras and no
background cues, pixels alone cannot localize the point; the conditioning
payload is the only source of camera geometry. A closed-form triangulation
of the two per-pixel rays solves the task exactly, so the dataset is
provably information-complete for the conditioned variants.

Variants:
  none   -- pixels only.
  token  -- pixels plus both flattened 3x4 extrinsic matrices (24 numbers)
            linearly projected to a single conditioning vector.
  early  -- pixels plus the two observed-pixel Plucker rays appended to the
            input.
  late   -- the same rays routed through a separate small encoder whose
            latent is concatenated with the pixel features.

Model and training are deliberately tiny: a tanh MLP trained with mini-batch
gradient descent with momentum, all in float64 with hand-written backprop so
gradients can be verified against central finite differences. Everything is
bit-deterministic for a fixed seed; per-stage RNGs are derived by spawning a
numpy SeedSequence seeded with the run seed (children 0, 1, 2 = train data,
validation data, model init + batching).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteLoss, RejectionOverflow
from .geometry import Intrinsics, PluckerRay, pixel_ray, project, triangulate
from .schedule import PoseSamplerConfig, sample_lookat_pose

VARIANTS = ("none", "token", "early", "late")


@dataclass(frozen=True)
class ToyConfig:
    """Task, model, and optimizer settings; defaults run in minutes on a CPU."""

    box_side: float = 0.5
    image_width: int = 256
    image_height: int = 256
    focal: float = 180.0
    sampler: PoseSamplerConfig = field(default_factory=PoseSamplerConfig)
    train_samples: int = 8192
    val_samples: int = 2048
    hidden: tuple[int, ...] = (64, 64, 64)
    ray_branch_hidden: tuple[int, ...] = (32, 32)
    ray_latent: int = 16
    token_dim: int = 16
    learning_rate: float = 1e-2
    momentum: float = 0.9
    epochs: int = 200
    batch_size: int = 128
    max_resamples: int = 10**6

    @property
    def intrinsics(self) -> Intrinsics:
        return Intrinsics(
            fx=self.focal,
            fy=self.focal,
            cx=self.image_width / 2.0,
            cy=self.image_height / 2.0,
            width=self.image_width,
            height=self.image_height,
        )


@dataclass(frozen=True, eq=False)
class ToyDataset:
    """Per-sample arrays; conditioning payloads are selected by variant.

    pixels: (N,4) normalized (u1,v1,u2,v2); rays: (N,12) two Plucker rays;
    extrinsics: (N,24) two flattened 3x4 [R|t]; labels: (N,3) target points.
    """

    pixels: np.ndarray
    rays: np.ndarray
    extrinsics: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return self.labels.shape[0]


def make_dataset(rng: np.random.Generator, cfg: ToyConfig, count: int) -> ToyDataset:
    """Generate samples by rejection: the point must project inside both images.

    Raises RejectionOverflow when the resample budget is exhausted, which
    indicates an inconsistent box / camera configuration.
    """
    intr = cfg.intrinsics
    half = cfg.box_side / 2.0
    pixels = np.empty((count, 4))
    rays = np.empty((count, 12))
    extrinsics = np.empty((count, 24))
    labels = np.empty((count, 3))
    resamples = 0
    i = 0
    while i < count:
        if resamples > cfg.max_resamples:
            raise RejectionOverflow(
                f"exceeded {cfg.max_resamples} resamples after {i} accepted samples; "
                "workspace box and camera ranges are inconsistent"
            )
        p = rng.uniform(-half, half, size=3)
        pose1 = sample_lookat_pose(rng, cfg.sampler)
        pose2 = sample_lookat_pose(rng, cfg.sampler)
        try:
            uv1 = project(intr, pose1, p)
            uv2 = project(intr, pose2, p)
        except ValueError:
            resamples += 1
            continue
        if not (
            0 <= uv1[0] < intr.width
            and 0 <= uv1[1] < intr.height
            and 0 <= uv2[0] < intr.width
            and 0 <= uv2[1] < intr.height
        ):
            resamples += 1
            continue
        r1 = pixel_ray(intr, pose1, uv1[0], uv1[1])
        r2 = pixel_ray(intr, pose2, uv2[0], uv2[1])
        pixels[i] = [
            uv1[0] / intr.width,
            uv1[1] / intr.height,
            uv2[0] / intr.width,
            uv2[1] / intr.height,
        ]
        rays[i] = np.concatenate([r1.as_array(), r2.as_array()])
        extrinsics[i] = np.concatenate(
            [
                np.hstack([pose1.rotation, pose1.translation[:, None]]).reshape(-1),
                np.hstack([pose2.rotation, pose2.translation[:, None]]).reshape(-1),
            ]
        )
        labels[i] = p
        i += 1
    return ToyDataset(pixels=pixels, rays=rays, extrinsics=extrinsics, labels=labels)


# ---------------------------------------------------------------------------
# model
# ---------------------------------------------------------------------------

class Mlp:
    """Plain tanh MLP with a linear output layer and explicit backprop."""

    def __init__(self, sizes, rng: np.random.Generator | None = None, zero_init=False):
        self.sizes = tuple(sizes)
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            if zero_init or rng is None:
                W = np.zeros((fan_in, fan_out))
            else:
                W = rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_in, fan_out))
            self.weights.append(W)
            self.biases.append(np.zeros(fan_out))

    def forward(self, x: np.ndarray):
        activations = [x]
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = activations[-1] @ W + b
            if k < len(self.weights) - 1:
                z = np.tanh(z)
            activations.append(z)
        return activations[-1], activations

    def backward(self, activations, dout):
        """Returns (weight grads, bias grads, gradient w.r.t. the input)."""
        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.biases)
        delta = dout
        for k in reversed(range(len(self.weights))):
            if k < len(self.weights) - 1:
                delta = delta * (1.0 - activations[k + 1] ** 2)  # tanh'
            grads_w[k] = activations[k].T @ delta
            grads_b[k] = delta.sum(axis=0)
            delta = delta @ self.weights[k].T
        return grads_w, grads_b, delta


class ToyModel:
    """Variant-specific regression model over pixel + conditioning inputs."""

    def __init__(self, variant: str, cfg: ToyConfig, rng: np.random.Generator | None = None,
                 zero_init: bool = False):
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}, expected one of {VARIANTS}")
        self.variant = variant
        self.cfg = cfg
        trunk_in = 4
        self.token_w = None
        self.token_b = None
        self.branch = None
        if variant == "token":
            if zero_init or rng is None:
                self.token_w = np.zeros((24, cfg.token_dim))
            else:
                self.token_w = rng.normal(0.0, 1.0 / np.sqrt(24), size=(24, cfg.token_dim))
            self.token_b = np.zeros(cfg.token_dim)
            trunk_in += cfg.token_dim
        elif variant == "early":
            trunk_in += 12
        elif variant == "late":
            self.branch = Mlp(
                (12, *cfg.ray_branch_hidden, cfg.ray_latent), rng=rng, zero_init=zero_init
            )
            trunk_in += cfg.ray_latent
        self.trunk = Mlp((trunk_in, *cfg.hidden, 3), rng=rng, zero_init=zero_init)

    # -- parameter access (stable ordering, used by the optimizer and the
    #    finite-difference gradient check) --

    def parameters(self):
        params = []
        if self.token_w is not None:
            params += [("token_w", self.token_w), ("token_b", self.token_b)]
        if self.branch is not None:
            for k in range(len(self.branch.weights)):
                params += [
                    (f"branch_w{k}", self.branch.weights[k]),
                    (f"branch_b{k}", self.branch.biases[k]),
                ]
        for k in range(len(self.trunk.weights)):
            params += [(f"trunk_w{k}", self.trunk.weights[k]), (f"trunk_b{k}", self.trunk.biases[k])]
        return params

    def _inputs(self, pixels, rays, extrinsics):
        if self.variant == "none":
            return pixels, None
        if self.variant == "early":
            return np.concatenate([pixels, rays], axis=1), None
        if self.variant == "token":
            token = extrinsics @ self.token_w + self.token_b
            return np.concatenate([pixels, token], axis=1), None
        latent, branch_acts = self.branch.forward(rays)
        return np.concatenate([pixels, latent], axis=1), branch_acts

    def predict(self, ds: ToyDataset) -> np.ndarray:
        x, _ = self._inputs(ds.pixels, ds.rays, ds.extrinsics)
        out, _ = self.trunk.forward(x)
        return out

    def loss_and_grads(self, pixels, rays, extrinsics, labels):
        """Mean-squared-error loss and gradients for every parameter.

        Gradient ordering matches parameters().
        """
        x, branch_acts = self._inputs(pixels, rays, extrinsics)
        out, trunk_acts = self.trunk.forward(x)
        err = out - labels
        loss = float(np.mean(err**2))
        dout = 2.0 * err / err.size

        tw, tb, dx = self.trunk.backward(trunk_acts, dout)
        grads = []
        if self.variant == "token":
            dtoken = dx[:, 4:]
            grads += [extrinsics.T @ dtoken, dtoken.sum(axis=0)]
        elif self.variant == "late":
            dlatent = dx[:, 4:]
            bw, bb, _ = self.branch.backward(branch_acts, dlatent)
            for gw, gb in zip(bw, bb):
                grads += [gw, gb]
        for gw, gb in zip(tw, tb):
            grads += [gw, gb]
        return loss, grads


# ---------------------------------------------------------------------------
# training and evaluation
# ---------------------------------------------------------------------------

def train(
    model: ToyModel,
    train_ds: ToyDataset,
    val_ds: ToyDataset,
    rng: np.random.Generator,
    cfg: ToyConfig | None = None,
):
    """Mini-batch gradient descent with momentum; returns (model, loss curve).

    The curve is a list of {epoch, train_loss, val_loss} dicts. Aborts with
    NonFiniteLoss if the loss diverges.
    """
    cfg = cfg or model.cfg
    params = [p for _, p in model.parameters()]
    velocity = [np.zeros_like(p) for p in params]
    n = len(train_ds)
    batches = n // cfg.batch_size
    curve = []
    for epoch in range(cfg.epochs):
        perm = rng.permutation(n)
        epoch_loss = 0.0
        for b in range(batches):
            idx = perm[b * cfg.batch_size : (b + 1) * cfg.batch_size]
            loss, grads = model.loss_and_grads(
                train_ds.pixels[idx], train_ds.rays[idx],
                train_ds.extrinsics[idx], train_ds.labels[idx],
            )
            if not np.isfinite(loss):
                raise NonFiniteLoss(
                    f"loss became {loss} at epoch {epoch}, batch {b} "
                    f"(variant {model.variant}, lr {cfg.learning_rate})"
                )
            epoch_loss += loss
            for p, v, g in zip(params, velocity, grads):
                v *= cfg.momentum
                v -= cfg.learning_rate * g
                p += v
        val_pred = model.predict(val_ds)
        val_loss = float(np.mean((val_pred - val_ds.labels) ** 2))
        curve.append(
            {"epoch": epoch, "train_loss": epoch_loss / max(batches, 1), "val_loss": val_loss}
        )
    return model, curve


def evaluate(model: ToyModel, ds: ToyDataset) -> dict:
    """RMSE report over a dataset; pure, no state changes."""
    pred = model.predict(ds)
    err = pred - ds.labels
    return {
        "variant": model.variant,
        "rmse": float(np.sqrt(np.mean(err**2) * 3)),  # meters, 3D distance RMSE
        "rmse_per_axis": [float(x) for x in np.sqrt(np.mean(err**2, axis=0))],
        "count": len(ds),
    }


def triangulation_oracle_rmse(ds: ToyDataset) -> float:
    """Exact-geometry baseline: triangulate the two conditioning rays."""
    errs = np.empty(len(ds))
    for i in range(len(ds)):
        r1 = PluckerRay(direction=ds.rays[i, 0:3], moment=ds.rays[i, 3:6])
        r2 = PluckerRay(direction=ds.rays[i, 6:9], moment=ds.rays[i, 9:12])
        midpoint, _ = triangulate(r1, r2)
        errs[i] = np.sum((midpoint - ds.labels[i]) ** 2)
    return float(np.sqrt(np.mean(errs)))


def mean_predictor_rmse(train_ds: ToyDataset, val_ds: ToyDataset) -> float:
    """Baseline that always predicts the training-label mean."""
    mean = train_ds.labels.mean(axis=0)
    return float(np.sqrt(np.mean(np.sum((val_ds.labels - mean) ** 2, axis=1))))


def uniform_box_rmse(cfg: ToyConfig) -> float:
    """Closed-form RMSE of the box-center predictor under uniform labels:
    sqrt(3 * side^2 / 12)."""
    return float(np.sqrt(3.0 * cfg.box_side**2 / 12.0))


def derive_rngs(seed: int):
    """Documented seed-splitting rule: SeedSequence(seed).spawn(3) yields the
    train-data, validation-data, and model/batching generators in order."""
    children = np.random.SeedSequence(seed).spawn(3)
    return tuple(np.random.default_rng(c) for c in children)


def toy_run(variant: str, seed: int, cfg: ToyConfig | None = None) -> dict:
    """Full experiment for one (variant, seed): data, training, evaluation.

    Deterministic for fixed arguments. Returns a JSON-serializable report.
    """
    cfg = cfg or ToyConfig()
    train_rng, val_rng, model_rng = derive_rngs(seed)
    train_ds = make_dataset(train_rng, cfg, cfg.train_samples)
    val_ds = make_dataset(val_rng, cfg, cfg.val_samples)
    model = ToyModel(variant, cfg, rng=model_rng)
    model, curve = train(model, train_ds, val_ds, model_rng, cfg)
    report = evaluate(model, val_ds)
    report.update(
        {
            "seed": seed,
            "oracle_rmse": triangulation_oracle_rmse(val_ds),
            "mean_predictor_rmse": mean_predictor_rmse(train_ds, val_ds),
            "uniform_box_rmse": uniform_box_rmse(cfg),
            "loss_curve": curve,
        }
    )
    return report


def gradient_check(
    model: ToyModel,
    ds: ToyDataset,
    rng: np.random.Generator,
    samples_per_param: int = 10,
    step: float = 1e-5,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Samples ``samples_per_param`` coordinates from every parameter array.
    """
    batch = (ds.pixels[:64], ds.rays[:64], ds.extrinsics[:64], ds.labels[:64])
    _, grads = model.loss_and_grads(*batch)
    worst = 0.0
    for (_, param), grad in zip(model.parameters(), grads):
        flat_p = param.reshape(-1)
        flat_g = grad.reshape(-1)
        k = min(samples_per_param, flat_p.size)
        for idx in rng.choice(flat_p.size, size=k, replace=False):
            orig = flat_p[idx]
            flat_p[idx] = orig + step
            lp, _ = model.loss_and_grads(*batch)
            flat_p[idx] = orig - step
            lm, _ = model.loss_and_grads(*batch)
            flat_p[idx] = orig
            numeric = (lp - lm) / (2.0 * step)
            denom = max(abs(numeric) + abs(flat_g[idx]), 1e-8)
            worst = max(worst, abs(numeric - flat_g[idx]) / denom)
    return worst
