"""Variant-dispatching training loop: Adam, plateau schedule, early stopping,
and best-validation-epoch restoration."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, asdict

import numpy as np

from . import autodiff as ad
from .autodiff import Adam, PlateauSchedule
from .data import Dataset
from .errors import ConfigurationError, TrainingDivergedError
from .labelspace import LabelSpace
from .losses import bce_sum, triplet_batch_loss
from .model import (
    CentroidBank,
    EmbeddingNet,
    NetConfig,
    init_params,
    load_params,
    save_params,
    score_blocks,
)
from .sampling import TripletSampler, batch_iterator

log = logging.getLogger(__name__)

FAMILIES = ("triplet", "proxy", "classification")


@dataclass
class VariantConfig:
    """One row of the benchmark: learning family plus structural flags.

    Only the eight combinations benchmarked by the framework are legal:
    triplet is always normalized (with optional disentanglement and, on top
    of that, track regularization), proxy is always normalized (optional
    disentanglement), and classification may drop normalization but only
    disentangles when normalized.
    """

    family: str
    normalization: bool = True
    disentanglement: bool = False
    track_reg: bool = False
    margin: float = 0.1
    lr: float = 0.005
    batch_size: int = 64
    max_epochs: int = 300
    seed: int = 0
    track_reg_weight: float = 1.0
    hidden: tuple[int, ...] = (128, 128)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown family: {self.family!r}")
        if self.track_reg and not (
            self.family == "triplet" and self.disentanglement
        ):
            raise ConfigurationError(
                "track regularization requires the disentangled triplet family"
            )
        if self.family in ("triplet", "proxy") and not self.normalization:
            raise ConfigurationError(
                f"{self.family} models are always normalized"
            )
        if (
            self.family == "classification"
            and self.disentanglement
            and not self.normalization
        ):
            raise ConfigurationError(
                "disentangled classification requires normalization"
            )
        if self.margin < 0 or self.lr <= 0 or self.batch_size < 1:
            raise ConfigurationError("bad margin / lr / batch size")
        if self.max_epochs < 0:
            raise ConfigurationError("max_epochs must be >= 0")
        self.hidden = tuple(self.hidden)

    @property
    def name(self) -> str:
        parts = [self.family]
        if self.normalization:
            parts.append("norm")
        if self.disentanglement:
            parts.append("disent")
        if self.track_reg:
            parts.append("trackreg")
        return "+".join(parts)

    def score_variant(self) -> str | None:
        """The model-module score variant this config trains with."""
        if self.family == "triplet":
            return None
        if self.family == "proxy":
            return "proxy-disentangled" if self.disentanglement else "proxy"
        if self.disentanglement:
            return "classification-disentangled"
        return (
            "classification-normalized"
            if self.normalization
            else "classification-plain"
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "VariantConfig":
        d = dict(d)
        if "hidden" in d:
            d["hidden"] = tuple(d["hidden"])
        return cls(**d)


def paper_variants(**overrides) -> list[VariantConfig]:
    """The eight benchmarked variants, in report order."""
    rows = [
        dict(family="triplet", normalization=True),
        dict(family="triplet", normalization=True, disentanglement=True),
        dict(
            family="triplet",
            normalization=True,
            disentanglement=True,
            track_reg=True,
        ),
        dict(family="proxy", normalization=True),
        dict(family="proxy", normalization=True, disentanglement=True),
        dict(family="classification", normalization=False),
        dict(family="classification", normalization=True),
        dict(family="classification", normalization=True, disentanglement=True),
    ]
    return [VariantConfig(**row, **overrides) for row in rows]


@dataclass
class TrainedModel:
    net: EmbeddingNet
    bank: CentroidBank | None
    variant: VariantConfig
    space: LabelSpace


@dataclass
class TrainResult:
    model: TrainedModel
    seconds: float
    epochs: int
    curves: list  # (epoch, train_loss, valid_loss, lr)
    best_valid_loss: float


def build_model(
    variant: VariantConfig, space: LabelSpace, input_dim: int
) -> TrainedModel:
    head = (
        "subdense"
        if variant.family == "classification" and variant.disentanglement
        else "dense"
    )
    net = EmbeddingNet(
        NetConfig(
            input_dim=input_dim,
            embedding_dim=space.embedding_dim,
            hidden=variant.hidden,
            head=head,
            normalize_output=variant.normalization,
        ),
        space,
    )
    bank = None if variant.family == "triplet" else CentroidBank(space)
    init_params(net, bank, variant.seed)
    return TrainedModel(net, bank, variant, space)


def _all_params(model: TrainedModel) -> dict[str, ad.Tensor]:
    params = dict(model.net.params)
    if model.bank is not None:
        params["C"] = model.bank.weights
    return params


def _np_pre_embed(net: EmbeddingNet, X: np.ndarray) -> np.ndarray:
    return net._np_pre_embedding(np.asarray(X, dtype=np.float64))


def _np_masked_triplet_losses(E, triplets, masks, margin) -> np.ndarray:
    ea = E[[t.anchor for t in triplets]]
    ep = E[[t.positive for t in triplets]]
    en = E[[t.negative for t in triplets]]
    if masks is not None:
        ea, ep, en = ea * masks, ep * masks, en * masks

    def ncos(a, b):
        na = np.maximum(np.linalg.norm(a, axis=1), 1e-12)
        nb = np.maximum(np.linalg.norm(b, axis=1), 1e-12)
        return (a * b).sum(axis=1) / (na * nb)

    return np.maximum(0.0, ncos(ea, en) - ncos(ea, ep) + margin)


def _fixed_validation_triplets(
    variant: VariantConfig, valid_ds: Dataset
) -> tuple[list, list | None]:
    """One tag triplet per validation sample, same seed every epoch so the
    validation loss is comparable across epochs."""
    sampler = TripletSampler(valid_ds)
    rng = np.random.default_rng(np.random.SeedSequence([variant.seed, 101]))
    tags = [sampler.sample_tag_triplet(rng) for _ in range(len(valid_ds))]
    tracks = None
    if variant.track_reg:
        tracks = [sampler.sample_track_triplet(rng) for _ in range(len(valid_ds))]
    return tags, tracks


def validation_loss(
    model: TrainedModel,
    valid_ds: Dataset,
    val_triplets=None,
    val_track_triplets=None,
) -> float:
    """Mean family loss over the validation data (deterministic per model)."""
    if len(valid_ds) == 0:
        raise ConfigurationError("validation split is empty")
    variant = model.variant
    if variant.family == "triplet":
        if val_triplets is None:
            val_triplets, val_track_triplets = _fixed_validation_triplets(
                variant, valid_ds
            )
        E = _np_pre_embed(model.net, valid_ds.features)
        masks = None
        if variant.disentanglement:
            masks = np.stack(
                [model.space.mask(t.notion).vector for t in val_triplets]
            )
        loss = _np_masked_triplet_losses(
            E, val_triplets, masks, variant.margin
        ).mean()
        if variant.track_reg:
            loss += (
                variant.track_reg_weight
                * _np_masked_triplet_losses(
                    E, val_track_triplets, None, variant.margin
                ).mean()
            )
        return float(loss)
    # BCE families: mean per-sample loss over the whole split
    blocks = score_blocks(
        model.net, model.bank, valid_ds.features, variant.score_variant()
    )
    total = 0.0
    for tag_idx, block in blocks:
        total += bce_sum(block, valid_ds.labels[:, tag_idx]).item()
    return total / len(valid_ds)


def train(
    variant: VariantConfig,
    space: LabelSpace,
    train_ds: Dataset,
    valid_ds: Dataset,
) -> TrainResult:
    """Run the training loop and return the best-validation-epoch model."""
    if len(train_ds) == 0:
        raise ConfigurationError("training split is empty")
    model = build_model(variant, space, train_ds.feature_dim)
    if variant.max_epochs == 0:
        return TrainResult(model, 0.0, 0, [], math.inf)

    params = _all_params(model)
    adam = Adam(params, lr=variant.lr)
    sched = PlateauSchedule(lr=variant.lr)
    is_triplet = variant.family == "triplet"
    sampler = TripletSampler(train_ds) if is_triplet else None
    val_triplets = val_tracks = None
    if is_triplet:
        val_triplets, val_tracks = _fixed_validation_triplets(variant, valid_ds)
    mask_by_notion = {
        n.name: space.mask(n.name).vector for n in space.notions
    }

    best = math.inf
    best_snapshot = {k: p.values.copy() for k, p in params.items()}
    curves = []
    epochs_run = 0
    t0 = time.perf_counter()
    for epoch in range(variant.max_epochs):
        rng = np.random.default_rng(
            np.random.SeedSequence([variant.seed, 3, epoch])
        )
        batch_losses = []
        if is_triplet:
            it = batch_iterator(
                train_ds,
                variant.batch_size,
                "triplet",
                rng,
                sampler=sampler,
                track_reg=variant.track_reg,
            )
            for tag_batch, track_batch in it:
                X = train_ds.features
                EA = model.net.full_embedding(X[[t.anchor for t in tag_batch]])
                EP = model.net.full_embedding(X[[t.positive for t in tag_batch]])
                EN = model.net.full_embedding(X[[t.negative for t in tag_batch]])
                masks = None
                if variant.disentanglement:
                    masks = np.stack(
                        [mask_by_notion[t.notion] for t in tag_batch]
                    )
                loss = triplet_batch_loss(EA, EP, EN, variant.margin, masks)
                if track_batch is not None:
                    TA = model.net.full_embedding(
                        X[[t.anchor for t in track_batch]]
                    )
                    TP = model.net.full_embedding(
                        X[[t.positive for t in track_batch]]
                    )
                    TN = model.net.full_embedding(
                        X[[t.negative for t in track_batch]]
                    )
                    loss = loss + variant.track_reg_weight * triplet_batch_loss(
                        TA, TP, TN, variant.margin
                    )
                _step(adam, params, loss)
                batch_losses.append(loss.item())
        else:
            sv = variant.score_variant()
            for X, Y in batch_iterator(train_ds, variant.batch_size, "sample", rng):
                blocks = score_blocks(model.net, model.bank, X, sv)
                loss = None
                for tag_idx, block in blocks:
                    term = bce_sum(block, Y[:, tag_idx])
                    loss = term if loss is None else loss + term
                loss = loss * (1.0 / len(X))
                _step(adam, params, loss)
                batch_losses.append(loss.item())
        train_loss = float(np.mean(batch_losses))
        if not math.isfinite(train_loss):
            raise TrainingDivergedError(
                f"training loss diverged at epoch {epoch}", epoch=epoch
            )
        val_loss = validation_loss(model, valid_ds, val_triplets, val_tracks)
        curves.append((epoch, train_loss, val_loss, adam.lr))
        epochs_run = epoch + 1
        if val_loss < best:
            best = val_loss
            best_snapshot = {k: p.values.copy() for k, p in params.items()}
        try:
            new_lr, stop = sched.update(val_loss)
        except TrainingDivergedError as exc:
            raise TrainingDivergedError(
                f"validation loss diverged at epoch {epoch}", epoch=epoch
            ) from exc
        adam.lr = new_lr
        if stop:
            log.info("%s: early stop at epoch %d", variant.name, epoch)
            break
    seconds = time.perf_counter() - t0

    for k, p in params.items():
        p.values = best_snapshot[k]
    return TrainResult(model, seconds, epochs_run, curves, best)


def _step(adam: Adam, params: dict, loss) -> None:
    by_tensor = ad.grad(loss, params.values())
    adam.step({name: by_tensor[p] for name, p in params.items()})


def save_curves(path, curves) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch,train_loss,valid_loss,lr\n")
        for epoch, tl, vl, lr in curves:
            fh.write(f"{epoch},{tl:.17g},{vl:.17g},{lr:.17g}\n")


# model bundle persistence: <prefix>.params (binary) + <prefix>.json (config)


def save_model(prefix, model: TrainedModel) -> None:
    import json

    save_params(f"{prefix}.params", _all_params(model))
    meta = {
        "variant": model.variant.to_dict(),
        "net": {
            "input_dim": model.net.config.input_dim,
            "embedding_dim": model.net.config.embedding_dim,
            "hidden": list(model.net.config.hidden),
            "head": model.net.config.head,
            "normalize_output": model.net.config.normalize_output,
        },
        "space": model.space.to_dict(),
    }
    with open(f"{prefix}.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)


def load_model(prefix) -> TrainedModel:
    import json

    with open(f"{prefix}.json", "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    space = LabelSpace.from_dict(meta["space"])
    variant = VariantConfig.from_dict(meta["variant"])
    netmeta = dict(meta["net"])
    netmeta["hidden"] = tuple(netmeta["hidden"])
    net = EmbeddingNet(NetConfig(**netmeta), space)
    bank = None if variant.family == "triplet" else CentroidBank(space)
    values = load_params(f"{prefix}.params")
    params = dict(net.params)
    if bank is not None:
        params["C"] = bank.weights
    for name, p in params.items():
        if name not in values:
            raise ConfigurationError(f"{prefix}.params: missing parameter {name!r}")
        if values[name].shape != p.values.shape:
            raise ConfigurationError(
                f"{prefix}.params: shape mismatch for {name!r}"
            )
        p.values = values[name]
    return TrainedModel(net, bank, variant, space)
