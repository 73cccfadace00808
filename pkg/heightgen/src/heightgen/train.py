"""Two-stage training and the on-disk artifact format.

Stage one pretrains the encoder and base decoder as a texture
autoencoder. Stage two freezes the encoder and fits the decoder stack to
texture/heightfield pairs with RMSprop at two learning rates: slow for
the pre-existing decoder layers, fast for the added refinement layers
and output head. The artifact directory carries the weights, the config,
content hashes, and a jsonl training log.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch

from tactiletex.dataset import DatasetManifest, load_manifest
from tactiletex.evaluate import corpus_digest
from tactiletex.heightfield import load_heightfield, load_texture

from .errors import HeightgenError
from .loss import heightfield_loss, vae_pretrain_loss
from .model import (
    MIN_IMAGE_SIZE,
    HeightgenModel,
    encoder_checksum,
    freeze_encoder,
    heightfield_to_tensor,
    texture_to_tensor,
)

ARTIFACT_SCHEMA_VERSION = 1
WEIGHTS_NAME = "weights.pt"
META_NAME = "config.json"
LOG_NAME = "train_log.jsonl"


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int = 60
    batch_size: int = 10
    lr_existing: float = 1e-5
    lr_new: float = 1e-3
    w_mse: float = 0.5
    w_ssim: float = 0.5
    image_size: int = 64
    seed: int = 0
    pretrain_epochs: int = 6
    pretrain_lr: float = 1e-3
    lr_decay: float = 1.0  # per-epoch multiplicative factor; <1 lets the run settle

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.pretrain_epochs < 0:
            raise HeightgenError("epochs and batch_size must be >= 1")
        for name in ("lr_existing", "lr_new", "pretrain_lr"):
            if not (getattr(self, name) > 0.0):
                raise HeightgenError(f"{name} must be positive")
        if not (0.0 < self.lr_decay <= 1.0):
            raise HeightgenError("lr_decay must be in (0, 1]")
        if self.w_mse < 0.0 or self.w_ssim < 0.0 or abs(self.w_mse + self.w_ssim - 1.0) > 1e-9:
            raise HeightgenError("loss weights must be nonnegative and sum to 1")
        if self.image_size < MIN_IMAGE_SIZE or self.image_size % 8 != 0:
            raise HeightgenError(
                f"image_size must be a multiple of 8 and >= {MIN_IMAGE_SIZE}, got {self.image_size}"
            )


@dataclass
class TrainResult:
    artifact_dir: Path
    log: list
    initial_test_mse: float
    final_test_mse: float
    encoder_checksum: str
    model_version: str


def _load_pairs(manifest: DatasetManifest, split: str, image_size: int):
    textures, heights = [], []
    for entry in manifest.entries:
        if entry.split != split:
            continue
        textures.append(texture_to_tensor(load_texture(manifest.texture_path(entry)), image_size))
        heights.append(
            heightfield_to_tensor(load_heightfield(manifest.heightfield_path(entry)), image_size)
        )
    if not textures:
        raise HeightgenError(f"manifest has no {split!r} split entries; assign a split first")
    return torch.cat(textures), torch.cat(heights)


def _test_mse(model: HeightgenModel, textures: torch.Tensor, heights: torch.Tensor) -> float:
    model.eval()
    with torch.no_grad():
        pred, _, _ = model(textures, sample=False)
        return float(torch.mean((pred - heights) ** 2))


def _pretrain(model: HeightgenModel, textures: torch.Tensor, config: TrainingConfig) -> None:
    if config.pretrain_epochs == 0:
        return
    optimizer = torch.optim.RMSprop(
        list(model.encoder.parameters()) + list(model.decoder.parameters()),
        lr=config.pretrain_lr,
    )
    model.train()
    n = textures.shape[0]
    generator = torch.Generator().manual_seed(config.seed)
    for _ in range(config.pretrain_epochs):
        for start in range(0, n, config.batch_size):
            idx = torch.randperm(n, generator=generator)[start : start + config.batch_size]
            batch = textures[idx]
            recon, mu, logvar = model.reconstruct_texture(batch, sample=True)
            loss = vae_pretrain_loss(recon, batch, mu, logvar)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()


def train(config: TrainingConfig, manifest: DatasetManifest, out_dir) -> TrainResult:
    out_dir = Path(out_dir)
    torch.manual_seed(config.seed)

    train_x, train_y = _load_pairs(manifest, "train", config.image_size)
    test_x, test_y = _load_pairs(manifest, "test", config.image_size)

    model = HeightgenModel(seed=config.seed)
    _pretrain(model, train_x, config)

    freeze_encoder(model)
    checksum_before = encoder_checksum(model)

    optimizer = torch.optim.RMSprop(
        [
            {"params": model.decoder.features.parameters(), "lr": config.lr_existing},
            {"params": model.head.parameters(), "lr": config.lr_new},
        ]
    )
    scheduler = torch.optim.lr_scheduler.ExponentialLR(optimizer, gamma=config.lr_decay)
    initial_test_mse = _test_mse(model, test_x, test_y)

    log = []
    n = train_x.shape[0]
    generator = torch.Generator().manual_seed(config.seed + 1)
    for epoch in range(1, config.epochs + 1):
        model.train()
        order = torch.randperm(n, generator=generator)
        batch_losses = []
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            # encoder is frozen, so nothing trains through the sampling path;
            # use the mean latent to keep the loss trace deterministic
            pred, _, _ = model(train_x[idx], sample=False)
            loss, parts = heightfield_loss(pred, train_y[idx], config.w_mse, config.w_ssim)
            if not torch.isfinite(loss):
                raise HeightgenError(
                    f"non-finite loss at epoch {epoch}, batch starting {start}: "
                    f"mse={parts['mse']}, 1-ssim={parts['one_minus_ssim']}"
                )
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            batch_losses.append(float(loss.detach()))
        scheduler.step()
        log.append(
            {
                "epoch": epoch,
                "train_loss": float(np.mean(batch_losses)),
                "test_mse": _test_mse(model, test_x, test_y),
            }
        )

    checksum_after = encoder_checksum(model)
    if checksum_after != checksum_before:
        raise HeightgenError("encoder parameters changed despite the freeze")

    final_test_mse = log[-1]["test_mse"]
    meta = {
        "schema_version": ARTIFACT_SCHEMA_VERSION,
        "config": asdict(config),
        "data_digest": corpus_digest(manifest),
        "encoder_checksum": checksum_after,
        "initial_test_mse": initial_test_mse,
        "final_test_mse": final_test_mse,
    }
    version = _write_artifact(out_dir, model, meta, log)
    return TrainResult(
        artifact_dir=out_dir,
        log=log,
        initial_test_mse=initial_test_mse,
        final_test_mse=final_test_mse,
        encoder_checksum=checksum_after,
        model_version=version,
    )


def _write_artifact(out_dir: Path, model: HeightgenModel, meta: dict, log: list) -> str:
    out_dir.mkdir(parents=True, exist_ok=True)
    weights_path = out_dir / WEIGHTS_NAME
    torch.save(model.state_dict(), weights_path)
    weights_digest = hashlib.sha256(weights_path.read_bytes()).hexdigest()
    meta = dict(meta)
    meta["weights_digest"] = weights_digest
    meta["model_version"] = f"heightgen-{weights_digest[:12]}"
    (out_dir / META_NAME).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    with open(out_dir / LOG_NAME, "w") as handle:
        for entry in log:
            handle.write(json.dumps(entry, sort_keys=True) + "\n")
    return meta["model_version"]


def load_artifact(artifact_dir) -> tuple[HeightgenModel, dict]:
    artifact_dir = Path(artifact_dir)
    meta_path = artifact_dir / META_NAME
    weights_path = artifact_dir / WEIGHTS_NAME
    if not meta_path.is_file() or not weights_path.is_file():
        raise HeightgenError(f"{artifact_dir} is not a model artifact directory")
    meta = json.loads(meta_path.read_text())
    if meta.get("schema_version") != ARTIFACT_SCHEMA_VERSION:
        raise HeightgenError(f"unsupported artifact schema {meta.get('schema_version')!r}")
    digest = hashlib.sha256(weights_path.read_bytes()).hexdigest()
    if digest != meta.get("weights_digest"):
        raise HeightgenError("artifact weights do not match the recorded digest")
    model = HeightgenModel(seed=int(meta["config"]["seed"]))
    state = torch.load(weights_path, weights_only=True)
    try:
        model.load_state_dict(state)
    except RuntimeError as exc:
        raise HeightgenError(f"artifact/config mismatch: {exc}") from exc
    model.eval()
    return model, meta


def train_from_paths(config: TrainingConfig, manifest_path, out_dir) -> TrainResult:
    return train(config, load_manifest(manifest_path), out_dir)
