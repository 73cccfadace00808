"""The texture-to-heightfield network.

A small convolutional VAE: encoder to an 8x8 latent, a base decoder back
to image-size features, then four appended refinement layers and a
single-channel sigmoid head. The encoder and base decoder are what gets
pretrained as a plain texture autoencoder; the refinement layers and head
are the additions that learn heightfield structure. Inference uses the
latent mean, so outputs are deterministic.
"""

from __future__ import annotations

import hashlib

import numpy as np
import torch
from torch import nn

from tactiletex.heightfield import Heightfield, TextureImage, resample, resample_texture

LATENT_CHANNELS = 8
FEATURE_CHANNELS = 16
MIN_IMAGE_SIZE = 16  # latent is size/8; SSIM needs an 11px window


class TextureEncoder(nn.Module):
    def __init__(self):
        super().__init__()
        self.features = nn.Sequential(
            nn.Conv2d(3, 16, 3, stride=2, padding=1),
            nn.ReLU(inplace=True),
            nn.Conv2d(16, 32, 3, stride=2, padding=1),
            nn.ReLU(inplace=True),
            nn.Conv2d(32, 64, 3, stride=2, padding=1),
            nn.ReLU(inplace=True),
        )
        self.mu_head = nn.Conv2d(64, LATENT_CHANNELS, 1)
        self.logvar_head = nn.Conv2d(64, LATENT_CHANNELS, 1)

    def forward(self, x):
        h = self.features(x)
        return self.mu_head(h), self.logvar_head(h)


class BaseDecoder(nn.Module):
    """The pre-existing decoder stack; ends in image-size feature maps."""

    def __init__(self):
        super().__init__()
        self.features = nn.Sequential(
            nn.ConvTranspose2d(LATENT_CHANNELS, 64, 4, stride=2, padding=1),
            nn.ReLU(inplace=True),
            nn.ConvTranspose2d(64, 32, 4, stride=2, padding=1),
            nn.ReLU(inplace=True),
            nn.ConvTranspose2d(32, FEATURE_CHANNELS, 4, stride=2, padding=1),
            nn.ReLU(inplace=True),
        )
        # used only while pretraining the autoencoder on textures
        self.rgb_head = nn.Conv2d(FEATURE_CHANNELS, 3, 3, padding=1)

    def forward(self, z):
        return self.features(z)

    def reconstruct(self, z):
        return torch.sigmoid(self.rgb_head(self.features(z)))


class HeightfieldHead(nn.Module):
    """Four added refinement layers plus the single-channel output."""

    def __init__(self):
        super().__init__()
        layers = []
        for _ in range(4):
            layers.append(nn.Conv2d(FEATURE_CHANNELS, FEATURE_CHANNELS, 3, padding=1))
            layers.append(nn.ReLU(inplace=True))
        self.refine = nn.Sequential(*layers)
        self.out = nn.Conv2d(FEATURE_CHANNELS, 1, 3, padding=1)

    def forward(self, f):
        return torch.sigmoid(self.out(self.refine(f)))


class HeightgenModel(nn.Module):
    def __init__(self, seed: int = 0):
        super().__init__()
        torch.manual_seed(seed)
        self.encoder = TextureEncoder()
        self.decoder = BaseDecoder()
        self.head = HeightfieldHead()

    def encode(self, x, sample: bool):
        mu, logvar = self.encoder(x)
        if sample:
            z = mu + torch.exp(0.5 * logvar) * torch.randn_like(mu)
        else:
            z = mu
        return z, mu, logvar

    def forward(self, x, sample: bool = False):
        z, mu, logvar = self.encode(x, sample)
        return self.head(self.decoder(z)), mu, logvar

    def reconstruct_texture(self, x, sample: bool = True):
        z, mu, logvar = self.encode(x, sample)
        return self.decoder.reconstruct(z), mu, logvar


def freeze_encoder(model: HeightgenModel) -> None:
    for p in model.encoder.parameters():
        p.requires_grad_(False)


def encoder_checksum(model: HeightgenModel) -> str:
    digest = hashlib.sha256()
    state = model.encoder.state_dict()
    for key in sorted(state):
        digest.update(key.encode())
        digest.update(state[key].detach().cpu().contiguous().numpy().tobytes())
    return digest.hexdigest()


def texture_to_tensor(texture: TextureImage, image_size: int) -> torch.Tensor:
    t = resample_texture(texture, image_size, image_size)
    return torch.from_numpy(np.moveaxis(t.rgb, 2, 0)[None].astype(np.float32))


def heightfield_to_tensor(field: Heightfield, image_size: int) -> torch.Tensor:
    h = resample(field, image_size, image_size)
    return torch.from_numpy(h.values[None, None].astype(np.float32))


def infer(
    model: HeightgenModel,
    texture: TextureImage,
    out_size: tuple[int, int] | None = None,
    image_size: int = 64,
) -> Heightfield:
    model.eval()
    with torch.no_grad():
        pred, _, _ = model(texture_to_tensor(texture, image_size), sample=False)
    values = np.clip(pred[0, 0].numpy().astype(np.float64), 0.0, 1.0)
    field = Heightfield(values, source_depth=16)
    if out_size is None:
        out_size = (texture.width, texture.height)
    if (field.width, field.height) != tuple(out_size):
        field = resample(field, out_size[0], out_size[1])
    return field
