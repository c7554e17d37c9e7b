"""Network definitions: U-Net generator and conditional patch critic.

Both models are built from one block recipe: 4x4 convolution -> batch
normalization -> ReLU.  The generator has five encoder blocks (each
halving the spatial dims) and five decoder blocks (each doubling them)
with skip connections between equal resolutions.  The critic scores
(condition, candidate) pairs with a patch map of unbounded scalar scores:
a Wasserstein critic, so no sigmoid anywhere.
"""

from __future__ import annotations

import torch
from torch import nn

DEPTH = 5
_FACTOR = 2 ** DEPTH


def _norm2d(kind: str, channels: int) -> nn.Module:
    if kind == "batch":
        return nn.BatchNorm2d(channels)
    if kind == "none":
        return nn.Identity()
    raise ValueError(f"unknown norm {kind!r}")


def _down_block(c_in: int, c_out: int, norm: str = "batch") -> nn.Sequential:
    return nn.Sequential(
        nn.Conv2d(c_in, c_out, 4, stride=2, padding=1),
        _norm2d(norm, c_out),
        nn.ReLU(inplace=True),
    )


def _up_block(c_in: int, c_out: int) -> nn.Sequential:
    return nn.Sequential(
        nn.ConvTranspose2d(c_in, c_out, 4, stride=2, padding=1),
        nn.BatchNorm2d(c_out),
        nn.ReLU(inplace=True),
    )


def check_spatial(x: torch.Tensor) -> None:
    if x.dim() != 4:
        raise ValueError(f"expected NCHW input, got shape {tuple(x.shape)}")
    h, w = x.shape[-2:]
    if h % _FACTOR or w % _FACTOR or h < _FACTOR or w < _FACTOR:
        raise ValueError(
            f"spatial dims must be multiples of {_FACTOR}, got {h}x{w}"
        )


class UNetGenerator(nn.Module):
    """Five-down/five-up U-Net.

    ``final`` selects the output head activation: "relu" clamps the
    output non-negative (image regression; scattering means cannot be
    negative), "logits" leaves raw class scores (segmentation).
    """

    def __init__(self, in_channels: int = 1, out_channels: int = 1,
                 base: int = 32, final: str = "relu"):
        super().__init__()
        if final not in ("relu", "logits"):
            raise ValueError(f"unknown final activation {final!r}")
        enc = [base, 2 * base, 4 * base, 8 * base, 8 * base]
        self.encoders = nn.ModuleList()
        c = in_channels
        for c_out in enc:
            self.encoders.append(_down_block(c, c_out))
            c = c_out
        self.decoders = nn.ModuleList()
        # skips come from the four shallower encoder outputs, deepest first
        skips = enc[-2::-1] + [0]
        dec_out = enc[-2::-1] + [base]
        for c_out, c_skip in zip(dec_out, skips):
            self.decoders.append(_up_block(c, c_out))
            c = c_out + c_skip
        self.head = nn.Conv2d(c, out_channels, 1)
        self.final = final

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        check_spatial(x)
        taps = []
        for enc in self.encoders:
            x = enc(x)
            taps.append(x)
        taps.pop()  # the bottleneck feeds the decoder directly, no skip
        for dec in self.decoders:
            x = dec(x)
            if taps:
                x = torch.cat([x, taps.pop()], dim=1)
        out = self.head(x)
        return torch.relu(out) if self.final == "relu" else out


class PatchCritic(nn.Module):
    """Conditional patch critic: scores cat(condition, candidate).

    ``norm`` keeps the stated batch normalization by default; "none" is
    the escape hatch for the usual WGAN-GP practice of an unnormalized
    critic.  The first block is never normalized (it sees raw inputs).
    """

    def __init__(self, in_channels: int = 2, base: int = 32, norm: str = "batch"):
        super().__init__()
        self.net = nn.Sequential(
            nn.Conv2d(in_channels, base, 4, stride=2, padding=1),
            nn.ReLU(inplace=True),
            _down_block(base, 2 * base, norm),
            _down_block(2 * base, 4 * base, norm),
            nn.Conv2d(4 * base, 1, 4, stride=1, padding=1),
        )

    def forward(self, condition: torch.Tensor, candidate: torch.Tensor) -> torch.Tensor:
        if condition.shape[-2:] != candidate.shape[-2:]:
            raise ValueError("condition and candidate spatial dims differ")
        return self.net(torch.cat([condition, candidate], dim=1))
