"""Adversarial training loops for the upsampler and the segmenter.

One shared WGAN-GP scaffold: per generator step the critic takes
``critic_steps`` updates (Wasserstein loss + gradient penalty), then the
generator takes one update on the adversarial score plus its weighted
pixel term (L1 for images, the evenly weighted CE+Dice loss for labels).
Learning rates decay by ``schedule_factor`` every ``schedule_step``
epochs.  Every epoch appends one history row and refreshes the
checkpoint; a non-finite loss aborts with the last-good checkpoint on
disk and a TrainingDiverged error.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np
import torch
import torch.nn.functional as F

from . import data as data_mod
from .losses import (
    TrainingDiverged, critic_loss, ensure_finite, generator_loss,
    gradient_penalty, pixel_loss_l1, seg_loss_custom, N_CLASSES,
)
from .models import PatchCritic, UNetGenerator

HISTORY_COLUMNS = (
    "epoch", "g_lr", "d_lr", "critic", "adv", "pixel", "gp", "grad_norm",
)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 48
    g_lr: float = 0.01
    d_lr: float = 0.001
    schedule_step: int = 25
    schedule_factor: float = 0.1
    lambda_pixel: float = 100.0
    lambda_gp: float = 10.0
    critic_steps: int = 5
    crop: int = 64
    base: int = 32
    betas: tuple = (0.5, 0.9)
    critic_norm: str = "batch"
    steps_per_epoch: int = 0  # 0: one pass over the items per epoch
    seed: int = 0

    def __post_init__(self):
        positive = ("epochs", "batch_size", "g_lr", "d_lr", "schedule_step",
                    "schedule_factor", "critic_steps", "crop", "base")
        for name in positive:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.lambda_pixel < 0 or self.lambda_gp < 0 or self.steps_per_epoch < 0:
            raise ValueError("weights and step counts must be non-negative")
        if self.schedule_step > self.epochs:
            raise ValueError("schedule_step must not exceed epochs")


@dataclass
class TrainResult:
    checkpoint_path: str
    history_path: str
    history: list = field(default_factory=list)


def save_checkpoint(path: str, generator, critic, config: TrainConfig,
                    epoch: int) -> None:
    tmp = path + ".tmp"
    torch.save(
        {
            "generator": generator.state_dict(),
            "critic": critic.state_dict(),
            "config": asdict(config),
            "epoch": epoch,
        },
        tmp,
    )
    os.replace(tmp, path)  # atomic: consumers never see a partial file


def write_history(path: str, rows: list) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=HISTORY_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)


def _batches(view, config: TrainConfig, rng: np.random.Generator):
    """Index batches for one epoch: critic_steps + 1 draws per step."""
    steps = config.steps_per_epoch or max(1, math.ceil(len(view) / config.batch_size))
    n = len(view)
    for _ in range(steps):
        yield [rng.integers(0, n, size=min(config.batch_size, n))
               for _ in range(config.critic_steps + 1)]


def train_view(view, config: TrainConfig, out_dir: str, name: str,
               out_channels: int, final: str, log=None) -> TrainResult:
    """Core WGAN-GP loop over any item view (see UpsamplerView/SegmenterView)."""
    os.makedirs(out_dir, exist_ok=True)
    ckpt_path = os.path.join(out_dir, f"{name}.pt")
    hist_path = os.path.join(out_dir, f"{name}_history.csv")

    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    gp_rng = torch.Generator().manual_seed(config.seed + 1)

    segmentation = out_channels == N_CLASSES
    generator = UNetGenerator(1, out_channels, config.base, final)
    critic = PatchCritic(1 + out_channels, config.base, config.critic_norm)
    opt_g = torch.optim.Adam(generator.parameters(), lr=config.g_lr, betas=config.betas)
    opt_d = torch.optim.Adam(critic.parameters(), lr=config.d_lr, betas=config.betas)
    sched_g = torch.optim.lr_scheduler.StepLR(opt_g, config.schedule_step, config.schedule_factor)
    sched_d = torch.optim.lr_scheduler.StepLR(opt_d, config.schedule_step, config.schedule_factor)

    def tensors(indices):
        x, y = data_mod.crop_batch(view, indices, config.crop, rng)
        x = torch.from_numpy(x)
        if segmentation:
            y = torch.from_numpy(y.astype(np.int64))
            real = F.one_hot(y, N_CLASSES).permute(0, 3, 1, 2).to(torch.float32)
        else:
            y = torch.from_numpy(y[:, None].astype(np.float32))
            real = y
        return x, y, real

    def candidate(scores):
        return F.softmax(scores, dim=1) if segmentation else scores

    rows = []
    save_checkpoint(ckpt_path, generator, critic, config, 0)
    for epoch in range(1, config.epochs + 1):
        view.resample_days(rng)
        stats = {k: [] for k in ("critic", "adv", "pixel", "gp", "grad_norm")}
        last_gp = torch.zeros(())
        try:
            for batch_group in _batches(view, config, rng):
                *critic_batches, gen_batch = batch_group
                for indices in critic_batches:
                    x, y, real = tensors(indices)
                    with torch.no_grad():
                        fake = candidate(generator(x))
                    score_real = critic(x, real)
                    score_fake = critic(x, fake)
                    gp, norms = gradient_penalty(
                        lambda cand: critic(x, cand), real, fake, gp_rng
                    )
                    loss_d = critic_loss(score_real, score_fake) + config.lambda_gp * gp
                    ensure_finite(critic=loss_d)
                    opt_d.zero_grad()
                    loss_d.backward()
                    opt_d.step()
                    stats["critic"].append(float(loss_d.detach()))
                    stats["gp"].append(float(gp.detach()))
                    stats["grad_norm"].append(float(norms.mean()))
                    last_gp = gp.detach()

                x, y, _ = tensors(gen_batch)
                scores = generator(x)
                adv = -critic(x, candidate(scores)).mean()
                pixel = seg_loss_custom(scores, y) if segmentation else pixel_loss_l1(scores, y)
                # the penalty has no generator dependence (detached fakes);
                # its value completes the composite loss for the record
                loss_g = generator_loss(adv, pixel, last_gp,
                                        config.lambda_pixel, config.lambda_gp)
                opt_g.zero_grad()
                loss_g.backward()
                opt_g.step()
                stats["adv"].append(float(adv.detach()))
                stats["pixel"].append(float(pixel.detach()))
        except TrainingDiverged as err:
            # the checkpoint on disk is the last-good epoch; report and stop
            write_history(hist_path, rows)
            raise TrainingDiverged(
                f"{name} aborted in epoch {epoch}: {err}; "
                f"last-good checkpoint at {ckpt_path}"
            ) from err

        row = {"epoch": epoch, "g_lr": sched_g.get_last_lr()[0],
               "d_lr": sched_d.get_last_lr()[0]}
        row.update({k: float(np.mean(v)) if v else math.nan for k, v in stats.items()})
        rows.append(row)
        sched_g.step()
        sched_d.step()
        save_checkpoint(ckpt_path, generator, critic, config, epoch)
        write_history(hist_path, rows)
        if log:
            log(f"{name} epoch {epoch}: pixel {row['pixel']:.4f} "
                f"critic {row['critic']:.4f} grad_norm {row['grad_norm']:.3f}")

    return TrainResult(ckpt_path, hist_path, rows)


def train_upsampler(manifest_path: str, out_dir: str,
                    config: TrainConfig | None = None, log=None) -> TrainResult:
    """Short-exposure -> final-day image regression, adversarially trained."""
    config = config or TrainConfig()
    items, _ = data_mod.load_items(manifest_path)
    view = data_mod.UpsamplerView(items)
    return train_view(view, config, out_dir, "upsampler", 1, "relu", log)


def train_segmenter(manifest_path: str, out_dir: str,
                    config: TrainConfig | None = None, log=None) -> TrainResult:
    """Final-day image -> class label map, same adversarial scaffolding."""
    config = config or TrainConfig()
    items, _ = data_mod.load_items(manifest_path)
    view = data_mod.SegmenterView(items)
    return train_view(view, config, out_dir, "segmenter", N_CLASSES, "logits", log)


def load_generator(checkpoint_path: str) -> UNetGenerator:
    state = torch.load(checkpoint_path, weights_only=True)
    cfg = state["config"]
    out_channels = state["generator"]["head.weight"].shape[0]
    final = "logits" if out_channels == N_CLASSES else "relu"
    model = UNetGenerator(1, out_channels, cfg["base"], final)
    model.load_state_dict(state["generator"])
    model.eval()
    return model
