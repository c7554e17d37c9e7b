"""Loss terms for the two adversarial models.

The critic is trained on the Wasserstein objective with a gradient
penalty on per-sample interpolates; the generator combines the
adversarial score with a weighted pixel term (L1 for the upsampler, the
evenly weighted cross-entropy + Dice loss for the segmenter).
"""

from __future__ import annotations

import torch
import torch.nn.functional as F

N_CLASSES = 5
FOREGROUND = (1, 2, 3, 4)
DICE_SMOOTH = 1e-6  # empty-empty soft Dice resolves to smooth/smooth = 1


class TrainingDiverged(RuntimeError):
    """A loss went non-finite; training aborts with the last-good state."""


def ensure_finite(**terms: float) -> None:
    bad = {k: float(v) for k, v in terms.items() if not torch.isfinite(torch.as_tensor(v))}
    if bad:
        raise TrainingDiverged(f"non-finite loss terms: {bad}")


def pixel_loss_l1(pred: torch.Tensor, truth: torch.Tensor) -> torch.Tensor:
    if pred.shape != truth.shape:
        raise ValueError(f"shape mismatch: {tuple(pred.shape)} vs {tuple(truth.shape)}")
    return (pred - truth).abs().mean()


def gradient_penalty(critic_fn, real: torch.Tensor, fake: torch.Tensor,
                     rng: torch.Generator):
    """E[(||grad_x D(x_hat)||_2 - 1)^2] over per-sample interpolates.

    ``critic_fn`` maps a candidate batch to a score map (any trailing
    shape; scores are averaged per sample).  Returns (penalty, per-sample
    gradient norms detached for logging).
    """
    if real.shape != fake.shape:
        raise ValueError(f"shape mismatch: {tuple(real.shape)} vs {tuple(fake.shape)}")
    n = real.shape[0]
    eps = torch.rand((n,) + (1,) * (real.dim() - 1), generator=rng, dtype=real.dtype)
    interp = (eps * real + (1.0 - eps) * fake.detach()).requires_grad_(True)
    scores = critic_fn(interp).reshape(n, -1).mean(dim=1)
    (grads,) = torch.autograd.grad(scores.sum(), interp, create_graph=True)
    norms = grads.reshape(n, -1).norm(dim=1)
    return ((norms - 1.0) ** 2).mean(), norms.detach()


def critic_loss(score_real: torch.Tensor, score_fake: torch.Tensor) -> torch.Tensor:
    # minimized: pushes real scores up and fake scores down (Wasserstein)
    return score_fake.mean() - score_real.mean()


def generator_loss(adv, pixel, gp, lambda_pixel: float, lambda_gp: float) -> torch.Tensor:
    ensure_finite(adv=adv, pixel=pixel, gp=gp)
    return adv + lambda_pixel * pixel + lambda_gp * gp


def soft_dice(probs: torch.Tensor, one_hot: torch.Tensor) -> torch.Tensor:
    """Per-class soft Dice over the batch; shape (channels,)."""
    num = 2.0 * (probs * one_hot).sum(dim=(0, 2, 3))
    den = probs.sum(dim=(0, 2, 3)) + one_hot.sum(dim=(0, 2, 3))
    return (num + DICE_SMOOTH) / (den + DICE_SMOOTH)


def seg_loss_custom(pred: torch.Tensor, truth: torch.Tensor) -> torch.Tensor:
    """Evenly weighted cross-entropy and (1 - mean soft Dice).

    ``pred`` is raw class scores (n, 5, h, w); ``truth`` is integer labels
    (n, h, w).  The Dice mean runs over the four foreground classes only:
    background dominates every slice and would mask the signal.
    """
    if pred.dim() != 4 or pred.shape[1] != N_CLASSES:
        raise ValueError(f"expected (n, {N_CLASSES}, h, w) scores, got {tuple(pred.shape)}")
    if truth.shape != (pred.shape[0],) + pred.shape[2:]:
        raise ValueError(f"labels shape {tuple(truth.shape)} does not match scores")
    if truth.min() < 0 or truth.max() >= N_CLASSES:
        raise ValueError("labels out of range")
    ce = F.cross_entropy(pred, truth)
    probs = F.softmax(pred, dim=1)
    one_hot = F.one_hot(truth, N_CLASSES).permute(0, 3, 1, 2).to(pred.dtype)
    dice = soft_dice(probs, one_hot)[list(FOREGROUND)].mean()
    return 0.5 * ce + 0.5 * (1.0 - dice)
