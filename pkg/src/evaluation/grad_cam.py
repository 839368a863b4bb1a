"""
Class-discriminative saliency (Grad-CAM) on the last extractor feature map.

Author: Facet Development
"""

import numpy as np
import torch
import torch.nn.functional as F

TARGETS = ("live", "spoof")


def grad_cam(model, x: torch.Tensor, target: str = "live") -> np.ndarray:
    """
    Saliency map of one input for the live or spoof class.

    The target score is the live logit (live) or its negation (spoof).
    Channel weights are the spatially averaged gradients of that score with
    respect to the feature map; the weighted channel sum is rectified,
    bilinearly upsampled to the input size and divided by its maximum.

    Args:
        model: Network exposing `gradcam_forward(x) -> (feature_map, logit)`
        x: Single input, C x H x W or 1 x C x H x W
        target: "live" or "spoof"

    Returns:
        float32 H x W map in [0, 1] (all zeros when nothing is salient)

    Example:
        >>> cam = grad_cam(model, x, target="spoof")
        >>> cam.shape
        (64, 64)
    """
    if target not in TARGETS:
        raise ValueError(f"target must be one of {TARGETS}, got '{target}'")
    if x.ndim == 3:
        x = x.unsqueeze(0)
    if x.ndim != 4 or x.shape[0] != 1:
        raise ValueError(f"grad_cam expects a single input, got shape {tuple(x.shape)}")

    model.eval()
    with torch.enable_grad():
        feature_map, logit = model.gradcam_forward(x)
        score = logit.sum() if target == "live" else -logit.sum()
        grad, = torch.autograd.grad(score, feature_map, allow_unused=True)
    if grad is None:
        grad = torch.zeros_like(feature_map)

    with torch.no_grad():
        weights = grad.mean(dim=(2, 3), keepdim=True)
        cam = torch.relu((weights * feature_map).sum(dim=1, keepdim=True))
        cam = F.interpolate(cam, size=x.shape[2:], mode="bilinear", align_corners=False)[0, 0]
        peak = cam.max()
        cam = cam / peak if peak > 0 else torch.zeros_like(cam)
    return cam.clamp(0.0, 1.0).float().numpy()
