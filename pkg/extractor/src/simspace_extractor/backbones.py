"""Backbone registry: model builders with their penultimate-layer widths.

Each entry fixes the published inference preprocessing (resize shorter side,
center crop, per-channel normalization) so feature extraction is a pure
function of the image bytes and the weight source.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import torch
from torchvision import models

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)

RANDOM_INIT_SEED = 0


@dataclass(frozen=True)
class Backbone:
    name: str
    feature_width: int
    resize: int
    crop: int
    build: Callable[[bool], torch.nn.Module]


def _inception_v3(pretrained: bool) -> torch.nn.Module:
    if pretrained:
        model = models.inception_v3(weights=models.Inception_V3_Weights.IMAGENET1K_V1)
    else:
        torch.manual_seed(RANDOM_INIT_SEED)
        model = models.inception_v3(weights=None, aux_logits=False, init_weights=False)
    model.fc = torch.nn.Identity()
    return model


def _resnet50(pretrained: bool) -> torch.nn.Module:
    if pretrained:
        model = models.resnet50(weights=models.ResNet50_Weights.IMAGENET1K_V2)
    else:
        torch.manual_seed(RANDOM_INIT_SEED)
        model = models.resnet50(weights=None)
    model.fc = torch.nn.Identity()
    return model


def _resnet18(pretrained: bool) -> torch.nn.Module:
    if pretrained:
        model = models.resnet18(weights=models.ResNet18_Weights.IMAGENET1K_V1)
    else:
        torch.manual_seed(RANDOM_INIT_SEED)
        model = models.resnet18(weights=None)
    model.fc = torch.nn.Identity()
    return model


REGISTRY: dict[str, Backbone] = {
    "inception_v3": Backbone("inception_v3", 2048, resize=342, crop=299, build=_inception_v3),
    "resnet50": Backbone("resnet50", 2048, resize=256, crop=224, build=_resnet50),
    "resnet18": Backbone("resnet18", 512, resize=256, crop=224, build=_resnet18),
}

DEFAULT_BACKBONE = "inception_v3"


def get_backbone(name: str) -> Backbone:
    if name not in REGISTRY:
        raise ValueError(f"unknown backbone {name!r}; available: {', '.join(sorted(REGISTRY))}")
    return REGISTRY[name]
