# Copyright 2026 The Scarf Authors
# SPDX-License-Identifier: Apache-2.0
"""Multiscale feature-fusion object detection at desk scale."""

from ._core import (
    CLASS_NAMES,
    ArgumentError,
    CheckpointError,
    ConfigError,
    Detector,
    ShapeError,
    average_precision,
    bilinear_resize,
    conv2d,
    default_config,
    gen_scene,
    heatmap,
    iou,
    nms,
    select_channel,
    train,
    validate_config,
)

__all__ = [
    "CLASS_NAMES",
    "ArgumentError",
    "CheckpointError",
    "ConfigError",
    "Detector",
    "ShapeError",
    "average_precision",
    "bilinear_resize",
    "conv2d",
    "default_config",
    "gen_scene",
    "heatmap",
    "iou",
    "nms",
    "select_channel",
    "train",
    "validate_config",
]
