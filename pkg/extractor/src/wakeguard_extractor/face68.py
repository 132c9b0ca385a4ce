"""Deterministic 68-point placement inside a detected face box.

No trained landmark regressor ships with this adapter; points come from a
fixed neutral-face template expressed in box-fraction coordinates and
scaled into the detection rectangle. That keeps the output schema-exact
and bit-reproducible; landmark fidelity is template-grade (eyes, lips and
jaw sit at plausible neutral positions rather than tracking the image).
"""
from __future__ import annotations

import math

import numpy as np

from .detect import FaceBox


def _unit_template() -> np.ndarray:
    pts = np.zeros((68, 2))
    # jaw 0-16: half ellipse, ears (y 0.55) down to the chin (y 0.97)
    for i in range(17):
        theta = math.pi - i * math.pi / 16.0
        pts[i] = (0.5 + 0.45 * math.cos(theta), 0.55 + 0.42 * math.sin(theta))
    # brows 17-26
    for i in range(5):
        pts[17 + i] = (0.18 + 0.06 * i, 0.25)
        pts[22 + i] = (0.58 + 0.06 * i, 0.25)
    # nose bridge 27-30, base 31-35
    for i in range(4):
        pts[27 + i] = (0.5, 0.33 + 0.07 * i)
    pts[31:36] = [(0.40, 0.62), (0.45, 0.635), (0.50, 0.65),
                  (0.55, 0.635), (0.60, 0.62)]
    # eyes 36-47: hexagons, half-opening 0.028 of box height
    for base, cx in ((36, 0.30), (42, 0.70)):
        y, half_w, v = 0.38, 0.10, 0.028
        third = 2.0 * half_w / 3.0
        pts[base + 0] = (cx - half_w, y)
        pts[base + 1] = (cx - half_w + third, y - v)
        pts[base + 2] = (cx - half_w + 2 * third, y - v)
        pts[base + 3] = (cx + half_w, y)
        pts[base + 4] = (cx - half_w + 2 * third, y + v)
        pts[base + 5] = (cx - half_w + third, y + v)
    # outer lip 48-59: ellipse around the mouth
    for j in range(12):
        theta = math.pi - j * math.pi / 6.0
        pts[48 + j] = (0.5 + 0.16 * math.cos(theta),
                       0.78 - 0.07 * math.sin(theta))
    # inner lip 60-67: corners at 60/64, upper arc 61-63, lower 65-67
    yc, half_w, v = 0.78, 0.10, 0.04
    pts[60] = (0.5 - half_w, yc)
    pts[61] = (0.45, yc - v)
    pts[62] = (0.50, yc - v)
    pts[63] = (0.55, yc - v)
    pts[64] = (0.5 + half_w, yc)
    pts[65] = (0.55, yc + v)
    pts[66] = (0.50, yc + v)
    pts[67] = (0.45, yc + v)
    return pts


_TEMPLATE = _unit_template()


def face_landmarks(box: FaceBox) -> np.ndarray:
    """All 68 points for a face box, image-pixel coordinates."""
    scale = np.array([float(box.width), float(box.height)])
    offset = np.array([float(box.x), float(box.y)])
    return _TEMPLATE * scale + offset
