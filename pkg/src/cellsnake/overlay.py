"""Figure-style PNG overlays: contours drawn over the frame, labelled by track."""

from __future__ import annotations

import colorsys

import numpy as np
from PIL import Image, ImageDraw

from .fileio import to_uint8


def track_color(track_id: int):
    """Distinct, deterministic colour per track id (golden-ratio hue walk)."""
    hue = (track_id * 0.618033988749895) % 1.0
    r, g, b = colorsys.hsv_to_rgb(hue, 0.9, 1.0)
    return int(r * 255), int(g * 255), int(b * 255)


def render_overlay(img, contours: dict, scale: int = 1) -> Image.Image:
    gray = to_uint8(img.pixels)
    rgb = Image.fromarray(np.stack([gray] * 3, axis=-1), mode="RGB")
    if scale > 1:
        rgb = rgb.resize((rgb.width * scale, rgb.height * scale), Image.NEAREST)
    draw = ImageDraw.Draw(rgb)
    for tid in sorted(contours):
        c = contours[tid]
        pts = [(float(x) * scale, float(y) * scale) for x, y in c.points]
        color = track_color(tid)
        draw.line(pts + pts[:1], fill=color, width=1)
        cx, cy = c.centroid
        draw.text((cx * scale, cy * scale), str(tid), fill=color, anchor="mm")
    return rgb


def save_overlay(path, img, contours: dict, scale: int = 1):
    render_overlay(img, contours, scale).save(path, format="PNG")
