"""Reading and writing images, label maps, segment tables and contours."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ImageFormatError, NotGrayscaleError
from .image import GrayImage

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def _pnm_header(data: bytes):
    """Parse magic, width, height, maxval; return them and the data offset."""
    tokens = []
    pos = 2
    n = len(data)
    while len(tokens) < 3:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise ImageFormatError("truncated PGM header")
        try:
            tokens.append(int(data[start:pos]))
        except ValueError:
            raise ImageFormatError(f"bad PGM header token {data[start:pos]!r}") from None
    # exactly one whitespace byte separates the header from binary data
    if pos >= n or not data[pos:pos + 1].isspace():
        raise ImageFormatError("truncated PGM header")
    return tokens[0], tokens[1], tokens[2], pos + 1


def _read_pgm(data: bytes, allow_16bit=False):
    magic = data[:2]
    if magic in (b"P3", b"P6"):
        raise NotGrayscaleError("PPM colour image; expected grayscale PGM")
    if magic not in (b"P2", b"P5"):
        raise ImageFormatError(f"unsupported PNM variant {magic!r}")
    width, height, maxval, offset = _pnm_header(data)
    if width < 1 or height < 1 or maxval < 1 or maxval > 65535:
        raise ImageFormatError(f"invalid PGM dimensions/maxval {width}x{height}/{maxval}")
    if maxval > 255 and not allow_16bit:
        raise ImageFormatError(f"16-bit PGM (maxval {maxval}) not supported; expected 8-bit")
    count = width * height
    if magic == b"P5":
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
        need = count * dtype.itemsize
        body = data[offset:offset + need]
        if len(body) < need:
            raise ImageFormatError(f"truncated PGM data: {len(body)} of {need} bytes")
        vals = np.frombuffer(body, dtype=dtype).astype(np.int64)
    else:
        try:
            vals = np.array([int(t) for t in data[offset:].split()], dtype=np.int64)
        except ValueError:
            raise ImageFormatError("bad ASCII PGM sample") from None
        if vals.size < count:
            raise ImageFormatError(f"truncated PGM data: {vals.size} of {count} samples")
        vals = vals[:count]
    if vals.max(initial=0) > maxval:
        raise ImageFormatError("PGM sample exceeds maxval")
    return vals.reshape(height, width), maxval


def _read_png(data: bytes):
    try:
        im = Image.open(io.BytesIO(data))
        im.load()
    except Exception as exc:  # Pillow raises a zoo of types for corrupt files
        raise ImageFormatError(f"unreadable PNG: {exc}") from None
    if im.mode == "L":
        return np.asarray(im, dtype=np.int64)
    if im.mode in ("RGB", "RGBA", "P", "LA", "CMYK", "YCbCr"):
        raise NotGrayscaleError(f"PNG mode {im.mode!r} is not 8-bit grayscale")
    raise ImageFormatError(f"unsupported PNG mode {im.mode!r}; expected 8-bit grayscale")


def load_image(path) -> GrayImage:
    """Load an 8-bit grayscale PGM (P2/P5) or PNG, scaled to [0, 1]."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image file: {path}")
    data = path.read_bytes()
    if data.startswith(PNG_MAGIC):
        vals = _read_png(data)
        return GrayImage(vals / 255.0)
    if len(data) >= 2 and data[:1] == b"P":
        vals, maxval = _read_pgm(data)
        return GrayImage(vals / 255.0 if maxval == 255 else vals / float(maxval))
    raise ImageFormatError(f"{path}: not a PGM or PNG file")


def read_label_map(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such label map: {path}")
    vals, _ = _read_pgm(path.read_bytes(), allow_16bit=True)
    return vals.astype(np.int32)


def _write_p5(path, arr, maxval):
    h, w = arr.shape
    header = f"P5\n{w} {h}\n{maxval}\n".encode("ascii")
    dtype = ">u2" if maxval > 255 else np.uint8
    Path(path).write_bytes(header + np.ascontiguousarray(arr, dtype=dtype).tobytes())


def to_uint8(values, normalize=False) -> np.ndarray:
    a = np.asarray(values, dtype=np.float64)
    if normalize:
        lo, hi = float(a.min()), float(a.max())
        a = (a - lo) / (hi - lo) if hi > lo else np.zeros_like(a)
    return np.rint(np.clip(a, 0.0, 1.0) * 255.0).astype(np.uint8)


def save_pgm(img, path, normalize=None):
    """Write an image or field as 8-bit binary PGM.

    GrayImages are written as-is; ScalarFields and raw arrays are min-max
    normalized unless ``normalize=False``.
    """
    if isinstance(img, GrayImage):
        arr, norm = img.pixels, bool(normalize)
    else:
        arr = getattr(img, "values", img)
        norm = True if normalize is None else normalize
    _write_p5(path, to_uint8(arr, normalize=norm), 255)


def save_label_map(labels, path):
    labels = np.asarray(labels)
    if labels.min(initial=0) < 0 or labels.max(initial=0) > 65535:
        raise ValueError("label values must fit in 16 bits")
    _write_p5(path, labels, 65535)


SEGMENT_CSV_HEADER = ["frame", "id", "area", "cx", "cy", "bbox_x0", "bbox_y0", "bbox_x1", "bbox_y1"]


def segment_rows(frame, segments):
    for s in segments:
        x0, y0, x1, y1 = s.bbox
        yield [frame, s.id, s.area, f"{s.centroid[0]:.6f}", f"{s.centroid[1]:.6f}", x0, y0, x1, y1]


def write_segment_csv(path, rows_by_frame):
    """``rows_by_frame``: iterable of (frame index, segments)."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(SEGMENT_CSV_HEADER)
        for frame, segments in rows_by_frame:
            wr.writerows(segment_rows(frame, segments))


def format_contour_line(cid, contour) -> str:
    pts = np.asarray(getattr(contour, "points", contour))
    coords = ", ".join(f"{x:.6f}, {y:.6f}" for x, y in pts)
    return f"{cid}, {len(pts)}, {coords}"


def parse_contour_line(line):
    parts = [p.strip() for p in line.split(",")]
    cid, n = int(parts[0]), int(parts[1])
    vals = [float(v) for v in parts[2:]]
    if len(vals) != 2 * n:
        raise ValueError(f"contour {cid}: expected {2 * n} coordinates, got {len(vals)}")
    return cid, np.array(vals).reshape(n, 2)


def write_contours_text(path, items):
    """``items``: iterable of (id, contour)."""
    with open(path, "w") as fh:
        for cid, c in items:
            fh.write(format_contour_line(cid, c) + "\n")


def read_contours_text(path):
    out = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                out.append(parse_contour_line(line))
    return out


def contours_to_json(contours):
    """JSON array of point arrays, 6 fractional digits."""
    return [[[round(float(x), 6), round(float(y), 6)] for x, y in np.asarray(getattr(c, "points", c))]
            for c in contours]


def dump_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=False) + "\n")
