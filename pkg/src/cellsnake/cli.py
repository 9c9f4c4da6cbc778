"""cellsnake command line: segment, track, synth, compare.

Exit codes: 0 success, 2 input/data error, 3 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import sys
from pathlib import Path

from . import config as cfgmod
from .errors import ConfigError, DataError
from .fileio import (contours_to_json, dump_json, load_image, read_label_map, save_label_map, save_pgm,
                     write_segment_csv)
from .overlay import save_overlay
from .pipeline import (MOBILITY_CSV_HEADER, frame_mask, mobility_rows, mobility_stats, plain_snake, track_sequence,
                       tracks_to_dict)
from .segment import segment_image, trace_boundary
from .snake import contour_mask
from .synth import load_scene, mask_jaccard, render_sequence

log = logging.getLogger("cellsnake")

EXIT_OK, EXIT_DATA, EXIT_CONFIG = 0, 2, 3
IMAGE_SUFFIXES = (".pgm", ".png")


def _u64(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must be in [0, 2**64), got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="flat JSON config file with dotted keys, e.g. {\"snake.alpha\": 0.2}")
    common.add_argument("--out", metavar="DIR", help="output directory (default: config io.out, else '.')")
    common.add_argument("--overlay", action="store_true",
                        help="also write PNG overlays with contours and ids drawn over each frame")
    common.add_argument("--seed", type=_u64, metavar="U64",
                        help="random seed; overrides the scene seed for synth, unused by other commands")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", dest="overrides",
                        help="override one config key, e.g. --set snake.w_edge=50 (repeatable)")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    p = argparse.ArgumentParser(prog="cellsnake", description="Hybrid snake segmentation and cell tracking.")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    s = sub.add_parser("segment", parents=[common], help="segment single images",
                       description="Otsu + morphology + connected components on each input image; writes "
                                   "labels_XXXX.pgm and segments.csv.")
    s.add_argument("inputs", nargs="+", metavar="IMAGE", help="PGM or PNG grayscale images")

    t = sub.add_parser("track", parents=[common], help="segment, align and refine a frame sequence",
                       description="Full pipeline over a frame sequence; writes labels/, contours.json, "
                                   "alignments.json, tracks.json, segments.csv and mobility.csv.")
    t.add_argument("inputs", nargs="+", metavar="INPUT",
                   help="a directory of frames (PGM/PNG, lexicographic order) or a list of image files")

    y = sub.add_parser("synth", parents=[common], help="render a synthetic sequence with ground truth",
                       description="Render frame_XXXX.pgm plus truth/labels_XXXX.pgm and truth/cells.csv "
                                   "from a JSON scene spec.")
    y.add_argument("scene", metavar="SCENE", help="JSON scene spec")

    c = sub.add_parser("compare", parents=[common], help="score plain snake vs hybrid against ground truth",
                       description="Per-frame mask Jaccard of a plain snake (seeded on the image-margin "
                                   "rectangle, margin compare.margin) and the hybrid pipeline; writes "
                                   "compare.csv with columns frame,method,jaccard.")
    c.add_argument("input", metavar="FRAMES", help="directory of frames")
    c.add_argument("truth", metavar="TRUTH", help="directory of ground-truth label maps (PGM)")
    return p


def _image_files(inputs):
    files = []
    for item in inputs:
        path = Path(item)
        if path.is_dir():
            files.extend(sorted(q for q in path.iterdir() if q.is_file() and q.suffix.lower() in IMAGE_SUFFIXES))
        elif path.exists():
            files.append(path)
        else:
            raise FileNotFoundError(f"no such file or directory: {path}")
    if not files:
        raise DataError(f"no PGM/PNG frames found in {', '.join(map(str, inputs))}")
    return files


def _out_dir(args, flat) -> Path:
    out = Path(args.out if args.out is not None else flat["io.out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_segment(args, flat, cfg):
    files = _image_files(args.inputs)
    out = _out_dir(args, flat)
    rows = []
    for i, f in enumerate(files):
        img = load_image(f)
        seg = segment_image(img, cfg.segmenter, i)
        save_label_map(seg.labels, out / f"labels_{i:04d}.pgm")
        rows.append((i, seg.segments))
        log.info("%s: %d segments", f, len(seg.segments))
        if args.overlay:
            contours = {}
            for s in seg.segments:
                try:
                    contours[s.id] = trace_boundary(s, cfg.snake.resample_spacing)
                except DataError:
                    pass
            save_overlay(out / f"overlay_{i:04d}.png", img, contours)
    write_segment_csv(out / "segments.csv", rows)
    return EXIT_OK


def cmd_track(args, flat, cfg):
    files = _image_files(args.inputs)
    out = _out_dir(args, flat)
    images = [load_image(f) for f in files]
    frames, tracks = track_sequence(images, cfg)

    (out / "labels").mkdir(exist_ok=True)
    for fr in frames:
        save_label_map(fr.segmentation.labels, out / "labels" / f"frame_{fr.frame:04d}.pgm")
    write_segment_csv(out / "segments.csv", [(fr.frame, fr.segmentation.segments) for fr in frames])
    dump_json({"frames": [{
        "frame": fr.frame,
        "contours": [{"track": tid, "points": pts}
                     for tid, pts in zip(fr.contours, contours_to_json(fr.contours.values()))],
        "skipped_segments": list(fr.skipped),
    } for fr in frames]}, out / "contours.json")
    dump_json([fr.alignment.to_dict() for fr in frames[1:]], out / "alignments.json")
    dump_json(tracks_to_dict(tracks), out / "tracks.json")
    with open(out / "mobility.csv", "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(MOBILITY_CSV_HEADER)
        wr.writerows(mobility_rows(mobility_stats(tracks)))
    if args.overlay:
        (out / "overlays").mkdir(exist_ok=True)
        for img, fr in zip(images, frames):
            save_overlay(out / "overlays" / f"frame_{fr.frame:04d}.png", img, fr.contours)
    log.info("%d frames, %d tracks", len(frames), len(tracks))
    return EXIT_OK


def cmd_synth(args, flat, cfg):
    spec = load_scene(args.scene)
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    spec.validate()
    out = _out_dir(args, flat)
    frames, truth = render_sequence(spec)
    (out / "truth").mkdir(exist_ok=True)
    with open(out / "truth" / "cells.csv", "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["frame", "id", "area", "cx", "cy"])
        for f, (img, lab) in enumerate(zip(frames, truth.labels)):
            save_pgm(img, out / f"frame_{f:04d}.pgm")
            save_label_map(lab, out / "truth" / f"labels_{f:04d}.pgm")
            for cid in sorted(truth.pixels[f]):
                cx, cy = truth.centroids[f][cid]
                wr.writerow([f, cid, len(truth.pixels[f][cid]), f"{cx:.6f}", f"{cy:.6f}"])
    dump_json(spec.to_dict(), out / "scene.json")
    if args.overlay:
        log.info("--overlay has no effect for synth")
    return EXIT_OK


def cmd_compare(args, flat, cfg):
    files = _image_files([args.input])
    truth_dir = Path(args.truth)
    if not truth_dir.is_dir():
        raise FileNotFoundError(f"no such directory: {truth_dir}")
    truth_files = sorted(q for q in truth_dir.iterdir() if q.is_file() and q.suffix.lower() == ".pgm")
    if not truth_files:
        raise DataError(f"no ground-truth label maps in {truth_dir}")
    if len(truth_files) != len(files):
        raise DataError(f"{len(files)} frames but {len(truth_files)} ground-truth maps")
    images = [load_image(f) for f in files]
    truths = [read_label_map(f) > 0 for f in truth_files]
    for i, (img, t) in enumerate(zip(images, truths)):
        if img.shape != t.shape:
            raise DataError(f"frame {i}: image {img.shape} and ground truth {t.shape} differ in size")
    out = _out_dir(args, flat)
    frames, _ = track_sequence(images, cfg)
    rows = []
    for i, (img, t, fr) in enumerate(zip(images, truths, frames)):
        plain_c = plain_snake(img, cfg, flat["compare.margin"]).contour
        rows.append([i, "plain", f"{mask_jaccard(contour_mask(plain_c, *img.shape), t):.6f}"])
        rows.append([i, "hybrid", f"{mask_jaccard(frame_mask(fr), t):.6f}"])
        if args.overlay:
            (out / "overlays").mkdir(exist_ok=True)
            save_overlay(out / "overlays" / f"plain_{i:04d}.png", img, {0: plain_c})
            save_overlay(out / "overlays" / f"hybrid_{i:04d}.png", img, fr.contours)
    with open(out / "compare.csv", "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["frame", "method", "jaccard"])
        wr.writerows(rows)
    for r in rows:
        print(",".join(map(str, r)))
    return EXIT_OK


COMMANDS = {"segment": cmd_segment, "track": cmd_track, "synth": cmd_synth, "compare": cmd_compare}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="cellsnake: %(levelname)s: %(message)s", stream=sys.stderr)
    try:
        flat = cfgmod.resolve(args.config, args.overrides)
        cfg = cfgmod.pipeline_config(flat)
        return COMMANDS[args.command](args, flat, cfg)
    except ConfigError as exc:
        print(f"cellsnake: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError, ValueError) as exc:
        print(f"cellsnake: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
