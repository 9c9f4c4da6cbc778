"""Time the hot kernels under the pure-Python and compiled backends.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from cellsnake import _backend
from cellsnake.snake import circle_contour
from cellsnake.synth import CellSpec, SceneSpec, render_frame


def workloads(rng):
    spec = SceneSpec(128, 128, 0.2, 0.0, [CellSpec([(40, 40)], 18, 0.5), CellSpec([(90, 85)], 22, 0.5)])
    img, lab = render_frame(spec, 0)
    mask = (rng.random((256, 256)) < 0.45).astype(np.uint8)
    blob = (lab == 2).astype(np.uint8)
    ys, xs = np.nonzero(blob)
    sx, sy = int(xs[0]), int(ys[0])
    field = rng.random((256, 256))
    px = rng.uniform(0, 255, 20000)
    py = rng.uniform(0, 255, 20000)
    poly = circle_contour(64, 64, 50, n=400).points
    return {
        "label8 256x256 noise": lambda b: b.label8(mask),
        "moore_trace r=22 disk": lambda b: b.moore_trace(blob, sx, sy),
        "bilinear 20k samples": lambda b: b.bilinear(field, px, py),
        "fill_polygon 400-gon 128x128": lambda b: b.fill_polygon(poly, 128, 128),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    jobs = workloads(np.random.default_rng(0))
    names = sorted(_backend.available_backends(), key=lambda n: n != "python")
    print(f"{'kernel':32s}" + "".join(f"{n:>14s}" for n in names) + ("    speedup" if len(names) > 1 else ""))
    for label, fn in jobs.items():
        times = []
        for n in names:
            mod = _backend.BACKENDS[n]
            number = 1 if n == "python" else 20
            t = min(timeit.repeat(lambda: fn(mod), number=number, repeat=args.repeat)) / number
            times.append(t)
        row = f"{label:32s}" + "".join(f"{t * 1e3:12.3f}ms" for t in times)
        if len(times) > 1:
            row += f"{times[0] / times[1]:9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
