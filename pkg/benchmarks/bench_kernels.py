"""Time the compiled kernels against the numpy fallbacks on evolver- and Douglas-sized inputs."""

import argparse
import timeit

import numpy as np

from plateaulab import _pykernels
from plateaulab.builders import cylinder_mesh
from plateaulab.sliding import BoundaryPiece

try:
    from plateaulab import _ckernels
except ImportError:
    _ckernels = None


def cases():
    pieces = [BoundaryPiece.circle((0, 0, z), (0, 0, 1), 1.0) for z in (0.3, -0.3)]
    for n, rings in ((24, 16), (64, 48), (128, 96)):
        m = cylinder_mesh(pieces, (0, 1), n, rings)
        yield f"tri_area_grad {len(m.triangles)} tris", "tri_area_grad", (m.vertices, m.triangles)
    for N in (128, 512, 1024):
        t = 2 * np.pi * np.arange(N) / N
        G = np.column_stack([np.cos(t), 0.5 * np.sin(t), np.zeros(N)])
        k = np.zeros(N)
        m = np.arange(1, N)
        k[1:] = 1.0 / (16 * np.pi * np.sin(np.pi * m / N) ** 2)
        yield f"douglas_pairs N={N}", "douglas_pairs", (G, k)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = [("python", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])
    print(f"{'case':32s}" + "".join(f"{b:>14s}" for b, _ in backends) + f"{'speedup':>10s}")
    for label, fn, argv in cases():
        times = []
        for _, mod in backends:
            f = getattr(mod, fn)
            number = max(1, int(0.2 / max(timeit.timeit(lambda: f(*argv), number=1), 1e-6)))
            best = min(timeit.repeat(lambda: f(*argv), number=number, repeat=args.repeat)) / number
            times.append(best)
        speed = f"{times[0] / times[1]:9.1f}x" if len(times) == 2 else "      n/a"
        print(f"{label:32s}" + "".join(f"{1e3 * t:11.3f} ms" for t in times) + f" {speed}")


if __name__ == "__main__":
    main()
