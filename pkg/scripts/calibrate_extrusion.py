#!/usr/bin/env python3
"""Sweep the mock heightfield thickness against the rendered-sphere oracle.

Renders a unit sphere from the standard viewpoint, extrudes the depth map at
a range of thickness constants, and scores each extrusion against the true
visible surface. The minimum of this curve is where DEFAULT_THICKNESS should
sit; re-run after changing the renderer or viewpoint defaults.
"""
import argparse

import numpy as np

from propshape.depthmap import (render_depth, standard_viewpoint,
                                visible_surface_mesh)
from propshape.fixtures import icosphere, study_fixtures
from propshape.mesh import normalize_unit_sphere
from propshape.metrics import evaluate_pair
from propshape.mockmesh import DEFAULT_THICKNESS, extrude_heightfield


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--resolution", type=int, default=256)
    parser.add_argument("--samples", type=int, default=10_000)
    parser.add_argument("--sweep", type=float, nargs="*",
                        default=[0.7, 0.8, 0.85, 0.9, 0.95, 1.0, 1.1])
    parser.add_argument("--all-fixtures", action="store_true",
                        help="also score every bundled fixture at the "
                             "current default thickness")
    args = parser.parse_args()

    cam = standard_viewpoint()
    sphere = normalize_unit_sphere(icosphere(1.0, 3)).mesh
    depth = render_depth(sphere, cam, args.resolution, args.resolution)
    visible = visible_surface_mesh(sphere, cam, args.resolution,
                                   args.resolution)

    print(f"sphere sweep at {args.resolution}px, {args.samples} samples "
          f"(current default {DEFAULT_THICKNESS}):")
    best = (None, np.inf)
    for k in args.sweep:
        generated = extrude_heightfield(depth, (0.8, 0.5, 0.5), seed=1,
                                        thickness=k)
        report = evaluate_pair(visible, generated, n_samples=args.samples,
                               seed=3)
        marker = ""
        if report.chamfer < best[1]:
            best = (k, report.chamfer)
            marker = "  <-- best so far"
        print(f"  k={k:5.2f}: chamfer={report.chamfer:.4f} "
              f"hausdorff={report.hausdorff:.4f}{marker}")
    print(f"best thickness {best[0]} (chamfer {best[1]:.4f})")

    if args.all_fixtures:
        print("\nper-fixture check at the default thickness:")
        for name, mesh in study_fixtures().items():
            norm = normalize_unit_sphere(mesh).mesh
            d = render_depth(norm, cam, args.resolution, args.resolution)
            generated = extrude_heightfield(d, (0.8, 0.5, 0.5), seed=1)
            vis = visible_surface_mesh(norm, cam, args.resolution,
                                       args.resolution)
            report = evaluate_pair(vis, generated, n_samples=args.samples,
                                   seed=3)
            print(f"  {name:9s}: chamfer={report.chamfer:.4f} "
                  f"hausdorff={report.hausdorff:.4f}")


if __name__ == "__main__":
    main()
