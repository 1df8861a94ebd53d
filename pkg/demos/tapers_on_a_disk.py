"""Slepian tapers on an irregular 2-D domain.

We build a lattice disk, ask for the tapers of a square band of side W and
look at how much of each taper's energy the band captures. The leading
tapers are almost perfectly concentrated and the concentration decays
around the Shannon number N W^2, which is why the taper count is tied to W.

Run:  python demos/tapers_on_a_disk.py [--out DIR]
"""
import argparse
from pathlib import Path

import numpy as np

from mtspec import TaperConfig, compute_tapers, make_disk
from mtspec.svg import heat_map, line_plot


def main(out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    disk = make_disk(12)
    W = 0.25
    full = compute_tapers(disk, TaperConfig(W, 60))
    shannon = disk.cardinality * W**2
    print(f"disk: N = {disk.cardinality}, perimeter = {disk.perimeter}, diameter = {disk.diameter:.2f}")
    print(f"Shannon number N W^2 = {shannon:.1f}")
    for k in (0, 10, 20, 30, 36, 40, 50, 59):
        print(f"  taper {k + 1:2d}: concentration {full.eigenvalues[k]:.6f}")

    k = np.arange(1, 61)
    line_plot(out / "disk_concentration.svg",
              [("eigenvalue", k, full.eigenvalues, "marker"),
               ("N W^2", [shannon, shannon], [0, 1], "dash")],
              title="Concentration of disk tapers", xlabel="taper index", ylabel="lambda")
    # the first and the tenth taper on the bounding box
    box = full.on_box()
    for idx in (0, 9):
        heat_map(out / f"disk_taper_{idx + 1}.svg", box[idx], title=f"taper {idx + 1}")
    print(f"wrote plots to {out}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", type=Path, default=Path("demo_out"))
    main(p.parse_args().out)
