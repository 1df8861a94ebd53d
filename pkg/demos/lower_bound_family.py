"""A family of hard-to-distinguish densities.

Bump perturbations of the flat density 1/2 are placed at disjoint sites.
Any two members are far apart in sup norm, yet their Gaussian experiments
are close in KL divergence. Calibrating the bump height so the total KL
stays below (1/8) M log M makes the family a certificate that no estimator
can beat the rate by more than a constant.

Run:  python demos/lower_bound_family.py [--out DIR]
"""
import argparse
from pathlib import Path

import numpy as np

from mtspec.fano import (
    admissible_tau,
    build_fano_class,
    calibrate_tau,
    certify_fano_class,
    fano_class_size,
    kl_sum,
    lower_bound_rate,
)
from mtspec.domain import make_interval
from mtspec.svg import line_plot


def main(out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    omega = 100
    M = fano_class_size(omega, 1)
    eps = admissible_tau(1, 4)
    print(f"class size for omega = {omega}: M = {M}; bump heights below {eps:.5f} keep the C2 norm <= 1")

    fc = build_fano_class(1, 4, 0.5 * eps)
    checks = certify_fano_class(fc, p_cap=32)
    for name, c in checks.items():
        print(f"  {name:24s} {'ok' if c['ok'] else 'FAILED'}  ({c['value']:.4g})")

    xi = np.linspace(0, 1, 2001)[:-1]
    series = [(f"S_{n}", xi, S.value(xi), "line") for n, S in enumerate(fc.members, start=1)]
    line_plot(out / "fano_members.svg", series, title="bump perturbations of 1/2",
              xlabel="frequency", ylabel="S")

    tau = calibrate_tau(1, M, omega)
    kl = kl_sum(build_fano_class(1, M, tau), omega)
    print(f"calibrated tau = {tau:.5f}: sum KL = {kl.total:.4f} <= {kl.fano_threshold:.4f}")
    rate = lower_bound_rate(make_interval(1000)).rate
    print(f"lower-bound rate shape at N = 1000: {rate:.5f}")
    print(f"wrote plot to {out}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", type=Path, default=Path("demo_out"))
    main(p.parse_args().out)
