"""How the sup-norm risk shrinks with the sample size.

For intervals of growing length we pick K from the bias/variance balance
and measure the Monte Carlo sup-norm MSE against a bump density. On a
log-log scale against log N / N the points line up with slope near 4/5.

Run:  python demos/risk_versus_size.py [--out DIR] [--replicates R]
"""
import argparse
import warnings
from pathlib import Path

import numpy as np

from mtspec import corollary_taper_count, make_interval
from mtspec.bench import fit_rate_slope, run_mse_experiment
from mtspec.fano import fano_density
from mtspec.svg import line_plot


def main(out: Path, replicates: int) -> None:
    out.mkdir(parents=True, exist_ok=True)
    S = fano_density(1, 4, 0.02, 1)
    sizes = np.array([64, 128, 256, 512, 1024])
    mse = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # this bump height sits above the unit C2 ball
        for N in sizes:
            dom = make_interval(int(N))
            K = corollary_taper_count(dom)
            rep = run_mse_experiment(S, dom, K, replicates=replicates, seed=int(N))
            mse.append(rep.mse)
            print(f"N = {N:5d}  K = {K:4d}  MSE = {rep.mse:.3e} +/- {rep.mse_se:.1e}")
    x = np.log(sizes) / sizes
    fit = fit_rate_slope(x, mse)
    print(f"fitted slope {fit.slope:.3f} +/- {fit.half_width:.3f}")
    ref = np.exp(fit.intercept) * x**0.8
    line_plot(out / "risk_versus_size.svg",
              [("MSE", x, mse, "marker"), ("slope 4/5", x, ref, "dash")],
              title="sup-norm MSE on intervals", xlabel="log N / N", ylabel="MSE", logx=True, logy=True)
    print(f"wrote plot to {out}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", type=Path, default=Path("demo_out"))
    p.add_argument("--replicates", type=int, default=100)
    a = p.parse_args()
    main(a.out, a.replicates)
