"""Command-line front end.

Subcommands write CSV files (the record of a run) into ``--out`` and,
with ``--svg``, a plot next to them. Exit codes: 0 success, 2 configuration
or validation error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import math
import os
import re
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import svg
from .bench import fit_rate_slope, run_mse_experiment, write_metadata, write_risk_csv
from .domain import AcquisitionDomain, make_disk, make_interval, make_rectangle, random_blob, read_domain
from .estimator import (
    FrequencyGrid,
    ProcessSample,
    corollary_rate,
    corollary_taper_count,
    multitaper_estimate,
    write_estimate_csv,
    write_lag_csv,
)
from .process import (
    NotSamplableError,
    build_circulant_model,
    density_from_spec,
    read_sample_csv,
    replicate_generators,
    sample_on_domain,
    write_sample_csv,
)
from .slepian import EigenSolverError, TaperConfig, compute_tapers, default_taper_count, write_taper_csv

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    domain: str | None = None
    density: str | None = None
    w: float | None = None
    k: int | None = None
    oversample: int = 4
    replicates: int = 100
    seed: int = 0
    out: Path = Path(".")
    threads: int | None = None
    svg: bool = False
    extra: dict = field(default_factory=dict)


_CALL_RE = re.compile(r"^\s*([a-z_]+)\s*\(([^)]*)\)\s*$")


def parse_domain(text: str) -> AcquisitionDomain:
    """``interval(N)``, ``rectangle(a,b,...)``, ``disk(r[,d])``, ``blob(steps,d[,seed])`` or a file."""
    m = _CALL_RE.match(text)
    if m is None:
        path = Path(text)
        if not path.is_file():
            raise ConfigError(f"domain {text!r} is neither a builtin spec nor an existing file")
        return read_domain(path)
    name = m.group(1)
    args = [a.strip() for a in m.group(2).split(",") if a.strip()]
    try:
        if name == "interval" and len(args) == 1:
            return make_interval(int(args[0]))
        if name == "rectangle" and args:
            return make_rectangle([int(a) for a in args])
        if name == "disk" and len(args) in (1, 2):
            return make_disk(float(args[0]), int(args[1]) if len(args) == 2 else 2)
        if name == "blob" and len(args) in (2, 3):
            return random_blob(int(args[0]), int(args[1]), int(args[2]) if len(args) == 3 else 0)
    except ValueError as exc:
        raise ConfigError(f"bad domain spec {text!r}: {exc}") from exc
    raise ConfigError(f"unknown domain spec {text!r}")


def _threads(value) -> int | None:
    if value is None:
        env = os.environ.get("MTSPEC_THREADS")
        if not env:
            return None
        value = env
    try:
        n = int(value)
    except ValueError as exc:
        raise ConfigError(f"thread count must be an integer, got {value!r}") from exc
    if n < 1:
        raise ConfigError("thread count must be >= 1")
    return n


def _taper_setup(cfg: RunConfig, domain: AcquisitionDomain):
    N = domain.cardinality
    d = domain.dimension
    if (cfg.w is None) == (cfg.k is None):
        raise ConfigError("give exactly one of --w and --k")
    if cfg.w is not None:
        if not 0.0 < cfg.w <= 1.0:
            raise ConfigError(f"--w must lie in (0, 1], got {cfg.w}")
        return cfg.w, default_taper_count(domain, cfg.w)
    if not 1 <= cfg.k <= N:
        raise ConfigError(f"--k must lie in [1, N={N}], got {cfg.k}")
    return min(1.0, (cfg.k / N) ** (1.0 / d)), cfg.k


def _prepare_out(cfg: RunConfig) -> Path:
    try:
        cfg.out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {cfg.out}: {exc}") from exc
    if not os.access(cfg.out, os.W_OK):
        raise ConfigError(f"output directory {cfg.out} is not writable")
    return cfg.out


def cmd_tapers(cfg: RunConfig) -> int:
    if cfg.domain is None:
        raise ConfigError("--domain is required")
    domain = parse_domain(cfg.domain)
    W, K = _taper_setup(cfg, domain)
    out = _prepare_out(cfg)
    tapers = compute_tapers(domain, TaperConfig(W, K))
    write_taper_csv(tapers, out / "tapers.csv")
    with open(out / "eigenvalues.txt", "w") as fh:
        fh.write(f"# N={domain.cardinality} W={W!r} K={K}\n")
        for v in tapers.eigenvalues:
            fh.write(f"{float(v)!r}\n")
    if cfg.svg and domain.dimension == 1:
        x = domain.points[:, 0]
        series = [(f"taper {k}", x, tapers.tapers[k], "line") for k in range(min(K, 4))]
        svg.line_plot(out / "tapers.svg", series, title=f"Slepian tapers, N={domain.cardinality}, W={W:.4g}",
                      xlabel="n", ylabel="taper value")
    print(f"wrote {K} tapers for N={domain.cardinality}, W={W:.6g} to {out}")
    return EXIT_OK


def _load_or_simulate(cfg: RunConfig, domain: AcquisitionDomain | None):
    sample_path = cfg.extra.get("sample")
    if sample_path is not None:
        path = Path(sample_path)
        if not path.is_file():
            raise ConfigError(f"sample file {path} not found")
        try:
            points, values = read_sample_csv(path)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if domain is None:
            return AcquisitionDomain(points), values
        if points.shape != domain.points.shape:
            raise ConfigError(
                f"sample has {points.shape[0]} points in dimension {points.shape[1]}, "
                f"domain has {domain.cardinality} in dimension {domain.dimension}"
            )
        order = np.lexsort(points.T[::-1])
        if not np.array_equal(points[order], domain.points):
            raise ConfigError("sample points do not match the domain points")
        return domain, values[order]
    if domain is None:
        raise ConfigError("--domain is required when no --sample is given")
    if cfg.density is None:
        raise ConfigError("give --sample or --density to simulate one")
    density = density_from_spec(cfg.density, domain.dimension)
    model = build_circulant_model(density, max(domain.degree, 1))
    values = sample_on_domain(model, domain, replicate_generators(cfg.seed, 1)[0])
    return domain, values


def cmd_simulate(cfg: RunConfig) -> int:
    if cfg.domain is None or cfg.density is None:
        raise ConfigError("--domain and --density are required")
    domain = parse_domain(cfg.domain)
    _, values = _load_or_simulate(cfg, domain)
    out = _prepare_out(cfg)
    write_sample_csv(domain.points, values, out / "sample.csv")
    print(f"wrote sample of {domain.cardinality} values to {out / 'sample.csv'}")
    return EXIT_OK


def cmd_estimate(cfg: RunConfig) -> int:
    domain = parse_domain(cfg.domain) if cfg.domain is not None else None
    domain, values = _load_or_simulate(cfg, domain)
    W, K = _taper_setup(cfg, domain)
    if cfg.oversample < 1:
        raise ConfigError("--oversample must be >= 1")
    out = _prepare_out(cfg)
    tapers = compute_tapers(domain, TaperConfig(W, K))
    grid = FrequencyGrid(domain.dimension, cfg.oversample * max(domain.degree, 1))
    est = multitaper_estimate(ProcessSample(domain, values), tapers, grid, workers=_threads(cfg.threads))
    write_estimate_csv(est, out / "estimate.csv")
    write_lag_csv(est, out / "lags.csv")
    if cfg.svg:
        _plot_estimate(est, out / "estimate.svg")
    print(f"wrote estimate on a {grid.resolution}^{domain.dimension} grid to {out}")
    return EXIT_OK


def _plot_estimate(est, path):
    d = est.dimension
    if d == 1:
        xi = est.grid.points()[:, 0]
        order = np.argsort(xi)
        svg.line_plot(path, [("S_hat", xi[order], est.grid_values[order], "line")],
                      title="multi-taper estimate", xlabel="frequency", ylabel="S_hat")
    elif d == 2:
        R = est.grid.resolution
        vals = np.roll(est.grid_values, R // 2, axis=(0, 1))
        svg.heat_map(path, vals, title="multi-taper estimate")
    else:
        warnings.warn("no SVG plot for dimension > 2")


def _rate_domains(family: str, sizes):
    if family == "interval":
        return [make_interval(n) for n in sizes]
    if family == "square":
        return [make_rectangle((n, n)) for n in sizes]
    raise ConfigError(f"unknown family {family!r}")


def _rate_reference(d: int) -> str:
    return "(log diam / N)^(4/5)" if d == 1 else "(log diam / N^(1/d))^(4/3)"


def cmd_rate(cfg: RunConfig) -> int:
    family = cfg.extra.get("family", "interval")
    sizes = cfg.extra.get("sizes")
    if not sizes or len(sizes) < 3:
        raise ConfigError("--sizes needs at least 3 values")
    if sorted(set(sizes)) != sorted(sizes):
        raise ConfigError("--sizes must be distinct")
    domains = _rate_domains(family, sorted(sizes))
    d = domains[0].dimension
    x = np.array([math.log(dom.diameter) / dom.cardinality ** (1.0 / d) for dom in domains])
    out = _prepare_out(cfg)
    synthetic = cfg.extra.get("synthetic")
    footer = [f"x = log(diam) / N^(1/d); slope of log MSE on log x; reference {_rate_reference(d)}"]
    if synthetic is not None:
        mse = x ** float(synthetic)
        with open(out / "rate.csv", "w") as fh:
            fh.write("N,diameter,x,mse\n")
            for dom, xv, yv in zip(domains, x, mse):
                fh.write(f"{dom.cardinality},{dom.diameter!r},{xv!r},{yv!r}\n")
            fit = fit_rate_slope(x, mse)
            fh.write(f"# synthetic power law with exponent {float(synthetic)!r}\n")
            fh.write(f"# {footer[0]}\n# slope={fit.slope!r} half_width={fit.half_width!r}\n")
    else:
        if cfg.density is None:
            raise ConfigError("--density is required unless --synthetic is given")
        if cfg.replicates < 2:
            raise ConfigError("--replicates must be >= 2")
        density = density_from_spec(cfg.density, d)
        workers = _threads(cfg.threads)
        reports = []
        for dom in domains:
            K = cfg.k if cfg.k is not None else corollary_taper_count(dom)
            reports.append(run_mse_experiment(density, dom, min(K, dom.cardinality), cfg.oversample,
                                              cfg.replicates, cfg.seed, workers))
        mse = np.array([r.mse for r in reports])
        fit = fit_rate_slope(x, mse)
        footer.append(f"slope={fit.slope!r} half_width={fit.half_width!r}")
        write_risk_csv(reports, out / "rate.csv", footer)
        write_metadata(out / "rate.json", command="rate", family=family, sizes=sorted(sizes),
                       density=cfg.density, seed=cfg.seed, replicates=cfg.replicates,
                       oversample=cfg.oversample, K=cfg.k)
    if cfg.svg:
        ref = np.array([corollary_rate(dom) for dom in domains])
        scale = math.exp(float(np.mean(np.log(mse) - np.log(ref))))
        N = [dom.cardinality for dom in domains]
        svg.line_plot(out / "rate.svg", [("empirical MSE", N, mse, "marker"),
                                         ("empirical MSE", N, mse, "line"),
                                         (f"C * {_rate_reference(d)}", N, scale * ref, "dash")],
                      title=f"sup-norm MSE, slope {fit.slope:.3f} +/- {fit.half_width:.3f}",
                      xlabel="N", ylabel="MSE", logx=True, logy=True)
    print(f"slope={fit.slope:.4f} +/- {fit.half_width:.4f} over {len(domains)} sizes")
    return EXIT_OK


def cmd_fano(cfg: RunConfig) -> int:
    from .fano import admissible_tau, build_fano_class, calibrate_tau, certify_fano_class, kl_sum, write_fano_report

    d, M, tau, omega = (cfg.extra[k] for k in ("d", "M", "tau", "omega"))
    if d < 1 or M < 1:
        raise ConfigError("--d and --M must be >= 1")
    if omega < 1:
        raise ConfigError("--omega must be >= 1")
    eps = admissible_tau(d, M)
    if tau is None:
        tau = calibrate_tau(d, M, omega)
    if not tau > 0:
        raise ConfigError(f"--tau must be positive, got {tau}")
    if tau >= eps and not cfg.extra.get("allow_inadmissible"):
        raise ConfigError(f"tau={tau} is not below epsilon={eps:.6g}; members would leave the C^2 unit ball")
    out = _prepare_out(cfg)
    fano = build_fano_class(d, M, tau, enforce_c2=False)
    checks = certify_fano_class(fano)
    kl = kl_sum(fano, omega)
    write_fano_report(fano, kl, checks, out / "fano.csv")
    print(f"fano class d={d} M={M} tau={tau:.6g} epsilon={eps:.6g} omega={omega}")
    for name, chk in checks.items():
        print(f"  {name:<24s} {'PASS' if chk['ok'] else 'FAIL'}  value={chk['value']:.6g}")
    print(f"  {'parseval_chain':<24s} {'PASS' if kl.parseval_ok else 'FAIL'}  "
          f"kl={kl.total:.6g} bound={kl.parseval_bound:.6g}")
    print(f"  {'fano_threshold':<24s} {'PASS' if kl.fano_ok else 'FAIL'}  "
          f"kl={kl.total:.6g} threshold={kl.fano_threshold:.6g}")
    return EXIT_OK


_COMMANDS = {
    "tapers": cmd_tapers,
    "estimate": cmd_estimate,
    "simulate": cmd_simulate,
    "rate": cmd_rate,
    "fano": cmd_fano,
}


def _int_list(text: str):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mtspec", description="Multi-taper spectral estimation on lattice domains.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, density=True, bandwidth=True):
        p.add_argument("--domain", help="interval(N), rectangle(a,b,..), disk(r[,d]), blob(steps,d[,seed]) or a file")
        if density:
            p.add_argument("--density", help="constant(c), cosine(c,a) or fano(d,M,tau,n)")
        if bandwidth:
            p.add_argument("--w", type=float, help="bandwidth W in (0, 1]")
            p.add_argument("--k", type=int, help="taper count K")
        p.add_argument("--oversample", type=int, default=4, help="grid points per unit of degree (default 4)")
        p.add_argument("--replicates", type=int, default=100, help="Monte Carlo replicates (default 100)")
        p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory (default .)")
        p.add_argument("--threads", type=int, help="FFT worker cap (falls back to MTSPEC_THREADS)")
        p.add_argument("--svg", action="store_true", help="also write an SVG plot")

    common(sub.add_parser("tapers", help="compute Slepian tapers"), density=False)
    p = sub.add_parser("estimate", help="multi-taper estimate of a sample")
    common(p)
    p.add_argument("--sample", help="CSV with columns x1..xd,value")
    common(sub.add_parser("simulate", help="draw a sample from the circulant model"), bandwidth=False)
    p = sub.add_parser("rate", help="empirical sup-norm risk across domain sizes")
    common(p)
    p.add_argument("--family", choices=("interval", "square"), default="interval")
    p.add_argument("--sizes", type=_int_list, default=[128, 256, 512, 1024, 2048, 4096],
                   help="comma-separated N (interval) or side length (square)")
    p.add_argument("--synthetic", type=float, help="skip simulation; inject MSE = x^EXPONENT")
    p = sub.add_parser("fano", help="certify a Fano class")
    common(p, density=False, bandwidth=False)
    p.add_argument("--d", type=int, default=1, help="dimension")
    p.add_argument("--M", type=int, default=4, help="class size")
    p.add_argument("--tau", type=float, help="amplitude (default: calibrated to the Fano threshold)")
    p.add_argument("--omega", type=int, default=100, help="circulant order for the KL sum")
    p.add_argument("--allow-inadmissible", action="store_true", help="run the checks even when tau >= epsilon")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    base = {f: getattr(ns, f, None) for f in ("domain", "density", "w", "k", "oversample", "replicates",
                                              "seed", "out", "threads", "svg")}
    extra = {k: v for k, v in vars(ns).items() if k not in base and k != "command"}
    return RunConfig(command=ns.command, extra=extra, **{k: v for k, v in base.items() if v is not None})


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    cfg = config_from_args(ns)
    try:
        _threads(cfg.threads)
        return _COMMANDS[cfg.command](cfg)
    except (EigenSolverError, NotSamplableError, np.linalg.LinAlgError) as exc:
        print(f"mtspec: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"mtspec: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
