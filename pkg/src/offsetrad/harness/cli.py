"""Command-line entry point: ``offsetrad <subcommand> ...``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from ..chaining import GreedyEntropy, LipschitzEntropy, chaining_bound, greedy_cover
from ..core import (
    LinearClass,
    difference_star_hull,
    read_dictionary_csv,
    read_linear_csv,
    read_matrix_csv,
    read_sample_csv,
    shifted_star_class,
)
from ..estimators import star_estimator
from ..geometry import DEFAULT_C, audit_random_instances
from ..offset import (
    LocalizedLinear,
    LocalizedSegments,
    critical_radius,
    isometry_ratio,
    offset_mc,
    parse_convention,
)
from .config import ConfigError, ExperimentConfig
from .experiments import run_experiment
from .run import run as run_config_file
from .run import write_json, write_result, write_table
from .scenarios import NoiseSpec, generate


def _grid(text: str) -> np.ndarray:
    """``"a,b,c"`` or ``"geom:lo:hi:k"`` or ``"lin:lo:hi:k"``."""
    if text.startswith(("geom:", "lin:")):
        kind, lo, hi, k = text.split(":")
        f = np.geomspace if kind == "geom" else np.linspace
        return f(float(lo), float(hi), int(k))
    return np.array([float(v) for v in text.split(",") if v.strip()])


def _int_grid(text: str) -> tuple:
    """``"128,256"`` or ``"pow2:7:13"``."""
    if text.startswith("pow2:"):
        _, a, b = text.split(":")
        return tuple(2**k for k in range(int(a), int(b) + 1))
    return tuple(int(v) for v in text.split(","))


def _load_class(kind: str, dict_path: str | None, sample):
    if kind == "finite":
        if not dict_path:
            raise SystemExit("--dict is required for --class finite")
        return read_dictionary_csv(dict_path)
    if kind == "linear":
        return read_linear_csv(dict_path) if dict_path else LinearClass(sample.x)
    if kind == "shifted_star":
        if not dict_path or sample is None or sample.fstar is None:
            raise SystemExit("--class shifted_star needs --dict and --data with an fstar column")
        return shifted_star_class(read_dictionary_csv(dict_path), sample.fstar)
    raise SystemExit(f"unknown class {kind!r}")


def cmd_fit(a):
    s = read_sample_csv(a.data)
    F = _load_class(a.cls, a.dict, s)
    fit = star_estimator(F, s)
    write_json(a.out, fit.to_dict())


def cmd_geom_check(a):
    N, n, mins, viol = audit_random_instances(a.trials, a.seed, a.c, a.tol)
    write_table(a.out, ("trial", "N", "n", "min_ratio", "violations"),
                [(t, int(x), int(y), float(m), int(v))
                 for t, (x, y, m, v) in enumerate(zip(N, n, mins, viol))])
    print(f"violations: {int(viol.sum())} / {a.trials}; min ratio {float(mins.min()):.6g}")


def cmd_offset(a):
    coef, noisy = parse_convention(a.convention)
    sample = read_sample_csv(a.data) if a.data else None
    cls = _load_class(a.cls, a.dict, sample)
    xi = None
    if noisy:
        if sample is None or sample.xi is None:
            raise SystemExit("noise conventions need --data with fstar/xi columns")
        xi = sample.xi
    est = offset_mc(cls, a.C, a.reps, a.seed, xi=xi, coef=coef)
    out = est.to_dict()
    out["convention"] = a.convention
    write_json(a.out, out)


def cmd_critrad(a):
    noise = NoiseSpec(a.noise, a.sigma, a.df)
    if a.scenario == "finite":
        prob = generate("finite", a.n, a.seed, N=a.N, m=a.m, noise=noise)
        tr = prob.truth
        diff = difference_star_hull(tr.dictionary)
        H = LocalizedSegments(diff.take(tr.sample_index), diff.gram(tr.law.probs))
        eta_hat = 1.0 - isometry_ratio(diff, tr.law, tr.sample_index)
    else:
        prob = generate(a.scenario, a.n, a.seed, p=a.p, noise=noise)
        H = LocalizedLinear(prob.cls, prob.truth.cov)
        eta_hat = 1.0 - isometry_ratio(prob.cls, prob.truth.law, prob.cls.features)
    kappa = a.kappa if a.kappa is not None else a.C * (1.0 - eta_hat)
    coef, noisy = parse_convention(a.convention)
    res = critical_radius(H, kappa, a.delta, a.C, a.reps, (a.r_lo, a.r_hi), seed=a.seed,
                          xi=prob.sample.xi if noisy else None, coef=coef)
    out = res.to_dict()
    out.update({"eta_hat": eta_hat, "scenario": a.scenario, "n": a.n, "C": a.C,
                "convention": a.convention})
    write_json(a.out, out)


def cmd_cover(a):
    P = read_matrix_csv(a.data)
    cov = greedy_cover(P, a.delta)
    write_json(a.out, cov.to_dict())


def cmd_chain_bound(a):
    gammas = _grid(a.gamma_grid)
    alphas = _grid(a.alpha_grid)
    if a.data:
        P = read_matrix_csv(a.data)
        src, n = GreedyEntropy(P), P.shape[1]
    elif a.entropy == "lipschitz":
        if a.n is None:
            raise SystemExit("--n is required with --entropy lipschitz")
        src, n = LipschitzEntropy(), a.n
    else:
        raise SystemExit("give --data or --entropy lipschitz")
    b = chaining_bound(src, a.C, gammas, alphas, n=n)
    write_json(a.out, b.to_dict())


def _experiment_cli(kind, scenario, a, **extra):
    cfg = ExperimentConfig(
        kind=kind, scenario=scenario, n_grid=_int_grid(a.n_grid), trials=a.trials, seed=a.seed,
        noise=extra.pop("noise", None), specification=extra.pop("specification", "well"),
        class_spec=extra.pop("class_spec", {}), params=extra.pop("params", {}),
        name=extra.pop("name", None),
    )
    res = run_experiment(cfg)
    Path(a.out_dir).mkdir(parents=True, exist_ok=True)
    csv_path, json_path = write_result(a.out_dir, res)
    print(f"wrote {csv_path} and {json_path}")
    fit = res.summary.get("fit")
    if fit:
        print(f"slope {fit['slope']:.4f}, r^2 {fit['r2']:.4f}")
    return res


def cmd_rates(a):
    if a.experiment == "parametric":
        _experiment_cli("parametric_rate", "well_linear", a, class_spec={"p": a.p},
                        noise=NoiseSpec("gaussian", a.sigma))
    elif a.experiment == "finite":
        _experiment_cli("finite_aggregation", "finite", a, class_spec={"N": a.N, "m": a.m},
                        noise=NoiseSpec("gaussian", a.sigma), specification=a.specification)
    else:
        _experiment_cli("nonparametric_rate", "lipschitz", a, params={"C": a.C})


def cmd_dominance(a):
    noise = NoiseSpec(a.noise, a.sigma, a.df)
    _experiment_cli("dominance", "finite", a, noise=noise, specification=a.specification,
                    class_spec={"N": a.N, "m": a.m}, params={"C": a.C})


def cmd_minimax_lb(a):
    params = {"c": a.c}
    if a.lambda_grid:
        params["lambda_grid"] = a.lambda_grid
    _experiment_cli("minimax_lower", "finite", a, class_spec={"N": a.N}, params=params)


def cmd_run(a):
    out = run_config_file(a.config, a.out_dir)
    print(f"results in {out}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="offsetrad", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="two-step Star fit on a CSV sample")
    f.add_argument("--class", dest="cls", choices=["finite", "linear"], required=True)
    f.add_argument("--data", required=True, help="sample CSV (x_1..x_d, y[, fstar, xi])")
    f.add_argument("--dict", help="dictionary CSV (one member per row) or linear features")
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_fit)

    g = sub.add_parser("geom-check", help="audit the geometric inequality on random classes")
    g.add_argument("--trials", type=int, default=1000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--c", type=float, default=DEFAULT_C)
    g.add_argument("--tol", type=float, default=1e-9)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_geom_check)

    o = sub.add_parser("offset", help="Monte Carlo offset Rademacher complexity")
    o.add_argument("--class", dest="cls", choices=["finite", "linear", "shifted_star"],
                   required=True)
    o.add_argument("--dict")
    o.add_argument("--data", help="sample CSV; required for noise conventions")
    o.add_argument("--C", type=float, required=True)
    o.add_argument("--reps", type=int, default=10_000)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--convention", default="1eps",
                   choices=["1eps", "2eps", "1eps-noise", "2eps-noise"])
    o.add_argument("--out", required=True)
    o.set_defaults(func=cmd_offset)

    c = sub.add_parser("critrad", help="critical radius on a synthetic scenario")
    c.add_argument("--scenario", choices=["finite", "well_linear", "misspec_linear"],
                   default="finite")
    c.add_argument("--n", type=int, default=256)
    c.add_argument("--N", type=int, default=6)
    c.add_argument("--m", type=int, default=16)
    c.add_argument("--p", type=int, default=5)
    c.add_argument("--noise", choices=["gaussian", "student_t", "uniform"], default="gaussian")
    c.add_argument("--sigma", type=float, default=1.0)
    c.add_argument("--df", type=float, default=5.0)
    c.add_argument("--kappa", type=float, help="default: C (1 - eta_hat) on the drawn design")
    c.add_argument("--delta", type=float, default=0.05)
    c.add_argument("--C", type=float, default=1.0)
    c.add_argument("--reps", type=int, default=2000)
    c.add_argument("--r-lo", type=float, default=1e-4)
    c.add_argument("--r-hi", type=float, default=10.0)
    c.add_argument("--convention", default="2eps-noise", choices=["2eps", "2eps-noise"])
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_critrad)

    v = sub.add_parser("cover", help="greedy cover of a finite class sample")
    v.add_argument("--data", required=True, help="CSV, one member per row")
    v.add_argument("--delta", type=float, required=True)
    v.add_argument("--out", required=True)
    v.set_defaults(func=cmd_cover)

    b = sub.add_parser("chain-bound", help="chaining bound on the offset complexity")
    b.add_argument("--C", type=float, required=True)
    b.add_argument("--gamma-grid", default="geom:0.001:2:200")
    b.add_argument("--alpha-grid", default="0")
    b.add_argument("--data", help="class sample CSV (greedy entropy)")
    b.add_argument("--entropy", choices=["lipschitz"])
    b.add_argument("--n", type=int)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_chain_bound)

    def common(sp, n_grid, trials):
        sp.add_argument("--n-grid", default=n_grid)
        sp.add_argument("--trials", type=int, default=trials)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out-dir", required=True)

    r = sub.add_parser("rates", help="rate experiments with log-log slope fits")
    r.add_argument("--experiment", choices=["parametric", "finite", "nonparametric"],
                   required=True)
    r.add_argument("--p", type=int, default=5)
    r.add_argument("--N", type=int, default=32)
    r.add_argument("--m", type=int, default=32)
    r.add_argument("--sigma", type=float, default=1.0)
    r.add_argument("--C", type=float, default=0.25)
    r.add_argument("--specification", choices=["well", "misspecified"], default="well")
    common(r, "pow2:7:13", 1000)
    r.set_defaults(func=cmd_rates)

    d = sub.add_parser("dominance", help="stochastic dominance diagnostic table")
    d.add_argument("--N", type=int, default=6)
    d.add_argument("--m", type=int, default=16)
    d.add_argument("--C", type=float, default=1.0)
    d.add_argument("--noise", choices=["gaussian", "student_t", "uniform"], default="gaussian")
    d.add_argument("--sigma", type=float, default=1.0)
    d.add_argument("--df", type=float, default=5.0)
    d.add_argument("--specification", choices=["well", "misspecified"], default="well")
    common(d, "200", 1000)
    d.set_defaults(func=cmd_dominance)

    mm = sub.add_parser("minimax-lb", help="exhaustive minimax lower-bound comparison")
    mm.add_argument("--N", type=int, default=3)
    mm.add_argument("--c", type=int, default=1)
    mm.add_argument("--lambda-grid", type=int)
    common(mm, "2,3,4", 10)
    mm.set_defaults(func=cmd_minimax_lb)

    u = sub.add_parser("run", help="run every experiment of a JSON config")
    u.add_argument("config")
    u.add_argument("--out-dir")
    u.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"offsetrad {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
