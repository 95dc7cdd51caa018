"""Command-line front end.

Subcommands:
  sweep   run a Monte Carlo experiment (config file and/or flags), write CSV
  bounds  evaluate any analytical bound for given parameters
  verify  empirical bound-violation study over lambda
  cost    operation-count table of the summation architectures

Config files are flat ``key = value`` text; every key corresponds to an
ExperimentConfig or PrecisionPolicy field, and command-line flags override
file values.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import bounds
from .formats import RangeMode, RoundingMode, get_format
from .harness import (
    ExperimentConfig,
    emit_csv,
    inner_product_violation_study,
    run_sweep,
    verify_bounds,
)
from .kernels import PolicyMode, PrecisionPolicy

_CONFIG_KEYS = {
    "scenario",
    "M_grid",
    "K",
    "rho_grid_db",
    "format",
    "format_high",
    "mode",
    "block_size",
    "rounding",
    "range_mode",
    "lambda",
    "trials",
    "seed",
    "csi",
    "csi_T",
    "csi_tau",
}


def parse_config_file(path) -> dict:
    """Parse flat ``key = value`` lines; '#' starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in _CONFIG_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = value
    return out


def _int_list(text: str):
    return tuple(int(v) for v in str(text).split(","))


def _float_list(text: str):
    return tuple(float(v) for v in str(text).split(","))


def build_config(values: dict) -> ExperimentConfig:
    """Build an ExperimentConfig from string-valued config/flag settings."""
    mode = PolicyMode(values.get("mode", "uniform-low"))
    policy = PrecisionPolicy(
        low=get_format(values.get("format", "fp16")),
        high=get_format(values.get("format_high", "fp64")),
        mode=mode,
        block_size=int(values.get("block_size", 32)),
        rounding=RoundingMode(values.get("rounding", "nearest-even")),
        range_mode=RangeMode(values.get("range_mode", "unbounded")),
    )
    tau = values.get("csi_tau")
    return ExperimentConfig(
        scenario=values["scenario"],
        M_grid=_int_list(values.get("M_grid", "64,128,256")),
        policy=policy,
        K=int(values.get("K", 4)),
        rho_grid_db=_float_list(values.get("rho_grid_db", "10")),
        lam=float(values.get("lambda", 1.0)),
        trials=int(values.get("trials", 500)),
        seed=int(values.get("seed", 0)),
        csi=values.get("csi", "perfect"),
        csi_T=int(values.get("csi_T", 196)),
        csi_tau=None if tau in (None, "", "none") else int(tau),
    )


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--scenario", choices=["SIMO", "MISO", "MU-SIMO", "MU-MISO"])
    p.add_argument("--M-grid", dest="M_grid", help="comma-separated antenna counts")
    p.add_argument("--K", type=int)
    p.add_argument("--rho-grid-db", dest="rho_grid_db", help="comma-separated SNRs in dB")
    p.add_argument("--format", help="working format name")
    p.add_argument("--format-high", dest="format_high")
    p.add_argument("--mode", choices=[m.value for m in PolicyMode])
    p.add_argument("--block-size", dest="block_size", type=int)
    p.add_argument("--rounding", choices=[m.value for m in RoundingMode])
    p.add_argument("--range-mode", dest="range_mode", choices=[m.value for m in RangeMode])
    p.add_argument("--lambda", dest="lambda_", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--csi", choices=["perfect", "mmse"])
    p.add_argument("--csi-T", dest="csi_T", type=int)
    p.add_argument("--csi-tau", dest="csi_tau", type=int)


def _gather_config(args) -> ExperimentConfig:
    values = parse_config_file(args.config) if args.config else {}
    for key in _CONFIG_KEYS:
        attr = "lambda_" if key == "lambda" else key
        v = getattr(args, attr, None)
        if v is not None:
            values[key] = v
    if "scenario" not in values:
        raise SystemExit("error: a scenario is required (flag or config file)")
    return build_config(values)


def _cmd_sweep(args) -> int:
    config = _gather_config(args)
    result = run_sweep(config)
    emit_csv(result, args.output)
    print(f"wrote {len(result.rows)} rows to {args.output}")
    return 0


def _cmd_verify(args) -> int:
    lambdas = tuple(float(v) for v in args.lambdas.split(","))
    if args.inner_n:
        values = parse_config_file(args.config) if args.config else {}
        fmt = get_format(args.format or values.get("format", "fp16"))
        policy = PrecisionPolicy.uniform(fmt)
        report = inner_product_violation_study(
            args.inner_n, policy, trials=args.trials or 10000,
            seed=args.seed or 0, lambdas=lambdas,
        )
        print(json.dumps(report, indent=2))
        return 0
    config = _gather_config(args)
    print(json.dumps(verify_bounds(config, lambdas), indent=2))
    return 0


_EVALUATORS = (
    "gamma_n",
    "gamma_n_det",
    "xi_bn",
    "delta_simo",
    "delta_miso",
    "lb_rate_simo",
    "lb_rate_miso",
    "rate_gap",
    "m_max_simo",
    "c1_u",
    "c_u",
    "c_d",
    "upsilon",
    "lb_sumrate_mu_simo",
    "lb_sumrate_mu_miso",
)


def _cmd_bounds(args) -> int:
    u = get_format(args.format).unit_roundoff
    u_h = get_format(args.format_high).unit_roundoff
    lam, M, K, n, b, rho = args.lambda_, args.M, args.K, args.n, args.block_size, args.rho
    name = args.evaluator
    if name == "gamma_n":
        value = bounds.gamma_n(n, u, lam)
    elif name == "gamma_n_det":
        value = bounds.gamma_n_det(n, u)
    elif name == "xi_bn":
        value = bounds.xi_bn(b, n, u, u_h, lam)
    elif name == "delta_simo":
        value = bounds.delta_simo(M, u, lam)
    elif name == "delta_miso":
        value = bounds.delta_miso(u, lam)
    elif name == "lb_rate_simo":
        value = bounds.lb_rate_simo(M, rho, u, lam).value_bits
    elif name == "lb_rate_miso":
        value = bounds.lb_rate_miso(M, rho, u, lam).value_bits
    elif name == "rate_gap":
        value = bounds.rate_gap(M, rho, u, lam)
    elif name == "m_max_simo":
        value = bounds.m_max_simo(rho, u, lam)
    elif name == "c1_u":
        value = bounds.c1_u(M, K, u, lam)
    elif name == "c_u":
        value = bounds.c_u(M, K, u, lam)
    elif name == "c_d":
        value = bounds.c_d(M, K, u, lam, args.kappa2)
    elif name == "upsilon":
        value = bounds.upsilon(M, K, args.method, samples=args.samples, seed=args.seed)
    elif name == "lb_sumrate_mu_simo":
        ups = bounds.upsilon(M, K, "monte-carlo", samples=args.samples, seed=args.seed)
        value = bounds.lb_sumrate_mu_simo(M, K, rho, u, lam, ups).value_bits
    elif name == "lb_sumrate_mu_miso":
        ecd = bounds.expected_cd_sq(M, K, u, lam, samples=args.samples, seed=args.seed)
        value = bounds.lb_sumrate_mu_miso(M, K, rho, u, lam, ecd).value_bits
    else:  # pragma: no cover - argparse restricts choices
        raise SystemExit(f"unknown evaluator {name}")
    print(f"{name} = {value}")
    return 0


def _cmd_cost(args) -> int:
    table = bounds.cost_model(args.m, args.n, args.p, args.block_size, args.G)
    print("arch,sums,mults,total")
    for key in ("C_m", "C_l", "C_h"):
        c = table[key]
        print(f"{key},{c.sums},{c.mults},{c.total}")
    print(f"# mixed summation overhead vs C_l: "
          f"{100.0 * bounds.cost_overhead(args.n, args.block_size, args.G):.4f}%")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fpmimo",
        description="Finite-precision arithmetic emulation for massive MIMO transceivers",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="run a Monte Carlo sweep and write CSV")
    _add_config_flags(p_sweep)
    p_sweep.add_argument("--output", "-o", required=True, help="output CSV path")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_bounds = sub.add_parser("bounds", help="evaluate an analytical bound")
    p_bounds.add_argument("evaluator", choices=_EVALUATORS)
    p_bounds.add_argument("--format", default="fp16")
    p_bounds.add_argument("--format-high", dest="format_high", default="fp32")
    p_bounds.add_argument("--lambda", dest="lambda_", type=float, default=1.0)
    p_bounds.add_argument("--M", type=int, default=128)
    p_bounds.add_argument("--K", type=int, default=4)
    p_bounds.add_argument("--n", type=int, default=1000)
    p_bounds.add_argument("--block-size", dest="block_size", type=int, default=32)
    p_bounds.add_argument("--rho", type=float, default=10.0, help="linear SNR")
    p_bounds.add_argument("--kappa2", type=float, default=1.0)
    p_bounds.add_argument("--method", choices=["monte-carlo", "quadrature"],
                          default="monte-carlo")
    p_bounds.add_argument("--samples", type=int, default=100000)
    p_bounds.add_argument("--seed", type=int, default=0)
    p_bounds.set_defaults(func=_cmd_bounds)

    p_verify = sub.add_parser("verify", help="empirical bound-violation rates")
    _add_config_flags(p_verify)
    p_verify.add_argument("--lambdas", default="0.5,1,3")
    p_verify.add_argument("--inner-n", dest="inner_n", type=int,
                          help="study raw inner products of this length instead")
    p_verify.set_defaults(func=_cmd_verify)

    p_cost = sub.add_parser("cost", help="operation-count model table")
    p_cost.add_argument("--m", type=int, default=1)
    p_cost.add_argument("--n", type=int, default=1000)
    p_cost.add_argument("--p", type=int, default=1)
    p_cost.add_argument("--block-size", dest="block_size", type=int, default=32)
    p_cost.add_argument("--G", type=int, default=2)
    p_cost.set_defaults(func=_cmd_cost)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
