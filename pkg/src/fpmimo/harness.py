"""Monte Carlo experiments: channel generation, rate/error sweeps, CSV output.

Signals and noise are always built in full precision; only the transceiver
computation runs under the configured precision policy.  Inside each trial
the same transceiver algorithm is rerun with a 64-bit policy on the same
pre-rounded inputs (identical summation order), so the measured difference
isolates arithmetic rounding error from input-representation error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import bounds
from .formats import FP64, RangeMode, RoundingMode
from .kernels import PolicyMode, PrecisionPolicy, round_input
from .transceiver import mrc_combine, mrt_precode, zf_detect_ne, zf_precode_ne

__all__ = [
    "ExperimentConfig",
    "SweepResult",
    "CSV_COLUMNS",
    "draw_channel",
    "estimate_channel_mmse",
    "run_sweep",
    "verify_bounds",
    "inner_product_violation_study",
    "emit_csv",
    "read_csv",
]

_SCENARIOS = ("SIMO", "MISO", "MU-SIMO", "MU-MISO")

# Fixed chunk sizes keep RNG consumption (and thus results) independent of
# trial count while bounding peak memory of the batched kernels.
_CHUNK_SINGLE = 1024
_CHUNK_MU = 64


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep: a scenario, parameter grids, a precision policy, and seeds."""

    scenario: str
    M_grid: tuple
    policy: PrecisionPolicy
    K: int = 4
    rho_grid_db: tuple = (10.0,)
    lam: float = 1.0
    trials: int = 500
    seed: int = 0
    csi: str = "perfect"  # or "mmse"
    csi_T: int = 196
    csi_tau: int | None = None

    def __post_init__(self) -> None:
        if self.scenario not in _SCENARIOS:
            raise ValueError(f"scenario must be one of {_SCENARIOS}")
        if self.trials < 1 or not self.M_grid or not len(self.rho_grid_db):
            raise ValueError("trials >= 1 and nonempty grids required")
        if self.csi not in ("perfect", "mmse"):
            raise ValueError("csi must be 'perfect' or 'mmse'")
        if self.csi == "mmse" and self.tau < self.K:
            raise ValueError("pilot length tau must be >= K")

    @property
    def tau(self) -> int:
        return self.K if self.csi_tau is None else self.csi_tau


@dataclass
class SweepResult:
    """Per-grid-point aggregates of a sweep, ready for CSV serialization."""

    config: ExperimentConfig
    rows: list = field(default_factory=list)


CSV_COLUMNS = [
    "scenario",
    "M",
    "K",
    "rho_db",
    "format",
    "mode",
    "block_size",
    "lambda",
    "mean_rate",
    "rate_stderr",
    "median_rel_err",
    "p99_rel_err",
    "bound_violation_rate",
    "breakdown_rate",
    "trials",
    "seed",
]


def draw_channel(M: int, K: int, rng, size=()) -> np.ndarray:
    """iid CN(0, 1) channel matrix of shape size + (M, K), full precision."""
    if M < 1 or K < 1:
        raise ValueError("M and K must be positive")
    shape = tuple(size) + (M, K)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def estimate_channel_mmse(H, tau: int, rho: float, rng) -> np.ndarray:
    """MMSE pilot estimate of H with per-entry error variance 1/(tau*rho + 1).

    Hhat = c (H + w) with w iid CN(0, 1/(tau*rho)) and c = tau*rho/(tau*rho+1);
    the estimation error H - Hhat is independent of Hhat with entries
    CN(0, 1/(tau*rho + 1)).
    """
    if tau < 1 or rho <= 0:
        raise ValueError("tau >= 1 and rho > 0 required")
    H = np.asarray(H, dtype=np.complex128)
    p = tau * rho
    w = (rng.standard_normal(H.shape) + 1j * rng.standard_normal(H.shape)) / math.sqrt(2.0 * p)
    return (p / (p + 1.0)) * (H + w)


def _reference_policy(policy: PrecisionPolicy) -> PrecisionPolicy:
    """Same algorithmic path (mode, block size), all rounding disabled."""
    return replace(
        policy,
        low=FP64,
        high=FP64,
        rounding=RoundingMode.NEAREST_EVEN,
        range_mode=RangeMode.UNBOUNDED,
    )


def _unit_symbols(rng, shape):
    return np.exp(2j * np.pi * rng.random(shape))


def _noise(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def _round_rng(policy: PrecisionPolicy, ss):
    if policy.rounding is RoundingMode.STOCHASTIC:
        return np.random.default_rng(ss)
    return None


def _pilot_factor(config: ExperimentConfig) -> float:
    if config.csi == "mmse":
        return (config.csi_T - config.tau) / config.csi_T
    return 1.0


# -- per-scenario trial batches ---------------------------------------------
# Each returns a dict of per-trial arrays:
#   rate        per-trial achievable rate (sum over users), bits/s/Hz
#   rel_err     relative rounding error of the transceiver output
#   err_abs     absolute rounding error (2-norm)
#   scale       lambda-independent factor multiplying the bound constant
#   kappa       spectral condition number of the Gram matrix (MU only)
#   breakdown   Cholesky breakdown flags


def _batch_simo(c, M, rho, config, rng, rng_round):
    policy = config.policy
    ref = _reference_policy(policy)
    h = draw_channel(M, 1, rng, (c,))[..., 0]
    x = _unit_symbols(rng, (c,))
    z = math.sqrt(rho) * h * x[:, None] + _noise(rng, (c, M))
    comb = h if config.csi == "perfect" else estimate_channel_mmse(h, config.tau, rho, rng)
    hq = round_input(comb, policy)
    zq = round_input(z, policy)
    r_fp = mrc_combine(hq, zq, policy, rng_round)
    r_ref = mrc_combine(hq, zq, ref)
    err = np.abs(np.asarray(r_fp) - np.asarray(r_ref))
    if config.csi == "perfect":
        hn2 = np.linalg.norm(hq, axis=-1) ** 2
        sig = rho * hn2**2
        noise_p = hn2
    else:
        sig = rho * np.abs(np.einsum("cm,cm->c", hq.conj(), h)) ** 2
        noise_p = np.linalg.norm(hq, axis=-1) ** 2
    sinr = sig / (noise_p + err**2)
    return {
        "rate": np.log2(1.0 + sinr),
        "rel_err": err / np.abs(np.asarray(r_ref)),
        "err_abs": err,
        "scale": np.linalg.norm(hq, axis=-1) * np.linalg.norm(zq, axis=-1),
        "breakdown": np.zeros(c, dtype=bool),
    }


def _batch_miso(c, M, rho, config, rng, rng_round):
    policy = config.policy
    ref = _reference_policy(policy)
    h = draw_channel(M, 1, rng, (c,))[..., 0]
    x = _unit_symbols(rng, (c,))
    comb = h if config.csi == "perfect" else estimate_channel_mmse(h, config.tau, rho, rng)
    hn = comb / np.linalg.norm(comb, axis=-1, keepdims=True)
    hq = round_input(hn, policy)
    xq = round_input(x, policy)
    s_fp = mrt_precode(hq, xq, policy, rng_round, prenormalized=True)
    s_ref = mrt_precode(hq, xq, ref, prenormalized=True)
    ds = s_fp - s_ref
    err = np.linalg.norm(ds, axis=-1)
    # received y = sqrt(rho) h^H s + n with unit-power symbol and noise
    sig = rho * np.abs(np.einsum("cm,cm->c", h.conj(), s_ref)) ** 2
    interference = rho * np.abs(np.einsum("cm,cm->c", h.conj(), ds)) ** 2
    sinr = sig / (interference + 1.0)
    return {
        "rate": np.log2(1.0 + sinr),
        "rel_err": err,  # |x_d| = 1, so this is already the relative measure
        "err_abs": err,
        "scale": np.ones(c),
        "breakdown": np.zeros(c, dtype=bool),
    }


def _gram_diag_inv(G):
    """Diagonal of (G)^-1 for a batch of Hermitian K x K matrices."""
    Ginv = np.linalg.inv(G)
    return np.ascontiguousarray(np.diagonal(Ginv, axis1=-2, axis2=-1).real)


def _batch_mu_simo(c, M, rho, config, rng, rng_round):
    policy = config.policy
    ref = _reference_policy(policy)
    K = config.K
    H = draw_channel(M, K, rng, (c,))
    x = _unit_symbols(rng, (c, K))
    z = math.sqrt(rho) * np.einsum("cmk,ck->cm", H, x) + _noise(rng, (c, M))
    Hc = H if config.csi == "perfect" else estimate_channel_mmse(H, config.tau, rho, rng)
    Hq = round_input(Hc, policy)
    zq = round_input(z, policy)
    r_fp, breakdown = zf_detect_ne(Hq, zq, policy, rng_round, error="mask")
    r_ref = zf_detect_ne(Hq, zq, ref)
    dr = r_fp - r_ref
    G = np.einsum("cmk,cml->ckl", Hq.conj(), Hq)
    dinv = _gram_diag_inv(G)
    if config.csi == "perfect":
        sinr = rho / (dinv + np.abs(dr) ** 2)
    else:
        Geff = np.linalg.solve(G, np.einsum("cmk,cml->ckl", Hq.conj(), H))
        diag = np.abs(np.diagonal(Geff, axis1=-2, axis2=-1)) ** 2
        cross = np.sum(np.abs(Geff) ** 2, axis=-1) - diag
        sinr = rho * diag / (rho * cross + dinv + np.abs(dr) ** 2)
    err = np.linalg.norm(dr, axis=-1)
    ref_norm = np.linalg.norm(r_ref, axis=-1)
    kappa = np.linalg.cond(G, 2)
    return {
        "rate": np.sum(np.log2(1.0 + sinr), axis=-1),
        "rel_err": err / ref_norm,
        "err_abs": err,
        "scale": kappa * ref_norm,
        "kappa": kappa,
        "ref_norm": ref_norm,
        "breakdown": breakdown,
    }


def _batch_mu_miso(c, M, rho, config, rng, rng_round):
    policy = config.policy
    ref = _reference_policy(policy)
    K = config.K
    H = draw_channel(M, K, rng, (c,))
    x = _unit_symbols(rng, (c, K))
    Hc = H if config.csi == "perfect" else estimate_channel_mmse(H, config.tau, rho, rng)
    Hq = round_input(Hc, policy)
    xq = round_input(x, policy)
    s_fp, breakdown = zf_precode_ne(Hq, xq, policy, rng_round, error="mask")
    s_ref = zf_precode_ne(Hq, xq, ref)
    ds = s_fp - s_ref
    beta = M - K
    leak = rho * np.abs(np.einsum("cmk,cm->ck", H.conj(), ds)) ** 2
    if config.csi == "perfect":
        sinr = rho * beta / (leak + 1.0)
    else:
        G = np.einsum("cmk,cml->ckl", Hq.conj(), Hq)
        # effective gain of user k from the precoder built on the estimate
        Geff = np.swapaxes(
            np.linalg.solve(G, np.einsum("cmk,cml->ckl", Hq.conj(), H)), -1, -2
        ).conj()
        diag = np.abs(np.diagonal(Geff, axis1=-2, axis2=-1)) ** 2
        cross = np.sum(np.abs(Geff) ** 2, axis=-1) - diag
        sinr = rho * beta * diag / (rho * beta * cross + leak + 1.0)
    err = np.linalg.norm(ds, axis=-1)
    ref_norm = np.linalg.norm(s_ref, axis=-1)
    Gq = np.einsum("cmk,cml->ckl", Hq.conj(), Hq)
    kappa = np.linalg.cond(Gq, 2)
    return {
        "rate": np.sum(np.log2(1.0 + sinr), axis=-1),
        "rel_err": err / ref_norm,
        "err_abs": err,
        "scale": ref_norm,  # the bound constant c_d already carries kappa
        "kappa": kappa,
        "ref_norm": ref_norm,
        "breakdown": breakdown,
    }


_BATCHES = {
    "SIMO": _batch_simo,
    "MISO": _batch_miso,
    "MU-SIMO": _batch_mu_simo,
    "MU-MISO": _batch_mu_miso,
}


def _collect_point(config: ExperimentConfig, M: int, rho: float, grid_index: int):
    """Run all trials of one grid point; returns concatenated per-trial arrays."""
    if config.scenario in ("MU-SIMO", "MU-MISO") and M < config.K + 1:
        raise ValueError(f"M={M} too small for K={config.K}")
    ss = np.random.SeedSequence(config.seed, spawn_key=(grid_index,))
    ss_draw, ss_round = ss.spawn(2)
    rng = np.random.default_rng(ss_draw)
    rng_round = _round_rng(config.policy, ss_round)
    chunk = _CHUNK_MU if config.scenario.startswith("MU") else _CHUNK_SINGLE
    batch_fn = _BATCHES[config.scenario]
    parts = []
    done = 0
    while done < config.trials:
        c = min(chunk, config.trials - done)
        parts.append(batch_fn(c, M, rho, config, rng, rng_round))
        done += c
    return {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}


def _bound_constant(config: ExperimentConfig, M: int, lam: float, kappa=None):
    """Per-trial bound on err_abs, divided by the recorded scale factor."""
    u = config.policy.working.unit_roundoff
    scen = config.scenario
    if scen == "SIMO":
        return bounds.delta_simo(M, u, lam)
    if scen == "MISO":
        return bounds.delta_miso(u, lam)
    if scen == "MU-SIMO":
        return bounds.c_u(M, config.K, u, lam)
    # MU-MISO: the constant depends on the per-trial condition number
    c1 = bounds.c1_u(M, config.K, u, lam)
    g2k = math.sqrt(2 * config.K) * bounds.gamma_n(2 * config.K, u, lam)
    return c1 * kappa + g2k * (1.0 + c1 * kappa)


def run_sweep(config: ExperimentConfig) -> SweepResult:
    """Monte Carlo rate/error statistics over the (M, rho) grid."""
    result = SweepResult(config)
    policy = config.policy
    if policy.mode is PolicyMode.MIXED:
        fmt_name = f"{policy.low.name}+{policy.high.name}"
    else:
        fmt_name = policy.working.name
    pilot = _pilot_factor(config)
    gi = 0
    for M in config.M_grid:
        for rho_db in config.rho_grid_db:
            rho = 10.0 ** (rho_db / 10.0)
            data = _collect_point(config, M, rho, gi)
            gi += 1
            ok = ~data["breakdown"]
            n_ok = int(np.sum(ok))
            rate = pilot * data["rate"][ok]
            rel = data["rel_err"][ok]
            const = _bound_constant(config, M, config.lam, data.get("kappa"))
            viol = data["err_abs"] > np.asarray(const) * data["scale"]
            row = {
                "scenario": config.scenario,
                "M": M,
                "K": 1 if config.scenario in ("SIMO", "MISO") else config.K,
                "rho_db": rho_db,
                "format": fmt_name,
                "mode": policy.mode.value,
                "block_size": policy.block_size if policy.mode is PolicyMode.MIXED else 0,
                "lambda": config.lam,
                "mean_rate": float(np.mean(rate)) if n_ok else 0.0,
                "rate_stderr": float(np.std(rate) / math.sqrt(n_ok)) if n_ok else 0.0,
                "median_rel_err": float(np.median(rel)) if n_ok else math.nan,
                "p99_rel_err": float(np.percentile(rel, 99)) if n_ok else math.nan,
                "bound_violation_rate": float(np.mean(viol[ok])) if n_ok else math.nan,
                "breakdown_rate": float(np.mean(data["breakdown"])),
                "trials": config.trials,
                "seed": config.seed,
            }
            result.rows.append(row)
    return result


def verify_bounds(config: ExperimentConfig, lambdas=(0.5, 1.0, 3.0)) -> list:
    """Empirical failure rate of the probabilistic error bound per lambda.

    Returns one report dict per grid point with violation rates for each
    lambda and, for the single-user scenarios, the deterministic worst-case
    variant (which should never be violated).
    """
    reports = []
    u = config.policy.working.unit_roundoff
    gi = 0
    for M in config.M_grid:
        for rho_db in config.rho_grid_db:
            rho = 10.0 ** (rho_db / 10.0)
            data = _collect_point(config, M, rho, gi)
            gi += 1
            ok = ~data["breakdown"]
            err = data["err_abs"][ok]
            scale = data["scale"][ok]
            kappa = data["kappa"][ok] if "kappa" in data else None
            rates = {}
            for lam in lambdas:
                const = _bound_constant(config, M, lam, kappa)
                rates[lam] = float(np.mean(err > np.asarray(const) * scale))
            det = None
            if config.scenario in ("SIMO", "MISO"):
                n_red = 2 * M if config.scenario == "SIMO" else 2
                if n_red * u < 1.0:
                    det_const = math.sqrt(2.0) * bounds.gamma_n_det(n_red, u)
                else:  # worst-case factor diverges; bound vacuously holds
                    det_const = math.inf
                det = float(np.mean(err > det_const * scale))
            reports.append(
                {
                    "scenario": config.scenario,
                    "M": M,
                    "rho_db": rho_db,
                    "violation_rates": rates,
                    "deterministic_violation_rate": det,
                    "trials": int(np.sum(ok)),
                }
            )
    return reports


def inner_product_violation_study(
    n: int,
    policy: PrecisionPolicy,
    trials: int = 10_000,
    seed: int = 0,
    lambdas=(0.5, 1.0, 3.0),
) -> dict:
    """Violation rates of the inner-product error bound on random unit vectors.

    Checks |fl(a^H b) - a^H b| <= sqrt(2) gamma_{2n}(lambda) ||a|| ||b|| per
    trial for each lambda, plus the deterministic 2n*u/(1 - 2n*u) variant.
    """
    from .kernels import inner_product_fp

    ss = np.random.SeedSequence(seed)
    rng = np.random.default_rng(ss)
    rng_round = _round_rng(policy, ss.spawn(1)[0])
    ref = _reference_policy(policy)
    u = policy.working.unit_roundoff
    errs = []
    done = 0
    while done < trials:
        c = min(_CHUNK_SINGLE, trials - done)
        a = draw_channel(n, 1, rng, (c,))[..., 0]
        b = draw_channel(n, 1, rng, (c,))[..., 0]
        a /= np.linalg.norm(a, axis=-1, keepdims=True)
        b /= np.linalg.norm(b, axis=-1, keepdims=True)
        aq = round_input(a, policy)
        bq = round_input(b, policy)
        s_fp = inner_product_fp(aq, bq, policy, rng_round)
        s_ref = inner_product_fp(aq, bq, ref)
        norms = np.linalg.norm(aq, axis=-1) * np.linalg.norm(bq, axis=-1)
        errs.append(np.abs(s_fp - s_ref) / norms)
        done += c
    err = np.concatenate(errs)
    rates = {
        lam: float(np.mean(err > math.sqrt(2.0) * bounds.gamma_n(2 * n, u, lam)))
        for lam in lambdas
    }
    # The worst-case factor n*u/(1-n*u) diverges as n*u -> 1; past that point
    # no finite deterministic bound exists, so it is vacuously satisfied.
    if 2 * n * u < 1.0:
        det_const = math.sqrt(2.0) * bounds.gamma_n_det(2 * n, u)
    else:
        det_const = math.inf
    det = float(np.mean(err > det_const))
    return {"n": n, "trials": trials, "violation_rates": rates, "deterministic": det}


# -- CSV serialization -------------------------------------------------------

def _fmt_cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_csv(result: SweepResult, path) -> None:
    """Write one row per grid point with the full config echoed in comments."""
    cfg = result.config
    pol = cfg.policy
    lines = [
        f"# scenario = {cfg.scenario}",
        f"# M_grid = {','.join(str(m) for m in cfg.M_grid)}",
        f"# K = {cfg.K}",
        f"# rho_grid_db = {','.join(repr(float(r)) for r in cfg.rho_grid_db)}",
        f"# format_low = {pol.low.name}",
        f"# format_high = {pol.high.name}",
        f"# mode = {pol.mode.value}",
        f"# block_size = {pol.block_size}",
        f"# rounding = {pol.rounding.value}",
        f"# range_mode = {pol.range_mode.value}",
        f"# lambda = {repr(float(cfg.lam))}",
        f"# trials = {cfg.trials}",
        f"# seed = {cfg.seed}",
        f"# csi = {cfg.csi}",
        f"# csi_T = {cfg.csi_T}",
        f"# csi_tau = {cfg.tau}",
        ",".join(CSV_COLUMNS),
    ]
    for row in result.rows:
        lines.append(",".join(_fmt_cell(row[c]) for c in CSV_COLUMNS))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path) -> list:
    """Parse a sweep CSV back into a list of row dicts (inverse of emit_csv)."""
    rows = []
    header = None
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line.split(",")
                continue
            cells = line.split(",")
            row = {}
            for name, cell in zip(header, cells):
                if name in ("scenario", "format", "mode"):
                    row[name] = cell
                elif name in ("M", "K", "block_size", "trials", "seed"):
                    row[name] = int(cell)
                else:
                    row[name] = float(cell)
            rows.append(row)
    return rows
