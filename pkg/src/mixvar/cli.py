"""Command-line front end.

Every subcommand reads a flat ``key = value`` config file, writes delimited
text outputs into ``--out`` and finishes with a ``manifest.txt`` listing
the files together with the seed and a hash of the effective config.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np
import pandas as pd

from . import __version__
from .core import TimeSeries, as_values, coefficients
from .errors import (
    ConfigError,
    EmptyFile,
    InsufficientSample,
    MissingColumn,
    MixVarError,
    NonNumericCell,
)
from .forecast import BACKCAST_GRID, ForecastRequest, GridSpec, backcast_path, forecast_path, marginal_interval, point_forecast
from .gcov import GcovConfig, bootstrap_se, estimate
from .innovations import IrfRequest, filter_innovations, irf_cbs, state_variances
from .sim import ErrorSpec, SimulationRequest, simulate
from .uncertainty import bootstrap_cspi, coverage_experiment, estimated_pi

logger = logging.getLogger(__name__)

DELIMITERS = ",;\t|"
COMMANDS = ("simulate", "estimate", "forecast", "backcast", "filter", "irf", "coverage", "cspi")


# -- ingestion and trend handling ------------------------------------------

def load_csv(path, columns=None, date_column: Optional[str] = None) -> TimeSeries:
    """Read selected numeric columns of a delimited file into a TimeSeries.

    Without ``columns`` every column is used except a leading date column.
    Rows with a missing value are rejected with their line numbers (the
    header is line 1).
    """
    if not os.path.exists(path) or os.path.getsize(path) == 0:
        raise EmptyFile(f"{path} is missing or empty")
    with open(path, newline="") as fh:
        head = fh.read(4096)
    try:
        sep = csv.Sniffer().sniff(head, delimiters=DELIMITERS).delimiter
    except csv.Error:
        sep = ","  # a single column has no delimiter to detect
    try:
        df = pd.read_csv(path, sep=sep, dtype=str, keep_default_na=False, comment="#")
    except pd.errors.EmptyDataError:
        raise EmptyFile(f"{path} has no header row") from None
    if df.shape[0] == 0:
        raise EmptyFile(f"{path} has a header but no data rows")
    df.columns = [c.strip() for c in df.columns]
    origin = None
    if date_column is None and columns is None:
        first = df.columns[0]
        if pd.to_numeric(df[first].str.strip(), errors="coerce").isna().all():
            date_column = first
    if date_column is not None:
        if date_column not in df.columns:
            raise MissingColumn(f"date column {date_column!r} not in {list(df.columns)}")
        origin = {"date_column": date_column, "first": df[date_column].iloc[0], "last": df[date_column].iloc[-1]}
    if columns is None:
        columns = [c for c in df.columns if c != date_column]
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise MissingColumn(f"columns {missing} not in {list(df.columns)}")
    raw = df[list(columns)].apply(lambda s: s.str.strip())
    na = raw.isin(["", "NA", "NaN", "nan", "N/A", "null", "None"])
    if na.any().any():
        lines = (np.flatnonzero(na.any(axis=1).to_numpy()) + 2).tolist()
        raise NonNumericCell(f"missing values in rows (file lines) {lines}")
    vals = raw.apply(pd.to_numeric, errors="coerce")
    bad = vals.isna()
    if bad.any().any():
        r, c = np.argwhere(bad.to_numpy())[0]
        raise NonNumericCell(f"non-numeric cell {raw.iat[r, c]!r} in column {columns[c]!r}, line {r + 2}")
    return TimeSeries(vals.to_numpy(dtype=float), labels=tuple(columns), origin=origin)


@dataclass(frozen=True)
class TrendFit:
    """Per-component polynomial trend in t / T_scale, plus optional scaling."""

    coef: np.ndarray  # (degree + 1) x m, lowest power first
    t_scale: float
    scale: np.ndarray

    @property
    def degree(self) -> int:
        return self.coef.shape[0] - 1

    def trend(self, t_index) -> np.ndarray:
        t = np.asarray(t_index, dtype=float) / self.t_scale
        V = np.vander(t, self.degree + 1, increasing=True)
        return V @ self.coef


def detrend(series, degree: int, standardize: bool = False):
    """Remove a least-squares polynomial in time from each component.

    Returns ``(adjusted, fit)``; with ``standardize`` the adjusted series is
    also divided by its per-component standard deviation.
    """
    y = as_values(series)
    T = y.shape[0]
    if degree < 0:
        raise ValueError("degree must be >= 0")
    if degree >= T:
        raise InsufficientSample(f"degree {degree} needs more than {T} observations")
    t_scale = float(max(T - 1, 1))
    V = np.vander(np.arange(T) / t_scale, degree + 1, increasing=True)
    if np.linalg.matrix_rank(V) < degree + 1:
        raise InsufficientSample("time design matrix is rank deficient")
    coef, *_ = np.linalg.lstsq(V, y, rcond=None)
    adj = y - V @ coef
    scale = adj.std(axis=0, ddof=1) if standardize and T > 1 else np.ones(y.shape[1])
    scale = np.where(scale > 0, scale, 1.0)
    labels = series.labels if isinstance(series, TimeSeries) else ()
    return TimeSeries(adj / scale, labels=labels), TrendFit(coef, t_scale, scale)


def retrend(values, fit: TrendFit, t_index) -> np.ndarray:
    """Map adjusted values at dates ``t_index`` (0-based) back to the original scale."""
    v = np.asarray(values, dtype=float)
    return v * fit.scale + fit.trend(np.atleast_1d(t_index)).reshape(v.shape if v.ndim > 1 else (-1,))[..., :]


# -- configuration ---------------------------------------------------------

def _floats(s):
    return tuple(float(x) for x in str(s).replace(";", ",").split(",") if x.strip())


def _ints(s):
    return tuple(int(x) for x in str(s).split(",") if x.strip())


def _strs(s):
    return tuple(x.strip() for x in str(s).split(",") if x.strip())


def _opt_int(s):
    return None if str(s).lower() in ("", "none") else int(s)


@dataclass(frozen=True)
class RunConfig:
    """Flat run configuration; every field is a config-file key."""

    input: Optional[str] = None
    columns: Optional[tuple] = None
    date_column: Optional[str] = None
    p: int = 1
    H: int = 10
    powers: tuple = (1, 2)
    starts: Optional[tuple] = None
    n_random_starts: int = 8
    start_seed: int = 0
    bandwidths: str = "silverman"
    grid_points: int = 100
    grid_span: float = 6.0
    backcast_grid_points: int = 50
    detrend: Optional[int] = None
    standardize: bool = False
    horizon: int = 1
    n_paths: int = 1000
    proposal_factor: int = 10
    point: str = "mode"
    alpha1: float = 0.2
    alpha2: float = 0.1
    component: int = 0
    S: int = 50
    se_S: int = 0
    n_sims: int = 500
    deltas: tuple = (-2.0, -1.0, 0.0, 1.0, 2.0)
    irf_horizon: int = 10
    R: int = 100
    phi: Optional[tuple] = None
    dof: float = 4.0
    unit_variance: bool = False
    T: int = 600
    burn: int = 200
    backcast_length: Optional[int] = None
    backcast_paths: int = 1
    oracle: bool = False
    n_jobs: int = 1
    seed: int = 0
    out: str = "out"

    def gcov(self) -> GcovConfig:
        starts = None
        if self.starts is not None:
            k = self.p * self.m_hint() ** 2 if self.m_hint() else len(self.starts)
            starts = tuple(tuple(self.starts[i:i + k]) for i in range(0, len(self.starts), k))
        return GcovConfig(H=self.H, powers=self.powers, starts=starts, n_random_starts=self.n_random_starts,
                          start_seed=self.start_seed, bandwidths=self.bandwidths)

    def m_hint(self) -> Optional[int]:
        if self.columns:
            return len(self.columns)
        if self.phi:
            return int(round(np.sqrt(len(self.phi) / self.p)))
        return None

    def grid(self) -> GridSpec:
        return GridSpec(n_points=self.grid_points, span=self.grid_span)

    def backcast_grid(self) -> GridSpec:
        return replace(BACKCAST_GRID, n_points=self.backcast_grid_points, span=self.grid_span)


_BOOL = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}
_PARSERS = {
    "columns": lambda s: _strs(s) or None,
    "powers": _ints,
    "starts": _floats,
    "deltas": _floats,
    "phi": _floats,
    "detrend": _opt_int,
    "backcast_length": _opt_int,
    "date_column": lambda s: s or None,
    "input": lambda s: s or None,
}


def _parse_value(name, raw, default):
    if name in _PARSERS:
        return _PARSERS[name](raw)
    if isinstance(default, bool):
        try:
            return _BOOL[raw.lower()]
        except KeyError:
            raise ConfigError(f"{name}: expected a boolean, got {raw!r}") from None
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def parse_config(text: str, overrides: Optional[dict] = None) -> RunConfig:
    """Parse ``key = value`` lines (``#`` starts a comment) into a RunConfig."""
    known = {f.name: f for f in fields(RunConfig)}
    defaults = RunConfig()
    values = {}
    items = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        k, v = (x.strip() for x in line.split("=", 1))
        items.append((k, v, lineno))
    items += [(k, str(v), None) for k, v in (overrides or {}).items()]
    for k, v, lineno in items:
        if k not in known:
            raise ConfigError(f"unknown config key {k!r}" + (f" (line {lineno})" if lineno else ""))
        try:
            values[k] = _parse_value(k, v, getattr(defaults, k))
        except ValueError as exc:
            raise ConfigError(f"{k}: {exc}") from None
    cfg = RunConfig(**values)
    if cfg.detrend is not None and cfg.detrend < 0:
        raise ConfigError("detrend degree must be >= 0")
    return cfg


def config_hash(cfg: RunConfig) -> str:
    payload = json.dumps({f.name: getattr(cfg, f.name) for f in fields(cfg)}, sort_keys=True, default=list)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


# -- output helpers --------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_table(path, header, rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(_fmt(v) for v in r) + "\n")


def read_table(path) -> pd.DataFrame:
    return pd.read_csv(path, comment="#", float_precision="round_trip")


def residual_acf(resid: np.ndarray, max_lag: int = 20):
    """Autocorrelations of each residual component and of its square."""
    rows = []
    cols = [resid, resid ** 2]
    for lag in range(1, max_lag + 1):
        row = [lag]
        for block in cols:
            for j in range(block.shape[1]):
                x = block[:, j] - block[:, j].mean()
                den = float(x @ x)
                row.append(float(x[lag:] @ x[:-lag]) / den if den > 0 and lag < len(x) else 0.0)
        rows.append(row)
    return rows


class _Bundle:
    def __init__(self, cfg: RunConfig, command: str):
        self.cfg, self.command = cfg, command
        os.makedirs(cfg.out, exist_ok=True)
        self.files = []
        self.info = {}
        self.stage = "setup"

    def path(self, name):
        self.files.append(name)
        return os.path.join(self.cfg.out, name)

    def manifest(self, status="ok", error=None):
        lines = [f"command = {self.command}", f"version = {__version__}", f"seed = {self.cfg.seed}",
                 f"config_hash = {config_hash(self.cfg)}", f"status = {status}"]
        if error is not None:
            lines += [f"failed_stage = {self.stage}", f"error = {type(error).__name__}: {error}"]
        for k in sorted(self.info):
            lines.append(f"{k} = {self.info[k]}")
        for name in self.files:
            full = os.path.join(self.cfg.out, name)
            if os.path.exists(full):
                with open(full, "rb") as fh:
                    digest = hashlib.sha256(fh.read()).hexdigest()[:16]
                lines.append(f"output = {name} sha256:{digest}")
        with open(os.path.join(self.cfg.out, "manifest.txt"), "w") as fh:
            fh.write("\n".join(lines) + "\n")


# -- pipeline --------------------------------------------------------------

def _load(cfg: RunConfig, b: _Bundle):
    b.stage = "load"
    if cfg.input is None:
        raise ConfigError("input is required for this command")
    ts = load_csv(cfg.input, cfg.columns, cfg.date_column)
    b.stage = "detrend"
    fit = None
    if cfg.detrend is not None:
        ts, fit = detrend(ts, cfg.detrend, cfg.standardize)
        write_table(b.path("trend.csv"), ["power"] + list(ts.labels),
                    [[k] + list(fit.coef[k]) for k in range(fit.coef.shape[0])]
                    + [["scale"] + list(fit.scale), ["t_scale"] + [fit.t_scale] * ts.m])
    b.info["T"], b.info["m"] = ts.T, ts.m
    return ts, fit


def _estimate(cfg: RunConfig, ts: TimeSeries, b: _Bundle):
    b.stage = "estimate"
    model = estimate(ts, cfg.p, cfg.gcov())
    b.info["converged"] = model.converged
    b.info["objective"] = repr(model.objective_value)
    b.info["eigenvalues"] = " ".join(repr(complex(e)) for e in model.jordan.eigenvalues)
    b.info["n1"], b.info["n2"] = model.n1, model.n2
    return model


def _emit_estimate(cfg, model, ts, b):
    m, p = model.m, model.p
    rows = []
    se = None
    if cfg.se_S > 0:
        b.stage = "bootstrap_se"
        se = bootstrap_se(model, ts, cfg.se_S, cfg.gcov(), seed=cfg.seed, grid_spec=cfg.backcast_grid(),
                          n_jobs=cfg.n_jobs).se
    vec = model.coeffs.to_vector()
    for k, v in enumerate(vec):
        lag, rest = divmod(k, m * m)
        i, j = divmod(rest, m)
        rows.append([lag + 1, i + 1, j + 1, v] + ([se[k]] if se is not None else []))
    write_table(b.path("coefficients.csv"), ["lag", "row", "col", "value"] + (["se"] if se is not None else []), rows)
    jd = model.jordan
    write_table(b.path("eigenvalues.csv"), ["re", "im", "modulus", "causal"],
                [[e.real, e.imag, abs(e), int(c)] for e, c in zip(jd.eigenvalues, jd.causal)])
    n = jd.n
    write_table(b.path("jordan.csv"), ["matrix", "row"] + [f"c{k + 1}" for k in range(n)],
                [["A", r + 1] + list(jd.A[r]) for r in range(n)]
                + [["A_inv", r + 1] + list(jd.A_inv[r]) for r in range(n)]
                + [["J", r + 1] + list(jd.J[r]) for r in range(n)])
    write_table(b.path("residuals.csv"), list(ts.labels), model.residual_series.tolist())
    write_table(b.path("states.csv"), [f"z1_{k + 1}" for k in range(jd.n1)] + [f"z2_{k + 1}" for k in range(jd.n2)],
                model.z_series.tolist())
    lab = list(ts.labels)
    write_table(b.path("residual_acf.csv"), ["lag"] + [f"eps_{c}" for c in lab] + [f"eps2_{c}" for c in lab],
                residual_acf(model.residual_series))
    if jd.n1 == 1 and jd.n2 == 1:
        v1, v2 = state_variances(model)
        b.info["var_z1"], b.info["var_z2"] = repr(v1), repr(v2)


def _cmd_simulate(cfg, b):
    b.stage = "simulate"
    if cfg.phi is None:
        raise ConfigError("phi (row-major coefficients) is required for simulate")
    coeffs = _coeffs_from(cfg)
    errors = ErrorSpec.unit_variance(cfg.dof, coeffs.m) if cfg.unit_variance else ErrorSpec(cfg.dof, np.eye(coeffs.m))
    req = SimulationRequest(coeffs, errors, cfg.T, cfg.burn, cfg.burn)
    ts = simulate(req, rng=np.random.default_rng(cfg.seed))
    write_table(b.path("series.csv"), list(ts.labels), ts.values.tolist())
    b.info["T"], b.info["m"] = ts.T, ts.m


def _coeffs_from(cfg):
    vec = np.asarray(cfg.phi, dtype=float)
    m = cfg.m_hint()
    if m is None or m * m * cfg.p != vec.size:
        raise ConfigError(f"phi has {vec.size} entries, not p * m^2 for p = {cfg.p}")
    from .core import ArCoefficients

    return ArCoefficients.from_vector(vec, m, cfg.p)


def _cmd_estimate(cfg, b):
    ts, _ = _load(cfg, b)
    model = _estimate(cfg, ts, b)
    b.stage = "emit"
    _emit_estimate(cfg, model, ts, b)
    return model


def _cmd_forecast(cfg, b):
    ts, trend = _load(cfg, b)
    model = _estimate(cfg, ts, b)
    b.stage = "forecast"
    req = ForecastRequest(model, ts.values, cfg.horizon, cfg.n_paths, cfg.grid(), cfg.proposal_factor, cfg.seed)
    res = forecast_path(req)
    labels = list(ts.labels)
    res.density.to_csv(b.path(f"density_h{cfg.horizon}.csv"), labels)
    point = point_forecast(res.density, cfg.point)
    t_fore = ts.T - 1 + cfg.horizon
    rows = []
    for k, lab in enumerate(labels):
        lo, hi = marginal_interval(res.density, k, cfg.alpha1)
        vals = np.array([point[k], lo, hi])
        orig = vals * trend.scale[k] + trend.trend([t_fore])[0, k] if trend is not None else vals
        rows.append([lab, *vals, *orig])
    write_table(b.path("forecast.csv"), ["component", "point", "lower", "upper",
                                          "point_orig", "lower_orig", "upper_orig"], rows)
    if cfg.horizon > 1:
        flat = res.paths.reshape(res.paths.shape[0], -1)
        write_table(b.path("paths.csv"), [f"{lab}_h{h + 1}" for h in range(cfg.horizon) for lab in labels],
                    flat.tolist())
    b.info["raw_integral"] = repr(res.steps[0].raw_integral)


def _cmd_backcast(cfg, b):
    ts, _ = _load(cfg, b)
    model = _estimate(cfg, ts, b)
    b.stage = "backcast"
    length = cfg.backcast_length or ts.T
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.backcast_paths)
    rows = []
    for k, ss in enumerate(seeds):
        path = backcast_path(model, ts.values[-model.p:], length, rng=np.random.default_rng(ss),
                             grid_spec=cfg.backcast_grid(), proposal_factor=cfg.proposal_factor)
        rows += [[k + 1, t + 1, *row] for t, row in enumerate(path.values.tolist())]
    write_table(b.path("backcast.csv"), ["path", "t"] + list(ts.labels), rows)


def _cmd_filter(cfg, b):
    ts, _ = _load(cfg, b)
    model = _estimate(cfg, ts, b)
    b.stage = "filter"
    inn = filter_innovations(model)
    cols = ["t", "v2"] + (["v1"] if inn.v1 is not None else [])
    T0 = model.p  # state rows start at date p (0-based p-1); innovations from the next date
    rows = [[int(T0 + i + 1), inn.v2[i]] + ([inn.v1[i]] if inn.v1 is not None else []) for i in range(len(inn.v2))]
    write_table(b.path("innovations.csv"), cols, rows)


def _cmd_irf(cfg, b):
    ts, _ = _load(cfg, b)
    model = _estimate(cfg, ts, b)
    b.stage = "irf"
    res = irf_cbs(IrfRequest(model, cfg.deltas, cfg.irf_horizon, cfg.n_sims, seed=cfg.seed))
    rows = []
    for i, d in enumerate(res.deltas):
        for h in range(cfg.irf_horizon):
            row = [d, h + 1, res.z2_response[i, h], res.z2_se[i, h]]
            if res.y_response is not None:
                row += list(res.y_response[i, h]) + list(res.y_se[i, h])
            rows.append(row)
    header = ["delta", "horizon", "z2", "z2_se"]
    if res.y_response is not None:
        header += [f"{lab}" for lab in ts.labels] + [f"{lab}_se" for lab in ts.labels]
    write_table(b.path("irf.csv"), header, rows)
    b.info["irf_flagged"] = sum(res.flagged.values())


def _cmd_coverage(cfg, b):
    b.stage = "coverage"
    if cfg.phi is None:
        raise ConfigError("phi (row-major coefficients) is required for coverage")
    coeffs = _coeffs_from(cfg)
    errors = ErrorSpec.unit_variance(cfg.dof, coeffs.m) if cfg.unit_variance else ErrorSpec(cfg.dof, np.eye(coeffs.m))
    req = SimulationRequest(coeffs, errors, cfg.T, cfg.burn, cfg.burn)
    res = coverage_experiment(req, cfg.R, cfg.alpha1, cfg.gcov(), cfg.seed, cfg.oracle, cfg.grid(), cfg.n_jobs)
    rows = [[f"y{i + 1}(T+1)", 100 * r] for i, r in enumerate(res.rates)]
    write_table(b.path("coverage.csv"), ["component", f"T={cfg.T} t({cfg.dof:g})"], rows)
    b.info["coverage_failures"] = res.failures


def _cmd_cspi(cfg, b):
    ts, _ = _load(cfg, b)
    model = _estimate(cfg, ts, b)
    b.stage = "cspi"
    cs = bootstrap_cspi(ts, model, cfg.component, cfg.alpha1, cfg.alpha2, cfg.S, cfg.seed, cfg.gcov(),
                        cfg.grid(), cfg.backcast_grid(), cfg.proposal_factor, cfg.n_jobs)
    lo, hi = cs.bounds
    write_table(b.path("cspi.csv"), ["component", "alpha1", "alpha2", "pi_lower", "pi_upper", "m", "sigma",
                                      "q_hat", "cspi_lower", "cspi_upper", "S", "failures"],
                [[cfg.component, cfg.alpha1, cfg.alpha2, cs.pi.q_lower, cs.pi.q_upper, cs.pi.m, cs.pi.sigma,
                  cs.q_hat, lo, hi, cs.S, cs.failures]])
    write_table(b.path("cspi_replications.csv"), ["m", "sigma", "q"],
                np.column_stack([cs.m_samples, cs.sigma_samples, cs.q_samples]).tolist())


_HANDLERS = {
    "simulate": _cmd_simulate,
    "estimate": _cmd_estimate,
    "forecast": _cmd_forecast,
    "backcast": _cmd_backcast,
    "filter": _cmd_filter,
    "irf": _cmd_irf,
    "coverage": _cmd_coverage,
    "cspi": _cmd_cspi,
}


def run_pipeline(cfg: RunConfig, command: str = "estimate") -> dict:
    """Run one subcommand and write its outputs and manifest.

    On failure the manifest records the failing stage, outputs written so
    far are kept, and the error is re-raised with a ``stage`` attribute.
    """
    if command not in _HANDLERS:
        raise ConfigError(f"unknown command {command!r}")
    b = _Bundle(cfg, command)
    try:
        _HANDLERS[command](cfg, b)
    except Exception as exc:
        b.manifest(status="failed", error=exc)
        exc.stage = b.stage
        raise
    b.manifest()
    return {"out": cfg.out, "files": list(b.files) + ["manifest.txt"], "info": dict(b.info)}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mixvar", description="Mixed causal-noncausal VAR toolkit")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="flat key = value config file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (repeatable)")
        sp.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        text = ""
        if args.config:
            if not os.path.exists(args.config):
                raise ConfigError(f"config file {args.config} not found")
            with open(args.config) as fh:
                text = fh.read()
        overrides = {}
        for item in args.set:
            if "=" not in item:
                raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
            k, v = item.split("=", 1)
            overrides[k.strip()] = v.strip()
        if args.seed is not None:
            overrides["seed"] = str(args.seed)
        if args.out is not None:
            overrides["out"] = args.out
        cfg = parse_config(text, overrides)
        res = run_pipeline(cfg, args.command)
    except MixVarError as exc:
        stage = getattr(exc, "stage", "config")
        print(f"error [{stage}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    print(os.path.join(res["out"], "manifest.txt"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
