"""Experiment driver: configuration, single runs, epsilon and time-step sweeps, CSV output."""
from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import duhamel, limit_solver, micromacro
from .config import ConfigError, Discretization, NumericalError
from .model import ModelCase
from .quadrature import SubstitutedGrid, VelocityGrid, kappa
from .spectral import XGrid

log = logging.getLogger(__name__)

SCHEMES = ("micromacro", "duhamel", "implicit", "limit")
CASES = ("heavy_tail", "degenerate")
DEFAULT_BETA = {"heavy_tail": 2.5, "degenerate": 0.5}
# the Duhamel experiments use a coarser step than the others
DEFAULT_DT = {"duhamel": 1e-2}
NUMBER_FORMAT = "{:.16e}"


@dataclass(frozen=True)
class RunConfig:
    case: str = "heavy_tail"
    beta: float | None = None
    nu0: float = 1.0
    eps: float = 1e-5
    dt: float | None = None
    T: float = 0.1
    n_x: int = 64
    v_max: float = 5.0
    n_v: int = 200
    w_max: float = 100.0
    n_w: int = 800
    scheme: str = "micromacro"
    closure: str = "implicit"
    output: str | None = None

    def __post_init__(self):
        if self.case not in CASES:
            raise ConfigError(f"case must be one of {CASES}, got {self.case!r}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.closure not in ("implicit", "explicit"):
            raise ConfigError(f"closure must be 'implicit' or 'explicit', got {self.closure!r}")
        for name in ("nu0", "eps", "T", "v_max", "w_max"):
            _require_positive(name, getattr(self, name))
        for name in ("beta", "dt"):
            if getattr(self, name) is not None:
                _require_positive(name, getattr(self, name))
        for name in ("n_x", "n_v", "n_w"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")

    @property
    def beta_value(self) -> float:
        return DEFAULT_BETA[self.case] if self.beta is None else self.beta

    @property
    def dt_value(self) -> float:
        return DEFAULT_DT.get(self.scheme, 1e-3) if self.dt is None else self.dt

    @property
    def quantity(self) -> str:
        """Density compared against the limit: ``rho_nu`` for Duhamel in the degenerate case."""
        return "rho_nu" if (self.scheme == "duhamel" and self.case == "degenerate") else "rho"

    def model(self) -> ModelCase:
        try:
            if self.case == "heavy_tail":
                return ModelCase.heavy_tail(self.beta_value)
            return ModelCase.degenerate(self.beta_value, self.nu0)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def discretization(self) -> Discretization:
        try:
            return Discretization(
                self.model(), self.eps, self.dt_value, self.T,
                xgrid=XGrid(self.n_x),
                vgrid=VelocityGrid(self.v_max, self.n_v),
                wgrid=SubstitutedGrid(self.w_max, self.n_w),
                closure=self.closure,
            )
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


def _require_positive(name, val):
    if not (isinstance(val, (int, float)) and math.isfinite(val) and val > 0):
        raise ConfigError(f"{name} must be positive and finite, got {val}")


_FIELD_TYPES = {
    "case": str, "scheme": str, "closure": str, "output": str,
    "beta": float, "nu0": float, "eps": float, "dt": float, "T": float,
    "v_max": float, "w_max": float,
    "n_x": int, "n_v": int, "n_w": int,
}
LIST_KEYS = ("eps_list", "dt_list")


def _canonical(key: str) -> str:
    key = key.strip().replace("-", "_")
    return "T" if key.lower() == "t" else key


def parse_list(text: str) -> list[float]:
    try:
        vals = [float(tok) for tok in text.replace(";", ",").split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc
    if not vals:
        raise ConfigError("empty list")
    return vals


def coerce(raw: dict) -> dict:
    """Typed values from string settings; unknown keys are configuration errors."""
    out = {}
    for key, val in raw.items():
        key = _canonical(key)
        if key in LIST_KEYS:
            out[key] = val if isinstance(val, list) else parse_list(str(val))
            continue
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown setting {key!r}")
        typ = _FIELD_TYPES[key]
        if not isinstance(val, str):
            out[key] = val
            continue
        try:
            out[key] = typ(val.strip()) if typ is not int else int(float(val.strip()))
        except ValueError as exc:
            raise ConfigError(f"{key}: cannot parse {val!r} as {typ.__name__}") from exc
    return out


def read_config_file(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, val = line.split("=", 1)
        raw[_canonical(key)] = val.strip()
    return raw


def build_config(file_settings: dict | None = None, overrides: dict | None = None):
    """Merge defaults < file < overrides; returns ``(RunConfig, lists)``."""
    merged = {**coerce(file_settings or {}), **coerce(overrides or {})}
    lists = {k: merged.pop(k) for k in LIST_KEYS if k in merged}
    return RunConfig(**merged), lists


# -- runs ----------------------------------------------------------------------

@dataclass
class RunOutput:
    x: np.ndarray
    times: np.ndarray
    columns: dict  # name -> (n_times, n_x)
    quantity: str

    @property
    def final(self) -> np.ndarray:
        return self.columns[self.quantity][-1]


def _limit_start(disc: Discretization) -> np.ndarray:
    """Initial density as the schemes see it: ``<f0>_h / <M>_h``."""
    st = micromacro.initial_state(disc)
    return st.rho


def simulate(cfg: RunConfig, record: bool = True) -> RunOutput:
    disc = cfg.discretization()
    x = disc.xgrid.nodes
    if cfg.scheme == "micromacro":
        tr = micromacro.run(disc, record=record)
        cols = {"rho": tr.rho, "rho_nu": tr.rho_nu}
        times = tr.times
    elif cfg.scheme == "implicit":
        tr = micromacro.run_implicit(disc, record=record)
        cols = {"rho": tr.rho, "rho_nu": tr.rho_nu}
        times = tr.times
    elif cfg.scheme == "duhamel":
        res = duhamel.run(disc, record=record)
        cols = {"rho_nu": res.rho_nu}
        if disc.case.is_heavy_tail:
            cols = {"rho": res.rho_nu, "rho_nu": res.rho_nu}
        times = res.times
    else:
        times = np.array(disc.times if record else [0.0, disc.n_steps * disc.dt])
        kh = kappa(disc.case, disc.wgrid)
        cols = {"rho": limit_solver.evolve_physical(disc.xgrid, _limit_start(disc),
                                                    disc.case, kh, times)}
    for name, arr in cols.items():
        if not np.all(np.isfinite(arr)):
            raise NumericalError(f"non-finite {name} in output")
    return RunOutput(x, np.asarray(times), cols, cfg.quantity)


def limit_reference(cfg: RunConfig) -> np.ndarray:
    """Limit density at ``T`` started from the scheme's discrete initial density."""
    disc = cfg.discretization()
    kh = kappa(disc.case, disc.wgrid)
    t_end = disc.n_steps * disc.dt
    return limit_solver.evolve_physical(disc.xgrid, _limit_start(disc),
                                        disc.case, kh, [t_end])[0]


def rel_linf(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    scale = np.max(np.abs(b))
    if scale == 0:
        raise NumericalError("reference density vanishes identically")
    return float(np.max(np.abs(a - b)) / scale)


def write_run_csv(out: RunOutput, path) -> None:
    names = list(out.columns)
    rows = []
    for i, t in enumerate(out.times):
        for j, xv in enumerate(out.x):
            rows.append([t, xv] + [out.columns[n][i, j] for n in names])
    _write_rows(path, ["t", "x"] + names, rows)


def run_single(cfg: RunConfig) -> RunOutput:
    """Run one configuration; writes the density series to ``cfg.output`` if set."""
    out = simulate(cfg, record=True)
    if cfg.output:
        write_run_csv(out, cfg.output)
    return out


# -- sweeps --------------------------------------------------------------------

@dataclass
class SweepResult:
    kind: str  # "eps" or "dt"
    quantity: str
    eps: np.ndarray
    dt: np.ndarray
    error: np.ndarray
    order: np.ndarray
    runtime: np.ndarray

    def __post_init__(self):
        for name in ("eps", "dt", "error", "order", "runtime"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise NumericalError(f"non-finite {name} in sweep result")

    @property
    def error_column(self) -> str:
        return "error_Linf" if self.quantity == "rho" else f"error_Linf_{self.quantity}"

    @property
    def header(self) -> list[str]:
        if self.kind == "eps":
            return ["eps", self.error_column, "runtime_s"]
        return ["eps", "dt", self.error_column, "order", "runtime_s"]

    def rows(self) -> list[list[float]]:
        if self.kind == "eps":
            return [[e, err, rt] for e, err, rt in zip(self.eps, self.error, self.runtime)]
        return [list(r) for r in zip(self.eps, self.dt, self.error, self.order, self.runtime)]

    @property
    def monotone(self) -> bool:
        """Errors never increase along the sweep (``eps`` sweep: as listed)."""
        if self.kind != "eps":
            raise ValueError("monotonicity is defined for eps sweeps")
        return bool(np.all(np.diff(self.error) <= 0))

    def orders_for(self, eps: float) -> np.ndarray:
        return self.order[self.eps == eps]


def _map(fn, items, workers: int):
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def sweep_eps(cfg: RunConfig, eps_list, workers: int = 1) -> SweepResult:
    """Relative L-infinity distance to the limit at ``T`` for each ``eps``."""
    eps_list = [float(e) for e in eps_list]
    if not eps_list:
        raise ConfigError("eps list is empty")
    ref = limit_reference(cfg.replace(eps=eps_list[0]))

    def cell(eps):
        c = cfg.replace(eps=eps, output=None)
        t0 = time.perf_counter()
        final = simulate(c, record=False).final
        return rel_linf(final, ref), time.perf_counter() - t0

    res = _map(cell, eps_list, workers)
    dt = cfg.dt_value
    out = SweepResult("eps", cfg.quantity, np.array(eps_list), np.full(len(eps_list), dt),
                      np.array([r[0] for r in res]), np.zeros(len(eps_list)),
                      np.array([r[1] for r in res]))
    if cfg.output:
        emit_csv(out, cfg.output)
    return out


def _check_geometric(dt_list):
    if len(dt_list) < 2:
        raise ConfigError("dt list needs at least two entries to define an order")
    if any(d <= 0 for d in dt_list):
        raise ConfigError("dt values must be positive")
    r = np.array(dt_list[1:]) / np.array(dt_list[:-1])
    if not np.allclose(r, r[0], rtol=1e-9) or r[0] == 1.0:
        raise ConfigError(f"dt list must be geometric, got ratios {r}")


def observed_orders(dts, errs) -> np.ndarray:
    """Order per row from the log ratio with its neighbour; row 0 shares the first pair."""
    dts, errs = np.asarray(dts, float), np.asarray(errs, float)
    if np.any(errs <= 0):
        raise NumericalError("zero self-convergence error; order undefined")
    pair = np.log(errs[:-1] / errs[1:]) / np.log(dts[:-1] / dts[1:])
    return np.concatenate([pair[:1], pair])


def sweep_dt(cfg: RunConfig, eps_list, dt_list, workers: int = 1) -> SweepResult:
    """Self-convergence error against a run with ``min(dt_list) / 8``."""
    if cfg.scheme == "limit":
        raise ConfigError("the limit solver is exact in time; nothing to sweep")
    eps_list = [float(e) for e in eps_list]
    dt_list = [float(d) for d in dt_list]
    if not eps_list:
        raise ConfigError("eps list is empty")
    _check_geometric(dt_list)
    dt_ref = min(dt_list) / 8.0

    def cell(args):
        eps, dt = args
        t0 = time.perf_counter()
        val = simulate(cfg.replace(eps=eps, dt=dt, output=None), record=False).final
        return val, time.perf_counter() - t0

    rows_e, rows_d, errs, ords, rts = [], [], [], [], []
    for eps in eps_list:
        ref, _ = cell((eps, dt_ref))
        res = _map(cell, [(eps, d) for d in dt_list], workers)
        e = [rel_linf(v, ref) for v, _ in res]
        rows_e += [eps] * len(dt_list)
        rows_d += dt_list
        errs += e
        ords += list(observed_orders(dt_list, e))
        rts += [rt for _, rt in res]
    out = SweepResult("dt", cfg.quantity, np.array(rows_e), np.array(rows_d),
                      np.array(errs), np.array(ords), np.array(rts))
    if cfg.output:
        emit_csv(out, cfg.output)
    return out


# -- CSV -----------------------------------------------------------------------

def _fmt(v) -> str:
    return NUMBER_FORMAT.format(float(v))


def _write_rows(path, header, rows) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([_fmt(v) for v in r])
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def emit_csv(result: SweepResult, path) -> None:
    _write_rows(path, result.header, result.rows())


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


# -- CLI -----------------------------------------------------------------------

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="anomkin", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("run", "sweep-eps", "sweep-dt"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key = value settings file")
        for field in _FIELD_TYPES:
            sp.add_argument("--" + field.replace("_", "-"), dest=field, default=None)
        if name != "run":
            sp.add_argument("--eps-list", dest="eps_list", default=None)
            sp.add_argument("--workers", type=int, default=1)
        if name == "sweep-dt":
            sp.add_argument("--dt-list", dest="dt_list", default=None)
        sp.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {k: v for k, v in vars(args).items()
                 if v is not None and (k in _FIELD_TYPES or k in LIST_KEYS)}
    try:
        file_settings = read_config_file(args.config) if args.config else {}
        cfg, lists = build_config(file_settings, overrides)
        if args.command == "run":
            out = run_single(cfg)
            if not cfg.output:
                _print_rows(["x", cfg.quantity], zip(out.x, out.final))
        else:
            if "eps_list" not in lists:
                raise ConfigError("eps_list is required for sweeps")
            if args.command == "sweep-eps":
                res = sweep_eps(cfg, lists["eps_list"], args.workers)
            else:
                if "dt_list" not in lists:
                    raise ConfigError("dt_list is required for sweep-dt")
                res = sweep_dt(cfg, lists["eps_list"], lists["dt_list"], args.workers)
            if not cfg.output:
                _print_rows(res.header, res.rows())
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1
    return EXIT_OK


def _print_rows(header, rows) -> None:
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])


if __name__ == "__main__":
    sys.exit(main())
