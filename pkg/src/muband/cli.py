"""Command line driver: ``muband <command> --config file.json``.

Commands: model, curvature, spectral, bubble, width, verify-all. Each writes a
JSON report (and CSV profiles, depending on ``emit``) to the output directory.
Exit codes: 0 when every check passes, 1 when any check fails, 2 on a
configuration, input or constraint error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from .bubble import BubbleProblem, check_width, rigidity_audit, solve_critical
from .checks import (
    ACCEPTANCE,
    CheckRecord,
    Tolerances,
    VerificationReport,
    model_checks,
    model_problem,
    oracle_error,
    provenance,
    record,
    run_criterion,
    skipped,
)
from .errors import (
    ConfigError,
    DimensionError,
    MalformedCSVError,
    MubandError,
    NoCriticalPointError,
    NonmonotoneError,
    NonpositiveError,
)
from .geometry import Band, DoublyWarped, SingleWarp, curvature, alternative_ric_t, riemann_fd_oracle
from .grid import Grid, GridFunction
from .models import Family, ModelSpec, build_model
from .ode import Kind, SpectralParams, u_samples
from .spectral import check_bound_pointwise, principal_eigenvalue

COMMANDS = ("model", "curvature", "spectral", "bubble", "width", "verify-all")
EMIT = ("json", "csv", "both")
UNIFORM_TOL = 1e-9

MODEL_KEYS = {"family", "n", "gamma", "lambda", "kappa", "beta", "c", "phi0", "t_minus",
              "t_plus", "n_points", "fiber_lengths"}
NUMERIC_KEYS = {"n", "gamma", "lambda", "kappa", "beta", "c", "t_minus", "t_plus", "n_points",
                "bubble_fraction"}
RUN_KEYS = {"command", "model", "input_band_path", "tolerances", "output_dir", "emit", "kind",
            "acceptance", "bubble_fraction", "grid_points"}


# --------------------------------------------------------------------------
# band files


def load_band_csv(path: str | Path, n: int | None = None) -> Band:
    """Read a band from a CSV with header ``t,phi1,phi2`` or ``t,xi``.

    ``t`` must be strictly increasing. Warps must be positive; a zero is
    allowed only in the first or last row (a collapsing end). Nodes within
    1e-9 (relative to the spacing) of a uniform grid are used as they are;
    otherwise the warps are resampled on the uniform grid by cubic splines.
    ``n`` is the dimension for single-warp files (default 3).
    """
    path = Path(path)
    rows = [r for r in csv.reader(io.StringIO(path.read_text())) if r and any(c.strip() for c in r)]
    if not rows:
        raise MalformedCSVError(f"{path}: empty file")
    header = [c.strip() for c in rows[0]]
    if header not in (["t", "phi1", "phi2"], ["t", "xi"]):
        raise MalformedCSVError(f"{path}: header must be 't,phi1,phi2' or 't,xi', got {','.join(header)!r}")
    ncol = len(header)
    data = []
    for line, r in enumerate(rows[1:], start=2):
        if len(r) != ncol:
            raise MalformedCSVError(f"{path}: line {line} has {len(r)} fields, expected {ncol}")
        try:
            vals = [float(c) for c in r]
        except ValueError as exc:
            raise MalformedCSVError(f"{path}: line {line}: {exc}") from exc
        if not all(math.isfinite(v) for v in vals):
            raise MalformedCSVError(f"{path}: line {line} has a non-finite value")
        data.append(vals)
    if len(data) < 5:
        raise MalformedCSVError(f"{path}: need at least 5 rows, got {len(data)}")
    arr = np.array(data)
    t = arr[:, 0]
    steps = np.diff(t)
    if np.any(steps <= 0):
        i = int(np.flatnonzero(steps <= 0)[0])
        raise NonmonotoneError(f"{path}: t is not strictly increasing at line {i + 3}")
    for j, name in enumerate(header[1:], start=1):
        col = arr[:, j]
        # zeros are allowed only at a collapsing end
        bad = [i for i in np.flatnonzero(col <= 0) if col[i] < 0 or 0 < i < len(col) - 1]
        if bad:
            i = bad[0]
            raise NonpositiveError(
                f"{path}: {name} is not positive at line {i + 2} (row {i + 1}, t={t[i]:.17g})")

    grid = Grid(float(t[0]), float(t[-1]), len(t))
    warps = [arr[:, j] for j in range(1, ncol)]
    if np.max(np.abs(t - grid.t)) > UNIFORM_TOL * grid.spacing:
        warps = [np.maximum(CubicSpline(t, w)(grid.t), 0.0) for w in warps]
    fns = [GridFunction(grid, w) for w in warps]
    if ncol == 3:
        if n not in (None, 3):
            raise DimensionError("a t,phi1,phi2 file describes a three-dimensional band")
        return Band(3, grid, DoublyWarped(*fns))
    return Band(3 if n is None else int(n), grid, SingleWarp(fns[0]))


# --------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    command: str
    model: ModelSpec | None = None
    input_band_path: Path | None = None
    params: SpectralParams | None = None
    n: int | None = None
    tolerances: dict = field(default_factory=dict)
    output_dir: Path = Path("muband_out")
    emit: str = "both"
    acceptance: bool = False
    bubble_fraction: float = 0.9
    raw: dict = field(default_factory=dict)

    def band(self) -> Band:
        if self.model is not None:
            return build_model(self.model)
        return load_band_csv(self.input_band_path, self.n)

    @property
    def spectral_params(self) -> SpectralParams | None:
        return self.model.params if self.model is not None else self.params

    @property
    def grid_points(self) -> int | None:
        if self.model is not None:
            return self.model.n_points
        return None

    @property
    def writes_json(self) -> bool:
        return self.emit in ("json", "both")

    @property
    def writes_csv(self) -> bool:
        return self.emit in ("csv", "both")


def parse_config_text(text: str, source: str = "<config>") -> dict:
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{source}: top level must be a JSON object")
    return cfg


def _check_numbers(cfg: dict, prefix: str = ""):
    for key in NUMERIC_KEYS & cfg.keys():
        v = cfg[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"field '{prefix}{key}': expected a number, got {v!r}")


def build_run_config(cfg: dict, command: str | None = None, out: str | None = None,
                     grid_points: int | None = None) -> RunConfig:
    """Validate a parsed config. Model fields may be nested under ``model`` or
    given at the top level."""
    unknown = set(cfg) - RUN_KEYS - MODEL_KEYS
    if unknown:
        raise ConfigError(f"unknown field {sorted(unknown)[0]!r}")
    command = command or cfg.get("command")
    if command not in COMMANDS:
        raise ConfigError(f"field 'command': expected one of {', '.join(COMMANDS)}, got {command!r}")
    emit = cfg.get("emit", "both")
    if emit not in EMIT:
        raise ConfigError(f"field 'emit': expected one of {', '.join(EMIT)}, got {emit!r}")
    _check_numbers(cfg)

    model_cfg = None
    if "model" in cfg:
        if not isinstance(cfg["model"], dict):
            raise ConfigError("field 'model': expected an object")
        if MODEL_KEYS & cfg.keys():
            raise ConfigError("give model fields either under 'model' or at the top level, not both")
        model_cfg = dict(cfg["model"])
        bad = set(model_cfg) - MODEL_KEYS
        if bad:
            raise ConfigError(f"unknown field 'model.{sorted(bad)[0]}'")
        _check_numbers(model_cfg, "model.")
    elif "family" in cfg:
        model_cfg = {k: v for k, v in cfg.items() if k in MODEL_KEYS}

    band_path = cfg.get("input_band_path")
    needs_band = command != "verify-all"
    if needs_band and (model_cfg is None) == (band_path is None):
        raise ConfigError("exactly one of 'model' and 'input_band_path' must be given")
    if command == "verify-all" and band_path is not None:
        raise ConfigError("field 'input_band_path': verify-all runs on a model")

    gp = grid_points if grid_points is not None else cfg.get("grid_points")
    model = None
    if model_cfg is not None:
        if gp is not None:
            model_cfg["n_points"] = int(gp)
        model = ModelSpec.from_config(model_cfg)

    params = None
    n = int(cfg["n"]) if "n" in cfg and model_cfg is None else None
    if band_path is not None and "gamma" in cfg:
        kind = cfg.get("kind", Kind.RICCI.value)
        try:
            kind = Kind(kind)
        except ValueError as exc:
            raise ConfigError(f"field 'kind': unknown spectral kind {kind!r}") from exc
        if "lambda" not in cfg:
            raise ConfigError("field 'lambda' is required with 'gamma'")
        params = SpectralParams(float(cfg["gamma"]), float(cfg["lambda"]), kind, n or 3)
    if band_path is not None and command in ("spectral", "width") and params is None:
        raise ConfigError(f"fields 'gamma' and 'lambda' are required for {command} on a band file")
    if command == "bubble" and model is None:
        raise ConfigError("bubble needs a model: the weight u and the profile h come from it")

    tol = cfg.get("tolerances", {})
    if not isinstance(tol, dict):
        raise ConfigError("field 'tolerances': expected an object")
    bad = set(tol) - set(Tolerances.DEFAULTS)
    if bad:
        raise ConfigError(f"unknown tolerance 'tolerances.{sorted(bad)[0]}'")
    for k, v in tol.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)) or v <= 0:
            raise ConfigError(f"field 'tolerances.{k}': expected a positive number")

    frac = float(cfg.get("bubble_fraction", 0.9))
    if not 0 < frac < 1:
        raise ConfigError("field 'bubble_fraction' must lie in (0, 1)")
    return RunConfig(
        command=command,
        model=model,
        input_band_path=Path(band_path) if band_path is not None else None,
        params=params,
        n=n,
        tolerances=dict(tol),
        output_dir=Path(out or cfg.get("output_dir", "muband_out")),
        emit=emit,
        acceptance=bool(cfg.get("acceptance", command == "verify-all" and model is None)),
        bubble_fraction=frac,
        raw=cfg,
    )


def config_hash(cfg: RunConfig) -> str:
    payload = json.dumps({"command": cfg.command, "config": cfg.raw,
                          "grid_points": cfg.grid_points}, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()


# --------------------------------------------------------------------------
# pipelines


@dataclass
class RunOutput:
    records: list[CheckRecord]
    extra: dict = field(default_factory=dict)
    csv_files: dict[str, str] = field(default_factory=dict)
    lines: list[str] = field(default_factory=list)


def _run_model(cfg: RunConfig, tol: Tolerances) -> RunOutput:
    spec = cfg.model
    band = build_model(spec)
    p = spec.params
    recs = [record("band_positive", "warps positive inside the band",
                   0.0 if np.all([np.all(f.values[1:-1] > 0) for f in band.warps]) else 1.0, 0.5)]
    wr = check_width(band, p, spec.t_interval, tol["width"])
    recs.append(record("width_bound", "model width below the width bound",
                       max(0.0, wr.width - wr.bound), tol["width"]))
    info = {"family": spec.family.value, "n": band.n, "t_interval": list(spec.t_interval),
            "grid_points": band.grid.n_points, "width": wr.width, "bound": wr.bound}
    return RunOutput(recs, {"model": info}, {"band.csv": band.to_csv()},
                     [f"{spec.family.value}: width {wr.width:.12g}, bound {wr.bound:.12g}"])


def _run_curvature(cfg: RunConfig, tol: Tolerances) -> RunOutput:
    band = cfg.band()
    inner = band.interior() if band.is_degenerate() else band
    prof = curvature(inner)
    fib_sum = sum(f.values for f in prof.ric_fiber)
    recs = [record("scalar_trace", "scalar curvature is the trace of the diagonal Ricci form",
                   float(np.max(np.abs(prof.ric_t.values + fib_sum - prof.scalar.values))),
                   tol["identity"])]
    ora = oracle_error(band)
    recs.append(record("oracle_equivalence", "closed-form Ricci and scalar vs finite-difference Riemann",
                       ora, tol["oracle"]))
    extra = {}
    if isinstance(band.warp, DoublyWarped):
        # compare both candidate formulas for Ric(dt, dt) with the oracle
        lo, hi = inner.grid.t_min, inner.grid.t_max
        ts = [lo + f * (hi - lo) for f in (0.25, 0.5, 0.75)]
        alt = alternative_ric_t(inner)
        errs = {"closed_form": 0.0, "alternative": 0.0}
        for s in ts:
            o = riemann_fd_oracle(band, s).ric_t
            errs["closed_form"] = max(errs["closed_form"], abs(prof.at(s)["ric_t"] - o))
            errs["alternative"] = max(errs["alternative"], abs(float(alt(s)) - o))
        extra["ric_t_candidates"] = {
            "closed_form": "-(phi1''/phi1 + phi2''/phi2)",
            "closed_form_residual": errs["closed_form"],
            "alternative": "-2 phi2''/phi2",
            "alternative_residual": errs["alternative"],
        }
    lines = [f"ric_min in [{prof.ric_min.values.min():.6g}, {prof.ric_min.values.max():.6g}], "
             f"oracle error {ora:.2e}"]
    return RunOutput(recs, extra, {"curvature.csv": prof.to_csv()}, lines)


def _run_spectral(cfg: RunConfig, tol: Tolerances) -> RunOutput:
    band = cfg.band()
    p = cfg.spectral_params
    recs, extra, files, lines = [], {}, {}, []
    if cfg.model is not None:
        u = u_samples(p, band.grid) if cfg.model.family is not Family.KAPPA else \
            GridFunction(band.grid, np.ones(band.grid.n_points))
        rep = check_bound_pointwise(band, u, p)
        recs.append(record("spectral_bound_pointwise", "−γΔu + V u ≥ Λu with the model weight",
                           max(0.0, -rep.residual_min) / max(abs(p.lam), 1.0), tol["spectral_pointwise"]))
        extra["pointwise"] = rep.to_json()
        files["spectral_residual.csv"] = rep.residual.to_csv()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ev = principal_eigenvalue(band, p)
    scale = max(abs(p.lam), 1.0)
    recs.append(record("principal_eigenvalue", "principal eigenvalue at least Λ",
                       max(0.0, p.lam - ev.principal_eigenvalue) / scale, tol["eigenvalue"],
                       f"lambda1={ev.principal_eigenvalue:.12g}"))
    extra["eigen"] = dict(ev.to_json(), refined_eigenvalue=ev.refined_eigenvalue,
                          richardson_gap=ev.richardson_gap, warnings=[str(w.message) for w in caught])
    files["eigenfunction.csv"] = ev.eigenfunction.to_csv()
    lines.append(f"lambda1 = {ev.principal_eigenvalue:.12g} (target {p.lam:.12g})")
    return RunOutput(recs, extra, files, lines)


def _run_bubble(cfg: RunConfig, tol: Tolerances) -> RunOutput:
    spec = cfg.model
    p = spec.params
    prob: BubbleProblem = model_problem(spec, cfg.bubble_fraction)
    try:
        res = solve_critical(prob, p)
    except NoCriticalPointError as exc:
        rec = record("critical_slice", "a slice with vanishing first variation exists", math.inf, 0.0,
                     f"{exc} (sign {exc.sign:+d})")
        return RunOutput([rec], {"bubble": None}, {}, [str(exc)])
    recs = [record("first_variation", "first variation vanishes at t*",
                   abs(res.first_variation_residual), tol["first_variation"]),
            record("energy_scan", "energy minimizer within one cell of t*",
                   0.0 if res.scan_agrees else 1.0, 0.5, f"scan={res.t_scan:.12g}")]
    audit = rigidity_audit(prob, p, res.t_star, tol["audit"])
    for c in audit.checks:
        recs.append(record(f"audit_{c.name}", "infinitesimal rigidity condition", c.residual, c.tolerance))
    files = {"energy.csv": res.energy_trace.to_csv()}
    path = str(cfg.output_dir / "energy.csv") if cfg.writes_csv else None
    return RunOutput(recs, {"bubble": res.to_json(path)}, files,
                     [f"t* = {res.t_star:.12g}, rigid = {res.rigid}"])


def _run_width(cfg: RunConfig, tol: Tolerances) -> RunOutput:
    band = cfg.band()
    p = cfg.spectral_params
    interval = cfg.model.t_interval if cfg.model is not None else None
    wr = check_width(band, p, interval, tol["width"])
    recs = [record("width_bound", "band width below the width bound",
                   max(0.0, wr.width - wr.bound), tol["width"])]
    if cfg.model is not None and (cfg.model.interval is None or cfg.model.family is Family.KAPPA):
        recs.append(record("width_equality", "model width equals the width bound",
                           abs(wr.width - wr.bound), tol["width"]))
    return RunOutput(recs, {"width": wr.to_json()}, {},
                     [f"bound = {wr.bound:.15g}", f"width = {wr.width:.15g}"])


def _run_verify_all(cfg: RunConfig, tol: Tolerances) -> RunOutput:
    recs: list[CheckRecord] = []
    lines = []
    if cfg.model is not None:
        recs.extend(model_checks(cfg.model, tol))
    if cfg.acceptance:
        for c in ACCEPTANCE:
            rec, _ = run_criterion(c)
            recs.append(rec)
            lines.append(f"[{'PASS' if rec.passed else 'FAIL'}] {c.number} {c.name}")
    if not recs:
        recs.append(skipped("nothing_to_verify", "verify-all", "no model and acceptance disabled"))
    return RunOutput(recs, {}, {}, lines)


PIPELINES = {
    "model": _run_model,
    "curvature": _run_curvature,
    "spectral": _run_spectral,
    "bubble": _run_bubble,
    "width": _run_width,
    "verify-all": _run_verify_all,
}


def _json_safe(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return _json_safe(obj.item())
    return obj


def run(cfg: RunConfig, reproducible: bool = False) -> tuple[VerificationReport, RunOutput]:
    """Execute the pipeline for ``cfg.command`` and write its artifacts."""
    tol = Tolerances(cfg.tolerances)
    out = PIPELINES[cfg.command](cfg, tol)
    prov = provenance(config_hash(cfg), cfg.grid_points or 0, reproducible)
    prov["command"] = cfg.command
    report = VerificationReport(out.records, prov)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    if cfg.writes_json:
        payload = _json_safe(dict(report.to_json(), **out.extra))
        (cfg.output_dir / "report.json").write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    if cfg.writes_csv:
        for name, text in out.csv_files.items():
            (cfg.output_dir / name).write_text(text)
    return report, out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="muband", description="Warped band curvature and width checks.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", default=None, help="output directory (overrides output_dir)")
    ap.add_argument("--grid-points", type=int, default=None, help="override the model grid size")
    ap.add_argument("--reproducible", action="store_true", help="omit timestamps from the report")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        path = Path(args.config)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
        cfg = build_run_config(parse_config_text(text, str(path)), args.command, args.out,
                               args.grid_points)
        report, out = run(cfg, args.reproducible)
    except OSError as exc:
        print(f"muband: error: {exc.filename or ''}: {exc.strerror}", file=sys.stderr)
        return 2
    except (MubandError, ValueError) as exc:
        print(f"muband: error: {exc}", file=sys.stderr)
        return 2
    for line in out.lines:
        print(line)
    s = report.summary
    for r in report.records:
        if r.status != "pass":
            print(f"{r.status.upper()}: {r.name} residual={r.residual:.3e} tol={r.tolerance:.3e}")
    print(f"{s['pass']} passed, {s['fail']} failed, {s['skipped']} skipped")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
