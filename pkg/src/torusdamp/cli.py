"""Config-driven sweep runner with cached, reproducible outputs.

Reads a flat INI config (sections: profile / sweep / checks / output), runs
the requested resolvent sweep plus named checks, and writes CSV + JSON
artifacts keyed by a hash of the canonicalized config and toolkit version.
Repeat runs with the same config hit the cache unless --force is given.

Exit codes: 0 success, 2 config parse error, 3 unknown profile or check
name, 4 numerical failure (the failing sweep point is reported).
"""

from __future__ import annotations

import argparse
import configparser
import concurrent.futures
import dataclasses
import datetime
import hashlib
import json
import logging
import math
import os
import sys
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .decay import (
    DecayTrace,
    choose_fit_window,
    fit_decay_exponent,
    worst_case_ensemble,
)
from .fitting import ExponentFit, fit_loglog
from .grid import GridFunction, make_grid
from .profiles import DampingProfile, constant_profile, profile_from_name
from .resolvent import (
    NearSingularError,
    StationaryProblem,
    assemble,
    damping_identity_check,
    grid_for_frequency,
    low_energy_certificate,
    mode_norms,
    resolvent_norm,
    solve,
    worst_beta,
)
from .weyl import commutator_identity_check

__all__ = [
    "SweepConfig",
    "RunReport",
    "ConfigError",
    "UnknownNameError",
    "parse_config",
    "config_hash",
    "run",
    "render_report",
    "main",
]

log = logging.getLogger("torusdamp")

TOOLKIT_VERSION = "0.1.0"
CACHE_ENV_VAR = "TORUSDAMP_CACHE_DIR"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_UNKNOWN_NAME = 3
EXIT_NUMERICAL = 4


class ConfigError(ValueError):
    """Config file missing, unparseable, or with invalid values."""


class UnknownNameError(ValueError):
    """Config references a profile or check that is not registered."""


@dataclass(frozen=True)
class SweepConfig:
    profile_name: str
    profile_params: tuple[tuple[str, float], ...]
    grid_n: int | None
    q_values: tuple[float, ...]
    beta_strategy: str
    beta_list: tuple[float, ...]
    tau: float | None
    gamma: int | None
    checks: tuple[str, ...]
    output_dir: str
    seed: int

    def profile(self) -> DampingProfile:
        try:
            return profile_from_name(self.profile_name, dict(self.profile_params))
        except KeyError as exc:
            raise UnknownNameError(str(exc.args[0])) from exc
        except (TypeError, ValueError) as exc:
            raise ConfigError(
                f"profile {self.profile_name!r} rejected its parameters: {exc}"
            ) from exc


@dataclass(frozen=True)
class CheckOutcome:
    passed: bool
    values: dict
    fits: dict[str, ExponentFit] = dataclasses.field(default_factory=dict)
    traces: dict[str, DecayTrace] = dataclasses.field(default_factory=dict)


@dataclass(frozen=True)
class RunReport:
    config_hash: str
    fits: dict[str, ExponentFit]
    check_results: dict[str, CheckOutcome]
    provenance: dict


def _parse_float_list(raw: str) -> tuple[float, ...]:
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    try:
        return tuple(float(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"expected a comma-separated float list, got {raw!r}") from exc


def parse_config(path: str) -> SweepConfig:
    """Parse an INI sweep config; raises ConfigError on any defect."""
    cp = configparser.ConfigParser()
    try:
        read = cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not read:
        raise ConfigError(f"config file not found or unreadable: {path}")
    if not cp.has_section("profile"):
        raise ConfigError("config needs a [profile] section")
    if not cp.has_option("profile", "name"):
        raise ConfigError("[profile] section needs a 'name' key")
    name = cp.get("profile", "name").strip()
    params = []
    for key, raw in cp.items("profile"):
        if key == "name":
            continue
        try:
            params.append((key, float(raw)))
        except ValueError as exc:
            raise ConfigError(f"[profile] {key} = {raw!r} is not a number") from exc

    sweep = cp["sweep"] if cp.has_section("sweep") else {}
    grid_n = None
    if "grid_n" in sweep:
        try:
            grid_n = int(sweep["grid_n"])
        except ValueError as exc:
            raise ConfigError(f"grid_n = {sweep['grid_n']!r} is not an integer") from exc
        if grid_n < 8 or grid_n % 2:
            raise ConfigError("grid_n must be even and >= 8")

    if "q_values" in sweep and "q_log_range" in sweep:
        raise ConfigError("give q_values or q_log_range, not both")
    if "q_values" in sweep:
        q_values = _parse_float_list(sweep["q_values"])
    elif "q_log_range" in sweep:
        spec = _parse_float_list(sweep["q_log_range"])
        if len(spec) != 3 or spec[0] <= 0 or spec[1] <= spec[0] or spec[2] < 2:
            raise ConfigError("q_log_range must be 'lo, hi, count' with 0 < lo < hi, count >= 2")
        q_values = tuple(float(v) for v in np.geomspace(spec[0], spec[1], int(spec[2])))
    else:
        q_values = ()
    if any(q <= 1.0 for q in q_values):
        raise ConfigError("q values must exceed 1")

    strategy = str(sweep.get("beta_strategy", "modes")).strip()
    if strategy not in ("modes", "worst", "list"):
        raise ConfigError(f"beta_strategy must be modes/worst/list, got {strategy!r}")
    beta_list = _parse_float_list(sweep["beta_list"]) if "beta_list" in sweep else ()
    if strategy == "list" and not beta_list:
        raise ConfigError("beta_strategy = list needs a beta_list")

    tau = None
    if "tau" in sweep:
        tau = float(sweep["tau"])
        if not (0.5 < tau <= 1.0):
            raise ConfigError("tau must lie in (1/2, 1]")
    gamma = None
    if "gamma" in sweep:
        gamma = int(sweep["gamma"])
        if gamma not in (1, 2):
            raise ConfigError("gamma must be 1 or 2")

    checks: tuple[str, ...] = ()
    if cp.has_section("checks") and cp.has_option("checks", "names"):
        checks = tuple(
            p.strip() for p in cp.get("checks", "names").split(",") if p.strip()
        )

    out = cp["output"] if cp.has_section("output") else {}
    output_dir = str(out.get("dir", "out"))
    try:
        seed = int(out.get("seed", 0))
    except ValueError as exc:
        raise ConfigError(f"seed = {out.get('seed')!r} is not an integer") from exc
    if seed < 0:
        raise ConfigError("seed must be nonnegative")

    return SweepConfig(
        profile_name=name,
        profile_params=tuple(sorted(params)),
        grid_n=grid_n,
        q_values=q_values,
        beta_strategy=strategy,
        beta_list=beta_list,
        tau=tau,
        gamma=gamma,
        checks=checks,
        output_dir=output_dir,
        seed=seed,
    )


def config_hash(cfg: SweepConfig) -> str:
    """Digest of the canonicalized config plus toolkit version.

    output_dir is excluded: where results land must not change what they are.
    """
    payload = dataclasses.asdict(cfg)
    payload.pop("output_dir")
    payload["toolkit_version"] = TOOLKIT_VERSION
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _sweep_point(
    cfg: SweepConfig, profile: DampingProfile, q: float
) -> list[tuple[float, float, int, float]]:
    """Rows (q, beta, k, norm) for one frequency; k = -1 when no mode applies."""
    g = make_grid(cfg.grid_n) if cfg.grid_n else grid_for_frequency(q)
    rows: list[tuple[float, float, int, float]] = []
    try:
        if cfg.beta_strategy == "modes":
            mode_rows, _tail = mode_norms(profile, q, g)
            for k, beta, norm in mode_rows:
                rows.append((q, beta, int(k), norm))
        elif cfg.beta_strategy == "worst":
            beta, norm = worst_beta(profile, q, g)
            rows.append((q, beta, -1, norm))
        else:
            for beta in cfg.beta_list:
                try:
                    norm = resolvent_norm(StationaryProblem(profile, q, beta, g))
                except NearSingularError as exc:
                    raise NearSingularError(
                        f"at (q={q:g}, beta={beta:g}, k=-1, h=n/a): {exc}",
                        exc.condition,
                    ) from exc
                rows.append((q, float(beta), -1, norm))
    except NearSingularError as exc:
        if "at (q=" in str(exc):
            raise
        raise NearSingularError(
            f"at (q={q:g}, beta=scan, k=scan, h=n/a): {exc}", exc.condition
        ) from exc
    return rows


def _run_sweep(
    cfg: SweepConfig, profile: DampingProfile, jobs: int
) -> tuple[list[tuple[float, float, int, float]], dict[str, ExponentFit]]:
    if not cfg.q_values:
        return [], {}
    qs = list(cfg.q_values)
    if jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            per_q = list(pool.map(lambda q: _sweep_point(cfg, profile, q), qs))
    else:
        per_q = [_sweep_point(cfg, profile, q) for q in qs]
    rows = [row for chunk in per_q for row in chunk]
    fits: dict[str, ExponentFit] = {}
    if len(qs) >= 2:
        measure = [max(norm for _, _, _, norm in chunk) for chunk in per_q]
        fits["resolvent_exponent"] = fit_loglog(qs, measure)
    return rows, fits


def _random_forcing(g, rng, band: int) -> GridFunction:
    coef = np.zeros(g.n, dtype=np.complex128)
    mask = np.abs(g.frequencies) <= band
    coef[mask] = rng.standard_normal(mask.sum()) + 1j * rng.standard_normal(mask.sum())
    return GridFunction(g, np.fft.ifft(coef) * g.n)


def _check_damping_identity(cfg: SweepConfig, profile: DampingProfile) -> CheckOutcome:
    g = make_grid(cfg.grid_n or 256)
    rng = np.random.Generator(np.random.Philox(cfg.seed))
    worst = 0.0
    min_slack = 0.0
    for _ in range(20):
        q = 10.0 ** rng.uniform(0.5, 3.0)
        beta = float(rng.uniform(-5.0, q))
        f = _random_forcing(g, rng, g.n // 4)
        problem = StationaryProblem(profile, q, beta, g)
        u = solve(assemble(problem), f)
        rep = damping_identity_check(problem, u, f)
        worst = max(worst, rep.identity_residual)
        min_slack = min(min_slack, rep.slack / max(rep.rhs, 1e-300))
    return CheckOutcome(
        passed=bool(worst <= 1e-10 and min_slack >= -1e-8),
        values={"worst_residual": worst, "min_relative_slack": min_slack, "instances": 20},
    )


def _check_commutator_identity(cfg: SweepConfig, profile: DampingProfile) -> CheckOutcome:
    g = make_grid(cfg.grid_n or 256)
    rng = np.random.Generator(np.random.Philox(cfg.seed + 1))
    worst = 0.0
    for _ in range(10):
        h = 2.0 ** -float(rng.uniform(2.0, 6.0))
        tau = cfg.tau if cfg.tau is not None else float(rng.uniform(0.55, 1.0))
        gamma = cfg.gamma if cfg.gamma is not None else int(rng.integers(1, 3))
        beta = float(rng.uniform(0.0, 2.0))
        f = _random_forcing(g, rng, g.n // 4)
        worst = max(worst, commutator_identity_check(profile, h, tau, gamma, beta, f, g))
    return CheckOutcome(
        passed=bool(worst <= 1e-10),
        values={"worst_residual": worst, "instances": 10},
    )


def _check_diagonal_oracle(cfg: SweepConfig, profile: DampingProfile) -> CheckOutcome:
    # oracle only exists for constant damping; run it on W == 3/2 regardless
    # of the configured profile so the check always measures the same thing
    c = 1.5
    const = constant_profile(c)
    g = make_grid(cfg.grid_n or 256)
    k = g.frequencies.astype(np.float64)
    worst = 0.0
    for q in np.geomspace(3.0, 3000.0, 5):
        for beta in np.linspace(-3.0, 0.8 * q, 4):
            got = resolvent_norm(StationaryProblem(const, float(q), float(beta), g))
            oracle = 1.0 / float(np.min(np.abs(k * k + 1j * q * c - beta)))
            worst = max(worst, abs(got - oracle) / oracle)
    return CheckOutcome(
        passed=bool(worst <= 1e-10),
        values={"worst_relative_error": worst, "grid_points": 20},
    )


def _certificate_inputs(cfg: SweepConfig, profile: DampingProfile):
    g = make_grid(512)
    rng = np.random.Generator(np.random.Philox(cfg.seed + 2))
    f = _random_forcing(g, rng, 40)
    sigma = profile.sigma
    eps1 = 0.2 if sigma + 0.2 < math.pi else 0.5 * (math.pi - sigma)
    threshold = math.pi**2 / (16.0 * (sigma + eps1) ** 2)
    beta = 0.7 * threshold
    return g, f, eps1, beta


def _check_low_energy_stability(cfg: SweepConfig, profile: DampingProfile) -> CheckOutcome:
    g, f, eps1, beta = _certificate_inputs(cfg, profile)
    cs = []
    residuals = []
    for q in (1e2, 1e3, 1e4):
        rep = low_energy_certificate(profile, q, beta, eps1, g, f)
        cs.append(rep.empirical_c)
        residuals.append(rep.residual)
    spread = (max(cs) - min(cs)) / min(cs)
    return CheckOutcome(
        passed=bool(spread < 0.20),
        values={
            "constant_spread": spread,
            "empirical_c": cs,
            "residuals": residuals,
            "beta": beta,
            "eps1": eps1,
        },
    )


def _check_low_energy_identity(cfg: SweepConfig, profile: DampingProfile) -> CheckOutcome:
    # needs a profile without jump discontinuities to reach 1e-8; sharp-edged
    # damping is honestly reported at its ~1e-7 grid-limited level and fails
    g, f, eps1, beta = _certificate_inputs(cfg, profile)
    rep = low_energy_certificate(profile, 100.0, beta, eps1, g, f)
    return CheckOutcome(
        passed=bool(rep.residual <= 1e-8),
        values={
            "residual": rep.residual,
            "gradient_term": rep.gradient_term,
            "potential_term": rep.potential_term,
            "source_term": rep.source_term,
        },
    )


def _check_energy_conservation(cfg: SweepConfig, profile: DampingProfile) -> CheckOutcome:
    from .decay import evolve_mode, mode_energy

    g = make_grid(cfg.grid_n or 256)
    free = constant_profile(0.0)
    x = g.nodes
    v0 = GridFunction(g, np.cos(3 * x) + 0.5 * np.sin(x))
    v1 = GridFunction(g, 0.25 * np.cos(x))
    traj = evolve_mode(free, 2, v0, v1, [0.0, 25.0, 50.0, 100.0])
    energies = [mode_energy(state) for state in traj]
    drift = max(abs(e - energies[0]) for e in energies) / energies[0]
    return CheckOutcome(
        passed=bool(drift <= 1e-10),
        values={"relative_drift": drift, "horizon": 100.0},
    )


def _check_decay_fit(cfg: SweepConfig, profile: DampingProfile) -> CheckOutcome:
    g = make_grid(256)
    t_list = [float(t) for t in np.linspace(0.0, 200.0, 101)]
    trace, _member_fits = worst_case_ensemble(profile, 16, g, t_list, seed=cfg.seed)
    try:
        window = choose_fit_window(trace)
    except ValueError:
        window = (t_list[-1] / 4.0, t_list[-1])
    fit = fit_decay_exponent(trace, window)
    e0 = trace.energies[0]
    drop = e0 / max(trace.energies[-1], 1e-300)
    return CheckOutcome(
        passed=bool(drop >= 1e3 and fit.r_squared > 0.9),
        values={"alpha": fit.slope, "energy_drop": drop, "r_squared": fit.r_squared},
        fits={"decay_alpha": fit},
        traces={"decay_trace": trace},
    )


CHECKS: dict[str, Callable[[SweepConfig, DampingProfile], CheckOutcome]] = {
    "damping_identity": _check_damping_identity,
    "commutator_identity": _check_commutator_identity,
    "diagonal_oracle": _check_diagonal_oracle,
    "low_energy_stability": _check_low_energy_stability,
    "low_energy_identity": _check_low_energy_identity,
    "energy_conservation": _check_energy_conservation,
    "decay_fit": _check_decay_fit,
}


def _cache_root(cfg: SweepConfig) -> str:
    return os.environ.get(CACHE_ENV_VAR, cfg.output_dir)


def _write_csv(path: str, header: str, rows: list[tuple]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(
                ",".join(str(v) if isinstance(v, int) else _fmt(v) for v in row) + "\n"
            )


def _trace_rows(trace: DecayTrace) -> list[tuple]:
    rows = []
    for t, e in zip(trace.times, trace.energies):
        rows.append((float(t), float(e), math.sqrt(max(e, 0.0)) / trace.data_norm))
    return rows


def _fit_payload(fit: ExponentFit) -> dict:
    return {
        "slope": fit.slope,
        "intercept": fit.intercept,
        "r_squared": fit.r_squared,
        "window": [fit.window[0], fit.window[1]],
    }


def _series_for_fits(
    sweep_rows: list[tuple[float, float, int, float]],
    checks: dict[str, CheckOutcome],
) -> dict[str, dict[str, list[float]]]:
    series: dict[str, dict[str, list[float]]] = {}
    if sweep_rows:
        by_q: dict[float, float] = {}
        for q, _beta, _k, norm in sweep_rows:
            by_q[q] = max(by_q.get(q, 0.0), norm)
        qs = sorted(by_q)
        series["resolvent_exponent"] = {
            "log_x": [math.log(q) for q in qs],
            "log_y": [math.log(by_q[q]) for q in qs],
        }
    for outcome in checks.values():
        for name, fit in outcome.fits.items():
            for tname, trace in outcome.traces.items():
                lo, hi = fit.window
                xs, ys = [], []
                for t, e in zip(trace.times, trace.energies):
                    if lo <= t <= hi and e > 0:
                        xs.append(math.log(1.0 + t))
                        ys.append(math.log(math.sqrt(e) / trace.data_norm))
                if xs:
                    series[name] = {"log_x": xs, "log_y": ys}
    return series


def run(cfg: SweepConfig, force: bool = False, jobs: int = 1) -> tuple[RunReport, str]:
    """Execute a parsed config; returns the report and its output directory."""
    profile = cfg.profile()
    for check_name in cfg.checks:
        if check_name not in CHECKS:
            raise UnknownNameError(
                f"unknown check {check_name!r}; registered: {', '.join(sorted(CHECKS))}"
            )

    digest = config_hash(cfg)
    outdir = os.path.join(_cache_root(cfg), digest[:16])
    report_path = os.path.join(outdir, "report.json")
    if os.path.exists(report_path) and not force:
        log.info("cache hit for config %s at %s", digest[:16], outdir)
        with open(report_path, encoding="utf-8") as fh:
            payload = json.load(fh)
        fits = {
            name: ExponentFit(
                d["slope"], d["intercept"], d["r_squared"], (d["window"][0], d["window"][1])
            )
            for name, d in payload["fits"].items()
        }
        checks = {
            name: CheckOutcome(passed=d["pass"], values=d["values"])
            for name, d in payload["checks"].items()
        }
        return RunReport(payload["config_hash"], fits, checks, payload["provenance"]), outdir

    os.makedirs(outdir, exist_ok=True)
    sweep_rows, fits = _run_sweep(cfg, profile, jobs)

    check_results: dict[str, CheckOutcome] = {}
    for check_name in cfg.checks:
        log.info("running check %s", check_name)
        outcome = CHECKS[check_name](cfg, profile)
        check_results[check_name] = outcome
        fits.update(outcome.fits)

    if sweep_rows:
        _write_csv(os.path.join(outdir, "sweep.csv"), "q,beta,k,norm", sweep_rows)
    for outcome in check_results.values():
        for tname, trace in outcome.traces.items():
            _write_csv(
                os.path.join(outdir, f"{tname}.csv"),
                "t,E,E_sqrt_over_datanorm",
                _trace_rows(trace),
            )

    report = RunReport(
        config_hash=digest,
        fits=fits,
        check_results=check_results,
        provenance={
            "toolkit_version": TOOLKIT_VERSION,
            "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "seed": cfg.seed,
            "profile": cfg.profile_name,
        },
    )
    payload = {
        "config_hash": report.config_hash,
        "fits": {name: _fit_payload(fit) for name, fit in fits.items()},
        "checks": {
            name: {"pass": out.passed, "values": out.values}
            for name, out in check_results.items()
        },
        "provenance": report.provenance,
        "series": _series_for_fits(sweep_rows, check_results),
    }
    with open(report_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    log.info("wrote %s", report_path)
    return report, outdir


_SVG_W, _SVG_H = 640, 480
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 70, 20, 30, 50


def _svg_plot(name: str, series: dict[str, list[float]], fit: dict) -> str:
    xs, ys = series["log_x"], series["log_y"]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    # fitted line endpoints in data coordinates extend across the data range
    slope, intercept = fit["slope"], fit["intercept"]
    fy0, fy1 = slope * x0 + intercept, slope * x1 + intercept
    y0, y1 = min(y0, fy0, fy1), max(y1, fy0, fy1)
    padx = 0.05 * (x1 - x0 or 1.0)
    pady = 0.05 * (y1 - y0 or 1.0)
    x0, x1, y0, y1 = x0 - padx, x1 + padx, y0 - pady, y1 + pady
    pw = _SVG_W - _MARGIN_L - _MARGIN_R
    ph = _SVG_H - _MARGIN_T - _MARGIN_B

    def px(x: float) -> float:
        return _MARGIN_L + pw * (x - x0) / (x1 - x0)

    def py(y: float) -> float:
        return _MARGIN_T + ph * (y1 - y) / (y1 - y0)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_W}" height="{_SVG_H}" '
        f'viewBox="0 0 {_SVG_W} {_SVG_H}">',
        f'<rect width="{_SVG_W}" height="{_SVG_H}" fill="white"/>',
        f'<line x1="{_MARGIN_L}" y1="{_MARGIN_T + ph}" x2="{_MARGIN_L + pw}" '
        f'y2="{_MARGIN_T + ph}" stroke="black"/>',
        f'<line x1="{_MARGIN_L}" y1="{_MARGIN_T}" x2="{_MARGIN_L}" '
        f'y2="{_MARGIN_T + ph}" stroke="black"/>',
    ]
    for i in range(5):
        tx = x0 + (x1 - x0) * i / 4
        ty = y0 + (y1 - y0) * i / 4
        parts.append(
            f'<text x="{px(tx):.1f}" y="{_MARGIN_T + ph + 18}" font-size="11" '
            f'text-anchor="middle">{tx:.3g}</text>'
        )
        parts.append(
            f'<text x="{_MARGIN_L - 6}" y="{py(ty) + 4:.1f}" font-size="11" '
            f'text-anchor="end">{ty:.3g}</text>'
        )
    parts.append(
        f'<line x1="{px(min(series["log_x"])):.1f}" y1="{py(slope * min(series["log_x"]) + intercept):.1f}" '
        f'x2="{px(max(series["log_x"])):.1f}" y2="{py(slope * max(series["log_x"]) + intercept):.1f}" '
        f'stroke="steelblue" stroke-width="1.5"/>'
    )
    for x, y in zip(xs, ys):
        parts.append(f'<circle cx="{px(x):.1f}" cy="{py(y):.1f}" r="3" fill="crimson"/>')
    parts.append(
        f'<text x="{_MARGIN_L + 8}" y="{_MARGIN_T + 14}" font-size="13">'
        f"{name}: slope = {slope:.4f} (r^2 = {fit['r_squared']:.4f})</text>"
    )
    parts.append(
        f'<text x="{(_MARGIN_L + pw / 2):.0f}" y="{_SVG_H - 12}" font-size="12" '
        f'text-anchor="middle">log x</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_report(report_path: str) -> list[str]:
    """Write per-fit series CSVs and SVG plots next to the report.

    Returns the list of files written; an empty fits map writes nothing and
    logs a warning.
    """
    with open(report_path, encoding="utf-8") as fh:
        payload = json.load(fh)
    fits = payload.get("fits", {})
    series = payload.get("series", {})
    if not fits:
        log.warning("report has no fits; nothing to render")
        return []
    outdir = os.path.dirname(os.path.abspath(report_path))
    written = []
    for name, fit in sorted(fits.items()):
        data = series.get(name)
        if data is None or not data.get("log_x"):
            log.warning("fit %s has no stored series; skipping", name)
            continue
        series_path = os.path.join(outdir, f"{name}_series.csv")
        rows = list(zip(data["log_x"], data["log_y"]))
        _write_csv(series_path, "log_x,log_y", rows)
        written.append(series_path)
        svg_path = os.path.join(outdir, f"{name}.svg")
        with open(svg_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(_svg_plot(name, data, fit))
        written.append(svg_path)
        log.info("rendered %s", svg_path)
    return written


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    try:
        report, outdir = run(cfg, force=args.force, jobs=args.jobs)
    except UnknownNameError as exc:
        log.error("unknown name: %s", exc)
        return EXIT_UNKNOWN_NAME
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except NearSingularError as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    for name, fit in sorted(report.fits.items()):
        print(f"fit {name}: slope={fit.slope:.6f} r2={fit.r_squared:.6f}")
    for name, outcome in sorted(report.check_results.items()):
        print(f"check {name}: {'pass' if outcome.passed else 'FAIL'}")
    print(f"report: {os.path.join(outdir, 'report.json')}")
    return EXIT_OK


def _cmd_render(args: argparse.Namespace) -> int:
    try:
        written = render_report(args.report)
    except (OSError, json.JSONDecodeError) as exc:
        log.error("cannot render %s: %s", args.report, exc)
        return EXIT_CONFIG
    for path in written:
        print(path)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = argparse.ArgumentParser(
        prog="torusdamp",
        description="Resolvent sweeps, microlocal checks, and decay fits for "
        "damped waves on the torus with strip-invariant damping.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute a sweep config")
    p_run.add_argument("config", help="path to an INI sweep config")
    p_run.add_argument("--force", action="store_true", help="ignore the cache")
    p_run.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")
    p_run.set_defaults(func=_cmd_run)
    p_render = sub.add_parser("render", help="render plots from a report.json")
    p_render.add_argument("report", help="path to a report.json")
    p_render.set_defaults(func=_cmd_render)
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
