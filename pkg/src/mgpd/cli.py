"""Command-line interface: ``mgpd simulate | excess | eval | convert | fit | diagnose``.

Models are JSON objects ``{"sigma": [...], "gamma": [...], "pi": [...] or
"tau": [...], "stdf": {"variant": ..., "dim": ..., "params": {...}}}`` given
inline or as a file path. Exit codes: 0 success, 2 usage error, 3 domain
error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import constancy_diagnostic, exceedance_probs
from .batch import format_csv, parse_csv
from .density import LogisticGP, UnivariateGP, fit_mle, standard_errors
from .errors import ContractError, DomainError, NumericalError
from .params import GevParams, GpParams, gev_to_gp, gp_cdf
from .representations import simulate_gp, spectral_from_pi_ell

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_NUMERICAL = 0, 2, 3, 4


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Settings for one subcommand: a ``--config`` JSON file overlaid by explicit flags."""

    command: str
    options: dict = field(default_factory=dict)

    def get(self, key, default=None):
        val = self.options.get(key)
        return default if val is None else val

    def require(self, key):
        val = self.options.get(key)
        if val is None:
            raise UsageError(f"--{key.replace('_', '-')} is required for '{self.command}'")
        return val


def _load_json(text_or_path, what: str):
    if isinstance(text_or_path, dict):
        return text_or_path
    text = str(text_or_path).strip()
    if not text.startswith("{"):
        path = Path(text)
        if not path.exists():
            raise UsageError(f"{what}: no such file {text!r}")
        text = path.read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DomainError(f"{what} is not valid JSON: {exc}") from None


def _model(cfg: RunConfig) -> GpParams:
    return GpParams.from_dict(_load_json(cfg.require("model"), "model"))


def _vector(text, name: str) -> np.ndarray:
    if isinstance(text, (list, tuple)):
        return np.asarray(text, dtype=float)
    try:
        return np.array([float(v) for v in str(text).split(",")])
    except ValueError:
        raise DomainError(f"{name} must be a comma-separated list of numbers") from None


def _read_csv(path) -> np.ndarray:
    if str(path) == "-":
        return parse_csv(sys.stdin.read())
    return parse_csv(Path(path).read_text(encoding="utf-8"))


def _emit(obj, cfg: RunConfig, out):
    text = json.dumps(obj, indent=2, default=float) + "\n"
    target = cfg.get("output")
    if target:
        Path(target).write_text(text, encoding="utf-8")
    else:
        out.write(text)


# -- subcommands ----------------------------------------------------------------------


def cmd_simulate(cfg: RunConfig, out) -> int:
    seed = cfg.require("seed")
    n = int(cfg.require("n"))
    if n < 0:
        raise DomainError("n must be nonnegative")
    h = _model(cfg)
    stream = int(cfg.get("stream", 0))
    batch = simulate_gp(h.sigma, h.gamma, spectral_from_pi_ell(h.pi, h.ell), n,
                        seed=int(seed), stream=stream, params={"model": h.to_dict()})
    target = cfg.get("output")
    if target:
        batch.write(target)
    else:
        out.write(batch.to_csv())
    return EXIT_OK


def cmd_excess(cfg: RunConfig, out) -> int:
    """Rows y with y not <= u, written as x = y - u (columns with u_j = -inf pass unshifted)."""
    data = _read_csv(cfg.require("input"))
    u = _vector(cfg.require("u"), "u")
    if u.size != data.shape[1]:
        raise DomainError(f"u has {u.size} entries but the input has {data.shape[1]} columns")
    keep = np.any(data > u, axis=1)
    shift = np.where(np.isneginf(u), 0.0, u)
    text = format_csv(data[keep] - shift)
    target = cfg.get("output")
    if target:
        Path(target).write_text(text, encoding="utf-8")
    else:
        out.write(text)
    sys.stderr.write(f"{int(keep.sum())} of {data.shape[0]} rows exceed the threshold\n")
    return EXIT_OK


def cmd_eval(cfg: RunConfig, out) -> int:
    h = _model(cfg)
    if cfg.get("x") is not None:
        points = np.atleast_2d(_vector(cfg.get("x"), "x"))
    else:
        points = _read_csv(cfg.require("input"))
    cdf = np.atleast_1d(gp_cdf(h, points))
    result = {"points": points.tolist(), "cdf": cdf.tolist()}
    nonneg = [bool(np.all(p >= 0)) for p in points]
    if all(nonneg):
        probs = [exceedance_probs(h, p) for p in points]
        result["any_exceedance"] = [p[0] for p in probs]
        result["all_exceedance"] = [p[1] for p in probs]
    _emit(result, cfg, out)
    return EXIT_OK


def cmd_convert(cfg: RunConfig, out) -> int:
    gev = GevParams.from_dict(_load_json(cfg.require("gev"), "gev"))
    _emit(gev_to_gp(gev).to_dict(), cfg, out)
    return EXIT_OK


def cmd_fit(cfg: RunConfig, out) -> int:
    data = _read_csv(cfg.require("input"))
    family_name = cfg.get("family", "logistic" if data.shape[1] > 1 else "univariate")
    if family_name == "univariate":
        if data.shape[1] != 1:
            raise DomainError("the univariate family needs a single column")
        family = UnivariateGP()
        data = data[:, 0]
        init = {"sigma": float(np.mean(data[data > 0])), "gamma": 0.0}
    elif family_name == "logistic":
        family = LogisticGP(data.shape[1])
        init = family.initial(data)
    else:
        raise UsageError(f"unknown family {family_name!r} (choose univariate or logistic)")
    if cfg.get("init") is not None:
        init.update(_load_json(cfg.get("init"), "init"))
    fit = fit_mle(data, family, init, max_iter=int(cfg.get("max_iter", 4000)))
    report = fit.to_dict()
    se = standard_errors(family, fit.params, data)
    report["se"] = {k: np.asarray(v).tolist() for k, v in se.items()}
    report["family"] = family_name
    _emit(report, cfg, out)
    return EXIT_OK


def cmd_diagnose(cfg: RunConfig, out) -> int:
    h = _model(cfg)
    data = _read_csv(cfg.require("input"))
    p_grid = _vector(cfg.get("p", "0.01,0.02,0.05,0.1"), "p")
    rows = constancy_diagnostic(data, h, p_grid)
    if cfg.get("table"):
        lines = [f"{'p':>8} {'empirical':>12} {'p*ell(1)':>12} {'ratio':>10} {'se':>10}"]
        for r in rows:
            lines.append(f"{r['p']:>8.4g} {r['empirical']:>12.6g} {r['model']:>12.6g} "
                         f"{r['ratio']:>10.5g} {r['se']:>10.3g}")
        out.write("\n".join(lines) + "\n")
    else:
        _emit({"extremal_coefficient": float(h.ell(np.ones(h.dim))), "rows": rows}, cfg, out)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "excess": cmd_excess,
    "eval": cmd_eval,
    "convert": cmd_convert,
    "fit": cmd_fit,
    "diagnose": cmd_diagnose,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mgpd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON file with default options (flags override)")
        p.add_argument("-o", "--output", help="output path (default: stdout)")
        return p

    p = add("simulate", "simulate a GP sample to CSV (+ JSON sidecar)")
    p.add_argument("--model", help="model JSON (inline or file)")
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--stream", type=int)

    p = add("excess", "keep rows exceeding a threshold and subtract it")
    p.add_argument("--input", help="CSV path or - for stdin")
    p.add_argument("--u", help="thresholds, comma-separated ('-inf' allowed)")

    p = add("eval", "evaluate the cdf (and exceedance probabilities for x >= 0)")
    p.add_argument("--model")
    p.add_argument("--x", help="one point, comma-separated")
    p.add_argument("--input", help="CSV of points")

    p = add("convert", "convert GEV parameters to the GP parametrization")
    p.add_argument("--gev", help="GEV JSON: mu, gamma, alpha, stdf")

    p = add("fit", "maximum likelihood fit of a parametric family")
    p.add_argument("--input")
    p.add_argument("--family", choices=["univariate", "logistic"])
    p.add_argument("--init", help="JSON with starting values")
    p.add_argument("--max-iter", dest="max_iter", type=int)

    p = add("diagnose", "constancy diagnostic for marginal vs joint exceedances")
    p.add_argument("--model")
    p.add_argument("--input")
    p.add_argument("--p", help="comma-separated probabilities")
    p.add_argument("--table", action="store_true", default=None,
                   help="print a human-readable table instead of JSON")
    return parser


def parse_config(argv) -> RunConfig:
    args = build_parser().parse_args(argv)
    options = {}
    if args.config:
        options.update(_load_json(args.config, "config"))
    for key, val in vars(args).items():
        if key not in ("command", "config") and val is not None:
            options[key] = val
    return RunConfig(args.command, options)


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        cfg = parse_config(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return COMMANDS[cfg.command](cfg, out)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except (DomainError, ContractError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DOMAIN
    except NumericalError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
