"""Batch driver: ``ensemble-boundary <command> --config run.cfg [key=value ...]``.

Config files are flat ``key = value`` text. Keys are dotted
(``sampler.n_samples``); an INI-style ``[sampler]`` line prefixes the keys
that follow it. Positional ``key=value`` overrides beat the file, and
``--seed`` beats both.

Every command writes one UTF-8 CSV, atomically, headed by ``#`` manifest
lines that record the resolved configuration. Floats are written in
shortest round-trip form, so identical runs give byte-identical files for
any worker count.

Exit codes: 0 ok, 1 config/validation error, 2 contract violation,
3 written but some estimate was flagged as not converged.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .analysis import (
    MinimizerConfig,
    boundary_scan,
    classify_case,
    conversion_stats_from_samples,
    critical_w,
    ground_state_search,
    magnetization_scan,
    natural_w_scale,
    rotation_stats_from_samples,
)
from .errors import ContractViolation, ValidationError
from .hilbert import HermitianOperator, sigma_x, sigma_z
from .models import build_curie_weiss, build_enantiomer
from .parallel import cell_seed, default_workers, map_ordered
from .ste import (
    Augmented,
    HermitianExpectation,
    Linear,
    SamplerConfig,
    draw_ensemble,
    estimate,
    ste_quadrature_2d,
)
from .vnte import ThermalParams, vnte_expectation, vnte_partition

COMMANDS = ("vnte", "ste", "classify", "ground", "scan-boundary", "detect", "magnet")

EXIT_OK, EXIT_CONFIG, EXIT_CONTRACT, EXIT_FLAGGED = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


# -- value parsers ------------------------------------------------------------


def _float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"not a number: {text!r}") from None


def _int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"not an integer: {text!r}") from None


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _grid(text: str) -> tuple:
    """Comma list of numbers, or ``start:stop:count`` for an inclusive linspace."""
    text = text.strip()
    if text.count(":") == 2 and "," not in text:
        a, b, n = text.split(":")
        return tuple(float(x) for x in np.linspace(_float(a), _float(b), _int(n)))
    values = tuple(_float(x) for x in text.split(",") if x.strip())
    if not values:
        raise ConfigError("empty grid")
    return values


def _matrix(text: str) -> np.ndarray:
    """JSON nested list; entries may be numbers or strings such as "1-2j"."""
    try:
        rows = json.loads(text)
        return np.array([[complex(x) for x in row] for row in rows], dtype=complex)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad matrix {text!r}: {exc}") from None


def _choice(*options):
    def parse(text):
        if text not in options:
            raise ConfigError(f"{text!r} not one of {', '.join(options)}")
        return text

    return parse


def _str(text):
    return text


# key -> (parser, default as text)
SCHEMA = {
    "seed": (_int, "0"),
    "model.kind": (_choice("enantiomer", "curie_weiss", "matrix"), "enantiomer"),
    "model.E": (_float, "0"),
    "model.delta": (_float, "1"),
    "model.d": (_float, "1"),
    "model.w": (_float, "0"),
    "model.N": (_int, "1"),
    "model.J": (_float, "1"),
    "model.H": (_matrix, "[[0, -1], [-1, 0]]"),
    "thermal.T_grid": (_grid, "1"),
    "sampler.method": (_choice("metropolis", "uniform"), "metropolis"),
    "sampler.n_samples": (_int, "40000"),
    "sampler.n_chains": (_int, "4"),
    "sampler.burn_in": (_int, "2000"),
    "sampler.step_size": (_float, "0.3"),
    "sampler.rhat_threshold": (_float, "1.05"),
    "sampler.min_ess": (_float, "100"),
    "vnte.observable": (_str, "sigma_x"),
    "ste.observable": (_str, "sigma_x"),
    "ste.quadrature": (_bool, "true"),
    "classify.w_grid": (_grid, ""),
    "ground.w_grid": (_grid, ""),
    "ground.n_starts": (_int, "32"),
    "ground.max_iter": (_int, "100000"),
    "ground.gtol": (_float, "1e-9"),
    "scan.w_grid": (_grid, "0,0.02,0.04,0.06,0.08"),
    "scan.bins": (_int, "20"),
    "detect.bins": (_int, "20"),
    "magnet.w_grid": (_grid, "0,0.5,1,2"),
    "magnet.w_units": (_choice("absolute", "natural"), "natural"),
}


def parse_config_text(text: str) -> dict:
    raw = {}
    section = ""
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        raw[f"{section}.{key}" if section and "." not in key else key] = value
    return raw


@dataclass
class RunConfig:
    command: str
    values: dict
    out: str
    workers: int = 1
    raw: dict = field(default_factory=dict)

    @property
    def seed(self) -> int:
        return self.values["seed"]

    def __getitem__(self, key):
        return self.values[key]


def resolve(command: str, raw: dict, out: str | None = None, workers: int | None = None) -> RunConfig:
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    unknown = sorted(set(raw) - set(SCHEMA))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    values, used = {}, {}
    for key, (parse, default) in SCHEMA.items():
        text = raw.get(key, default)
        if text == "" and key.endswith("w_grid"):
            values[key] = None
            continue
        try:
            values[key] = parse(text)
        except ConfigError as exc:
            raise ConfigError(f"{key}: {exc}") from None
        used[key] = text
    if not 0 <= values["seed"] < 2**64:
        raise ConfigError("seed must fit in an unsigned 64-bit integer")
    return RunConfig(
        command=command,
        values=values,
        out=out or f"{command}.csv",
        workers=workers if workers is not None else default_workers(),
        raw={k: raw[k] for k in sorted(raw)},
    )


# -- building blocks --------------------------------------------------------------


def _sampler(cfg: RunConfig, seed: int | None = None) -> SamplerConfig:
    return SamplerConfig(
        method=cfg["sampler.method"],
        n_samples=cfg["sampler.n_samples"],
        n_chains=cfg["sampler.n_chains"],
        burn_in=cfg["sampler.burn_in"],
        step_size=cfg["sampler.step_size"],
        seed=cfg.seed if seed is None else seed,
        rhat_threshold=cfg["sampler.rhat_threshold"],
        min_ess=cfg["sampler.min_ess"],
    )


def _model(cfg: RunConfig, w: float | None = None):
    kind = cfg["model.kind"]
    w = cfg["model.w"] if w is None else w
    if kind == "enantiomer":
        return build_enantiomer(cfg["model.E"], cfg["model.delta"], cfg["model.d"], w, cfg["model.N"])
    if kind == "curie_weiss":
        return build_curie_weiss(cfg["model.N"], cfg["model.J"], w)
    return None


def _hamiltonian(cfg: RunConfig) -> HermitianOperator:
    model = _model(cfg)
    return HermitianOperator(cfg["model.H"]) if model is None else model.H


def _energy(cfg: RunConfig):
    model = _model(cfg)
    return Linear(HermitianOperator(cfg["model.H"])) if model is None else Augmented.from_model(model)


def _observable(cfg: RunConfig, name: str) -> HermitianOperator:
    model = _model(cfg)
    H = _hamiltonian(cfg)
    dim = H.dim
    named = {
        "identity": lambda: HermitianOperator.identity(dim),
        "H": lambda: H,
    }
    if dim == 2:
        named["sigma_x"] = sigma_x
        named["sigma_z"] = sigma_z
        named["P_A"] = lambda: HermitianOperator.diagonal([1, 0])
        named["P_B"] = lambda: HermitianOperator.diagonal([0, 1])
    if model is not None and cfg["model.kind"] == "curie_weiss":
        named["m2"] = lambda: model.m2
        named["M"] = lambda: model.M
    if name in named:
        return named[name]()
    if name.lstrip().startswith("["):
        O = HermitianOperator(_matrix(name))
        if O.dim != dim:
            raise ContractViolation(f"observable dim {O.dim} does not match H dim {dim}")
        return O
    raise ConfigError(f"unknown observable {name!r} for this model (known: {', '.join(sorted(named))})")


def _temperatures(cfg: RunConfig) -> list:
    return [ThermalParams(T) for T in cfg["thermal.T_grid"]]


# -- commands -------------------------------------------------------------------------
# each returns (columns, rows, flagged)


def cmd_vnte(cfg: RunConfig):
    H = _hamiltonian(cfg)
    O = _observable(cfg, cfg["vnte.observable"])
    rows = []
    for p in _temperatures(cfg):
        Z = vnte_partition(H, p)
        rows.append([p.T, p.beta, vnte_expectation(H, O, p), Z.log_z])
    return ["T", "beta", "expectation", "log_Z"], rows, False


def _ste_cell(task):
    energy, obs, params, sampler, quad = task
    est = estimate(draw_ensemble(energy, params, sampler), obs)
    q = ste_quadrature_2d(energy, obs, params) if quad else None
    return est, q


def cmd_ste(cfg: RunConfig):
    energy = _energy(cfg)
    obs = HermitianExpectation(_observable(cfg, cfg["ste.observable"]))
    quad = cfg["ste.quadrature"] and energy.dim == 2
    temps = _temperatures(cfg)
    tasks = [(energy, obs, p, _sampler(cfg, cell_seed(cfg.seed, i)), quad) for i, p in enumerate(temps)]
    results = map_ordered(_ste_cell, tasks, cfg.workers)
    rows, flagged = [], False
    for p, (est, q) in zip(temps, results):
        flagged |= est.flagged
        rows.append([p.T, cfg["sampler.method"], est.mean, est.std_error, est.n_effective, est.r_hat,
                     est.acceptance_rate, est.flagged, q])
    cols = ["T", "method", "mean", "std_error", "n_effective", "r_hat", "acceptance_rate", "flagged", "quadrature"]
    return cols, rows, flagged


def _w_grid(cfg: RunConfig, key: str) -> tuple:
    grid = cfg[key]
    return (cfg["model.w"],) if grid is None else grid


def _require_enantiomer(cfg: RunConfig):
    if cfg["model.kind"] != "enantiomer":
        raise ConfigError(f"{cfg.command} needs model.kind = enantiomer")


def cmd_classify(cfg: RunConfig):
    _require_enantiomer(cfg)
    E, delta, d, N = cfg["model.E"], cfg["model.delta"], cfg["model.d"], cfg["model.N"]
    wc = critical_w(E, delta, d, N)
    rows = []
    for w in _w_grid(cfg, "classify.w_grid"):
        c = classify_case(build_enantiomer(E, delta, d, w, N))
        rows.append([E, delta, d, N, w, str(c.verdict), c.energy_localized, c.energy_superposed, c.margin, wc])
    cols = ["E", "delta", "d", "N", "w", "verdict", "energy_localized", "energy_superposed", "margin", "critical_w"]
    return cols, rows, False


def _ground_cell(task):
    energy, dim, mcfg = task
    return ground_state_search(energy, dim, mcfg)


def cmd_ground(cfg: RunConfig):
    if cfg["model.kind"] == "matrix":
        grid = (0.0,)
        energies = [Linear(HermitianOperator(cfg["model.H"]))]
    else:
        grid = _w_grid(cfg, "ground.w_grid")
        energies = [Augmented.from_model(_model(cfg, w)) for w in grid]
    dim = energies[0].dim
    tasks = [
        (e, dim, MinimizerConfig(cfg["ground.n_starts"], cfg["ground.max_iter"], cfg["ground.gtol"], cell_seed(cfg.seed, i)))
        for i, e in enumerate(energies)
    ]
    rows = []
    for w, r in zip(grid, map_ordered(_ground_cell, tasks, cfg.workers)):
        probs = np.abs(r.minimizer.amplitudes) ** 2
        rows.append([w, r.energy, r.converged, r.iterations, len(r.local_minima), *probs])
    cols = ["w", "energy", "converged", "iterations", "n_minima"] + [f"p_{k}" for k in range(dim)]
    return cols, rows, False


def cmd_scan_boundary(cfg: RunConfig):
    _require_enantiomer(cfg)
    for w in cfg["scan.w_grid"]:
        _model(cfg, w)
    _temperatures(cfg)
    cells = boundary_scan(
        cfg["model.E"], cfg["model.delta"], cfg["model.d"], cfg["model.N"],
        cfg["scan.w_grid"], cfg["thermal.T_grid"], _sampler(cfg), cfg["scan.bins"], cfg.workers,
    )
    rows, flagged = [], False
    for c in cells:
        flagged |= c.conversion.flagged
        rows.append([c.w, c.T, str(c.verdict), c.margin, c.conversion.mean, c.conversion.std_error,
                     c.bimodality, c.conversion.n_effective, c.conversion.r_hat, c.conversion.flagged])
    cols = ["w", "T", "verdict", "margin", "mean_P_A", "std_error", "bimodality", "n_effective", "r_hat", "flagged"]
    return cols, rows, flagged


def _detect_cell(task):
    model, params, sampler, bins = task
    samples = draw_ensemble(Augmented.from_model(model), params, sampler)
    return (
        conversion_stats_from_samples(model, samples, bins),
        rotation_stats_from_samples(model, samples, bins),
    )


def cmd_detect(cfg: RunConfig):
    _require_enantiomer(cfg)
    model = _model(cfg)
    temps = _temperatures(cfg)
    tasks = [(model, p, _sampler(cfg, cell_seed(cfg.seed, i)), cfg["detect.bins"]) for i, p in enumerate(temps)]
    rows, flagged = [], False
    for p, stats in zip(temps, map_ordered(_detect_cell, tasks, cfg.workers)):
        for name, s in zip(("conversion", "rotation"), stats):
            est, h = s.estimate, s.histogram
            flagged |= est.flagged
            for b in range(len(h.masses)):
                rows.append([p.T, name, b, h.edges[b], h.edges[b + 1], h.masses[b], h.std_errors[b],
                             est.mean, est.std_error, s.localized_fraction, est.r_hat, est.flagged])
    cols = ["T", "statistic", "bin", "bin_lo", "bin_hi", "mass", "mass_se", "mean", "std_error",
            "localized_fraction", "r_hat", "flagged"]
    return cols, rows, flagged


def cmd_magnet(cfg: RunConfig):
    model = build_curie_weiss(cfg["model.N"], cfg["model.J"], 0.0)
    scale = natural_w_scale(model) if cfg["magnet.w_units"] == "natural" else 1.0
    w_grid = [scale * w for w in cfg["magnet.w_grid"]]
    for w in w_grid:
        model.with_w(w)
    temps = _temperatures(cfg)
    cells = magnetization_scan(model, [p.T for p in temps], w_grid, _sampler(cfg), cfg.workers)
    rows, flagged = [], False
    for c in cells:
        s = c.ste_m2
        flagged |= s.flagged
        rows.append([c.T, c.w, c.vnte_m2, s.mean, s.std_error, s.n_effective, s.r_hat, s.acceptance_rate, s.flagged])
    cols = ["T", "w", "vnte_m2", "ste_m2", "std_error", "n_effective", "r_hat", "acceptance_rate", "flagged"]
    return cols, rows, flagged


DISPATCH = {
    "vnte": cmd_vnte,
    "ste": cmd_ste,
    "classify": cmd_classify,
    "ground": cmd_ground,
    "scan-boundary": cmd_scan_boundary,
    "detect": cmd_detect,
    "magnet": cmd_magnet,
}


# -- output ------------------------------------------------------------------------------


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def render_csv(cfg: RunConfig, columns, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# ensemble-boundary {__version__}\n")
    buf.write(f"# command = {cfg.command}\n")
    for key in sorted(SCHEMA):
        if key in cfg.raw or key == "seed":
            text = str(cfg.seed) if key == "seed" else cfg.raw[key]
        else:
            text = SCHEMA[key][1]
        buf.write(f"# {key} = {text}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()


def write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run(cfg: RunConfig) -> int:
    """Execute one command and write its CSV; returns the exit status."""
    columns, rows, flagged = DISPATCH[cfg.command](cfg)
    write_atomic(cfg.out, render_csv(cfg, columns, rows))
    return EXIT_FLAGGED if flagged else EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage errors are config errors; argparse's default status 2 would
        # collide with the contract-violation code
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ensemble-boundary", description=__doc__.split("\n\n")[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--seed", type=int, help="master 64-bit seed (overrides config)")
    p.add_argument("--out", help="output CSV path (default: <command>.csv)")
    p.add_argument("--workers", type=int, help="worker processes (default: $%s or CPU count)" % "ENSEMBLE_BOUNDARY_WORKERS")
    p.add_argument("overrides", nargs="*", metavar="key=value")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_intermixed_args(argv)
    try:
        raw = {}
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                raw.update(parse_config_text(fh.read()))
        for item in args.overrides:
            if "=" not in item:
                raise ConfigError(f"override {item!r} is not key=value")
            k, v = item.split("=", 1)
            raw[k.strip()] = v.strip()
        if args.seed is not None:
            raw["seed"] = str(args.seed)
        if args.workers is not None and args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        cfg = resolve(args.command, raw, args.out, args.workers)
        return run(cfg)
    except (ConfigError, ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ContractViolation as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return EXIT_CONTRACT


if __name__ == "__main__":
    sys.exit(main())
