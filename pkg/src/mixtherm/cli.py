"""Command-line front end: ``mixtherm <command> --config run.json [--out DIR]``.

Each command reads one JSON config, writes CSV tables atomically into the
output directory together with ``report.json``, and exits with
0 (success), 2 (config error), 3 (numeric failure) or 4 (experimental command
refused without ``--allow-experimental``).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from . import __version__, hierarchy, kernels, ns_coefficients, thermo
from .core_types import (
    CLOSED_FORMS,
    CorrelationModel,
    MixtureState,
    MultiIndex,
    PairPotential,
    SpeciesSpec,
    Statistics,
    Tolerances,
    build_mixture,
    multi_index,
    pair_key,
)
from .errors import (
    ConfigError,
    ExperimentalRefused,
    MissingCorrelation,
    MixthermError,
    NumericFailure,
    ValidationError,
)

log = logging.getLogger("mixtherm")

COMMANDS = ("ideal-tau", "thermo", "tau-field", "condensate-scan", "ns-check", "gk", "validate")
EXPERIMENTAL = {"condensate-scan"}

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_EXPERIMENTAL = 0, 2, 3, 4

_NUMBER = {"type": "number"}
_POSITIVE = {"type": "number", "exclusiveMinimum": 0}
_GRID = {
    "oneOf": [
        {"type": "array", "items": _POSITIVE, "minItems": 1},
        {
            "type": "object",
            "properties": {
                "start": _POSITIVE,
                "stop": _POSITIVE,
                "num": {"type": "integer", "minimum": 1},
                "spacing": {"enum": ["linear", "log"]},
            },
            "required": ["start", "stop", "num"],
            "additionalProperties": False,
        },
    ]
}
_PAIR = {"type": "array", "items": {"type": "string"}, "minItems": 2, "maxItems": 2}

SCHEMA = {
    "type": "object",
    "properties": {
        "species": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "properties": {
                    "label": {"type": "string", "minLength": 1},
                    "mass": _POSITIVE,
                    "spin_degeneracy": {"type": "integer", "minimum": 1},
                    "statistics": {"enum": ["fermi", "bose", "Fermi", "Bose"]},
                    "density": _POSITIVE,
                },
                "required": ["label", "mass", "spin_degeneracy", "statistics", "density"],
                "additionalProperties": False,
            },
        },
        "potentials": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "pair": _PAIR,
                    "form": {"enum": list(CLOSED_FORMS)},
                    "params": {"type": "object", "additionalProperties": _NUMBER},
                    "table": {"type": "string"},
                    "tail": {"enum": ["zero", None]},
                },
                "required": ["pair"],
                "oneOf": [{"required": ["form"]}, {"required": ["table"]}],
                "additionalProperties": False,
            },
        },
        "correlations": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "pair": _PAIR,
                    "model": {"enum": ["unity", "classical-boltzmann", "tabulated"]},
                    "table": {"type": "string"},
                },
                "required": ["pair", "model"],
                "additionalProperties": False,
            },
        },
        "default_correlation": {"enum": ["unity", "classical-boltzmann"]},
        "tolerances": {
            "type": "object",
            "properties": {
                "kernel_rtol": _POSITIVE,
                "fd_rel_step": _POSITIVE,
                "ode_rtol": _POSITIVE,
                "anchor_alpha_max": _NUMBER,
                "z_points": {"type": "integer", "minimum": 2},
                "z_extent": _POSITIVE,
                "oracle_max_points": {"type": "integer", "minimum": 16},
                "max_permutations": {"type": "integer", "minimum": 1},
                "radial_rtol": _POSITIVE,
            },
            "additionalProperties": False,
        },
        "ideal_tau": {
            "type": "object",
            "properties": {"theta": _GRID, "rho": _GRID},
            "required": ["theta"],
            "additionalProperties": False,
        },
        "thermo": {
            "type": "object",
            "properties": {
                "theta": _GRID,
                "rho": _GRID,
                "tau": {"oneOf": [{"const": "ideal"}, _POSITIVE]},
                "split_radius": _POSITIVE,
            },
            "required": ["theta"],
            "additionalProperties": False,
        },
        "tau_field": {
            "type": "object",
            "properties": {
                "theta_min": _POSITIVE,
                "theta_max": _POSITIVE,
                "n_theta": {"type": "integer", "minimum": 2},
                "rho_min": _POSITIVE,
                "rho_max": _POSITIVE,
                "n_rho": {"type": "integer", "minimum": 2},
                "n_characteristics": {"type": ["integer", "null"], "minimum": 2},
                "require_classical_anchor": {"type": "boolean"},
                "split_radius": _POSITIVE,
            },
            "required": ["theta_min", "theta_max", "n_theta", "rho_min", "rho_max", "n_rho"],
            "additionalProperties": False,
        },
        "condensate_scan": {
            "type": "object",
            "properties": {"theta": _GRID, "rho": _POSITIVE},
            "required": ["theta"],
            "additionalProperties": False,
        },
        "ns_check": {
            "type": "object",
            "properties": {
                "tau": _POSITIVE,
                "dim": {"enum": [1, 3]},
                "reductions": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "properties": {
                            "s": {"oneOf": [
                                {"type": "string"},
                                {"type": "array", "items": {"type": "integer", "minimum": 0}},
                            ]},
                            "kind": {"type": "string"},
                        },
                        "required": ["s", "kind"],
                        "additionalProperties": False,
                    },
                },
                "incompatibility": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "properties": {
                            "dist_1": {"enum": list(ns_coefficients.DISTRIBUTIONS)},
                            "dist_2": {"enum": list(ns_coefficients.DISTRIBUTIONS)},
                            "kappas": {"type": "array", "items": {"type": "integer", "minimum": 1},
                                       "minItems": 2, "maxItems": 2},
                            "densities": {"type": "array", "items": _POSITIVE,
                                          "minItems": 2, "maxItems": 2},
                            "mass": _POSITIVE,
                            "temperature": _POSITIVE,
                        },
                        "required": ["dist_1", "dist_2"],
                        "additionalProperties": False,
                    },
                },
            },
            "required": ["tau"],
            "additionalProperties": False,
        },
        "gk": {
            "type": "object",
            "properties": {
                "alpha": {"oneOf": [
                    {"type": "array", "items": _NUMBER, "minItems": 1},
                    {"type": "object",
                     "properties": {"start": _NUMBER, "stop": _NUMBER,
                                    "num": {"type": "integer", "minimum": 1}},
                     "required": ["start", "stop", "num"], "additionalProperties": False},
                ]},
                "statistics": {"type": "array", "items": {"enum": ["fermi", "bose"]}},
                "orders": {"type": "array", "items": {"enum": [0, 1]}},
            },
            "required": ["alpha"],
            "additionalProperties": False,
        },
        "validate": {
            "type": "object",
            "properties": {"seed": {"type": "integer"}},
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

# which commands need a species list
_NEEDS_SPECIES = {"ideal-tau", "thermo", "tau-field", "condensate-scan", "ns-check"}
_SECTION = {
    "ideal-tau": "ideal_tau",
    "thermo": "thermo",
    "tau-field": "tau_field",
    "condensate-scan": "condensate_scan",
    "ns-check": "ns_check",
    "gk": "gk",
    "validate": "validate",
}


# -- configuration -----------------------------------------------------------

def _pointer(parts) -> str:
    return "/" + "/".join(str(p).replace("~", "~0").replace("/", "~1") for p in parts)


@dataclass
class RunConfig:
    raw: dict
    base_dir: Path
    digest: str
    tolerances: Tolerances
    species: list = field(default_factory=list)
    potentials: list = field(default_factory=list)
    correlations: list = field(default_factory=list)
    default_correlation: Optional[str] = None

    def section(self, command: str) -> dict:
        name = _SECTION[command]
        if name not in self.raw:
            if command == "validate":
                return {}
            raise ConfigError(f"command {command!r} needs a {name!r} section", _pointer([name]))
        return self.raw[name]


def _read_table(path: Path, columns, where):
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read table {str(path)!r}: {exc}", where) from None
    if data.shape[1] < len(columns):
        raise ConfigError(f"table {str(path)!r} needs columns {columns}", where)
    return [data[:, i] for i in range(len(columns))]


def load_config(path, text: Optional[str] = None) -> RunConfig:
    """Parse, schema-check and resolve a run configuration."""
    path = Path(path)
    if text is None:
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}", "/") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}",
                          "/") from None
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ConfigError(err.message, _pointer(err.absolute_path))
    tolerances = Tolerances.from_mapping(raw.get("tolerances", {}))
    cfg = RunConfig(raw, path.resolve().parent, hashlib.sha256(text.encode()).hexdigest(),
                    tolerances, default_correlation=raw.get("default_correlation"))
    labels = []
    for i, entry in enumerate(raw.get("species", [])):
        if entry["label"] in labels:
            raise ConfigError(f"duplicate species label {entry['label']!r}",
                              _pointer(["species", i, "label"]))
        try:
            cfg.species.append(SpeciesSpec(entry["label"], float(entry["mass"]),
                                           entry["spin_degeneracy"], entry["statistics"],
                                           float(entry["density"])))
        except ValidationError as exc:
            raise ConfigError(str(exc), _pointer(["species", i])) from None
        labels.append(entry["label"])
    for i, entry in enumerate(raw.get("potentials", [])):
        where = _pointer(["potentials", i, "pair"])
        for lab in entry["pair"]:
            if lab not in labels:
                raise ConfigError(f"unknown species {lab!r}", where)
        pair = tuple(entry["pair"])
        try:
            if "form" in entry:
                pot = PairPotential.closed_form(pair, entry["form"], **entry.get("params", {}))
            else:
                table = cfg.base_dir / entry["table"]
                r, k = _read_table(table, ("r", "K"), _pointer(["potentials", i, "table"]))
                pot = PairPotential.tabulated(pair, r, k, tail=entry.get("tail"))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad potential parameters: {exc}",
                              _pointer(["potentials", i, "params"])) from None
        except ValidationError as exc:
            raise ConfigError(str(exc), _pointer(["potentials", i])) from None
        cfg.potentials.append(replace(pot, fd_rel_step=tolerances.fd_rel_step))
    pot_by_pair = {pair_key(*p.pair): p for p in cfg.potentials}
    for i, entry in enumerate(raw.get("correlations", [])):
        where = _pointer(["correlations", i])
        for lab in entry["pair"]:
            if lab not in labels:
                raise ConfigError(f"unknown species {lab!r}", where + "/pair")
        pair = tuple(entry["pair"])
        model = entry["model"]
        if model == "unity":
            cor = CorrelationModel.unity(pair)
        elif model == "classical-boltzmann":
            pot = pot_by_pair.get(pair_key(*pair))
            if pot is None:
                raise ConfigError("classical-boltzmann needs a potential for this pair", where)
            cor = CorrelationModel.classical_boltzmann(pot)
        else:
            if "table" not in entry:
                raise ConfigError("tabulated correlation needs a 'table'", where)
            r, g = _read_table(cfg.base_dir / entry["table"], ("r", "g"), where + "/table")
            try:
                cor = CorrelationModel.tabulated(pair, r, g)
            except ValidationError as exc:
                raise ConfigError(str(exc), where) from None
        cfg.correlations.append(replace(cor, fd_rel_step=tolerances.fd_rel_step))
    return cfg


def expand_grid(spec, where: str) -> np.ndarray:
    if isinstance(spec, list):
        return np.asarray(spec, dtype=float)
    num = int(spec["num"])
    if spec.get("spacing", "linear") == "log":
        return np.geomspace(spec["start"], spec["stop"], num)
    return np.linspace(spec["start"], spec["stop"], num)


def _alpha_grid(spec) -> np.ndarray:
    if isinstance(spec, list):
        return np.asarray(spec, dtype=float)
    return np.linspace(spec["start"], spec["stop"], int(spec["num"]))


# -- output ------------------------------------------------------------------

def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix="." + path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class RunReport:
    command: str
    config_digest: str
    version: str
    outputs: list = field(default_factory=list)
    wall_time_s: float = 0.0
    warnings: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)


class Run:
    """Collects tables (and optional figures) of one command invocation."""

    def __init__(self, command: str, config: RunConfig, out_dir: Path, threads: int, seed: int,
                 figures: bool):
        self.command = command
        self.config = config
        self.out_dir = out_dir
        self.threads = threads
        self.seed = seed
        self.figures = figures
        self.report = RunReport(command, config.digest, __version__)
        self.tables = {}

    def table(self, name: str, header, rows) -> None:
        rows = [list(r) for r in rows]
        self.tables[name] = (list(header), rows)
        target = self.out_dir / f"{name}.csv"
        atomic_write(target, csv_text(header, rows))
        self.report.outputs.append(target.name)

    def warn(self, message: str) -> None:
        log.warning(message)
        self.report.warnings.append(message)


# -- commands ----------------------------------------------------------------

def _require_species(cfg: RunConfig):
    if not cfg.species:
        raise ConfigError("this command needs at least one species", "/species")
    return cfg.species


def _state_grid(cfg: RunConfig, section: dict, where: str):
    species = _require_species(cfg)
    base = build_mixture(species, 1.0)
    thetas = expand_grid(section["theta"], f"{where}/theta")
    rhos = expand_grid(section["rho"], f"{where}/rho") if "rho" in section else \
        np.array([base.total_density])
    return species, base.fractions, thetas, rhos


def cmd_ideal_tau(run: Run) -> None:
    cfg = run.config
    species, fractions, thetas, rhos = _state_grid(cfg, cfg.section("ideal-tau"), "/ideal_tau")
    rows = []
    for th in thetas:
        for rh in rhos:
            sol = thermo.solve_ideal(MixtureState(float(th), float(rh), fractions), species,
                                     rtol=cfg.tolerances.kernel_rtol)
            rows.append([th, rh, sol.tau, sol.tau / th, sol.classical_correction, *sol.alphas])
    header = ["theta", "rho", "tau", "tau_over_theta", "max_exp_alpha"] + \
        [f"alpha_{sp.label}" for sp in species]
    run.table("ideal_tau", header, rows)


def cmd_thermo(run: Run) -> None:
    cfg = run.config
    section = cfg.section("thermo")
    species, fractions, thetas, rhos = _state_grid(cfg, section, "/thermo")
    tau_mode = section.get("tau", "ideal")
    pairs = None
    rows = []
    for th in thetas:
        for rh in rhos:
            mixture = MixtureState(float(th), float(rh), fractions)
            tau = thermo.solve_ideal(mixture, species, rtol=cfg.tolerances.kernel_rtol).tau \
                if tau_mode == "ideal" else float(tau_mode)
            point = thermo.thermo_point(mixture, tau, species, cfg.potentials, cfg.correlations,
                                        split_radius=section.get("split_radius"),
                                        default_correlation=cfg.default_correlation,
                                        rtol=cfg.tolerances.radial_rtol)
            if pairs is None:
                pairs = list(point.energy_terms)
            rows.append([th, rh, tau, point.E_total, point.p, point.kinetic_energy,
                         point.ideal_pressure]
                        + [point.energy_terms[k] for k in pairs]
                        + [point.pressure_terms[k] for k in pairs])
    header = ["theta", "rho", "tau", "E", "p", "E_kinetic", "p_ideal"] + \
        [f"E_{a}_{b}" for a, b in pairs or []] + [f"p_{a}_{b}" for a, b in pairs or []]
    run.table("thermo", header, rows)


def cmd_tau_field(run: Run) -> None:
    cfg = run.config
    section = cfg.section("tau-field")
    species = _require_species(cfg)
    fractions = build_mixture(species, 1.0).fractions
    try:
        domain = thermo.TauDomain(section["theta_min"], section["theta_max"], section["n_theta"],
                                  section["rho_min"], section["rho_max"], section["n_rho"])
    except ValidationError as exc:
        raise ConfigError(str(exc), "/tau_field") from None
    tol = cfg.tolerances
    field_ = thermo.solve_tau_field(
        domain, species, cfg.potentials, cfg.correlations, fractions,
        n_characteristics=section.get("n_characteristics"), rtol=tol.ode_rtol,
        anchor_alpha_max=tol.anchor_alpha_max,
        require_classical_anchor=section.get("require_classical_anchor", True),
        split_radius=section.get("split_radius"), default_correlation=cfg.default_correlation,
        threads=run.threads, radial_rtol=tol.radial_rtol)
    ideal, _ = thermo.solve_ideal_batch(fractions, species, field_.thetas[:, None],
                                        field_.rhos[None, :], rtol=tol.kernel_rtol)
    rows = [[field_.thetas[i], field_.rhos[j], field_.tau[i, j], ideal[i, j]]
            for i in range(field_.thetas.size) for j in range(field_.rhos.size)]
    run.table("tau_field", ["theta", "rho", "tau", "tau_ideal"], rows)
    trace_rows = []
    for k, tr in enumerate(field_.characteristics):
        for th, rh, ta in zip(tr.theta, tr.rho, tr.tau):
            trace_rows.append([k, tr.label, tr.anchor_theta, tr.anchor_rho, tr.anchor_tau,
                               max(tr.anchor_alphas), tr.steps, th, rh, ta])
    run.table("characteristics", ["curve", "c", "anchor_theta", "anchor_rho", "anchor_tau",
                                  "anchor_max_alpha", "steps", "theta", "rho", "tau"], trace_rows)
    run.report.summary["anchor_correction_bound"] = field_.anchor_correction_bound
    run.report.summary["interpolated"] = field_.interpolated


def cmd_condensate_scan(run: Run) -> None:
    cfg = run.config
    section = cfg.section("condensate-scan")
    species = _require_species(cfg)
    base = build_mixture(species, 1.0)
    thetas = np.sort(expand_grid(section["theta"], "/condensate_scan/theta"))[::-1]
    rho = float(section.get("rho", base.total_density))
    scan = thermo.condensate_scan(species, thetas, rho=rho, fractions=base.fractions)
    for note in scan.notes:
        run.warn(note)
    rows = [[th, ta, not math.isfinite(ta)] for th, ta in zip(scan.thetas, scan.taus)]
    run.table("condensate_scan", ["theta", "tau", "saturated"], rows)
    onset_rows = []
    for sp, frac in zip(species, base.fractions):
        if sp.statistics is Statistics.BOSE:
            onset_rows.append([sp.label, frac, thermo.bose_onset_temperature(sp, rho * frac),
                               scan.onset if scan.saturated_species == sp.label else None])
    run.table("condensate_onset", ["species", "fraction", "single_species_onset", "scan_onset"],
              onset_rows)
    run.report.summary.update({"experimental": True, "onset_grid": scan.onset_grid,
                               "onset": scan.onset, "saturated_species": scan.saturated_species})


def cmd_ns_check(run: Run) -> None:
    cfg = run.config
    section = cfg.section("ns-check")
    species = _require_species(cfg)
    tau = float(section["tau"])
    dim = int(section.get("dim", 3))
    tol = cfg.tolerances
    z_grid = ns_coefficients.default_z_grid(tau, tol.z_points, tol.z_extent)
    labels = [sp.label for sp in species]
    rows = []
    for i, entry in enumerate(section.get("reductions", [])):
        where = _pointer(["ns_check", "reductions", i])
        try:
            if isinstance(entry["s"], list):
                if len(entry["s"]) != len(species):
                    raise ValidationError("counts list needs one entry per species")
                s = MultiIndex(tuple(entry["s"]))
            else:
                s = multi_index(entry["s"], len(species))
        except ValidationError as exc:
            raise ConfigError(str(exc), where + "/s") from None
        if entry["kind"] not in labels:
            raise ConfigError(f"unknown species {entry['kind']!r}", where + "/kind")
        a = labels.index(entry["kind"])
        rep = ns_coefficients.check_reduction(s, a, species, tau, z_grid, dim=dim)
        rows.append([str(s), entry["kind"], tau, rep.max_residual, rep.closed_form_max_residual,
                     rep.quadrature_vs_closed])
    run.table("ns_reduction", ["s", "kind", "tau", "max_residual", "closed_form_residual",
                               "quadrature_vs_closed"], rows)
    inc_rows = []
    for entry in section.get("incompatibility", []):
        rep = ns_coefficients.incompatibility_demo(
            entry["dist_1"], entry["dist_2"], mass=entry.get("mass", 1.0),
            kappas=tuple(entry.get("kappas", (1, 2))),
            densities=tuple(entry.get("densities", (1.0, 1.0))),
            temperature=entry.get("temperature", 1.0))
        inc_rows.append([rep.distributions[0], rep.distributions[1], rep.kappas[0], rep.kappas[1],
                         rep.variation, rep.implied_ratio, rep.map_ratio_variation])
    run.table("ns_incompatibility", ["dist_1", "dist_2", "kappa_1", "kappa_2", "variation",
                                     "implied_ratio", "map_ratio_variation"], inc_rows)


def cmd_gk(run: Run) -> None:
    cfg = run.config
    section = cfg.section("gk")
    alphas = _alpha_grid(section["alpha"])
    rows = []
    for name in section.get("statistics", ["fermi", "bose"]):
        stats = Statistics.parse(name)
        for order in section.get("orders", [0, 1]):
            for a in alphas:
                if stats is Statistics.BOSE and a > 0:
                    run.warn(f"skipped Bose alpha={a} > 0 (outside the kernel domain)")
                    continue
                params = kernels.KernelParams(order, float(a), stats)
                quad = kernels.g_integral(params, cfg.tolerances.kernel_rtol)
                series = kernels.g_series(params) if a <= 0 else float("nan")
                diff = abs(quad / series - 1.0) if a <= 0 else float("nan")
                rows.append([stats.value, order, a, quad, series, diff])
    run.table("gk", ["statistics", "order", "alpha", "G_quadrature", "G_series", "rel_diff"], rows)


def cmd_validate(run: Run) -> None:
    section = run.config.section("validate")
    seed = run.seed if run.seed is not None else section.get("seed", 0)
    rows = hierarchy.run_validation_suite(seed=seed)
    run.table("validate", ["check", "value", "threshold", "comparison", "passed"],
              [[r.name, r.value, r.threshold, r.comparison, r.passed] for r in rows])
    failed = [r.name for r in rows if not r.passed]
    run.report.summary["failed"] = failed
    if failed:
        run.warn("validation checks failed: " + ", ".join(failed))


HANDLERS = {
    "ideal-tau": cmd_ideal_tau,
    "thermo": cmd_thermo,
    "tau-field": cmd_tau_field,
    "condensate-scan": cmd_condensate_scan,
    "ns-check": cmd_ns_check,
    "gk": cmd_gk,
    "validate": cmd_validate,
}


def run(config: RunConfig, command: str, out_dir, threads: int = 1, seed: Optional[int] = None,
        allow_experimental: bool = False, figures: bool = False) -> RunReport:
    """Execute one command and write its tables plus ``report.json`` into ``out_dir``."""
    if command not in HANDLERS:
        raise ConfigError(f"unknown command {command!r}", "/")
    if command in EXPERIMENTAL and not allow_experimental:
        raise ExperimentalRefused(f"{command} is EXPERIMENTAL; pass --allow-experimental")
    out_dir = Path(out_dir)
    job = Run(command, config, out_dir, threads, seed, figures)
    if command in EXPERIMENTAL:
        job.warn(f"{command} is EXPERIMENTAL (Bose stand-in kernel)")
    start = time.perf_counter()
    HANDLERS[command](job)
    if figures:
        from . import plotting

        for name in plotting.render(command, job.tables, out_dir):
            job.report.outputs.append(name)
    job.report.wall_time_s = time.perf_counter() - start
    atomic_write(out_dir / "report.json", json.dumps(asdict(job.report), indent=2, default=str)
                 + "\n")
    return job.report


# -- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mixtherm", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", default=None, help="output directory (default: ./mixtherm-out)")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (fallback: MIXTHERM_THREADS, then 1)")
    parser.add_argument("--seed", type=int, default=None, help="seed for randomised checks")
    parser.add_argument("--allow-experimental", action="store_true",
                        help="permit EXPERIMENTAL commands (condensate-scan)")
    parser.add_argument("--figures", action="store_true",
                        help="also render PNG figures next to the CSV tables")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _threads(arg: Optional[int]) -> int:
    if arg is not None:
        if arg < 1:
            raise ConfigError("--threads must be >= 1", "/threads")
        return arg
    env = os.environ.get("MIXTHERM_THREADS")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ConfigError(f"MIXTHERM_THREADS={env!r} is not an integer", "/threads") from None
        if value < 1:
            raise ConfigError("MIXTHERM_THREADS must be >= 1", "/threads")
        return value
    return 1


def _error_record(kind: str, exc: BaseException, command: str, path: Optional[str] = None) -> str:
    record = {"error": kind, "type": type(exc).__name__, "command": command,
              "message": getattr(exc, "detail", None) or str(exc)}
    if path is not None:
        record["path"] = path
    return json.dumps(record)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        threads = _threads(args.threads)
        config = load_config(args.config)
        out = Path(args.out) if args.out else Path.cwd() / "mixtherm-out"
        report = run(config, args.command, out, threads, args.seed, args.allow_experimental,
                     args.figures)
    except ConfigError as exc:
        print(_error_record("config", exc, args.command, exc.path), file=sys.stderr)
        return EXIT_CONFIG
    except MissingCorrelation as exc:
        print(_error_record("config", exc, args.command, "/correlations"), file=sys.stderr)
        return EXIT_CONFIG
    except ExperimentalRefused as exc:
        print(_error_record("experimental", exc, args.command), file=sys.stderr)
        return EXIT_EXPERIMENTAL
    except (NumericFailure, MixthermError, ArithmeticError) as exc:
        print(_error_record("numeric", exc, args.command), file=sys.stderr)
        return EXIT_NUMERIC
    for name in report.outputs:
        print(out / name)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
