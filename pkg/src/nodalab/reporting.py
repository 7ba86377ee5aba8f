"""Comparison pipeline, delimited outputs and the rendered report figures."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from . import __version__ as _version  # noqa: E402
from .cache import cache_put, params_key  # noqa: E402
from .errors import EmptyDataError, NodalabError, PreconditionError  # noqa: E402
from .eigenfunctions import build_coefficients, class_A_check, load_coefficients, toral_field  # noqa: E402
from .gaussian import estimate_cns  # noqa: E402
from .lattice import condition_I_report, lattice_points  # noqa: E402
from .measures import (  # noqa: E402
    NAMED_MEASURES,
    atomize,
    load_measure,
    measure_from_coefficients,
    prokhorov_distance,
)
from .nodal import count_nodal_domains  # noqa: E402


def fmt(value) -> str:
    """Stable scalar formatting so reruns are byte-identical."""
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def csv_bytes(header, rows) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue().encode("ascii")


@dataclass
class ExperimentConfig:
    """Validated inputs for the comparison pipeline (plain key=value file format)."""

    energies: list[int]
    coeffs: str = "equal"
    R: float = 4.0
    K: int = 8
    delta: float = 1e-3
    gamma: float = 0.4
    B: int = 4
    trials: int = 8
    seed: int = 1
    g: str = "log"
    target: str = "uniform"
    target_atoms: int = 128
    resolution: int | None = None
    outdir: str = "out"

    @staticmethod
    def from_file(path) -> "ExperimentConfig":
        raw: dict[str, str] = {}
        for line in Path(path).read_text(encoding="ascii").splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise PreconditionError(f"config line {line!r} is not key=value")
            key, val = line.split("=", 1)
            raw[key.strip()] = val.strip()
        return ExperimentConfig.from_dict(raw)

    @staticmethod
    def from_dict(raw: dict) -> "ExperimentConfig":
        cfg = ExperimentConfig(energies=[])
        try:
            cfg.energies = [int(v) for v in str(raw["energies"]).split(",") if v]
        except KeyError:
            raise PreconditionError("config needs energies=<comma list>") from None
        for key in ("coeffs", "g", "target", "outdir"):
            if key in raw:
                setattr(cfg, key, str(raw[key]))
        for key in ("R", "delta", "gamma"):
            if key in raw:
                setattr(cfg, key, float(raw[key]))
        for key in ("K", "B", "trials", "seed", "target_atoms", "resolution"):
            if key in raw:
                setattr(cfg, key, int(raw[key]))
        cfg.validate()
        return cfg

    def validate(self):
        if not self.energies:
            raise PreconditionError("no energies configured")
        if self.R <= 1:
            raise PreconditionError("R must exceed 1")
        if self.K < 1 or not 0 < self.delta < 1 or not 0 < self.gamma < 0.5:
            raise PreconditionError("K, delta or gamma out of range")
        if self.B < 3 or self.trials < 8:
            raise PreconditionError("B must be >= 3 and trials >= 8")
        if self.target not in NAMED_MEASURES and not Path(self.target).exists():
            raise PreconditionError(f"unknown target measure {self.target!r}")

    def to_dict(self) -> dict:
        return {
            "energies": ",".join(str(e) for e in self.energies),
            "coeffs": self.coeffs,
            "R": self.R,
            "K": self.K,
            "delta": self.delta,
            "gamma": self.gamma,
            "B": self.B,
            "trials": self.trials,
            "seed": self.seed,
            "g": self.g,
            "target": self.target,
            "target_atoms": self.target_atoms,
            "resolution": self.resolution,
            "outdir": self.outdir,
        }


def parse_coefficient_spec(spec: str, points):
    """'equal', 'random:<seed>' or 'file:<path>' -> CoefficientVector."""
    if spec == "equal":
        return build_coefficients(points, "equal")
    if spec.startswith("random:"):
        return build_coefficients(points, "random", seed=int(spec.split(":", 1)[1]))
    if spec.startswith("file:"):
        return load_coefficients(spec.split(":", 1)[1])
    raise PreconditionError(f"unknown coefficient spec {spec!r}")


def resolve_measure(name: str, atoms: int = 128):
    if name in NAMED_MEASURES:
        mu = NAMED_MEASURES[name]()
    else:
        mu = load_measure(name)
    return atomize(mu, atoms) if not mu.is_atomic else mu


COMPARISON_HEADER = [
    "E", "N", "coeffs", "status", "nodal_count", "count_over_E",
    "cns", "cns_err", "prokhorov_to_target", "correlations_pass", "flatness_pass",
]


@dataclass
class ComparisonRow:
    energy: int
    status: str = "ok"
    size: int = 0
    coeffs_id: str = ""
    nodal_count: int | None = None
    cns: float | None = None
    cns_err: float | None = None
    prokhorov: float | None = None
    correlations_pass: bool | None = None
    flatness_pass: bool | None = None
    cache_keys: dict = field(default_factory=dict)

    def as_list(self):
        def opt(v):
            return "" if v is None else v

        ratio = "" if self.nodal_count is None else self.nodal_count / self.energy
        return [
            self.energy, self.size, self.coeffs_id, self.status,
            opt(self.nodal_count), ratio, opt(self.cns), opt(self.cns_err),
            opt(self.prokhorov), opt(self.correlations_pass), opt(self.flatness_pass),
        ]


def run_comparison(config: ExperimentConfig, *, cache_root=None) -> list[ComparisonRow]:
    """One row per configured energy; failures are isolated into the row status."""
    config.validate()
    target = resolve_measure(config.target, config.target_atoms)
    rows = []
    for energy in config.energies:
        row = ComparisonRow(energy=energy, coeffs_id=config.coeffs)
        rows.append(row)
        points = lattice_points(energy)
        if not points.representable or energy == 0:
            row.status = "E not in S"
            continue
        try:
            coeffs = parse_coefficient_spec(config.coeffs, points)
            row.size = points.size
            report = condition_I_report(points, config.gamma, config.B)
            row.correlations_pass = report.passes
            row.flatness_pass = class_A_check(coeffs, config.g).passes
            if config.R >= math.sqrt(energy):
                row.status = "R too large for this energy"
                continue
            census = count_nodal_domains(toral_field(coeffs), resolution=config.resolution)
            row.nodal_count = census.count_total
            mu = measure_from_coefficients(points, coeffs)
            est = estimate_cns(
                mu, config.R, config.trials, config.seed,
                measure_id=f"E{energy}", stability="tolerant",
            )
            row.cns = est.estimate
            row.cns_err = est.stderr
            row.prokhorov = prokhorov_distance(mu, target)
            trial_rows = [
                (i, c, est.area, c / est.area) for i, c in enumerate(est.counts)
            ]
            params = {"E": energy, "R": config.R, "trials": config.trials,
                      "seed": config.seed, "coeffs": config.coeffs}
            cache_put(
                "cns", params,
                csv_bytes(["trial", "count", "area", "estimate"], trial_rows),
                root=cache_root,
            )
            row.cache_keys["cns"] = params_key("cns", params)
        except NodalabError as exc:
            row.status = f"failed: {exc}"
    return rows


def emit_plot_data(rows, kind: str):
    """CSV-ready (header, rows) for external plotting; raises on empty input."""
    if not rows:
        raise EmptyDataError("empty table")
    if kind == "scatter":
        header = ["E", "Nf_over_E", "cns", "cns_err"]
        data = [
            (r.energy, r.nodal_count / r.energy, r.cns, r.cns_err)
            for r in rows
            if r.status == "ok" and r.nodal_count is not None and r.cns is not None
        ]
    elif kind == "trend":
        header = ["R", "estimate", "stderr"]
        data = [(r.R, r.estimate, r.stderr) for r in rows]
    else:
        raise PreconditionError(f"unknown plot kind {kind!r}")
    if not data:
        raise EmptyDataError("no plottable rows")
    return header, data


def render_comparison_figure(rows, path):
    header, data = emit_plot_data(rows, "scatter")
    es = [d[0] for d in data]
    ratio = [d[1] for d in data]
    cns = [d[2] for d in data]
    err = [d[3] for d in data]
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.errorbar(es, cns, yerr=[3 * e for e in err], fmt="o", capsize=3, label="wave-model density")
    ax.plot(es, ratio, "s", label="domain count / E")
    ax.set_xlabel("E")
    ax.set_ylabel("density")
    ax.set_xscale("log")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_cns_trend_figure(estimates, path):
    header, data = emit_plot_data(estimates, "trend")
    rs = [d[0] for d in data]
    vals = [d[1] for d in data]
    errs = [d[2] for d in data]
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.errorbar(rs, vals, yerr=[3 * e for e in errs], fmt="o-", capsize=3)
    ax.set_xlabel("R")
    ax.set_ylabel("domains per unit area")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_field_figure(field, domain, resolution, count, path):
    """Sign map of a sampled field with its zero set, for the report directory."""
    from .fields import grid_axes

    xs, ys = grid_axes(domain, resolution)
    vals = field.grid(xs, ys)
    fig, ax = plt.subplots(figsize=(4.4, 4.2))
    ax.imshow(
        (vals > 0).T.astype(float),
        origin="lower",
        cmap="RdBu",
        extent=(xs[0], xs[-1], ys[0], ys[-1]),
        interpolation="nearest",
    )
    ax.contour(xs, ys, vals.T, levels=[0.0], colors="k", linewidths=0.4)
    ax.set_title(f"{count} nodal domains")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def write_manifest(outdir: Path, config: ExperimentConfig, rows, extra=None):
    import numpy
    import scipy

    manifest = {
        "config": config.to_dict(),
        "versions": {
            "nodalab": _version,
            "numpy": numpy.__version__,
            "scipy": scipy.__version__,
        },
        "rows": [
            {"E": r.energy, "status": r.status, "cache_keys": r.cache_keys} for r in rows
        ],
    }
    if extra:
        manifest.update(extra)
    path = outdir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="ascii")
    return path
