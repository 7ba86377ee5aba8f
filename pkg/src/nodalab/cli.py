"""Command-line front end.

Exit codes: 0 success, 1 precondition failure, 2 empty or invalid data,
3 search/enumeration budget exceeded.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .errors import NodalabError
from . import reporting
from .eigenfunctions import (
    build_coefficients,
    residual_statistics,
    save_coefficients,
    toral_field,
)
from .fields import TORUS, square
from .gaussian import estimate_cns, kac_rice_line_intensity
from .lattice import condition_I_report, lattice_points, sum_two_squares_sieve
from .measures import (
    NAMED_MEASURES,
    bin_measure,
    load_measure,
    measure_from_coefficients,
    prokhorov_distance,
    save_measure,
)
from .moments import (
    arc_moment_exact,
    arc_moment_quadrature,
    enumerate_specs,
    gaussian_joint_moment,
)
from .nodal import count_nodal_domains, localized_count_integral
from .reporting import (
    COMPARISON_HEADER,
    ExperimentConfig,
    emit_plot_data,
    fmt,
    parse_coefficient_spec,
    render_comparison_figure,
    render_field_figure,
    resolve_measure,
    run_comparison,
    write_csv,
    write_manifest,
)


def _print_csv(header, rows, out=None):
    lines = [",".join(header)] + [",".join(fmt(v) for v in row) for row in rows]
    text = "\n".join(lines) + "\n"
    if out:
        Path(out).write_text(text, encoding="ascii")
    else:
        sys.stdout.write(text)


def _measure_arg(name: str, atoms: int):
    return resolve_measure(name, atoms)


def cmd_lattice(args) -> int:
    if args.limit is not None:
        values = sum_two_squares_sieve(args.limit)
        _print_csv(["n"], [(v,) for v in values], args.out)
        return 0
    pts = lattice_points(args.energy)
    rows = []
    if args.correlations:
        rep = condition_I_report(pts, args.gamma, args.correlations)
        for l in sorted(rep.counts):
            rows.append((rep.energy, rep.size, l, rep.counts[l], rep.bounds[l], rep.passes))
    else:
        rows.append((pts.energy, pts.size, "", "", "", pts.representable))
    header = ["E", "N", "l", "count", "bound", "passes"]
    _print_csv(header, rows, args.out)
    if args.cache:
        from .cache import cache_root

        root = cache_root()
        root.mkdir(parents=True, exist_ok=True)
        path = root / f"lattice_E{args.energy}.csv"
        _print_csv(header, rows, path)
    return 0


def cmd_measure(args) -> int:
    if args.prokhorov:
        a = load_measure(args.prokhorov[0])
        b = load_measure(args.prokhorov[1])
        d = prokhorov_distance(a, b, atomization=args.atomize)
        _print_csv(["a", "b", "distance"], [(args.prokhorov[0], args.prokhorov[1], d)], args.out)
        return 0
    if args.named:
        mu = _measure_arg(args.named, args.atomize)
    elif args.from_coeffs:
        from .eigenfunctions import load_coefficients

        coeffs = load_coefficients(args.from_coeffs)
        mu = measure_from_coefficients(lattice_points(coeffs.energy), coeffs)
    else:
        raise NodalabError("need --named, --from-coeffs or --prokhorov")
    if args.out:
        save_measure(mu, args.out)
    else:
        from .measures import measure_to_json

        sys.stdout.write(measure_to_json(mu) + "\n")
    return 0


def cmd_eigen(args) -> int:
    pts = lattice_points(args.energy)
    coeffs = parse_coefficient_spec(args.coeffs, pts)
    if args.save_coeffs:
        save_coefficients(coeffs, args.save_coeffs)
    if args.residuals:
        stats = residual_statistics(
            coeffs, args.R, args.K, args.delta, args.samples, args.seed
        )
        _print_csv(
            ["E", "R", "K", "delta", "mean_leftover_sq", "stderr_leftover",
             "mean_residual_sq", "stderr_residual", "bound_leftover", "bound_residual",
             "ratio_leftover", "ratio_residual"],
            [(args.energy, args.R, args.K, args.delta,
              stats.mean_leftover_sq, stats.stderr_leftover,
              stats.mean_residual_sq, stats.stderr_residual,
              stats.bound_leftover, stats.bound_residual,
              stats.ratio_leftover, stats.ratio_residual)],
            args.out,
        )
        return 0
    if args.eval is not None:
        x = tuple(float(v) for v in args.eval.split(","))
        field = toral_field(coeffs)
        value = float(field.values(np.array(x)))
        grad = field.gradient(np.array(x))
        _print_csv(
            ["x1", "x2", "value", "grad1", "grad2"],
            [(x[0], x[1], value, float(grad[0]), float(grad[1]))],
            args.out,
        )
        return 0
    raise NodalabError("need --eval or --residuals")


def cmd_nodal(args) -> int:
    pts = lattice_points(args.energy)
    coeffs = parse_coefficient_spec(args.coeffs, pts)
    field = toral_field(coeffs)
    census = count_nodal_domains(field, TORUS, args.resolution)
    rows = [
        (c.label, c.sign, fmt(c.area), fmt(c.diameter), c.touches_boundary)
        for c in census.components
    ]
    _print_csv(["component", "sign", "area", "diameter", "touches_boundary"], rows, args.out)
    sys.stderr.write(f"count_total={census.count_total} resolution={census.resolution}\n")
    if args.boxes:
        R, x_grid = args.boxes.split(",")
        rep = localized_count_integral(coeffs, float(R), int(x_grid), census_=census)
        sys.stderr.write(
            f"localized lhs={rep.lhs} rhs={fmt(rep.rhs)} ratio={fmt(rep.ratio)}\n"
        )
    if args.labels:
        _dump_labels(field, census, args.labels)
    if args.figure:
        render_field_figure(field, census.domain, min(census.resolution, 512),
                            census.count_total, args.figure)
    return 0


def _dump_labels(field, census, path):
    from .fields import grid_axes
    from .nodal import _label_components

    path = Path(path)
    xs, ys = grid_axes(census.domain, census.resolution)
    labels, _, _, _ = _label_components(field.grid(xs, ys), census.domain.kind == "torus")
    if path.suffix == ".pgm":
        with open(path, "w", encoding="ascii") as fh:
            fh.write(f"P2\n{labels.shape[1]} {labels.shape[0]}\n{int(labels.max())}\n")
            for row in labels:
                fh.write(" ".join(str(int(v)) for v in row) + "\n")
    else:
        np.savetxt(path, labels, fmt="%d", delimiter=",")


def cmd_cns(args) -> int:
    mu = _measure_arg(args.measure, args.atomize)
    est = estimate_cns(
        mu, args.R, args.trials, args.seed, args.convention, measure_id=args.measure
    )
    rows = [(i, c, est.area, c / est.area) for i, c in enumerate(est.counts)]
    _print_csv(["trial", "count", "area", "estimate"], rows, args.out)
    sys.stderr.write(
        f"estimate={fmt(est.estimate)} stderr={fmt(est.stderr)} discarded={est.discarded}\n"
    )
    return 0


def cmd_kacrice(args) -> int:
    mu = _measure_arg(args.measure, args.atomize)
    d = tuple(float(v) for v in args.direction.split(","))
    rate = kac_rice_line_intensity(mu, d, args.wavenumber)
    _print_csv(["measure", "dx", "dy", "intensity"], [(args.measure, d[0], d[1], rate)], args.out)
    return 0


def cmd_moments(args) -> int:
    pts = lattice_points(args.energy)
    coeffs = parse_coefficient_spec(args.coeffs, pts)
    mu = measure_from_coefficients(pts, coeffs)
    binning = bin_measure(mu, args.K, args.delta)
    pos = [k for k in binning.kset if k >= 1]
    rows = []
    for spec in enumerate_specs(pos, args.B - 1):
        mv = arc_moment_exact(coeffs, binning, spec)
        gauss = gaussian_joint_moment(spec)
        quad = arc_moment_quadrature(coeffs, binning, spec) if args.quadrature else None
        rows.append(
            (spec.encode(), gauss, mv.value.real, mv.value.imag,
             "" if quad is None else quad.real, "" if quad is None else quad.imag,
             abs(gauss - mv.value))
        )
    _print_csv(
        ["spec", "gaussian", "exact_re", "exact_im", "quad_re", "quad_im", "gap"],
        rows, args.out,
    )
    return 0


def cmd_compare(args) -> int:
    config = ExperimentConfig.from_file(args.config)
    if args.outdir:
        config.outdir = args.outdir
    outdir = Path(config.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = run_comparison(config)
    write_csv(outdir / "comparison.csv", COMPARISON_HEADER, [r.as_list() for r in rows])
    try:
        header, data = emit_plot_data(rows, "scatter")
        write_csv(outdir / "comparison_scatter.csv", header, data)
        render_comparison_figure(rows, outdir / "comparison_scatter.png")
    except NodalabError as exc:
        sys.stderr.write(f"plot data skipped: {exc}\n")
    write_manifest(outdir, config, rows)
    sys.stderr.write(f"wrote {outdir / 'comparison.csv'}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nodalab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("lattice", help="lattice points and vanishing-sum counts")
    q.add_argument("--energy", type=int, default=0)
    q.add_argument("--limit", type=int, default=None, help="list representable integers up to limit")
    q.add_argument("--correlations", type=int, default=None, metavar="B")
    q.add_argument("--gamma", type=float, default=0.4)
    q.add_argument("--cache", action="store_true", help="also write cache/lattice_E<E>.csv")
    q.add_argument("--out")
    q.set_defaults(fn=cmd_lattice)

    q = sub.add_parser("measure", help="named measures, coefficient measures, Prokhorov distance")
    q.add_argument("--named", choices=sorted(NAMED_MEASURES))
    q.add_argument("--from-coeffs", metavar="CSV")
    q.add_argument("--prokhorov", nargs=2, metavar=("A.json", "B.json"))
    q.add_argument("--atomize", type=int, default=4096)
    q.add_argument("--out")
    q.set_defaults(fn=cmd_measure)

    q = sub.add_parser("eigen", help="evaluate eigenfunctions and gathering residuals")
    q.add_argument("--energy", type=int, required=True)
    q.add_argument("--coeffs", default="equal", help="equal | random:<seed> | file:<path>")
    q.add_argument("--eval", metavar="x1,x2")
    q.add_argument("--residuals", action="store_true")
    q.add_argument("--R", type=float, default=3.0)
    q.add_argument("--K", type=int, default=8)
    q.add_argument("--delta", type=float, default=1e-3)
    q.add_argument("--samples", type=int, default=16)
    q.add_argument("--seed", type=int, default=1)
    q.add_argument("--save-coeffs")
    q.add_argument("--out")
    q.set_defaults(fn=cmd_eigen)

    q = sub.add_parser("nodal", help="nodal domain census on the torus")
    q.add_argument("--energy", type=int, required=True)
    q.add_argument("--coeffs", default="equal")
    q.add_argument("--domain", choices=["torus"], default="torus")
    q.add_argument("--resolution", type=int, default=None)
    q.add_argument("--boxes", metavar="R,x_grid")
    q.add_argument("--labels", help="dump label grid (.pgm or .csv)")
    q.add_argument("--figure", help="render sign map with zero contour (.png)")
    q.add_argument("--out")
    q.set_defaults(fn=cmd_nodal)

    q = sub.add_parser("cns", help="Monte Carlo nodal-domain density of a Gaussian wave")
    q.add_argument("--measure", required=True, help="named measure or JSON path")
    q.add_argument("--R", type=float, required=True)
    q.add_argument("--trials", type=int, required=True)
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("--convention", choices=["square", "disc"], default="square")
    q.add_argument("--atomize", type=int, default=128)
    q.add_argument("--out")
    q.set_defaults(fn=cmd_cns)

    q = sub.add_parser("kacrice", help="expected zeros per unit length along a line")
    q.add_argument("--measure", required=True)
    q.add_argument("--direction", default="1,0")
    q.add_argument("--wavenumber", type=float, default=1.0)
    q.add_argument("--atomize", type=int, default=128)
    q.add_argument("--out")
    q.set_defaults(fn=cmd_kacrice)

    q = sub.add_parser("moments", help="arc-coefficient moments against Gaussian values")
    q.add_argument("--energy", type=int, required=True)
    q.add_argument("--coeffs", default="equal")
    q.add_argument("--K", type=int, required=True)
    q.add_argument("--delta", type=float, required=True)
    q.add_argument("--B", type=int, required=True)
    q.add_argument("--quadrature", action="store_true")
    q.add_argument("--out")
    q.set_defaults(fn=cmd_moments)

    q = sub.add_parser("compare", help="full per-energy comparison pipeline")
    q.add_argument("--config", required=True, help="key=value config file")
    q.add_argument("--outdir")
    q.set_defaults(fn=cmd_compare)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except NodalabError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return getattr(exc, "exit_code", 1)
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
