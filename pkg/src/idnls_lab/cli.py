"""Command-line entry point: ``idnls-lab <subcommand> --config cfg.yaml --out dir``.

Exit codes: 0 pass, 2 tolerance failure, 1 error.
"""
from __future__ import annotations

import logging
import sys
from pathlib import Path

import click
import numpy as np

from . import asymptotics, harness, phase, scattering
from .errors import CalibrationError, IDNLSError

EXIT_OK, EXIT_ERROR, EXIT_TOLERANCE = 0, 1, 2


class ToleranceFailure(Exception):
    """Raised by a subcommand whose checks ran but did not all pass."""


def _load(ctx: click.Context) -> harness.ExperimentConfig:
    return ctx.obj["config"]


def _out_dir(ctx: click.Context) -> Path:
    cfg = _load(ctx)
    out = Path(ctx.obj["out"] or cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _sign(ctx: click.Context, required: bool) -> int | None:
    sign = ctx.obj["sign"]
    if sign is not None:
        return sign
    try:
        return harness.load_calibration(_load(ctx))
    except CalibrationError:
        if required:
            raise
        return None


def _header(ctx: click.Context, sign: int | None = None) -> dict:
    return harness.report_header(_load(ctx), sign)


def _finish(report: harness.ComparisonReport, out: Path, header: dict) -> None:
    rows, summary = report.write(out, header)
    for c in report.checks:
        status = "pass" if c.passed else "FAIL"
        value = "n/a" if c.value is None else f"{c.value:.6g}"
        click.echo(f"[{status}] {c.name} = {value} {c.note}".rstrip())
    for note in report.notes:
        click.echo(f"note: {note}")
    click.echo(f"wrote {rows} and {summary}")
    if not report.passed:
        raise ToleranceFailure(f"{report.kind}: tolerance check failed")


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              help="YAML experiment config; defaults are used when omitted.")
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory.")
@click.option("--sign", type=click.Choice(["1", "-1"]), default=None,
              help="Override the calibrated Airy-coefficient sign.")
@click.option("-v", "--verbose", is_flag=True)
@click.pass_context
def cli(ctx, config_path, out, sign, verbose):
    """Ablowitz-Ladik lattice experiments and long-time asymptotics checks."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if config_path:
        cfg = harness.ExperimentConfig.load(config_path)
    else:
        cfg = harness.ExperimentConfig(base_dir=str(Path.cwd()))
    ctx.obj = {"config": cfg, "out": out, "sign": None if sign is None else int(sign)}


@cli.command()
@click.pass_context
def simulate(ctx):
    """Integrate the lattice and write one CSV snapshot per configured time."""
    cfg = _load(ctx)
    out = _out_dir(ctx)
    ev = harness.run_simulate(cfg, out, _header(ctx, _sign(ctx, required=False)))
    click.echo(f"{len(ev.states)} snapshots in {out}, functional drift {ev.drift:.3e}")
    if ev.drift > cfg.drift_tol:
        raise ToleranceFailure(f"functional drift {ev.drift:.3e} > {cfg.drift_tol:.3e}")


@cli.command()
@click.option("--convention", type=click.Choice(sorted(scattering.CONVENTIONS)), default=scattering.RHP)
@click.pass_context
def scatter(ctx, convention):
    """Reflection coefficient of the initial data on the unit circle."""
    cfg = _load(ctx)
    samples = scattering.scatter(cfg.initial.build(), scattering.uniform_angles(cfg.n_angles),
                                 convention=convention)
    path = scattering.write_reflection_csv(_out_dir(ctx) / "reflection.csv", samples,
                                           _header(ctx, _sign(ctx, required=False)))
    click.echo(f"sup|r| = {samples.sup_abs():.6g}; wrote {path}")


@cli.command()
@click.option("--t", "times", type=float, multiple=True,
              help="Times to predict at (default: the configured list).")
@click.pass_context
def predict(ctx, times):
    """Wavefront (region B) predictions over the whole band at each time."""
    cfg = _load(ctx)
    sign = _sign(ctx, required=True)
    initial = cfg.initial.build()
    r_T1 = harness.front_reflection(initial, cfg.side)
    provider = cfg.provider(sign)
    preds = []
    for t in times or cfg.times:
        for n in cfg.side * asymptotics.region_b_band(t, cfg.M, cfg.M_prime):
            preds.append(asymptotics.region_b_predict(int(n), t, r_T1, provider,
                                                      V0=cfg.V0, M=cfg.M, M_prime=cfg.M_prime))
    path = asymptotics.write_predictions_csv(_out_dir(ctx) / "predictions.csv", preds,
                                             _header(ctx, sign))
    click.echo(f"{len(preds)} predictions; wrote {path}")


@cli.command("compare-b")
@click.pass_context
def compare_b(ctx):
    """Simulation against the wavefront formula along n = round(2t)."""
    sign = _sign(ctx, required=True)
    report = harness.run_compare_region_b(_load(ctx), sign)
    _finish(report, _out_dir(ctx), _header(ctx, sign))


@cli.command()
@click.option("--no-persist", is_flag=True, help="Report only; do not write the calibration file.")
@click.pass_context
def calibrate(ctx, no_persist):
    """Fix the Airy-coefficient sign from small-amplitude data."""
    cfg = _load(ctx)
    result = harness.run_calibrate(cfg, persist=not no_persist)
    for s, res in result.residuals.items():
        click.echo(f"sign {s:+d}: mean residual {res:.6g}")
    click.echo(f"separation {result.separation:.4g} (need >= {cfg.calibration_separation:g})")
    path = _out_dir(ctx) / "calibration.csv"
    head = [f"# {k}={v}" for k, v in _header(ctx, result.sign).items()]
    rows = ["sign,mean_residual"] + [f"{s},{r:.17g}" for s, r in result.residuals.items()]
    path.write_text("\n".join(head + rows) + "\n")
    if not result.conclusive:
        raise ToleranceFailure("inconclusive calibration")
    click.echo(f"sign = {result.sign:+d}" + ("" if no_persist else f", saved to {cfg.calibration_path()}"))


@cli.command("region-scan")
@click.pass_context
def region_scan(ctx):
    """Decay orders along n = t, n = round(2t) and the far-field tail."""
    report = harness.run_region_scan(_load(ctx))
    _finish(report, _out_dir(ctx), _header(ctx, _sign(ctx, required=False)))


@cli.command()
@click.option("--n", "n", type=float, required=True)
@click.option("--t", "t", type=float, required=True)
@click.option("--extent", type=float, default=2.0, show_default=True)
@click.option("--resolution", type=int, default=200, show_default=True)
@click.pass_context
def signmap(ctx, n, t, extent, resolution):
    """Sign of Re phi on a square grid around the origin."""
    # an even resolution keeps z = 0 off the grid
    res = resolution + (resolution % 2 == 1)
    smap = phase.sign_map(n, t, (-extent, extent), (-extent, extent), res)
    head = {**_header(ctx, _sign(ctx, required=False)), "n": n, "t": t,
            "region": phase.classify_region(n, t, _load(ctx).V0, _load(ctx).M, _load(ctx).M_prime)}
    path = phase.write_sign_map_csv(_out_dir(ctx) / "signmap.csv", smap, head)
    frac = float(np.mean(smap.sign > 0))
    click.echo(f"{res}x{res} grid, {frac:.1%} positive; wrote {path}")


def main(argv: list[str] | None = None) -> int:
    """Run the CLI and return (and exit with) 0, 1 or 2."""
    code = run(argv)
    sys.exit(code)


def run(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False, prog_name="idnls-lab")
    except ToleranceFailure as exc:
        click.echo(f"FAIL: {exc}", err=True)
        return EXIT_TOLERANCE
    except click.exceptions.Exit as exc:
        return EXIT_OK if exc.exit_code == 0 else EXIT_ERROR
    except click.ClickException as exc:
        exc.show()
        return EXIT_ERROR
    except click.exceptions.Abort:
        return EXIT_ERROR
    except (IDNLSError, ValueError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_ERROR
    return EXIT_OK


if __name__ == "__main__":
    main()
