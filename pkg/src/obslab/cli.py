"""Command-line surface: a thin in-process client of the request handlers.

Exit codes: 0 success, 2 configuration error, 3 numerical error.
"""

from __future__ import annotations

import json
import os
import sys
from typing import Optional

import click
from pydantic import ValidationError

from . import handlers
from .flow import StepTooLargeError
from .oscillator import BracketingError, IsotropyError
from .quantum import QuadratureError, TruncationError
from .schemas import (
    AvoidRequest,
    ClassifyRequest,
    CoherentRequest,
    ConvergentsRequest,
    FlowRequest,
    GramianRequest,
    KappaRequest,
    KfrakRequest,
    LambdaRequest,
)

CONFIG_ERRORS = (ValidationError, ValueError, IsotropyError, json.JSONDecodeError, OSError)
NUMERICAL_ERRORS = (
    StepTooLargeError,
    QuadratureError,
    TruncationError,
    BracketingError,
    FloatingPointError,
    ArithmeticError,
)


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _write_json(report: dict, out: Optional[str]) -> None:
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _write_csv(rows, header: list[str], path: str) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(float(v)) for v in row) + "\n")


def _load_json(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _guarded(fn):
    def wrapper(*args, **kwargs):
        try:
            fn(*args, **kwargs)
        except CONFIG_ERRORS as exc:
            click.echo(f"configuration error: {exc}", err=True)
            sys.exit(2)
        except NUMERICAL_ERRORS as exc:
            click.echo(f"numerical error: {exc}", err=True)
            sys.exit(3)

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@click.group()
@click.option("--threads", type=int, default=None, help="Worker threads (env OBSLAB_THREADS overrides).")
@click.pass_context
def main(ctx: click.Context, threads: Optional[int]) -> None:
    """Observability toolbox for semiclassical Schrodinger operators."""
    env = os.environ.get("OBSLAB_THREADS")
    if env is not None:
        threads = int(env)
    if threads is not None and threads > 0:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, str(threads))
    ctx.obj = {"threads": threads}


@main.command()
@click.option("--potential", "potential_path", type=str, default=None, help="Potential JSON file.")
@click.option("--lissajous", type=str, default=None, help="Frequency ratio p:q for a one-period Lissajous sample.")
@click.option("--rho0", type=str, default=None, help="Comma-separated x then xi coordinates.")
@click.option("--T", "horizon", type=float, default=None)
@click.option("--dt", type=float, default=None)
@click.option("--samples", type=int, default=2048)
@click.option("--out", type=str, default=None, help="Report JSON path (default stdout).")
@click.option("--csv", "csv_path", type=str, default=None, help="Trajectory CSV path.")
@_guarded
def flow(potential_path, lissajous, rho0, horizon, dt, samples, out, csv_path) -> None:
    """Integrate or sample a Hamiltonian trajectory."""
    req = FlowRequest(
        potential=None if potential_path is None else _load_json(potential_path),
        lissajous=lissajous,
        rho0=None if rho0 is None else [float(v) for v in rho0.split(",")],
        T=horizon,
        dt=dt,
        samples=samples,
    )
    report = handlers.handle_flow(req)
    rows = report.pop("rows")
    if csv_path is not None:
        d = (len(rows[0]) - 1) // 2
        header = ["t"] + [f"x{j + 1}" for j in range(d)] + [f"xi{j + 1}" for j in range(d)]
        _write_csv(rows, header, csv_path)
    report["n_rows"] = len(rows)
    _write_json(report, out)


@main.command()
@click.option("--config", "config_path", type=str, required=True, help="KfrakRequest JSON file.")
@click.option("--out", type=str, default=None)
@click.option("--csv", "csv_path", type=str, default=None, help="Per-shell CSV (E, min_time).")
@_guarded
def kfrak(config_path, out, csv_path) -> None:
    """High-energy observability constant estimate."""
    req = KfrakRequest(**_load_json(config_path))
    report = handlers.handle_kfrak(req)
    if csv_path is not None:
        _write_csv(
            zip(report["energies"], report["per_shell_min"]), ["E", "min_time"], csv_path
        )
    _write_json(report, out)


@main.command()
@click.option("--nu1", type=float, required=True)
@click.option("--nu2", type=float, required=True)
@click.option("--set", "set_path", type=str, required=True, help="Interval-union JSON file (radii).")
@click.option("--delta1", type=float, default=1.0)
@click.option("--r-max", type=float, default=1e6)
@click.option("--out", type=str, default=None)
@_guarded
def classify(nu1, nu2, set_path, delta1, r_max, out) -> None:
    """Spherical-set observability classification (kappa_star vs Lambda)."""
    req = ClassifyRequest(nu1=nu1, nu2=nu2, radii=_load_json(set_path), delta1=delta1, r_max=r_max)
    _write_json(handlers.handle_classify(req), out)


@main.command()
@click.option("--config", "config_path", type=str, required=True, help="GramianRequest JSON file.")
@click.option("--out", type=str, default=None)
@click.option("--dump", "dump_path", type=str, default=None, help="Dense binary matrix dump.")
@_guarded
def gramian(config_path, out, dump_path) -> None:
    """Observability Gramian and band-restricted smallest eigenvalue."""
    req = GramianRequest(**_load_json(config_path))
    report = handlers.handle_gramian(req)
    if dump_path is not None:
        header, G = handlers.gramian_matrix(req)
        with open(dump_path, "wb") as fh:
            head = json.dumps(header, sort_keys=True).encode() + b"\n"
            fh.write(len(head).to_bytes(8, "little"))
            fh.write(head)
            fh.write(G.real.astype("<f8").tobytes(order="C"))
            fh.write(G.imag.astype("<f8").tobytes(order="C"))
    _write_json(report, out)


@main.command()
@click.option("--set", "set_path", type=str, required=True, help="Interval-union JSON file.")
@click.option("--r-max", type=float, default=1e6)
@click.option("--grid", type=int, default=256)
@click.option("--threshold", type=float, default=1e-3)
@click.option("--out", type=str, default=None)
@_guarded
def kappa(set_path, r_max, grid, threshold, out) -> None:
    """Largest window aspect kappa_star of a radial interval union."""
    req = KappaRequest(radii=_load_json(set_path), r_max=r_max, grid=grid, threshold=threshold)
    _write_json(handlers.handle_kappa(req), out)


@main.command(name="lambda")
@click.option("--mu", type=float, default=None)
@click.option("--ratio", type=str, default=None, help="Exact rational ratio p:q.")
@click.option("--out", type=str, default=None)
@_guarded
def lambda_cmd(mu, ratio, out) -> None:
    """Aspect-ratio constant Lambda of a frequency ratio."""
    _write_json(handlers.handle_lambda(LambdaRequest(mu=mu, ratio=ratio)), out)


@main.command()
@click.option("--mu", type=float, required=True)
@click.option("--count", type=int, default=32)
@click.option("--out", type=str, default=None)
@_guarded
def convergents(mu, count, out) -> None:
    """Continued-fraction convergents of mu."""
    _write_json(handlers.handle_convergents(ConvergentsRequest(mu=mu, count=count)), out)


@main.command()
@click.option("--nu1", type=float, required=True)
@click.option("--nu2", type=float, required=True)
@click.option("--epsilon", type=float, required=True)
@click.option("--samples", type=int, default=4096)
@click.option("--out", type=str, default=None)
@click.option("--csv", "csv_path", type=str, default=None)
@_guarded
def avoid(nu1, nu2, epsilon, samples, out, csv_path) -> None:
    """Two-cone avoiding trajectory over almost the critical horizon."""
    req = AvoidRequest(nu1=nu1, nu2=nu2, epsilon=epsilon, samples=samples)
    report = handlers.handle_avoid(req)
    rows = report.pop("rows")
    if csv_path is not None:
        _write_csv(rows, ["t", "x1", "x2"], csv_path)
    report["n_rows"] = len(rows)
    _write_json(report, out)


@main.command()
@click.option("--nu", type=float, required=True)
@click.option("--n-modes", type=int, default=64)
@click.option("--d", type=click.Choice(["1", "2"]), default="1")
@click.option("--rho0", type=str, required=True, help="Comma-separated x then xi coordinates.")
@click.option("--t", type=float, default=0.0)
@click.option("--out", type=str, default=None)
@_guarded
def coherent(nu, n_modes, d, rho0, t, out) -> None:
    """Propagate a coherent state and verify the closed form spectrally."""
    req = CoherentRequest(
        nu=nu, N=n_modes, d=int(d), rho0=[float(v) for v in rho0.split(",")], t=t
    )
    _write_json(handlers.handle_coherent(req), out)


if __name__ == "__main__":
    main()
