"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 internal
assertion, 4 forced measurement exceeded its attempt cap.
"""

from __future__ import annotations

import json
import logging
import math
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import fqh
from .anyon_model import ProbeSpec, build_model, table_report, validate
from .compiler import ArityError, CompileError, compile_word, direct_circuit, encode_qubits, execute, qubit_encoding
from .fusion_space import CCW, CW, trace_distance
from .montecarlo import METHODS, braid_verify, forced_teleport_trials, teleport_report
from .protocols import INTERFEROMETRIC, PROJECTIVE, AttemptCapExceeded, TransitionCache

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_INTERNAL, EXIT_ATTEMPT_CAP = 0, 1, 2, 3, 4
LOG_SCHEMA = "anyonforge-log/1"


class VerificationFailed(Exception):
    pass


def _setup_logging():
    level = os.environ.get("ANYONFORGE_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


def _model(name: str, k: int | None):
    if name.lower() == "su2k" and k is None:
        raise click.UsageError("su2k needs --k")
    try:
        return build_model(name, k)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, ensure_ascii=False)


def _write_jsonl(path, header: dict, events):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps({"schema": LOG_SCHEMA, **header}, sort_keys=True, ensure_ascii=False) + "\n")
        for e in events:
            fh.write(json.dumps(e, sort_keys=True, ensure_ascii=False) + "\n")


model_option = click.option("--model", "model_name", default="ising", show_default=True, help="ising, fib, fib_conj or su2k")
k_option = click.option("--k", type=int, default=None, help="level for su2k")
seed_option = click.option("--seed", type=click.IntRange(0, 2**64 - 1), required=True, help="random seed")


@click.group()
def cli():
    """Anyon models, measurement-only braiding and FQH interferometer estimates."""
    _setup_logging()


# --------------------------------------------------------------------------
# model


@cli.group()
def model():
    """Inspect and validate anyon models."""


@model.command("check")
@click.argument("name")
@k_option
@click.option("--tol", type=float, default=1e-9, show_default=True)
def model_check(name, k, tol):
    """Validate every algebraic identity of a model."""
    report = validate(_model(name, k), tol)
    click.echo(report.format())
    if not report.passed:
        raise VerificationFailed(f"{name} failed validation")


@model.command("table")
@click.argument("name")
@k_option
def model_table(name, k):
    """Print the N, F, R, d, theta, S and M tables."""
    click.echo(table_report(_model(name, k)))


# --------------------------------------------------------------------------
# sim


@cli.group()
def sim():
    """Monte Carlo runs of the measurement protocols."""


@sim.command("forced-teleport")
@model_option
@k_option
@click.option("--method", type=click.Choice(METHODS), default=PROJECTIVE, show_default=True)
@click.option("--trials", type=click.IntRange(min=1), default=1000, show_default=True)
@seed_option
@click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--resource-charge", default=None, help="charge of the resource pair  [default: vacuum]")
@click.option("--log", "log_path", type=click.Path(dir_okay=False), default=None, help="JSON-lines trial log")
def sim_forced_teleport(model_name, k, method, trials, seed, jobs, resource_charge, log_path):
    """Attempt statistics of forced teleportation against the d_a^-2 law."""
    m = _model(model_name, k)
    try:
        e = 0 if resource_charge is None else m.charge(resource_charge)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc
    try:
        records = forced_teleport_trials(m.name, method, trials, seed, jobs, e)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc
    report = teleport_report(m.name, method, records, seed)
    if log_path:
        events = ({"trial": t, **r.as_dict(m if method != "qubit_reference" else None)} for t, r in enumerate(records))
        _write_jsonl(log_path, {"command": "sim forced-teleport", "model": m.name, "method": method, "seed": seed}, events)
    click.echo(_dump(report.as_dict()))
    if not report.passed:
        raise VerificationFailed("attempt statistics disagree with the expected law")


@sim.command("braid-verify")
@model_option
@k_option
@click.option("--method", type=click.Choice([PROJECTIVE, INTERFEROMETRIC, "both"]), default="both", show_default=True)
@click.option("--trials", type=click.IntRange(min=1), default=20, show_default=True)
@seed_option
@click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--tol", type=float, default=1e-9, show_default=True)
@click.option("--log", "log_path", type=click.Path(dir_okay=False), default=None)
def sim_braid_verify(model_name, k, method, trials, seed, jobs, tol, log_path):
    """Compare measurement-generated exchanges with direct braiding."""
    m = _model(model_name, k)
    methods = (PROJECTIVE, INTERFEROMETRIC) if method == "both" else (method,)
    rows = braid_verify(m.name, trials, seed, methods, jobs)
    worst = max(r["trace_distance"] for r in rows)
    leak = max(r["resource_entanglement"] for r in rows)
    passed = worst < tol and leak < tol
    if log_path:
        _write_jsonl(log_path, {"command": "sim braid-verify", "model": m.name, "seed": seed}, rows)
    click.echo(
        _dump(
            {
                "model": m.name,
                "methods": list(methods),
                "trials": trials,
                "seed": seed,
                "runs": len(rows),
                "max_trace_distance": worst,
                "max_resource_entanglement": leak,
                "tolerance": tol,
                "pass": passed,
            }
        )
    )
    if not passed:
        raise VerificationFailed("measurement braid deviates from direct braiding")


# --------------------------------------------------------------------------
# compile-run


def parse_word_file(text: str) -> list[tuple[int, str]]:
    """One generator per line, ``ccw i`` or ``cw i``; ``#`` starts a comment."""
    word = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2 or parts[0].lower() not in (CCW, CW):
            raise click.UsageError(f"line {lineno}: expected 'ccw i' or 'cw i', got {raw.strip()!r}")
        try:
            i = int(parts[1])
        except ValueError:
            raise click.UsageError(f"line {lineno}: generator index {parts[1]!r} is not an integer") from None
        if i < 1:
            raise click.UsageError(f"line {lineno}: generator index must be positive")
        word.append((i, parts[0].lower()))
    return word


@cli.command("compile-run")
@click.argument("word_file", type=click.Path(exists=True, dir_okay=False))
@model_option
@k_option
@click.option("--method", type=click.Choice([PROJECTIVE, INTERFEROMETRIC]), default=PROJECTIVE, show_default=True)
@seed_option
@click.option("--qubits", type=click.IntRange(min=1), default=None, help="default: fewest that fit the word")
@click.option("--bits", default=None, help="initial computational basis state, e.g. 01")
@click.option("--schedule", "schedule_path", type=click.Path(dir_okay=False), default="schedule.json", show_default=True)
@click.option("--log", "log_path", type=click.Path(dir_okay=False), default="run.jsonl", show_default=True)
@click.option("--oracle", is_flag=True, help="compare with the direct braid circuit")
@click.option("--tol", type=float, default=1e-9, show_default=True)
def compile_run(word_file, model_name, k, method, seed, qubits, bits, schedule_path, log_path, oracle, tol):
    """Compile a braid word, execute it and read out every qubit."""
    m = _model(model_name, k)
    word = parse_word_file(Path(word_file).read_text(encoding="utf-8"))
    if qubits is None:
        qubits = max(1, math.ceil((max((i for i, _ in word), default=0) + 1) / 4))
    try:
        schedule = compile_word(m, word, qubits, method)
        initial = encode_qubits(m, qubits, bits)
    except ArityError:
        raise
    except (CompileError, ValueError) as exc:
        raise click.UsageError(str(exc)) from exc
    Path(schedule_path).write_text(schedule.to_json(), encoding="utf-8")
    final, run = execute(schedule, initial, np.random.default_rng(seed), cache=TransitionCache())
    header = {"command": "compile-run", "model": m.name, "method": schedule.method, "seed": seed}
    _write_jsonl(log_path, header, run.events)
    for note in schedule.notes:
        click.echo(f"note: {note}")
    click.echo(f"schedule {schedule_path} ({len(schedule.instructions)} instructions, max arity {schedule.max_arity()})")
    click.echo(f"log {log_path}")
    click.echo("readout " + "".join(str(run.readout[q]) for q in sorted(run.readout)))
    if oracle:
        dist = trace_distance(run.computed_state, direct_circuit(initial, word))
        click.echo(f"{'PASS' if dist < tol else 'FAIL'} oracle max trace distance {dist:.3e}")
        if dist >= tol:
            raise VerificationFailed("compiled schedule deviates from the direct braid circuit")


# --------------------------------------------------------------------------
# fqh


def _emit(estimates, fmt):
    click.echo(fqh.to_json(estimates) if fmt == "json" else fqh.to_csv(estimates), nl=False)


format_option = click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)


class ChargeType(click.ParamType):
    name = "charge"

    def convert(self, value, param, ctx):
        try:
            return fqh.parse_charge(value)
        except ValueError:
            self.fail(f"{value!r} is not a charge (use coulombs or tokens like e/4)", param, ctx)


CHARGE = ChargeType()


@cli.group("fqh")
def fqh_group():
    """FQH interferometer estimates (SI units)."""


@fqh_group.command("tau-m")
@click.option("--alpha", type=float, required=True)
@click.option("--e-star", type=CHARGE, required=True)
@click.option("--i-t", type=float, required=True, help="tunneling current (A)")
@click.option("--delta-m", type=float, required=True)
@click.option("--q", "q_factor", type=float, default=1.0, show_default=True)
@format_option
def fqh_tau_m(alpha, e_star, i_t, delta_m, q_factor, fmt):
    """Interferometric measurement duration."""
    value = fqh.measurement_time(e_star, i_t, alpha, delta_m, q_factor)
    inputs = {"alpha": alpha, "e_star": e_star, "i_t": i_t, "delta_m": delta_m, "q": q_factor}
    _emit([fqh.Estimate("tau_m", value, "s", inputs)], fmt)


@fqh_group.command("tau-r")
@click.option("--v-e", type=float, required=True, help="edge velocity (m/s)")
@click.option("--l-int", type=float, required=True, help="interferometer length (m)")
@format_option
def fqh_tau_r(v_e, l_int, fmt):
    """Interferometer construction time."""
    _emit([fqh.Estimate("tau_r", fqh.repattern_time(v_e, l_int), "s", {"v_e": v_e, "l_int": l_int})], fmt)


@fqh_group.command("tau-braid")
@click.option("--d-a", type=float, required=True)
@click.option("--tau-r", type=float, required=True)
@click.option("--tau-m", type=float, required=True)
@format_option
def fqh_tau_braid(d_a, tau_r, tau_m, fmt):
    """Duration of one measurement-generated exchange."""
    inputs = {"d_a": d_a, "tau_r": tau_r, "tau_m": tau_m}
    _emit([fqh.Estimate("tau_braid", fqh.braid_time(d_a, tau_r, tau_m), "s", inputs)], fmt)


@fqh_group.command("shot-noise")
@click.option("--tau-m", type=float, required=True)
@click.option("--i-t", type=float, required=True)
@click.option("--e-star", type=CHARGE, required=True)
@format_option
def fqh_shot_noise(tau_m, i_t, e_star, fmt):
    """Probability that no probe tunnels during a measurement."""
    inputs = {"tau_m": tau_m, "i_t": i_t, "e_star": e_star}
    _emit([fqh.Estimate("shot_noise_error", fqh.shot_noise_error(tau_m, i_t, e_star), "1", inputs)], fmt)


@fqh_group.command("gamma")
@click.option("--r0", type=float, required=True, help="resistance prefactor (ohm)")
@click.option("--gap", type=float, required=True, help="gap (K)")
@click.option("--temp", type=float, required=True, help="temperature (K)")
@click.option("--nu", type=float, required=True, help="filling fraction")
@format_option
def fqh_gamma(r0, gap, temp, nu, fmt):
    """Stray-quasiparticle error rate."""
    inputs = {"r0": r0, "gap": gap, "temp": temp, "nu": nu}
    _emit([fqh.Estimate("gamma", fqh.stray_error_rate(r0, gap, temp, nu), "1/s", inputs)], fmt)


@fqh_group.command("delta-m")
@model_option
@k_option
@click.option("--charges", default=None, help="two charges, default vacuum and the second channel of a x a")
@click.option("--probe", default=None, help="probe charge, default the qubit charge")
@format_option
def fqh_delta_m(model_name, k, charges, probe, fmt):
    """Probe distinguishability of two enclosed charges."""
    m = _model(model_name, k)
    enc = qubit_encoding(m)
    try:
        pair = [m.charge(c) for c in charges.split(",")] if charges else list(enc.channels)
        b = m.charge(probe) if probe else enc.charge
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc
    if len(pair) != 2:
        raise click.UsageError("--charges needs exactly two charges")
    value = fqh.delta_m(m, pair[0], pair[1], ProbeSpec.pure(b))
    inputs = {"model": m.name, "charges": [m.labels[c] for c in pair], "probe": m.labels[b]}
    _emit([fqh.Estimate("delta_m", value, "1", inputs)], fmt)


@fqh_group.command("probe-count")
@click.option("--alpha", type=float, required=True)
@click.option("--t", "t_amp", type=float, default=None, help="tuned tunneling amplitude")
@click.option("--delta-m", type=float, default=None)
@click.option("--q", "q_factor", type=float, default=1.0, show_default=True)
@click.option("--p", "p_one", type=float, default=None, help="tunneling probability for one charge")
@click.option("--p-other", type=float, default=None)
@format_option
def fqh_probe_count(alpha, t_amp, delta_m, q_factor, p_one, p_other, fmt):
    """Probes needed for confidence 1 - alpha, from (t, delta M) or from two probabilities."""
    if p_one is not None or p_other is not None:
        if p_one is None or p_other is None:
            raise click.UsageError("--p and --p-other go together")
        value = fqh.probe_count(alpha, p_one, p_other)
        inputs = {"alpha": alpha, "p": p_one, "p_other": p_other}
    else:
        if t_amp is None or delta_m is None:
            raise click.UsageError("Missing option '--t' and '--delta-m' (or give '--p' and '--p-other')")
        value = fqh.probe_count_simplified(alpha, t_amp, delta_m, q_factor)
        inputs = {"alpha": alpha, "t": t_amp, "delta_m": delta_m, "q": q_factor}
    _emit([fqh.Estimate("probe_count", value, "1", inputs)], fmt)


@fqh_group.command("report")
@click.option("--alpha", type=float, default=1e-4, show_default=True)
@click.option("--q", "q_factor", type=float, default=1.0, show_default=True)
@format_option
def fqh_report(alpha, q_factor, fmt):
    """The standard chain of estimates for the 5/2 state with sigma-quasihole probes."""
    _emit(fqh.mr_report(alpha=alpha, q_factor=q_factor), fmt)


# --------------------------------------------------------------------------


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="anyonforge", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_VERIFY
    except VerificationFailed as exc:
        click.echo(f"FAIL: {exc}", err=True)
        return EXIT_VERIFY
    except AttemptCapExceeded as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_ATTEMPT_CAP
    except (ArityError, AssertionError) as exc:
        click.echo(f"internal error: {exc}", err=True)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
