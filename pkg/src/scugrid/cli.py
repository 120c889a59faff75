"""Command-line front end: run simulations, audit constraints, generate
data, analyze SoC traces, and render figures."""

from __future__ import annotations

import concurrent.futures
import configparser
import json
import os
import sys

import click

from . import audit as audit_mod
from . import env as env_mod
from . import exogenous, policies, report
from .core import ContractViolation, InvariantFailure
from .degradation import (
    DegradationParams,
    OnlineDegradation,
    offline_rainflow_oracle,
)
from .env import EpisodeConfig, MicrogridEnv, run_episode, write_summary, write_trajectory
from .systems import RecoveryScenario

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_USAGE = 2

DEFAULT_CONFIG = """\
[degradation]
alpha_d = 5.0
beta = 1.0
w = 0.01

[devices]
wind_max_kw = 400.0
battery_nominal_kw = 600.0
battery_capacity_kwh = 672.0
battery_eta = 0.95
soc_min = 0.10
soc_emergency = 0.05
soc_max = 0.90
genset_p_min = 120.0
genset_p_nominal = 400.0
genset_p_max = 440.0
genset_warmup_min = 3
genset_warmup_kw = 100.0
genset_cooldown_min = 5
genset_min_runtime = 30
genset_fuel_rate_l_per_kwh = 0.25
genset_fuel_idle_l_per_h = 10.0
genset_avg_window_min = 2880
genset_avg_cap_kw = 280.0

[systems]
recovery_horizon = 9
; blank scenario values fall back to the loaded series' extremes
demand_high =
wind_low =
demand_ramp =
wind_ramp =
demand_low =
demand_drop =

[exogenous]
demand_min = 180.0
demand_max = 540.0
demand_mean = 320.0
wind_min = 0.0
wind_max = 400.0
wind_mean = 272.0
forecast_noise = 0.0

[policies]
start_load_fraction = 0.9
stop_cover_fraction = 0.7
counter_minutes = 5

[env]
episode_minutes = 1440
alpha = 1.0
intervention_penalty = 0.0
"""


def load_config(path=None) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    parser.read_string(DEFAULT_CONFIG)
    if path:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    return parser


def _scenario_from_config(cfg) -> RecoveryScenario | None:
    sec = cfg["systems"]
    keys = ("demand_high", "wind_low", "demand_ramp", "wind_ramp",
            "demand_low", "demand_drop")
    values = {k: sec.get(k, "").strip() for k in keys}
    if not any(values.values()):
        return None  # derive from the series
    filled = {k: float(v) for k, v in values.items() if v}
    return RecoveryScenario(**filled)


def _degradation_from_config(cfg) -> DegradationParams:
    sec = cfg["degradation"]
    return DegradationParams(
        alpha_d=sec.getfloat("alpha_d"),
        beta=sec.getfloat("beta"),
        w=sec.getfloat("w"),
    )


def _run_one_seed(args):
    """Single-seed worker; module-level so process pools can pickle it."""
    (policy_name, data, synth_seed, days, profile, alpha, seed,
     recovery, device_shields, penalty, cfg_path, out_dir) = args
    cfg = load_config(cfg_path)
    if data:
        series = exogenous.load_series(data)
    else:
        series = exogenous.synth_series(synth_seed if synth_seed is not None else seed,
                                        days, profile)
    econfig = EpisodeConfig(
        length=days * 1440,
        alpha=alpha,
        seed=seed,
        forecast_noise=cfg["exogenous"].getfloat("forecast_noise"),
        recovery_shield=recovery,
        device_shields=device_shields,
        intervention_penalty=penalty,
        degradation=_degradation_from_config(cfg),
        scenario=_scenario_from_config(cfg),
    )
    environment = MicrogridEnv(series, econfig)
    policy = policies.make_policy(policy_name, seed)
    metrics, rows = run_episode(policy, environment)
    stem = f"{policy_name}_seed{seed}"
    csv_path = os.path.join(out_dir, f"{stem}.csv")
    write_trajectory(rows, csv_path)
    write_summary(metrics, os.path.join(out_dir, f"{stem}.json"),
                  extra={"policy": policy_name, "seed": seed, "days": days})
    return seed, csv_path, metrics.as_dict()


@click.group()
def main():
    """Shielded microgrid dispatch simulator."""


@main.command("run")
@click.option("--policy", "policy_name", required=True,
              type=click.Choice(sorted(policies.POLICIES)))
@click.option("--data", type=click.Path(exists=True, dir_okay=False),
              help="Exogenous CSV (minute,demand_kw,wind_avail_kw).")
@click.option("--synth-seed", type=int, default=None,
              help="Generate the series instead of loading one.")
@click.option("--days", type=int, default=1, show_default=True)
@click.option("--profile", type=click.Choice(["nominal", "adversarial"]),
              default="nominal", show_default=True)
@click.option("--alpha", type=float, default=1.0, show_default=True,
              help="Degradation weight in the reward.")
@click.option("--seeds", default="0", show_default=True,
              help="Comma-separated episode seeds.")
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--no-recovery-shield", is_flag=True)
@click.option("--no-device-shield", is_flag=True)
@click.option("--unsafe", is_flag=True,
              help="Required to disable the device shields.")
@click.option("--intervention-penalty", type=float, default=0.0, show_default=True)
@click.option("--config", "cfg_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=".",
              show_default=True)
@click.option("--figures", is_flag=True, help="Render figures next to each CSV.")
def cmd_run(policy_name, data, synth_seed, days, profile, alpha, seeds, jobs,
            no_recovery_shield, no_device_shield, unsafe, intervention_penalty,
            cfg_path, out_dir, figures):
    """Run shielded dispatch episodes and write trajectory + summary files."""
    if no_device_shield and not unsafe:
        raise click.UsageError("--no-device-shield requires --unsafe")
    if data is None and synth_seed is None:
        raise click.UsageError("provide --data or --synth-seed")
    try:
        seed_list = [int(s) for s in seeds.split(",") if s.strip() != ""]
    except ValueError:
        raise click.UsageError(f"bad --seeds value {seeds!r}")
    if not seed_list:
        raise click.UsageError("--seeds must name at least one seed")
    os.makedirs(out_dir, exist_ok=True)

    tasks = [
        (policy_name, data, synth_seed, days, profile, alpha, seed,
         not no_recovery_shield, not no_device_shield, intervention_penalty,
         cfg_path, out_dir)
        for seed in seed_list
    ]
    try:
        if jobs > 1 and len(tasks) > 1:
            with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_run_one_seed, tasks))
        else:
            results = [_run_one_seed(t) for t in tasks]
    except (InvariantFailure, ContractViolation) as exc:
        click.echo(f"invariant failure: {exc}", err=True)
        sys.exit(EXIT_INVARIANT)

    merged = env_mod.MetricsRecord()
    per_seed = {}
    for seed, csv_path, metrics in sorted(results):
        delta = env_mod.MetricsRecord(**metrics)
        merged.accumulate(delta)
        per_seed[str(seed)] = metrics
        click.echo(f"seed {seed}: {csv_path}")
        if figures:
            for p in report.render_report(csv_path, out_dir):
                click.echo(f"  figure: {p}")
    summary_path = os.path.join(out_dir, f"{policy_name}_summary.json")
    with open(summary_path, "w", encoding="utf-8") as fh:
        json.dump({"total": merged.as_dict(), "per_seed": per_seed}, fh,
                  indent=2, sort_keys=True)
        fh.write("\n")
    click.echo(f"summary: {summary_path}")


@main.command("audit")
@click.argument("trajectory", type=click.Path(exists=True, dir_okay=False))
def cmd_audit(trajectory):
    """Independently re-check every constraint over a trajectory CSV."""
    try:
        rep = audit_mod.audit_file(trajectory)
    except (ValueError, KeyError) as exc:
        click.echo(f"parse error: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    for line in rep.lines():
        click.echo(line)
    sys.exit(EXIT_OK if rep.total_violations == 0 else EXIT_INVARIANT)


@main.command("gen-data")
@click.option("--seed", type=int, required=True)
@click.option("--days", type=int, default=1, show_default=True)
@click.option("--profile", type=click.Choice(["nominal", "adversarial"]),
              default="nominal", show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def cmd_gen_data(seed, days, profile, out):
    """Write a deterministic synthetic demand/wind series to CSV."""
    series = exogenous.synth_series(seed, days, profile)
    exogenous.save_series(series, out)
    click.echo(f"wrote {len(series)} rows to {out}")


@main.command("rainflow")
@click.argument("trace", type=click.Path(exists=True, dir_okay=False))
@click.option("--alpha-d", type=float, default=5.0, show_default=True)
@click.option("--beta", type=float, default=1.0, show_default=True)
@click.option("--w", type=float, default=0.01, show_default=True)
@click.option("--per-step", is_flag=True, help="Print each step's cost.")
def cmd_rainflow(trace, alpha_d, beta, w, per_step):
    """Online cycle costs over an SoC trace (one fraction per line) vs the
    offline rainflow total; per-leg cycle weighting keeps the two sums on
    the same scale, since the online pass accrues both legs of a cycle."""
    with open(trace, encoding="utf-8") as fh:
        values = [float(line) for line in fh if line.strip()]
    if not values:
        click.echo("empty trace", err=True)
        sys.exit(EXIT_USAGE)
    params = DegradationParams(alpha_d=alpha_d, beta=beta, w=w)
    online = OnlineDegradation(values[0], params)
    total = 0.0
    for i, soc in enumerate(values[1:], start=1):
        cost = online.step(soc)
        total += cost
        if per_step:
            click.echo(f"{i}\t{cost!r}")
    oracle = offline_rainflow_oracle(values, params,
                                    full_cycle_weight=2.0, half_cycle_weight=1.0)
    click.echo(f"online total:  {total!r}")
    click.echo(f"offline total: {oracle!r}")
    if oracle > 0:
        click.echo(f"relative gap:  {abs(total - oracle) / oracle:.6f}")
    else:
        click.echo("relative gap:  0.000000")


@main.command("report")
@click.argument("trajectory", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Figure directory; defaults to the CSV's directory.")
@click.option("--dpi", type=int, default=110, show_default=True)
def cmd_report(trajectory, out_dir, dpi):
    """Render dispatch, SoC and balance figures from a trajectory CSV."""
    for p in report.render_report(trajectory, out_dir, dpi=dpi):
        click.echo(p)


@main.command("print-config")
def cmd_print_config():
    """Print the default configuration with every constant spelled out."""
    click.echo(DEFAULT_CONFIG, nl=False)


if __name__ == "__main__":
    main()
