"""Command-line driver: ``msprcapon {simulate,pattern,sweep-gamma}``.

Exit codes: 0 success, 1 runtime/solver failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
import tempfile
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import yaml

from . import __version__
from .beamformers import MsprConfig
from .config import ConfigError, config_to_dict, load_config
from .metrics import METHODS, CampaignConfig, CampaignResult, run_campaign

log = logging.getLogger("msprcapon")

DEFAULT_GAMMAS = (0.1, 0.5, 1.0, 2.0, 10.0)
MANIFEST_NAME = "run_manifest.yaml"


class UsageError(Exception):
    pass


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_manifest(out_dir: Path, command: str, config: CampaignConfig, outputs, started, extra=None):
    manifest = {
        "tool": "msprcapon",
        "version": __version__,
        "command": command,
        "master_seed": int(config.master_seed),
        "started_at": started,
        "finished_at": _now(),
        "outputs": [str(p) for p in outputs],
        **(extra or {}),
        "config": config_to_dict(config),
    }
    atomic_write(out_dir / MANIFEST_NAME, yaml.safe_dump(manifest, sort_keys=False))


def format_summary(result: CampaignResult) -> str:
    cfg = result.config
    lines = [
        f"trials: {result.num_trials} ({len(result.failed_trials)} failed), "
        f"steer {cfg.steer_angle_deg:g} deg, true SOI {cfg.scene.soi_doa_deg:g} deg, "
        f"gamma {cfg.mspr.gamma:g}",
    ]
    for m in METHODS:
        s = result.methods[m]
        lines.append(f"  {m:<6} mean SINR {s.mean_sinr_db:8.4f} dB  (std {s.std_sinr_db:.4f})")
    lines.append(
        f"  MSPR converged in {100 * result.converged_fraction:.1f}% of trials, "
        f"mean {result.mean_iterations:.1f} iterations"
    )
    return "\n".join(lines)


def _resolve(args) -> CampaignConfig:
    path = Path(args.config)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    config = load_config(path)
    try:
        if args.seed is not None:
            config = replace(config, master_seed=args.seed)
        if args.trials is not None:
            config = replace(config, num_trials=args.trials)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return config


def cmd_simulate(args) -> int:
    started = _now()
    config = _resolve(args)
    out = Path(args.out)
    result = run_campaign(config, workers=args.workers)

    summary_rows = []
    for m in METHODS:
        s = result.methods[m]
        summary_rows.append([m, repr(s.mean_sinr_db), repr(s.std_sinr_db),
                             result.num_trials - len(result.failed_trials), len(result.failed_trials)])
    trial_rows = [
        [t.trial, t.seed, repr(t.sinr_db["capon"]), repr(t.sinr_db["mspr"]),
         t.mspr_iterations, int(t.mspr_converged), t.error or ""]
        for t in result.trials
    ]
    paths = [out / "sinr_summary.csv", out / "per_trial.csv"]
    atomic_write(paths[0], _csv_text(
        ["method", "mean_sinr_db", "std_sinr_db", "num_trials", "num_failed"], summary_rows))
    atomic_write(paths[1], _csv_text(
        ["trial", "seed", "capon_sinr_db", "mspr_sinr_db", "mspr_iterations", "mspr_converged", "error"],
        trial_rows))
    write_manifest(out, "simulate", config, paths, started)
    print(format_summary(result))
    return 0


def cmd_pattern(args) -> int:
    started = _now()
    config = _resolve(args)
    out = Path(args.out)
    result = run_campaign(config, workers=args.workers)
    capon, mspr = result.capon.mean_pattern, result.mspr.mean_pattern
    rows = [[f"{a:.6f}", f"{c:.10f}", f"{m:.10f}"]
            for a, c, m in zip(config.grid.angles_deg, capon.gains_db, mspr.gains_db)]
    path = out / "pattern.csv"
    atomic_write(path, _csv_text(["angle_deg", "capon_db", "mspr_db"], rows))
    write_manifest(out, "pattern", config, [path], started)
    print(f"wrote {path} ({len(rows)} angles, averaged over {result.num_trials} trials)")
    return 0


def parse_gammas(text: str) -> list[float]:
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise UsageError("--gamma needs at least one value")
    try:
        gammas = [float(t) for t in items]
    except ValueError:
        raise UsageError(f"--gamma must be a comma-separated list of numbers, got {text!r}") from None
    if any(g < 0 for g in gammas):
        raise UsageError("gamma values must be nonnegative")
    return gammas


def cmd_sweep_gamma(args) -> int:
    started = _now()
    gammas = parse_gammas(args.gamma) if args.gamma is not None else list(DEFAULT_GAMMAS)
    config = _resolve(args)
    out = Path(args.out)
    rows = []
    for gamma in gammas:
        cfg = replace(config, mspr=replace(config.mspr, gamma=gamma))
        result = run_campaign(cfg, workers=args.workers)
        rows.append([repr(gamma), repr(result.mspr.mean_sinr_db)])
        print(f"gamma {gamma:g}: MSPR mean SINR {result.mspr.mean_sinr_db:.4f} dB "
              f"(Capon {result.capon.mean_sinr_db:.4f} dB)")
    path = out / "gamma_sweep.csv"
    atomic_write(path, _csv_text(["gamma", "mean_sinr_db_mspr"], rows))
    write_manifest(out, "sweep-gamma", config, [path], started, {"gammas": gammas})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="msprcapon", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="YAML config or run manifest")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, help="override campaign.master_seed")
        p.add_argument("--trials", type=int, help="override campaign.num_trials")
        p.add_argument("--workers", type=int, default=1, help="worker processes for trials")

    common(sub.add_parser("simulate", help="Monte Carlo SINR campaign"))
    common(sub.add_parser("pattern", help="trial-averaged normalised beam patterns"))
    p = sub.add_parser("sweep-gamma", help="MSPR mean SINR for several gamma values")
    common(p)
    p.add_argument("--gamma", help="comma-separated gamma values (default 0.1,0.5,1,2,10)")
    return parser


COMMANDS = {"simulate": cmd_simulate, "pattern": cmd_pattern, "sweep-gamma": cmd_sweep_gamma}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, UsageError) as exc:
        print(f"msprcapon: error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, ArithmeticError, ValueError, OSError) as exc:
        print(f"msprcapon: failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
