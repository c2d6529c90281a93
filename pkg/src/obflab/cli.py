"""Command-line interface and artifact persistence.

Three subcommands:

* ``obflab sim``      — run a seeded Monte-Carlo experiment and write the
  per-trial samples plus a summary;
* ``obflab analytic`` — tabulate an analytic marginal pdf/cdf on a grid,
  or print the analytic mean sum rate;
* ``obflab figure``   — produce the bundled CSV data behind the four
  standard plots (per-user density overlays and sum-rate sweeps).

Artifacts are UTF-8 CSV (or JSON for ``sim --format json``).  Every
artifact embeds its RunManifest as a leading comment line; the manifest
deliberately excludes wall-clock fields so that re-running with the
same flags and seed reproduces the file byte for byte.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .analytic_obf import ObfParams, obf_marginal_pdf_grid, obf_mean_sum_rate
from .analytic_olbf import OlbfParams, olbf_marginal_pdf_sinr_grid, olbf_mean_sum_rate
from .channel import SystemParams
from .grids import obf_sinr_grid, olbf_sinr_grid
from .montecarlo import (
    SCHEMES,
    ExperimentConfig,
    ExperimentReport,
    attach_analysis,
    run_experiment,
)

__all__ = [
    "RunManifest",
    "main",
    "write_report_csv",
    "read_report_csv",
]

LN2 = math.log(2.0)


@dataclass(frozen=True)
class RunManifest:
    """Provenance record embedded in every artifact.

    ``content_hash`` is a SHA-256 over the canonical JSON of the config
    echo, so identical inputs hash identically on any platform.  The
    timestamp is carried on the object for logging but excluded from the
    serialised form so artifacts stay reproducible byte for byte.
    """

    command: str
    config: dict
    seed: int
    version: str = ""
    timestamp: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat()
    )

    @property
    def content_hash(self) -> str:
        blob = json.dumps(self.config, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def to_embedded_json(self) -> str:
        payload = {
            "command": self.command,
            "config": self.config,
            "content_hash": self.content_hash,
            "seed": self.seed,
            "version": self.version,
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    @staticmethod
    def parse_embedded(line: str) -> dict:
        prefix = "# manifest: "
        if not line.startswith(prefix):
            raise ValueError("artifact does not start with a manifest line")
        return json.loads(line[len(prefix):])


def _manifest_line(manifest: RunManifest) -> str:
    return f"# manifest: {manifest.to_embedded_json()}"


def write_report_csv(report: ExperimentReport, path: Path, manifest: RunManifest,
                     bits: bool = False) -> None:
    """One row per (trial, user_rank): trial,user_rank,user_index,sinr,sum_rate_trial."""
    scale = 1.0 / LN2 if bits else 1.0
    lines = [_manifest_line(manifest), "trial,user_rank,user_index,sinr,sum_rate_trial"]
    trials, r = report.sinrs.shape
    for t in range(trials):
        rate = repr(float(report.sum_rates[t]) * scale)
        for j in range(r):
            lines.append(
                f"{t},{j + 1},{report.users[t, j]},{float(report.sinrs[t, j])!r},{rate}"
            )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_report_csv(path: Path) -> tuple[dict, ExperimentReport]:
    """Rebuild (manifest dict, ExperimentReport) from a sim CSV artifact."""
    text = Path(path).read_text(encoding="utf-8").splitlines()
    manifest = RunManifest.parse_embedded(text[0])
    if text[1] != "trial,user_rank,user_index,sinr,sum_rate_trial":
        raise ValueError("unexpected CSV header")
    cfg = manifest["config"]
    rows = [line.split(",") for line in text[2:] if line]
    trials = cfg["trials"]
    r = len(rows) // trials
    users = np.array([int(row[2]) for row in rows], dtype=np.int64).reshape(trials, r)
    sinrs = np.array([float(row[3]) for row in rows]).reshape(trials, r)
    scale = LN2 if cfg.get("bits") else 1.0
    rates = np.array([float(rows[i * r][4]) for i in range(trials)]) * scale
    config = ExperimentConfig(
        params=SystemParams(M=cfg["m"], K=cfg["k"], P=cfg["p_linear"], r=cfg["r"]),
        scheme=cfg["scheme"],
        trials=trials,
        seed=manifest["seed"],
        force_r=cfg.get("force_r"),
    )
    from .montecarlo import EmpiricalDistribution

    mean = math.fsum(rates) / trials
    var = (
        math.fsum((x - mean) ** 2 for x in rates) / (trials - 1) if trials > 1 else 0.0
    )
    report = ExperimentReport(
        config=config,
        users=users,
        sinrs=sinrs,
        sum_rates=rates,
        per_user=tuple(EmpiricalDistribution(np.sort(sinrs[:, j])) for j in range(r)),
        mean_sum_rate=mean,
        stderr_sum_rate=math.sqrt(var / trials),
        runtime_seconds=0.0,
    )
    return manifest, report


def _write_summary(report: ExperimentReport, path: Path, manifest: RunManifest,
                   bits: bool) -> None:
    scale = 1.0 / LN2 if bits else 1.0
    summary = {
        "manifest": json.loads(manifest.to_embedded_json()),
        "mean_sum_rate": report.mean_sum_rate * scale,
        "stderr_sum_rate": report.stderr_sum_rate * scale,
        "rate_unit": "bits" if bits else "nats",
        "ks_per_user": list(report.ks_per_user) if report.ks_per_user else None,
        "analytic_mean_sum_rate": (
            report.analytic_mean_sum_rate * scale
            if report.analytic_mean_sum_rate is not None
            else None
        ),
    }
    path.write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _write_report_json(report: ExperimentReport, path: Path, manifest: RunManifest,
                       bits: bool) -> None:
    scale = 1.0 / LN2 if bits else 1.0
    payload = {
        "manifest": json.loads(manifest.to_embedded_json()),
        "trial": [int(t) for t in range(report.sinrs.shape[0])],
        "users": report.users.tolist(),
        "sinrs": report.sinrs.tolist(),
        "sum_rate_trial": (report.sum_rates * scale).tolist(),
    }
    path.write_text(json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8")


def _config_echo(args, p_linear: float, r: int) -> dict:
    return {
        "scheme": args.scheme,
        "m": args.m,
        "k": args.k,
        "snr_db": args.snr_db,
        "p_linear": p_linear,
        "r": r,
        "force_r": getattr(args, "force_r", None),
        "trials": getattr(args, "trials", None),
        "bits": bool(getattr(args, "bits", False)),
    }


def cmd_sim(args) -> int:
    p_linear = 10.0 ** (args.snr_db / 10.0)
    r = args.force_r if args.force_r is not None else min(args.m, args.k)
    try:
        config = ExperimentConfig(
            params=SystemParams(M=args.m, K=args.k, P=p_linear, r=r),
            scheme=args.scheme,
            trials=args.trials,
            seed=args.seed,
            force_r=args.force_r,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report = run_experiment(config, threads=args.threads)
    report = attach_analysis(report)
    manifest = RunManifest(
        command="sim", config=_config_echo(args, p_linear, r), seed=args.seed,
        version=__version__,
    )
    out = Path(args.out) if args.out else Path(f"sim_{args.scheme}_{args.seed}.{args.format}")
    if args.format == "csv":
        write_report_csv(report, out, manifest, bits=args.bits)
    else:
        _write_report_json(report, out, manifest, bits=args.bits)
    _write_summary(report, out.with_suffix(out.suffix + ".summary.json"), manifest, args.bits)
    print(f"wrote {out}")
    return 0


def _parse_grid(spec: str) -> np.ndarray:
    try:
        start, stop, count = spec.split(":")
        grid = np.linspace(float(start), float(stop), int(count))
    except Exception as exc:
        raise ValueError(f"bad grid spec {spec!r}, expected start:stop:count") from exc
    if grid.size < 1 or np.any(grid < 0):
        raise ValueError("grid must be nonnegative and nonempty")
    return grid


def cmd_analytic(args) -> int:
    p_linear = 10.0 ** (args.snr_db / 10.0)
    try:
        if args.scheme == "obf":
            r = args.r if args.r is not None else args.m
            params = ObfParams(M=args.m, K=args.k, P=p_linear, r=r)
        else:
            params = OlbfParams(M=args.m, K=args.k, P=p_linear)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.sum_rate:
        rate = obf_mean_sum_rate(params) if args.scheme == "obf" else olbf_mean_sum_rate(params)
        if args.bits:
            rate /= LN2
        print(repr(rate))
        return 0
    rank = args.user_rank
    if rank is None:
        print("error: --user-rank is required unless --sum-rate is given", file=sys.stderr)
        return 2
    limit = params.r if args.scheme == "obf" else params.M
    if not 1 <= rank <= limit:
        print(f"error: user rank must lie in 1..{limit}", file=sys.stderr)
        return 2
    if rank > 3:
        print(
            "numeric fallback: closed-form marginals cover user ranks 1-3 only; "
            "higher ranks are not tabulated by this command",
            file=sys.stderr,
        )
        return 3
    try:
        grid = _parse_grid(args.grid)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.scheme == "obf":
        pdf = obf_marginal_pdf_grid(rank, grid, params)
        dist = obf_sinr_grid(rank, params)
    else:
        pdf = olbf_marginal_pdf_sinr_grid(rank, grid, params)
        dist = olbf_sinr_grid(rank, params)
    cdf = dist.cdf_at(grid)
    manifest = RunManifest(
        command="analytic",
        config={
            "scheme": args.scheme,
            "m": args.m,
            "k": args.k,
            "snr_db": args.snr_db,
            "p_linear": p_linear,
            "r": getattr(params, "r", params.M),
            "user_rank": rank,
            "grid": args.grid,
        },
        seed=0,
        version=__version__,
    )
    lines = [_manifest_line(manifest), "y,pdf,cdf"]
    lines += [f"{y!r},{p!r},{c!r}" for y, p, c in zip(grid.tolist(), pdf.tolist(), cdf.tolist())]
    out = Path(args.out) if args.out else Path(f"analytic_{args.scheme}_rank{rank}.csv")
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {out}")
    return 0


def _sum_rate_row(scheme, M, K, P, r, trials, seed, threads):
    config = ExperimentConfig(
        params=SystemParams(M=M, K=K, P=P, r=r), scheme=scheme, trials=trials,
        seed=seed, force_r=r if scheme == "adaptive-obf" else None,
    )
    report = run_experiment(config, threads=threads)
    return report.mean_sum_rate, report.stderr_sum_rate


def _figure_overlay(scheme: str, out_dir: Path, trials: int, seed: int, threads) -> None:
    """fig1 / fig3 data: per-rank histogram plus analytic pdf, M in {2, 3}."""
    P = 10.0 ** 1.5
    K = 10
    for M in (2, 3):
        config = ExperimentConfig(
            params=SystemParams(M=M, K=K, P=P, r=M), scheme=scheme, trials=trials,
            seed=seed, force_r=M if scheme == "adaptive-obf" else None,
        )
        report = run_experiment(config, threads=threads)
        manifest = RunManifest(
            command="figure", config={"scheme": scheme, "m": M, "k": K,
                                      "snr_db": 15.0, "trials": trials},
            seed=seed, version=__version__,
        )
        hist_lines = [_manifest_line(manifest), "user_rank,bin_left,bin_right,density"]
        pdf_lines = [_manifest_line(manifest), "user_rank,y,pdf"]
        if scheme == "adaptive-obf":
            params = ObfParams(M=M, K=K, P=P, r=M)
        else:
            params = OlbfParams(M=M, K=K, P=P)
        for rank in range(1, M + 1):
            samples = report.sinrs[:, rank - 1]
            density, edges = np.histogram(samples, bins=100, density=True)
            hist_lines += [
                f"{rank},{float(edges[i])!r},{float(edges[i + 1])!r},{float(density[i])!r}"
                for i in range(density.size)
            ]
            ys = np.linspace(0.0, float(edges[-1]), 200)
            if scheme == "adaptive-obf":
                pdf = obf_marginal_pdf_grid(rank, ys, params)
            else:
                pdf = olbf_marginal_pdf_sinr_grid(rank, ys, params)
            pdf_lines += [f"{rank},{y!r},{v!r}" for y, v in zip(ys.tolist(), pdf.tolist())]
        (out_dir / f"hist_m{M}.csv").write_text("\n".join(hist_lines) + "\n", "utf-8")
        (out_dir / f"analytic_m{M}.csv").write_text("\n".join(pdf_lines) + "\n", "utf-8")


def _figure_rate_vs_power(out_dir: Path, trials: int, seed: int, threads) -> None:
    """fig4 data: sum rate vs P for M = r in {2, 4}, K = M."""
    manifest = RunManifest(
        command="figure", config={"name": "fig4", "trials": trials}, seed=seed,
        version=__version__,
    )
    lines = [
        _manifest_line(manifest),
        "p_db,m,scheme,sum_rate_nats,sum_rate_bits,stderr_nats",
    ]
    for M in (2, 4):
        for p_db in range(-10, 22, 2):
            P = 10.0 ** (p_db / 10.0)
            for scheme in ("adaptive-obf", "olbf", "zfs"):
                mean, err = _sum_rate_row(scheme, M, M, P, M, trials, seed, threads)
                lines.append(
                    f"{p_db},{M},{scheme},{mean!r},{mean / LN2!r},{err!r}"
                )
    (out_dir / "fig4.csv").write_text("\n".join(lines) + "\n", "utf-8")


def _figure_rate_vs_users(out_dir: Path, trials: int, seed: int, threads) -> None:
    """fig5 data: sum rate vs K for M = r = 3, P in {0, 10} dB."""
    manifest = RunManifest(
        command="figure", config={"name": "fig5", "trials": trials}, seed=seed,
        version=__version__,
    )
    lines = [
        _manifest_line(manifest),
        "k,p_db,scheme,sum_rate_nats,sum_rate_bits,stderr_nats,analytic_nats",
    ]
    ratio_rows = {}
    for p_db in (0, 10):
        P = 10.0 ** (p_db / 10.0)
        for K in range(3, 21):
            means = {}
            for scheme in ("zfdp", "adaptive-obf", "olbf"):
                mean, err = _sum_rate_row(scheme, 3, K, P, 3, trials, seed, threads)
                means[scheme] = mean
                if scheme == "adaptive-obf":
                    analytic = obf_mean_sum_rate(ObfParams(M=3, K=K, P=P, r=3))
                elif scheme == "olbf":
                    analytic = olbf_mean_sum_rate(OlbfParams(M=3, K=K, P=P))
                else:
                    analytic = None
                lines.append(
                    f"{K},{p_db},{scheme},{mean!r},{mean / LN2!r},{err!r},"
                    + ("" if analytic is None else repr(analytic))
                )
            ratio_rows[(K, p_db)] = (
                means["adaptive-obf"] / means["zfdp"],
                means["olbf"] / means["zfdp"],
            )
    (out_dir / "fig5.csv").write_text("\n".join(lines) + "\n", "utf-8")
    rlines = [_manifest_line(manifest), "k,p_db,ratio_adaptive_obf,ratio_olbf"]
    rlines += [
        f"{K},{p},{a!r},{b!r}" for (K, p), (a, b) in sorted(ratio_rows.items())
    ]
    (out_dir / "fig5_ratios.csv").write_text("\n".join(rlines) + "\n", "utf-8")


def cmd_figure(args) -> int:
    out_dir = Path(args.out_dir) / args.name
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.name == "fig1":
        _figure_overlay("adaptive-obf", out_dir, args.trials, args.seed, args.threads)
    elif args.name == "fig3":
        _figure_overlay("olbf", out_dir, args.trials, args.seed, args.threads)
    elif args.name == "fig4":
        _figure_rate_vs_power(out_dir, args.trials, args.seed, args.threads)
    else:
        _figure_rate_vs_users(out_dir, args.trials, args.seed, args.threads)
    print(f"wrote {out_dir}/")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="obflab",
        description="Simulation and exact analysis of greedy orthogonal beamforming schemes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("sim", help="run a seeded Monte-Carlo experiment")
    sim.add_argument("--scheme", required=True, choices=SCHEMES)
    sim.add_argument("--m", required=True, type=int)
    sim.add_argument("--k", required=True, type=int)
    sim.add_argument("--snr-db", required=True, type=float)
    sim.add_argument("--trials", required=True, type=int)
    sim.add_argument("--seed", required=True, type=int)
    sim.add_argument("--force-r", type=int, default=None)
    sim.add_argument("--out", default=None)
    sim.add_argument("--format", choices=("csv", "json"), default="csv")
    sim.add_argument("--threads", type=int, default=None)
    sim.add_argument("--bits", action="store_true")
    sim.set_defaults(func=cmd_sim)

    ana = sub.add_parser("analytic", help="tabulate analytic marginal pdf/cdf")
    ana.add_argument("--scheme", required=True, choices=("obf", "olbf"))
    ana.add_argument("--m", required=True, type=int)
    ana.add_argument("--k", required=True, type=int)
    ana.add_argument("--snr-db", required=True, type=float)
    ana.add_argument("--r", type=int, default=None)
    ana.add_argument("--user-rank", type=int, default=None)
    ana.add_argument("--grid", default="0:20:200")
    ana.add_argument("--out", default=None)
    ana.add_argument("--sum-rate", action="store_true")
    ana.add_argument("--bits", action="store_true")
    ana.set_defaults(func=cmd_analytic)

    fig = sub.add_parser("figure", help="emit the CSV bundle behind a standard plot")
    fig.add_argument("name", choices=("fig1", "fig3", "fig4", "fig5"))
    fig.add_argument("--trials", type=int, default=100000)
    fig.add_argument("--seed", type=int, default=1)
    fig.add_argument("--out-dir", default="figures")
    fig.add_argument("--threads", type=int, default=None)
    fig.set_defaults(func=cmd_figure)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
