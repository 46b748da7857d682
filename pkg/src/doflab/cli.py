"""
Command-line front end.

Subcommands ``region``, ``simulate``, ``verify``, ``sweep`` and ``plan``.
Exit codes: 0 success, 1 invalid input, 2 reconciliation failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .channel_model import CsitQuality, SnrPoint, as_fraction
from .dof_analysis import (analytic_scheme_dof, contains, hull_csv_text, reconcile,
                           region, region_json_text, verdicts_csv_text)
from .scheme_builder import (Owner, Scheme, build_hybrid, build_plan, case_ii_length,
                             nearest_integer_l_points, plan_to_json)
from .sic_evaluator import evaluate_sweep, rates_csv_text, rates_json_text

CONFIG_SCHEMA_VERSION = 1
DEFAULT_BETAS = (Fraction(1, 3), Fraction(1, 2), Fraction(2, 3), Fraction(1))
DEFAULT_SNR_DB = (50.0, 65.0, 80.0)
HYBRID = "HYBRID"
SCHEME_CHOICES = tuple(s.value for s in Scheme) + (HYBRID,)

EXIT_OK, EXIT_INVALID, EXIT_MISMATCH = 0, 1, 2


class UsageError(ValueError):
    pass


def _fractions(text: str | None) -> tuple[Fraction, ...] | None:
    if text is None:
        return None
    try:
        return tuple(as_fraction(t) for t in text.split(",") if t.strip())
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines an experiment's output files.

    ``alphas`` empty means the default ``{0, beta/2, beta}`` per beta;
    ``betas`` empty means the default grid.
    """

    schemes: tuple[str, ...] = (HYBRID,)
    alphas: tuple[Fraction, ...] = ()
    betas: tuple[Fraction, ...] = ()
    snr_db: tuple[float, ...] = DEFAULT_SNR_DB
    n_trials: int = 10_000
    master_seed: int = 0
    common_owner: str = Owner.USER1.value
    tolerance: float = 0.05
    out_dir: str = "doflab_out"
    fmt: str = "csv"

    def __post_init__(self):
        for s in self.schemes:
            if s not in SCHEME_CHOICES:
                raise UsageError(f"unknown scheme {s!r}; choose from {', '.join(SCHEME_CHOICES)}")
        if not self.schemes:
            raise UsageError("at least one scheme is required")
        if self.n_trials < 1:
            raise UsageError("--trials must be >= 1")
        if any(b <= a for a, b in zip(self.snr_db, self.snr_db[1:])):
            raise UsageError("SNR list must be strictly increasing")
        try:
            for p in self.snr_db:
                SnrPoint(p)
            Owner(self.common_owner)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if self.fmt not in ("csv", "json"):
            raise UsageError("--format must be csv or json")
        if self.tolerance < 0:
            raise UsageError("--tol must be >= 0")

    @property
    def explicit_grid(self) -> bool:
        return bool(self.betas)

    def grid(self) -> list[CsitQuality]:
        """Grid points; invalid explicit pairs raise, defaults are filtered."""
        betas = self.betas or DEFAULT_BETAS
        out: list[CsitQuality] = []
        for b in betas:
            alphas = self.alphas or (Fraction(0), b / 2, b)
            for a in alphas:
                if self.explicit_grid:
                    q = CsitQuality(a, b)
                elif 0 <= a <= b <= 1:
                    q = CsitQuality(a, b)
                else:
                    continue
                if q not in out:
                    out.append(q)
        return out

    def to_dict(self) -> dict:
        return {
            "schema_version": CONFIG_SCHEMA_VERSION,
            "schemes": list(self.schemes),
            "alphas": [str(a) for a in self.alphas],
            "betas": [str(b) for b in self.betas],
            "snr_db": list(self.snr_db),
            "n_trials": self.n_trials,
            "master_seed": self.master_seed,
            "common_owner": self.common_owner,
            "tolerance": self.tolerance,
            "out_dir": self.out_dir,
            "format": self.fmt,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if d.get("schema_version") != CONFIG_SCHEMA_VERSION:
            raise UsageError(f"unsupported config schema_version {d.get('schema_version')!r}")
        return cls(
            schemes=tuple(d["schemes"]),
            alphas=tuple(Fraction(a) for a in d["alphas"]),
            betas=tuple(Fraction(b) for b in d["betas"]),
            snr_db=tuple(float(x) for x in d["snr_db"]),
            n_trials=int(d["n_trials"]),
            master_seed=int(d["master_seed"]),
            common_owner=d["common_owner"],
            tolerance=float(d["tolerance"]),
            out_dir=d["out_dir"],
            fmt=d["format"],
        )


def _owner(text: str) -> str:
    return {"1": "user1", "2": "user2"}.get(text, text)


def config_from_args(args: argparse.Namespace, default_schemes=(HYBRID,)) -> ExperimentConfig:
    if getattr(args, "config", None):
        return ExperimentConfig.from_dict(json.loads(Path(args.config).read_text()))
    schemes = tuple(s.strip().upper() for s in args.scheme.split(",")) if args.scheme \
        else tuple(default_schemes)
    try:
        snr = tuple(float(x) for x in args.snr_db.split(",")) if args.snr_db else DEFAULT_SNR_DB
    except ValueError:
        raise UsageError(f"cannot parse --snr-db {args.snr_db!r}") from None
    return ExperimentConfig(
        schemes=schemes,
        alphas=_fractions(args.alpha) or (),
        betas=_fractions(args.beta) or (),
        snr_db=snr,
        n_trials=args.trials,
        master_seed=args.seed,
        common_owner=_owner(args.owner),
        tolerance=args.tol,
        out_dir=args.out_dir,
        fmt=args.format,
    )


def _plan_for(scheme: str, q: CsitQuality, owner: str):
    """Build a plan, turning a fractional Case II block count into a helpful error."""
    try:
        if scheme == HYBRID:
            return build_hybrid(q, owner)
        return build_plan(scheme, q, owner)
    except ValueError as exc:
        if q.beta > q.saturation_beta and scheme in (HYBRID, Scheme.HYBRID_CASE_II.value):
            L = case_ii_length(q)
            if L.denominator != 1:
                near = ", ".join(f"L={n}: (alpha={p.alpha}, beta={p.beta})"
                                 for n, p in nearest_integer_l_points(q))
                raise UsageError(f"{exc}. Nearest integer-L points: {near}") from None
        raise UsageError(str(exc)) from None


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _runs(cfg: ExperimentConfig, workers: int | None):
    """Yield ``(plan, reports)`` for every valid scheme and grid point."""
    snrs = [SnrPoint(p) for p in cfg.snr_db]
    for q in cfg.grid():
        for scheme in cfg.schemes:
            try:
                plan = _plan_for(scheme, q, cfg.common_owner)
                if plan.degenerate:
                    raise UsageError(f"{plan.scheme.value} at {q} transmits nothing")
            except UsageError as exc:
                if cfg.explicit_grid:
                    raise
                print(f"skip {scheme} at {q}: {exc}", file=sys.stderr)
                continue
            yield plan, evaluate_sweep(plan, q, snrs, cfg.n_trials, cfg.master_seed, workers)


def _save_config(cfg: ExperimentConfig) -> None:
    _write(Path(cfg.out_dir) / "config.json", json.dumps(cfg.to_dict(), indent=2) + "\n")


def _write_rates(cfg: ExperimentConfig, reports) -> Path:
    out = Path(cfg.out_dir)
    if cfg.fmt == "json":
        path = out / "rates.json"
        _write(path, rates_json_text(reports) + "\n")
    else:
        path = out / "rates.csv"
        _write(path, rates_csv_text(reports))
    return path


def _tag(q: CsitQuality) -> str:
    return f"a{q.alpha}_b{q.beta}".replace("/", "-")


def cmd_region(cfg: ExperimentConfig, workers=None) -> int:
    out = Path(cfg.out_dir)
    for q in cfg.grid():
        reg = region(q)
        _write(out / f"region_{_tag(q)}.json", region_json_text(reg) + "\n")
        _write(out / f"hull_{_tag(q)}.csv", hull_csv_text(reg))
        corners = " ".join(str(p) for p in reg.corners)
        print(f"alpha={q.alpha} beta={q.beta} achievable corners: {corners}")
    return EXIT_OK


def cmd_simulate(cfg: ExperimentConfig, workers=None) -> int:
    reports = [r for _, reps in _runs(cfg, workers) for r in reps]
    _save_config(cfg)
    path = _write_rates(cfg, reports)
    print(f"wrote {len(reports)} rate reports to {path}")
    return EXIT_OK


def _verdicts(cfg: ExperimentConfig, workers):
    if len(cfg.snr_db) < 3:
        raise UsageError("verify needs at least 3 SNR points")
    reports, verdicts = [], []
    for plan, reps in _runs(cfg, workers):
        reports += reps
        target = analytic_scheme_dof(plan.scheme, plan.quality, plan.common_owner or "user1")
        verdicts.append(reconcile(reps, target, cfg.tolerance))
    return reports, verdicts


def _write_verdicts(cfg: ExperimentConfig, verdicts) -> None:
    out = Path(cfg.out_dir)
    if cfg.fmt == "json":
        doc = {"schema_version": 1, "verdicts": [
            dict(zip(("scheme", "alpha", "beta", "target_d1", "target_d2", "fitted_d1",
                      "fitted_d2", "residual_d1", "residual_d2", "tolerance"),
                     [v.scheme.value, str(v.quality.alpha), str(v.quality.beta),
                      *v.target, *v.fitted, *v.residuals, v.tolerance]),
                 passed=v.passed) for v in verdicts]}
        _write(out / "verdicts.json", json.dumps(doc, indent=2) + "\n")
    else:
        _write(out / "verdicts.csv", verdicts_csv_text(verdicts))


def cmd_verify(cfg: ExperimentConfig, workers=None) -> int:
    reports, verdicts = _verdicts(cfg, workers)
    _save_config(cfg)
    _write_rates(cfg, reports)
    _write_verdicts(cfg, verdicts)
    for v in verdicts:
        print(f"{'PASS' if v.passed else 'FAIL'} {v.scheme.value} alpha={v.quality.alpha} "
              f"beta={v.quality.beta} fitted=({v.fitted[0]:.4f}, {v.fitted[1]:.4f}) "
              f"target=({v.target[0]:.4f}, {v.target[1]:.4f}) tol={v.tolerance}")
    return EXIT_OK if verdicts and all(v.passed for v in verdicts) else EXIT_MISMATCH


def cmd_sweep(cfg: ExperimentConfig, workers=None) -> int:
    """Regions plus a simulated, fitted and region-checked point per scheme and grid point."""
    cmd_region(cfg)
    reports, verdicts = _verdicts(cfg, workers)
    _save_config(cfg)
    _write_rates(cfg, reports)
    _write_verdicts(cfg, verdicts)
    lines = ["scheme,alpha,beta,channel_use_charge,fitted_d1,fitted_d2,analytic_d1,"
             "analytic_d2,full_power_d1,full_power_d2,analytic_in_region"]
    for v in verdicts:
        a = analytic_scheme_dof(v.scheme, v.quality, cfg.common_owner)
        inside = contains(region(v.quality), a.full_power_point)
        lines.append(",".join([v.scheme.value, str(v.quality.alpha), str(v.quality.beta),
                               str(a.channel_use_charge), repr(v.fitted[0]), repr(v.fitted[1]),
                               str(a.point[0]), str(a.point[1]),
                               str(a.full_power_point.d1), str(a.full_power_point.d2),
                               str(inside).lower()]))
    _write(Path(cfg.out_dir) / "sweep.csv", "\n".join(lines) + "\n")
    print(f"sweep: {len(verdicts)} scheme points, {sum(v.passed for v in verdicts)} within tolerance")
    return EXIT_OK if all(v.passed for v in verdicts) else EXIT_MISMATCH


def cmd_plan(cfg: ExperimentConfig, workers=None) -> int:
    docs = [json.loads(plan_to_json(_plan_for(s, q, cfg.common_owner)))
            for q in cfg.grid() for s in cfg.schemes]
    text = json.dumps(docs[0] if len(docs) == 1 else docs, indent=2)
    print(text)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # keep exit code 2 for reconciliation failures
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_INVALID)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="doflab", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "region": "write the achievable DoF region per grid point",
        "simulate": "Monte-Carlo rates of each scheme over the SNR list",
        "verify": "simulate, fit pre-logs and compare with the analytic DoF",
        "sweep": "region + verify over the (default) grid for several schemes",
        "plan": "print a scheme's transmit plan and SIC program as JSON",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--alpha", help="comma list of rationals, e.g. 0,1/5")
        p.add_argument("--beta", help="comma list of rationals; omit for the default grid")
        p.add_argument("--scheme", help=f"comma list of {', '.join(SCHEME_CHOICES)}")
        p.add_argument("--snr-db", help="comma list of SNRs in dB, strictly increasing")
        p.add_argument("--trials", type=int, default=10_000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--owner", default="user1", choices=("user1", "user2", "1", "2"),
                       help="receiver credited with the common messages")
        p.add_argument("--tol", type=float, default=0.05)
        p.add_argument("--out-dir", default="doflab_out")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--workers", type=int, default=None,
                       help="worker threads (DOFLAB_THREADS caps this)")
        p.add_argument("--config", help="load an ExperimentConfig JSON instead of flags")
    return parser


COMMANDS = {"region": cmd_region, "simulate": cmd_simulate, "verify": cmd_verify,
            "sweep": cmd_sweep, "plan": cmd_plan}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    default = tuple(s.value for s in Scheme) if args.command == "sweep" else (HYBRID,)
    try:
        cfg = config_from_args(args, default)
        return COMMANDS[args.command](cfg, args.workers)
    except (UsageError, ValueError, TypeError, OSError) as exc:
        print(f"doflab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
