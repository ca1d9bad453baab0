"""Command-line entry point.

Exit codes: 0 found / pass, 1 verification failed, 2 usage or resource-guard
error, 3 the search legitimately answered "No".
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__, config, streams
from .attackbench import boomerang_distinguish, expected_wrong_count, recover_suffix_key, right_rate_per_key
from .boomfind import BoomerangDistinguisher, algorithm3
from .cipherkit import (FORWARD, INVERSE, ComponentFunction, ResourceGuardError, component_truth_table,
                        make_cipher, planted_differential)
from .oracle import MAX_EXHAUSTIVE_BITS, complexity_report, key_profile
from .truncfind import TruncatedDifference, TruncatedDifferential, algorithm2, sample_budget
from .walshsim import dump_spectrum, walsh_spectrum

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NO = 0, 1, 2, 3

log = logging.getLogger("bvtrunc")


class UsageError(Exception):
    pass


# -- reports ----------------------------------------------------------------------

def guard_mode(cfg: config.RunConfig, cipher) -> str:
    if cfg.verify.sampled or cipher.m > MAX_EXHAUSTIVE_BITS or cipher.n > MAX_EXHAUSTIVE_BITS:
        return "sampled"
    return "exhaustive"


def envelope(command: str, cfg: config.RunConfig, mode: str, result: dict[str, Any]) -> dict[str, Any]:
    return {
        "tool": "bvtrunc",
        "version": __version__,
        "command": command,
        "config": cfg.to_dict(hashed=True),
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
        "rng": streams.RNG_IDENTITY,
        "guard_mode": mode,
        "result": result,
    }


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def emit(doc: dict[str, Any], path: str | None) -> None:
    text = dumps(doc)
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
        log.info("wrote %s", path)


def load_report(path: str) -> dict[str, Any]:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot read report {path}: {e}") from e


def sibling(path: str | None, suffix: str) -> str | None:
    if path is None:
        return None
    p = Path(path)
    return str(p.with_name(p.stem + suffix + p.suffix))


def _cipher(cfg: config.RunConfig):
    return make_cipher(cfg.cipher)


def _default_t(cipher) -> int:
    t = getattr(cipher, "t_star", None)
    return t if t is not None else max(1, cipher.rounds - 1)


# -- commands ---------------------------------------------------------------------

def cmd_find_truncated(cfg: config.RunConfig) -> int:
    cipher = _cipher(cfg)
    s = cfg.search
    t = s.t if s.t is not None else _default_t(cipher)
    attempts, found = [], None
    for i in range(s.retries + 1):
        seed = cfg.seed + i
        res = algorithm2(cipher, t, s.sigma, s.tau, seed, direction=s.direction, q=s.q,
                         mode=s.mode, workers=cfg.workers)
        attempts.append({
            "seed": seed,
            "found": res.found,
            "q": res.q,
            "q_overridden": res.q_overridden,
            "ranks": res.ranks(),
            "excluded_components": res.excluded,
            "candidates": res.candidates,
            "max_cover": res.max_cover,
            "enumeration_truncated": res.enumeration_truncated,
        })
        log.info("seed %d: %s", seed, "found" if res.found else "No")
        if res.found:
            found = res.differential
            break
    result = {
        "kind": "truncated",
        "found": found is not None,
        "t": t,
        "sample_budget": sample_budget(cipher.n, s.sigma, s.tau),
        "differential": None if found is None else found.to_dict(),
        "attempts": attempts,
    }
    emit(envelope("find-truncated", cfg, "exhaustive", result), cfg.output.report)
    return EXIT_OK if found is not None else EXIT_NO


def cmd_find_boomerang(cfg: config.RunConfig) -> int:
    cipher = _cipher(cfg)
    s = cfg.search
    out = None
    attempts = []
    for i in range(s.retries + 1):
        seed = cfg.seed + i
        res = algorithm3(cipher, s.sigma, s.tau, seed, q=s.q, mode=s.mode, workers=cfg.workers,
                         splits=s.splits)
        attempts.append({"seed": seed, "splits": res.attempts, "found": res.found})
        if res.found:
            out = res.distinguisher
            break
    result = {
        "kind": "boomerang",
        "found": out is not None,
        "distinguisher": None if out is None else out.to_dict(),
        "attempts": attempts,
    }
    emit(envelope("find-boomerang", cfg, "exhaustive", result), cfg.output.report)
    return EXIT_OK if out is not None else EXIT_NO


def _halves(report: dict[str, Any]) -> list[TruncatedDifferential]:
    res = report.get("result") or {}
    if not res.get("found"):
        raise UsageError("report says No; there is nothing to verify or attack")
    if res.get("kind") == "truncated":
        return [TruncatedDifferential.from_dict(res["differential"])]
    if res.get("kind") == "boomerang":
        d = BoomerangDistinguisher.from_dict(res["distinguisher"])
        return [d.fwd, d.bwd]
    raise UsageError(f"unrecognised report kind {res.get('kind')!r}")


def _upstream_config(report: dict[str, Any]) -> tuple[config.RunConfig, bool]:
    up = config.from_dict(report["config"])
    return up, up.hash() == report.get("config_hash")


def cmd_verify(cfg: config.RunConfig, report_path: str) -> int:
    report = load_report(report_path)
    halves = _halves(report)
    up, hash_ok = _upstream_config(report)
    cipher = make_cipher(up.cipher)
    mode = guard_mode(cfg, cipher)
    checks = []
    for td in halves:
        rng = streams.derive(cfg.seed, "verify", td.direction, td.t)
        prof = key_profile(cipher, td.t, td.a, td.b, td.direction,
                           sampled=mode == "sampled", rng=rng)
        csv_path = cfg.output.csv
        if csv_path is not None and len(halves) > 1:
            csv_path = sibling(csv_path, f"_{td.direction}")
        if csv_path is not None:
            prof.to_csv(csv_path)
        summary = prof.summary(td.sigma, td.tau)
        summary.update(direction=td.direction, t=td.t, a=f"{td.a:x}", b=str(td.b), csv=csv_path)
        checks.append(summary)
    passed = hash_ok and all(c["pass"] for c in checks)
    result = {
        "kind": "verdict",
        "report_config_hash": report.get("config_hash"),
        "report_config_hash_ok": hash_ok,
        "checks": checks,
        "verdict": "pass" if passed else "fail",
    }
    emit(envelope("verify", cfg, mode, result), cfg.output.report)
    return EXIT_OK if passed else EXIT_FAIL


def run_recovery(cipher, td: TruncatedDifferential, pairs: int, trials: int, seed: int):
    rows, ranks, wrong = [], [], []
    for trial in range(trials):
        rng = streams.derive(seed, "recovery", trial)
        k = int(rng.integers(0, 1 << cipher.m))
        res = recover_suffix_key(cipher, td, td.t, pairs, k, rng)
        ranks.append(res.true_rank)
        wrong.append(float(res.wrong_counts.mean()))
        rows.append({"trial": trial, "key": k, **res.to_dict(top=0)})
    wrong_arr = np.asarray(wrong)
    model = expected_wrong_count(pairs, td.d)
    se = float(wrong_arr.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("nan")
    summary = {
        "pairs": pairs,
        "trials": trials,
        "d": td.d,
        "rank1_fraction": sum(r == 1 for r in ranks) / trials,
        "wrong_mean": float(wrong_arr.mean()),
        "wrong_mean_se": se,
        "wrong_mean_model": model,
        "wrong_mean_z": (float(wrong_arr.mean()) - model) / se if trials > 1 and se > 0 else None,
    }
    return summary, rows


def cmd_attack(cfg: config.RunConfig, report_path: str | None) -> int:
    a = cfg.attack
    if a.planted:
        cipher = _cipher(cfg)
        t = cfg.search.t if cfg.search.t is not None else _default_t(cipher)
        x, delta = planted_differential(cipher, t)
        halves = [TruncatedDifferential(x, TruncatedDifference.exact(cipher.n, delta),
                                        cfg.search.sigma, cfg.search.tau, 0, cipher.name, t)]
    else:
        if report_path is None:
            raise UsageError("attack needs --report or --planted")
        report = load_report(report_path)
        halves = _halves(report)
        cipher = make_cipher(config.from_dict(report["config"]).cipher)
    result: dict[str, Any] = {"kind": "attack"}
    if a.recovery and len(halves) == 1:
        td = halves[0]
        pairs = a.pairs if a.pairs is not None else math.ceil(40 / td.sigma)
        summary, rows = run_recovery(cipher, td, pairs, a.trials, cfg.seed)
        result["recovery"] = summary
        path = sibling(cfg.output.csv, "_recovery") if cfg.output.csv else None
        if path:
            _write_csv(path, rows, ["trial", "key", "true_subkey", "true_rank", "true_count",
                                    "wrong_mean", "pairs"])
    if a.boomerang and len(halves) == 2:
        dist = BoomerangDistinguisher(halves[0], halves[1], halves[0].t, halves[1].t,
                                      halves[0].sigma, halves[0].tau)
        kw = dict(shift_field=a.shift_field, concretize=a.concretize)
        base = make_cipher(a.baseline)
        rep = boomerang_distinguish(cipher, base, dist, a.boomerang_trials,
                                    streams.derive(cfg.seed, "boomerang"), alpha=a.alpha, **kw)
        if a.per_key:
            rates = right_rate_per_key(cipher, dist, a.boomerang_trials,
                                       streams.derive(cfg.seed, "boomerang-per-key"), **kw)
            s4 = dist.sigma ** 4
            rep["per_key_fraction_at_least_sigma4"] = float(np.mean(rates >= s4))
            rep["per_key_required"] = 1 - 2 / dist.tau
            path = sibling(cfg.output.csv, "_per_key") if cfg.output.csv else None
            if path:
                _write_csv(path, [{"key": k, "rate": float(r)} for k, r in enumerate(rates)],
                           ["key", "rate"])
        result["boomerang"] = rep
    emit(envelope("attack", cfg, "exhaustive", result), cfg.output.report)
    return EXIT_OK


def _write_csv(path: str, rows, fields) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        w.writeheader()
        w.writerows(rows)


def cmd_spectrum_dump(cfg: config.RunConfig, out: str) -> int:
    cipher = _cipher(cfg)
    t = cfg.search.t if cfg.search.t is not None else _default_t(cipher)
    cf = ComponentFunction(cipher, cfg.spectrum.j, t, cfg.search.direction)
    spec = walsh_spectrum(component_truth_table(cf), cipher.n + cipher.m)
    dump_spectrum(out, spec, cipher.name, cf.j, t, cf.direction)
    result = {"kind": "spectrum", "path": out, "N": spec.N, "j": cf.j, "t": t,
              "direction": cf.direction, "support": int(spec.support.size),
              "parseval_ok": spec.parseval_ok()}
    emit(envelope("spectrum-dump", cfg, "exhaustive", result), cfg.output.report)
    return EXIT_OK


def cmd_complexity(cfg: config.RunConfig, enc: int, enc_r: int | None) -> int:
    cipher = _cipher(cfg)
    rep = complexity_report(cipher.n, cipher.m, cfg.search.sigma, cfg.search.tau, cipher.rounds,
                            enc, enc_r)
    emit(envelope("complexity", cfg, "closed-form", rep), cfg.output.report)
    return EXIT_OK


# -- argument parsing ----------------------------------------------------------------

def _splits(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"bad split list {text!r}") from e


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run")
    g.add_argument("--config", help="TOML run configuration")
    g.add_argument("--seed", type=int)
    g.add_argument("--workers", type=int)
    g.add_argument("--cipher", help="built-in cipher name (replaces the [cipher] table)")
    g.add_argument("--rounds", type=int)
    g.add_argument("--t-star", type=int, dest="t_star")
    g.add_argument("--out", help="report path (default: stdout)")
    g.add_argument("--csv", help="CSV output path")
    g.add_argument("-v", "--verbose", action="store_true")
    s = common.add_argument_group("search")
    s.add_argument("--t", type=int)
    s.add_argument("--sigma", type=float)
    s.add_argument("--tau", type=float)
    s.add_argument("--q", type=int, help="override the sample budget")
    s.add_argument("--mode", choices=["ascending", "prefer-max-d"])
    s.add_argument("--direction", choices=[FORWARD, INVERSE])
    s.add_argument("--retries", type=int)

    p = argparse.ArgumentParser(prog="bvtrunc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"bvtrunc {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("find-truncated", parents=[common], help="search a truncated differential")
    fb = sub.add_parser("find-boomerang", parents=[common], help="search a boomerang distinguisher")
    fb.add_argument("--splits", type=_splits, help="comma-separated t1 values to scan")
    v = sub.add_parser("verify", parents=[common], help="recompute Z(k) for a report")
    v.add_argument("--report", required=True)
    v.add_argument("--sampled", action="store_true", default=None)
    a = sub.add_parser("attack", parents=[common], help="key recovery / boomerang experiment")
    a.add_argument("--report")
    a.add_argument("--planted", action="store_true", default=None)
    a.add_argument("--pairs", type=int)
    a.add_argument("--trials", type=int)
    a.add_argument("--no-recovery", dest="recovery", action="store_false", default=None)
    a.add_argument("--no-boomerang", dest="boomerang", action="store_false", default=None)
    a.add_argument("--boomerang-trials", type=int)
    a.add_argument("--per-key", action="store_true", default=None)
    a.add_argument("--shift-field", choices=["a2", "b2"])
    a.add_argument("--concretize", choices=["zero", "random"])
    a.add_argument("--alpha", type=float)
    sd = sub.add_parser("spectrum-dump", parents=[common], help="write a WHS1 spectrum file")
    sd.add_argument("--j", type=int)
    sd.add_argument("--dump", required=True, help="WHS1 output path")
    c = sub.add_parser("complexity", parents=[common], help="closed-form resource counts")
    c.add_argument("--enc-gates", type=int, default=0, help="gate count of the reduced-cipher circuit")
    c.add_argument("--enc-r-gates", type=int, help="gate count of the full cipher (default: same)")
    return p


def resolve(args: argparse.Namespace) -> config.RunConfig:
    cfg = config.load(args.config)
    o = config.override
    o(cfg, None, "seed", args.seed)
    o(cfg, None, "workers", args.workers)
    if args.cipher is not None:
        cfg.cipher = {"name": args.cipher}
    if args.rounds is not None:
        cfg.cipher["rounds"] = args.rounds
    if args.t_star is not None:
        cfg.cipher["t_star"] = args.t_star
    for key in ("t", "sigma", "tau", "q", "mode", "direction", "retries"):
        o(cfg, "search", key, getattr(args, key))
    o(cfg, "search", "splits", getattr(args, "splits", None))
    o(cfg, "verify", "sampled", getattr(args, "sampled", None))
    for key in ("planted", "pairs", "trials", "recovery", "boomerang", "boomerang_trials",
                "per_key", "shift_field", "concretize", "alpha"):
        o(cfg, "attack", key, getattr(args, key, None))
    o(cfg, "spectrum", "j", getattr(args, "j", None))
    o(cfg, "output", "report", args.out)
    o(cfg, "output", "csv", args.csv)
    return cfg.validate()


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = resolve(args)
        if args.command == "find-truncated":
            return cmd_find_truncated(cfg)
        if args.command == "find-boomerang":
            return cmd_find_boomerang(cfg)
        if args.command == "verify":
            return cmd_verify(cfg, args.report)
        if args.command == "attack":
            return cmd_attack(cfg, args.report)
        if args.command == "spectrum-dump":
            return cmd_spectrum_dump(cfg, args.dump)
        if args.command == "complexity":
            return cmd_complexity(cfg, args.enc_gates, args.enc_r_gates)
    except (UsageError, config.ConfigError, ResourceGuardError, ValueError, KeyError) as e:
        print(f"bvtrunc: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
