"""Command-line surface: analyze, simulate, basins, portrait, corpus.

Exit codes: 0 success, 2 input error, 3 numerical or degeneracy failure,
1 regression (a corpus check did not pass). All commands are
deterministic given their flags and seeds.
"""

from __future__ import annotations

import argparse
import csv
import json
import re
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np

from . import __version__
from .basins import (SectorRegion, estimate_basins, theorem1_harness,
                     theorem2_harness)
from .best_response import integrate_brd
from .corpus import (CORPUS_LABELS, a_n_family, golman_page,
                     run_fixture_checks, zeeman_fixture)
from .equilibria import detect_cyclic, enumerate_nash
from .errors import (DegenerateGameError, EgdynError, InvalidGameError,
                     NumericalError, SimplexError)
from .game import (GameMatrix, all_indifference_forms, check_assumption_A,
                   game_to_json, load_game)
from .portrait import render_portrait
from .replicator import check_rd_invariance, integrate_rd

__all__ = ["build_parser", "main"]


def _slug(game: GameMatrix) -> str:
    name = game.name or f"game{game.n}x{game.n}"
    return re.sub(r"[^\w.+-]+", "-", name).strip("-.")


def _jsonable(obj):
    """Recursively rewrite report values into plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, SectorRegion):
        return {
            "vertex": obj.vertex + 1,
            "constraints": [
                {"pair": [f.pair[0] + 1, f.pair[1] + 1],
                 "sign": "free" if s == 0 else ("+" if s > 0 else "-")}
                for f, s in zip(obj.forms, obj.signs)
            ],
        }
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "to_json"):
        return _jsonable(obj.to_json())
    return str(obj)


def _emit_json(report: dict, out: str | None) -> None:
    text = json.dumps(_jsonable(report), indent=2) + "\n"
    if out:
        Path(out).write_text(text)
        print(f"wrote {out}")
    else:
        sys.stdout.write(text)


def _split_params(text: str) -> list[int]:
    values = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            values.append(int(tok))
        except ValueError:
            raise InvalidGameError(
                f"family parameter {tok!r} is not an integer") from None
    if not values:
        raise InvalidGameError("--param lists no values")
    return values


def _resolve_games(args) -> list[GameMatrix]:
    chosen = [flag for flag in ("game", "corpus", "family")
              if getattr(args, flag, None)]
    if len(chosen) != 1:
        raise InvalidGameError(
            "choose exactly one of --game FILE, --corpus LABEL, "
            "--family NAME --param LIST")
    if args.game:
        return [load_game(args.game)]
    if args.corpus:
        return [zeeman_fixture(args.corpus).game]
    if not args.param:
        raise InvalidGameError("--family requires --param")
    build = golman_page if args.family == "golman-page" else a_n_family
    return [build(value) for value in _split_params(args.param)]


def _resolve_one(args) -> GameMatrix:
    games = _resolve_games(args)
    if len(games) != 1:
        raise InvalidGameError(
            f"{args.command} works on a single game; --param lists "
            f"{len(games)}")
    return games[0]


def _parse_x0(text: str, n: int) -> np.ndarray:
    try:
        vals = np.array([float(tok) for tok in text.split(",")], dtype=float)
    except ValueError:
        raise SimplexError(f"--x0 {text!r} is not a comma-separated "
                           "list of numbers") from None
    if vals.size != n:
        raise SimplexError(f"x0 has {vals.size} coordinates, the game has "
                           f"{n} strategies")
    if np.any(vals < -1e-12):
        k = int(np.argmin(vals))
        raise SimplexError(f"x0 violates nonnegativity: x{k + 1} = "
                           f"{vals[k]:g} < 0")
    total = float(vals.sum())
    if abs(total - 1.0) > 1e-9:
        raise SimplexError("x0 violates the simplex normalization "
                           f"sum(x) = 1: sum = {total!r}")
    vals = np.clip(vals, 0.0, None)
    return vals / vals.sum()


def cmd_analyze(args) -> int:
    game = _resolve_one(args)
    aa = check_assumption_A(game)
    report: dict = {
        "game": game_to_json(game),
        "assumption_A": {
            "holds": aa.holds,
            "violating_pairs": [
                [[a + 1, b + 1] for a, b in entry]
                for entry in aa.violating_pairs
            ],
            "detail": aa.detail,
        },
    }
    if not aa.holds:
        report["error"] = ("payoff asymmetry fails for the listed pairs; "
                           "the indifference-set analysis is undefined")
        _emit_json(report, args.out)
        return 3

    eqs = enumerate_nash(game, tol=args.tol)
    lines = []
    for form in all_indifference_forms(game):
        inv = check_rd_invariance(game, form, equilibria=eqs)
        lines.append({
            "pair": [form.pair[0] + 1, form.pair[1] + 1],
            "coeffs": [float(c) for c in form.canonical().coeffs],
            "invariant_rd": inv["analytic"],
            "max_drift": inv["max_drift"],
        })
    cyc = detect_cyclic(game, equilibria=eqs)
    report.update({
        "equilibria": [eq.to_json() for eq in eqs],
        "stable": sorted(eq.label for eq in eqs if eq.stability == "stable"),
        "indifference_lines": lines,
        "cyclic": {
            "cyclic": cyc.cyclic,
            "sufficient_condition_met": cyc.sufficient_condition_met,
            "scaled_max_imag": cyc.scaled_max_imag,
        },
    })
    _emit_json(report, args.out)
    return 0


def cmd_simulate(args) -> int:
    game = _resolve_one(args)
    x0 = _parse_x0(args.x0, game.n)
    eqs = enumerate_nash(game)
    dynamics = ("rd", "brd") if args.dynamic == "both" else (args.dynamic,)
    base = Path(args.out) if args.out else Path(f"trajectory_{_slug(game)}.csv")
    for dyn in dynamics:
        integrate = integrate_rd if dyn == "rd" else integrate_brd
        traj = integrate(game, x0, horizon=args.horizon, equilibria=eqs,
                         conv_radius=args.tol)
        if len(dynamics) == 1:
            path = base
        else:
            path = base.with_name(f"{base.stem}_{dyn}{base.suffix or '.csv'}")
        traj.to_csv(path)
        terminal = traj.terminal_label or "none"
        print(f"{dyn}: {traj.status} at t={traj.t_end:.6g} "
              f"(terminal {terminal}, {len(traj.times)} rows) -> {path}")
    return 0


def _harness_reports(game: GameMatrix, eqs, bmap) -> dict:
    """Run both basin-equivalence harnesses at every stable pure vertex."""
    sector_reports = []
    split_reports = []
    for eq in eqs:
        if eq.kind != "pure" or eq.stability != "stable":
            continue
        i = eq.support[0]
        try:
            sector_reports.append(theorem1_harness(
                game, i, samples=200, invariance_samples=60, equilibria=eqs))
        except (DegenerateGameError, NumericalError) as exc:
            sector_reports.append({"vertex": i, "error": str(exc)})
        for j in range(game.n):
            if j == i:
                continue
            try:
                split_reports.append(theorem2_harness(
                    game, i, j, crossing_checks=100, basin_map=bmap,
                    equilibria=eqs))
            except (DegenerateGameError, NumericalError) as exc:
                split_reports.append({"vertex": i, "pair": (i, j),
                                      "error": str(exc)})
    return {"sector_invariance": sector_reports,
            "line_splitting": split_reports}


def cmd_basins(args) -> int:
    if args.samples < 100:
        raise InvalidGameError(
            f"--samples must be at least 100, got {args.samples}")
    games = _resolve_games(args)
    summaries = []
    for game in games:
        eqs = enumerate_nash(game)
        bmap = estimate_basins(game, args.samples, args.seed,
                               horizon=args.horizon, conv_radius=args.tol,
                               equilibria=eqs)
        if args.out and len(games) == 1:
            csv_path = Path(args.out)
        else:
            stem = Path(args.out).stem + "_" if args.out else "basins_"
            parent = Path(args.out).parent if args.out else Path(".")
            csv_path = parent / f"{stem}{_slug(game)}.csv"
        bmap.to_csv(csv_path)
        summary = bmap.summary()
        summary["csv"] = str(csv_path)
        if not args.no_harness:
            summary["harness"] = _harness_reports(game, eqs, bmap)
        summaries.append(summary)
    report = summaries[0] if len(summaries) == 1 else {"runs": summaries}
    json_path = csv_path.with_suffix(".summary.json") if len(games) == 1 \
        else (Path(args.out).with_suffix(".summary.json") if args.out
              else Path("basins_summary.json"))
    Path(json_path).write_text(json.dumps(_jsonable(report), indent=2) + "\n")
    sys.stdout.write(json.dumps(_jsonable(report), indent=2) + "\n")
    print(f"wrote {json_path}", file=sys.stderr)
    return 0


def cmd_portrait(args) -> int:
    game = _resolve_one(args)
    out = Path(args.out) if args.out else Path(f"portrait_{_slug(game)}.svg")
    path = render_portrait(game, out, dynamic=args.dynamic,
                           samples=args.samples, seed=args.seed,
                           horizon=args.horizon)
    print(f"wrote {path}")
    return 0


def _corpus_xml(results, total: int, failures: int) -> str:
    suite = ET.Element("testsuite", name="egdyn-corpus",
                       tests=str(total), failures=str(failures), errors="0")
    for label, checks in results:
        for check in checks:
            case = ET.SubElement(suite, "testcase", classname=label,
                                 name=check["name"])
            if not check["ok"]:
                ET.SubElement(case, "failure",
                              message=check["detail"]).text = check["detail"]
    ET.indent(suite)
    return ET.tostring(suite, encoding="unicode", xml_declaration=True) + "\n"


def _corpus_report(results, fmt: str, out: str | None) -> None:
    total = sum(len(checks) for _, checks in results)
    failures = sum(1 for _, checks in results
                   for check in checks if not check["ok"])
    if fmt == "xml":
        text = _corpus_xml(results, total, failures)
    elif fmt == "json":
        text = json.dumps({
            "total": total,
            "failures": failures,
            "classes": [{"label": label, "checks": checks}
                        for label, checks in results],
        }, indent=2) + "\n"
    else:
        rows = [["label", "check", "ok", "detail"]]
        rows += [[label, c["name"], str(c["ok"]).lower(), c["detail"]]
                 for label, checks in results for c in checks]
        from io import StringIO
        buf = StringIO()
        csv.writer(buf).writerows(rows)
        text = buf.getvalue()
    if out:
        Path(out).write_text(text)
        print(f"wrote {out}")
    else:
        sys.stdout.write(text)


def cmd_corpus(args) -> int:
    if args.action == "list":
        for label in CORPUS_LABELS:
            print(label)
        return 0
    labels = list(args.label) if args.label else list(CORPUS_LABELS)
    results = []
    for label in labels:
        fixture = zeeman_fixture(label)
        checks = run_fixture_checks(fixture, thorough=not args.quick)
        results.append((label, checks))
        for check in checks:
            mark = "PASS" if check["ok"] else "FAIL"
            line = f"{mark}  {label:<5} {check['name']}"
            if not check["ok"]:
                line += f"  [{check['detail']}]"
            print(line)
    failed = [(label, c) for label, checks in results
              for c in checks if not c["ok"]]
    total = sum(len(checks) for _, checks in results)
    print(f"{total - len(failed)}/{total} checks passed "
          f"over {len(results)} classes")
    if args.report:
        _corpus_report(results, args.report, args.out)
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="egdyn",
        description="Replicator and best-response dynamics on simplex games: "
                    "equilibria, basins of attraction, phase portraits.")
    parser.add_argument("--version", action="version",
                        version=f"egdyn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def game_flags(p: argparse.ArgumentParser) -> None:
        grp = p.add_argument_group("game selection (exactly one)")
        grp.add_argument("--game", metavar="FILE",
                         help="JSON file with name/n/payoffs")
        grp.add_argument("--corpus", metavar="LABEL",
                         help="catalog label, e.g. 6_1 (see `egdyn corpus list`)")
        grp.add_argument("--family", choices=("golman-page", "a-n"),
                         help="parametric family")
        grp.add_argument("--param", metavar="LIST",
                         help="comma-separated integer family parameters")

    p = sub.add_parser("analyze", help="equilibria, stability, indifference "
                                       "lines, invariance, rotation flag")
    game_flags(p)
    p.add_argument("--tol", type=float, default=1e-9,
                   help="equilibrium residual tolerance")
    p.add_argument("--out", metavar="PATH", help="write JSON here instead "
                                                 "of stdout")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="integrate one orbit and write CSV")
    game_flags(p)
    p.add_argument("--dynamic", choices=("rd", "brd", "both"), default="rd")
    p.add_argument("--x0", required=True, metavar="LIST",
                   help="comma-separated start point on the simplex")
    p.add_argument("--horizon", type=float, default=500.0)
    p.add_argument("--tol", type=float, default=1e-6,
                   help="convergence radius around equilibria")
    p.add_argument("--out", metavar="PATH", help="CSV path (with --dynamic "
                   "both, _rd/_brd are inserted before the suffix)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("basins", help="sample basins of attraction under "
                                      "both dynamics")
    game_flags(p)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--horizon", type=float, default=500.0)
    p.add_argument("--tol", type=float, default=1e-6,
                   help="convergence radius around equilibria")
    p.add_argument("--out", metavar="PATH", help="label CSV path; the JSON "
                   "summary lands next to it")
    p.add_argument("--no-harness", action="store_true",
                   help="skip the basin-equivalence harness reports")
    p.set_defaults(func=cmd_basins)

    p = sub.add_parser("portrait", help="render an SVG phase portrait "
                                        "(three strategies only)")
    game_flags(p)
    p.add_argument("--dynamic", choices=("rd", "brd", "both"), default="both")
    p.add_argument("--samples", type=int, default=6,
                   help="number of sampled trajectories")
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--horizon", type=float, default=60.0)
    p.add_argument("--out", metavar="PATH", help="SVG path")
    p.set_defaults(func=cmd_portrait)

    p = sub.add_parser("corpus", help="check every catalog class against "
                                      "its expected signature")
    p.add_argument("action", nargs="?", choices=("run", "list"),
                   default="run")
    p.add_argument("--all", action="store_true",
                   help="run every class (the default when no --label)")
    p.add_argument("--label", action="append", metavar="LABEL",
                   help="restrict to one class; repeatable")
    p.add_argument("--quick", action="store_true",
                   help="skip the sampled harness checks")
    p.add_argument("--report", choices=("json", "csv", "xml"),
                   help="also emit a machine-readable report")
    p.add_argument("--out", metavar="PATH", help="report path")
    p.set_defaults(func=cmd_corpus)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InvalidGameError, SimplexError) as exc:
        print(f"egdyn: error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, DegenerateGameError) as exc:
        print(f"egdyn: error: {exc}", file=sys.stderr)
        return 3
    except EgdynError as exc:
        print(f"egdyn: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"egdyn: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
