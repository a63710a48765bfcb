#!/usr/bin/env python3
"""
Command line for HN filtrations of multiparameter persistence modules.

Usage:
    python hn_cli.py hn --module data/examples/two_chain.json --stab data/examples/two_chain_stab.json
    python hn_cli.py s --module M --stab Z --x 0 --y 1/2 --theta 1/2
    python hn_cli.py s --module M --stab Z --window 0:2 --res 1/8 --theta auto --out s.csv
    python hn_cli.py s --module M --stab Z --profile 1/4
    python hn_cli.py s --module M --skyscraper
    python hn_cli.py distance --module A --other B --stab Z --window 0:2 --res 1/8
    python hn_cli.py breakpoints --module M --stab Z --region -1:2
    python hn_cli.py harness --quick
    python hn_cli.py harness --mutate slope-sign-flip    # must fail

Exit codes: 0 success, 2 usage, 3 parse, 4 validation, 5 budget,
6 invariant violation (including a failed harness run).
"""

import argparse
import logging
import sys
from fractions import Fraction
from typing import List, Optional

from hn_persistence.config.settings import (DEFAULT_PRIME, DEFAULT_RESOLUTION, DEFAULT_SEED, DEFAULT_TOLERANCE,
                                            DEFAULT_WINDOW_PADDING, LOG_FORMAT, LOG_LEVEL, ORACLE_DIM_BUDGET,
                                            RunConfig)
from hn_persistence.core.chambers import x_breakpoints_1d
from hn_persistence.core.distances import (erosion_distance, hn_distance_report, landscape_distance, sample_rho,
                                           sample_s, theta_candidates)
from hn_persistence.core.errors import HNError, InvariantViolation, UsageError
from hn_persistence.core.exactfield import Field, prime_field
from hn_persistence.core.gridcomb import bounding_box
from hn_persistence.core.harness import MUTATIONS, AcceptanceHarness
from hn_persistence.core.hncore import hn_filtration, oracle_hn_filtration, same_filtration
from hn_persistence.core.hninvariants import FilteredRankInvariant, discretise_at, skyscraper_invariant, theta_min
from hn_persistence.core.persmod import Presentation, from_presentation
from hn_persistence.core.stabcond import default_beta
from hn_persistence.utils.formats import (csv_header, filtration_to_dict, hn_type_to_dict, load_module,
                                          load_stability, parse_point_text, parse_rational, parse_thetas,
                                          parse_window, profile_to_dict, render_rational, write_csv, write_json)

logger = logging.getLogger("hn_cli")


def engine_field(pres: Presentation, prime: int) -> Field:
    """The presentation's own prime, otherwise the requested one"""
    return prime_field(pres.characteristic or prime)


def run_config(args) -> RunConfig:
    config = RunConfig(
        window=parse_window(args.window) if getattr(args, 'window', None) else None,
        resolution=parse_rational(args.res, "resolution") if getattr(args, 'res', None) else DEFAULT_RESOLUTION,
        thetas=parse_thetas(args.theta) if getattr(args, 'theta', None) else "auto",
        prime=args.prime,
        prime2=getattr(args, 'prime2', None),
        seed=args.seed,
        out=args.out,
        oracle_dim_budget=getattr(args, 'oracle_budget', ORACLE_DIM_BUDGET),
        quick=getattr(args, 'quick', False),
    )
    return config.validate()


def default_window(presentations: List[Presentation]) -> List[tuple]:
    """Bounding box of every generator and relation, widened upwards by the window padding"""
    box = bounding_box([q for p in presentations for q in p.points])
    if box is None:
        n = presentations[0].n
        return [(Fraction(0), Fraction(DEFAULT_WINDOW_PADDING))] * n
    return [(lo, hi + DEFAULT_WINDOW_PADDING) for lo, hi in zip(*box)]


def _emit(report: dict, out: Optional[str]):
    text = write_json(report, out)
    if out is None:
        print(text)
    else:
        print(f"[OK] Saved to: {out}")


# Verbs

def cmd_hn(args) -> int:
    config = run_config(args)
    pres = load_module(args.module)
    z = load_stability(args.stab, pres.points)
    field = engine_field(pres, config.prime)
    v = from_presentation(pres, field)
    origin = (Fraction(0),) * pres.n
    u, ds = discretise_at(v, z, origin)
    filtration = hn_filtration(u, ds)
    report = {'field': str(field), **filtration_to_dict(filtration)}
    logger.info(f"HN filtration of length {filtration.length} on grid {u.poset.sizes}")

    if args.oracle:
        oracle = oracle_hn_filtration(u, ds, config.oracle_dim_budget)
        report['oracle_agrees'] = same_filtration(filtration, oracle)
        if not report['oracle_agrees']:
            raise InvariantViolation("hn-oracle-equivalence",
                                     f"engine slopes {filtration.slopes}, oracle slopes {oracle.slopes}")

    if config.prime2:
        if pres.characteristic:
            raise UsageError("--prime2 needs a module over the rationals")
        other_field = prime_field(config.prime2)
        u2, ds2 = discretise_at(from_presentation(pres, other_field), z, origin)
        other = hn_filtration(u2, ds2).hn_type()
        agrees = other.entries == filtration.hn_type().entries
        report['cross_check'] = {'field': str(other_field), 'hn_type': hn_type_to_dict(other), 'agrees': agrees}
        if not agrees:
            logger.warning(f"HN types differ between {field} and {other_field}")
            print(f"[WARNING] HN type over {other_field} differs from the one over {field}")

    _emit(report, config.out)
    return 0


def cmd_s(args) -> int:
    config = run_config(args)
    pres = load_module(args.module)
    field = engine_field(pres, config.prime)
    v = from_presentation(pres, field)

    if args.skyscraper:
        beta = load_stability(args.stab, pres.points).beta if args.stab else default_beta(pres.points, pres.n)
        types = skyscraper_invariant(v, beta)
        report = {'skyscraper': [{'point': [render_rational(c) for c in q], 'hn_type': hn_type_to_dict(t)}
                                 for q, t in types.items()]}
        _emit(report, config.out)
        return 0

    if not args.stab:
        raise UsageError("s needs --stab unless --skyscraper is given")
    z = load_stability(args.stab, pres.points)
    inv = FilteredRankInvariant(v, z)

    if args.profile:
        x = parse_point_text(args.profile, "profile point")
        profile = inv.theta_profile(x)
        report = profile_to_dict(profile.x, profile.breakpoints)
        report['theta_min'] = render_rational(theta_min(z))
        _emit(report, config.out)
        return 0

    if args.x is not None:
        if args.y is None or config.thetas == "auto":
            raise UsageError("a point query needs --x, --y and explicit --theta values")
        x, y = parse_point_text(args.x, "x"), parse_point_text(args.y, "y")
        rows = [[render_rational(c) for c in x] + [render_rational(c) for c in y]
                + [render_rational(t), render_rational(inv.s_eval(t, x, y))] for t in config.thetas]
    else:
        window = config.window or default_window([pres])
        lows, highs = tuple(lo for lo, _ in window), tuple(hi for _, hi in window)
        thetas = config.thetas
        if thetas == "auto":
            thetas = theta_candidates([inv], lows, highs, config.resolution)
        rows = []
        for theta in thetas:
            sampled = sample_s(inv, theta, lows, highs, config.resolution, progress=not args.quiet)
            rows.extend(sampled.rows(theta))
    write_csv(csv_header(pres.n), rows, config.out, sys.stdout)
    if config.out:
        print(f"[OK] {len(rows)} rows saved to: {config.out}")
    return 0


def cmd_distance(args) -> int:
    config = run_config(args)
    pres_a, pres_b = load_module(args.module), load_module(args.other)
    if pres_a.n != pres_b.n:
        raise UsageError(f"modules of dimensions {pres_a.n} and {pres_b.n}")
    z = load_stability(args.stab, pres_a.points + pres_b.points)
    field = engine_field(pres_a, config.prime)
    v, w = from_presentation(pres_a, field), from_presentation(pres_b, field)
    window = config.window or default_window([pres_a, pres_b])
    lows, highs = tuple(lo for lo, _ in window), tuple(hi for _, hi in window)
    res = config.resolution
    progress = not args.quiet

    per_theta = hn_distance_report(v, w, z, lows, highs, res, config.thetas, progress)
    rank = erosion_distance(sample_rho(v, lows, highs, res, progress), sample_rho(w, lows, highs, res, progress))
    ks = [int(k) for k in args.ks.split(',')]
    inv_v, inv_w = FilteredRankInvariant(v, z), FilteredRankInvariant(w, z)
    landscapes = {}
    for theta in parse_thetas(args.landscape_theta):
        landscapes[render_rational(theta)] = render_rational(
            landscape_distance(inv_v, inv_w, theta, ks, lows, highs, res, DEFAULT_TOLERANCE, progress))
    report = {
        'window': [[render_rational(lo), render_rational(hi)] for lo, hi in window],
        'resolution': render_rational(res),
        'field': str(field),
        'erosion_per_theta': {render_rational(t): render_rational(d) for t, d in per_theta.items()},
        'hn_distance': render_rational(max(per_theta.values(), default=Fraction(0))),
        'rank_erosion': render_rational(rank),
        'landscape_ks': ks,
        'landscape_distance': landscapes,
        'note': "sampled erosion is a lower bound of the exact distance",
    }
    logger.info(f"HN distance {report['hn_distance']} over {len(per_theta)} thetas")
    _emit(report, config.out)
    return 0


def cmd_breakpoints(args) -> int:
    config = run_config(args)
    pres = load_module(args.module)
    if pres.n != 1:
        raise UsageError("breakpoints are computed for one parameter only")
    z = load_stability(args.stab, pres.points)
    v = from_presentation(pres, engine_field(pres, config.prime))
    if args.region:
        (region,) = parse_window(args.region)
    else:
        box = bounding_box(pres.points)
        region = (box[0][0] - Fraction(1, 2), box[1][0] + Fraction(1, 2)) if box else (Fraction(0), Fraction(1))
    found = x_breakpoints_1d(v, z, region, progress=not args.quiet)
    _emit(found.to_dict(), config.out)
    return 0


def cmd_harness(args) -> int:
    config = run_config(args)
    harness = AcceptanceHarness(seed=config.seed, quick=config.quick, progress=not args.quiet,
                                mutation=args.mutate, suites=args.suite or None,
                                oracle_budget=config.oracle_dim_budget)
    print(f"\n{'='*80}")
    print(f"ACCEPTANCE HARNESS (seed {config.seed}{', quick' if config.quick else ''}"
          f"{', mutation ' + args.mutate if args.mutate else ''})")
    print(f"{'='*80}\n")
    report = harness.run()
    for suite in report.suites:
        status = "[OK]" if suite.ok else "[FAILED]"
        print(f"  {status} {suite.name}: {suite.passed}/{suite.checked} passed, "
              f"{suite.skipped} skipped ({suite.seconds}s)")
        for failure in suite.failures[:5]:
            print(f"      - {failure}")
    print(f"\n{'='*80}")
    if config.out:
        write_json(report.to_dict(), config.out)
        print(f"[OK] Report saved to: {config.out}")
    if report.ok:
        print("[OK] All invariants hold")
        return 0
    print(f"[ERROR] Violated invariants: {', '.join(report.failed_invariants())}")
    return InvariantViolation.exit_code


# Options whose values may start with a minus sign (negative coordinates)
SIGNED_OPTIONS = ('--x', '--y', '--window', '--region', '--theta', '--profile', '--landscape-theta')


def join_signed_values(argv: List[str]) -> List[str]:
    """
    Rewrite `--x -1/2` as `--x=-1/2` so argparse does not take the value for a flag.

    Only single-dash values are joined; every option of this CLI is a long one.
    """
    out, k = [], 0
    while k < len(argv):
        token = argv[k]
        following = argv[k + 1] if k + 1 < len(argv) else None
        if token in SIGNED_OPTIONS and following and following.startswith('-') and not following.startswith('--'):
            out.append(f"{token}={following}")
            k += 2
        else:
            out.append(token)
            k += 1
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--prime', type=int, default=DEFAULT_PRIME,
                        help='Prime of the engine field for modules over the rationals')
    common.add_argument('--seed', type=int, default=DEFAULT_SEED, help='Random seed')
    common.add_argument('--out', help='Output file (default: stdout)')
    common.add_argument('--log-level', default=LOG_LEVEL, help='Logging level (DEBUG, INFO, WARNING)')
    common.add_argument('--quiet', action='store_true', help='No progress bars, warnings only')

    parser = argparse.ArgumentParser(description='HN filtrations of multiparameter persistence modules')
    verbs = parser.add_subparsers(dest='verb', required=True)

    hn = verbs.add_parser('hn', parents=[common], help='HN filtration and HN type')
    hn.add_argument('--module', required=True, help='Module file (JSON or firep)')
    hn.add_argument('--stab', required=True, help='Stability condition file (JSON)')
    hn.add_argument('--oracle', action='store_true', help='Cross-check against exhaustive enumeration')
    hn.add_argument('--oracle-budget', type=int, default=ORACLE_DIM_BUDGET,
                    help='Largest total dimension the oracle accepts')
    hn.add_argument('--prime2', type=int, help='Recompute the HN type modulo a second prime')
    hn.set_defaults(func=cmd_hn)

    s = verbs.add_parser('s', parents=[common], help='HN filtered rank invariant')
    s.add_argument('--module', required=True)
    s.add_argument('--stab')
    s.add_argument('--x', help='Query point x, comma separated')
    s.add_argument('--y', help='Query point y, comma separated')
    s.add_argument('--theta', help='Comma separated thetas or "auto"')
    s.add_argument('--window', help='Sampling window lo:hi per axis, comma separated')
    s.add_argument('--res', help='Sampling resolution')
    s.add_argument('--profile', metavar='X', help='Theta breakpoints at the shift X')
    s.add_argument('--skyscraper', action='store_true', help='Skyscraper HN types at the grid points')
    s.set_defaults(func=cmd_s)

    distance = verbs.add_parser('distance', parents=[common], help='Sampled HN and landscape distances')
    distance.add_argument('--module', required=True)
    distance.add_argument('--other', required=True, help='Second module file')
    distance.add_argument('--stab', required=True)
    distance.add_argument('--window')
    distance.add_argument('--res')
    distance.add_argument('--theta', help='Comma separated thetas or "auto"')
    distance.add_argument('--ks', default='1,2', help='Landscape indices')
    distance.add_argument('--landscape-theta', default='0', help='Thetas for the landscape distance')
    distance.set_defaults(func=cmd_distance)

    breakpoints = verbs.add_parser('breakpoints', parents=[common], help='Exact HN type breakpoints (n = 1)')
    breakpoints.add_argument('--module', required=True)
    breakpoints.add_argument('--stab', required=True)
    breakpoints.add_argument('--region', help='Closed interval lo:hi')
    breakpoints.set_defaults(func=cmd_breakpoints)

    harness = verbs.add_parser('harness', parents=[common], help='Seeded acceptance suites')
    harness.add_argument('--quick', action='store_true', help='Reduced instance counts')
    harness.add_argument('--mutate', choices=MUTATIONS, help='Inject a fault the suites must detect')
    harness.add_argument('--suite', action='append', choices=AcceptanceHarness.SUITES,
                         help='Run only this suite (repeatable)')
    harness.add_argument('--oracle-budget', type=int, default=ORACLE_DIM_BUDGET)
    harness.set_defaults(func=cmd_harness)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(join_signed_values(argv))
    level = 'WARNING' if args.quiet else args.log_level.upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO), format=LOG_FORMAT)
    try:
        return args.func(args)
    except HNError as e:
        print(f"[ERROR] {e}")
        logger.debug("Traceback", exc_info=True)
        return e.exit_code
    except OSError as e:
        print(f"[ERROR] {e}")
        return UsageError.exit_code


if __name__ == "__main__":
    sys.exit(main())
