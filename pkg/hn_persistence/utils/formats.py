"""
Reading and writing modules, stability conditions and reports.

Rationals travel as "p/q" strings (plain integers are accepted too); floats
are refused so that no value is ever rounded. Modules come as JSON
presentations or as firep-style text:

    firep prime=2          # header; "prime=p" optional, default the rationals
    2 2                    # generator count, relation count
    0 0 ;                  # one row per generator: coordinates
    1 0 ;
    1 1 ; 1 1              # one row per relation: coordinates ; dense coefficients
    2 0 ; 0 1

Stability conditions come as JSON:

    {"n": 2, "mode": "eval", "signed": false,
     "alpha": [{"point": ["0", "0"], "coeff": "1"},
               {"cube": {"lows": [...], "highs": [...]}, "coeff": "1/2"},
               {"face": {"lows": [...], "highs": [...]}, "coeff": "1"}],
     "beta": {"window": {"lows": [...], "highs": [...]}, "grid": [[...], [...]],
              "values": [[[...], [...]]], "tails": [["1/2", "1/2"], ["1/2", "1/2"]]}}

A missing beta means the default: constant 1 on the padded bounding box of
the module, geometric tails.
"""

import csv
import json
import logging
from fractions import Fraction
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from ..core.errors import ParseError, UsageError, ValidationError
from ..core.gridcomb import INF, Cube, GridFunction, Point
from ..core.hncore import HNFiltration, HNType
from ..core.persmod import Presentation
from ..core.stabcond import (EVAL, STEP, AlphaTerm, BetaSpec, StabilityCondition, default_beta,
                             diagnose_alpha_entry, validate)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


# Scalars

def parse_rational(value, where: str = "value") -> Fraction:
    """
    An exact rational from an int or a "p/q" / "p" string.

    Raises:
        ParseError: for floats, booleans and anything else that is not exact
    """
    if isinstance(value, bool) or isinstance(value, float):
        raise ParseError(f"{where}: {value!r} is not exact; write rationals as \"p/q\" strings")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if '.' in text or 'e' in text.lower():
            raise ParseError(f"{where}: {value!r} is not exact; write rationals as \"p/q\" strings")
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError):
            raise ParseError(f"{where}: {value!r} is not a rational number")
    raise ParseError(f"{where}: expected a rational, got {type(value).__name__}")


def render_rational(value) -> str:
    return "inf" if value is INF else str(Fraction(value))


def parse_point(values, n: Optional[int] = None, where: str = "point") -> Point:
    if not isinstance(values, (list, tuple)):
        raise ParseError(f"{where}: expected a list of coordinates")
    point = tuple(parse_rational(v, where) for v in values)
    if n is not None and len(point) != n:
        raise ParseError(f"{where}: {len(point)} coordinates, expected {n}")
    return point


def parse_point_text(text: str, where: str = "point") -> Point:
    """Comma separated rationals, e.g. "1/2,0" """
    return tuple(parse_rational(part, where) for part in text.split(',') if part.strip())


def parse_window(text: str) -> List[Tuple[Fraction, Fraction]]:
    """
    Per-axis closed intervals "lo:hi", comma separated, e.g. "0:2,-1/2:1".

    Raises:
        ParseError: on malformed bounds or lo > hi
    """
    window = []
    for part in text.split(','):
        bounds = part.split(':')
        if len(bounds) != 2:
            raise ParseError(f"window axis {part!r} must read lo:hi")
        lo, hi = parse_rational(bounds[0], "window"), parse_rational(bounds[1], "window")
        if lo > hi:
            raise ParseError(f"window axis {part!r} has lo > hi")
        window.append((lo, hi))
    return window


def parse_thetas(text: str) -> Union[str, List[Fraction]]:
    if text.strip() == "auto":
        return "auto"
    return [parse_rational(t, "theta") for t in text.split(',') if t.strip()]


# JSON plumbing

def _load_json(text: str, source: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{source}: {e.msg}", e.lineno, e.colno)


def _field(doc: dict, key: str, source: str):
    if not isinstance(doc, dict):
        raise ParseError(f"{source}: expected a JSON object")
    if key not in doc:
        raise ParseError(f"{source}: missing field {key!r}")
    return doc[key]


# Module files

def parse_module_json(doc: dict, source: str = "module") -> Presentation:
    n = _field(doc, 'n', source)
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ParseError(f"{source}: n must be a positive integer")
    spec = doc.get('field', 'rational')
    if spec == 'rational':
        characteristic = 0
    elif isinstance(spec, dict) and isinstance(spec.get('prime'), int):
        characteristic = spec['prime']
    else:
        raise ParseError(f"{source}: field must be \"rational\" or {{\"prime\": p}}")
    generators = tuple(parse_point(g, n, f"{source} generator {j}")
                       for j, g in enumerate(_field(doc, 'generators', source)))
    relations = []
    for k, rel in enumerate(doc.get('relations', [])):
        where = f"{source} relation {k}"
        point = parse_point(_field(rel, 'point', where), n, where)
        coeffs = tuple(parse_rational(c, where) for c in _field(rel, 'coeffs', where))
        relations.append((point, coeffs))
    return Presentation(n, generators, tuple(relations), characteristic).validate()


def emit_module_json(pres: Presentation) -> dict:
    return {
        'n': pres.n,
        'field': 'rational' if pres.characteristic == 0 else {'prime': pres.characteristic},
        'generators': [[render_rational(c) for c in g] for g in pres.generators],
        'relations': [{'point': [render_rational(c) for c in point],
                       'coeffs': [render_rational(c) for c in coeffs]} for point, coeffs in pres.relations],
    }


def _strip_comment(line: str) -> str:
    return line.split('#', 1)[0]


def _column_of(raw: str, token: str) -> int:
    return raw.find(token) + 1


def parse_firep(text: str) -> Presentation:
    """
    Parse the firep-style text layout.

    Raises:
        ParseError: with the line and column of the first deviation
    """
    rows = [(k + 1, raw) for k, raw in enumerate(text.splitlines()) if _strip_comment(raw).strip()]
    if not rows:
        raise ParseError("empty firep document", 1, 1)
    lineno, raw = rows[0]
    header = _strip_comment(raw).split()
    if header[0] != 'firep':
        raise ParseError(f"expected header 'firep', got {header[0]!r}", lineno, _column_of(raw, header[0]))
    characteristic = 0
    for option in header[1:]:
        if not option.startswith('prime='):
            raise ParseError(f"unknown header option {option!r}", lineno, _column_of(raw, option))
        try:
            characteristic = int(option[len('prime='):])
        except ValueError:
            raise ParseError(f"prime must be an integer in {option!r}", lineno, _column_of(raw, option))
    if len(rows) < 2:
        raise ParseError("missing the generator and relation counts", lineno + 1, 1)
    lineno, raw = rows[1]
    counts = _strip_comment(raw).split()
    if len(counts) != 2 or not all(c.isdigit() for c in counts):
        raise ParseError("expected two counts: generators relations", lineno, 1)
    gen_count, rel_count = int(counts[0]), int(counts[1])
    body = rows[2:]
    if len(body) != gen_count + rel_count:
        at = body[-1][0] + 1 if body else lineno + 1
        raise ParseError(f"expected {gen_count + rel_count} rows, found {len(body)}", at, 1)

    n = None
    generators, relations = [], []
    for index, (lineno, raw) in enumerate(body):
        line = _strip_comment(raw)
        if ';' not in line:
            raise ParseError("row must contain ';' between coordinates and coefficients", lineno, len(line) + 1)
        left, right = line.split(';', 1)
        coords = []
        for token in left.split():
            try:
                coords.append(parse_rational(token, "coordinate"))
            except ParseError as e:
                raise ParseError(str(e), lineno, _column_of(raw, token))
        if n is None:
            n = len(coords)
            if n == 0:
                raise ParseError("a row needs at least one coordinate", lineno, 1)
        elif len(coords) != n:
            raise ParseError(f"{len(coords)} coordinates, expected {n}", lineno, 1)
        tokens = right.split()
        if index < gen_count:
            if tokens:
                raise ParseError("generator rows carry no coefficients", lineno, _column_of(raw, tokens[0]))
            generators.append(tuple(coords))
            continue
        if len(tokens) != gen_count:
            column = line.index(';') + 2
            raise ParseError(f"{len(tokens)} coefficients, expected {gen_count}", lineno, column)
        coeffs = []
        for token in tokens:
            try:
                coeffs.append(parse_rational(token, "coefficient"))
            except ParseError as e:
                raise ParseError(str(e), lineno, _column_of(raw, token))
        relations.append((tuple(coords), tuple(coeffs)))
    if n is None:
        raise ParseError("a firep document needs at least one generator", lineno, 1)
    return Presentation(n, tuple(generators), tuple(relations), characteristic).validate()


def emit_firep(pres: Presentation) -> str:
    header = "firep" if pres.characteristic == 0 else f"firep prime={pres.characteristic}"
    lines = [header, f"{len(pres.generators)} {len(pres.relations)}"]
    for g in pres.generators:
        lines.append(" ".join(render_rational(c) for c in g) + " ;")
    for point, coeffs in pres.relations:
        lines.append(" ".join(render_rational(c) for c in point) + " ; "
                     + " ".join(render_rational(c) for c in coeffs))
    return "\n".join(lines) + "\n"


def parse_module_text(text: str, source: str = "module") -> Presentation:
    """JSON or firep, decided by the first non-blank character"""
    if text.lstrip().startswith('{'):
        return parse_module_json(_load_json(text, source), source)
    return parse_firep(text)


def load_module(path: PathLike) -> Presentation:
    with open(path, 'r', encoding='utf-8') as f:
        text = f.read()
    pres = parse_module_text(text, str(path))
    logger.info(f"Loaded module with {len(pres.generators)} generators and {len(pres.relations)} relations "
                f"from {path}")
    return pres


def save_module(pres: Presentation, path: PathLike):
    path = Path(path)
    with open(path, 'w', encoding='utf-8') as f:
        if path.suffix == '.firep':
            f.write(emit_firep(pres))
        else:
            json.dump(emit_module_json(pres), f, indent=2)


# Stability files

def _parse_bounds(doc: dict, n: int, where: str) -> Tuple[list, list]:
    lows = [None if v is None else parse_rational(v, where) for v in _field(doc, 'lows', where)]
    highs = [None if v is None else parse_rational(v, where) for v in _field(doc, 'highs', where)]
    if len(lows) != n or len(highs) != n:
        raise ParseError(f"{where}: bounds must have {n} coordinates")
    return lows, highs


def _parse_carrier(entry: dict, n: int, where: str) -> Cube:
    if 'point' in entry:
        return Cube.point(parse_point(entry['point'], n, where))
    if 'cube' in entry:
        lows, highs = _parse_bounds(entry['cube'], n, where)
        low_closed = entry['cube'].get('low_closed')
        high_closed = entry['cube'].get('high_closed')
        return Cube(tuple(lows), tuple(highs),
                    None if low_closed is None else tuple(bool(b) for b in low_closed),
                    None if high_closed is None else tuple(bool(b) for b in high_closed))
    if 'face' in entry:
        lows, highs = _parse_bounds(entry['face'], n, where)
        degenerate = tuple(lo is not None and lo == hi for lo, hi in zip(lows, highs))
        return Cube(tuple(lows), tuple(highs), tuple(lo is not None for lo in lows), degenerate)
    raise ParseError(f"{where}: alpha entry needs one of 'point', 'cube', 'face', 'density' or 'limit'")


def _render_bounds(values) -> list:
    return [None if v is None else render_rational(v) for v in values]


def _emit_carrier(c: Cube) -> dict:
    if all(c.axis_is_point(i) for i in range(c.n)):
        return {'point': [render_rational(v) for v in c.lows]}
    degenerate = tuple(c.axis_is_point(i) for i in range(c.n))
    if any(degenerate) and c.low_closed == tuple(lo is not None for lo in c.lows) and c.high_closed == degenerate:
        return {'face': {'lows': _render_bounds(c.lows), 'highs': _render_bounds(c.highs)}}
    out = {'lows': _render_bounds(c.lows), 'highs': _render_bounds(c.highs)}
    if c.low_closed != tuple(lo is not None for lo in c.lows) or any(c.high_closed):
        out['low_closed'] = list(c.low_closed)
        out['high_closed'] = list(c.high_closed)
    return {'cube': out}


def _parse_beta(doc: dict, n: int, where: str = "beta") -> BetaSpec:
    lows, highs = _parse_bounds(_field(doc, 'window', where), n, f"{where} window")
    if None in lows or None in highs:
        raise ParseError(f"{where}: the window must be bounded")
    if 'grid' in doc:
        axes = tuple(tuple(parse_rational(v, f"{where} grid") for v in axis) for axis in doc['grid'])
    else:
        axes = tuple((lo, hi) for lo, hi in zip(lows, highs))
    if len(axes) != n:
        raise ParseError(f"{where}: grid must have {n} axes")
    try:
        grid = GridFunction(axes)
    except UsageError as e:
        raise ParseError(f"{where}: {e}")
    values = _field(doc, 'values', where)
    factors = tuple(tuple(tuple(parse_rational(v, f"{where} values") for v in axis) for axis in term)
                    for term in values)
    tails_doc = doc.get('tails') or [["1/2", "1/2"]] * n
    tails = tuple((parse_rational(a, f"{where} tails"), parse_rational(b, f"{where} tails")) for a, b in tails_doc)
    return BetaSpec(Cube.half_open(lows, highs), grid, factors, tails)


def _emit_beta(beta: BetaSpec) -> dict:
    return {
        'window': {'lows': _render_bounds(beta.window.lows), 'highs': _render_bounds(beta.window.highs)},
        'grid': [[render_rational(v) for v in axis] for axis in beta.window_grid.axes],
        'values': [[[render_rational(v) for v in axis] for axis in term] for term in beta.factors],
        'tails': [[render_rational(a), render_rational(b)] for a, b in beta.tails],
    }


def parse_stability_json(doc: dict, points: Iterable[Sequence] = (), source: str = "stability") -> StabilityCondition:
    """
    A validated stability condition.

    Args:
        doc: decoded JSON document
        points: module points the default beta is fitted around when beta is omitted

    Raises:
        ParseError: on malformed fields
        ValidationError: on named diagnostics (negative masses, unbounded or non-step alpha, bad beta)
    """
    n = _field(doc, 'n', source)
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ParseError(f"{source}: n must be a positive integer")
    mode = doc.get('mode', EVAL)
    if mode not in (EVAL, STEP):
        raise ParseError(f"{source}: mode must be {EVAL!r} or {STEP!r}, got {mode!r}")
    problems, terms = [], []
    for k, entry in enumerate(_field(doc, 'alpha', source)):
        where = f"{source} alpha {k}"
        if not isinstance(entry, dict):
            raise ParseError(f"{where}: expected a JSON object")
        unsupported = diagnose_alpha_entry(entry)
        if unsupported:
            problems.extend(unsupported)
            continue
        terms.append(AlphaTerm(_parse_carrier(entry, n, where), parse_rational(_field(entry, 'coeff', where), where)))
    if problems:
        raise ValidationError(problems)
    if 'beta' in doc and doc['beta'] is not None:
        beta = _parse_beta(doc['beta'], n)
    else:
        carriers = [b for t in terms for b in (t.carrier.lows, t.carrier.highs) if None not in b]
        beta = default_beta(list(points) + carriers, n)
    return validate(StabilityCondition(n, mode, tuple(terms), beta, bool(doc.get('signed', False))))


def emit_stability_json(z: StabilityCondition) -> dict:
    alpha = []
    for term in z.alpha:
        entry = _emit_carrier(term.carrier)
        entry['coeff'] = render_rational(term.coeff)
        alpha.append(entry)
    return {'n': z.n, 'mode': z.mode, 'signed': z.signed, 'alpha': alpha, 'beta': _emit_beta(z.beta)}


def load_stability(path: PathLike, points: Iterable[Sequence] = ()) -> StabilityCondition:
    with open(path, 'r', encoding='utf-8') as f:
        doc = _load_json(f.read(), str(path))
    z = parse_stability_json(doc, points, str(path))
    logger.info(f"Loaded {z.mode} stability condition with {len(z.alpha)} alpha terms from {path}")
    return z


def save_stability(z: StabilityCondition, path: PathLike):
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(emit_stability_json(z), f, indent=2)


# Reports

def hn_type_to_dict(t: HNType) -> List[dict]:
    return [{'slope': render_rational(s), 'dims': list(d)} for s, d in t.entries]


def filtration_to_dict(filtration: HNFiltration) -> dict:
    grid = filtration.parent.grid
    return {
        'grid': [[render_rational(v) for v in axis] for axis in grid.axes],
        'step_dims': [list(step.dimension_vector()) for step in filtration.steps],
        'slopes': [render_rational(s) for s in filtration.slopes],
        'hn_type': hn_type_to_dict(filtration.hn_type()),
    }


def write_json(report: dict, path: Optional[PathLike]) -> str:
    """Write a report to path, or return it as text when path is None"""
    text = json.dumps(report, indent=2)
    if path is not None:
        with open(path, 'w', encoding='utf-8') as f:
            f.write(text + '\n')
    return text


def write_csv(header: Sequence[str], rows: Iterable[Sequence], path: Optional[PathLike], stream=None):
    """Write rows to path, or to stream when path is None"""
    if path is None:
        writer = csv.writer(stream, lineterminator='\n')
        writer.writerow(header)
        writer.writerows(rows)
        return
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)


def csv_header(n: int, with_theta: bool = True) -> List[str]:
    cols = [f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(n)]
    return cols + (["theta"] if with_theta else []) + ["value"]


def profile_to_dict(x: Point, slopes: Sequence[Fraction]) -> Dict[str, list]:
    return {'x': [render_rational(c) for c in x], 'breakpoints': [render_rational(s) for s in slopes]}
