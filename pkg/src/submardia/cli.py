"""Command-line front end.

    submardia measures iris-setosa
    submardia test maxs iris-setosa --reps 1000 --seed 7
    submardia test mardia-s iris-setosa --columns 4
    submardia detect data.csv --seed 3
    submardia theory sn --omega equicorr:0.5 --lambda 5,5
    submardia simulate configs/table2_size.ini --csv out/table2

Output is one JSON document (stdout or ``--out``). Exit codes: 0 success,
1 usage or configuration error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import itertools
import json
import math
import sys
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .core import (
    DegenerateDataError,
    InsufficientSampleError,
    InvalidDimensionError,
    InvalidSubsetError,
    check_subset,
    enumerate_subsets,
)
from .families import (
    CompositeModel,
    ExponentialPower,
    Gaussian,
    ParameterError,
    SkewNormal,
    SkewT,
    StudentT,
    equicorrelation,
)
from .maxtests import (
    detect_subdimension,
    mardia_kurtosis_test,
    mardia_skewness_test,
    max_k_q_test,
    max_k_test,
    max_s_q_test,
    max_s_test,
    max_sk_q_test,
    max_sk_test,
    resolve_seed,
)
from .measures import ConsistencyError, measure_report
from .nulldist import ModelInvalidError
from .simlab import ExperimentConfig, detection_study, estimate_power, estimate_size
from .theory import MomentNonexistenceError, subdimensional_theory

SCHEMA_VERSION = 1
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
BUILTIN = {"iris": None, "iris-setosa": ("species", "setosa")}
MC_TESTS = {"maxs": max_s_test, "maxk": max_k_test, "maxsk": max_sk_test}
Q_TESTS = {"maxs-q": max_s_q_test, "maxk-q": max_k_q_test, "maxsk-q": max_sk_q_test}
CLOSED_TESTS = {"mardia-s": mardia_skewness_test, "mardia-k": mardia_kurtosis_test}
TEST_NAMES = (*MC_TESTS, *Q_TESTS, *CLOSED_TESTS)


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------- CSV input


@dataclass
class Table:
    header: list[str]
    rows: list[list[str]]
    first_line: int  # file line number of rows[0]


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def _read_table(source: str) -> Table:
    if source in BUILTIN:
        text = resources.files("submardia").joinpath("data/iris.csv").read_text("utf-8")
    else:
        try:
            text = Path(source).read_text("utf-8")
        except OSError as exc:
            raise DataError(f"cannot read {source}: {exc.strerror}") from None
    records = [r for r in csv.reader(io.StringIO(text)) if r]
    if not records:
        raise DataError(f"{source}: no rows")
    if any(not _is_number(v) for v in records[0]):
        header, body, first = [h.strip() for h in records[0]], records[1:], 2
    else:
        header, body, first = [f"x{i}" for i in range(1, len(records[0]) + 1)], records, 1
    for k, r in enumerate(body):
        if len(r) != len(header):
            raise DataError(f"{source}: line {first + k}: expected {len(header)} fields, got {len(r)}")
    table = Table(header, [[v.strip() for v in r] for r in body], first)
    if BUILTIN.get(source):
        table = _filter(table, [f"{BUILTIN[source][0]}={BUILTIN[source][1]}"])
    return table


def _filter(table: Table, where: list[str]) -> Table:
    rows = table.rows
    for cond in where or ():
        col, sep, value = cond.partition("=")
        if not sep:
            raise UsageError(f"--where expects COLUMN=VALUE, got {cond!r}")
        if col in table.header:
            j = table.header.index(col)
        elif col.isdigit() and 1 <= int(col) <= len(table.header):
            j = int(col) - 1
        else:
            raise UsageError(f"--where: unknown column {col!r}")
        rows = [r for r in rows if r[j] == value]
    return Table(table.header, rows, table.first_line)


def _numeric(table: Table, source: str) -> tuple[np.ndarray, list[str]]:
    if not table.rows:
        raise DataError(f"{source}: no data rows")
    cols = [j for j in range(len(table.header)) if all(_is_number(r[j]) for r in table.rows)]
    for j in range(len(table.header)):
        if j in cols:
            continue
        bad = [k for k, r in enumerate(table.rows) if _is_number(r[j])]
        if bad:  # mostly numeric column with a stray token
            k = next(k for k, r in enumerate(table.rows) if not _is_number(r[j]))
            raise DataError(f"{source}: line {table.first_line + k}: non-numeric value "
                            f"{table.rows[k][j]!r} in column {table.header[j]!r}")
    if not cols:
        raise DataError(f"{source}: no numeric columns")
    x = np.array([[float(r[j]) for j in cols] for r in table.rows])
    if not np.all(np.isfinite(x)):
        raise DataError(f"{source}: non-finite values")
    return x, [table.header[j] for j in cols]


def _columns(spec: str | None, p: int) -> tuple[int, ...] | None:
    if spec is None:
        return None
    try:
        cols = tuple(sorted({int(v) for v in spec.split(",")}))
        return check_subset(cols, p)
    except (ValueError, InvalidSubsetError) as exc:
        raise UsageError(f"--columns: {exc}") from None


def load_data(args) -> tuple[np.ndarray, list[str]]:
    table = _filter(_read_table(args.input), args.where)
    x, names = _numeric(table, args.input)
    cols = _columns(args.columns, x.shape[1])
    if cols is not None:
        x = x[:, np.asarray(cols) - 1]
        names = [names[i - 1] for i in cols]
    return x, names


# ------------------------------------------------------------------- output


def _clean(v):
    if isinstance(v, dict):
        return {str(k): _clean(w) for k, w in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(w) for w in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return None if math.isnan(v) or math.isinf(v) else v
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.ndarray):
        return _clean(v.tolist())
    return v


def dumps(doc: dict) -> str:
    # repr floats round-trip exactly
    return json.dumps(_clean(doc), indent=2, allow_nan=False) + "\n"


def _emit(doc: dict, out: str | None) -> None:
    text = dumps(doc)
    if out:
        Path(out).write_text(text, "utf-8")
    else:
        sys.stdout.write(text)


def _write_csv(path: str, header: list[str], rows) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow(["" if v is None or (isinstance(v, float) and math.isnan(v)) else v for v in r])


def _subset_json(s, p: int) -> dict | None:
    if s is None:
        return None
    return {"subset": list(s), "index": enumerate_subsets(p).index(s)}


def _report_json(r, p: int) -> dict:
    doc = {"test": r.name, "statistic": r.statistic, "p_value": r.p_value,
           "mc_se": r.mc_se, "reps": r.reps, "level": r.level, "rejected": r.rejected,
           "argmax": _subset_json(r.subset, p)}
    if r.detail:
        doc["detail"] = r.detail
    return doc


def _measure_rows(report) -> list[dict]:
    return [{"index": e["index"], "subset": list(e["subset"]), "q": e["q"], "b1": e["b1"],
             "b2": e["b2"], "tilde_b1": e["tilde_b1"], "tilde_b2": e["tilde_b2"]}
            for e in report.pairs()]


def _data_echo(args, x, names) -> dict:
    return {"input": args.input, "where": args.where or [], "columns": names,
            "n": x.shape[0], "p": x.shape[1]}


# ----------------------------------------------------------------- commands


def cmd_measures(args) -> dict:
    x, names = load_data(args)
    report = measure_report(x, strict=False)
    rows = _measure_rows(report)
    if args.csv:
        keys = ["index", "subset", "q", "b1", "b2", "tilde_b1", "tilde_b2"]
        _write_csv(args.csv, keys, ([" ".join(map(str, r["subset"])) if k == "subset" else r[k]
                                     for k in keys] for r in rows))
    return {"data": _data_echo(args, x, names), "measures": rows,
            "degenerate": [list(s) for s in report.degenerate]}


def _mc_args(args) -> tuple[int, int]:
    if args.reps < 1:
        raise UsageError("--reps must be positive")
    if args.reps < 1000:
        print(f"warning: --reps {args.reps} is below the recommended 1000", file=sys.stderr)
    if not 0 < args.level < 1:
        raise UsageError("--level must lie in (0, 1)")
    return args.reps, resolve_seed(args.seed or None)


def cmd_test(args) -> dict:
    name = args.test
    if name not in TEST_NAMES:
        raise UsageError(f"unknown test {name!r}; choose from {', '.join(TEST_NAMES)}")
    if name in Q_TESTS and args.q0 is None:
        raise UsageError(f"{name} needs --q0")
    x, names = load_data(args)
    p = x.shape[1]
    config = {"test": name, "level": args.level}
    if name in CLOSED_TESTS:
        r = CLOSED_TESTS[name](x, level=args.level)
    else:
        reps, seed = _mc_args(args)
        config.update(reps=reps, seed=seed)
        if name in Q_TESTS:
            if not 1 <= args.q0 <= p:
                raise UsageError(f"--q0 must lie in [1, {p}], got {args.q0}")
            config["q0"] = args.q0
            r = Q_TESTS[name](x, args.q0, reps, seed, args.level)
        else:
            r = MC_TESTS[name](x, reps, seed, args.level)
    return {"config": config, "data": _data_echo(args, x, names), "result": _report_json(r, p)}


def cmd_detect(args) -> dict:
    x, names = load_data(args)
    p = x.shape[1]
    reps, seed = _mc_args(args)
    d = detect_subdimension(x, reps, seed, args.level, args.procedure)
    return {
        "config": {"level": args.level, "reps": reps, "seed": d.seed, "procedure": d.procedure},
        "data": _data_echo(args, x, names),
        "result": {"triggered": d.triggered, "p_values": {"MaxS": d.p_values[0], "MaxK": d.p_values[1]},
                   "skew_subset": _subset_json(d.skew_subset, p),
                   "kurt_subset": _subset_json(d.kurt_subset, p),
                   "union_subset": _subset_json(d.union_subset, p)},
    }


def _floats(text: str | None, name: str) -> list[float] | None:
    if text is None:
        return None
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"--{name}: expected comma-separated numbers, got {text!r}") from None


def parse_matrix(text: str | None, p: int | None) -> np.ndarray | None:
    """``identity``, ``equicorr:RHO`` or rows separated by ``;`` (``1,0.5;0.5,1``)."""
    if text is None:
        return None
    if text == "identity" or text.startswith("equicorr"):
        if p is None:
            raise UsageError("--p (or a slant vector) is needed to size the scale matrix")
        if text == "identity":
            return np.eye(p)
        _, _, rho = text.partition(":")
        return equicorrelation(p, float(rho) if rho else 0.5)
    try:
        m = np.array([[float(v) for v in row.split(",")] for row in text.split(";")])
    except ValueError:
        raise UsageError(f"--omega: cannot parse {text!r}") from None
    return m


def _family(args):
    fam = args.family
    if fam in ("model1", "model2", "model3"):
        return CompositeModel(int(fam[-1]), p=args.p or 5, q=args.q, alpha=args.alpha,
                              nu=args.nu, rho=args.rho)
    slant = _floats(args.slant, "lambda")
    p = args.p or (len(slant) if slant else None)
    omega = parse_matrix(args.omega or "identity", p)
    if fam == "gaussian":
        return Gaussian(omega)
    if args.nu is None and fam in ("t", "ep", "st"):
        raise UsageError(f"family {fam} needs --nu")
    if fam == "t":
        return StudentT(omega, args.nu)
    if fam == "ep":
        return ExponentialPower(omega, args.nu)
    if slant is None:
        raise UsageError(f"family {fam} needs --lambda")
    if fam == "sn":
        return SkewNormal(omega, slant)
    if fam == "st":
        return SkewT(omega, slant, args.nu)
    raise UsageError(f"unknown family {fam!r}")


def cmd_theory(args) -> dict:
    spec = _family(args)
    values = subdimensional_theory(spec)
    rows = [{"index": i, "subset": list(m.subset), "q": len(m.subset), "beta1": m.beta1, "beta2": m.beta2}
            for i, m in enumerate(values, start=1)]
    if args.subset:
        want = _columns(args.subset, spec.p)
        rows = [r for r in rows if tuple(r["subset"]) == want]
    config = {k: getattr(args, k) for k in ("family", "p", "q", "nu", "alpha", "rho", "omega", "slant")}
    return {"config": config, "theory": rows}


# -------------------------------------------------------- experiment configs


GRID_KEYS = ("n", "alpha", "nu")


def read_experiment(path: str) -> tuple[dict, list[dict]]:
    """Parse an experiment INI file into shared settings and grid cells.

    Keys ``n``, ``alpha`` and ``nu`` may hold comma-separated lists; the
    cells are their Cartesian product.
    """
    cp = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    except configparser.Error as exc:
        raise UsageError(f"config {path}: {exc}") from None
    if "experiment" not in cp:
        raise UsageError(f"config {path}: missing [experiment] section")
    sec = cp["experiment"]
    known = {"kind", "family", "p", "q", "rho", "tests", "replicates", "reps", "level",
             "seed", "procedure", *GRID_KEYS}
    unknown = set(sec) - known
    if unknown:
        raise UsageError(f"config {path}: unknown keys {sorted(unknown)}")
    try:
        settings = {
            "kind": sec.get("kind", "size"),
            "family": sec.get("family", "gaussian"),
            "p": sec.getint("p", 5),
            "q": sec.getint("q", 2),
            "rho": sec.getfloat("rho", 0.5),
            "tests": tuple(t.strip() for t in sec.get("tests", "MaxS,MaxK,MaxSK").split(",")),
            "replicates": sec.getint("replicates", 1000),
            "reps": sec.getint("reps", 1000),
            "level": sec.getfloat("level", 0.05),
            "seed": sec.getint("seed", 0),
            "procedure": sec.get("procedure", "sk"),
        }
        grids = {k: [float(v) for v in sec[k].split(",")] for k in GRID_KEYS if k in sec}
    except ValueError as exc:
        raise UsageError(f"config {path}: {exc}") from None
    if settings["kind"] not in ("size", "power", "detection"):
        raise UsageError(f"config {path}: kind must be size, power or detection")
    if settings["family"] not in ("gaussian", "model1", "model2", "model3"):
        raise UsageError(f"config {path}: family must be gaussian or model1..model3")
    if "n" not in grids:
        raise UsageError(f"config {path}: n is required")
    keys = list(grids)
    cells = [dict(zip(keys, combo)) for combo in itertools.product(*(grids[k] for k in keys))]
    for c in cells:
        c["n"] = int(c["n"])
    return settings, cells


def _cell_spec(settings: dict, cell: dict):
    fam = settings["family"]
    if fam == "gaussian":
        return Gaussian(equicorrelation(settings["p"], settings["rho"]))
    return CompositeModel(int(fam[-1]), p=settings["p"], q=settings["q"], alpha=cell.get("alpha"),
                          nu=cell.get("nu"), rho=settings["rho"])


def cmd_simulate(args) -> dict:
    settings, cells = read_experiment(args.config)
    if args.seed:
        settings["seed"] = args.seed
    results, rate_rows, hist_rows = [], [], []
    for k, cell in enumerate(cells):
        spec = _cell_spec(settings, cell)
        config = ExperimentConfig(
            spec, cell["n"], settings["replicates"], settings["tests"], settings["reps"],
            settings["level"], settings["seed"] + k, settings["procedure"], args.threads,
        )
        grid = {"n": cell["n"], "alpha": cell.get("alpha"), "nu": cell.get("nu")}
        if settings["kind"] == "detection":
            r = detection_study(config)
            out = [r]
            catalog = enumerate_subsets(spec.p)
            for i, v in r.detection_histogram.items():
                hist_rows.append([*grid.values(), "index", i, " ".join(map(str, catalog[i])), v])
            for q, v in r.q_histogram.items():
                hist_rows.append([*grid.values(), "q", q, "", v])
        elif settings["kind"] == "size":
            out = list(estimate_size(config).values())
        else:
            out = list(estimate_power(config).values())
        for r in out:
            rate_rows.append([*grid.values(), r.test_name, r.rejection_rate, r.mc_se])
            doc = {**grid, "test": r.test_name, "rate": r.rejection_rate, "mc_se": r.mc_se,
                   "replicates": r.replicates, "seed": config.seed}
            if r.detection_histogram is not None:
                doc["detection_histogram"] = r.detection_histogram
                doc["q_histogram"] = r.q_histogram
            results.append(doc)
    if args.csv:
        _write_csv(f"{args.csv}_rates.csv", ["n", "alpha", "nu", "test", "rate", "mc_se"], rate_rows)
        if hist_rows:
            _write_csv(f"{args.csv}_histogram.csv",
                       ["n", "alpha", "nu", "kind", "key", "subset", "proportion"], hist_rows)
    return {"config": {**settings, "grid": cells, "threads": args.threads}, "results": results}


# ---------------------------------------------------------------- entry


def _common(p: argparse.ArgumentParser, mc: bool = True) -> None:
    p.add_argument("input", help="CSV file, or the bundled 'iris' / 'iris-setosa'")
    p.add_argument("--columns", help="1-based numeric columns, e.g. 1,4")
    p.add_argument("--where", action="append", metavar="COL=VALUE", help="keep matching rows")
    p.add_argument("--level", type=float, default=0.05)
    if mc:
        p.add_argument("--reps", type=int, default=1000, help="Monte Carlo null draws")
        p.add_argument("--seed", type=int, default=0, help="0 draws a fresh seed (echoed)")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", help="write JSON here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="submardia", description="Sub-dimensional Mardia measures and max tests.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("measures", help="b1, b2 and their standardized values per subset")
    _common(p, mc=False)
    p.add_argument("--csv", help="also write the measure table as CSV")
    p.set_defaults(run=cmd_measures)

    p = sub.add_parser("test", help="run one test")
    p.add_argument("test", help=", ".join(TEST_NAMES))
    _common(p)
    p.add_argument("--q0", type=int)
    p.set_defaults(run=cmd_test)

    p = sub.add_parser("detect", help="locate the non-Gaussian sub-dimension")
    _common(p)
    p.add_argument("--procedure", choices=("s", "k", "sk"), default="sk")
    p.set_defaults(run=cmd_detect)

    p = sub.add_parser("theory", help="population measures of a family")
    p.add_argument("family", choices=("gaussian", "t", "ep", "sn", "st", "model1", "model2", "model3"))
    p.add_argument("--p", type=int)
    p.add_argument("--q", type=int, default=2, help="block size of the composite models")
    p.add_argument("--omega", help="identity, equicorr:RHO or 'a,b;c,d'")
    p.add_argument("--lambda", "--slant", dest="slant", help="slant vector, e.g. 5,5")
    p.add_argument("--nu", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--subset", help="report one subset only, e.g. 1,2")
    p.add_argument("--out")
    p.set_defaults(run=cmd_theory)

    p = sub.add_parser("simulate", help="size, power or detection experiment from an INI file")
    p.add_argument("config")
    p.add_argument("--seed", type=int, default=0, help="override the config seed (0 keeps it)")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--csv", metavar="PREFIX", help="write PREFIX_rates.csv and PREFIX_histogram.csv")
    p.add_argument("--out")
    p.set_defaults(run=cmd_simulate)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "threads", 1) < 1:
            raise UsageError("--threads must be positive")
        start = time.perf_counter()
        doc = args.run(args)
        doc = {"schema_version": SCHEMA_VERSION, "tool_version": __version__,
               "command": args.command, **doc,
               "timing": {"seconds": time.perf_counter() - start}}
        _emit(doc, args.out)
        return EXIT_OK
    except (UsageError, ParameterError, MomentNonexistenceError, InvalidDimensionError,
            InvalidSubsetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConsistencyError, ModelInvalidError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, DegenerateDataError, InsufficientSampleError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
