"""JSON and CSV plumbing for the batch front-end: group/distribution/
measure loaders, tables with 17-significant-digit numbers, and run
metadata blocks."""

import csv
import hashlib
import json
import os

import numpy as np

from . import __version__
from .group_core import GroupSpec, abelian, heisenberg
from .polynomials import Polynomial, SmoothField, gaussian_profile, \
    poly_bump_profile
from .weak_l1 import AtomicMeasure


class InputError(Exception):
    """Bad input file or option; maps to exit status 1."""


BUILTIN_GROUPS = {
    "heisenberg": heisenberg,
    "abelian_R1": lambda: abelian(1),
    "abelian_R2": lambda: abelian(2),
    "abelian_R3": lambda: abelian(3),
}


def load_json(path):
    if not os.path.exists(path):
        raise InputError(f"no such file: {path}")
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"malformed JSON in {path}: line {exc.lineno} "
                             f"column {exc.colno}: {exc.msg}") from exc


def load_group(ref):
    """A group spec from a JSON file, or one of the builtin names."""
    if os.path.exists(ref):
        try:
            return GroupSpec.from_json(load_json(ref))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad group spec {ref}: {exc}") from exc
    if ref in BUILTIN_GROUPS:
        return BUILTIN_GROUPS[ref]()
    raise InputError(f"no such file or builtin group: {ref}")


def density_from_json(n, data):
    """A smooth density from {kind, params}."""
    kind = data.get("kind")
    params = data.get("params", {})
    shift = np.asarray(params.get("shift", [0.0] * n), dtype=float)
    if len(shift) != n:
        raise InputError(f"density shift needs {n} coordinates")
    if kind == "gaussian":
        base = Polynomial.zero(n)
        for k in range(n):
            e = tuple(2 if m == k else 0 for m in range(n))
            base = base + Polynomial(n, {e: 1}) \
                - Polynomial(n, {tuple(1 if m == k else 0
                                       for m in range(n)): 2 * shift[k]}) \
                + Polynomial.constant(n, shift[k] ** 2)
        return SmoothField(base, gaussian_profile(
            params.get("scale", 1.0), params.get("width", 1.0)))
    if kind == "poly_bump":
        r = float(params.get("radius", 1.0))
        base = Polynomial.zero(n)
        for k in range(n):
            e = tuple(2 if m == k else 0 for m in range(n))
            base = base + (Polynomial(n, {e: 1})
                           - Polynomial(n, {tuple(1 if m == k else 0
                                                  for m in range(n)):
                                            2 * shift[k]})
                           + Polynomial.constant(n, shift[k] ** 2)) \
                * Polynomial.constant(n, 1.0 / r ** 2)
        return SmoothField(base, poly_bump_profile(
            params.get("scale", 1.0), params.get("power", 6)))
    raise InputError(f"unknown density kind {kind!r}")


def load_distribution(path, spec, norm, Gamma):
    """A DistributionRep from {mu, terms: [{alpha, density}]}."""
    from .distributions import DistributionRep
    data = load_json(path)
    terms = []
    for t in data.get("terms", []):
        alpha = tuple(int(v) for v in t["alpha"])
        if len(alpha) != spec.n:
            raise InputError(f"alpha needs {spec.n} entries")
        terms.append((alpha, density_from_json(spec.n, t["density"])))
    if not terms:
        raise InputError("distribution needs at least one term")
    return DistributionRep(spec, norm, Gamma, terms, mu=data.get("mu"))


def load_measure(path):
    data = load_json(path)
    try:
        return AtomicMeasure.from_json(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad measure {path}: {exc}") from exc


# -- tables ------------------------------------------------------------------

def fmt_number(x):
    return format(float(x), ".17g")


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt_number(v)
    return str(v)


def _json_scalar(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt_number(v)
    return json.dumps(str(v), ensure_ascii=False)


def emit_table(rows, fmt, path):
    """Rows of identical dicts as RFC-4180 CSV or a JSON array of objects;
    numbers carry 17 significant digits."""
    keys = list(rows[0].keys()) if rows else []
    for row in rows:
        if list(row.keys()) != keys:
            raise InputError("table rows must share one schema")
    if fmt == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(keys)
            for row in rows:
                writer.writerow([_cell(v) for v in row.values()])
        return
    if fmt == "json":
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("[\n")
            for m, row in enumerate(rows):
                body = ", ".join(f"{json.dumps(k)}: {_json_scalar(v)}"
                                 for k, v in row.items())
                tail = ",\n" if m + 1 < len(rows) else "\n"
                fh.write("  {" + body + "}" + tail)
            fh.write("]\n")
        return
    raise InputError(f"unknown table format {fmt!r}")


def parse_table(path):
    """Read back an emitted table; numeric cells become floats."""
    def conv(s):
        for kind in (int, float):
            try:
                return kind(s)
            except (TypeError, ValueError):
                pass
        return {"true": True, "false": False}.get(s, s)
    if path.endswith(".json"):
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        return [{k: conv(v) for k, v in row.items()} for row in reader]


def jsonable(obj):
    """Recursively convert numpy scalars/arrays for json.dump."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return float(fmt_number(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(jsonable(obj), fh, indent=2, ensure_ascii=False)
        fh.write("\n")


def metadata(seed, threads, config):
    canon = json.dumps(jsonable(config), sort_keys=True)
    return {"version": __version__, "seed": int(seed),
            "threads": int(threads),
            "config-hash": hashlib.sha256(canon.encode()).hexdigest()}
