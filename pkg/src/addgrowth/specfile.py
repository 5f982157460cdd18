"""Reading process specs from TOML files and the shipped built-in catalogue."""

from __future__ import annotations

import math
from importlib import resources
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import process_spec as ps
from .errors import GrowthError, SpecError

_BUILTIN_PACKAGE = "addgrowth.specs"


def builtin_names() -> list[str]:
    files = resources.files(_BUILTIN_PACKAGE).iterdir()
    return sorted(f.name[:-5] for f in files if f.name.endswith(".toml"))


def load_builtin(name: str) -> ps.ProcessSpec:
    res = resources.files(_BUILTIN_PACKAGE) / f"{name}.toml"
    if not res.is_file():
        raise SpecError(f"unknown built-in spec '{name}'; choose from {', '.join(builtin_names())}")
    return loads(res.read_text(encoding="utf-8"), source=f"<builtin {name}>")


def load(name_or_path: str | Path) -> ps.ProcessSpec:
    """Load a spec by built-in name or from a file path."""
    path = Path(name_or_path)
    if path.suffix == ".toml" or path.exists():
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise SpecError(f"{path}: cannot read spec file ({exc.strerror})") from exc
        return loads(text, source=str(path))
    return load_builtin(str(name_or_path))


def loads(text: str, source: str = "<string>") -> ps.ProcessSpec:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise SpecError(f"{source}: {exc}") from exc
    return from_dict(doc, source)


class _Path:
    """Dotted location inside the document, used in error messages."""

    def __init__(self, source: str, parts: tuple = ()):
        self.source = source
        self.parts = parts

    def __truediv__(self, key):
        return _Path(self.source, self.parts + (key,))

    def __str__(self):
        out = ""
        for p in self.parts:
            out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else p)
        return f"{self.source}: {out or '<root>'}"

    def fail(self, msg: str):
        raise SpecError(f"{self}: {msg}")


def _get(table: dict, key: str, where: _Path, kind=float, default=None, required=True):
    if key not in table:
        if required and default is None:
            (where / key).fail("missing required field")
        return default
    val = table[key]
    if kind is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            (where / key).fail(f"expected a number, got {val!r}")
        return float(val)
    if kind is int:
        if isinstance(val, bool) or not isinstance(val, int):
            (where / key).fail(f"expected an integer, got {val!r}")
        return val
    if kind is str:
        if not isinstance(val, str):
            (where / key).fail(f"expected a string, got {val!r}")
        return val
    if kind is list:
        if not isinstance(val, list) or not all(isinstance(v, (int, float)) for v in val):
            (where / key).fail(f"expected a list of numbers, got {val!r}")
        return [float(v) for v in val]
    if kind is dict:
        if not isinstance(val, dict):
            (where / key).fail(f"expected a table, got {val!r}")
        return val
    return val


def _time_function(tbl, where: _Path) -> ps.TimeFunction:
    if tbl is None:
        return ps.Zero()
    if isinstance(tbl, (int, float)) and not isinstance(tbl, bool):
        return ps.Linear(float(tbl))
    if not isinstance(tbl, dict):
        where.fail(f"expected a time-function table, got {tbl!r}")
    kind = _get(tbl, "kind", where, str)
    if kind == "zero":
        f = ps.Zero()
    elif kind == "linear":
        f = ps.Linear(_get(tbl, "a", where))
    elif kind == "power":
        p = _get(tbl, "p", where)
        if p <= 0:
            (where / "p").fail("exponent must be positive so that f(0) = 0")
        f = ps.Power(_get(tbl, "a", where, default=1.0, required=False), p)
    elif kind == "piecewise_linear":
        t = _get(tbl, "t", where, list)
        v = _get(tbl, "values", where, list)
        if len(t) != len(v) or len(t) < 2:
            where.fail("t and values need equal length >= 2")
        if t[0] != 0 or v[0] != 0:
            where.fail("first knot must be (0, 0)")
        if any(b <= a for a, b in zip(t[:-1], t[1:])):
            (where / "t").fail("knots must be strictly increasing")
        f = ps.PiecewiseLinear(tuple(t), tuple(v))
    elif kind == "composed":
        f = ps.Composed(
            _time_function(_get(tbl, "outer", where, dict), where / "outer"),
            _time_function(_get(tbl, "inner", where, dict), where / "inner"),
        )
    elif kind == "stieltjes":
        f = ps.Stieltjes(
            _knots(tbl.get("density"), where / "density"),
            _time_function(_get(tbl, "measure", where, dict), where / "measure"),
        )
    else:
        (where / "kind").fail(f"unknown time-function kind '{kind}'")
    return f


def _knots(val, where: _Path) -> ps.Knots:
    if val is None:
        where.fail("missing required field")
    if isinstance(val, (int, float)) and not isinstance(val, bool):
        return ps.Knots.constant(val)
    if not isinstance(val, dict):
        where.fail("expected a number or a table {s = [...], values = [...]}")
    s = _get(val, "s", where, list)
    v = _get(val, "values", where, list)
    if len(s) != len(v) or not s:
        where.fail("s and values need equal nonzero length")
    if any(b <= a for a, b in zip(s[:-1], s[1:])):
        (where / "s").fail("knots must be strictly increasing")
    return ps.Knots(tuple(s), tuple(v))


def _measure(tbl, where: _Path) -> ps.LevyMeasure:
    kind = _get(tbl, "kind", where, str)
    try:
        if kind == "symmetric_stable":
            return ps.symmetric_stable(_get(tbl, "alpha", where), _get(tbl, "c", where, default=1.0, required=False))
        if kind == "stable_like":
            return ps.stable_like(_get(tbl, "alpha", where), _get(tbl, "c_pos", where), _get(tbl, "c_neg", where))
        if kind == "subordinator":
            return ps.subordinator(
                _get(tbl, "alpha", where),
                _get(tbl, "c", where, default=1.0, required=False),
                _get(tbl, "lower", where, default=0.0, required=False) or 0.0,
                _get(tbl, "upper", where, default=math.inf, required=False),
            )
        if kind == "pareto":
            return ps.pareto(
                _get(tbl, "alpha", where),
                _get(tbl, "c", where, default=1.0, required=False),
                _get(tbl, "lower", where, default=1.0, required=False),
            )
        if kind == "atoms":
            return ps.atoms(_get(tbl, "x", where, list), _get(tbl, "mass", where, list))
        if kind == "sum":
            parts = tbl.get("parts")
            if not isinstance(parts, list) or not parts:
                (where / "parts").fail("expected a nonempty list of measure tables")
            out = _measure(parts[0], where / "parts" / 0)
            for j, p in enumerate(parts[1:], start=1):
                out = out + _measure(p, where / "parts" / j)
            return out
    except SpecError as exc:
        if str(where) in str(exc):
            raise
        where.fail(str(exc))
    except GrowthError as exc:
        where.fail(str(exc))
    (where / "kind").fail(f"unknown measure kind '{kind}'")


def _kernel(tbl, where: _Path) -> ps.Kernel:
    if tbl is None:
        return ps.NoJumps()
    if not isinstance(tbl, dict):
        where.fail("expected a kernel table")
    kind = _get(tbl, "kind", where, str)
    if kind == "none":
        return ps.NoJumps()
    if kind == "time_scaled":
        scale = _time_function(tbl.get("scale", {"kind": "linear", "a": 1.0}), where / "scale")
        return ps.TimeScaled(scale, _measure(_get(tbl, "measure", where, dict), where / "measure"))
    if kind == "disintegrated":
        family = tbl.get("family", "stable_like")
        if family != "stable_like":
            (where / "family").fail(f"unsupported family '{family}'")
        try:
            return ps.Disintegrated(
                _time_function(tbl.get("u", {"kind": "linear", "a": 1.0}), where / "u"),
                _knots(tbl.get("alpha"), where / "alpha"),
                _knots(tbl.get("c_pos"), where / "c_pos"),
                _knots(tbl.get("c_neg"), where / "c_neg"),
            )
        except SpecError as exc:
            if str(where) in str(exc):
                raise
            where.fail(str(exc))
    if kind == "sum":
        parts = tbl.get("parts")
        if not isinstance(parts, list) or len(parts) < 2:
            (where / "parts").fail("expected a list of at least two kernel tables")
        return ps.SumKernel(tuple(_kernel(p, where / "parts" / j) for j, p in enumerate(parts)))
    (where / "kind").fail(f"unknown kernel kind '{kind}'")


def from_dict(doc: dict, source: str = "<dict>") -> ps.ProcessSpec:
    root = _Path(source)
    d = _get(doc, "d", root, int, default=1, required=False)
    T_max = _get(doc, "T_max", root, default=1.0, required=False)
    label = _get(doc, "label", root, str, default="", required=False) or Path(source).stem
    comps = doc.get("component")
    if not isinstance(comps, list) or not comps:
        (root / "component").fail("expected at least one [[component]] table")
    if len(comps) != d:
        (root / "d").fail(f"d = {d} but {len(comps)} component tables given")
    built = []
    for i, tbl in enumerate(comps):
        where = root / "component" / i
        if not isinstance(tbl, dict):
            where.fail("expected a table")
        unknown = set(tbl) - {"drift", "gaussian", "kernel"}
        if unknown:
            where.fail(f"unknown field(s) {sorted(unknown)}")
        built.append(
            ps.Component(
                _time_function(tbl.get("drift"), where / "drift"),
                _time_function(tbl.get("gaussian"), where / "gaussian"),
                _kernel(tbl.get("kernel"), where / "kernel"),
            )
        )
    try:
        return ps.ProcessSpec(tuple(built), T_max, label)
    except SpecError as exc:
        raise SpecError(f"{source}: {exc}") from exc
