"""Code bundles, manifests and table writers."""
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import gf2
from .codes import ClassicalCode, CssCode, HgpCode
from .gf2 import BinaryMatrix

TOOL_VERSION = "0.1.0"


class BundleError(ValueError):
    pass


def fmt(v) -> str:
    """Stable text form: floats with 17 significant digits, ints as is."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, Fraction):
        v = float(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return "%.17g" % v
    if v is None:
        return ""
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, Fraction):
        return float(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isfinite(v):
            # round-trips through %.17g
            return float("%.17g" % v)
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    if isinstance(v, Path):
        return str(v)
    return v


def dump_json(obj, path: Path | None = None) -> str:
    text = json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def write_csv(rows: Sequence[dict], columns: Sequence[str], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([fmt(r.get(c)) for c in columns])


def write_table(rows: Sequence[dict], columns: Sequence[str], path: Path, kind: str) -> Path:
    path = Path(path)
    if kind == "csv":
        path = path.with_suffix(".csv")
        write_csv(rows, columns, path)
    else:
        path = path.with_suffix(".json")
        dump_json([{c: r.get(c) for c in columns} for r in rows], path)
    return path


def sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# bundles


@dataclass
class Bundle:
    kind: str                        # "css" or "classical"
    header: dict
    hx: BinaryMatrix | None = None
    hz: BinaryMatrix | None = None
    h: BinaryMatrix | None = None
    h1: BinaryMatrix | None = None
    h2: BinaryMatrix | None = None
    logical_x: list[list[int]] | None = None
    logical_z: list[list[int]] | None = None

    def css(self) -> CssCode:
        if self.kind != "css":
            raise BundleError("bundle holds a classical code")
        if self.h1 is not None and self.h2 is not None:
            w = (self.header.get("wbit"), self.header.get("wcheck"), self.header.get("seed"))
            c = HgpCode(ClassicalCode(self.h1, *w), ClassicalCode(self.h2, *w))
            if c.hx != self.hx or c.hz != self.hz:
                raise BundleError("[h1]/[h2] do not reproduce [hx]/[hz]")
            return c
        logicals = None
        if self.logical_x is not None and self.logical_z is not None:
            logicals = (logicals_as_bits(self.logical_x, self.hx.cols), logicals_as_bits(self.logical_z, self.hx.cols))
        return CssCode(self.hx, self.hz, logicals=logicals)

    def classical(self) -> ClassicalCode:
        if self.kind != "classical":
            raise BundleError("bundle holds a CSS code")
        return ClassicalCode(self.h, self.header.get("wbit"), self.header.get("wcheck"), self.header.get("seed"))


def _header_line(kind: str, fields: dict) -> str:
    return kind + " " + " ".join(f"{k}={fmt(v) if v is not None else 'none'}" for k, v in fields.items()) + "\n"


def _parse_header(line: str) -> tuple[str, dict]:
    parts = line.split()
    if not parts or parts[0] not in ("css", "classical"):
        raise BundleError(f"bad bundle header: {line.strip()!r}")
    out = {}
    for p in parts[1:]:
        k, _, v = p.partition("=")
        if v == "none":
            out[k] = None
        else:
            try:
                out[k] = int(v)
            except ValueError:
                out[k] = v
    return parts[0], out


def _logicals_block(name: str, mat: np.ndarray) -> str:
    lines = [f"[{name}] {len(mat)}"]
    lines += [" ".join(map(str, np.flatnonzero(row).tolist())) for row in mat]
    return "\n".join(lines) + "\n"


def write_css_bundle(c: CssCode, path, seed=None, wbit=None, wcheck=None, logicals: bool = True) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        fh.write(_header_line("css", {"n": c.n, "k": c.k, "seed": seed, "wbit": wbit, "wcheck": wcheck}))
        fh.write("[hx]\n")
        gf2.write_matrix(c.hx, fh)
        fh.write("[hz]\n")
        gf2.write_matrix(c.hz, fh)
        if isinstance(c, HgpCode):
            # the factors let readers rebuild the product structure
            fh.write("[h1]\n")
            gf2.write_matrix(c.inputs[0].h, fh)
            fh.write("[h2]\n")
            gf2.write_matrix(c.inputs[1].h, fh)
        if logicals:
            fh.write(_logicals_block("logical_x", c.logical_x))
            fh.write(_logicals_block("logical_z", c.logical_z))
    return path


def write_classical_bundle(c: ClassicalCode, path) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        fh.write(_header_line("classical", {"n": c.n, "m": c.m, "k": c.k, "seed": c.seed,
                                            "wbit": c.w_bit, "wcheck": c.w_check}))
        fh.write("[h]\n")
        gf2.write_matrix(c.h, fh)
    return path


def read_bundle(path) -> Bundle:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    lines = path.read_text().split("\n")
    kind, header = _parse_header(lines[0])
    it = iter(lines[1:])
    b = Bundle(kind, header)
    for line in it:
        tag = line.strip()
        if not tag:
            continue
        if tag in ("[hx]", "[hz]", "[h]", "[h1]", "[h2]"):
            setattr(b, tag[1:-1], gf2.read_matrix(it))
        elif tag.startswith("[logical_"):
            name, count = tag[1:].split("]")
            rows = [[int(t) for t in next(it).split()] for _ in range(int(count))]
            setattr(b, name, rows)
        else:
            raise BundleError(f"unexpected line {tag!r}")
    if kind == "css":
        if b.hx is None or b.hz is None:
            raise BundleError("css bundle needs [hx] and [hz]")
        if b.hx.cols != header.get("n", b.hx.cols):
            raise BundleError("header n disagrees with matrix width")
    elif b.h is None:
        raise BundleError("classical bundle needs [h]")
    return b


def logicals_as_bits(rows: Iterable[Sequence[int]], n: int) -> np.ndarray:
    rows = list(rows)
    out = np.zeros((len(rows), n), np.uint8)
    for i, r in enumerate(rows):
        out[i, list(r)] = 1
    return out
