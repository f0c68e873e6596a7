"""CSV/JSON emitters.  Floats are written with 17 significant digits so
identical runs give byte-identical files."""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .basis import JumpBasis
from .chaos import ChaosExpansion
from .measures import LevyMeasure

__all__ = [
    "fmt",
    "write_csv",
    "write_json",
    "chaos_rows",
    "basis_rows",
    "CHAOS_COLUMNS",
    "MC_COLUMNS",
]

CHAOS_COLUMNS = ("alpha", "coefficient", "order", "index", "weight_k")
MC_COLUMNS = ("quantity", "estimate", "theory", "std_error", "n_samples", "seed", "eps", "truncation_var")


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


@contextmanager
def _sink(target):
    if target is None or target == "-":
        yield sys.stdout
    elif isinstance(target, io.TextIOBase):
        yield target
    else:
        path = Path(target)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            yield fh


def write_csv(target, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Write rows to a path, an open text stream, or stdout (None or '-')."""
    with _sink(target) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(target, obj) -> None:
    with _sink(target) as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def chaos_rows(F: ChaosExpansion, k: float = 1.0) -> list[tuple]:
    """Rows (alpha, coefficient, order, index, weight_k) in graded order."""
    return [(a.to_text(), c, a.order(), a.index(), a.weight(k)) for a, c in F.items()]


def basis_rows(basis: JumpBasis, model: LevyMeasure) -> tuple[list[str], list[tuple]]:
    """Header and rows (m, degree, c_0..c_M, gram_residual) for a jump basis.

    The residual of row m is max_j |(p_m, p_j) - delta_mj|.
    """
    ncoef = basis.coeffs.shape[1]
    header = ["m", "degree"] + [f"c{j}" for j in range(ncoef)] + ["gram_residual"]
    gram = basis.gram(model)
    resid = np.abs(gram - np.eye(basis.M)).max(axis=1)
    rows = []
    for m in range(1, basis.M + 1):
        rows.append((m, m, *basis.coeffs[m - 1], resid[m - 1]))
    return header, rows
