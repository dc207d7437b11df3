"""Plain-text formats: datasets, posterior curves, error tables, fits, and metadata sidecars.

Every text file may open with '#' comment lines carrying provenance
(config hash, master seed); readers skip them.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DomainError
from .inference import ErrorSummary, FieldGrid, Posterior
from .protocol import Dataset, Outcome, Schedule, decode, encode
from .scaling import ErrorCell, ScalingFit
from .spin import ChainSpec

DATASET_MAGIC = "# spinsense-dataset 1"


def _fmt(x: float) -> str:
    return repr(float(x))


def _header(meta: Mapping[str, object] | None) -> str:
    if not meta:
        return ""
    return "".join(f"# {k}={v}\n" for k, v in meta.items())


def dumps_dataset(data: Dataset) -> str:
    lines = [
        DATASET_MAGIC,
        f"# N={data.template.N}",
        f"# J={_fmt(data.template.J)}",
        "# taus=" + ",".join(_fmt(t) for t in data.schedule.taus),
    ]
    for code, k in enumerate(data.counts):
        if k:
            seq = "".join(o.symbol for o in decode(code, data.n_seq))
            lines.append(f"{seq} {int(k)}")
    return "\n".join(lines) + "\n"


def loads_dataset(text: str) -> Dataset:
    head: dict[str, str] = {}
    body = []
    for line in text.splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            if "=" in line:
                k, v = line[1:].strip().split("=", 1)
                head[k] = v
            continue
        body.append(line.split())
    try:
        template = ChainSpec(int(head["N"]), float(head["J"]))
        schedule = Schedule(tuple(float(t) for t in head["taus"].split(",")))
    except KeyError as exc:
        raise DomainError(f"dataset header missing {exc}") from exc
    counts = np.zeros(2**schedule.n_seq, dtype=np.int64)
    for fields in body:
        if len(fields) != 2 or len(fields[0]) != schedule.n_seq or set(fields[0]) - {"+", "-"}:
            raise DomainError(f"malformed dataset record: {' '.join(fields)!r}")
        seq = [Outcome.UP if ch == "+" else Outcome.DOWN for ch in fields[0]]
        counts[encode(seq)] += int(fields[1])
    return Dataset(counts, schedule, template)


def write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def csv_text(header: Sequence[str], rows: Iterable[Sequence[object]], meta=None) -> str:
    buf = io.StringIO()
    buf.write(_header(meta))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def posterior_csv(posteriors: Sequence[Posterior], meta=None, labels: Sequence[object] | None = None) -> str:
    """Long-format CSV (label, B, density); label is the prefix length when several curves are given."""
    labels = labels if labels is not None else range(1, len(posteriors) + 1)
    rows = []
    for lab, p in zip(labels, posteriors):
        rows.extend((lab, float(b), float(d)) for b, d in zip(p.grid.values, p.density))
    return csv_text(["n_measurements", "B", "density"], rows, meta)


def read_posterior_csv(text: str) -> dict[int, Posterior]:
    rows = list(csv.DictReader(line for line in text.splitlines() if not line.startswith("#")))
    out = {}
    for lab in dict.fromkeys(r["n_measurements"] for r in rows):
        sel = [r for r in rows if r["n_measurements"] == lab]
        b = np.array([float(r["B"]) for r in sel])
        grid = FieldGrid(float(b[0]), float(b[-1]), len(b))
        out[int(lab)] = Posterior(grid, np.array([float(r["density"]) for r in sel]))
    return out


def summary_json(summary: ErrorSummary, meta: Mapping[str, object] | None = None) -> str:
    doc = {
        "mean": summary.mean,
        "variance": summary.variance,
        "deltaB2": summary.deltaB2,
        "deltaB": summary.deltaB,
        "metadata": dict(meta or {}),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def error_table_csv(cells: Iterable[ErrorCell], J: float = 1.0, meta=None) -> str:
    rows = [(c.n_seq, c.B / J, c.T * J, c.M_sam, c.deltaB_bar, c.stderr) for c in cells]
    return csv_text(["n_seq", "B_over_J", "JT", "M_sam", "deltaB_bar", "stderr"], rows, meta)


def read_error_table(text: str, J: float = 1.0) -> list[ErrorCell]:
    reader = csv.DictReader(line for line in text.splitlines() if not line.startswith("#"))
    return [
        ErrorCell(
            int(r["n_seq"]),
            float(r["B_over_J"]) * J,
            float(r["JT"]) / J,
            int(r["M_sam"]),
            float(r["deltaB_bar"]),
            float(r["stderr"]),
        )
        for r in reader
    ]


def fits_csv(fits: Mapping[int, ScalingFit], meta=None) -> str:
    rows = [(f.n_seq, f.delta, f.delta_spread, f.A, f.alpha, f.residual) for f in fits.values()]
    return csv_text(["n_seq", "Delta_mean", "Delta_spread", "A", "alpha", "residual"], rows, meta)


def metadata_json(meta: Mapping[str, object]) -> str:
    return json.dumps(meta, indent=2, sort_keys=True, default=str) + "\n"
