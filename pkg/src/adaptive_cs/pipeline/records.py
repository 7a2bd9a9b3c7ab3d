"""Per-frame metrics and their CSV representation."""

from __future__ import annotations

import csv
from dataclasses import astuple, dataclass, fields

__all__ = ["CSV_HEADER", "FrameMetrics", "read_csv", "write_csv"]

CSV_HEADER = ("frame", "m_k", "phi_k", "bound_l1l1_oracle", "bound_cs_oracle",
              "est_err", "rec_err", "s_hat", "xi_hat", "hbar_hat", "flags")


@dataclass(frozen=True)
class FrameMetrics:
    """One CSV row. Missing quantities are ``None`` and written as empty cells."""

    frame: int
    m_k: int
    phi_k: float | None
    bound_l1l1_oracle: float | None
    bound_cs_oracle: float | None
    est_err: float | None
    rec_err: float | None
    s_hat: int | None
    xi_hat: int | None
    hbar_hat: int | None
    flags: tuple[str, ...] = ()


_INT_FIELDS = {"frame", "m_k", "s_hat", "xi_hat", "hbar_hat"}


def _cell(name, value):
    if name == "flags":
        return ";".join(value)
    if value is None:
        return ""
    if name in _INT_FIELDS:
        return str(int(value))
    # repr round-trips floats exactly
    return repr(float(value))


def _parse(name, text):
    if name == "flags":
        return tuple(text.split(";")) if text else ()
    if text == "":
        return None
    return int(text) if name in _INT_FIELDS else float(text)


def write_csv(metrics, path):
    names = [f.name for f in fields(FrameMetrics)]
    assert tuple(names) == CSV_HEADER
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in metrics:
            writer.writerow([_cell(n, v) for n, v in zip(names, astuple(row))])


def read_csv(path) -> list[FrameMetrics]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        return [FrameMetrics(**{n: _parse(n, t) for n, t in zip(CSV_HEADER, row)})
                for row in reader]
