"""Bit-stable serialization of models, traces, and certificates.

Floats are written with 17 significant digits (lossless for doubles);
JSON objects are dumped with sorted keys and fixed separators, so equal
inputs give byte-identical files.  Deep-pullback coordinates collapse at
17 digits by design: their information lives in the error column and in
the certificate's offset strings.
"""

from __future__ import annotations

import csv
import io
import json

from .hairs import HairPolyline, WiggleCertificate, certificate_to_dict
from .logdyn import DisjointTypeModel, model_from_dict, model_to_dict


def fmt17(x) -> str:
    return format(float(x), ".17g")


def dumps_canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, separators=(",", ": ")) \
        + "\n"


def write_json(obj, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_canonical(obj))


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def write_model(model: DisjointTypeModel, path) -> None:
    write_json(model_to_dict(model), path)


def read_model(path) -> DisjointTypeModel:
    return model_from_dict(read_json(path))


def write_certificate(cert: WiggleCertificate, path) -> None:
    write_json(certificate_to_dict(cert), path)


def hair_csv_text(polyline: HairPolyline) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["param", "re", "im", "depth", "err"])
    for s in polyline.samples:
        writer.writerow([
            fmt17(s.param),
            fmt17(float(s.point.real)),
            fmt17(float(s.point.imag)),
            s.depth,
            s.err_text(),
        ])
    return buf.getvalue()


def write_hair_csv(polyline: HairPolyline, path) -> None:
    with open(path, "w") as fh:
        fh.write(hair_csv_text(polyline))


def boundary_csv_text(samples) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "re", "im", "tangent_re", "tangent_im"])
    for s in samples:
        writer.writerow([
            fmt17(s.t),
            fmt17(s.point.real),
            fmt17(s.point.imag),
            fmt17(s.tangent.real),
            fmt17(s.tangent.imag),
        ])
    return buf.getvalue()


def write_boundary_csv(samples, path) -> None:
    with open(path, "w") as fh:
        fh.write(boundary_csv_text(samples))


def flatten_for_csv(data: dict, prefix: str = "") -> list[tuple[str, str]]:
    """Depth-first flattening of a JSON-like dict into (key, value) rows."""
    rows: list[tuple[str, str]] = []
    if isinstance(data, dict):
        for key in sorted(data):
            rows.extend(flatten_for_csv(data[key], f"{prefix}{key}."))
    elif isinstance(data, (list, tuple)):
        for i, item in enumerate(data):
            rows.extend(flatten_for_csv(item, f"{prefix}{i}."))
    else:
        val = fmt17(data) if isinstance(data, float) else str(data)
        rows.append((prefix.rstrip("."), val))
    return rows


def generic_csv_text(data: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["key", "value"])
    for key, val in flatten_for_csv(data):
        writer.writerow([key, val])
    return buf.getvalue()
