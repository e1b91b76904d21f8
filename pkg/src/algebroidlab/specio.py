"""JSON serialization for algebroids and paths.

File format (1-based indices at this boundary only):

{
  "dimension": 3,
  "rank": 3,
  "labels": ["x1", "x2", "x3"],            // optional
  "anchor": [["0", "-x3", "x2"], ...],      // rank rows of dimension entries
  "bracket": [
    {"s": 1, "t": 2, "u": 3, "value": "-1"},
    ...
  ],
  "metadata": {"kind": ..., "params": ...}  // optional
}

Bracket entries list c[s][t][u]; the (t, s, u) entry is filled in with the
opposite sign automatically. Listing both orientations is allowed as long
as they agree.

A document may instead give top-level "kind" and "params", which are fed
to the catalog builder (dimension/rank/anchor/bracket are then ignored).
"""

from __future__ import annotations

import json

import numpy as np

from .algebroid import (
    LieAlgebroid,
    TransformationData,
    VectorField,
    build_algebroid,
    catalog_build,
)
from .errors import AntisymmetryViolationError, ShapeMismatchError
from .fields import Chart, ScalarField, parse_field


def algebroid_from_dict(data):
    if "kind" in data:
        built = catalog_build(data["kind"], data.get("params", {}))
        extra = data.get("metadata")
        if extra:
            merged = dict(extra)
            merged.update(built.metadata)
            built.metadata = merged
        return built
    m = int(data["dimension"])
    r = int(data["rank"])
    labels = data.get("labels")
    chart = Chart(m, tuple(labels)) if labels else Chart(m)
    anchor_rows = data.get("anchor")
    if anchor_rows is None:
        anchor_rows = [["0"] * m for _ in range(r)]
    if len(anchor_rows) != r:
        raise ShapeMismatchError(
            "anchor needs %d rows, got %d" % (r, len(anchor_rows)))
    anchor = [[parse_field(chart, str(v)) for v in row] for row in anchor_rows]

    given = {}
    for entry in data.get("bracket", []):
        s, t, u = int(entry["s"]) - 1, int(entry["t"]) - 1, int(entry["u"]) - 1
        for idx in (s, t, u):
            if not 0 <= idx < r:
                raise ShapeMismatchError(
                    "bracket index out of range in %r" % (entry,))
        f = parse_field(chart, str(entry["value"]))
        if (s, t, u) in given:
            given[(s, t, u)] = given[(s, t, u)] + f
        else:
            given[(s, t, u)] = f

    tensor = np.empty((r, r, r), dtype=object)
    zero = ScalarField(chart)
    tensor[...] = zero
    for (s, t, u), f in given.items():
        if (t, s, u) in given:
            if not (f + given[(t, s, u)]).is_zero():
                raise AntisymmetryViolationError(
                    "entries (%d,%d,%d) and (%d,%d,%d) are not opposite"
                    % (s + 1, t + 1, u + 1, t + 1, s + 1, u + 1))
            tensor[s, t, u] = f
        else:
            tensor[s, t, u] = f
            tensor[t, s, u] = -f

    metadata = data.get("metadata") or {}
    if metadata.get("kind") == "transformation" and "params" in metadata:
        params = metadata["params"]
        constants = np.asarray(params["constants"], dtype=float)
        fields = [VectorField(chart, [parse_field(chart, str(c)) for c in row])
                  for row in params["fields"]]
        metadata = dict(metadata)
        metadata["data"] = TransformationData(constants, fields, chart=chart)
    return build_algebroid(chart, r, anchor, tensor, metadata)


def algebroid_to_dict(algebroid):
    m = algebroid.dimension
    r = algebroid.rank
    entries = []
    for s in range(r):
        for t in range(s + 1, r):
            for u in range(r):
                f = algebroid.bracket[s, t, u]
                if not f.is_zero():
                    entries.append({"s": s + 1, "t": t + 1, "u": u + 1,
                                    "value": f.to_string()})
    out = {
        "dimension": m,
        "rank": r,
        "labels": list(algebroid.chart.labels),
        "anchor": [[f.to_string() for f in row] for row in algebroid.anchor],
        "bracket": entries,
    }
    meta = {k: v for k, v in algebroid.metadata.items() if k != "data"}
    if meta:
        out["metadata"] = meta
    return out


def load_algebroid(path):
    with open(path) as fh:
        return algebroid_from_dict(json.load(fh))


def save_algebroid(algebroid, path):
    with open(path, "w") as fh:
        json.dump(algebroid_to_dict(algebroid), fh, indent=2, sort_keys=True)
        fh.write("\n")


def path_from_dict(algebroid, data):
    from .transport import APath

    t_chart = Chart(1, ("t",))
    segments = []
    for seg in data["segments"]:
        gamma = [parse_field(t_chart, str(g)) for g in seg["gamma"]]
        coeffs = [parse_field(t_chart, str(a)) for a in seg["coeffs"]]
        segments.append((float(seg["t0"]), float(seg["t1"]), gamma, coeffs))
    return APath(algebroid, segments)


def load_path(algebroid, path):
    with open(path) as fh:
        return path_from_dict(algebroid, json.load(fh))
