"""Linear connections along algebroid directions.

Symbols are stored as Gamma[s][t][u] with the convention
nabla_{alpha^s} e_t = sum_u Gamma[s][t][u] e_u, where s runs over the
algebroid frame and t, u over the frame of the target bundle. Supported
bundles: the algebroid itself ("A"), the chart tangent ("TM"), its dual
("T*M"), and E = A + T*M ("E").
"""

from __future__ import annotations

import numpy as np

from .algebroid import Section, anchor_apply, bracket_sections
from .calculus import MatrixForm, _poly_det
from .errors import (
    AlgebroidMismatchError,
    BundleMismatchError,
    NotInvertibleError,
    ShapeMismatchError,
)
from .fields import ScalarField, parse_field

BUNDLES = ("A", "TM", "T*M", "E")


def bundle_rank(algebroid, bundle):
    if bundle == "A":
        return algebroid.rank
    if bundle in ("TM", "T*M"):
        return algebroid.dimension
    if bundle == "E":
        return algebroid.rank + algebroid.dimension
    raise ShapeMismatchError("unknown bundle tag %r" % (bundle,))


def _coerce_field(chart, v):
    if isinstance(v, ScalarField):
        return v
    if isinstance(v, str):
        return parse_field(chart, v)
    return ScalarField.constant(chart, float(v))


class AConnection:
    """Christoffel data for one bundle over one algebroid."""

    __slots__ = ("algebroid", "bundle", "q", "symbols")

    def __init__(self, algebroid, bundle, symbols):
        self.algebroid = algebroid
        self.bundle = bundle
        self.q = bundle_rank(algebroid, bundle)
        self.symbols = symbols

    def __repr__(self):
        return "AConnection(bundle=%s, q=%d)" % (self.bundle, self.q)


def build_connection(algebroid, bundle, symbols):
    """Validate shapes and wrap a symbol tensor as a connection."""
    q = bundle_rank(algebroid, bundle)
    r = algebroid.rank
    arr = np.asarray(symbols, dtype=object)
    if arr.shape != (r, q, q):
        raise ShapeMismatchError(
            "symbols must have shape %r, got %r" % ((r, q, q), arr.shape))
    out = np.empty((r, q, q), dtype=object)
    for idx in np.ndindex(r, q, q):
        out[idx] = _coerce_field(algebroid.chart, arr[idx])
    return AConnection(algebroid, bundle, out)


def connection_matrix(conn, section):
    """Matrix of nabla_section on the bundle frame, columns are inputs."""
    if section.algebroid is not conn.algebroid:
        raise AlgebroidMismatchError("section of a different algebroid")
    chart = conn.algebroid.chart
    q = conn.q
    omega = np.empty((q, q), dtype=object)
    for u in range(q):
        for t in range(q):
            total = ScalarField(chart)
            for s in range(conn.algebroid.rank):
                g = conn.symbols[s, t, u]
                if not g.is_zero():
                    total = total + section.coeffs[s] * g
            omega[u, t] = total
    return omega


class TensorSection:
    """Tensor field over one bundle; upper axes first, then lower axes."""

    __slots__ = ("algebroid", "bundle", "n_upper", "n_lower", "comps")

    def __init__(self, algebroid, bundle, n_upper, n_lower, comps):
        q = bundle_rank(algebroid, bundle)
        shape = (q,) * (n_upper + n_lower)
        arr = np.asarray(comps, dtype=object)
        if arr.shape != shape:
            raise ShapeMismatchError(
                "tensor components must have shape %r, got %r"
                % (shape, arr.shape))
        out = np.empty(shape, dtype=object)
        for idx in np.ndindex(*shape):
            out[idx] = _coerce_field(algebroid.chart, arr[idx])
        self.algebroid = algebroid
        self.bundle = bundle
        self.n_upper = int(n_upper)
        self.n_lower = int(n_lower)
        self.comps = out

    @property
    def tensor_type(self):
        return (self.n_lower, self.n_upper)

    def evaluate(self, p):
        shape = self.comps.shape
        out = np.zeros(shape)
        for idx in np.ndindex(*shape):
            out[idx] = self.comps[idx].evaluate(p)
        return out

    def max_abs_coeff(self):
        return max((f.max_abs_coeff() for f in self.comps.flat), default=0.0)

    def __sub__(self, other):
        if (other.algebroid is not self.algebroid
                or other.bundle != self.bundle
                or other.comps.shape != self.comps.shape):
            raise ShapeMismatchError("tensor mismatch")
        out = np.empty(self.comps.shape, dtype=object)
        for idx in np.ndindex(*self.comps.shape):
            out[idx] = self.comps[idx] - other.comps[idx]
        return TensorSection(self.algebroid, self.bundle,
                             self.n_upper, self.n_lower, out)


def section_tensor(conn, section):
    """View an algebroid section as a rank-1 tensor over bundle A."""
    return TensorSection(conn.algebroid, "A", 1, 0,
                         np.array(section.coeffs, dtype=object))


def a_derivative(conn, alpha, target):
    """Covariant derivative along a section.

    Accepts an algebroid Section (bundle A only) or a TensorSection over
    the connection's bundle. Upper slots receive the symbols positively,
    lower slots with the opposite sign, so that contractions obey the
    Leibniz rule.
    """
    if alpha.algebroid is not conn.algebroid:
        raise AlgebroidMismatchError("direction section of a different algebroid")
    if isinstance(target, Section):
        if conn.bundle != "A":
            raise BundleMismatchError(
                "plain sections live in bundle A, connection is on %s"
                % conn.bundle)
        result = a_derivative(conn, alpha, section_tensor(conn, target))
        return Section(conn.algebroid, list(result.comps))
    if target.algebroid is not conn.algebroid:
        raise AlgebroidMismatchError("tensor over a different algebroid")
    if target.bundle != conn.bundle:
        raise BundleMismatchError(
            "tensor over bundle %s, connection on %s"
            % (target.bundle, conn.bundle))
    direction = anchor_apply(conn.algebroid, alpha)
    omega = connection_matrix(conn, alpha)
    q = conn.q
    shape = target.comps.shape
    out = np.empty(shape, dtype=object)
    for idx in np.ndindex(*shape):
        total = direction.apply(target.comps[idx])
        for pos in range(target.n_upper):
            for dummy in range(q):
                w = omega[idx[pos], dummy]
                if w.is_zero():
                    continue
                jdx = idx[:pos] + (dummy,) + idx[pos + 1:]
                total = total + w * target.comps[jdx]
        for pos in range(target.n_upper, target.n_upper + target.n_lower):
            for dummy in range(q):
                w = omega[dummy, idx[pos]]
                if w.is_zero():
                    continue
                jdx = idx[:pos] + (dummy,) + idx[pos + 1:]
                total = total - w * target.comps[jdx]
        out[idx] = total
    return TensorSection(conn.algebroid, conn.bundle,
                         target.n_upper, target.n_lower, out)


def torsion(conn):
    """Torsion tensor of a connection on bundle A, via the symbols."""
    if conn.bundle != "A":
        raise BundleMismatchError("torsion needs a connection on bundle A")
    a = conn.algebroid
    r = a.rank
    comps = np.empty((r, r, r), dtype=object)
    for u in range(r):
        for s in range(r):
            for t in range(r):
                comps[u, s, t] = (conn.symbols[s, t, u]
                                  - conn.symbols[t, s, u]
                                  - a.bracket[s, t, u])
    return TensorSection(a, "A", 1, 2, comps)


def torsion_applied(conn, alpha, beta):
    """Torsion evaluated through the derivative operator and the bracket."""
    a = conn.algebroid
    return (a_derivative(conn, alpha, beta)
            - a_derivative(conn, beta, alpha)
            - bracket_sections(a, alpha, beta))


def curvature(conn):
    """Curvature as a matrix-valued 2-form, from the coordinate formula."""
    a = conn.algebroid
    r = a.rank
    q = conn.q
    gamma = conn.symbols
    entries = {}
    for s in range(r):
        for t in range(s + 1, r):
            mat = np.empty((q, q), dtype=object)
            for u in range(q):
                for v in range(q):
                    total = a.anchor_row(s).apply(gamma[t, u, v]) \
                        - a.anchor_row(t).apply(gamma[s, u, v])
                    for w in range(q):
                        total = total + gamma[t, u, w] * gamma[s, w, v]
                        total = total - gamma[s, u, w] * gamma[t, w, v]
                    for w in range(a.rank):
                        c = a.bracket[s, t, w]
                        if not c.is_zero():
                            total = total - c * gamma[w, u, v]
                    # matrix rows are output components
                    mat[v, u] = total
            entries[(s, t)] = mat
    return MatrixForm(a, 2, q, entries)


def curvature_applied(conn, alpha, beta, target):
    """Curvature through second derivatives, usable as an oracle."""
    a = conn.algebroid
    first = a_derivative(conn, beta, target)
    second = a_derivative(conn, alpha, target)
    out = a_derivative(conn, alpha, first)
    out = out - a_derivative(conn, beta, second)
    br = bracket_sections(a, alpha, beta)
    return out - a_derivative(conn, br, target)


def local_curvature(conn):
    """Curvature assembled from connection matrices of the frame."""
    a = conn.algebroid
    r = a.rank
    frames = a.frame_sections()
    mats = [connection_matrix(conn, e) for e in frames]
    entries = {}
    for s in range(r):
        for t in range(s + 1, r):
            term = _apply_field_to_matrix(a.anchor_row(s), mats[t])
            term = _mat_sub(term, _apply_field_to_matrix(a.anchor_row(t), mats[s]))
            term = _mat_add(term, _mat_mul(mats[s], mats[t]))
            term = _mat_sub(term, _mat_mul(mats[t], mats[s]))
            br = Section(a, list(a.bracket[s, t, :]))
            term = _mat_sub(term, connection_matrix(conn, br))
            entries[(s, t)] = term
    return MatrixForm(a, 2, conn.q, entries)


def _apply_field_to_matrix(vf, mat):
    out = np.empty(mat.shape, dtype=object)
    for idx in np.ndindex(*mat.shape):
        out[idx] = vf.apply(mat[idx])
    return out


def _mat_add(a, b):
    out = np.empty(a.shape, dtype=object)
    for idx in np.ndindex(*a.shape):
        out[idx] = a[idx] + b[idx]
    return out


def _mat_sub(a, b):
    out = np.empty(a.shape, dtype=object)
    for idx in np.ndindex(*a.shape):
        out[idx] = a[idx] - b[idx]
    return out


def _mat_mul(a, b):
    n = a.shape[0]
    chart = a[0, 0].chart
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            total = ScalarField(chart)
            for k in range(n):
                if a[i, k].is_zero() or b[k, j].is_zero():
                    continue
                total = total + a[i, k] * b[k, j]
            out[i, j] = total
    return out


class FrameChange:
    """Invertible polynomial change of a bundle frame.

    The determinant must be a nonzero constant so the inverse stays
    polynomial (covers constant and unipotent triangular changes).
    """

    __slots__ = ("chart", "size", "matrix", "inverse", "det")

    def __init__(self, chart, matrix):
        arr = np.asarray(matrix, dtype=object)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ShapeMismatchError("frame change must be a square matrix")
        n = arr.shape[0]
        out = np.empty((n, n), dtype=object)
        for idx in np.ndindex(n, n):
            out[idx] = _coerce_field(chart, arr[idx])
        det = _poly_det([[out[i, j] for j in range(n)] for i in range(n)])
        if det is None:
            raise ShapeMismatchError("empty frame change")
        if not det.is_constant():
            raise NotInvertibleError(
                "determinant %s is not constant; inverse would not be "
                "polynomial" % det)
        d = det.constant_value()
        if abs(d) < 1e-12:
            raise NotInvertibleError("determinant vanishes")
        inv = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                minor = [[out[a, b] for b in range(n) if b != i]
                         for a in range(n) if a != j]
                if minor:
                    cof = _poly_det(minor)
                else:
                    cof = ScalarField.constant(chart, 1.0)
                if (i + j) % 2:
                    cof = -cof
                inv[i, j] = (1.0 / d) * cof
        self.chart = chart
        self.size = n
        self.matrix = out
        self.inverse = inv
        self.det = d

    @classmethod
    def identity(cls, chart, n):
        return cls(chart, np.eye(n))


def transform_symbols(conn, change):
    """Rewrite the symbols in a new frame.

    On bundle A the change reindexes both the direction slot and the
    bundle slots; on the other bundles only the bundle frame moves.
    """
    a = conn.algebroid
    if change.size != conn.q:
        raise ShapeMismatchError(
            "frame change size %d does not match bundle rank %d"
            % (change.size, conn.q))
    if change.chart != a.chart:
        raise ShapeMismatchError("frame change lives on a different chart")
    r = a.rank
    q = conn.q
    mat = change.matrix
    inv = change.inverse
    zero = ScalarField(a.chart)
    full = conn.bundle == "A"

    # core[s, t', u] = #alpha_s(a^{t'}_u) + sum_t a^{t'}_t Gamma[s, t, u]
    core = np.empty((r, q, q), dtype=object)
    for s in range(r):
        row = a.anchor_row(s)
        for tp in range(q):
            for u in range(q):
                total = row.apply(mat[tp, u])
                for t in range(q):
                    g = conn.symbols[s, t, u]
                    if not g.is_zero():
                        total = total + mat[tp, t] * g
                core[s, tp, u] = total

    out = np.empty((r, q, q), dtype=object)
    for tp in range(q):
        for up in range(q):
            for s in range(r):
                total = zero
                for u in range(q):
                    if not core[s, tp, u].is_zero():
                        total = total + core[s, tp, u] * inv[u, up]
                out[s, tp, up] = total
    if not full:
        return AConnection(a, conn.bundle, out)
    final = np.empty((r, q, q), dtype=object)
    for sp in range(r):
        for tp in range(q):
            for up in range(q):
                total = zero
                for s in range(r):
                    if not out[s, tp, up].is_zero():
                        total = total + mat[sp, s] * out[s, tp, up]
                final[sp, tp, up] = total
    return AConnection(a, "A", final)


def transform_algebroid(algebroid, change):
    """Anchor and bracket data of the same algebroid in a new frame."""
    from .algebroid import build_algebroid

    a = algebroid
    if change.size != a.rank or change.chart != a.chart:
        raise ShapeMismatchError("frame change does not fit the algebroid")
    r = a.rank
    mat = change.matrix
    inv = change.inverse
    anchor = []
    for sp in range(r):
        row = []
        for i in range(a.dimension):
            total = ScalarField(a.chart)
            for s in range(r):
                if not a.anchor[s][i].is_zero():
                    total = total + mat[sp, s] * a.anchor[s][i]
            row.append(total)
        anchor.append(row)
    new_frames = [Section(a, list(mat[sp, :])) for sp in range(r)]
    bracket = np.empty((r, r, r), dtype=object)
    zero = ScalarField(a.chart)
    bracket[...] = zero
    for sp in range(r):
        for tp in range(sp, r):
            if sp == tp:
                continue
            w = bracket_sections(a, new_frames[sp], new_frames[tp])
            for up in range(r):
                total = zero
                for u in range(r):
                    if not w.coeffs[u].is_zero():
                        total = total + w.coeffs[u] * inv[u, up]
                bracket[sp, tp, up] = total
                bracket[tp, sp, up] = -total
    meta = dict(a.metadata)
    meta.pop("kind", None)
    meta.pop("params", None)
    return build_algebroid(a.chart, r, anchor, bracket, meta or None)


def compatible_connection(algebroid):
    """The bracket connection on A with its anchor-compatible mate on TM.

    The TM symbols are set so that transporting the anchor image of a
    frame section reproduces the anchor of its bracket derivative, which
    makes #(nabla beta) equal nabla-check(#beta) identically.
    """
    a = algebroid
    r = a.rank
    m = a.dimension
    conn_a = AConnection(a, "A", a.bracket.copy())
    symbols = np.empty((r, m, m), dtype=object)
    for s in range(r):
        for i in range(m):
            for j in range(m):
                symbols[s, i, j] = -a.anchor[s][j].partial(i)
    conn_tm = AConnection(a, "TM", symbols)
    return conn_a, conn_tm


def basic_connection(algebroid):
    """Block connection on E = A + T*M: bracket block plus dual block."""
    a = algebroid
    r = a.rank
    m = a.dimension
    q = r + m
    zero = ScalarField(a.chart)
    symbols = np.empty((r, q, q), dtype=object)
    symbols[...] = zero
    for s in range(r):
        for t in range(r):
            for u in range(r):
                symbols[s, t, u] = a.bracket[s, t, u]
        for i in range(m):
            for j in range(m):
                symbols[s, r + i, r + j] = a.anchor[s][i].partial(j)
    return AConnection(a, "E", symbols)


def flat_metric_connection(algebroid):
    """Zero symbols on E; the chart frame is treated as orthonormal."""
    a = algebroid
    q = a.rank + a.dimension
    zero = ScalarField(a.chart)
    symbols = np.empty((a.rank, q, q), dtype=object)
    symbols[...] = zero
    return AConnection(a, "E", symbols)
