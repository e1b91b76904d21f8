"""Lie algebroid structure data on a single chart.

An algebroid is stored as an anchor matrix b[s][i] and a bracket tensor
c[s][t][u] of polynomial fields over a chart, relative to a trivializing
frame of rank r. Axioms are checked by sampling (validate); pointwise
linear algebra (rank, isotropy, linearization) uses numpy.
"""

from __future__ import annotations

from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AlgebroidMismatchError,
    AntisymmetryViolationError,
    DimensionMismatchError,
    JacobiViolationError,
    NotABivectorError,
    NotClosedError,
    ShapeMismatchError,
)
from .fields import Chart, ScalarField, parse_field
from .sampling import seeded_points

RANK_CUTOFF = 1e-9


def _as_field(chart, value):
    if isinstance(value, ScalarField):
        if value.chart != chart:
            raise DimensionMismatchError("field lives on a different chart")
        return value
    if isinstance(value, str):
        return parse_field(chart, value)
    return ScalarField.constant(chart, float(value))


class VectorField:
    """Vector field on a chart, one polynomial component per coordinate."""

    __slots__ = ("chart", "comps")

    def __init__(self, chart, comps):
        comps = [_as_field(chart, c) for c in comps]
        if len(comps) != chart.dimension:
            raise DimensionMismatchError(
                "vector field needs %d components, got %d"
                % (chart.dimension, len(comps)))
        self.chart = chart
        self.comps = comps

    def apply(self, f):
        """Directional derivative of a scalar field."""
        out = ScalarField(self.chart)
        for i, x in enumerate(self.comps):
            out = out + x * f.partial(i)
        return out

    def evaluate(self, p):
        return np.array([c.evaluate(p) for c in self.comps])

    def __repr__(self):
        return "VectorField(%s)" % ", ".join(str(c) for c in self.comps)


def vector_field_bracket(x, y):
    """Commutator [x, y] of two vector fields on the same chart."""
    if x.chart != y.chart:
        raise DimensionMismatchError("vector fields on different charts")
    comps = []
    for i in range(x.chart.dimension):
        term = ScalarField(x.chart)
        for j in range(x.chart.dimension):
            term = term + x.comps[j] * y.comps[i].partial(j)
            term = term - y.comps[j] * x.comps[i].partial(j)
        comps.append(term)
    return VectorField(x.chart, comps)


class Section:
    """Section of the algebroid written in the chart frame."""

    __slots__ = ("algebroid", "coeffs")

    def __init__(self, algebroid, coeffs):
        coeffs = [_as_field(algebroid.chart, c) for c in coeffs]
        if len(coeffs) != algebroid.rank:
            raise ShapeMismatchError(
                "section needs %d coefficients, got %d"
                % (algebroid.rank, len(coeffs)))
        self.algebroid = algebroid
        self.coeffs = coeffs

    def __add__(self, other):
        if not isinstance(other, Section):
            return NotImplemented
        if other.algebroid is not self.algebroid:
            raise AlgebroidMismatchError("sections of different algebroids")
        return Section(self.algebroid,
                       [a + b for a, b in zip(self.coeffs, other.coeffs)])

    def __rmul__(self, f):
        return Section(self.algebroid, [f * a for a in self.coeffs])

    __mul__ = __rmul__

    def __neg__(self):
        return Section(self.algebroid, [-a for a in self.coeffs])

    def __sub__(self, other):
        return self + (-other)

    def evaluate(self, p):
        return np.array([a.evaluate(p) for a in self.coeffs])

    def __repr__(self):
        return "Section(%s)" % ", ".join(str(a) for a in self.coeffs)


class LieAlgebroid:
    """Anchor and bracket structure data over a chart frame.

    Sections, forms, and connections are tied to the instance that created
    them; mixing instances raises AlgebroidMismatchError even if the data
    agree.
    """

    def __init__(self, chart, rank, anchor, bracket, metadata=None):
        self.chart = chart
        self.rank = rank
        self.anchor = anchor      # list of rank rows, each a list of m fields
        self.bracket = bracket    # (r, r, r) object ndarray of fields
        self.metadata = dict(metadata or {})

    @property
    def dimension(self):
        return self.chart.dimension

    def section(self, coeffs):
        return Section(self, coeffs)

    def frame_section(self, s):
        coeffs = [0.0] * self.rank
        coeffs[s] = 1.0
        return Section(self, coeffs)

    def frame_sections(self):
        return [self.frame_section(s) for s in range(self.rank)]

    def anchor_row(self, s):
        return VectorField(self.chart, self.anchor[s])

    def anchor_matrix_at(self, p):
        p = self.chart.check_point(p)
        out = np.zeros((self.rank, self.dimension))
        for s in range(self.rank):
            for i in range(self.dimension):
                out[s, i] = self.anchor[s][i].evaluate(p)
        return out

    def bracket_at(self, p):
        p = self.chart.check_point(p)
        r = self.rank
        out = np.zeros((r, r, r))
        for s in range(r):
            for t in range(r):
                for u in range(r):
                    out[s, t, u] = self.bracket[s, t, u].evaluate(p)
        return out

    def __repr__(self):
        return "LieAlgebroid(m=%d, r=%d)" % (self.dimension, self.rank)


def build_algebroid(chart, rank, anchor, bracket, metadata=None):
    """Assemble an algebroid after shape and antisymmetry checks.

    The Jacobi identity and the anchor-morphism axiom are not verified here;
    use validate for that.
    """
    rank = int(rank)
    if rank < 1:
        raise ShapeMismatchError("rank must be positive")
    m = chart.dimension
    anchor = list(anchor)
    if len(anchor) != rank:
        raise ShapeMismatchError(
            "anchor needs %d rows, got %d" % (rank, len(anchor)))
    rows = []
    for row in anchor:
        row = [_as_field(chart, v) for v in row]
        if len(row) != m:
            raise ShapeMismatchError(
                "anchor row has %d entries, chart dimension is %d"
                % (len(row), m))
        rows.append(row)

    tensor = np.empty((rank, rank, rank), dtype=object)
    bracket = np.asarray(bracket, dtype=object)
    if bracket.shape != (rank, rank, rank):
        raise ShapeMismatchError(
            "bracket tensor must have shape %r, got %r"
            % ((rank, rank, rank), bracket.shape))
    for s in range(rank):
        for t in range(rank):
            for u in range(rank):
                tensor[s, t, u] = _as_field(chart, bracket[s, t, u])
    for s in range(rank):
        for t in range(s, rank):
            for u in range(rank):
                total = tensor[s, t, u] + tensor[t, s, u]
                if not total.is_zero():
                    raise AntisymmetryViolationError(
                        "c[%d,%d,%d] + c[%d,%d,%d] is not zero"
                        % (s, t, u, t, s, u))
    return LieAlgebroid(chart, rank, rows, tensor, metadata)


def anchor_apply(algebroid, section):
    """Image of a section under the anchor, as a vector field."""
    if section.algebroid is not algebroid:
        raise AlgebroidMismatchError("section of a different algebroid")
    comps = []
    for i in range(algebroid.dimension):
        total = ScalarField(algebroid.chart)
        for s in range(algebroid.rank):
            total = total + section.coeffs[s] * algebroid.anchor[s][i]
        comps.append(total)
    return VectorField(algebroid.chart, comps)


def bracket_sections(algebroid, alpha, beta):
    """Bracket of two sections in the chart frame.

    Coefficient u of the result is
    sum_{s,t} a_s b_t c[s,t,u] + (#alpha)(b_u) - (#beta)(a_u),
    the unique extension of the frame bracket by bilinearity and the
    Leibniz rule.
    """
    if alpha.algebroid is not algebroid or beta.algebroid is not algebroid:
        raise AlgebroidMismatchError("sections of a different algebroid")
    xa = anchor_apply(algebroid, alpha)
    xb = anchor_apply(algebroid, beta)
    out = []
    for u in range(algebroid.rank):
        total = ScalarField(algebroid.chart)
        for s in range(algebroid.rank):
            for t in range(algebroid.rank):
                cstu = algebroid.bracket[s, t, u]
                if not cstu.is_zero():
                    total = total + alpha.coeffs[s] * beta.coeffs[t] * cstu
        total = total + xa.apply(beta.coeffs[u]) - xb.apply(alpha.coeffs[u])
        out.append(total)
    return Section(algebroid, out)


@dataclass
class ValidationReport:
    anchor_residual: float
    jacobi_residual: float
    antisymmetry_residual: float
    tol: float
    n_points: int
    seed: int | None = None

    @property
    def anchor_pass(self):
        return self.anchor_residual <= self.tol

    @property
    def jacobi_pass(self):
        return self.jacobi_residual <= self.tol

    @property
    def antisymmetry_pass(self):
        return self.antisymmetry_residual <= self.tol

    @property
    def passed(self):
        return self.anchor_pass and self.jacobi_pass and self.antisymmetry_pass


def validate(algebroid, points=None, tol=1e-10, n_samples=50, seed=0):
    """Sample the axiom residuals and report the maxima.

    Checks, at every point: the anchor sends frame brackets to vector-field
    commutators; the cyclic Jacobi sum of bracket_sections on basis triples
    vanishes; the bracket tensor is antisymmetric.
    """
    m = algebroid.dimension
    r = algebroid.rank
    if points is None:
        pts = [tuple(p) for p in seeded_points(n_samples, m, seed)]
    else:
        pts = [algebroid.chart.check_point(p) for p in points]
        seed = None
    if not pts:
        raise ValueError("at least one sample point is required")

    def poly_max(fields_list):
        worst = 0.0
        for f in fields_list:
            if f.is_zero():
                continue
            for p in pts:
                worst = max(worst, abs(f.evaluate(p)))
        return worst

    anti = []
    for s in range(r):
        for t in range(s, r):
            for u in range(r):
                anti.append(algebroid.bracket[s, t, u]
                            + algebroid.bracket[t, s, u])
    antisym_res = poly_max(anti)

    anchor_defects = []
    frames = algebroid.frame_sections()
    for s in range(r):
        for t in range(s + 1, r):
            br = bracket_sections(algebroid, frames[s], frames[t])
            lhs = anchor_apply(algebroid, br)
            rhs = vector_field_bracket(algebroid.anchor_row(s),
                                       algebroid.anchor_row(t))
            anchor_defects.extend(a - b for a, b in zip(lhs.comps, rhs.comps))
    anchor_res = poly_max(anchor_defects)

    jacobi_defects = []
    for s in range(r):
        for t in range(s + 1, r):
            for u in range(t + 1, r):
                j = bracket_sections(
                    algebroid,
                    bracket_sections(algebroid, frames[s], frames[t]),
                    frames[u])
                j = j + bracket_sections(
                    algebroid,
                    bracket_sections(algebroid, frames[t], frames[u]),
                    frames[s])
                j = j + bracket_sections(
                    algebroid,
                    bracket_sections(algebroid, frames[u], frames[s]),
                    frames[t])
                jacobi_defects.extend(j.coeffs)
    jacobi_res = poly_max(jacobi_defects)

    return ValidationReport(anchor_res, jacobi_res, antisym_res,
                            tol, len(pts), seed)


def anchor_rank_at(algebroid, p):
    """Numerical rank of the anchor matrix at a point."""
    b = algebroid.anchor_matrix_at(p)
    if b.size == 0:
        return 0
    sv = np.linalg.svd(b, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > RANK_CUTOFF * sv[0]))


IsotropyData = namedtuple("IsotropyData", ["basis", "constants", "residual"])


def _kernel_basis(b):
    """Orthonormal basis of left null space, deterministic sign/order."""
    r = b.shape[0]
    if b.shape[1] == 0:
        return np.eye(r)
    u, sv, _vt = np.linalg.svd(b)
    if sv.size and sv[0] > 0.0:
        rank = int(np.sum(sv > RANK_CUTOFF * sv[0]))
    else:
        rank = 0
    kernel = u[:, rank:].copy()
    for a in range(kernel.shape[1]):
        col = kernel[:, a]
        i = int(np.argmax(np.abs(col)))
        if col[i] < 0:
            kernel[:, a] = -col
    return kernel


def isotropy_at(algebroid, p, tol=1e-9):
    """Kernel of the anchor at p with its induced Lie algebra structure."""
    p = algebroid.chart.check_point(p)
    b = algebroid.anchor_matrix_at(p)
    kernel = _kernel_basis(b)
    k = kernel.shape[1]
    c_p = algebroid.bracket_at(p)
    # bracket of kernel vectors, expressed back in the kernel basis
    w = np.einsum("sa,tb,stu->abu", kernel, kernel, c_p)
    proj = np.einsum("abu,uc,vc->abv", w, kernel, kernel)
    residual = float(np.max(np.abs(w - proj))) if k else 0.0
    if residual > tol:
        raise NotClosedError(
            "kernel bracket leaves the kernel (residual %.3e)" % residual)
    constants = np.einsum("abu,uc->abc", w, kernel)
    return IsotropyData(kernel, constants, residual)


@dataclass
class TransformationData:
    """A Lie algebra action: constants plus one vector field per generator."""

    constants: np.ndarray
    fields: list
    chart: Chart = None
    kernel_basis: np.ndarray = None
    normal_basis: np.ndarray = None
    jacobi_tol: float = 1e-12

    def __post_init__(self):
        self.constants = np.asarray(self.constants, dtype=float)
        n = self.constants.shape[0]
        if self.constants.shape != (n, n, n):
            raise ShapeMismatchError("structure constants must be (n, n, n)")
        if len(self.fields) != n:
            raise ShapeMismatchError(
                "need %d action fields, got %d" % (n, len(self.fields)))
        if self.chart is None:
            self.chart = self.fields[0].chart if self.fields else Chart(0)
        for f in self.fields:
            if f.chart != self.chart:
                raise DimensionMismatchError("action fields on mixed charts")
        anti = np.max(np.abs(self.constants
                             + np.swapaxes(self.constants, 0, 1))) if n else 0.0
        if anti > self.jacobi_tol:
            raise AntisymmetryViolationError(
                "constants not antisymmetric (defect %.3e)" % anti)
        jac = constants_jacobiator(self.constants)
        worst = np.max(np.abs(jac)) if jac.size else 0.0
        if worst > self.jacobi_tol:
            raise JacobiViolationError(
                "structure constants fail Jacobi (defect %.3e)" % worst)

    @property
    def algebra_dim(self):
        return self.constants.shape[0]


def constants_jacobiator(c):
    """Cyclic Jacobi defect tensor of constant structure data."""
    c = np.asarray(c, dtype=float)
    term = np.einsum("stw,wuv->stuv", c, c)
    return (term
            + np.einsum("tuw,wsv->stuv", c, c)
            + np.einsum("usw,wtv->stuv", c, c))


def linearize_at(algebroid, p, tol=1e-9):
    """Isotropy algebra plus its linearized action on the normal space at p.

    The normal space is the quotient of the chart tangent by the anchor
    image, realized by the coordinate directions that extend the image to a
    full basis (taken in order, orthonormalized). The action matrices are
    the anchor Jacobians of the kernel generators compressed to that
    complement.
    """
    p = algebroid.chart.check_point(p)
    iso = isotropy_at(algebroid, p, tol=tol)
    m = algebroid.dimension
    b = algebroid.anchor_matrix_at(p)
    if m:
        _u, sv, vt = np.linalg.svd(b)
        if sv.size and sv[0] > 0.0:
            rank = int(np.sum(sv > RANK_CUTOFF * sv[0]))
        else:
            rank = 0
        q = [vt[i] for i in range(rank)]
        normal = []
        for i in range(m):
            w = np.zeros(m)
            w[i] = 1.0
            for col in q:
                w = w - np.dot(col, w) * col
            norm = np.linalg.norm(w)
            if norm > 1e-9:
                w = w / norm
                q.append(w)
                normal.append(w)
        normal = np.array(normal).T if normal else np.zeros((m, 0))
    else:
        normal = np.zeros((0, 0))

    n_dim = normal.shape[1]
    k = iso.basis.shape[1]
    jac = np.zeros((k, m, m))
    for a in range(k):
        for i in range(m):
            for j in range(m):
                total = 0.0
                for s in range(algebroid.rank):
                    total += iso.basis[s, a] * \
                        algebroid.anchor[s][i].partial(j).evaluate(p)
                jac[a, i, j] = total
    normal_chart = Chart(n_dim)
    fields = []
    for a in range(k):
        act = normal.T @ jac[a] @ normal if n_dim else np.zeros((0, 0))
        comps = []
        for i in range(n_dim):
            entry = ScalarField(normal_chart)
            for j in range(n_dim):
                entry = entry + act[i, j] * ScalarField.coordinate(normal_chart, j)
            comps.append(entry)
        fields.append(VectorField(normal_chart, comps))
    return TransformationData(iso.constants, fields, chart=normal_chart,
                              kernel_basis=iso.basis, normal_basis=normal,
                              jacobi_tol=max(1e-12, 10 * iso.residual))


def _bracket_entries_to_tensor(chart, rank, entries):
    tensor = np.empty((rank, rank, rank), dtype=object)
    zero = ScalarField(chart)
    tensor[...] = zero
    if isinstance(entries, dict):
        for (s, t, u), value in entries.items():
            f = _as_field(chart, value)
            tensor[s, t, u] = tensor[s, t, u] + f
            tensor[t, s, u] = tensor[t, s, u] - f
    else:
        arr = np.asarray(entries, dtype=object)
        if arr.shape != (rank, rank, rank):
            raise ShapeMismatchError(
                "bracket data must be (r, r, r) or a sparse dict")
        for idx in np.ndindex(rank, rank, rank):
            tensor[idx] = _as_field(chart, arr[idx])
    return tensor


def catalog_build(kind, params):
    """Construct one of the stock algebroid families.

    kind is one of lie_algebra, tangent, poisson, transformation,
    lie_algebra_bundle. params is a dict; field entries may be expression
    strings, numbers, or ScalarFields.
    """
    if kind == "lie_algebra":
        constants = np.asarray(params["constants"], dtype=float)
        n = constants.shape[0]
        if constants.shape != (n, n, n):
            raise ShapeMismatchError("constants must be (n, n, n)")
        anti = np.max(np.abs(constants + np.swapaxes(constants, 0, 1))) if n else 0.0
        if anti > 1e-12:
            raise AntisymmetryViolationError(
                "constants not antisymmetric (defect %.3e)" % anti)
        jac = constants_jacobiator(constants)
        if jac.size and np.max(np.abs(jac)) > 1e-10:
            raise JacobiViolationError(
                "constants fail Jacobi (defect %.3e)" % np.max(np.abs(jac)))
        chart = Chart(0)
        anchor = [[] for _ in range(n)]
        meta = {"kind": kind, "params": {"constants": constants.tolist()}}
        return build_algebroid(chart, n, anchor, constants, meta)

    if kind == "tangent":
        m = int(params["dimension"])
        chart = Chart(m)
        anchor = [[1.0 if i == s else 0.0 for i in range(m)] for s in range(m)]
        bracket = np.zeros((m, m, m))
        meta = {"kind": kind, "params": {"dimension": m}}
        return build_algebroid(chart, m, anchor, bracket, meta)

    if kind == "poisson":
        m = int(params["dimension"])
        chart = Chart(m)
        pi = params["bivector"]
        rows = [[_as_field(chart, pi[i][j]) for j in range(m)] for i in range(m)]
        for i in range(m):
            for j in range(i, m):
                if not (rows[i][j] + rows[j][i]).is_zero():
                    raise NotABivectorError(
                        "bivector entry (%d,%d) breaks antisymmetry" % (i, j))
        bracket = np.empty((m, m, m), dtype=object)
        for i in range(m):
            for j in range(m):
                for k in range(m):
                    bracket[i, j, k] = rows[i][j].partial(k)
        meta = {"kind": kind, "params": {
            "dimension": m,
            "bivector": [[rows[i][j].to_string() for j in range(m)]
                         for i in range(m)]}}
        return build_algebroid(chart, m, rows, bracket, meta)

    if kind == "transformation":
        data = params.get("data")
        if data is None:
            m = int(params["dimension"])
            chart = Chart(m)
            constants = np.asarray(params["constants"], dtype=float)
            fields = [VectorField(chart, row) for row in params["fields"]]
            data = TransformationData(constants, fields, chart=chart)
        chart = data.chart
        n = data.algebra_dim
        anchor = [list(f.comps) for f in data.fields]
        bracket = np.empty((n, n, n), dtype=object)
        for s in range(n):
            for t in range(n):
                for u in range(n):
                    bracket[s, t, u] = ScalarField.constant(
                        chart, data.constants[s, t, u])
        meta = {"kind": kind,
                "params": {
                    "dimension": chart.dimension,
                    "constants": data.constants.tolist(),
                    "fields": [[c.to_string() for c in f.comps]
                               for f in data.fields]},
                "data": data}
        return build_algebroid(chart, n, anchor, bracket, meta)

    if kind == "lie_algebra_bundle":
        m = int(params["dimension"])
        r = int(params["rank"])
        chart = Chart(m)
        tensor = _bracket_entries_to_tensor(chart, r, params["bracket"])
        for s in range(r):
            for t in range(s, r):
                for u in range(r):
                    if not (tensor[s, t, u] + tensor[t, s, u]).is_zero():
                        raise AntisymmetryViolationError(
                            "bracket entry (%d,%d,%d) breaks antisymmetry"
                            % (s, t, u))
        pts = seeded_points(20, m, 0)
        worst = 0.0
        for p in pts:
            jac = constants_jacobiator(
                np.array([[[tensor[s, t, u].evaluate(p) for u in range(r)]
                           for t in range(r)] for s in range(r)]))
            if jac.size:
                worst = max(worst, float(np.max(np.abs(jac))))
        if worst > 1e-10:
            raise JacobiViolationError(
                "bracket fails Jacobi pointwise (defect %.3e)" % worst)
        anchor = [[0.0] * m for _ in range(r)]
        entries = []
        for s in range(r):
            for t in range(s + 1, r):
                for u in range(r):
                    if not tensor[s, t, u].is_zero():
                        entries.append({"s": s + 1, "t": t + 1, "u": u + 1,
                                        "value": tensor[s, t, u].to_string()})
        meta = {"kind": kind, "params": {
            "dimension": m, "rank": r, "bracket": entries}}
        return build_algebroid(chart, r, anchor, tensor, meta)

    raise ValueError("unknown catalog kind %r" % (kind,))
