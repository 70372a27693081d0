"""Versioned text documents for every value the command line handles.

The format is JSON-shaped and human-readable.  A document is one object
with three fields: ``format_version`` (the string ``"1"``), ``kind``
(one of the names in :data:`KINDS`), and a kind-specific ``payload``.
Integers are arbitrary precision; rational numbers travel as strings in
lowest terms (``"3/4"``, ``"-2"``).

Emission is canonical and bit-exact — sorted keys, two-space
indentation, one fixed ordering for cones, face maps, assignments, and
functionals — so equal values emit byte-identical files and diffs are
meaningful.  Parsing then emitting reproduces a canonical file exactly.

Unknown fields are rejected when parsing strictly (the default) and
collected as warnings in lenient mode.  Domain validation (the
structural validators of each module) runs after decoding unless
switched off.
"""

import json
from fractions import Fraction

from .cone import Cone
from .complexes import (
    Complex,
    FaceMap,
    Subdivision,
    validate_complex,
    validate_subdivision,
)
from .intlinalg import IntMatrix, Lattice
from .morphism import (
    Alteration,
    ComplexMorphism,
    LatticeAlteration,
    MorphismReport,
    validate_alteration,
    validate_lattice_alteration,
    validate_morphism,
)
from .plfun import (
    GoodnessCertificate,
    PLFunction,
    validate_plfunction,
)

__all__ = [
    "Document",
    "DocumentError",
    "FORMAT_VERSION",
    "KINDS",
    "emit_document",
    "kind_of",
    "parse_document",
]

FORMAT_VERSION = "1"

KINDS = (
    "complex",
    "morphism",
    "subdivision",
    "lattice-alteration",
    "alteration",
    "pl-function",
    "certificate",
    "report",
)


class DocumentError(ValueError):
    """A document could not be parsed or emitted.

    ``problems`` carries the individual findings (domain-validator
    reports, field errors); the message summarizes them."""

    def __init__(self, message, problems=()):
        self.problems = list(problems)
        if self.problems:
            message = message + ": " + "; ".join(str(p) for p in self.problems)
        super().__init__(message)


class Document:
    """A parsed document: its ``kind``, the reconstructed ``value``, and
    any ``warnings`` collected during lenient parsing."""

    __slots__ = ("kind", "value", "warnings")

    def __init__(self, kind, value, warnings=()):
        self.kind = kind
        self.value = value
        self.warnings = tuple(warnings)

    def __repr__(self):
        extra = f", {len(self.warnings)} warnings" if self.warnings else ""
        return f"Document(kind={self.kind!r}{extra})"


# ---------------------------------------------------------------------------
# decoding helpers


class _Reader:
    """Field-checked traversal of parsed JSON with path-aware errors."""

    def __init__(self, strict):
        self.strict = strict
        self.warnings = []

    def fail(self, path, message):
        raise DocumentError(f"{path}: {message}")

    def obj(self, x, path, required, optional=()):
        if not isinstance(x, dict):
            self.fail(path, f"expected an object, got {type(x).__name__}")
        for key in required:
            if key not in x:
                self.fail(path, f"missing field {key!r}")
        known = set(required) | set(optional)
        for key in x:
            if key not in known:
                if self.strict:
                    self.fail(path, f"unknown field {key!r}")
                self.warnings.append(f"{path}: ignoring unknown field {key!r}")
        return x

    def integer(self, x, path):
        if isinstance(x, bool) or not isinstance(x, int):
            self.fail(path, f"expected an integer, got {x!r}")
        return x

    def boolean(self, x, path):
        if not isinstance(x, bool):
            self.fail(path, f"expected true or false, got {x!r}")
        return x

    def string(self, x, path):
        if not isinstance(x, str):
            self.fail(path, f"expected a string, got {type(x).__name__}")
        return x

    def array(self, x, path):
        if not isinstance(x, list):
            self.fail(path, f"expected an array, got {type(x).__name__}")
        return x

    def rational(self, x, path):
        self.string(x, path)
        try:
            value = Fraction(x)
        except (ValueError, ZeroDivisionError):
            self.fail(path, f"expected a rational as 'p/q' or 'p', got {x!r}")
        return value

    def vector(self, x, path):
        return tuple(
            self.integer(v, f"{path}[{i}]") for i, v in enumerate(self.array(x, path))
        )

    def matrix(self, x, path):
        m = self.obj(x, path, ("rows", "cols", "entries"))
        rows = self.integer(m["rows"], f"{path}.rows")
        cols = self.integer(m["cols"], f"{path}.cols")
        if rows < 0 or cols < 0:
            self.fail(path, "matrix shape must be nonnegative")
        entries = self.array(m["entries"], f"{path}.entries")
        if len(entries) != rows:
            self.fail(path, f"expected {rows} rows, got {len(entries)}")
        decoded = []
        for i, row in enumerate(entries):
            r = self.vector(row, f"{path}.entries[{i}]")
            if len(r) != cols:
                self.fail(path, f"row {i} has {len(r)} entries, expected {cols}")
            decoded.append(r)
        return IntMatrix(decoded, shape=(rows, cols))

    # -- domain values ------------------------------------------------

    def cone(self, x, path):
        c = self.obj(x, path, ("ambient_dim", "rays"))
        n = self.integer(c["ambient_dim"], f"{path}.ambient_dim")
        if n < 0:
            self.fail(path, "ambient_dim must be nonnegative")
        rays = [
            self.vector(r, f"{path}.rays[{i}]")
            for i, r in enumerate(self.array(c["rays"], f"{path}.rays"))
        ]
        for i, r in enumerate(rays):
            if len(r) != n:
                self.fail(path, f"ray {i} has {len(r)} entries, expected {n}")
        try:
            if not rays:
                return Cone.zero(n)
            return Cone.from_rays(n, rays)
        except ValueError as e:
            self.fail(path, str(e))

    def complex(self, x, path):
        c = self.obj(x, path, ("cones", "face_maps"), ("name",))
        name = self.string(c.get("name", ""), f"{path}.name")
        cones = [
            self.cone(item, f"{path}.cones[{i}]")
            for i, item in enumerate(self.array(c["cones"], f"{path}.cones"))
        ]
        maps = []
        for i, item in enumerate(self.array(c["face_maps"], f"{path}.face_maps")):
            fm = self.obj(item, f"{path}.face_maps[{i}]", ("sub", "sup", "matrix"))
            sub = self.integer(fm["sub"], f"{path}.face_maps[{i}].sub")
            sup = self.integer(fm["sup"], f"{path}.face_maps[{i}].sup")
            matrix = self.matrix(fm["matrix"], f"{path}.face_maps[{i}].matrix")
            try:
                maps.append(FaceMap(sub, sup, matrix))
            except ValueError as e:
                self.fail(f"{path}.face_maps[{i}]", str(e))
        try:
            return Complex(cones, maps, name)
        except ValueError as e:
            self.fail(path, str(e))

    def _pairing(self, x, path, source, target, cone_key, image_key, matrix_key):
        """A per-source-cone (target id, matrix) table, given as a list
        of objects covering each source cone exactly once."""
        entries = {}
        for i, item in enumerate(self.array(x, path)):
            row = self.obj(item, f"{path}[{i}]", (cone_key, image_key, matrix_key))
            sid = self.integer(row[cone_key], f"{path}[{i}].{cone_key}")
            tid = self.integer(row[image_key], f"{path}[{i}].{image_key}")
            matrix = self.matrix(row[matrix_key], f"{path}[{i}].{matrix_key}")
            if not 0 <= sid < len(source.cones):
                self.fail(f"{path}[{i}]", f"{cone_key} {sid} out of range")
            if not 0 <= tid < len(target.cones):
                self.fail(f"{path}[{i}]", f"{image_key} {tid} out of range")
            if sid in entries:
                self.fail(f"{path}[{i}]", f"{cone_key} {sid} listed twice")
            entries[sid] = (tid, matrix)
        missing = [sid for sid in range(len(source.cones)) if sid not in entries]
        if missing:
            self.fail(path, f"no entry for cones {missing}")
        return tuple(entries[sid] for sid in range(len(source.cones)))

    def morphism(self, x, path):
        m = self.obj(x, path, ("source", "target", "assignment"))
        source = self.complex(m["source"], f"{path}.source")
        target = self.complex(m["target"], f"{path}.target")
        assignment = self._pairing(
            m["assignment"], f"{path}.assignment", source, target,
            "cone", "image", "matrix",
        )
        try:
            return ComplexMorphism(source, target, assignment)
        except ValueError as e:
            self.fail(path, str(e))

    def subdivision(self, x, path, allow_certificate=True):
        keys = ("source", "target", "hosting")
        s = self.obj(x, path, keys, ("certificate",) if allow_certificate else ())
        source = self.complex(s["source"], f"{path}.source")
        target = self.complex(s["target"], f"{path}.target")
        hosting = self._pairing(
            s["hosting"], f"{path}.hosting", source, target,
            "piece", "host", "embedding",
        )
        sub = Subdivision(source, target, hosting)
        cert = s.get("certificate")
        if cert is not None:
            sub.certificate = self.certificate_body(cert, f"{path}.certificate", sub)
        return sub

    def functionals(self, x, path, sub):
        rows = {}
        for i, item in enumerate(self.array(x, path)):
            row = self.obj(item, f"{path}[{i}]", ("piece", "row"))
            sid = self.integer(row["piece"], f"{path}[{i}].piece")
            if not 0 <= sid < len(sub.source.cones):
                self.fail(f"{path}[{i}]", f"piece {sid} out of range")
            if sid in rows:
                self.fail(f"{path}[{i}]", f"piece {sid} listed twice")
            rows[sid] = tuple(
                self.rational(v, f"{path}[{i}].row[{j}]")
                for j, v in enumerate(self.array(row["row"], f"{path}[{i}].row"))
            )
        return rows

    def plfunction(self, x, path):
        p = self.obj(x, path, ("subdivision", "functionals"))
        sub = self.subdivision(p["subdivision"], f"{path}.subdivision")
        rows = self.functionals(p["functionals"], f"{path}.functionals", sub)
        try:
            return PLFunction(sub, rows)
        except ValueError as e:
            self.fail(path, str(e))

    def certificate_body(self, x, path, sub):
        """The certificate fields that accompany an already-decoded
        subdivision: the function rows and the strictness witnesses."""
        c = self.obj(x, path, ("functionals", "witnesses"))
        rows = self.functionals(c["functionals"], f"{path}.functionals", sub)
        try:
            fn = PLFunction(sub, rows)
        except ValueError as e:
            self.fail(path, str(e))
        witnesses = {}
        for i, item in enumerate(self.array(c["witnesses"], f"{path}.witnesses")):
            w = self.obj(item, f"{path}.witnesses[{i}]", ("pieces", "ray", "margin"))
            pair = self.array(w["pieces"], f"{path}.witnesses[{i}].pieces")
            if len(pair) != 2:
                self.fail(f"{path}.witnesses[{i}]", "pieces must list two piece ids")
            a = self.integer(pair[0], f"{path}.witnesses[{i}].pieces[0]")
            b = self.integer(pair[1], f"{path}.witnesses[{i}].pieces[1]")
            u = self.vector(w["ray"], f"{path}.witnesses[{i}].ray")
            margin = self.rational(w["margin"], f"{path}.witnesses[{i}].margin")
            if (a, b) in witnesses:
                self.fail(f"{path}.witnesses[{i}]", f"pieces [{a}, {b}] listed twice")
            witnesses[(a, b)] = (u, margin)
        return GoodnessCertificate(fn, witnesses)

    def certificate(self, x, path):
        c = self.obj(x, path, ("subdivision", "functionals", "witnesses"))
        sub = self.subdivision(c["subdivision"], f"{path}.subdivision")
        return self.certificate_body(
            {"functionals": c["functionals"], "witnesses": c["witnesses"]},
            path,
            sub,
        )

    def sublattices(self, x, path, base):
        out = {}
        for i, item in enumerate(self.array(x, path)):
            row = self.obj(item, f"{path}[{i}]", ("cone", "basis"))
            cid = self.integer(row["cone"], f"{path}[{i}].cone")
            if not 0 <= cid < len(base.cones):
                self.fail(f"{path}[{i}]", f"cone {cid} out of range")
            if cid in out:
                self.fail(f"{path}[{i}]", f"cone {cid} listed twice")
            basis = self.matrix(row["basis"], f"{path}[{i}].basis")
            n = base.cone(cid).ambient_dim
            if basis.nrows != n:
                self.fail(
                    f"{path}[{i}].basis",
                    f"basis rows must match the cone's dimension {n}",
                )
            out[cid] = Lattice.from_generators(n, basis.columns())
        return out

    def lattice_alteration(self, x, path):
        a = self.obj(x, path, ("base", "sublattices"))
        base = self.complex(a["base"], f"{path}.base")
        subs = self.sublattices(a["sublattices"], f"{path}.sublattices", base)
        try:
            return LatticeAlteration(base, subs)
        except ValueError as e:
            self.fail(path, str(e))

    def alteration(self, x, path):
        a = self.obj(x, path, ("subdivision", "sublattices"))
        sub = self.subdivision(a["subdivision"], f"{path}.subdivision")
        subs = self.sublattices(a["sublattices"], f"{path}.sublattices", sub.source)
        try:
            return Alteration(sub, LatticeAlteration(sub.source, subs))
        except ValueError as e:
            self.fail(path, str(e))

    def report(self, x, path):
        r = self.obj(
            x,
            path,
            ("subject",),
            (
                "equidimensional",
                "weakly_semistable",
                "semistable",
                "preimage_zero_trivial",
                "ray_multiplicities",
                "witnesses",
                "cones",
                "property",
                "holds",
            ),
        )
        subject = self.string(r["subject"], f"{path}.subject")
        if subject == "morphism":
            for key in (
                "equidimensional",
                "weakly_semistable",
                "semistable",
                "preimage_zero_trivial",
                "ray_multiplicities",
                "witnesses",
            ):
                if key not in r:
                    self.fail(path, f"missing field {key!r}")
            mults = {}
            for i, item in enumerate(
                self.array(r["ray_multiplicities"], f"{path}.ray_multiplicities")
            ):
                row = self.obj(
                    item,
                    f"{path}.ray_multiplicities[{i}]",
                    ("ray", "image", "multiplicity"),
                )
                rid = self.integer(row["ray"], f"{path}.ray_multiplicities[{i}].ray")
                image = row["image"]
                if image is not None:
                    image = self.integer(
                        image, f"{path}.ray_multiplicities[{i}].image"
                    )
                k = self.integer(
                    row["multiplicity"],
                    f"{path}.ray_multiplicities[{i}].multiplicity",
                )
                mults[rid] = (image, k)
            witnesses = []
            for i, item in enumerate(self.array(r["witnesses"], f"{path}.witnesses")):
                w = self.obj(item, f"{path}.witnesses[{i}]", ("cone", "reason"))
                witnesses.append(
                    (
                        self.integer(w["cone"], f"{path}.witnesses[{i}].cone"),
                        self.string(w["reason"], f"{path}.witnesses[{i}].reason"),
                    )
                )
            try:
                return MorphismReport(
                    self.boolean(r["equidimensional"], f"{path}.equidimensional"),
                    self.boolean(r["weakly_semistable"], f"{path}.weakly_semistable"),
                    self.boolean(r["semistable"], f"{path}.semistable"),
                    self.boolean(
                        r["preimage_zero_trivial"], f"{path}.preimage_zero_trivial"
                    ),
                    mults,
                    witnesses,
                )
            except ValueError as e:
                self.fail(path, str(e))
        # other subjects (per-cone smoothness tables, property checks)
        # stay as plain data
        return dict(x)


# ---------------------------------------------------------------------------
# encoding


def _enc_matrix(m: IntMatrix):
    return {
        "rows": m.nrows,
        "cols": m.ncols,
        "entries": [list(row) for row in m.entries],
    }


def _enc_cone(cone: Cone):
    return {
        "ambient_dim": cone.ambient_dim,
        "rays": [list(r) for r in cone.rays],
    }


def _enc_complex(c: Complex):
    maps = sorted(
        c.face_maps, key=lambda fm: (fm.sub, fm.sup, fm.matrix.entries)
    )
    return {
        "name": c.name,
        "cones": [_enc_cone(cone) for cone in c.cones],
        "face_maps": [
            {"sub": fm.sub, "sup": fm.sup, "matrix": _enc_matrix(fm.matrix)}
            for fm in maps
        ],
    }


def _enc_morphism(f: ComplexMorphism):
    return {
        "source": _enc_complex(f.source),
        "target": _enc_complex(f.target),
        "assignment": [
            {"cone": sid, "image": tid, "matrix": _enc_matrix(m)}
            for sid, (tid, m) in enumerate(f.assignment)
        ],
    }


def _enc_subdivision(s: Subdivision, include_certificate=True):
    payload = {
        "source": _enc_complex(s.source),
        "target": _enc_complex(s.target),
        "hosting": [
            {"piece": sid, "host": tid, "embedding": _enc_matrix(m)}
            for sid, (tid, m) in enumerate(s.hosting)
        ],
    }
    if include_certificate:
        cert = getattr(s, "certificate", None)
        payload["certificate"] = (
            None if cert is None else _enc_certificate_body(cert)
        )
    return payload


def _enc_functionals(functionals):
    return [
        {"piece": sid, "row": [str(Fraction(v)) for v in row]}
        for sid, row in sorted(functionals.items())
    ]


def _enc_certificate_body(cert: GoodnessCertificate):
    return {
        "functionals": _enc_functionals(cert.plfunction.functionals),
        "witnesses": [
            {
                "pieces": [a, b],
                "ray": list(u),
                "margin": str(Fraction(margin)),
            }
            for (a, b), (u, margin) in sorted(cert.strictness_witnesses.items())
        ],
    }


def _enc_plfunction(p: PLFunction):
    return {
        "subdivision": _enc_subdivision(p.subdivision),
        "functionals": _enc_functionals(p.functionals),
    }


def _enc_certificate(cert: GoodnessCertificate):
    body = _enc_certificate_body(cert)
    return {
        "subdivision": _enc_subdivision(
            cert.plfunction.subdivision, include_certificate=False
        ),
        "functionals": body["functionals"],
        "witnesses": body["witnesses"],
    }


def _enc_sublattices(sublattices):
    return [
        {"cone": cid, "basis": _enc_matrix(lattice.basis)}
        for cid, lattice in enumerate(sublattices)
    ]


def _enc_lattice_alteration(a: LatticeAlteration):
    return {
        "base": _enc_complex(a.base),
        "sublattices": _enc_sublattices(a.sublattices),
    }


def _enc_alteration(a: Alteration):
    return {
        "subdivision": _enc_subdivision(a.subdivision_part),
        "sublattices": _enc_sublattices(a.lattice_part.sublattices),
    }


def _enc_report(r: MorphismReport):
    return {
        "subject": "morphism",
        "equidimensional": r.equidimensional,
        "weakly_semistable": r.weakly_semistable,
        "semistable": r.semistable,
        "preimage_zero_trivial": r.preimage_zero_trivial,
        "ray_multiplicities": [
            {"ray": rid, "image": image, "multiplicity": k}
            for rid, (image, k) in sorted(r.ray_multiplicities.items())
        ],
        "witnesses": [
            {"cone": cid, "reason": reason}
            for cid, reason in r.failing_witnesses
        ],
    }


_DECODERS = {
    "complex": lambda rd, x: rd.complex(x, "payload"),
    "morphism": lambda rd, x: rd.morphism(x, "payload"),
    "subdivision": lambda rd, x: rd.subdivision(x, "payload"),
    "lattice-alteration": lambda rd, x: rd.lattice_alteration(x, "payload"),
    "alteration": lambda rd, x: rd.alteration(x, "payload"),
    "pl-function": lambda rd, x: rd.plfunction(x, "payload"),
    "certificate": lambda rd, x: rd.certificate(x, "payload"),
    "report": lambda rd, x: rd.report(x, "payload"),
}


def _domain_problems(kind, value):
    if kind == "complex":
        return validate_complex(value)
    if kind == "morphism":
        return validate_morphism(value)
    if kind == "subdivision":
        return validate_subdivision(value)
    if kind == "lattice-alteration":
        return validate_lattice_alteration(value)
    if kind == "alteration":
        return validate_alteration(value)
    if kind == "pl-function":
        return validate_plfunction(value)
    if kind == "certificate":
        return validate_plfunction(value.plfunction)
    return []


def parse_document(text, strict=True, validate=True) -> Document:
    """Parse one document.

    ``strict`` rejects unknown fields; otherwise they are collected as
    warnings on the returned :class:`Document`.  ``validate`` runs the
    matching structural validator after decoding and raises
    :class:`DocumentError` carrying its findings."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise DocumentError(
            f"syntax error at line {e.lineno}, column {e.colno}: {e.msg}"
        ) from None
    rd = _Reader(strict)
    top = rd.obj(data, "document", ("format_version", "kind", "payload"))
    version = rd.string(top["format_version"], "document.format_version")
    if version != FORMAT_VERSION:
        raise DocumentError(
            f"unsupported format version {version!r} (this reader handles "
            f"{FORMAT_VERSION!r})"
        )
    kind = rd.string(top["kind"], "document.kind")
    if kind not in KINDS:
        raise DocumentError(
            f"unknown document kind {kind!r} (expected one of {', '.join(KINDS)})"
        )
    value = _DECODERS[kind](rd, top["payload"])
    if validate:
        problems = _domain_problems(kind, value)
        if problems:
            raise DocumentError(
                f"the {kind} violates its structural invariants", problems
            )
    return Document(kind, value, rd.warnings)


def kind_of(value) -> str:
    """The document kind that holds this value."""
    if isinstance(value, Complex):
        return "complex"
    if isinstance(value, ComplexMorphism):
        return "morphism"
    if isinstance(value, Subdivision):
        return "subdivision"
    if isinstance(value, LatticeAlteration):
        return "lattice-alteration"
    if isinstance(value, Alteration):
        return "alteration"
    if isinstance(value, PLFunction):
        return "pl-function"
    if isinstance(value, GoodnessCertificate):
        return "certificate"
    if isinstance(value, (MorphismReport, dict)):
        return "report"
    raise DocumentError(f"no document kind holds values of type {type(value).__name__}")


_ENCODERS = {
    "complex": _enc_complex,
    "morphism": _enc_morphism,
    "subdivision": _enc_subdivision,
    "lattice-alteration": _enc_lattice_alteration,
    "alteration": _enc_alteration,
    "pl-function": _enc_plfunction,
    "certificate": _enc_certificate,
    "report": lambda v: _enc_report(v) if isinstance(v, MorphismReport) else dict(v),
}


def emit_document(value, kind=None) -> str:
    """The canonical text of ``value`` as a document.  The kind is
    inferred from the value's type unless given."""
    if kind is None:
        kind = kind_of(value)
    if kind not in KINDS:
        raise DocumentError(f"unknown document kind {kind!r}")
    payload = _ENCODERS[kind](value)
    return (
        json.dumps(
            {"format_version": FORMAT_VERSION, "kind": kind, "payload": payload},
            sort_keys=True,
            indent=2,
        )
        + "\n"
    )
