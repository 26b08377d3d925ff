"""Command-line front end: ``compute``, ``verify``, ``show-labels``, ``cache-gc``."""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import tempfile
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .ktheory import KEntry, KGroupTable, assemble_integral, even_vanishing_bound
from .padic_linalg import AbelianPGroup, PadicMatrix, PrecisionError
from .prism_envelope import FieldSpec, InvalidFieldSpec
from .syntomic import (
    BASIS_VERSION,
    SyntomicComplex,
    cohomology_of_complex,
    syntomic_cohomology,
)

log = logging.getLogger("kchain")

MACHINE_SCHEMA = "kchain.ktable"
MACHINE_SCHEMA_VERSION = 1
CACHE_FORMAT = "kchain.syncomplex"
CACHE_FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# bundled reference tables


@dataclass(frozen=True)
class ReferenceTable:
    """Exponent lists keyed by ``(n, r)``."""

    key: str
    label: str
    p: int
    eisenstein: tuple[int, ...]
    source: str
    entries: dict[tuple[int, int], tuple[int, ...]]
    note: str | None = None

    @property
    def spec(self) -> FieldSpec:
        return FieldSpec(self.p, self.eisenstein, label=self.label)

    def lengths(self) -> list[int]:
        return sorted({n for n, _ in self.entries})

    @classmethod
    def from_json(cls, key: str, data: dict) -> "ReferenceTable":
        entries = {}
        for rec in data["entries"]:
            k = (int(rec["n"]), int(rec["r"]))
            if k in entries:
                raise ValueError(f"{key}: duplicate entry {k}")
            entries[k] = tuple(sorted(int(v) for v in rec["exponents"]))
        return cls(key, data["label"], int(data["p"]), tuple(data["eisenstein"]), data["source"], entries, data.get("note"))

    def to_json(self) -> dict:
        d = {"label": self.label, "p": self.p, "eisenstein": list(self.eisenstein), "source": self.source}
        if self.note:
            d["note"] = self.note
        d["entries"] = [{"n": n, "r": r, "exponents": list(e)} for (n, r), e in sorted(self.entries.items())]
        return d


def bundled_references() -> dict[str, ReferenceTable]:
    out = {}
    for path in sorted(resources.files("kchain").joinpath("data").iterdir(), key=lambda p: p.name):
        if path.name.endswith(".json"):
            key = path.name[: -len(".json")]
            out[key] = ReferenceTable.from_json(key, json.loads(path.read_text()))
    return out


def load_reference(name: str) -> ReferenceTable:
    """A bundled key (``z4``, ``2.2.2.1``, ...) or a path to a JSON file."""
    refs = bundled_references()
    if name in refs:
        return refs[name]
    path = Path(name)
    if path.is_file():
        return ReferenceTable.from_json(path.stem, json.loads(path.read_text()))
    raise KeyError(f"unknown reference {name!r}; known: {', '.join(refs)}")


def find_reference(spec: FieldSpec, n: int) -> ReferenceTable | None:
    for ref in bundled_references().values():
        if ref.p == spec.p and ref.eisenstein == spec.eisenstein and n in ref.lengths():
            return ref
    return None


# ---------------------------------------------------------------------------
# cache


def spec_digest(spec: FieldSpec) -> str:
    blob = json.dumps(spec.digest_fields(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def _checksum(payload: dict) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


class ResultCache:
    """Syntomic complexes on disk, one checksummed JSON file per key."""

    def __init__(self, root: str | os.PathLike, basis_version: int = BASIS_VERSION):
        self.root = Path(root)
        self.basis_version = basis_version
        self.root.mkdir(parents=True, exist_ok=True)

    def _stem(self, spec: FieldSpec, n: int, i: int) -> str:
        return f"{spec_digest(spec)[:24]}_n{n}_i{i}"

    def path(self, spec: FieldSpec, n: int, i: int, N: int) -> Path:
        return self.root / f"{self._stem(spec, n, i)}_N{N}_v{self.basis_version}.json"

    def candidates(self, spec: FieldSpec, n: int, i: int) -> list[tuple[int, Path]]:
        """Stored working precisions for this key, lowest first."""
        out = []
        suffix = f"_v{self.basis_version}.json"
        for path in self.root.glob(self._stem(spec, n, i) + "_N*" + suffix):
            try:
                out.append((int(path.name.rsplit("_N", 1)[1][: -len(suffix)]), path))
            except ValueError:
                continue
        return sorted(out)

    def store(self, cx: SyntomicComplex, working_precision: int) -> Path:
        payload = {
            "spec": cx.spec.digest_fields(),
            "n": cx.n,
            "i": cx.i,
            "working_precision": working_precision,
            "basis_version": cx.basis_version,
            "p": cx.syn0.p,
            "N": cx.syn0.N,
            "syn0": cx.syn0.balanced(),
            "syn1": cx.syn1.balanced(),
        }
        doc = {"format": CACHE_FORMAT, "format_version": CACHE_FORMAT_VERSION, "sha256": _checksum(payload), "payload": payload}
        target = self.path(cx.spec, cx.n, cx.i, working_precision)
        fd, tmp = tempfile.mkstemp(dir=self.root, suffix=".tmp")
        with os.fdopen(fd, "w") as fh:
            json.dump(doc, fh, separators=(",", ":"))
        os.replace(tmp, target)
        return target

    @staticmethod
    def read(path: Path) -> dict:
        """Validated payload of a cache file; raises ValueError if corrupt."""
        try:
            doc = json.loads(path.read_text())
            payload = doc["payload"]
            ok = doc.get("format") == CACHE_FORMAT and doc.get("sha256") == _checksum(payload)
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise ValueError(f"unreadable cache entry {path.name}: {exc}") from exc
        if not ok:
            raise ValueError(f"checksum mismatch in {path.name}")
        return payload

    def load(self, spec: FieldSpec, n: int, i: int, N: int) -> SyntomicComplex | None:
        path = self.path(spec, n, i, N)
        if not path.exists():
            return None
        try:
            payload = self.read(path)
        except ValueError as exc:
            log.warning("%s; recomputing", exc)
            path.unlink(missing_ok=True)
            return None
        if payload["spec"] != spec.digest_fields() or (payload["n"], payload["i"]) != (n, i):
            log.warning("cache entry %s describes a different job; recomputing", path.name)
            return None
        p, M = payload["p"], payload["N"]
        return SyntomicComplex(
            spec, n, i, PadicMatrix(payload["syn0"], p, M), PadicMatrix(payload["syn1"], p, M), payload["basis_version"]
        )

    def gc(self, everything: bool = False) -> dict[str, int]:
        """Drop corrupt, stale-version and leftover temporary files."""
        counts = {"kept": 0, "removed": 0}
        for path in self.root.iterdir():
            drop = everything or path.suffix == ".tmp"
            if not drop and path.suffix == ".json":
                if not path.name.endswith(f"_v{self.basis_version}.json"):
                    drop = True
                else:
                    try:
                        self.read(path)
                    except ValueError:
                        drop = True
            if drop and path.is_file():
                path.unlink()
                counts["removed"] += 1
            else:
                counts["kept"] += 1
        return counts


# ---------------------------------------------------------------------------
# jobs


@dataclass(frozen=True)
class JobRequest:
    spec: FieldSpec
    n: int
    weights: tuple[int, int]
    precision: int | None = None  # None: automatic escalation
    max_precision: int = 20000
    use_vanishing: bool = False
    output_format: str = "table"
    cache_dir: str | None = None
    out: str | None = None
    reference: str | None = None
    jobs: int = 1
    integral: bool = False

    def __post_init__(self):
        lo, hi = self.weights
        if lo < 1:
            raise ValueError("weights must start at 1 or later")
        if hi < lo:
            raise ValueError(f"empty weight range {lo}..{hi}")
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if self.output_format not in ("table", "machine"):
            raise ValueError(f"unknown format {self.output_format!r}")


def parse_weights(text: str) -> tuple[int, int]:
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            return int(a), int(b)
        return int(text), int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A..B, got {text!r}") from None


def parse_precision(text: str) -> int | None:
    if text == "auto":
        return None
    try:
        N = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'auto' or a positive integer, got {text!r}") from None
    if N < 1:
        raise argparse.ArgumentTypeError("precision must be positive")
    return N


def _compute_weight(spec: FieldSpec, n: int, i: int, precision, max_precision, cache_dir, use_vanishing) -> KEntry:
    """One weight, consulting and filling the cache."""
    cache = ResultCache(cache_dir) if cache_dir else None
    vanishing = use_vanishing and i >= 2 and i >= even_vanishing_bound(spec, n)
    p = spec.p
    if n == 1:
        return KEntry(i, AbelianPGroup(p), AbelianPGroup(p), precision=None)
    if cache is not None:
        stored = cache.candidates(spec, n, i)
        if precision is not None:
            stored = [(N, path) for N, path in stored if N == precision]
        for N, _ in stored:
            cx = cache.load(spec, n, i, N)
            res = cohomology_of_complex(cx, N) if cx is not None else None
            if res is not None:
                return _entry_from(res, i, vanishing, cache_hit=True)
    try:
        res = syntomic_cohomology(
            spec, n, i, precision=precision, max_precision=precision or max_precision
        )
    except PrecisionError as exc:
        return KEntry(i, AbelianPGroup(p), AbelianPGroup(p), certified=False, error=str(exc))
    if cache is not None and res.complex is not None:
        cache.store(res.complex, res.working_precision)
    return _entry_from(res, i, vanishing, cache_hit=False)


def _entry_from(res, i: int, vanishing: bool, cache_hit: bool) -> KEntry:
    even = res.H2 if i >= 2 else AbelianPGroup(res.spec.p)
    if vanishing:
        if not even.is_trivial():
            raise ArithmeticError(f"weight {i}: computed K_{2 * i - 2} = {even} beyond the even-vanishing bound")
        even = AbelianPGroup(res.spec.p)
    return KEntry(
        i, res.H1, even, precision=res.precision, certified=res.certified,
        seconds=res.seconds, cache_hit=cache_hit, from_vanishing=vanishing,
    )


def run_job(req: JobRequest) -> KGroupTable:
    lo, hi = req.weights
    table = KGroupTable(req.spec, req.n, req.weights)
    args = [(req.spec, req.n, i, req.precision, req.max_precision, req.cache_dir, req.use_vanishing) for i in range(lo, hi + 1)]
    if req.jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=req.jobs) as pool:
            results = list(pool.map(_compute_weight, *zip(*args)))
    else:
        results = [_compute_weight(*a) for a in args]
    for entry in results:
        table.entries[entry.i] = entry
        log.info("weight %d: K_%d = %s, K_%d = %s", entry.i, 2 * entry.i - 1, entry.odd, 2 * entry.i - 2, entry.even)
    if req.integral:
        for r in range(1, 2 * hi):
            group = table.k_group(r)
            if group is not None and (r >= 2 * lo - 2):
                table.integral[r] = assemble_integral(req.spec, req.n, r, p_part=group)
    return table


# ---------------------------------------------------------------------------
# output


def table_records(table: KGroupTable) -> list[dict]:
    """One record per degree r, in increasing r."""
    recs = []
    for i in sorted(table.entries):
        e = table.entries[i]
        if i >= 2:
            recs.append({"r": 2 * i - 2, "i": i, "group": e.even, "entry": e, "even": True})
        recs.append({"r": 2 * i - 1, "i": i, "group": e.odd, "entry": e, "even": False})
    return sorted(recs, key=lambda d: d["r"])


def machine_document(table: KGroupTable) -> dict:
    spec = table.spec
    records = []
    for rec in table_records(table):
        e: KEntry = rec["entry"]
        item = {
            "r": rec["r"],
            "i": rec["i"],
            "exponents": None if e.error else list(rec["group"].exponents),
            "precision": e.precision,
            "certified": e.certified and not e.error,
            "source": "vanishing" if (rec["even"] and e.from_vanishing) else "syntomic",
        }
        if e.error:
            item["error"] = e.error
        if rec["r"] in table.integral:
            g = table.integral[rec["r"]]
            item["integral"] = {"factors": [list(f) for f in g.factors], "order": g.order}
        records.append(item)
    return {
        "schema": MACHINE_SCHEMA,
        "schema_version": MACHINE_SCHEMA_VERSION,
        "basis_version": BASIS_VERSION,
        "spec": {
            "p": spec.p,
            "f": spec.f,
            "e": spec.e,
            "eisenstein": list(spec.eisenstein),
            "polynomial": spec.polynomial_string(),
            "label": spec.label,
        },
        "n": table.n,
        "weights": list(table.weights),
        "records": records,
    }


def render_machine(table: KGroupTable) -> str:
    return json.dumps(machine_document(table), indent=1, sort_keys=True) + "\n"


def render_table(table: KGroupTable) -> str:
    spec = table.spec
    name = spec.label or f"E = {spec.polynomial_string()}"
    lines = [f"p = {spec.p}, {name}, n = {table.n}   (exponent lists: 1,3 means Z/p + Z/p^3)"]
    rows = []
    for rec in table_records(table):
        e: KEntry = rec["entry"]
        if e.error:
            cell = "FAILED: " + e.error
        else:
            cell = ",".join(map(str, rec["group"].exponents)) or "0"
            if rec["even"] and e.from_vanishing:
                cell += "  (vanishing bound)"
        extra = f"   [{table.integral[rec['r']]}]" if rec["r"] in table.integral else ""
        rows.append((f"K_{rec['r']}", cell + extra))
    width = max((len(a) for a, _ in rows), default=3)
    lines += [f"{a.ljust(width)}  {b}" for a, b in rows]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# verification


@dataclass
class VerifyReport:
    reference: str
    matches: list[tuple[int, int]] = field(default_factory=list)
    mismatches: list[tuple[int, int, tuple, tuple]] = field(default_factory=list)
    failed: list[tuple[int, int]] = field(default_factory=list)

    @property
    def compared(self) -> int:
        return len(self.matches) + len(self.mismatches) + len(self.failed)

    @property
    def ok(self) -> bool:
        return not self.mismatches and not self.failed

    def render(self) -> str:
        lines = []
        for n, r, got, want in self.mismatches:
            lines.append(f"MISMATCH n={n} K_{r}: computed {','.join(map(str, got)) or '0'}, reference {','.join(map(str, want)) or '0'}")
        for n, r in self.failed:
            lines.append(f"FAILED   n={n} K_{r}: no certified result")
        lines.append(f"{self.reference}: {len(self.matches)}/{self.compared} entries match")
        return "\n".join(lines) + "\n"


def verify(table: KGroupTable, ref: ReferenceTable) -> VerifyReport:
    report = VerifyReport(ref.key)
    for rec in table_records(table):
        key = (table.n, rec["r"])
        if key not in ref.entries:
            continue
        e: KEntry = rec["entry"]
        if e.error:
            report.failed.append(key)
            continue
        got = rec["group"].exponents
        if got == ref.entries[key]:
            report.matches.append(key)
        else:
            report.mismatches.append((*key, got, ref.entries[key]))
    if not report.compared:
        warnings.warn(f"no overlap between the computed table and reference {ref.key}", stacklevel=2)
    return report


# ---------------------------------------------------------------------------
# argument parsing


def _add_job_arguments(sp: argparse.ArgumentParser):
    src = sp.add_argument_group("field")
    src.add_argument("--p", type=int, help="residue characteristic")
    src.add_argument("--f", type=int, default=1, help="residual degree (only 1 is implemented)")
    src.add_argument("--eisenstein", help='Eisenstein polynomial in z, e.g. "z^2+2z+2"')
    src.add_argument("--label", help="bundled field label (see show-labels)")
    sp.add_argument("--n", type=int, help="length: the ring is O_K/pi^n")
    sp.add_argument("--weights", type=parse_weights, default=None, help="syntomic weight range A..B")
    sp.add_argument("--precision", type=parse_precision, default=None, metavar="auto|N",
                    help="working precision; a number disables escalation")
    sp.add_argument("--max-precision", type=int, default=20000, help="escalation cap")
    sp.add_argument("--use-vanishing", action="store_true",
                    help="report K_{2i-2} = 0 from the vanishing bound instead of the computed value")
    sp.add_argument("--format", dest="output_format", choices=("table", "machine"), default="table")
    sp.add_argument("--cache-dir", help="directory for cached syntomic complexes")
    sp.add_argument("--out", help="write output here instead of stdout")
    sp.add_argument("--jobs", type=int, default=1, help="weights computed in parallel")
    sp.add_argument("--integral", action="store_true", help="also assemble the integral groups")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kchain", description="K-groups of finite chain rings O_K/pi^n")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    _add_job_arguments(sub.add_parser("compute", help="compute a K-group table"))
    vp = sub.add_parser("verify", help="compute and compare with a reference table")
    _add_job_arguments(vp)
    vp.add_argument("--ref", help="reference key or JSON path (default: matched from the field)")
    sub.add_parser("show-labels", help="list bundled fields and reference tables")
    gp = sub.add_parser("cache-gc", help="prune the cache")
    gp.add_argument("--cache-dir", required=True)
    gp.add_argument("--all", action="store_true", help="remove every entry")
    return ap


def parse_request(argv, parser: argparse.ArgumentParser | None = None) -> JobRequest:
    """Validated :class:`JobRequest` from ``compute``/``verify`` arguments."""
    parser = parser or build_parser()
    args = parser.parse_args(argv) if not isinstance(argv, argparse.Namespace) else argv
    if args.f != 1:
        parser.error(f"--f {args.f}: residual degree > 1 is not yet supported")
    ref_name = getattr(args, "ref", None)
    if args.label:
        if args.eisenstein:
            parser.error("give either --label or --eisenstein, not both")
        try:
            ref = load_reference(args.label)
        except KeyError as exc:
            parser.error(str(exc.args[0]))
        if args.p is not None and args.p != ref.p:
            parser.error(f"label {args.label} has p = {ref.p}, not {args.p}")
        spec = ref.spec
        ref_name = ref_name or ref.key
        n = args.n
        if n is None:
            if len(ref.lengths()) != 1:
                parser.error(f"label {args.label} has tables for n in {ref.lengths()}; pass --n")
            n = ref.lengths()[0]
    else:
        if args.p is None or not args.eisenstein:
            parser.error("need --p and --eisenstein, or --label")
        if args.n is None:
            parser.error("need --n")
        try:
            spec = FieldSpec.parse(args.p, args.eisenstein)
        except (InvalidFieldSpec, ValueError) as exc:
            parser.error(f"invalid Eisenstein polynomial: {exc}")
        n = args.n
    weights = args.weights or (1, 4)
    try:
        return JobRequest(
            spec=spec, n=n, weights=weights, precision=args.precision, max_precision=args.max_precision,
            use_vanishing=args.use_vanishing, output_format=args.output_format, cache_dir=args.cache_dir,
            out=args.out, reference=ref_name, jobs=max(1, args.jobs), integral=args.integral,
        )
    except ValueError as exc:
        parser.error(str(exc))


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def show_labels() -> str:
    lines = []
    for key, ref in bundled_references().items():
        ns = ref.lengths()
        nstr = str(ns[0]) if len(ns) == 1 else f"{ns[0]}..{ns[-1]}"
        spec = ref.spec
        lines.append(f"{key:10s} p={ref.p}  E = {spec.polynomial_string():14s} n={nstr:5s} {ref.label}")
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.command == "show-labels":
        sys.stdout.write(show_labels())
        return 0
    if args.command == "cache-gc":
        counts = ResultCache(args.cache_dir).gc(everything=args.all)
        print(f"removed {counts['removed']}, kept {counts['kept']}")
        return 0
    req = parse_request(args, parser)
    if args.command == "compute":
        table = run_job(req)
        _emit(render_machine(table) if req.output_format == "machine" else render_table(table), req.out)
        return 0 if all(not e.error for e in table.entries.values()) else 1
    # verify
    if req.reference:
        ref = load_reference(req.reference)
    else:
        ref = find_reference(req.spec, req.n)
        if ref is None:
            parser.error("no bundled reference for this field and n; pass --ref")
    table = run_job(req)
    report = verify(table, ref)
    _emit(report.render(), req.out)
    return 0 if report.ok else 1


if __name__ == "__main__":
    sys.exit(main())
