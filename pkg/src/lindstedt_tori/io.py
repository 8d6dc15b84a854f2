"""Run configuration, series archives and CSV output.

Archive layout (UTF-8 text, one record per line)::

    lindstedt-tori-archive 1
    gamma 0
    ...header keys...
    potential <count>
    <l1> <l2> <re a1> <im a1> <re a2> <im a2>      (count lines)
    order <n> <mode count>
    beta <value> <provisional 0|1>
    mu <mu1> <mu2>
    residual <value>
    <l> <re c1> <im c1> <re c2> <im c2>            (mode count lines)
    end <n>

Decimals carry enough digits to reproduce every binary coefficient exactly.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field

from gmpy2 import mpc, mpfr

from .errors import ArchiveFormatError, InputError
from .lindstedt import LindstedtConfig, LindstedtSeries, OMEGA_UNITS
from .numerics import FREQUENCY_KINDS, FrequencySpec, PrecisionContext, format_decimal, parse_decimal
from .potential import PotentialSpec
from .trigpoly import TrigPolyPair

__all__ = [
    "ARCHIVE_VERSION",
    "AnalysisConfig",
    "RunConfig",
    "load_run_config",
    "parse_run_config",
    "config_record",
    "config_hash",
    "save_archive",
    "load_archive",
    "write_archive",
    "read_archive",
    "write_csv",
    "atomic_write",
]

ARCHIVE_VERSION = 1
MAGIC = "lindstedt-tori-archive"


# --------------------------------------------------------------------------
# Configuration


@dataclass(frozen=True)
class AnalysisConfig:
    theta: str = "1"
    pade_orders: tuple | None = None   # None: ladder sized to the series
    log_mode: bool = False
    rho: str = "0.1"
    r: int = 4
    fit: tuple = (40, 110)
    eps: str = "1e-2"


@dataclass(frozen=True)
class RunConfig:
    series: LindstedtConfig
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)


_SERIES_KEYS = {"gamma", "omega", "omega_value", "omega_units", "order", "k", "kperp", "beta0",
                "potential", "digits", "filter", "grid_size", "spill_from"}
_ANALYSIS_KEYS = {"theta", "pade_orders", "log_mode", "rho", "r", "fit", "eps"}


def parse_pade_orders(spec):
    """``"59/60,60/60"`` or a list of pairs -> tuple of ``(m, n)``."""
    if isinstance(spec, str):
        items = [s for s in spec.split(",") if s.strip()]
        try:
            return tuple(tuple(int(x) for x in s.split("/")) for s in items)
        except ValueError:
            raise InputError(f"cannot parse Pade orders {spec!r}; expected m/n[,m/n...]") from None
    try:
        out = tuple((int(m), int(n)) for m, n in spec)
    except (TypeError, ValueError):
        raise InputError(f"cannot parse Pade orders {spec!r}") from None
    return out


def _check_keys(d, allowed, where):
    if not isinstance(d, dict):
        raise InputError(f"{where} must be a JSON object")
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise InputError(f"unknown key(s) in {where}: {', '.join(unknown)}")


def parse_run_config(doc: dict, overrides: dict | None = None) -> RunConfig:
    """Validate a configuration document; ``overrides`` replace series keys."""
    _check_keys(doc, {"series", "analysis"}, "config")
    s = dict(doc.get("series", {}))
    _check_keys(s, _SERIES_KEYS, "series")
    for key, val in (overrides or {}).items():
        if val is not None:
            s[key] = val
    a = doc.get("analysis", {})
    _check_keys(a, _ANALYSIS_KEYS, "analysis")

    kind = s.get("omega", "golden")
    if kind not in FREQUENCY_KINDS:
        raise InputError(f"unknown frequency {kind!r}; expected one of {FREQUENCY_KINDS}")
    omega = FrequencySpec(kind, s.get("omega_value"))
    digits = int(s.get("digits", 400))
    ctx = PrecisionContext(digits)
    pot = s.get("potential")
    potential = PotentialSpec.from_records(pot, ctx) if pot is not None else None
    try:
        cfg = LindstedtConfig(
            gamma=int(s.get("gamma", 0)), omega=omega, N=int(s.get("order", 120)),
            k=tuple(s.get("k", (1, 0))), kperp=tuple(s.get("kperp", (0, 1))),
            beta0=str(s.get("beta0", "0")), potential=potential, digits=digits,
            filter_digits=int(s.get("filter", 100)), grid_size=int(s.get("grid_size", 1024)),
            spill_from=s.get("spill_from"), omega_units=s.get("omega_units", "turns"))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"invalid series configuration: {exc}") from None

    fit = a.get("fit", (40, 110))
    if isinstance(fit, str):
        fit = parse_fit_range(fit)
    analysis = AnalysisConfig(
        theta=str(a.get("theta", "1")),
        pade_orders=parse_pade_orders(a["pade_orders"]) if "pade_orders" in a else None,
        log_mode=bool(a.get("log_mode", False)), rho=str(a.get("rho", "0.1")),
        r=int(a.get("r", 4)), fit=tuple(int(x) for x in fit), eps=str(a.get("eps", "1e-2")))
    return RunConfig(cfg, analysis)


def parse_fit_range(text):
    try:
        lo, hi = (int(x) for x in text.split(":"))
    except ValueError:
        raise InputError(f"fit range must look like 150:450, got {text!r}") from None
    if lo >= hi:
        raise InputError(f"empty fit range {text!r}")
    return lo, hi


def load_run_config(path, overrides=None) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"config {path} is not valid JSON: {exc}") from None
    return parse_run_config(doc, overrides)


def config_record(cfg: LindstedtConfig) -> dict:
    """Canonical plain-data form of a series configuration."""
    return {
        "gamma": cfg.gamma, "omega": cfg.omega.kind, "omega_value": cfg.omega.custom_value,
        "omega_units": cfg.omega_units, "order": cfg.N, "k": list(cfg.k), "kperp": list(cfg.kperp),
        "beta0": str(cfg.beta0), "digits": cfg.digits, "filter": cfg.filter_digits,
        "grid_size": cfg.grid_size, "potential": cfg.potential.to_records(cfg.ctx.print_digits),
    }


def config_hash(record) -> str:
    blob = json.dumps(record, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


# --------------------------------------------------------------------------
# Files


def atomic_write(path, data: bytes):
    """Write via a temporary file in the target directory, then rename."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=d)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, columns, rows, chash=None, extra_comments=()):
    """CSV with an optional ``# config_hash`` comment line and a header row."""
    lines = []
    if chash is not None:
        lines.append(f"# config_hash {chash}")
    lines.extend(f"# {c}" for c in extra_comments)
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(str(x) for x in row))
    atomic_write(path, ("\n".join(lines) + "\n").encode())


# --------------------------------------------------------------------------
# Archive


def _fmt(x, digits):
    return format_decimal(x, digits)


def save_archive(series: LindstedtSeries) -> bytes:
    cfg = series.config
    ctx = series.ctx
    d = ctx.print_digits
    out = [f"{MAGIC} {ARCHIVE_VERSION}"]
    with ctx:
        head = [
            ("gamma", cfg.gamma),
            ("omega_kind", cfg.omega.kind),
            ("omega_custom", cfg.omega.custom_value if cfg.omega.custom_value is not None else "-"),
            ("omega_units", cfg.omega_units),
            ("omega_value", _fmt(series.omega, d)),
            ("digits", cfg.digits),
            ("filter", cfg.filter_digits),
            ("grid_size", cfg.grid_size),
            ("N", series.N),
            ("k", f"{cfg.k[0]} {cfg.k[1]}"),
            ("kperp", f"{cfg.kperp[0]} {cfg.kperp[1]}"),
            ("beta0", cfg.beta0),
            ("beta_provisional", int(series.beta_provisional)),
        ]
        out += [f"{k} {v}" for k, v in head]
        recs = cfg.potential.to_records(d)
        out.append(f"potential {len(recs)}")
        out += [" ".join(str(x) for x in r) for r in recs]
        for n, g in enumerate(series.orders):
            modes = sorted(g.coeffs)
            out.append(f"order {n} {len(modes)}")
            prov = int(series.beta_provisional and n == series.N)
            out.append(f"beta {_fmt(series.betas[n], d)} {prov}")
            mu = series.mus[n]
            out.append(f"mu {_fmt(mu[0], d)} {_fmt(mu[1], d)}")
            res = series.per_order_residual[n] if n < len(series.per_order_residual) else mpfr(0)
            out.append(f"residual {_fmt(res, 6)}")
            for l in modes:
                a, b = g.coeffs[l]
                out.append(f"{l} {_fmt(a.real, d)} {_fmt(a.imag, d)} {_fmt(b.real, d)} {_fmt(b.imag, d)}")
            out.append(f"end {n}")
    return ("\n".join(out) + "\n").encode()


class _Lines:
    def __init__(self, text):
        self.lines = text.split("\n")
        if self.lines and self.lines[-1] == "":
            self.lines.pop()
        self.i = 0

    def next(self, order=None):
        if self.i >= len(self.lines):
            raise ArchiveFormatError("unexpected end of archive", line=self.i + 1, order=order)
        self.i += 1
        return self.lines[self.i - 1].split()

    def key(self, name, nfields=None, order=None):
        parts = self.next(order)
        if not parts or parts[0] != name or (nfields is not None and len(parts) != nfields + 1):
            raise ArchiveFormatError(f"expected '{name}' record, got {' '.join(parts)!r}",
                                     line=self.i, order=order)
        return parts[1:]

    @property
    def done(self):
        return self.i >= len(self.lines)


def load_archive(data: bytes, digits: int | None = None) -> LindstedtSeries:
    """Parse an archive.

    ``digits`` above the stored precision re-parses every decimal at the
    higher precision (trailing digits are zero) and sets
    ``loaded_below_context_precision``.
    """
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        raise ArchiveFormatError("archive is not UTF-8 text", line=1) from None
    L = _Lines(text)
    first = L.next()
    if len(first) != 2 or first[0] != MAGIC:
        raise ArchiveFormatError("not a series archive", line=1)
    if first[1] != str(ARCHIVE_VERSION):
        raise ArchiveFormatError(f"unsupported archive version {first[1]}", line=1)
    h = {}
    for key in ("gamma", "omega_kind", "omega_custom", "omega_units", "omega_value", "digits",
                "filter", "grid_size", "N", "k", "kperp", "beta0", "beta_provisional"):
        parts = L.key(key)
        if not parts:
            raise ArchiveFormatError(f"empty '{key}' record", line=L.i)
        h[key] = parts
    try:
        stored = int(h["digits"][0])
        N = int(h["N"][0])
        M = int(h["grid_size"][0])
    except ValueError:
        raise ArchiveFormatError("malformed integer in header", line=L.i) from None
    use = stored if digits is None else max(digits, stored)
    ctx = PrecisionContext(use)
    npot = int(L.key("potential", 1)[0])
    recs = [L.next() for _ in range(npot)]
    try:
        pot = PotentialSpec.from_records(recs, ctx)
        custom = None if h["omega_custom"][0] == "-" else h["omega_custom"][0]
        cfg = LindstedtConfig(
            gamma=int(h["gamma"][0]), omega=FrequencySpec(h["omega_kind"][0], custom), N=N,
            k=tuple(int(x) for x in h["k"]), kperp=tuple(int(x) for x in h["kperp"]),
            beta0=h["beta0"][0], potential=pot, digits=use, filter_digits=int(h["filter"][0]),
            grid_size=M, omega_units=h["omega_units"][0])
    except (InputError, ValueError) as exc:
        raise ArchiveFormatError(f"invalid header: {exc}", line=L.i) from None
    if h["omega_units"][0] not in OMEGA_UNITS:
        raise ArchiveFormatError("bad omega_units", line=L.i)

    orders, betas, mus, resid = [], [], [], []
    provisional = bool(int(h["beta_provisional"][0]))
    with ctx:
        omega = parse_decimal(h["omega_value"][0])
        for n in range(N + 1):
            parts = L.key("order", 2, order=n)
            if int(parts[0]) != n:
                raise ArchiveFormatError(f"expected order {n}, found {parts[0]}", line=L.i, order=n)
            count = int(parts[1])
            b = L.key("beta", 2, order=n)
            betas.append(parse_decimal(b[0]))
            mu = L.key("mu", 2, order=n)
            mus.append((parse_decimal(mu[0]), parse_decimal(mu[1])))
            resid.append(parse_decimal(L.key("residual", 1, order=n)[0]))
            coeffs = {}
            for _ in range(count):
                rec = L.next(order=n)
                if len(rec) != 5 or rec[0] in ("end", "order"):
                    raise ArchiveFormatError("truncated or malformed coefficient block", line=L.i, order=n)
                try:
                    v = [parse_decimal(x) for x in rec[1:]]
                    coeffs[int(rec[0])] = (mpc(v[0], v[1]), mpc(v[2], v[3]))
                except (InputError, ValueError):
                    raise ArchiveFormatError("bad coefficient record", line=L.i, order=n) from None
            end = L.key("end", 1, order=n)
            if int(end[0]) != n:
                raise ArchiveFormatError("block terminator does not match order", line=L.i, order=n)
            orders.append(TrigPolyPair(coeffs, M, ctx))
    if not L.done:
        raise ArchiveFormatError("trailing data after final order", line=L.i + 1)
    series = LindstedtSeries(cfg, omega, orders=orders, betas=betas, mus=mus,
                             beta_provisional=provisional, per_order_residual=resid, rhs=[],
                             loaded_below_context_precision=use > stored)
    return series


def write_archive(path, series):
    atomic_write(path, save_archive(series))


def read_archive(path, digits=None):
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read archive {path}: {exc.strerror}") from None
    return load_archive(data, digits)
