"""Strict JSON run configuration with canonical fingerprinting.

A single canonical human-readable format (JSON) with a closed schema:
unknown keys are rejected everywhere, duplicate curve exponent records are
rejected with both locations, and a sha256 fingerprint of the canonicalized
(fully-defaulted) document is recorded so identical configurations are
byte-identifiable across runs.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
import hashlib
import json

from .algebra import HomPoly3
from .geometry import CurveDomain

DEFAULT_N_THETA = 1024
DEFAULT_GRID = (256, 32, 32)
DEFAULT_EPSILONS = (0.04, 0.02, 0.01)
DEFAULT_SEED = 7
DEFAULT_MAX_RETRIES = 64
H_MODES = ("paper", "robust", "auto")


class ConfigError(ValueError):
    """Schema violation; the message carries the offending field path."""


def _fail(path, msg):
    raise ConfigError(f"config field {path!r}: {msg}")


def _require_mapping(node, path):
    if not isinstance(node, dict):
        _fail(path, f"expected an object, got {type(node).__name__}")
    return node


def _reject_unknown(node, path, allowed):
    extra = sorted(set(node) - set(allowed))
    if extra:
        _fail(path, f"unknown keys {extra}; allowed: {sorted(allowed)}")


def _real(value, path, positive=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, f"expected a real number, got {value!r}")
    if positive and value <= 0:
        _fail(path, f"must be positive, got {value!r}")
    return float(value)


def _integer(value, path, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(path, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        _fail(path, f"must be >= {minimum}, got {value}")
    return int(value)


def _complex(value, path):
    """A complex scalar: a real number or a [re, im] pair."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if (isinstance(value, list) and len(value) == 2
            and all(isinstance(c, (int, float)) and not isinstance(c, bool)
                    for c in value)):
        return complex(value[0], value[1])
    _fail(path, f"expected a real number or [re, im] pair, got {value!r}")


def _coefficients(node, path):
    if not isinstance(node, list) or not node:
        _fail(path, "expected a non-empty list of exponent/value records")
    seen = {}
    terms = []
    for i, rec in enumerate(node):
        rpath = f"{path}[{i}]"
        _require_mapping(rec, rpath)
        _reject_unknown(rec, rpath, ("exponent", "value"))
        if "exponent" not in rec or "value" not in rec:
            _fail(rpath, "record needs both 'exponent' and 'value'")
        exp = rec["exponent"]
        if (not isinstance(exp, list) or len(exp) != 3
                or any(isinstance(e, bool) or not isinstance(e, int)
                       or e < 0 for e in exp)):
            _fail(f"{rpath}.exponent",
                  f"expected three non-negative integers, got {exp!r}")
        key = tuple(exp)
        if key in seen:
            _fail(rpath, f"duplicate exponent {list(key)} "
                         f"(first at {path}[{seen[key]}])")
        seen[key] = i
        terms.append((key, _complex(rec["value"], f"{rpath}.value")))
    degrees = {sum(k) for k, _ in terms}
    if len(degrees) != 1:
        _fail(path, f"coefficients are not homogeneous: total degrees "
                    f"{sorted(degrees)}")
    return tuple(terms)


@dataclass(frozen=True)
class RunConfig:
    """Validated run parameters plus the canonical document fingerprint."""

    coefficients: tuple
    radius: float
    reference_points: tuple | None
    n_theta: int
    epsilons: tuple
    grid: tuple
    seed: int
    max_retries: int
    h_mode: str
    out: str | None
    fingerprint: str

    def curve(self) -> CurveDomain:
        return CurveDomain(P=HomPoly3.from_terms(list(self.coefficients)),
                           radius=self.radius)

    def canonical_document(self) -> dict:
        doc = {
            "curve": {"coefficients": [
                {"exponent": list(k), "value": [v.real, v.imag]}
                for k, v in self.coefficients]},
            "domain": {"radius": self.radius},
            "trace": {"n_theta": self.n_theta},
            "quad": {"epsilons": list(self.epsilons),
                     "grid": list(self.grid)},
            "barrier": {"seed": self.seed, "max_retries": self.max_retries},
            "h": {"mode": self.h_mode},
            "io": {},
        }
        if self.reference_points is not None:
            doc["domain"]["reference_points"] = [
                [x.real, x.imag] for x in self.reference_points]
        if self.out is not None:
            doc["io"]["out"] = self.out
        return doc


def parse_config(text: str) -> RunConfig:
    """Parse and validate the strict JSON configuration; fills defaults and
    records the sha256 fingerprint of the canonicalized document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"malformed JSON at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}") from exc
    _require_mapping(doc, "<root>")
    _reject_unknown(doc, "<root>",
                    ("curve", "domain", "trace", "quad", "barrier", "h", "io"))
    for req in ("curve", "domain"):
        if req not in doc:
            _fail(req, "required section missing")

    curve = _require_mapping(doc["curve"], "curve")
    _reject_unknown(curve, "curve", ("coefficients",))
    if "coefficients" not in curve:
        _fail("curve.coefficients", "required field missing")
    coefficients = _coefficients(curve["coefficients"], "curve.coefficients")

    domain = _require_mapping(doc["domain"], "domain")
    _reject_unknown(domain, "domain", ("radius", "reference_points"))
    if "radius" not in domain:
        _fail("domain.radius", "required field missing")
    radius = _real(domain["radius"], "domain.radius", positive=True)
    reference_points = None
    if "reference_points" in domain:
        rp = domain["reference_points"]
        if not isinstance(rp, list):
            _fail("domain.reference_points", "expected a list of [re, im]")
        reference_points = tuple(
            _complex(v, f"domain.reference_points[{i}]")
            for i, v in enumerate(rp))

    trace = _require_mapping(doc.get("trace", {}), "trace")
    _reject_unknown(trace, "trace", ("n_theta",))
    n_theta = _integer(trace.get("n_theta", DEFAULT_N_THETA),
                       "trace.n_theta", minimum=16)

    quad = _require_mapping(doc.get("quad", {}), "quad")
    _reject_unknown(quad, "quad", ("epsilons", "grid"))
    eps_node = quad.get("epsilons", list(DEFAULT_EPSILONS))
    if not isinstance(eps_node, list) or not eps_node:
        _fail("quad.epsilons", "expected a non-empty list of positive reals")
    epsilons = tuple(_real(e, f"quad.epsilons[{i}]", positive=True)
                     for i, e in enumerate(eps_node))
    grid_node = quad.get("grid", list(DEFAULT_GRID))
    if not isinstance(grid_node, list) or len(grid_node) != 3:
        _fail("quad.grid", "expected a triple [n_theta, n_phi, n_psi]")
    grid = tuple(_integer(g, f"quad.grid[{i}]", minimum=1)
                 for i, g in enumerate(grid_node))

    barrier = _require_mapping(doc.get("barrier", {}), "barrier")
    _reject_unknown(barrier, "barrier", ("seed", "max_retries"))
    seed = _integer(barrier.get("seed", DEFAULT_SEED), "barrier.seed",
                    minimum=0)
    max_retries = _integer(barrier.get("max_retries", DEFAULT_MAX_RETRIES),
                           "barrier.max_retries", minimum=1)

    h = _require_mapping(doc.get("h", {}), "h")
    _reject_unknown(h, "h", ("mode",))
    h_mode = h.get("mode", "auto")
    if h_mode not in H_MODES:
        _fail("h.mode", f"expected one of {list(H_MODES)}, got {h_mode!r}")

    io_node = _require_mapping(doc.get("io", {}), "io")
    _reject_unknown(io_node, "io", ("out",))
    out = io_node.get("out")
    if out is not None and not isinstance(out, str):
        _fail("io.out", f"expected a path string, got {out!r}")

    cfg = RunConfig(
        coefficients=coefficients, radius=radius,
        reference_points=reference_points, n_theta=n_theta,
        epsilons=epsilons, grid=grid, seed=seed, max_retries=max_retries,
        h_mode=h_mode, out=out, fingerprint="")
    canon = json.dumps(cfg.canonical_document(), sort_keys=True,
                       separators=(",", ":"))
    fp = hashlib.sha256(canon.encode("utf-8")).hexdigest()
    return replace(cfg, fingerprint=fp)
