"""INI run configuration.

One file, named sections, ``key = value`` entries.  Expressions may be
wrapped in double quotes.  Example::

    [frame]
    catalog = helical
    gamma = 0.5
    epsilon = 1

    [loop]
    vertices = 0.2,0.2,0.5; 0.8,0.2,0.5; 0.8,0.8,0.5; 0.2,0.8,0.5

Sections: frame, params, domain, grid, loop, patch, quadrature, metric,
surfaces, thermal, weyl, frank, output.  Unknown sections are rejected.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .density import SurfacePatch
from .errors import ConfigError, DislogeoError
from .exprfield import BoxDomain, parse_expression
from .frame import CATALOG, ExpressionFrame, LoopSpec, MovingFrame, catalog_frame
from .metric import ExpressionMetric, MetricField
from .quadrature import LOOP_DEFAULT, PATCH_DEFAULT, QuadratureSpec
from .surfaces import UmbilicalFamily
from .weyl import ThermalModel

SECTIONS = {"frame", "params", "domain", "grid", "loop", "patch", "quadrature", "metric", "surfaces", "thermal", "weyl", "frank", "output"}
FRAME_KEYS = [f"e{a}{A}" for a in (1, 2, 3) for A in (1, 2, 3)]
METRIC_KEYS = ("g11", "g12", "g13", "g22", "g23", "g33")
CATALOG_ARGS = {"gamma": float, "sigma": str, "h": str, "scale": float}


def _unquote(text: str) -> str:
    text = text.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1]
    return text


def _floats(text: str, n: int | None = None, where: str = "") -> list[float]:
    try:
        vals = [float(x) for x in _unquote(text).replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"{where}: expected numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise ConfigError(f"{where}: expected {n} numbers, got {len(vals)}")
    return vals


@dataclass
class SurfaceStudy:
    family: UmbilicalFamily | None
    slices: list[float]
    point: tuple[float, float]
    curvatures: list[float]


@dataclass
class WeylSpec:
    lam: str | None
    kappa: list[str] | None


@dataclass
class RunConfig:
    source: str = ""
    params: dict = field(default_factory=dict)
    domain: BoxDomain = field(default_factory=BoxDomain.unit)
    frame: MovingFrame | None = None
    metric: MetricField | None = None
    grid: int = 5
    loop: LoopSpec | None = None
    patch: SurfacePatch | None = None
    loop_quad: QuadratureSpec = LOOP_DEFAULT
    patch_quad: QuadratureSpec = PATCH_DEFAULT
    surfaces: SurfaceStudy | None = None
    thermal: ThermalModel | None = None
    weyl: WeylSpec | None = None
    frank_box: tuple | None = None
    output_format: str = "json"

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.source.encode()).hexdigest()[:16]

    def require_frame(self) -> MovingFrame:
        if self.frame is None:
            raise ConfigError("this command needs a [frame] section (or --frame)")
        return self.frame

    def require_metric(self) -> MetricField:
        if self.frame is not None and self.metric is not None:
            raise ConfigError("give either [frame] or [metric], not both")
        if self.metric is not None:
            return self.metric
        return self.require_frame()


def _section(cp, name):
    return {k: _unquote(v) for k, v in cp[name].items()} if cp.has_section(name) else None


def _parse_frame(sec, params, domain, override):
    if sec is None and override is None:
        return None
    sec = dict(sec or {})
    try:
        epsilon = int(sec.pop("epsilon", "1"))
    except ValueError:
        raise ConfigError("[frame] epsilon must be +1 or -1") from None
    if epsilon not in (1, -1):
        raise ConfigError("[frame] epsilon must be +1 or -1")
    name = override or sec.pop("catalog", None)
    if name is not None:
        sec.pop("catalog", None)
        if name not in CATALOG:
            raise ConfigError(f"[frame] unknown catalog frame {name!r}; choose from {sorted(CATALOG)}")
        kwargs = {}
        for key, value in sec.items():
            if key not in CATALOG_ARGS:
                raise ConfigError(f"[frame] unexpected key {key!r} for a catalog frame")
            kwargs[key] = CATALOG_ARGS[key](value)
        if params and any(k in ("sigma", "h") for k in kwargs):
            kwargs["params"] = params
        try:
            return catalog_frame(name, domain=domain, epsilon=epsilon, **kwargs)
        except TypeError as exc:
            raise ConfigError(f"[frame] {exc}") from None
    missing = [k for k in FRAME_KEYS if k not in sec]
    if missing:
        raise ConfigError(f"[frame] needs catalog = <name> or all of e11..e33 (missing {', '.join(missing)})")
    extra = set(sec) - set(FRAME_KEYS)
    if extra:
        raise ConfigError(f"[frame] unexpected keys {sorted(extra)}")
    entries = [[parse_expression(sec[f"e{a}{A}"], params) for A in (1, 2, 3)] for a in (1, 2, 3)]
    return ExpressionFrame(entries, params, domain, epsilon, name="config")


def _parse_loop(sec, params):
    if "vertices" in sec:
        verts = [_floats(v, 3, "[loop] vertices") for v in sec["vertices"].split(";") if v.strip()]
        if len(verts) < 3:
            raise ConfigError("[loop] a polygon needs at least three vertices")
        return LoopSpec.polygon(verts)
    if "center" in sec:
        plane = tuple(int(x) for x in _floats(sec.get("plane", "1,2"), 2, "[loop] plane"))
        return LoopSpec.circle(_floats(sec["center"], 3, "[loop] center"), float(sec["radius"]), plane)
    if "start" in sec:
        return LoopSpec.segment(_floats(sec["start"], 3, "[loop] start"), _floats(sec["end"], 3, "[loop] end"))
    try:
        return LoopSpec.parse(sec["x1"], sec["x2"], sec["x3"], params)
    except KeyError as exc:
        raise ConfigError(f"[loop] needs vertices, center/radius, start/end or x1/x2/x3 (missing {exc})") from None
    except ValueError as exc:
        if isinstance(exc, ConfigError) or hasattr(exc, "position"):
            raise
        raise ConfigError(f"[loop] {exc}") from None


def _parse_patch(sec, params):
    orientation = int(sec.get("orientation", "1"))
    if "origin" in sec:
        return SurfacePatch.parallelogram(
            _floats(sec["origin"], 3, "[patch] origin"),
            _floats(sec["edge_u"], 3, "[patch] edge_u"),
            _floats(sec["edge_v"], 3, "[patch] edge_v"),
            orientation,
        )
    if "center" in sec:
        plane = tuple(int(x) for x in _floats(sec.get("plane", "1,2"), 2, "[patch] plane"))
        return SurfacePatch.disk(_floats(sec["center"], 3, "[patch] center"), float(sec["radius"]), plane, orientation)
    try:
        return SurfacePatch([sec["x1"], sec["x2"], sec["x3"]], params, orientation)
    except KeyError as exc:
        raise ConfigError(f"[patch] needs origin/edge_u/edge_v, center/radius or x1/x2/x3 (missing {exc})") from None


def _parse_quadrature(sec):
    def spec(prefix, default):
        panels = int(sec.get(f"{prefix}_panels", default.panels))
        nodes = int(sec.get(f"{prefix}_nodes", default.nodes))
        try:
            return QuadratureSpec(panels, nodes)
        except ValueError as exc:
            raise ConfigError(f"[quadrature] {exc}") from None

    return spec("loop", LOOP_DEFAULT), spec("patch", PATCH_DEFAULT)


def _parse_surfaces(sec, params, domain):
    family = None
    a = [[sec.get("a11", "1"), sec.get("a12", "0")], [sec.get("a12", "0"), sec.get("a22", "1")]]
    if "h" in sec:
        family = UmbilicalFamily.from_h(sec["h"], a, float(sec.get("scale", "1")), params, domain)
    elif "psi" in sec:
        family = UmbilicalFamily(parse_expression(sec["psi"], params), a, None, domain)
    slices = _floats(sec.get("slices", "0, 0.5, 1"), None, "[surfaces] slices")
    point = tuple(_floats(sec.get("point", "0.3, 0.4"), 2, "[surfaces] point"))
    curvatures = _floats(sec.get("curvatures", ""), None, "[surfaces] curvatures") if sec.get("curvatures") else []
    return SurfaceStudy(family, slices, point, curvatures)


def parse_config(text: str, frame_override: str | None = None) -> RunConfig:
    try:
        return _parse_config(text, frame_override)
    except DislogeoError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid value: {exc}") from None


def _parse_config(text: str, frame_override: str | None) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    unknown = set(cp.sections()) - SECTIONS
    if unknown:
        raise ConfigError(f"unknown sections {sorted(unknown)}")
    cfg = RunConfig(source=text + f"\n#frame-override={frame_override}")

    cfg.params = {k: float(v) for k, v in (_section(cp, "params") or {}).items()}
    dom = _section(cp, "domain")
    if dom:
        try:
            cfg.domain = BoxDomain.from_bounds(_floats(dom.get("lo", "0,0,0"), 3, "[domain] lo"), _floats(dom.get("hi", "1,1,1"), 3, "[domain] hi"))
        except ValueError as exc:
            raise ConfigError(f"[domain] {exc}") from None
    cfg.frame = _parse_frame(_section(cp, "frame"), cfg.params, cfg.domain, frame_override)
    met = _section(cp, "metric")
    if met:
        missing = [k for k in METRIC_KEYS if k not in met]
        if missing:
            raise ConfigError(f"[metric] missing {', '.join(missing)}")
        cfg.metric = ExpressionMetric.from_upper([met[k] for k in METRIC_KEYS], cfg.params)
    grid = _section(cp, "grid")
    if grid:
        cfg.grid = int(grid.get("n", cfg.grid))
        if cfg.grid < 1:
            raise ConfigError("[grid] n must be >= 1")
    if (sec := _section(cp, "loop")) is not None:
        cfg.loop = _parse_loop(sec, cfg.params)
    if (sec := _section(cp, "patch")) is not None:
        cfg.patch = _parse_patch(sec, cfg.params)
    if (sec := _section(cp, "quadrature")) is not None:
        cfg.loop_quad, cfg.patch_quad = _parse_quadrature(sec)
    if (sec := _section(cp, "surfaces")) is not None:
        cfg.surfaces = _parse_surfaces(sec, cfg.params, cfg.domain)
    if (sec := _section(cp, "thermal")) is not None:
        try:
            cfg.thermal = ThermalModel.parse(sec["beta"], float(sec["theta0"]), sec["theta"], cfg.params)
        except KeyError as exc:
            raise ConfigError(f"[thermal] missing key {exc}") from None
    if (sec := _section(cp, "weyl")) is not None:
        kappa = [sec[f"kappa{i}"] for i in (1, 2, 3)] if "kappa1" in sec else None
        if kappa is None and "lam" not in sec:
            raise ConfigError("[weyl] needs lam or kappa1..kappa3")
        cfg.weyl = WeylSpec(sec.get("lam"), kappa)
    if (sec := _section(cp, "frank")) is not None:
        cfg.frank_box = (_floats(sec.get("lo", "0.1,0.1,0.1"), 3, "[frank] lo"), _floats(sec.get("hi", "0.9,0.9,0.9"), 3, "[frank] hi"))
    if (sec := _section(cp, "output")) is not None:
        cfg.output_format = sec.get("format", "json")
        if cfg.output_format not in ("json", "csv"):
            raise ConfigError("[output] format must be json or csv")
    return cfg


def load_config(path, frame_override: str | None = None) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, frame_override)


def grid_points(cfg: RunConfig) -> np.ndarray:
    """Grid strictly inside the domain so derivative-based checks stay in range."""
    lo, hi = cfg.domain.lo_array, cfg.domain.hi_array
    pad = 0.02 * (hi - lo)
    inner = BoxDomain.from_bounds(lo + pad, hi - pad)
    return inner.grid(cfg.grid)
