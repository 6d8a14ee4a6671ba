"""Run configuration: YAML files validated by pydantic models.

Every subcommand has its own root model carrying a ``version`` stamp and a
``tolerances`` block.  Unknown keys are errors; flags override file values
through :func:`apply_overrides`.
"""

import math

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigError

CONFIG_VERSION = 1


class Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Tolerances(Strict):
    abs: float | None = Field(default=None, gt=0)
    rel: float | None = Field(default=None, gt=0)


class Root(Strict):
    version: int = CONFIG_VERSION
    tolerances: Tolerances = Tolerances()

    @model_validator(mode="after")
    def _version(self):
        if self.version != CONFIG_VERSION:
            raise ValueError(f"unsupported config version {self.version} "
                             f"(expected {CONFIG_VERSION})")
        return self


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

class CoefficientsConfig(Strict):
    a: float
    b: float
    c: float
    d: float
    xi_x: tuple[float, float] = (0.0, 0.0)
    xi_y: tuple[float, float] = (0.0, 0.0)


class InitialConfig(Strict):
    stokes: tuple[float, float, float, float] | None = None
    ux: tuple[float, float] | None = None
    uy: tuple[float, float] | None = None

    @model_validator(mode="after")
    def _one_form(self):
        amps = self.ux is not None or self.uy is not None
        if (self.stokes is None) == (not amps) or (amps and (self.ux is None or self.uy is None)):
            raise ValueError("give either 'stokes' or both 'ux' and 'uy'")
        return self


class SimulateConfig(Root):
    coefficients: CoefficientsConfig
    initial: InitialConfig
    z_span: tuple[float, float] = (0.0, 100.0)
    samples: int = Field(default=201, ge=2)
    require_hamiltonian: bool = False


# ---------------------------------------------------------------------------
# hannay
# ---------------------------------------------------------------------------

LOOP_FAMILIES = ("hyperbolic-cap", "circle", "critical-approach", "fourier", "nodes",
                 "random", "point")


class LoopConfig(Strict):
    family: str
    surface: str | None = None
    omega: float | None = None
    chi: float | None = None
    center: tuple[float, float, float] | None = None
    e1: tuple[float, float, float] | None = None
    e2: tuple[float, float, float] | None = None
    radius: float | None = None
    eps: float | None = None
    kappa: float = 2.0
    cos: list[tuple[float, float, float]] | None = None
    sin: list[tuple[float, float, float]] | None = None
    nodes: list[tuple[float, float, float]] | None = None
    point: tuple[float, float, float] | None = None
    min_disc: float = 0.25
    harmonics: int = 2
    amplitude: float = 0.4

    @model_validator(mode="after")
    def _fields(self):
        need = {
            "hyperbolic-cap": ("omega", "chi"),
            "circle": ("center", "e1", "e2", "radius"),
            "critical-approach": ("eps",),
            "fourier": ("center", "cos", "sin"),
            "nodes": ("nodes",),
            "random": (),
            "point": ("point",),
        }
        if self.family not in need:
            raise ValueError(f"unknown loop family {self.family!r}; "
                             f"expected one of {', '.join(LOOP_FAMILIES)}")
        missing = [k for k in need[self.family] if getattr(self, k) is None]
        if missing:
            raise ValueError(f"loop family {self.family!r} needs {', '.join(missing)}")
        if self.surface not in (None, "planar-fan", "analytic-cap"):
            raise ValueError(f"unknown surface {self.surface!r}")
        if self.surface == "analytic-cap" and self.family != "hyperbolic-cap":
            raise ValueError("analytic-cap surface exists only for the hyperbolic-cap family")
        return self


class ProbeConfig(Strict):
    kappa: float = Field(default=2.0, gt=0)
    eps: list[float] = Field(min_length=2)


METHODS = ("surface", "line", "adiabatic")


def _check_methods(methods):
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise ValueError(f"unknown methods {bad}; expected a subset of {list(METHODS)}")


class HannayConfig(Root):
    loop: LoopConfig | None = None
    methods: list[str] = list(METHODS)
    action: float = Field(default=1e-8, gt=0)
    periods: float = Field(default=16.0, gt=0)
    pole: str = "+y"
    probe: ProbeConfig | None = None

    @model_validator(mode="after")
    def _check(self):
        _check_methods(self.methods)
        if self.loop is None and self.probe is None:
            raise ValueError("give a 'loop', a 'probe' or both")
        if self.pole not in ("+y", "-y"):
            raise ValueError("pole must be '+y' or '-y'")
        return self


# ---------------------------------------------------------------------------
# emt
# ---------------------------------------------------------------------------

class RangeConfig(Strict):
    start: float
    stop: float
    num: int = Field(ge=1)


class EmtConfig(Root):
    eps1: float = Field(gt=0)
    eps2: float = Field(gt=0)
    chi: float = 1.0
    g: float = Field(default=1.0 / 3.0, gt=0, lt=1)
    f: RangeConfig | list[float]


# ---------------------------------------------------------------------------
# design
# ---------------------------------------------------------------------------

class ModeConfig(Strict):
    kind: str = "gaussian"
    width: float | None = Field(default=None, gt=0)
    k0: float = Field(gt=0)
    beta0: float = Field(gt=0)
    grid: list[list[float]] | None = None
    spacing: float | None = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _kind(self):
        if self.kind == "gaussian" and self.width is None:
            raise ValueError("gaussian mode needs 'width'")
        if self.kind == "tabulated" and (self.grid is None or self.spacing is None):
            raise ValueError("tabulated mode needs 'grid' and 'spacing'")
        if self.kind not in ("gaussian", "tabulated"):
            raise ValueError(f"unknown mode kind {self.kind!r}")
        return self


class Chi3Config(Strict):
    xxxx: float = 0.0
    xxyy: float = 0.0
    xyxy: float = 0.0
    xyyx: float = 0.0
    yyxy: float = 0.0
    yxyy: float = 0.0
    xyyy: float = 0.0
    xxxy: float = 0.0


class MaterialConfig(Strict):
    kind: str = "isotropic"
    f: float
    g: float = 1.0 / 3.0
    eps1: float | None = None
    eps2: float | None = None
    eps_perp: float | None = None
    eps_par: float | None = None
    eps_host: float | None = None
    theta: float = 0.0
    phi: float = 0.0

    @model_validator(mode="after")
    def _kind(self):
        need = {"isotropic": ("eps1", "eps2"),
                "uniaxial": ("eps_perp", "eps_par", "eps_host")}
        if self.kind not in need:
            raise ValueError(f"unknown material kind {self.kind!r}")
        missing = [k for k in need[self.kind] if getattr(self, k) is None]
        if missing:
            raise ValueError(f"{self.kind} material needs {', '.join(missing)}")
        return self


class SampleConfig(Strict):
    z: float
    psi: float = 0.0
    material: MaterialConfig
    chi3: Chi3Config


class SweepConfig(Strict):
    """Two-knob sweep: ``f(z) = f + f_amplitude sin(2 pi z / L)``,
    ``psi(z) = psi_turns (pi / 2) z / L``."""

    n: int = Field(default=65, ge=3)
    material: MaterialConfig
    chi3: Chi3Config
    f_amplitude: float = 0.0
    psi_turns: int = 1


class ProfileConfig(Strict):
    length: float = Field(gt=0)
    closed: bool = True
    samples: list[SampleConfig] | None = None
    sweep: SweepConfig | None = None

    @model_validator(mode="after")
    def _one(self):
        if (self.samples is None) == (self.sweep is None):
            raise ValueError("give exactly one of 'samples' or 'sweep'")
        return self


class ExperimentConfig(Strict):
    methods: list[str] = list(METHODS)
    pole: str = "+y"
    project: bool = False
    action: float = Field(default=1e-8, gt=0)
    periods: float = Field(default=16.0, gt=0)
    simulate_length: float = Field(default=100.0, gt=0)
    probe: ProbeConfig | None = None

    @model_validator(mode="after")
    def _check(self):
        _check_methods(self.methods)
        if self.pole not in ("+y", "-y"):
            raise ValueError("pole must be '+y' or '-y'")
        return self


class DesignConfig(Root):
    mode: ModeConfig | None = None
    profile: ProfileConfig | None = None
    loop: LoopConfig | None = None
    experiment: ExperimentConfig = ExperimentConfig()

    @model_validator(mode="after")
    def _source(self):
        if self.loop is None and (self.profile is None or self.mode is None):
            raise ValueError("give 'mode' and 'profile', or a synthetic 'loop'")
        return self


MODELS = {"simulate": SimulateConfig, "hannay": HannayConfig, "emt": EmtConfig,
          "design": DesignConfig}


# ---------------------------------------------------------------------------
# Parsing and serialization
# ---------------------------------------------------------------------------

def _node_line(node, loc):
    """1-based line of the YAML node at ``loc`` (closest existing ancestor)."""
    line = node.start_mark.line + 1 if node is not None else None
    for key in loc:
        if isinstance(node, yaml.MappingNode):
            nxt = None
            for k, v in node.value:
                if k.value == key:
                    nxt = v
                    line = k.start_mark.line + 1
                    break
            node = nxt
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and \
                key < len(node.value):
            node = node.value[key]
            line = node.start_mark.line + 1
        else:
            break
        if node is None:
            break
    return line


def _format_errors(exc, root_node, source):
    msgs = []
    for err in exc.errors():
        loc = tuple(err["loc"])
        field = ".".join(str(p) for p in loc) or "<root>"
        line = _node_line(root_node, loc) if root_node is not None else None
        where = f"{source}:{line}" if line else source
        msgs.append(f"{where}: field '{field}': {err['msg']}")
    return "; ".join(msgs)


def parse_config(kind, text, source="<config>"):
    """Validate YAML ``text`` as a ``kind`` configuration.

    Raises
    ------
    ConfigError
        With file, line and field of the first problems found.
    """
    if kind not in MODELS:
        raise ConfigError(f"no configuration model for {kind!r}")
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{source}: invalid YAML: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    try:
        return MODELS[kind].model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc, node, source)) from exc


def load_config(kind, path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from exc
    return parse_config(kind, text, source=str(path))


def config_tree(cfg):
    """Plain JSON-compatible tree of a configuration, defaults included."""
    return cfg.model_dump(mode="json")


def dump_config(cfg):
    """Serialize to YAML that :func:`parse_config` maps back to ``cfg``."""
    return yaml.safe_dump(config_tree(cfg), sort_keys=True, default_flow_style=None)


def apply_overrides(cfg, tol_abs=None, tol_rel=None):
    """Return ``cfg`` with command-line tolerance overrides applied."""
    tol = cfg.tolerances.model_copy(update={
        k: v for k, v in (("abs", tol_abs), ("rel", tol_rel)) if v is not None})
    for v in (tol.abs, tol.rel):
        if v is not None and not (math.isfinite(v) and v > 0):
            raise ConfigError("tolerances must be positive and finite")
    return cfg.model_copy(update={"tolerances": tol})
