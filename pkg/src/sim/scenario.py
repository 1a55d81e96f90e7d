"""Scenario model, strict TOML loader and serializer.

Agent indices are 1-based in files and 0-based everywhere in code. Units:
``sample_period`` and attack windows in seconds, ``horizon`` in steps, every
signal expression takes t in seconds.
"""

import logging
import math
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import tomli_w

from src.attacks import AttackChannel, AttackSpec, create_attack
from src.control.formation import CONTROL_LAWS, ControlGains, FormationSpec
from src.dynamics import AgentDynamics, create_dynamics
from src.errors import ConfigurationError, FormationError, ScenarioParseError
from src.network.rbf import RbfBasis, TuningParams
from src.topology.graph import DirectedWeightedGraph, build_laplacian
from src.utils.expressions import VectorExpression

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SCENARIO_DIR = Path(__file__).resolve().parents[2] / "scenarios"

LEADER_BUILTINS: Dict[str, Tuple[str, ...]] = {
    "ex1": ("t + 2", "8*t + 4"),
}

Vector = Tuple[float, ...]
Matrix = Tuple[Vector, ...]


@dataclass(frozen=True)
class EdgeSpec:
    """Directed edge; ``target`` receives ``source``'s state (0-based)."""

    source: int
    target: int
    weight: float


@dataclass(frozen=True)
class TopologySpec:
    n_agents: int
    pin_gains: Vector
    edges: Tuple[EdgeSpec, ...]


@dataclass(frozen=True)
class DynamicsSpec:
    name: str
    params: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class FormationSection:
    offsets: Matrix
    d_max: Optional[float] = None


@dataclass(frozen=True)
class ControlSection:
    k: Matrix
    c: float
    observer_gain: Matrix
    law: str = "absolute"
    enforce_gain_conditions: bool = True


@dataclass(frozen=True)
class BasisSection:
    extent: Tuple[float, float] = (-5.0, 5.0)
    per_axis: int = 3
    width: float = 10.0


@dataclass(frozen=True)
class LeaderSection:
    builtin: Optional[str] = None
    expressions: Optional[Tuple[str, ...]] = None

    @property
    def resolved(self) -> Tuple[str, ...]:
        """Expressions of the trajectory, with builtins expanded."""
        if self.builtin is not None:
            return LEADER_BUILTINS[self.builtin]
        return self.expressions


@dataclass(frozen=True)
class DetectionSection:
    bounds: str = "calibrate"
    reference_threshold: Optional[float] = None
    settle_time: Optional[float] = None


@dataclass(frozen=True)
class Scenario:
    """Everything needed to run one closed-loop experiment.

    Attributes:
        disturbances: (agent, expressions) pairs; undeclared agents are undisturbed
        base_dir: Directory of the source file, used to resolve relative paths
    """

    name: str
    state_dim: int
    sample_period: float
    horizon: int
    topology: TopologySpec
    dynamics: DynamicsSpec
    formation: FormationSection
    control: ControlSection
    tuning: TuningParams
    basis: BasisSection
    leader: LeaderSection
    initial_states: Matrix
    disturbances: Tuple[Tuple[int, Tuple[str, ...]], ...] = ()
    attacks: Tuple[AttackSpec, ...] = ()
    detection: DetectionSection = DetectionSection()
    description: str = ""
    schema_version: int = SCHEMA_VERSION
    base_dir: Optional[Path] = field(default=None, compare=False)

    @property
    def n_agents(self) -> int:
        return self.topology.n_agents

    @property
    def duration(self) -> float:
        """Simulated time in seconds."""
        return self.horizon * self.sample_period

    def attack(self, attack_id: str) -> AttackSpec:
        for spec in self.attacks:
            if spec.id == attack_id:
                return spec
        raise ConfigurationError(
            f"unknown attack id {attack_id!r}; declared: {', '.join(a.id for a in self.attacks) or 'none'}"
        )

    def without_attacks(self) -> "Scenario":
        return replace(self, attacks=())

    def with_horizon(self, horizon: Optional[int]) -> "Scenario":
        """Copy with another horizon; windows past the end simply never fire."""
        if horizon is None:
            return self
        if horizon < 1:
            raise ConfigurationError(f"horizon must be at least 1 step, got {horizon}")
        return replace(self, horizon=int(horizon))


class _Table:
    """Strict view of one TOML table that tracks the dotted key path."""

    def __init__(self, data: Any, path: str):
        if not isinstance(data, dict):
            raise ScenarioParseError("expected a table", key=path or "<root>")
        self.data = data
        self.path = path
        self.seen: set = set()

    def key(self, name: str) -> str:
        return f"{self.path}.{name}" if self.path else name

    def get(self, name: str, default: Any = ..., kind: Any = None) -> Any:
        self.seen.add(name)
        if name not in self.data:
            if default is ...:
                raise ScenarioParseError("missing required key", key=self.key(name))
            return default
        value = self.data[name]
        if kind is not None and not _is_kind(value, kind):
            raise ScenarioParseError(f"expected {_kind_name(kind)}, got {type(value).__name__}", key=self.key(name))
        return value

    def table(self, name: str, required: bool = True) -> Optional["_Table"]:
        value = self.get(name, default=... if required else None)
        return None if value is None else _Table(value, self.key(name))

    def finish(self) -> None:
        unknown = sorted(set(self.data) - self.seen)
        if unknown:
            raise ScenarioParseError(f"unknown keys {unknown}", key=self.path or "<root>")


def _is_kind(value: Any, kind: Any) -> bool:
    if kind is float:
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if kind is int:
        return isinstance(value, int) and not isinstance(value, bool)
    return isinstance(value, kind)


def _kind_name(kind: Any) -> str:
    return {float: "number", int: "integer", str: "string", list: "array", dict: "table", bool: "boolean"}.get(
        kind, str(kind)
    )


def _vector(value: Any, length: int, key: str) -> Vector:
    if not isinstance(value, list) or len(value) != length:
        raise ScenarioParseError(f"expected an array of {length} numbers", key=key)
    if not all(_is_kind(v, float) for v in value):
        raise ScenarioParseError("array entries must be numbers", key=key)
    vector = tuple(float(v) for v in value)
    if not all(math.isfinite(v) for v in vector):
        raise ScenarioParseError("array entries must be finite", key=key)
    return vector


def _matrix(value: Any, rows: int, cols: int, key: str) -> Matrix:
    if not isinstance(value, list) or len(value) != rows:
        raise ScenarioParseError(f"expected {rows} rows of {cols} numbers", key=key)
    return tuple(_vector(row, cols, f"{key}[{index}]") for index, row in enumerate(value))


def _strings(value: Any, length: int, key: str) -> Tuple[str, ...]:
    if not isinstance(value, list) or len(value) != length or not all(isinstance(v, str) for v in value):
        raise ScenarioParseError(f"expected an array of {length} expression strings", key=key)
    try:
        VectorExpression.parse(value)
    except ScenarioParseError as exc:
        raise ScenarioParseError(str(exc), key=key) from exc
    return tuple(value)


def _agent(value: Any, n_agents: int, key: str) -> int:
    if not _is_kind(value, int) or not 1 <= value <= n_agents:
        raise ScenarioParseError(f"agent index must be an integer in 1..{n_agents}", key=key)
    return value - 1


def _positive(value: float, key: str, allow_zero: bool = False) -> float:
    if not math.isfinite(value) or value < 0.0 or (value == 0.0 and not allow_zero):
        raise ScenarioParseError("must be " + ("nonnegative" if allow_zero else "positive"), key=key)
    return float(value)


def _parse_topology(t: _Table) -> TopologySpec:
    n_agents = t.get("n_agents", kind=int)
    if n_agents < 1:
        raise ScenarioParseError("must be at least 1", key=t.key("n_agents"))
    pin_gains = _vector(t.get("pin_gains"), n_agents, t.key("pin_gains"))
    edges: List[EdgeSpec] = []
    seen = set()
    for index, raw in enumerate(t.get("edges", default=[], kind=list)):
        e = _Table(raw, f"{t.key('edges')}[{index}]")
        source = _agent(e.get("from"), n_agents, e.key("from"))
        target = _agent(e.get("to"), n_agents, e.key("to"))
        weight = _positive(float(e.get("weight", default=1.0, kind=float)), e.key("weight"))
        e.finish()
        if source == target:
            raise ScenarioParseError("self loops are not allowed", key=e.path)
        if (source, target) in seen:
            raise ScenarioParseError("duplicate edge", key=e.path)
        seen.add((source, target))
        edges.append(EdgeSpec(source, target, weight))
    t.finish()
    return TopologySpec(n_agents, pin_gains, tuple(edges))


def _parse_attack(a: _Table, scenario_shape: Tuple[int, int], edges: set, duration: float) -> AttackSpec:
    n_agents, state_dim = scenario_shape
    attack_id = a.get("id", kind=str)
    kind = a.get("kind", kind=str)
    if kind not in ("actuator", "sensor", "neighbour"):
        raise ScenarioParseError("must be one of actuator, sensor, neighbour", key=a.key("kind"))
    target = _agent(a.get("target"), n_agents, a.key("target"))
    raw_source = a.get("source", default=None)
    source = None if raw_source is None else _agent(raw_source, n_agents, a.key("source"))
    if kind == "neighbour":
        if source is None:
            raise ScenarioParseError("neighbour attacks need a source agent", key=a.key("source"))
        if (source, target) not in edges:
            raise ScenarioParseError(f"edge {source + 1}->{target + 1} does not exist", key=a.key("source"))
    elif source is not None:
        raise ScenarioParseError(f"{kind} attacks take no source", key=a.key("source"))
    window = _vector(a.get("window"), 2, a.key("window"))
    if not 0.0 <= window[0] <= window[1] <= duration:
        raise ScenarioParseError(f"window must satisfy 0 <= start <= end <= {duration:g} s", key=a.key("window"))
    signal = _strings(a.get("signal"), state_dim, a.key("signal"))
    a.finish()
    return AttackSpec(id=attack_id, kind=kind, target=target, source=source, window=window, signal=signal)


def parse_scenario(data: Dict[str, Any], base_dir: Optional[Path] = None) -> Scenario:
    """Validate a decoded scenario document.

    Args:
        data: Mapping as produced by ``tomllib``
        base_dir: Directory used to resolve relative bound file paths

    Returns:
        Parsed scenario

    Raises:
        ScenarioParseError: With the dotted key path of the first offending entry
    """
    root = _Table(data, "")
    version = root.get("schema_version", kind=int)
    if version != SCHEMA_VERSION:
        raise ScenarioParseError(f"unsupported version {version}, expected {SCHEMA_VERSION}", key="schema_version")
    name = root.get("name", kind=str)
    description = root.get("description", default="", kind=str)
    state_dim = root.get("state_dim", kind=int)
    if state_dim < 1:
        raise ScenarioParseError("must be at least 1", key="state_dim")
    sample_period = _positive(float(root.get("sample_period", kind=float)), "sample_period")
    horizon = root.get("horizon", kind=int)
    if horizon < 1:
        raise ScenarioParseError("must be at least 1", key="horizon")

    topology = _parse_topology(root.table("topology"))
    n_agents = topology.n_agents

    d = root.table("dynamics")
    dynamics = DynamicsSpec(d.get("name", kind=str), dict(d.get("params", default={}, kind=dict)))
    d.finish()

    f = root.table("formation")
    offsets = _matrix(f.get("offsets"), n_agents, state_dim, f.key("offsets"))
    d_max = f.get("d_max", default=None, kind=float)
    f.finish()
    formation = FormationSection(offsets, None if d_max is None else float(d_max))

    c = root.table("control")
    law = c.get("law", default="absolute", kind=str)
    if law not in CONTROL_LAWS:
        raise ScenarioParseError(f"must be one of {', '.join(CONTROL_LAWS)}", key=c.key("law"))
    control = ControlSection(
        k=_matrix(c.get("k"), n_agents, state_dim, c.key("k")),
        c=float(c.get("c", kind=float)),
        observer_gain=_matrix(c.get("observer_gain"), n_agents, state_dim, c.key("observer_gain")),
        law=law,
        enforce_gain_conditions=c.get("enforce_gain_conditions", default=True, kind=bool),
    )
    c.finish()

    tu = root.table("tuning")
    alpha = _positive(float(tu.get("alpha", kind=float)), tu.key("alpha"), allow_zero=True)
    gamma = float(tu.get("gamma", kind=float))
    if not 0.0 < gamma < 1.0:
        raise ScenarioParseError("must lie strictly between 0 and 1", key=tu.key("gamma"))
    tu.finish()

    b = root.table("basis", required=False)
    basis = BasisSection()
    if b is not None:
        extent = _vector(b.get("extent", default=list(basis.extent)), 2, b.key("extent"))
        if extent[0] >= extent[1]:
            raise ScenarioParseError("low end must be below high end", key=b.key("extent"))
        per_axis = b.get("per_axis", default=basis.per_axis, kind=int)
        if per_axis < 1:
            raise ScenarioParseError("must be at least 1", key=b.key("per_axis"))
        width = _positive(float(b.get("width", default=basis.width, kind=float)), b.key("width"))
        b.finish()
        basis = BasisSection(extent, per_axis, width)

    lt = root.table("leader")
    builtin = lt.get("builtin", default=None, kind=str)
    raw_expressions = lt.get("expressions", default=None)
    if (builtin is None) == (raw_expressions is None):
        raise ScenarioParseError("declare exactly one of builtin or expressions", key="leader")
    if builtin is not None:
        if builtin not in LEADER_BUILTINS:
            raise ScenarioParseError(f"unknown builtin, known: {', '.join(LEADER_BUILTINS)}", key=lt.key("builtin"))
        if len(LEADER_BUILTINS[builtin]) != state_dim:
            raise ScenarioParseError(f"builtin is {len(LEADER_BUILTINS[builtin])}-dimensional", key=lt.key("builtin"))
    expressions = None if raw_expressions is None else _strings(raw_expressions, state_dim, lt.key("expressions"))
    lt.finish()
    leader = LeaderSection(builtin, expressions)

    it = root.table("initial")
    initial_states = _matrix(it.get("states"), n_agents, state_dim, it.key("states"))
    it.finish()

    disturbances: List[Tuple[int, Tuple[str, ...]]] = []
    dt = root.table("disturbances", required=False)
    if dt is not None:
        declared = dt.get("expressions", default={}, kind=dict)
        for raw_agent, exprs in declared.items():
            key = f"{dt.key('expressions')}.{raw_agent}"
            if not raw_agent.isdigit():
                raise ScenarioParseError("agent keys must be 1-based integers", key=key)
            agent = _agent(int(raw_agent), n_agents, key)
            disturbances.append((agent, _strings(exprs, state_dim, key)))
        dt.finish()

    edges = {(e.source, e.target) for e in topology.edges}
    attacks: List[AttackSpec] = []
    for index, raw in enumerate(root.get("attacks", default=[], kind=list)):
        spec = _parse_attack(_Table(raw, f"attacks[{index}]"), (n_agents, state_dim), edges, horizon * sample_period)
        if any(a.id == spec.id for a in attacks):
            raise ScenarioParseError(f"duplicate attack id {spec.id!r}", key=f"attacks[{index}].id")
        attacks.append(spec)

    detection = DetectionSection()
    dn = root.table("detection", required=False)
    if dn is not None:
        reference = dn.get("reference_threshold", default=None, kind=float)
        settle = dn.get("settle_time", default=None, kind=float)
        detection = DetectionSection(
            bounds=dn.get("bounds", default="calibrate", kind=str),
            reference_threshold=None if reference is None else float(reference),
            settle_time=None if settle is None else _positive(float(settle), dn.key("settle_time"), allow_zero=True),
        )
        dn.finish()
    root.finish()

    scenario = Scenario(
        name=name,
        state_dim=state_dim,
        sample_period=sample_period,
        horizon=horizon,
        topology=topology,
        dynamics=dynamics,
        formation=formation,
        control=control,
        tuning=TuningParams(alpha, gamma),
        basis=basis,
        leader=leader,
        initial_states=initial_states,
        disturbances=tuple(sorted(disturbances)),
        attacks=tuple(attacks),
        detection=detection,
        description=description,
        schema_version=version,
        base_dir=base_dir,
    )
    _check_semantics(scenario)
    return scenario


def _check_semantics(scenario: Scenario) -> None:
    """Run the object constructors once so invalid values fail at load time."""
    try:
        build_laplacian(build_graph(scenario), scenario.state_dim)
        build_formation(scenario)
        build_gains(scenario)
        build_dynamics(scenario)
    except ScenarioParseError:
        raise
    except FormationError as exc:
        raise ScenarioParseError(str(exc)) from exc


def load_scenario(path: Path) -> Scenario:
    """Read and validate a scenario file.

    Args:
        path: File path, or the name of a bundled scenario

    Returns:
        Parsed scenario

    Raises:
        ScenarioParseError: If the file is missing, malformed or invalid
    """
    path = resolve_scenario_path(path)
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioParseError(f"malformed TOML: {exc}", key=str(path)) from exc
    except OSError as exc:
        raise ScenarioParseError(f"cannot read scenario: {exc.strerror}", key=str(path)) from exc
    scenario = parse_scenario(data, base_dir=path.parent)
    logger.info("loaded scenario %r from %s", scenario.name, path)
    return scenario


def resolve_scenario_path(path) -> Path:
    """Return ``path`` if it exists, else the bundled scenario of that name."""
    candidate = Path(path)
    if candidate.exists():
        return candidate
    bundled = SCENARIO_DIR / f"{candidate.stem}.toml"
    return bundled if bundled.exists() else candidate


def scenario_to_dict(scenario: Scenario) -> Dict[str, Any]:
    """Serialize to the file layout (1-based indices, no null values)."""
    data: Dict[str, Any] = {
        "schema_version": scenario.schema_version,
        "name": scenario.name,
    }
    if scenario.description:
        data["description"] = scenario.description
    data.update(
        state_dim=scenario.state_dim,
        sample_period=scenario.sample_period,
        horizon=scenario.horizon,
    )
    data["topology"] = {
        "n_agents": scenario.topology.n_agents,
        "pin_gains": list(scenario.topology.pin_gains),
        "edges": [{"from": e.source + 1, "to": e.target + 1, "weight": e.weight} for e in scenario.topology.edges],
    }
    data["dynamics"] = {"name": scenario.dynamics.name}
    if scenario.dynamics.params:
        data["dynamics"]["params"] = dict(scenario.dynamics.params)
    data["formation"] = {"offsets": [list(row) for row in scenario.formation.offsets]}
    if scenario.formation.d_max is not None:
        data["formation"]["d_max"] = scenario.formation.d_max
    control = scenario.control
    data["control"] = {
        "k": [list(row) for row in control.k],
        "c": control.c,
        "observer_gain": [list(row) for row in control.observer_gain],
        "law": control.law,
        "enforce_gain_conditions": control.enforce_gain_conditions,
    }
    data["tuning"] = {"alpha": scenario.tuning.alpha, "gamma": scenario.tuning.gamma}
    data["basis"] = {
        "extent": list(scenario.basis.extent),
        "per_axis": scenario.basis.per_axis,
        "width": scenario.basis.width,
    }
    if scenario.leader.builtin is not None:
        data["leader"] = {"builtin": scenario.leader.builtin}
    else:
        data["leader"] = {"expressions": list(scenario.leader.expressions)}
    data["initial"] = {"states": [list(row) for row in scenario.initial_states]}
    if scenario.disturbances:
        data["disturbances"] = {
            "expressions": {str(agent + 1): list(exprs) for agent, exprs in scenario.disturbances}
        }
    if scenario.attacks:
        attacks = []
        for a in scenario.attacks:
            entry: Dict[str, Any] = {"id": a.id, "kind": a.kind, "target": a.target + 1}
            if a.source is not None:
                entry["source"] = a.source + 1
            entry["window"] = list(a.window)
            entry["signal"] = list(a.signal)
            attacks.append(entry)
        data["attacks"] = attacks
    detection: Dict[str, Any] = {"bounds": scenario.detection.bounds}
    if scenario.detection.reference_threshold is not None:
        detection["reference_threshold"] = scenario.detection.reference_threshold
    if scenario.detection.settle_time is not None:
        detection["settle_time"] = scenario.detection.settle_time
    data["detection"] = detection
    return data


def dump_scenario(scenario: Scenario, path: Path) -> Path:
    """Write a scenario as TOML."""
    path = Path(path)
    with open(path, "wb") as f:
        tomli_w.dump(scenario_to_dict(scenario), f)
    return path


def build_graph(scenario: Scenario) -> DirectedWeightedGraph:
    edges = [(e.source, e.target, e.weight) for e in scenario.topology.edges]
    return DirectedWeightedGraph.from_edges(scenario.n_agents, edges, scenario.topology.pin_gains)


def build_formation(scenario: Scenario) -> FormationSpec:
    return FormationSpec(np.array(scenario.formation.offsets), scenario.formation.d_max)


def build_gains(scenario: Scenario) -> ControlGains:
    control = scenario.control
    return ControlGains(
        k=np.array(control.k),
        c=control.c,
        observer_gain=np.array(control.observer_gain),
        law=control.law,
    )


def build_basis(scenario: Scenario) -> RbfBasis:
    return RbfBasis.grid(
        scenario.state_dim,
        extent=scenario.basis.extent,
        per_axis=scenario.basis.per_axis,
        width=scenario.basis.width,
    )


def build_dynamics(scenario: Scenario) -> AgentDynamics:
    return create_dynamics(scenario.dynamics.name, scenario.state_dim, scenario.dynamics.params)


def build_attacks(scenario: Scenario) -> List[AttackChannel]:
    """Instantiate and validate every declared attack channel."""
    graph = build_graph(scenario)
    channels = [create_attack(spec) for spec in scenario.attacks]
    for channel in channels:
        channel.validate(scenario.n_agents, scenario.state_dim, graph)
    return channels


def bounds_path(scenario: Scenario) -> Optional[Path]:
    """Path of the declared bound file, or None when bounds are calibrated."""
    if scenario.detection.bounds == "calibrate":
        return None
    path = Path(scenario.detection.bounds)
    if not path.is_absolute() and scenario.base_dir is not None:
        path = scenario.base_dir / path
    return path
