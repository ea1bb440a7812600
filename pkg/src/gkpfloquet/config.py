"""Experiment configuration: parsing, overrides, canonical form, hashing.

Configs are YAML (or JSON) mappings with one section per component
dataclass; everything is dimensionless (couplings in units of omega_0,
times in units of T). ``canonical_dict`` fixes a sorted, fully resolved
form of a config; its SHA-256 prefix is the config hash stamped into
every artifact, so outputs can always be traced to the exact settings
that produced them.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json

import yaml

from .errors import ConfigError
from .floquet import IntegratorConfig
from .hamiltonians import ModelParams
from .noise import FluxNoiseConfig, NoiseConfig
from .prep import RampSchedule

__all__ = [
    "EXPERIMENT_KINDS",
    "SweepSpec",
    "WignerSpec",
    "ExperimentConfig",
    "config_from_dict",
    "parse_config_file",
    "load_config",
    "apply_overrides",
    "canonical_dict",
    "config_hash",
    "write_config_yaml",
]

EXPERIMENT_KINDS = (
    "floquet-scan",
    "n-sweep",
    "prep-sweep",
    "robustness-sweep",
    "wigner-dump",
)


@dataclasses.dataclass(frozen=True)
class SweepSpec:
    """One swept axis: a dotted config path and the values to visit."""

    axis: str
    values: tuple

    def __post_init__(self):
        if not isinstance(self.axis, str) or not self.axis:
            raise ConfigError("sweep.axis must be a non-empty dotted field path")
        vals = tuple(self.values)
        for v in vals:
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise ConfigError(f"sweep.values must be numeric, got {v!r}")
        object.__setattr__(self, "values", vals)


@dataclasses.dataclass(frozen=True)
class WignerSpec:
    """Grid settings for wigner-dump outputs."""

    state: str = "psi_plus"
    half_extent: float = 5.5
    n_points: int = 111

    def __post_init__(self):
        if self.state not in ("psi_plus", "psi_minus"):
            raise ConfigError("wigner.state must be 'psi_plus' or 'psi_minus'")
        if not self.half_extent > 0:
            raise ConfigError("wigner.half_extent must be positive")
        if not (isinstance(self.n_points, int) and self.n_points >= 2):
            raise ConfigError("wigner.n_points must be an integer >= 2")


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    """A fully resolved experiment: what to run and with which physics."""

    experiment: str
    model: ModelParams
    integrator: IntegratorConfig
    ramp: RampSchedule | None = None
    noise: NoiseConfig | None = None
    sweep: SweepSpec | None = None
    wigner: WignerSpec | None = None
    space_dim: int = 250
    output_dir: str = "runs"
    master_seed: int = 0
    physical_units: dict | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENT_KINDS:
            raise ConfigError(
                f"experiment must be one of {', '.join(EXPERIMENT_KINDS)}; "
                f"got {self.experiment!r}"
            )
        if not (isinstance(self.space_dim, int) and self.space_dim >= 8):
            raise ConfigError("space_dim must be an integer >= 8")
        if not (isinstance(self.master_seed, int) and 0 <= self.master_seed < 2 ** 64):
            raise ConfigError("master_seed must fit an unsigned 64-bit integer")
        if self.experiment == "prep-sweep" and self.ramp is None:
            raise ConfigError("prep-sweep requires a ramp section")


_SECTION_FIELDS = {
    "model": {f.name for f in dataclasses.fields(ModelParams)},
    "integrator": {f.name for f in dataclasses.fields(IntegratorConfig)},
    "ramp": {f.name for f in dataclasses.fields(RampSchedule)},
    "noise": {f.name for f in dataclasses.fields(NoiseConfig)},
    "flux_noise": {f.name for f in dataclasses.fields(FluxNoiseConfig)},
    "sweep": {f.name for f in dataclasses.fields(SweepSpec)},
    "wigner": {f.name for f in dataclasses.fields(WignerSpec)},
}
_TOP_LEVEL = {
    "experiment", "model", "integrator", "ramp", "noise", "sweep", "wigner",
    "space_dim", "output_dir", "master_seed", "physical_units",
}


def _check_keys(section: str, mapping: dict, allowed: set, source: str) -> None:
    if not isinstance(mapping, dict):
        raise ConfigError(f"{source}: {section} must be a mapping")
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(
            f"{source}: unknown field {section}.{sorted(unknown)[0]}"
            if section else f"{source}: unknown field {sorted(unknown)[0]}"
        )


def _build_section(cls, section: str, mapping: dict | None, source: str):
    if mapping is None:
        return None
    _check_keys(section, mapping, _SECTION_FIELDS[section], source)
    kwargs = dict(mapping)
    if section == "noise" and isinstance(kwargs.get("flux_noise"), dict):
        kwargs["flux_noise"] = _build_section(
            FluxNoiseConfig, "flux_noise", kwargs["flux_noise"], source)
    try:
        return cls(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{source}: {section}: {exc}") from exc


def _resolve_physical_units(raw: dict, source: str) -> None:
    """Convert the optional physical-units block into dimensionless fields.

    Supported keys: ``oscillator_frequency_ghz`` (omega_0 / 2 pi),
    ``coupling_mhz`` (J / hbar / 2 pi, sets model.j_over_omega0) and
    ``preparation_time_us`` (sets ramp.t_f in periods). The block itself
    is kept verbatim and echoed in run metadata.
    """
    block = raw.get("physical_units")
    if block is None:
        return
    allowed = {"oscillator_frequency_ghz", "coupling_mhz", "preparation_time_us"}
    _check_keys("physical_units", block, allowed, source)
    try:
        f0_ghz = float(block["oscillator_frequency_ghz"])
    except KeyError:
        raise ConfigError(
            f"{source}: physical_units requires oscillator_frequency_ghz") from None
    if not f0_ghz > 0:
        raise ConfigError(f"{source}: oscillator_frequency_ghz must be positive")
    if "coupling_mhz" in block:
        raw.setdefault("model", {})
        raw["model"]["j_over_omega0"] = float(block["coupling_mhz"]) / (1e3 * f0_ghz)
    if "preparation_time_us" in block:
        raw.setdefault("ramp", {})
        # periods elapsed in t_us: t_us * f0 (GHz) * 1000
        raw["ramp"]["t_f"] = float(block["preparation_time_us"]) * f0_ghz * 1e3


def config_from_dict(raw: dict, source: str = "<config>") -> ExperimentConfig:
    """Validate a parsed mapping and build the experiment config."""
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    try:
        raw = json.loads(json.dumps(raw))  # deep copy, reject non-plain data
    except TypeError as exc:
        raise ConfigError(f"{source}: non-plain value in config: {exc}") from exc
    _check_keys("", raw, _TOP_LEVEL, source)
    if "experiment" not in raw:
        raise ConfigError(f"{source}: missing required field 'experiment'")
    _resolve_physical_units(raw, source)

    model = _build_section(ModelParams, "model", raw.get("model", {}), source)
    integ_raw = dict(raw.get("integrator", {}) or {})
    integ_raw.setdefault("steps_per_period", 128 * model.n_harmonics)
    integrator = _build_section(IntegratorConfig, "integrator", integ_raw, source)
    sweep_raw = raw.get("sweep")
    if sweep_raw is not None:
        _check_keys("sweep", sweep_raw, _SECTION_FIELDS["sweep"], source)
        if "axis" not in sweep_raw or "values" not in sweep_raw:
            raise ConfigError(f"{source}: sweep needs both axis and values")
        sweep = SweepSpec(sweep_raw["axis"], tuple(sweep_raw["values"]))
    else:
        sweep = None
    try:
        return ExperimentConfig(
            experiment=raw["experiment"],
            model=model,
            integrator=integrator,
            ramp=_build_section(RampSchedule, "ramp", raw.get("ramp"), source),
            noise=_build_section(NoiseConfig, "noise", raw.get("noise"), source),
            sweep=sweep,
            wigner=_build_section(WignerSpec, "wigner", raw.get("wigner"), source),
            space_dim=raw.get("space_dim", 250),
            output_dir=raw.get("output_dir", "runs"),
            master_seed=raw.get("master_seed", 0),
            physical_units=raw.get("physical_units"),
        )
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def parse_config_file(path) -> dict:
    """Parse a YAML or JSON config file to a raw mapping; parse errors
    carry the file position."""
    path = str(path)
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if path.endswith(".json"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    else:
        try:
            raw = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            where = f":{mark.line + 1}:{mark.column + 1}" if mark else ""
            raise ConfigError(f"{path}{where}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return raw


def load_config(path) -> ExperimentConfig:
    """Parse and validate a YAML or JSON config file."""
    return config_from_dict(parse_config_file(path), source=str(path))


def apply_overrides(raw: dict, overrides) -> dict:
    """Apply repeatable ``key.path=value`` overrides to a parsed mapping.

    Values are parsed as YAML scalars, so numbers, booleans and lists all
    work from the command line.
    """
    out = json.loads(json.dumps(raw))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, _, value = item.partition("=")
        parts = key.strip().split(".")
        if any(not p for p in parts):
            raise ConfigError(f"override {item!r} has an empty path component")
        try:
            parsed = yaml.safe_load(value)
        except yaml.YAMLError as exc:
            raise ConfigError(f"override {item!r}: unparseable value: {exc}") from exc
        if isinstance(parsed, str):
            # YAML leaves bare scientific notation like 3e-3 as a string
            try:
                parsed = int(parsed, 0)
            except ValueError:
                try:
                    parsed = float(parsed)
                except ValueError:
                    pass
        node = out
        for p in parts[:-1]:
            nxt = node.setdefault(p, {})
            if not isinstance(nxt, dict):
                raise ConfigError(f"override {item!r}: {p} is not a section")
            node = nxt
        node[parts[-1]] = parsed
    return out


def canonical_dict(config: ExperimentConfig) -> dict:
    """Sorted plain-data form of a resolved config; the hashing input.

    Every defaulted field is materialized, so two configs that resolve to
    the same physics hash identically regardless of how sparse their
    source files were.
    """
    out = {
        "experiment": config.experiment,
        "model": dataclasses.asdict(config.model),
        "integrator": dataclasses.asdict(config.integrator),
        "ramp": dataclasses.asdict(config.ramp) if config.ramp else None,
        "noise": dataclasses.asdict(config.noise) if config.noise else None,
        "sweep": (
            {"axis": config.sweep.axis, "values": list(config.sweep.values)}
            if config.sweep else None
        ),
        "wigner": dataclasses.asdict(config.wigner) if config.wigner else None,
        "space_dim": config.space_dim,
        "output_dir": config.output_dir,
        "master_seed": config.master_seed,
        "physical_units": config.physical_units,
    }
    return json.loads(json.dumps(out, sort_keys=True))


def config_hash(config: ExperimentConfig) -> str:
    """12-hex-digit digest of the canonical config (output_dir excluded,
    so moving artifacts does not change their identity)."""
    payload = canonical_dict(config)
    payload.pop("output_dir")
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def write_config_yaml(path, config: ExperimentConfig) -> None:
    """Archive the resolved config next to its outputs."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# config: {config_hash(config)}\n")
        yaml.safe_dump(canonical_dict(config), fh, sort_keys=True)
