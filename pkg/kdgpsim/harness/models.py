# -*- coding: utf-8 -*-
"""Experiment configuration and per-trial results."""
import enum
import json
import logging
import numbers
from dataclasses import asdict, dataclass, field, fields

from marshmallow import ValidationError
from marshmallow.validate import And, OneOf, Range

from kdgpsim.basis import SPECTRAL_FORM_ALIASES, BasisSelection, KernelHyperparams, SpectralForm
from kdgpsim.errors import ConfigurationError, KdgpError
from kdgpsim.field import FieldSampler
from kdgpsim.network import LinkKind, LinkModel

log = logging.getLogger(__name__)


class ExperimentKind(str, enum.Enum):
    """The experiments the harness can run."""

    CONSENSUS_BENCH = "consensus-bench"
    STATIONARY = "stationary"
    DYNAMIC = "dynamic"
    KERNEL_APPROX = "kernel-approx"


def _integral(value):
    return isinstance(value, numbers.Real) and float(value).is_integer()


def _positive_integer(name):
    message = f"{name} must be a positive integer"
    return And(_integral, Range(min=1, error=message), error=message)


def _non_negative_integer(name):
    message = f"{name} must be a non-negative integer"
    return And(_integral, Range(min=0, error=message), error=message)


def _choice(name, enum_cls, aliases=()):
    return OneOf(
        [member.value for member in enum_cls] + list(aliases),
        error=f"{name} must be one of: {{choices}}",
    )


FIELD_VALIDATORS = {
    **{
        name: _positive_integer(name)
        for name in ("R", "E", "K_max", "T_max", "trials", "kernel_points", "workers")
    },
    "consensus_patience": _positive_integer("consensus_patience"),
    "theta_th": Range(min=0, min_inclusive=False, error="theta_th must be positive"),
    "delta_k": Range(min=0, error="delta_k must be non-negative"),
    "step_duration": Range(min=0, min_inclusive=False, error="step_duration must be positive"),
    "lossy_fraction": Range(min=0, max=1, error="lossy_fraction must lie in [0, 1]"),
    "consensus_tolerance": Range(min=0, error="consensus_tolerance must be non-negative"),
    "seed": _non_negative_integer("seed"),
}
CHOICE_VALIDATORS = {
    "kind": _choice("kind", ExperimentKind),
    "link": _choice("link", LinkKind),
    "spectral_form": _choice("spectral_form", SpectralForm, SPECTRAL_FORM_ALIASES),
    "basis_selection": _choice("basis_selection", BasisSelection),
    "truth_sampler": _choice("truth_sampler", FieldSampler),
}
_E_LIST_ENTRY = _non_negative_integer("e_list entries")


def _first_message(exc):
    messages = exc.messages
    return messages[0] if isinstance(messages, list) else str(messages)


UNIT_SQUARE = (0.0, 1.0, 0.0, 1.0)

KIND_DEFAULTS = {
    ExperimentKind.CONSENSUS_BENCH: dict(R=30, E=50, T_max=100, trials=100),
    # l=0.2 keeps the field resolvable by 50 sensors and E=100 modes
    ExperimentKind.STATIONARY: dict(
        R=50, E=100, K_max=10, T_max=30, trials=20, length_scale=0.2, margin=1.6
    ),
    ExperimentKind.DYNAMIC: dict(
        R=50,
        E=100,
        K_max=40,
        T_max=15,
        trials=10,
        flag_dynamic=True,
        domain=(0.0, 10.0, 0.0, 10.0),
        grid=(50, 50),
        length_scale=1.0,
    ),
    ExperimentKind.KERNEL_APPROX: dict(
        trials=1, length_scale=0.07, spectral_form="standard_2d", e_list=(80, 400)
    ),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Every knob of an experiment, addressable by name from a flat JSON file."""

    kind: ExperimentKind = ExperimentKind.STATIONARY
    R: int = 50
    E: int = 100
    K_max: int = 10
    T_max: int = 30
    theta_th: float = 1e-6
    flag_dynamic: bool = False
    gamma: float = None
    link: LinkKind = LinkKind.SYNC
    p: float = 0.3
    lossy_fraction: float = 1.0
    d_comm: float = None
    target_degree: float = 6.0
    domain: tuple = UNIT_SQUARE
    grid: tuple = (40, 40)
    margin: float = 1.2
    sigma_s: float = 4.0
    length_scale: float = 0.05
    sigma_n: float = 0.5
    temporal_scale: float = 3600.0
    delta_k: float = 25.0
    spectral_form: SpectralForm = SpectralForm.THREE_HALVES
    basis_selection: BasisSelection = BasisSelection.LOWEST
    truth_sampler: FieldSampler = FieldSampler.DENSE
    step_duration: float = 0.0025
    source_location: tuple = (6.0, 6.0)
    e_list: tuple = (80, 400)
    kernel_points: int = 50
    consensus_tolerance: float = 0.01
    consensus_patience: int = 3
    centralized_gp: bool = True
    compare_without_prediction: bool = True
    snapshots: bool = False
    record_timing: bool = False
    trials: int = 1
    seed: int = 0
    out: str = "results"
    workers: int = 1

    def __post_init__(self):
        """Check and coerce the enums and tuples, then validate."""
        for name, validator in CHOICE_VALIDATORS.items():
            self._check(name, validator, getattr(self, name))
        object.__setattr__(self, "kind", ExperimentKind(self.kind))
        object.__setattr__(self, "link", LinkKind(self.link))
        object.__setattr__(self, "spectral_form", SpectralForm(self.spectral_form))
        object.__setattr__(self, "basis_selection", BasisSelection(self.basis_selection))
        object.__setattr__(self, "truth_sampler", FieldSampler(self.truth_sampler))
        for name in ("domain", "grid", "source_location", "e_list"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        self._validate()

    def _validate(self):
        for name, validator in FIELD_VALIDATORS.items():
            self._check(name, validator, getattr(self, name))
        if len(self.domain) != 4 or len(self.grid) != 2:
            raise ConfigurationError("domain needs 4 bounds and grid 2 sizes")
        for entry in self.e_list:
            self._check("e_list", _E_LIST_ENTRY, entry)
        try:
            self.hp
            self.link_model
        except KdgpError as exc:
            raise ConfigurationError(str(exc)) from exc

    @staticmethod
    def _check(name, validator, value):
        try:
            validator(value)
        except ValidationError as exc:
            raise ConfigurationError(_first_message(exc)) from exc
        except TypeError as exc:
            raise ConfigurationError(f"{name} must be a number, got {value!r}") from exc

    @property
    def hp(self):
        """Kernel and noise hyperparameters."""
        return KernelHyperparams(
            sigma_s=self.sigma_s,
            length_scale=self.length_scale,
            sigma_n=self.sigma_n,
            temporal_scale=self.temporal_scale,
        )

    @property
    def link_model(self):
        """The configured link-degradation model."""
        return LinkModel(kind=self.link, p=self.p)

    @classmethod
    def for_kind(cls, kind, **overrides):
        """Defaults of ``kind`` updated with ``overrides``."""
        kind = ExperimentKind(kind)
        known = {f.name for f in fields(cls)}
        unknown = set(overrides) - known
        if unknown:
            raise ConfigurationError(f"unknown configuration key(s): {', '.join(sorted(unknown))}")
        values = dict(KIND_DEFAULTS[kind])
        values.update(overrides)
        values["kind"] = kind
        try:
            return cls(**values)
        except KdgpError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"invalid configuration: {exc}") from exc

    def to_dict(self):
        """JSON-compatible flat dictionary."""
        data = asdict(self)
        for key, value in data.items():
            if isinstance(value, enum.Enum):
                data[key] = value.value
            elif isinstance(value, tuple):
                data[key] = list(value)
        return data


def parse_override(item):
    """Parse a ``key=value`` override; the value is read as JSON when possible."""
    if "=" not in item:
        raise ConfigurationError(f"override {item!r} is not of the form key=value")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def resolve_config(kind, settings=None, config_file=None, overrides=(), **flags):
    """Merge kind defaults, settings, a JSON file, CLI flags and ``key=value`` overrides."""
    settings = settings or {}
    values = {"seed": settings.get("SEED"), "workers": settings.get("WORKERS")}
    if settings.get("OUTPUT_DIR") is not None:
        values["out"] = str(settings["OUTPUT_DIR"])
    if settings.get("SPECTRAL_FORM"):
        values["spectral_form"] = settings["SPECTRAL_FORM"]
    if settings.get("RECORD_TIMING") is not None:
        values["record_timing"] = settings["RECORD_TIMING"]
    if config_file is not None:
        try:
            with open(config_file) as handle:
                loaded = json.load(handle)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read {config_file}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigurationError(f"{config_file} must hold a flat JSON object")
        loaded.pop("kind", None)
        values.update(loaded)
    values.update({k: v for k, v in flags.items() if v is not None})
    values.update(dict(parse_override(item) for item in overrides))
    values = {k: v for k, v in values.items() if v is not None}
    log.debug("Resolved %s configuration: %s", kind, values)
    return ExperimentConfig.for_kind(kind, **values)


CSV_COLUMNS = (
    "trial",
    "method",
    "R",
    "E",
    "rmse_field",
    "rmse_centralized",
    "consensus_iters_mean",
    "msg_bytes",
    "wall_ms",
)


@dataclass(frozen=True)
class TrialResult:
    """One method's metrics in one trial."""

    trial: int
    method: str
    R: int
    E: int
    rmse_field: float = float("nan")
    rmse_centralized: float = float("nan")
    consensus_iters_mean: float = float("nan")
    msg_bytes: int = 0
    wall_ms: float = 0.0
    rmse_trace: tuple = field(default=(), compare=False)

    def row(self):
        """Values in :data:`CSV_COLUMNS` order."""
        return tuple(getattr(self, column) for column in CSV_COLUMNS)
