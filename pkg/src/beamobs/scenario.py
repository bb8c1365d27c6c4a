"""Declarative run scenarios: INI parsing, validation, and defaults.

A scenario file is plain INI with sections [beam], [sensors], [actuators],
[gains], [simulation] and optional [sweep] / [resolvent].  The packaged
``data/beam_scenario.ini`` carries the default experiment; every loader
error names the offending section and key.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, replace
from importlib import resources

import numpy as np

from .errors import ConfigurationError
from .modal import ActuatorShape, SensorConfig
from .observer import ErrorState
from .spectral import BeamParams

__all__ = ["Scenario", "load_scenario", "default_scenario_text"]

_KNOWN = {
    "beam": {"rho", "EI", "m", "kappa", "length", "attach"},
    "sensors": {"body_output", "positions"},
    "actuators": None,  # free-form keys, one shape per key
    "gains": {"gamma"},
    "simulation": {"n_modes", "t_end", "samples", "ic", "ic_Delta", "ic_delta"},
    "sweep": {"gammas", "truncations"},
    "resolvent": {"lambdas", "density_window"},
}


@dataclass(frozen=True)
class Scenario:
    """One validated experiment description."""

    beam: BeamParams
    sensors: SensorConfig
    actuators: tuple
    gains: tuple
    n_modes: int
    t_end: float
    samples: int
    ic_rule: str = "modal"
    ic_Delta: tuple = ()
    ic_delta: tuple = ()
    sweep_gammas: tuple = ()
    sweep_truncations: tuple = ()
    lambdas: tuple = (1e-3, 1e-2, 1e-1)
    density_window: float = 0.0

    def gammas_for_outputs(self):
        """Per-output gain vector (broadcasts a single value to r outputs)."""
        r = self.sensors.n_outputs
        if len(self.gains) == 1:
            return np.full(r, self.gains[0])
        if len(self.gains) != r:
            raise ConfigurationError(
                "expected 1 or %d values, got %d" % (r, len(self.gains)),
                field="[gains] gamma",
            )
        return np.array(self.gains)

    def initial_error(self, omegas):
        """Initial error per the scenario rule.

        'modal' uses Delta_j(0) = delta_j(0) = 1/(j omega_j); 'explicit'
        takes the configured vectors, which must match the truncation.
        """
        omegas = np.asarray(omegas, dtype=float)
        if self.ic_rule == "modal":
            vals = 1.0 / (np.arange(1, omegas.size + 1) * omegas)
            return ErrorState(Delta=vals, delta=vals.copy())
        if len(self.ic_Delta) != omegas.size or len(self.ic_delta) != omegas.size:
            raise ConfigurationError(
                "explicit initial vectors must carry %d entries" % omegas.size,
                field="[simulation] ic_Delta/ic_delta",
            )
        return ErrorState(Delta=np.array(self.ic_Delta), delta=np.array(self.ic_delta))

    def time_grid(self):
        return np.linspace(0.0, self.t_end, self.samples)


def default_scenario_text():
    """Raw text of the packaged default scenario file."""
    return (
        resources.files("beamobs").joinpath("data/beam_scenario.ini").read_text()
    )


def _floats(raw, field):
    raw = raw.strip()
    if not raw:
        return ()
    try:
        return tuple(float(tok) for tok in raw.split(","))
    except ValueError as exc:
        raise ConfigurationError("not a comma-separated float list: %r" % raw,
                                 field=field) from exc


def _float(cp, section, key, positive=False, nonnegative=False):
    field = "[%s] %s" % (section, key)
    try:
        v = cp.getfloat(section, key)
    except (configparser.NoOptionError, configparser.NoSectionError) as exc:
        raise ConfigurationError("missing required value", field=field) from exc
    except ValueError as exc:
        raise ConfigurationError("not a number", field=field) from exc
    if positive and not v > 0.0:
        raise ConfigurationError("must be > 0, got %r" % v, field=field)
    if nonnegative and v < 0.0:
        raise ConfigurationError("must be >= 0, got %r" % v, field=field)
    return v


def _int(cp, section, key, minimum):
    field = "[%s] %s" % (section, key)
    try:
        v = cp.getint(section, key)
    except (configparser.NoOptionError, configparser.NoSectionError) as exc:
        raise ConfigurationError("missing required value", field=field) from exc
    except ValueError as exc:
        raise ConfigurationError("not an integer", field=field) from exc
    if v < minimum:
        raise ConfigurationError("must be >= %d, got %d" % (minimum, v), field=field)
    return v


def load_scenario(path=None):
    """Parse and validate a scenario file (packaged default when path=None)."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keys are case-sensitive (EI)
    if path is None:
        cp.read_string(default_scenario_text())
        origin = "<packaged default>"
    else:
        try:
            with open(path, "r") as fh:
                cp.read_file(fh)
        except OSError as exc:
            raise ConfigurationError(str(exc), field="config file") from exc
        except configparser.Error as exc:
            raise ConfigurationError(str(exc), field="config file") from exc
        origin = str(path)

    for section in cp.sections():
        if section not in _KNOWN:
            raise ConfigurationError(
                "unknown section [%s] in %s" % (section, origin), field="config file"
            )
        allowed = _KNOWN[section]
        if allowed is None:
            continue
        for key in cp[section]:
            if key not in allowed:
                raise ConfigurationError(
                    "unknown key in %s" % origin, field="[%s] %s" % (section, key)
                )

    try:
        beam = BeamParams(
            rho=_float(cp, "beam", "rho", positive=True),
            EI=_float(cp, "beam", "EI", positive=True),
            m=_float(cp, "beam", "m", nonnegative=True),
            kappa=_float(cp, "beam", "kappa", nonnegative=True),
            length=_float(cp, "beam", "length", positive=True),
            attach=_float(cp, "beam", "attach", positive=True),
        )
    except ConfigurationError:
        raise
    except Exception as exc:
        raise ConfigurationError(str(exc), field="[beam]") from exc

    try:
        body = cp.getboolean("sensors", "body_output", fallback=True)
    except ValueError as exc:
        raise ConfigurationError("not a boolean", field="[sensors] body_output") from exc
    positions = _floats(cp.get("sensors", "positions", fallback=""),
                        "[sensors] positions")
    for pos in positions:
        if not 0.0 < pos < beam.length:
            raise ConfigurationError(
                "sensor at %r outside (0, %r)" % (pos, beam.length),
                field="[sensors] positions",
            )
    try:
        sensors = SensorConfig(body_output=body, positions=positions)
    except Exception as exc:
        raise ConfigurationError(str(exc), field="[sensors]") from exc

    actuators = []
    if cp.has_section("actuators"):
        for key in sorted(cp["actuators"]):
            vals = _floats(cp.get("actuators", key), "[actuators] %s" % key)
            if len(vals) == 0 or len(vals) % 3:
                raise ConfigurationError(
                    "expects triples x_a, x_b, amplitude",
                    field="[actuators] %s" % key,
                )
            pieces = tuple(
                (vals[k], vals[k + 1], vals[k + 2]) for k in range(0, len(vals), 3)
            )
            try:
                shape = ActuatorShape(pieces=pieces)
                shape.validate(beam)
            except Exception as exc:
                raise ConfigurationError(str(exc), field="[actuators] %s" % key) from exc
            actuators.append(shape)

    gains = _floats(cp.get("gains", "gamma", fallback=""), "[gains] gamma")
    if not gains:
        raise ConfigurationError("missing required value", field="[gains] gamma")
    if any(g <= 0.0 for g in gains):
        raise ConfigurationError("gains must be strictly positive", field="[gains] gamma")
    if len(gains) not in (1, sensors.n_outputs):
        raise ConfigurationError(
            "expected 1 or %d values, got %d" % (sensors.n_outputs, len(gains)),
            field="[gains] gamma",
        )

    n_modes = _int(cp, "simulation", "n_modes", minimum=1)
    t_end = _float(cp, "simulation", "t_end", positive=True)
    samples = _int(cp, "simulation", "samples", minimum=2)
    ic_rule = cp.get("simulation", "ic", fallback="modal").strip().lower()
    if ic_rule not in ("modal", "explicit"):
        raise ConfigurationError(
            "must be 'modal' or 'explicit', got %r" % ic_rule,
            field="[simulation] ic",
        )
    ic_Delta = _floats(cp.get("simulation", "ic_Delta", fallback=""),
                       "[simulation] ic_Delta")
    ic_delta = _floats(cp.get("simulation", "ic_delta", fallback=""),
                       "[simulation] ic_delta")
    if ic_rule == "explicit":
        if len(ic_Delta) != n_modes or len(ic_delta) != n_modes:
            raise ConfigurationError(
                "explicit initial vectors must carry %d entries" % n_modes,
                field="[simulation] ic_Delta/ic_delta",
            )

    sweep_gammas = _floats(cp.get("sweep", "gammas", fallback=""), "[sweep] gammas")
    raw_trunc = _floats(cp.get("sweep", "truncations", fallback=""),
                        "[sweep] truncations")
    sweep_truncations = tuple(int(v) for v in raw_trunc)
    if any(v != int(v) or v < 1 for v in raw_trunc):
        raise ConfigurationError("must be positive integers", field="[sweep] truncations")
    if cp.has_section("sweep"):
        if not sweep_gammas or not sweep_truncations:
            raise ConfigurationError(
                "sweep section needs nonempty gammas and truncations",
                field="[sweep]",
            )
        if any(g <= 0.0 for g in sweep_gammas):
            raise ConfigurationError("must be strictly positive", field="[sweep] gammas")

    lambdas = _floats(cp.get("resolvent", "lambdas", fallback="1e-3, 1e-2, 1e-1"),
                      "[resolvent] lambdas")
    if not lambdas or any(v <= 0.0 for v in lambdas):
        raise ConfigurationError("must be positive", field="[resolvent] lambdas")
    window = 0.0
    if cp.has_option("resolvent", "density_window"):
        window = _float(cp, "resolvent", "density_window", positive=True)

    return Scenario(
        beam=beam,
        sensors=sensors,
        actuators=tuple(actuators),
        gains=gains,
        n_modes=n_modes,
        t_end=t_end,
        samples=samples,
        ic_rule=ic_rule,
        ic_Delta=ic_Delta,
        ic_delta=ic_delta,
        sweep_gammas=sweep_gammas,
        sweep_truncations=sweep_truncations,
        lambdas=lambdas,
        density_window=window,
    )
