"""Run configuration: INI-style sections of ``key = value`` pairs.

Defaults reproduce the experiment's published parameters; a config file
overrides them section by section and command-line flags override both.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, field

from microcavity.cloud import CloudSpec, JitterSpec, ProbeSpec
from microcavity.constants import RB85_D2_DIPOLE, RB85_GAMMA
from microcavity.physics import AtomSpecies, CavityGeometry, derive_rates
from microcavity.source import EmitterModel, saturating_pump_rate
from microcavity.stats import DetectorSpec

EXPERIMENTS = ("rates", "spectrum", "drop", "fit-spectrum", "fit-transit", "stats", "pulse")

DEFAULTS = {
    "geometry": {
        "length_um": 130.0,
        "waist_um": 4.6,
        "finesse": 280.0,
        "wavelength_nm": 780.0,
        "curvature_um": 186.0,
        "beta": 0.194,
    },
    "species": {
        "gamma_per_s": RB85_GAMMA,
        "zeeman_factor": 3.0 / 7.0,
        "dipole_cm": RB85_D2_DIPOLE,
    },
    "probe": {
        "i0_per_s": 419e3,
        "linewidth_mhz": 1.2,
        "cavity_detuning_mhz": 0.0,
    },
    "cloud": {
        "atoms": 4e7,
        "temperature_uK": 30.0,
        "sigma0_um": 280.0,
        "height_mm": 6.0,
        "aperture_um": 500.0,
        "offset_um": 0.0,
        "n_drops": 34,
        "bin_us": 10.0,
        "duration_ms": 60.0,
    },
    "jitter": {
        "enabled": False,
        "components": "1100:1.5:0.0, 430:0.8:1.0",
        "white_rms_nm": 0.0,
    },
    "detector": {
        "dead_time_ns": 44.0,
        "quantum_efficiency": 0.6,
        "transmission": 0.9,
        "window_bins": 100,
    },
    "spectrum": {
        "mean_N": 1.1,
        "noise": 0.0,
        "points": 401,
        "span_gamma": 12.0,
        "realizations": 2000,
        "fluctuations": True,
    },
    "fit": {
        "realizations": 2000,
        "fit_beta": False,
        "n_max": 10.0,
        "tol": 1e-3,
    },
    "emitter": {
        "pump_rate": None,  # None: saturating drive at 40 mW/cm^2
        "dark_branch": 0.25,
        "loss_rate": 1e5,
        "fiber_outcoupling": 0.5,
        "detection_eff": 0.54,
        "N0": 1.0,
        "duration_us": 20.0,
        "bin_us": 1.0,
        "repeats": 200,
    },
}


def _coerce(text: str, default):
    text = text.strip()
    if isinstance(default, bool):
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if isinstance(default, int):
        return int(float(text))
    if isinstance(default, float) or default is None:
        if default is None and text.lower() in ("", "none", "auto"):
            return None
        return float(text)
    return text


@dataclass
class RunConfig:
    experiment: str
    sections: dict
    seed: int = 0
    output_path: str = "out"
    threads: int = 1
    extras: dict = field(default_factory=dict)

    def get(self, section, key):
        return self.sections[section][key]

    # builders -----------------------------------------------------------
    def geometry(self) -> CavityGeometry:
        g = self.sections["geometry"]
        return CavityGeometry(
            length=g["length_um"] * 1e-6,
            waist=g["waist_um"] * 1e-6,
            finesse=g["finesse"],
            wavelength=g["wavelength_nm"] * 1e-9,
            mirror_curvature=g["curvature_um"] * 1e-6,
            beta=g["beta"],
        )

    def species(self) -> AtomSpecies:
        s = self.sections["species"]
        return AtomSpecies(dipole_moment=s["dipole_cm"], gamma=s["gamma_per_s"], zeeman_factor=s["zeeman_factor"])

    def rates(self):
        return derive_rates(self.species(), self.geometry())

    def detector(self) -> DetectorSpec:
        d = self.sections["detector"]
        return DetectorSpec(d["dead_time_ns"] * 1e-9, d["quantum_efficiency"], d["transmission"])

    def probe(self, detector=True) -> ProbeSpec:
        p = self.sections["probe"]
        return ProbeSpec(
            I0=p["i0_per_s"],
            beta=self.sections["geometry"]["beta"],
            cavity_detuning=2 * math.pi * 1e6 * p["cavity_detuning_mhz"],
            detector=self.detector() if detector else None,
        )

    def cloud(self) -> CloudSpec:
        c = self.sections["cloud"]
        return CloudSpec(
            atom_count=c["atoms"],
            temperature=c["temperature_uK"] * 1e-6,
            initial_sigma=c["sigma0_um"] * 1e-6,
            drop_height=c["height_mm"] * 1e-3,
            aperture_radius=c["aperture_um"] * 1e-6 if c["aperture_um"] > 0 else None,
            transverse_offset=c["offset_um"] * 1e-6,
        )

    def jitter(self) -> JitterSpec:
        j = self.sections["jitter"]
        if not j["enabled"]:
            return JitterSpec()
        return JitterSpec(parse_components(j["components"]), j["white_rms_nm"] * 1e-9)

    def emitter(self) -> EmitterModel:
        e = self.sections["emitter"]
        rates = self.rates()
        pump = e["pump_rate"] if e["pump_rate"] is not None else saturating_pump_rate(gamma=rates.gamma)
        return EmitterModel.from_rates(
            rates,
            pump_rate=pump,
            dark_branch=e["dark_branch"],
            loss_rate=e["loss_rate"],
            fiber_outcoupling=e["fiber_outcoupling"],
            detection_efficiency=e["detection_eff"],
        )

    def resolved(self) -> dict:
        return {
            "experiment": self.experiment,
            "seed": self.seed,
            "sections": self.sections,
            **({"inputs": self.extras} if self.extras else {}),
        }

    def to_ini(self) -> str:
        parser = configparser.ConfigParser()
        parser.optionxform = str
        parser["run"] = {"experiment": self.experiment, "seed": str(self.seed)}
        for name, values in self.sections.items():
            parser[name] = {k: ("none" if v is None else str(v)) for k, v in values.items()}
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()


def parse_components(text: str):
    """``"f_hz:amp_nm:phase_rad, ..."`` to ``[(f, amp_m, phase), ...]``."""
    out = []
    for chunk in text.replace(";", ",").split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(":")
        if len(parts) not in (2, 3):
            raise ValueError(f"jitter component {chunk!r} is not freq:amp[:phase]")
        freq, amp = float(parts[0]), float(parts[1]) * 1e-9
        phase = float(parts[2]) if len(parts) == 3 else 0.0
        out.append((freq, amp, phase))
    return out


def load_config(path=None, experiment="rates", overrides=None, seed=None) -> RunConfig:
    """Merge defaults, an optional INI file and ``{(section, key): value}`` overrides.

    Unknown keys and malformed values raise ``ValueError`` naming the field.
    """
    sections = {name: dict(values) for name, values in DEFAULTS.items()}
    file_seed = None
    if path is not None:
        parser = configparser.ConfigParser()
        parser.optionxform = str
        with open(path) as fh:
            parser.read_file(fh)
        for name in parser.sections():
            if name == "run":
                if "seed" in parser[name]:
                    file_seed = int(parser[name]["seed"])
                continue
            if name not in sections:
                raise ValueError(f"[{name}]: unknown section")
            for key, text in parser[name].items():
                if key not in sections[name]:
                    raise ValueError(f"{name}.{key}: unknown key")
                try:
                    sections[name][key] = _coerce(text, DEFAULTS[name][key])
                except ValueError as exc:
                    raise ValueError(f"{name}.{key}: {exc}") from None
    for (name, key), value in (overrides or {}).items():
        if value is None:
            continue
        if key not in sections.get(name, {}):
            raise ValueError(f"{name}.{key}: unknown key")
        sections[name][key] = value
    if seed is None:
        seed = file_seed if file_seed is not None else 0
    return RunConfig(experiment=experiment, sections=sections, seed=seed)


def _check(diags, cond, field_name, message, value):
    if not cond:
        diags.append(f"{field_name}: {message} (got {value!r})")


def validate(config: RunConfig) -> list[str]:
    """All invariant violations as ``section.key: message`` strings."""
    diags = []
    if config.experiment not in EXPERIMENTS:
        diags.append(f"experiment: must be one of {', '.join(EXPERIMENTS)} (got {config.experiment!r})")
    for name in DEFAULTS:
        if name not in config.sections:
            diags.append(f"[{name}]: missing section")
    if diags:
        return diags
    g = config.sections["geometry"]
    _check(diags, g["length_um"] > 0, "geometry.length_um", "must be > 0", g["length_um"])
    _check(diags, g["waist_um"] > 0, "geometry.waist_um", "must be > 0", g["waist_um"])
    _check(diags, g["finesse"] >= 1, "geometry.finesse", "must be >= 1", g["finesse"])
    _check(diags, g["wavelength_nm"] > 0, "geometry.wavelength_nm", "must be > 0", g["wavelength_nm"])
    _check(diags, 0 <= g["beta"] <= 1, "geometry.beta", "must lie in [0, 1]", g["beta"])
    s = config.sections["species"]
    _check(diags, s["gamma_per_s"] > 0, "species.gamma_per_s", "must be > 0", s["gamma_per_s"])
    _check(diags, 0 < s["zeeman_factor"] <= 1, "species.zeeman_factor", "must lie in (0, 1]", s["zeeman_factor"])
    _check(diags, s["dipole_cm"] > 0, "species.dipole_cm", "must be > 0", s["dipole_cm"])
    p = config.sections["probe"]
    _check(diags, p["i0_per_s"] > 0, "probe.i0_per_s", "must be > 0", p["i0_per_s"])
    _check(diags, p["linewidth_mhz"] >= 0, "probe.linewidth_mhz", "must be >= 0", p["linewidth_mhz"])
    c = config.sections["cloud"]
    for key in ("atoms", "temperature_uK", "sigma0_um", "height_mm", "aperture_um"):
        _check(diags, c[key] >= 0, f"cloud.{key}", "must be >= 0", c[key])
    _check(diags, c["n_drops"] >= 1, "cloud.n_drops", "must be >= 1", c["n_drops"])
    _check(diags, c["bin_us"] > 0, "cloud.bin_us", "must be > 0", c["bin_us"])
    _check(diags, c["duration_ms"] > 0, "cloud.duration_ms", "must be > 0", c["duration_ms"])
    j = config.sections["jitter"]
    try:
        comps = parse_components(j["components"])
        _check(diags, all(a >= 0 for _, a, _ in comps), "jitter.components", "amplitudes must be >= 0", j["components"])
    except ValueError as exc:
        diags.append(f"jitter.components: {exc}")
    _check(diags, j["white_rms_nm"] >= 0, "jitter.white_rms_nm", "must be >= 0", j["white_rms_nm"])
    d = config.sections["detector"]
    _check(diags, d["dead_time_ns"] >= 0, "detector.dead_time_ns", "must be >= 0", d["dead_time_ns"])
    _check(diags, 0 < d["quantum_efficiency"] <= 1, "detector.quantum_efficiency", "must lie in (0, 1]", d["quantum_efficiency"])
    _check(diags, 0 < d["transmission"] <= 1, "detector.transmission", "must lie in (0, 1]", d["transmission"])
    _check(diags, d["window_bins"] >= 8, "detector.window_bins", "must be >= 8", d["window_bins"])
    sp = config.sections["spectrum"]
    _check(diags, sp["mean_N"] >= 0, "spectrum.mean_N", "must be >= 0", sp["mean_N"])
    _check(diags, sp["noise"] >= 0, "spectrum.noise", "must be >= 0", sp["noise"])
    _check(diags, sp["points"] >= 7, "spectrum.points", "must be >= 7", sp["points"])
    _check(diags, sp["span_gamma"] > 0, "spectrum.span_gamma", "must be > 0", sp["span_gamma"])
    _check(diags, sp["realizations"] >= 100, "spectrum.realizations", "must be >= 100", sp["realizations"])
    f = config.sections["fit"]
    _check(diags, f["realizations"] >= 100, "fit.realizations", "must be >= 100", f["realizations"])
    _check(diags, f["n_max"] > 0, "fit.n_max", "must be > 0", f["n_max"])
    _check(diags, f["tol"] > 0, "fit.tol", "must be > 0", f["tol"])
    e = config.sections["emitter"]
    _check(diags, e["pump_rate"] is None or e["pump_rate"] >= 0, "emitter.pump_rate", "must be >= 0", e["pump_rate"])
    for key in ("dark_branch", "fiber_outcoupling", "detection_eff"):
        _check(diags, 0 <= e[key] <= 1, f"emitter.{key}", "must lie in [0, 1]", e[key])
    _check(diags, e["loss_rate"] >= 0, "emitter.loss_rate", "must be >= 0", e["loss_rate"])
    _check(diags, e["N0"] >= 0, "emitter.N0", "must be >= 0", e["N0"])
    _check(diags, e["duration_us"] > 0, "emitter.duration_us", "must be > 0", e["duration_us"])
    _check(diags, e["bin_us"] > 0, "emitter.bin_us", "must be > 0", e["bin_us"])
    _check(diags, e["repeats"] >= 1, "emitter.repeats", "must be >= 1", e["repeats"])
    _check(diags, config.threads >= 1, "run.threads", "must be >= 1", config.threads)
    return diags
