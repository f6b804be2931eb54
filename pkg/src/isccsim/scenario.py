"""Scenario construction and (de)serialization.

The reference setup: a cell of 500 m radius, 12 devices dropped uniformly in
the disc, log-distance path loss 128.1 + 37.6 log10(d_km) with unit-mean
Rayleigh-squared fading per subcarrier, 24 dBm transmit power, 4 MHz resource
blocks of 10 subcarriers, -174 dBm/Hz noise, a 0.55 s delay budget, 42 GHz of
edge compute, a 2% detector error budget, and a 0.4 static-state prior with
the remainder split over seven action classes. Device power caps draw from
U[26, 29] dBm and local compute from U[35, 50] MHz.

Class statistics, per-element energies/cycles, the window length, and the
analysis band have no published values; the defaults below are synthetic,
chosen so that the power, delay, and edge-compute constraints all bind for a
meaningful share of devices at the reference operating point.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ScenarioValidationError
from .perf import DeviceProfile, ParametricAccuracySurface, SystemConfig
from .stats import ActionClassParams, SensingModelParams
from .units import dbm_to_watts, parse_hz

DEFAULT_WINDOW_LEN_S = 1.5
DEFAULT_BAND_HZ = (10.0, 60.0)

# names follow the spectral-power ordering walking > kicking > ... > static
DEFAULT_ACTION_CLASSES = (
    ("raising_hand", 1.00, 6.0),
    ("sitting_down", 1.10, 6.0),
    ("standing_up", 1.20, 7.0),
    ("waving", 1.35, 7.0),
    ("bending_down", 1.50, 8.0),
    ("kicking", 1.70, 8.0),
    ("walking", 1.90, 9.0),
)
DEFAULT_SIGMA_C_SQ = 0.06
DEFAULT_STATIC_LAMBDA = 0.25
DEFAULT_STATIC_R = 5.0
DEFAULT_SIGMA_D_SQ = 1.3e-4


def default_sensing_model(static_prior: float = 0.4) -> SensingModelParams:
    n_act = len(DEFAULT_ACTION_CLASSES)
    q_act = (1.0 - static_prior) / n_act
    classes = [ActionClassParams(1, DEFAULT_STATIC_LAMBDA, DEFAULT_STATIC_R,
                                 DEFAULT_SIGMA_D_SQ, static_prior)]
    for idx, (_, lam, r) in enumerate(DEFAULT_ACTION_CLASSES):
        classes.append(ActionClassParams(idx + 2, lam, r, DEFAULT_SIGMA_D_SQ, q_act))
    return SensingModelParams(
        classes=tuple(classes),
        sigma_c_sq=DEFAULT_SIGMA_C_SQ,
        window_len_s=DEFAULT_WINDOW_LEN_S,
        band_lo_hz=DEFAULT_BAND_HZ[0],
        band_hi_hz=DEFAULT_BAND_HZ[1],
    )


def default_system(n_devices: int = 12) -> SystemConfig:
    bandwidth = 4e6
    n_sub = 10
    noise_psd_w = dbm_to_watts(-174.0)
    return SystemConfig(
        bandwidth_hz=bandwidth,
        n_subcarriers=n_sub,
        noise_w_per_subcarrier=noise_psd_w * bandwidth / n_sub,
        t_sense_s=1e-4,
        c_local=2e4,
        c_edge=3e6,
        v_bits=512.0,
        t_max_s=0.55,
        f_edge_total_hz=42e9,
        p_min=0.02,
        n_devices=n_devices,
    )


def default_surface() -> ParametricAccuracySurface:
    return ParametricAccuracySurface(
        alpha_inf=0.95, f0_hz=25.0, kappa=0.15, window_len_s=DEFAULT_WINDOW_LEN_S
    )


@dataclass
class Scenario:
    system: SystemConfig
    devices: list[DeviceProfile]
    model: SensingModelParams
    surface: ParametricAccuracySurface
    seed: int

    def __post_init__(self):
        problems = []
        if len(self.devices) != self.system.n_devices:
            problems.append("system.n_devices")
        n_classes = len(self.model.classes)
        for dev in self.devices:
            if len(dev.priors) != n_classes:
                problems.append(f"devices[{dev.id}].priors")
            if dev.surface is None:
                problems.append(f"devices[{dev.id}].surface")
        if problems:
            raise ScenarioValidationError(
                f"invalid scenario fields: {sorted(set(problems))}",
                fields=sorted(set(problems)),
            )


def path_loss_db(distance_km: float) -> float:
    return 128.1 + 37.6 * math.log10(distance_km)


def generate_scenario(n_devices: int = 12, radius_m: float = 500.0, seed: int = 0,
                      static_prior: float = 0.4,
                      system: SystemConfig | None = None,
                      model: SensingModelParams | None = None,
                      surface: ParametricAccuracySurface | None = None) -> Scenario:
    """Drop devices uniformly in the disc and draw their radio/compute profiles."""
    if n_devices < 1:
        raise ScenarioValidationError("need at least one device", ["n_devices"])
    if radius_m <= 0:
        raise ScenarioValidationError("radius must be positive", ["radius_m"])
    if not 0 < static_prior < 1:
        raise ScenarioValidationError("static prior must be in (0,1)", ["static_prior"])
    rng = np.random.default_rng(seed)
    system = system or default_system(n_devices)
    model = model or default_sensing_model(static_prior)
    surface = surface or default_surface()
    priors = tuple(c.prior for c in sorted(model.classes, key=lambda c: c.class_id))

    devices = []
    for i in range(n_devices):
        # uniform in the disc, keeping devices off the exact cell center
        d_m = radius_m * math.sqrt(rng.uniform(0.0004, 1.0))
        pl_lin = 10.0 ** (-path_loss_db(d_m / 1000.0) / 10.0)
        fades = rng.exponential(1.0, size=system.n_subcarriers)
        gains = tuple(pl_lin * fades)
        devices.append(DeviceProfile(
            id=i,
            e_sense_j=2e-3,
            e_comp_j=1e-4,
            f_local_hz=rng.uniform(35e6, 50e6),
            p_max_w=dbm_to_watts(rng.uniform(26.0, 29.0)),
            p_tx_w=dbm_to_watts(24.0),
            channel_gains=gains,
            distance_m=d_m,
            priors=priors,
            surface=surface,
        ))
    return Scenario(system=system, devices=devices, model=model,
                    surface=surface, seed=seed)


# ---------------------------------------------------------------------------
# JSON round trip


def scenario_to_dict(sc: Scenario) -> dict:
    sysb = sc.system
    return {
        "seed": sc.seed,
        "system": {
            "bandwidth_hz": sysb.bandwidth_hz,
            "n_subcarriers": sysb.n_subcarriers,
            "noise_w_per_subcarrier": sysb.noise_w_per_subcarrier,
            "t_sense_s": sysb.t_sense_s,
            "c_local": sysb.c_local,
            "c_edge": sysb.c_edge,
            "v_bits": sysb.v_bits,
            "t_max_s": sysb.t_max_s,
            "f_edge_total_hz": sysb.f_edge_total_hz,
            "p_min": sysb.p_min,
            "n_devices": sysb.n_devices,
        },
        "sensing_model": {
            "sigma_c_sq": sc.model.sigma_c_sq,
            "window_len_s": sc.model.window_len_s,
            "band": [sc.model.band_lo_hz, sc.model.band_hi_hz],
            "classes": [
                {"class_id": c.class_id, "lambda": c.lam, "r": c.r,
                 "sigma_d_sq": c.sigma_d_sq, "q": c.prior}
                for c in sc.model.classes
            ],
        },
        "accuracy_surface": {
            "kind": "parametric",
            "alpha_inf": sc.surface.alpha_inf,
            "f0_hz": sc.surface.f0_hz,
            "kappa": sc.surface.kappa,
            "window_len_s": sc.surface.window_len_s,
        },
        "devices": [
            {
                "id": d.id,
                "e_sense_j": d.e_sense_j,
                "e_comp_j": d.e_comp_j,
                "f_local_hz": d.f_local_hz,
                "p_max_w": d.p_max_w,
                "p_tx_w": d.p_tx_w,
                "channel_gains": list(d.channel_gains),
                "distance_m": d.distance_m,
                "priors": list(d.priors),
            }
            for d in sc.devices
        ],
    }


def scenario_from_dict(data: dict) -> Scenario:
    try:
        sysd = data["system"]
        system = SystemConfig(
            bandwidth_hz=parse_hz(sysd["bandwidth_hz"]),
            n_subcarriers=int(sysd["n_subcarriers"]),
            noise_w_per_subcarrier=float(sysd["noise_w_per_subcarrier"]),
            t_sense_s=float(sysd["t_sense_s"]),
            c_local=float(sysd["c_local"]),
            c_edge=float(sysd["c_edge"]),
            v_bits=float(sysd["v_bits"]),
            t_max_s=float(sysd["t_max_s"]),
            f_edge_total_hz=parse_hz(sysd["f_edge_total_hz"]),
            p_min=float(sysd["p_min"]),
            n_devices=int(sysd["n_devices"]),
        )
        md = data["sensing_model"]
        model = SensingModelParams(
            classes=tuple(
                ActionClassParams(int(c["class_id"]), float(c["lambda"]),
                                  float(c["r"]), float(c["sigma_d_sq"]),
                                  float(c["q"]))
                for c in md["classes"]
            ),
            sigma_c_sq=float(md["sigma_c_sq"]),
            window_len_s=float(md["window_len_s"]),
            band_lo_hz=float(md["band"][0]),
            band_hi_hz=float(md["band"][1]),
        )
        sd = data["accuracy_surface"]
        if sd.get("kind", "parametric") != "parametric":
            raise ScenarioValidationError(
                "only parametric accuracy surfaces are supported in scenario files",
                ["accuracy_surface.kind"],
            )
        surface = ParametricAccuracySurface(
            alpha_inf=float(sd["alpha_inf"]), f0_hz=float(sd["f0_hz"]),
            kappa=float(sd["kappa"]), window_len_s=float(sd["window_len_s"]),
        )
        devices = [
            DeviceProfile(
                id=int(d["id"]),
                e_sense_j=float(d["e_sense_j"]),
                e_comp_j=float(d["e_comp_j"]),
                f_local_hz=parse_hz(d["f_local_hz"]),
                p_max_w=float(d["p_max_w"]),
                p_tx_w=float(d["p_tx_w"]),
                channel_gains=tuple(map(float, d["channel_gains"])),
                distance_m=float(d["distance_m"]),
                priors=tuple(map(float, d["priors"])),
                surface=surface,
            )
            for d in data["devices"]
        ]
    except KeyError as exc:
        raise ScenarioValidationError(f"missing scenario field: {exc}", [str(exc)])
    return Scenario(system=system, devices=devices, model=model,
                    surface=surface, seed=int(data.get("seed", 0)))


def scenario_to_json(sc: Scenario) -> str:
    return json.dumps(scenario_to_dict(sc), indent=2, sort_keys=True)


def scenario_from_json(text: str) -> Scenario:
    return scenario_from_dict(json.loads(text))


def load_scenario(path) -> Scenario:
    with open(path) as fp:
        return scenario_from_dict(json.load(fp))


def save_scenario(sc: Scenario, path) -> None:
    with open(path, "w") as fp:
        fp.write(scenario_to_json(sc))
