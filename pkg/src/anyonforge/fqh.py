"""Order-of-magnitude estimators for double point-contact interferometry in FQH states.

All inputs and outputs are SI: seconds, amperes, coulombs, ohms, kelvin.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
import warnings
from dataclasses import asdict, dataclass, field

from .anyon_model import AnyonModel, ProbeSpec

ELECTRON_CHARGE = 1.602176634e-19
BOLTZMANN = 1.380649e-23
PLANCK = 6.62607015e-34
_CHARGE_TOKEN = re.compile(r"([0-9.]*)e(?:/([0-9.]+))?")


@dataclass(frozen=True)
class InterferometerParams:
    t1: float
    t2: float
    beta: float = 0.0
    q_factor: float = 1.0

    def __post_init__(self):
        if not (0 <= abs(self.t1) < 1 and 0 <= abs(self.t2) < 1):
            raise ValueError("tunneling amplitudes must satisfy |t| < 1")
        if not 0 <= self.q_factor <= 1:
            raise ValueError("Q must lie in [0, 1]")


@dataclass(frozen=True)
class FqhMaterialParams:
    e_star: float = ELECTRON_CHARGE / 4
    tunneling_current: float = 1e-9
    gap: float = 0.544
    temperature: float = 0.010
    r0: float = 170.0
    filling: float = 2.5
    edge_velocity: float = 1e3
    interferometer_length: float = 1e-6
    bias_voltage: float | None = None

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value is not None and value <= 0:
                raise ValueError(f"{name} must be positive")
        if self.temperature >= self.gap:
            warnings.warn("temperature is not below the gap; the Arrhenius form is unreliable", stacklevel=2)
        if self.bias_voltage is not None and self.e_star * self.bias_voltage >= BOLTZMANN * self.gap:
            warnings.warn("bias e*V is not small compared with the gap", stacklevel=2)


def parse_charge(text) -> float:
    """Electric charge in coulombs; accepts ``"e"``, ``"e/4"``, ``"2e/5"`` or a plain number."""
    if isinstance(text, (int, float)):
        return float(text)
    m = _CHARGE_TOKEN.fullmatch(str(text).replace(" ", ""))
    if m is None:
        return float(text)
    factor = float(m.group(1)) if m.group(1) else 1.0
    return factor * ELECTRON_CHARGE / (float(m.group(2)) if m.group(2) else 1.0)


# --------------------------------------------------------------------------
# interferometer response


def tunneling_probability(params: InterferometerParams, monodromy: complex) -> float:
    """Weak-tunneling probability of a probe passing the interferometer for one enclosed charge."""
    t1, t2 = abs(params.t1), abs(params.t2)
    interference = 2 * t1 * t2 * (complex(monodromy) * complex(math.cos(params.beta), math.sin(params.beta))).real
    p = t1**2 + t2**2 + params.q_factor * interference
    if not 0 <= p <= 1:
        warnings.warn(f"tunneling probability {p:.4g} outside [0, 1]; clamped", stacklevel=2)
        p = min(max(p, 0.0), 1.0)
    return p


def delta_m(model: AnyonModel, a, b, probe: ProbeSpec) -> float:
    """Probe distinguishability |M_aB - M_bB| of two enclosed charges."""
    return abs(model.monodromy_probe(model.charge(a), probe) - model.monodromy_probe(model.charge(b), probe))


def max_delta_p(t1: float, t2: float, delta_monodromy: float, q_factor: float = 1.0) -> float:
    return 2 * abs(t1 * t2) * delta_monodromy * q_factor


def erfc_inv(y: float, tol: float = 1e-12) -> float:
    """Inverse complementary error function on (0, 2) by bracketed bisection."""
    if not 0 < y < 2:
        if y == 1:
            return 0.0
        raise ValueError("erfc_inv needs 0 < y < 2")
    lo, hi = -30.0, 30.0  # erfc(-30) = 2, erfc(30) = 0 in double precision
    while hi - lo > tol * max(1.0, abs(lo)):
        mid = 0.5 * (lo + hi)
        if math.erfc(mid) > y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def probe_count(alpha: float, p: float, p_other: float) -> float:
    """Probes needed to tell tunneling probabilities ``p`` and ``p_other`` apart at error ``alpha``."""
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    if not (0 <= p <= 1 and 0 <= p_other <= 1):
        raise ValueError("probabilities must lie in [0, 1]")
    dp = abs(p - p_other)
    if dp == 0:
        raise ValueError("equal tunneling probabilities: the charges are indistinguishable")
    spread = math.sqrt(p * (1 - p)) + math.sqrt(p_other * (1 - p_other))
    return 2 * erfc_inv(alpha) ** 2 * (spread / dp) ** 2


def probe_count_simplified(alpha: float, t: float, delta_monodromy: float, q_factor: float = 1.0) -> float:
    """Tuned weak-tunneling estimate ``8 [erfc^-1(alpha) / (t dM)]^2 / Q^2``."""
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    if t <= 0 or delta_monodromy <= 0 or q_factor <= 0:
        raise ValueError("t, delta M and Q must be positive")
    return 8 * (erfc_inv(alpha) / (t * delta_monodromy)) ** 2 / q_factor**2


# --------------------------------------------------------------------------
# time scales and error rates


def measurement_time(e_star: float, tunneling_current: float, alpha: float, delta_monodromy: float, q_factor=1.0):
    """Interferometric measurement duration in seconds."""
    if e_star <= 0 or tunneling_current <= 0 or delta_monodromy <= 0 or not 0 < q_factor <= 1:
        raise ValueError("e*, I_t and delta M must be positive and Q in (0, 1]")
    return 8 * e_star * erfc_inv(alpha) ** 2 / (tunneling_current * delta_monodromy**2 * q_factor**2)


def repattern_time(edge_velocity: float, interferometer_length: float) -> float:
    """Time to build or dismantle an interferometer: its length over the edge velocity."""
    if edge_velocity <= 0 or interferometer_length <= 0:
        raise ValueError("edge velocity and length must be positive")
    return interferometer_length / edge_velocity


def braid_time(qdim: float, tau_r: float, tau_m: float) -> float:
    """Mean duration of one measurement-generated exchange: 3 forced measurements of ~d^2 attempts."""
    return 3 * qdim**2 * (2 * tau_r + tau_m)


def shot_noise_error(tau_m: float, tunneling_current: float, e_star: float) -> float:
    """Probability that no quasiparticle tunnels during the measurement window."""
    if tau_m < 0 or tunneling_current <= 0 or e_star <= 0:
        raise ValueError("need tau_m >= 0 and positive I_t, e*")
    return math.exp(-tau_m * tunneling_current / e_star)


def hall_resistance(filling: float) -> float:
    return PLANCK / (filling * ELECTRON_CHARGE**2)


def stray_error_rate(r0: float, gap: float, temperature: float, filling: float) -> float:
    """Rate of stray quasiparticles crossing a region, from the activated longitudinal resistance."""
    if min(r0, gap, filling) <= 0 or temperature < 0:
        raise ValueError("R0, gap and filling must be positive, T non-negative")
    if temperature == 0:
        return 0.0
    r_xx = r0 * math.exp(-gap / (2 * temperature))
    sigma_xx = r_xx / hall_resistance(filling) ** 2
    return sigma_xx * gap * BOLTZMANN / ELECTRON_CHARGE**2


def su2k_delta_m(k: int) -> float:
    """ΔM between charges 0 and 1 seen by a j = 1/2 probe at level k."""
    return 4 * math.sin(math.pi / (k + 2)) ** 2


# --------------------------------------------------------------------------
# reports


@dataclass
class Estimate:
    quantity: str
    value: float
    units: str
    inputs: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"quantity": self.quantity, "value": self.value, "units": self.units, "inputs": self.inputs}


def to_json(estimates) -> str:
    return json.dumps([e.as_dict() for e in estimates], indent=1, sort_keys=True, ensure_ascii=False) + "\n"


def to_csv(estimates) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["quantity", "value", "units", "inputs"])
    for e in estimates:
        writer.writerow([e.quantity, repr(float(e.value)), e.units, json.dumps(e.inputs, sort_keys=True)])
    return buf.getvalue()


def mr_report(params: FqhMaterialParams | None = None, alpha: float = 1e-4, q_factor: float = 1.0) -> list[Estimate]:
    """The standard chain of estimates for σ-quasihole probes distinguishing I from ψ."""
    p = params or FqhMaterialParams()
    dm = 2.0
    tau_m = measurement_time(p.e_star, p.tunneling_current, alpha, dm, q_factor)
    tau_r = repattern_time(p.edge_velocity, p.interferometer_length)
    tau_braid = braid_time(math.sqrt(2), tau_r, tau_m)
    inputs = {k: v for k, v in asdict(p).items() if v is not None}
    return [
        Estimate("tau_m", tau_m, "s", {"alpha": alpha, "delta_m": dm, "q": q_factor, **inputs}),
        Estimate("tau_r", tau_r, "s", {"v_e": p.edge_velocity, "l_int": p.interferometer_length}),
        Estimate("tau_braid", tau_braid, "s", {"d_a": math.sqrt(2), "tau_r": tau_r, "tau_m": tau_m}),
        Estimate(
            "shot_noise_error",
            shot_noise_error(tau_m, p.tunneling_current, p.e_star),
            "1",
            {"tau_m": tau_m, "i_t": p.tunneling_current, "e_star": p.e_star},
        ),
        Estimate(
            "gamma",
            stray_error_rate(p.r0, p.gap, p.temperature, p.filling),
            "1/s",
            {"r0": p.r0, "gap": p.gap, "temp": p.temperature, "nu": p.filling},
        ),
    ]


__all__ = [
    "BOLTZMANN",
    "ELECTRON_CHARGE",
    "PLANCK",
    "Estimate",
    "FqhMaterialParams",
    "InterferometerParams",
    "braid_time",
    "delta_m",
    "erfc_inv",
    "max_delta_p",
    "measurement_time",
    "mr_report",
    "parse_charge",
    "probe_count",
    "probe_count_simplified",
    "repattern_time",
    "shot_noise_error",
    "stray_error_rate",
    "su2k_delta_m",
    "to_csv",
    "to_json",
    "tunneling_probability",
]
