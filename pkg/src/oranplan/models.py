"""Radio, Ethernet-framing, and baseband-compute models.

Pure functions shared by every other module: peak NR cell throughput,
Shannon throughput of a single user under interference, the two path-loss
laws (macro / small cell), coverage-distance search, Ethernet burst
framing, and the GOPS model of baseband processing with its RU/DU/CU
split.  Everything here is stateless and safe to call concurrently.
"""

import math
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

from .errors import InfeasibleError, ParameterError

# Propagation speeds, m/s.
FIBER_SPEED = 2.0e8
AIR_SPEED = 3.0e8


@dataclass(frozen=True)
class PhysicalConstants:
    fiber_speed: float = FIBER_SPEED
    air_speed: float = AIR_SPEED

    def __post_init__(self):
        if not self.air_speed > self.fiber_speed > 0:
            raise ParameterError("air_speed must exceed fiber_speed, both positive")


@dataclass(frozen=True)
class RadioConfig:
    """Parameters of one NR carrier configuration.

    ``scaling`` is the fraction of resources used in the considered link
    direction, ``capability_mismatch`` the baseband/RF capability factor,
    ``overhead`` the control-plane overhead fraction, ``tti`` the
    scheduling period in seconds.
    """

    carriers: int = 1
    scaling: float = 1.0
    mimo_layers: int = 4
    modulation_order: int = 8
    capability_mismatch: float = 1.0
    max_code_rate: float = 0.92578
    numerology: int = 1
    prb_count: int = 273
    overhead: float = 0.14
    tti: float = 0.5e-3

    def validate(self) -> None:
        for name in ("scaling", "capability_mismatch", "max_code_rate", "overhead"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ParameterError(f"RadioConfig.{name} must be in [0, 1], got {v}")
        for name in ("carriers", "mimo_layers", "modulation_order", "prb_count"):
            v = getattr(self, name)
            if v < 1:
                raise ParameterError(f"RadioConfig.{name} must be >= 1, got {v}")
        if self.numerology not in range(0, 7):
            raise ParameterError(f"RadioConfig.numerology must be in 0..6, got {self.numerology}")
        if self.tti <= 0:
            raise ParameterError(f"RadioConfig.tti must be > 0, got {self.tti}")


@dataclass(frozen=True)
class ComputeSpec:
    """Inputs of the baseband GOPS/TTI model."""

    antennas: int = 4
    modulation_bits: int = 6
    code_rate: float = 1.0
    layers: int = 2
    prb: int = 100
    split_shares: Tuple[float, float, float] = (0.40, 0.50, 0.10)

    def validate(self) -> None:
        if self.antennas < 0 or self.prb < 0:
            raise ParameterError("ComputeSpec.antennas and prb must be >= 0")
        if not 0.0 <= self.code_rate <= 1.0:
            raise ParameterError(f"ComputeSpec.code_rate must be in [0, 1], got {self.code_rate}")
        _check_shares(self.split_shares)


@dataclass(frozen=True)
class EthernetModel:
    """Frame geometry of the periodic-burst transport.

    Payload capped at 1500 bytes; the full frame (preamble, headers, FCS,
    inter-frame gap) is 1542 bytes in the best case.
    """

    payload_bits: int = 1500 * 8
    frame_bits: int = 1542 * 8
    burst_interval: float = 0.5e-3

    def validate(self) -> None:
        if not 0 < self.payload_bits <= 1500 * 8:
            raise ParameterError(f"EthernetModel.payload_bits must be in (0, 12000], got {self.payload_bits}")
        if self.frame_bits < self.payload_bits:
            raise ParameterError("EthernetModel.frame_bits must be >= payload_bits")
        if self.burst_interval <= 0:
            raise ParameterError("EthernetModel.burst_interval must be > 0")


def _check_shares(shares: Sequence[float]) -> None:
    if len(shares) != 3 or any(s < 0 for s in shares):
        raise ParameterError(f"split shares must be three non-negative fractions, got {shares}")
    if abs(sum(shares) - 1.0) > 1e-9:
        raise ParameterError(f"split shares must sum to 1 within 1e-9, got sum {sum(shares)!r}")


def symbol_duration(numerology: int) -> float:
    """Average OFDM symbol duration for a 14-symbol slot, seconds."""
    return 1e-3 / (14 * 2 ** numerology)


def ru_max_throughput(cfg: RadioConfig) -> float:
    """Peak cell throughput in bit/s for one link direction.

    Per-carrier rate is layers x modulation bits x code rate x usable
    subcarrier rate, derated by overhead; identical carriers are summed.
    """
    cfg.validate()
    ts = symbol_duration(cfg.numerology)
    per_carrier = (
        cfg.scaling
        * cfg.mimo_layers
        * cfg.modulation_order
        * cfg.capability_mismatch
        * cfg.max_code_rate
        * (12.0 * cfg.prb_count / ts)
        * (1.0 - cfg.overhead)
    )
    return cfg.carriers * per_carrier


def path_loss(kind: str, d_km: float) -> float:
    """Path loss in dB at distance ``d_km`` for a macro or small cell."""
    if d_km <= 0:
        raise ParameterError(f"distance must be > 0 km, got {d_km}")
    if kind == "macro":
        return 128.1 + 37.6 * math.log10(d_km)
    if kind == "small":
        return 37.0 + 30.0 * math.log10(d_km)
    raise ParameterError(f"unknown cell kind {kind!r}, expected 'macro' or 'small'")


def _dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def ue_throughput(
    bandwidth: float,
    tx_power_dbm: float,
    noise_dbm_hz: float,
    own_loss_db: float,
    interferers: Iterable[Tuple[float, float]] = (),
) -> float:
    """Shannon throughput of one user, bit/s.

    ``interferers`` is a sequence of (path_loss_db, tx_power_dbm) pairs for
    co-channel cells.  All powers are converted to linear mW and the noise
    density is integrated over the bandwidth before forming the SINR.
    """
    if bandwidth <= 0:
        raise ParameterError(f"bandwidth must be > 0 Hz, got {bandwidth}")
    if not math.isfinite(own_loss_db):
        raise ParameterError("own_loss_db must be finite")
    signal_mw = _dbm_to_mw(tx_power_dbm - own_loss_db)
    noise_mw = _dbm_to_mw(noise_dbm_hz) * bandwidth
    interference_mw = 0.0
    for loss_db, power_dbm in interferers:
        if not math.isfinite(loss_db):
            raise ParameterError("interferer path loss must be finite")
        interference_mw += _dbm_to_mw(power_dbm - loss_db)
    sinr = signal_mw / (noise_mw + interference_mw)
    return bandwidth * math.log2(1.0 + sinr)


def max_coverage_distance(
    slice_peak_rate: float,
    bandwidth: float,
    tx_power_dbm: float,
    noise_dbm_hz: float,
    kind: str,
    cap_km: float = 1.0,
    resolution_km: float = 1e-3,
) -> float:
    """Largest interference-free distance still supporting ``slice_peak_rate``.

    Bisection to ``resolution_km`` over (resolution, cap].  The result is
    clamped at ``cap_km``; if even the shortest representable distance
    cannot carry the rate, the rate is unreachable.
    """
    if slice_peak_rate <= 0:
        return cap_km
    if cap_km <= resolution_km:
        raise ParameterError("cap_km must exceed resolution_km")

    def rate_at(d: float) -> float:
        return ue_throughput(bandwidth, tx_power_dbm, noise_dbm_hz, path_loss(kind, d))

    if rate_at(resolution_km) < slice_peak_rate:
        raise InfeasibleError(
            f"rate {slice_peak_rate:.3g} bps unreachable even at {resolution_km} km for {kind}"
        )
    if rate_at(cap_km) >= slice_peak_rate:
        return cap_km
    lo, hi = resolution_km, cap_km
    while hi - lo > resolution_km:
        mid = 0.5 * (lo + hi)
        if rate_at(mid) >= slice_peak_rate:
            lo = mid
        else:
            hi = mid
    return lo


def bbu_gops(spec: ComputeSpec) -> float:
    """Total baseband processing effort in GOPS per TTI."""
    spec.validate()
    a = spec.antennas
    return (3.0 * a + a * a + spec.modulation_bits * spec.code_rate * spec.layers / 3.0) * spec.prb / 10.0


def split_gops(total: float, shares: Sequence[float] = (0.40, 0.50, 0.10)) -> Tuple[float, float, float]:
    """Split a total GOPS/TTI budget across RU, DU and CU tiers.

    The CU share is taken as the remainder so the three parts always sum
    to ``total`` exactly.
    """
    _check_shares(shares)
    ru = total * shares[0]
    du = total * shares[1]
    cu = total - ru - du
    return (ru, du, cu)


def burst_frames(rate: float, eth: EthernetModel) -> Tuple[int, float]:
    """Frames per burst interval and the resulting on-wire throughput."""
    eth.validate()
    if rate < 0:
        raise ParameterError(f"rate must be >= 0, got {rate}")
    count = math.ceil(rate * eth.burst_interval / eth.payload_bits)
    actual = count * eth.frame_bits / eth.burst_interval
    return count, actual
