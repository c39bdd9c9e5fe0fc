"""Bus geometry, RC extraction, crosstalk classification and Elmore stage delay."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from .device import (
    DEFAULT_DEVICE,
    WORST_CORNER,
    DeviceParams,
    PvtCorner,
    all_corners,
    driver_resistance,
    effective_vdd,
    voltage_grid_mv,
    GRID_FLOOR_MV,
)
from .errors import CalibrationError, GeometryError

EPS0 = 8.854187817e-12
N_CLASSES = 5  # coupling classes k = 0..4


@dataclass(frozen=True)
class BusGeometry:
    """Physical description of the bus.

    Signal wires are grouped ``shield_interval`` at a time with a grounded
    shield between groups and at both outer edges. ``width_um`` defaults to
    half the pitch; spacing is whatever the pitch leaves over.
    """

    n_wires: int = 32
    length_mm: float = 6.0
    pitch_um: float = 0.8
    segment_mm: float = 1.5
    shield_interval: int = 4
    repeater_size: float | None = None
    clock_ghz: float = 1.5
    v_nominal: float = 1.2
    width_um: float | None = None
    thickness_um: float = 1.0
    height_um: float = 0.8          # dielectric height to the ground plane
    resistivity: float = 2.2e-8     # ohm*m at 25C
    wire_temp_coeff: float = 0.0039  # per degC
    eps_r: float = 3.6
    fringe_ground: float = 1.0      # fringe term added to w/h
    fringe_coupling: float = 0.4    # fringe term added to t/s

    def __post_init__(self):
        problems = []
        if not 1 <= self.n_wires <= 64:
            problems.append("n_wires must be in 1..64")
        if self.shield_interval < 1:
            problems.append("shield_interval must be >= 1")
        for name in ("length_mm", "pitch_um", "segment_mm", "clock_ghz", "v_nominal",
                     "thickness_um", "height_um", "resistivity", "eps_r"):
            if not getattr(self, name) > 0:
                problems.append(f"{name} must be positive")
        if self.fringe_ground < 0 or self.fringe_coupling < 0:
            problems.append("fringe terms must be non-negative")
        if self.repeater_size is not None and not self.repeater_size > 0:
            problems.append("repeater_size must be positive")
        if self.length_mm > 0 and self.segment_mm > 0:
            ratio = self.length_mm / self.segment_mm
            if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
                problems.append("length_mm must be a whole number of segments")
        if self.pitch_um > 0 and not 0 < self.width < self.pitch_um:
            problems.append("wire width must be positive and leave non-zero spacing")
        if problems:
            raise GeometryError("; ".join(problems))

    @property
    def width(self) -> float:
        return self.pitch_um / 2 if self.width_um is None else self.width_um

    @property
    def spacing(self) -> float:
        return self.pitch_um - self.width

    @property
    def stages(self) -> int:
        return int(round(self.length_mm / self.segment_mm))

    @property
    def t_clk(self) -> float:
        return 1e-9 / self.clock_ghz

    @property
    def n_repeaters(self) -> int:
        return self.n_wires * self.stages

    def with_repeater_size(self, size: float) -> "BusGeometry":
        return dataclasses.replace(self, repeater_size=size)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def require_size(self) -> float:
        if self.repeater_size is None:
            raise CalibrationError("repeater size not set; run calibration first")
        return self.repeater_size


@dataclass(frozen=True)
class SegmentRc:
    r_wire: float  # ohms per segment at 25C
    c_g: float     # farads per segment to ground
    c_c: float     # farads per segment to one neighbor

    def __post_init__(self):
        if not (self.r_wire > 0 and self.c_g > 0 and self.c_c >= 0):
            raise GeometryError(f"non-physical RC: {self}")

    @property
    def coupling_ratio(self) -> float:
        return self.c_c / self.c_g

    @property
    def worst_load(self) -> float:
        return self.c_g + 4 * self.c_c


@dataclass(frozen=True)
class CouplingClass:
    k: int
    toggled: bool


def extract_rc(geometry: BusGeometry) -> SegmentRc:
    """Closed-form parallel-plate plus lateral-coupling RC for one segment."""
    w = geometry.width * 1e-6
    s = geometry.spacing * 1e-6
    t = geometry.thickness_um * 1e-6
    h = geometry.height_um * 1e-6
    seg = geometry.segment_mm * 1e-3
    if w <= 0 or s <= 0:
        raise GeometryError("wire width and spacing must be positive")
    eps = EPS0 * geometry.eps_r
    r_wire = geometry.resistivity * seg / (w * t)
    c_g = eps * (w / h + geometry.fringe_ground) * seg
    c_c = eps * (t / s + geometry.fringe_coupling) * seg
    return SegmentRc(r_wire=r_wire, c_g=c_g, c_c=c_c)


def wire_resistance(rc: SegmentRc, geometry: BusGeometry, corner: PvtCorner) -> float:
    return rc.r_wire * (1.0 + geometry.wire_temp_coeff * (corner.temperature_c - 25.0))


def stage_resistance(rc: SegmentRc, geometry: BusGeometry, v_supply: float, corner: PvtCorner,
                     repeater_size: float, device: DeviceParams = DEFAULT_DEVICE) -> float:
    """Driver resistance plus the distributed-wire Elmore term r_wire/2."""
    r_drv = driver_resistance(repeater_size, effective_vdd(v_supply, corner), corner, device)
    return r_drv + wire_resistance(rc, geometry, corner) / 2


def stage_delay(rc: SegmentRc, k, v_supply: float, corner: PvtCorner, repeater_size: float,
                geometry: BusGeometry | None = None,
                device: DeviceParams = DEFAULT_DEVICE) -> float:
    """Elmore delay of one repeater stage: R_total * (c_g + k*c_c)."""
    if isinstance(k, CouplingClass):
        k = k.k
    if not 0 <= k <= 4:
        raise ValueError(f"coupling class must be in 0..4, got {k}")
    geometry = BusGeometry() if geometry is None else geometry
    r_total = stage_resistance(rc, geometry, v_supply, corner, repeater_size, device)
    return r_total * (rc.c_g + k * rc.c_c)


def path_delay(rc: SegmentRc, k, v_supply: float, corner: PvtCorner, geometry: BusGeometry,
               repeater_size: float | None = None, device: DeviceParams = DEFAULT_DEVICE) -> float:
    """Full in-to-out delay; every stage sees the same coupling class."""
    size = geometry.require_size() if repeater_size is None else repeater_size
    return geometry.stages * stage_delay(rc, k, v_supply, corner, size, geometry, device)


# ---------------------------------------------------------------------------
# crosstalk classification

def _neighbor_masks(geometry: BusGeometry) -> tuple[int, int]:
    """Bit masks of wires whose left / right neighbor is a signal wire."""
    n, si = geometry.n_wires, geometry.shield_interval
    has_left = has_right = 0
    for i in range(n):
        if i % si != 0:
            has_left |= 1 << i
        if i % si != si - 1 and i != n - 1:
            has_right |= 1 << i
    return has_left, has_right


def _side_factor(victim_dir: int, neighbor_dir: int) -> int:
    if neighbor_dir == 0:
        return 1
    return 0 if neighbor_dir == victim_dir else 2


def classify_transition(prev_word: int, next_word: int, geometry: BusGeometry) -> list[CouplingClass]:
    """Per-wire coupling class for one bus transition (wire i is bit i).

    Quiet wires are reported with ``toggled=False`` and ``k=0``.
    """
    n = geometry.n_wires
    limit = 1 << n
    if not (0 <= prev_word < limit and 0 <= next_word < limit):
        raise ValueError(f"words must fit in {n} bits")
    has_left, has_right = _neighbor_masks(geometry)

    def direction(i):
        a, b = (prev_word >> i) & 1, (next_word >> i) & 1
        return b - a  # +1 rising, -1 falling, 0 quiet

    dirs = [direction(i) for i in range(n)]
    out = []
    for i, d in enumerate(dirs):
        if d == 0:
            out.append(CouplingClass(0, False))
            continue
        left = dirs[i - 1] if has_left >> i & 1 else 0
        right = dirs[i + 1] if has_right >> i & 1 else 0
        out.append(CouplingClass(_side_factor(d, left) + _side_factor(d, right), True))
    return out


@dataclass
class TransitionProfile:
    """Vectorized classification of a whole word stream.

    ``max_class[i]`` is the largest coupling class among wires toggling on
    cycle ``i`` (-1 for a quiet cycle); ``class_counts[i, k]`` counts the
    toggling wires of class ``k``.
    """

    max_class: np.ndarray
    class_counts: np.ndarray

    def __len__(self):
        return len(self.max_class)

    def switched_cap(self, cap_per_class: np.ndarray) -> np.ndarray:
        """Per-cycle switched capacitance given the capacitance of each class."""
        return self.class_counts @ np.asarray(cap_per_class, dtype=np.float64)


def classify_words(words: np.ndarray, geometry: BusGeometry, initial: int = 0,
                   chunk: int = 1 << 20) -> TransitionProfile:
    """Classify every transition of ``words``, the bus starting from ``initial``."""
    words = np.asarray(words).astype(np.uint64, copy=False)
    n = len(words)
    max_class = np.empty(n, dtype=np.int8)
    counts = np.empty((n, N_CLASSES), dtype=np.uint8)
    has_left, has_right = (np.uint64(m) for m in _neighbor_masks(geometry))
    full = np.uint64((1 << geometry.n_wires) - 1)
    one = np.uint64(1)
    prev_last = np.uint64(initial)
    for start in range(0, n, chunk):
        cur = words[start:start + chunk]
        prev = np.empty_like(cur)
        prev[0] = prev_last
        prev[1:] = cur[:-1]
        prev_last = cur[-1]
        rise = ~prev & cur & full
        fall = prev & ~cur & full
        tog = rise | fall
        l_rise, l_fall = (rise << one) & has_left, (fall << one) & has_left
        r_rise, r_fall = (rise >> one) & has_right, (fall >> one) & has_right
        s_l = (rise & l_rise) | (fall & l_fall)
        o_l = (rise & l_fall) | (fall & l_rise)
        q_l = tog & ~(s_l | o_l)
        s_r = (rise & r_rise) | (fall & r_fall)
        o_r = (rise & r_fall) | (fall & r_rise)
        q_r = tog & ~(s_r | o_r)
        exact = (
            s_l & s_r,
            (q_l & s_r) | (s_l & q_r),
            (q_l & q_r) | (o_l & s_r) | (s_l & o_r),
            (o_l & q_r) | (q_l & o_r),
            o_l & o_r,
        )
        block = counts[start:start + chunk]
        mc = np.full(len(cur), -1, dtype=np.int8)
        for k, mask in enumerate(exact):
            block[:, k] = np.bitwise_count(mask)
            mc[mask != 0] = k
        max_class[start:start + chunk] = mc
    return TransitionProfile(max_class, counts)


# ---------------------------------------------------------------------------
# calibration, geometry study, hold check

def calibrate_repeaters(geometry: BusGeometry, budget: float = 600e-12,
                        device: DeviceParams = DEFAULT_DEVICE,
                        corner: PvtCorner = WORST_CORNER,
                        rc: SegmentRc | None = None,
                        resolution: float = 1e-3) -> float:
    """Smallest repeater size meeting ``budget`` for k=4 at the worst corner.

    Bisection in log-size until the bracket is within ``resolution``
    (relative); the upper end of the bracket is returned so the budget
    is always met.
    """
    rc = extract_rc(geometry) if rc is None else rc

    def delay(size):
        return path_delay(rc, 4, geometry.v_nominal, corner, geometry, size, device)

    lo, hi = 1e-3, 1.0
    while delay(hi) > budget:
        lo, hi = hi, hi * 2
        if hi > 1e7:
            raise CalibrationError(
                f"no repeater size meets {budget * 1e12:.1f} ps at {corner}; "
                f"wire-limited delay is {delay(1e12) * 1e12:.1f} ps"
            )
    if delay(lo) <= budget:
        raise CalibrationError("calibration bracket degenerate; budget met by a vanishing repeater")
    while hi / lo > 1 + resolution:
        mid = math.sqrt(lo * hi)
        if delay(mid) <= budget:
            hi = mid
        else:
            lo = mid
    return hi


def transform_geometry(rc: SegmentRc, ratio_multiplier: float) -> SegmentRc:
    """Raise c_c/c_g by ``ratio_multiplier`` keeping r_wire and c_g + 4*c_c fixed."""
    if not ratio_multiplier > 0:
        raise GeometryError("ratio multiplier must be positive")
    if ratio_multiplier == 1.0:
        return rc
    rho = ratio_multiplier * rc.coupling_ratio
    total = rc.worst_load
    c_g = total / (1 + 4 * rho)
    if not c_g > 0 or not math.isfinite(c_g):
        raise GeometryError(f"transform gives non-physical c_g={c_g}")
    c_c = rho * c_g
    # take c_g from the residual (exact when 4*c_c >= total/2), then nudge it
    # by ulps if needed so the worst-case load is reproduced bit-for-bit
    c_g = total - 4 * c_c
    direction = -math.inf if c_g + 4 * c_c > total else math.inf
    for _ in range(1 << 12):
        if c_g + 4 * c_c == total:
            break
        c_g = math.nextafter(c_g, direction)
    else:
        raise GeometryError("could not conserve c_g + 4*c_c exactly")
    if not c_g > 0:
        raise GeometryError(f"transform gives non-physical c_g={c_g}")
    return SegmentRc(r_wire=rc.r_wire, c_g=c_g, c_c=c_c)


@dataclass
class HoldReport:
    passed: bool
    min_delay: float
    required: float
    violations: list  # (corner label, vdd, k, delay)

    def lines(self) -> list[str]:
        head = "PASS" if self.passed else "FAIL"
        out = [
            f"hold check {head}: min short-path delay {self.min_delay * 1e12:.1f} ps, "
            f"required {self.required * 1e12:.1f} ps"
        ]
        for corner, vdd, k, d in self.violations:
            out.append(f"  violation corner={corner} vdd={vdd:.3f} k={k} delay={d * 1e12:.1f} ps")
        return out


def check_hold(rc: SegmentRc, geometry: BusGeometry, shadow_skew: float,
               hold_margin: float = 20e-12, device: DeviceParams = DEFAULT_DEVICE,
               corners=None, floor_mv: int = GRID_FLOOR_MV) -> HoldReport:
    """Scan k=0 path delays over corners and grid voltages against the shadow hold window.

    Without a shadow skew there is no widened hold window, so the check
    degenerates to a pass.
    """
    corners = all_corners() if corners is None else corners
    required = shadow_skew + hold_margin if shadow_skew > 0 else 0.0
    size = geometry.require_size()
    violations = []
    min_delay = math.inf
    for corner in corners:
        for mv in voltage_grid_mv(int(round(geometry.v_nominal * 1000)), floor_mv):
            d = path_delay(rc, 0, mv / 1000, corner, geometry, size, device)
            min_delay = min(min_delay, d)
            if d < required:
                violations.append((corner.label, mv / 1000, 0, d))
    return HoldReport(not violations, min_delay, required, violations)


def geometry_hash(geometry: BusGeometry, device: DeviceParams, rc: SegmentRc | None = None,
                  extra: dict | None = None) -> str:
    payload = {"geometry": geometry.as_dict(), "device": device.as_dict()}
    if rc is not None:
        payload["rc"] = dataclasses.asdict(rc)
    if extra:
        payload["extra"] = extra
    blob = json.dumps(payload, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
