"""Physical parameters, waveguide layout, and user scenarios.

Units are SI throughout: meters, watts, Hz, radians. Transmit and noise
powers cross the configuration boundary in dBm and are converted to watts
here. Segment indices are 0-based everywhere in this package.

All types in this module are immutable after construction and safe to
share across concurrent workers.
"""

from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT_M_S = 299_792_458.0


def dbm_to_watts(dbm):
    """Convert a power level from dBm to watts."""
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts):
    """Convert a power level from watts to dBm."""
    if watts <= 0:
        raise ValueError(f"power must be positive, got {watts}")
    return 10.0 * np.log10(watts) + 30.0


@dataclass(frozen=True)
class SystemParams:
    """Carrier and receiver constants plus derived wave quantities.

    Attributes:
        carrier_freq_hz: carrier frequency [Hz].
        n_eff: effective refractive index of the dielectric waveguide.
        kappa_db_per_m: in-waveguide attenuation [dB/m]; 0 disables it.
        noise_power_w: receiver noise power [W].
        min_spacing_m: minimum spacing between active antennas [m].
            Defaults to half a free-space wavelength when omitted.
    """

    carrier_freq_hz: float
    n_eff: float
    noise_power_w: float
    kappa_db_per_m: float = 0.0
    min_spacing_m: float | None = None

    def __post_init__(self):
        if self.carrier_freq_hz <= 0:
            raise ValueError("carrier_freq_hz must be positive")
        if self.n_eff <= 0:
            raise ValueError("n_eff must be positive")
        if self.noise_power_w <= 0:
            raise ValueError("noise_power_w must be positive")
        if self.kappa_db_per_m < 0:
            raise ValueError("kappa_db_per_m must be nonnegative")
        if self.min_spacing_m is None:
            object.__setattr__(self, "min_spacing_m", self.wavelength_m / 2.0)
        elif self.min_spacing_m <= 0:
            raise ValueError("min_spacing_m must be positive")

    @property
    def wavelength_m(self) -> float:
        """Free-space wavelength [m]."""
        return SPEED_OF_LIGHT_M_S / self.carrier_freq_hz

    @property
    def guided_wavelength_m(self) -> float:
        """In-waveguide wavelength [m], free-space wavelength over n_eff."""
        return self.wavelength_m / self.n_eff

    @property
    def wavenumber(self) -> float:
        """Free-space wavenumber 2*pi/wavelength [rad/m]."""
        return 2.0 * np.pi / self.wavelength_m

    @property
    def eta(self) -> float:
        """Free-space power gain at 1 m, (wavelength / 4 pi)^2 [dimensionless]."""
        return SPEED_OF_LIGHT_M_S**2 / (16.0 * np.pi**2 * self.carrier_freq_hz**2)


@dataclass(frozen=True)
class WaveguideLayout:
    """Contiguous waveguide segments deployed along the x-axis at fixed height.

    `feed_x[m]` is the x-coordinate of segment m's feed point, which sits at
    the left end of the segment; the segment spans [feed_x[m], feed_x[m] + L].
    Segments are contiguous: consecutive feed points are exactly one segment
    length apart.
    """

    segment_length_m: float
    feed_x: tuple[float, ...]
    height_m: float

    def __post_init__(self):
        object.__setattr__(self, "feed_x", tuple(float(x) for x in self.feed_x))
        if self.segment_length_m <= 0:
            raise ValueError("segment_length_m must be positive")
        if self.height_m <= 0:
            raise ValueError("height_m must be positive")
        if len(self.feed_x) < 1:
            raise ValueError("layout needs at least one segment")
        diffs = np.diff(self.feed_x)
        if len(diffs) and not np.all(diffs > 0):
            raise ValueError("feed_x must be strictly increasing")
        if len(diffs) and not np.allclose(diffs, self.segment_length_m, rtol=1e-9, atol=1e-9 * self.segment_length_m):
            raise ValueError("segments must be contiguous (feed spacing equal to segment length)")

    @property
    def num_segments(self) -> int:
        return len(self.feed_x)

    def segment_interval(self, segment: int) -> tuple[float, float]:
        """Closed interval [lo, hi] of admissible antenna positions in a segment."""
        lo = self.feed_x[segment]
        return lo, lo + self.segment_length_m

    @property
    def extent(self) -> tuple[float, float]:
        """x-range covered by the waveguide, first feed to last segment end."""
        return self.feed_x[0], self.feed_x[-1] + self.segment_length_m


@dataclass(frozen=True)
class User:
    """One uplink user: ground position (z = 0) and transmit power."""

    x: float
    y: float
    power_w: float


@dataclass(frozen=True)
class UserSet:
    """Positions and transmit powers of the K uplink users.

    Arrays are 1-d of equal length and are frozen read-only on construction.
    """

    x: np.ndarray
    y: np.ndarray
    power_w: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).copy()
        y = np.asarray(self.y, dtype=float).copy()
        p = np.asarray(self.power_w, dtype=float).copy()
        if x.ndim != 1 or x.shape != y.shape or x.shape != p.shape:
            raise ValueError("x, y, power_w must be 1-d arrays of equal length")
        if x.size < 1:
            raise ValueError("at least one user is required")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y)) and np.all(np.isfinite(p))):
            raise ValueError("user coordinates and powers must be finite")
        if np.any(p <= 0):
            raise ValueError("all transmit powers must be strictly positive")
        for arr in (x, y, p):
            arr.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "power_w", p)

    @property
    def num_users(self) -> int:
        return self.x.size

    def __len__(self) -> int:
        return self.x.size

    def __getitem__(self, k: int) -> User:
        return User(float(self.x[k]), float(self.y[k]), float(self.power_w[k]))

    def dist_sq_to_axis(self, height_m: float) -> np.ndarray:
        """Squared distance of each user to the waveguide axis, d^2 + y^2 [m^2]."""
        return height_m**2 + self.y**2


@dataclass(frozen=True)
class Placement:
    """Activated segments with one antenna position and one phase shift each.

    `active` keeps activation order (it matters for greedy traces);
    `positions` and `phases` are keyed by segment index. Phases are radians
    in [0, 2*pi) and all-zero for architectures without phase shifters.
    Treat instances as immutable; use `with_segment` to derive new ones.
    """

    active: tuple[int, ...]
    positions: dict[int, float]
    phases: dict[int, float]

    def __post_init__(self):
        object.__setattr__(self, "active", tuple(int(m) for m in self.active))
        if len(set(self.active)) != len(self.active):
            raise ValueError("active segments must be distinct")
        if set(self.positions) != set(self.active) or set(self.phases) != set(self.active):
            raise ValueError("positions and phases must be keyed exactly by the active segments")

    @classmethod
    def empty(cls) -> "Placement":
        return cls(active=(), positions={}, phases={})

    def with_segment(self, segment: int, position: float, phase: float = 0.0) -> "Placement":
        """Return a new placement with one more activated segment."""
        if segment in self.positions:
            raise ValueError(f"segment {segment} is already active")
        return Placement(
            active=self.active + (segment,),
            positions={**self.positions, segment: float(position)},
            phases={**self.phases, segment: float(phase)},
        )

    def with_phases(self, phases: dict[int, float]) -> "Placement":
        """Return a copy with replaced phase shifts (same activated set)."""
        if set(phases) != set(self.active):
            raise ValueError("phases must be keyed exactly by the active segments")
        return Placement(active=self.active, positions=dict(self.positions), phases=dict(phases))

    @property
    def num_active(self) -> int:
        return len(self.active)

    def position_array(self) -> np.ndarray:
        """Antenna positions in activation order."""
        return np.array([self.positions[m] for m in self.active], dtype=float)

    def phase_array(self) -> np.ndarray:
        """Phase shifts in activation order."""
        return np.array([self.phases[m] for m in self.active], dtype=float)

    def validate(self, layout: WaveguideLayout, params: SystemParams) -> None:
        """Raise ValueError if any segment-interval or spacing constraint fails."""
        for m in self.active:
            if not 0 <= m < layout.num_segments:
                raise ValueError(f"segment index {m} outside layout")
            lo, hi = layout.segment_interval(m)
            if not lo <= self.positions[m] <= hi:
                raise ValueError(f"antenna position {self.positions[m]} outside segment {m} interval [{lo}, {hi}]")
        pos = self.position_array()
        if len(pos) > 1:
            gaps = np.abs(pos[:, None] - pos[None, :])
            np.fill_diagonal(gaps, np.inf)
            if gaps.min() < params.min_spacing_m:
                raise ValueError("minimum antenna spacing violated")


def build_centered_layout(
    num_segments: int,
    segment_length_m: float,
    height_m: float,
    region_center_x: float = 0.0,
) -> WaveguideLayout:
    """Build a contiguous layout centered above `region_center_x`.

    Segment m's feed point lands at center - M*L/2 + m*L, so the M segments
    jointly cover [center - M*L/2, center + M*L/2].
    """
    if num_segments < 1:
        raise ValueError("num_segments must be at least 1")
    if segment_length_m <= 0:
        raise ValueError("segment_length_m must be positive")
    if height_m <= 0:
        raise ValueError("height_m must be positive")
    start = region_center_x - num_segments * segment_length_m / 2.0
    feeds = tuple(start + m * segment_length_m for m in range(num_segments))
    return WaveguideLayout(segment_length_m=segment_length_m, feed_x=feeds, height_m=height_m)


def sample_users(num_users, region_x_m, region_y_m, power_w, rng_seed) -> UserSet:
    """Draw users uniformly over a centered region_x_m by region_y_m rectangle.

    `rng_seed` may be an int or a sequence of ints; the draw is deterministic
    given the seed. Monte Carlo realizations should derive their stream as
    (master_seed, realization_index) so results are order-independent.
    """
    if num_users < 1:
        raise ValueError("num_users must be at least 1")
    if region_x_m <= 0 or region_y_m <= 0:
        raise ValueError("region dimensions must be positive")
    rng = np.random.default_rng(rng_seed)
    x = rng.uniform(-region_x_m / 2.0, region_x_m / 2.0, size=num_users)
    y = rng.uniform(-region_y_m / 2.0, region_y_m / 2.0, size=num_users)
    p = np.broadcast_to(np.asarray(power_w, dtype=float), (num_users,)).copy()
    return UserSet(x=x, y=y, power_w=p)
