"""Channel coefficients and the achievable uplink sum-rate.

All gains are complex amplitude ratios. A user's end-to-end coefficient
aggregates one cascaded gain per activated segment and carries a 1/sqrt(S)
factor for the receiver noise accumulated by analog combining.

Everything here is a pure function of immutable inputs; internal phase
arithmetic keeps full precision and is only reduced mod 2*pi implicitly by
the complex exponential.
"""

import numpy as np

from .geometry import Placement, SystemParams, User, UserSet, WaveguideLayout


def freespace_gain(user: User, antenna_x, layout: WaveguideLayout, params: SystemParams):
    """Line-of-sight gain between a user and a radiating point at `antenna_x`.

    Magnitude sqrt(eta)/r and phase -k0*r for propagation distance r.
    `antenna_x` may be a scalar or an array of positions.
    """
    d_sq = layout.height_m**2 + user.y**2
    r = np.sqrt((user.x - np.asarray(antenna_x, dtype=float)) ** 2 + d_sq)
    return np.sqrt(params.eta) * np.exp(-1j * params.wavenumber * r) / r


def waveguide_gain(antenna_x, feed_x, params: SystemParams):
    """In-waveguide gain from the radiating point back to the feed.

    Magnitude 10^(-kappa*l/20) and phase -2*pi*l/lambda_g over in-guide
    length l = antenna_x - feed_x; exactly unit magnitude when kappa is 0.
    """
    ell = np.asarray(antenna_x, dtype=float) - feed_x
    if np.any(ell < 0):
        raise ValueError("antenna_x must not precede the feed point")
    amp = 10.0 ** (-params.kappa_db_per_m * ell / 20.0)
    return amp * np.exp(-2j * np.pi * ell / params.guided_wavelength_m)


def cascaded_gain(user: User, segment: int, antenna_x, layout: WaveguideLayout, params: SystemParams):
    """Product of in-waveguide and free-space gains for one segment's antenna."""
    lo, hi = layout.segment_interval(segment)
    x = np.asarray(antenna_x, dtype=float)
    if np.any(x < lo) or np.any(x > hi):
        raise ValueError(f"antenna position outside segment {segment} interval [{lo}, {hi}]")
    return waveguide_gain(x, lo, params) * freespace_gain(user, x, layout, params)


def segment_gains(users: UserSet, segment: int, antenna_x, layout: WaveguideLayout, params: SystemParams):
    """Cascaded gains of every user to position(s) within one segment.

    Returns shape (K,) for scalar `antenna_x` and (K, Q) for an array of Q
    positions. This is the vectorized workhorse behind the optimizers.
    """
    lo, hi = layout.segment_interval(segment)
    x = np.asarray(antenna_x, dtype=float)
    if np.any(x < lo) or np.any(x > hi):
        raise ValueError(f"antenna position outside segment {segment} interval [{lo}, {hi}]")
    scalar = x.ndim == 0
    xx = np.atleast_1d(x)
    d_sq = users.dist_sq_to_axis(layout.height_m)
    r = np.sqrt((users.x[:, None] - xx[None, :]) ** 2 + d_sq[:, None])
    g_out = np.sqrt(params.eta) * np.exp(-1j * params.wavenumber * r) / r
    ell = xx - lo
    g_in = 10.0 ** (-params.kappa_db_per_m * ell / 20.0) * np.exp(-2j * np.pi * ell / params.guided_wavelength_m)
    g = g_in[None, :] * g_out
    return g[:, 0] if scalar else g


def cascaded_gain_matrix(users: UserSet, placement: Placement, layout: WaveguideLayout, params: SystemParams):
    """(K, S) matrix of cascaded gains, columns in placement activation order."""
    if not placement.active:
        raise ValueError("placement has no active segments")
    cols = [segment_gains(users, m, placement.positions[m], layout, params) for m in placement.active]
    return np.stack(cols, axis=1)


def effective_channel(placement: Placement, user: User, layout: WaveguideLayout, params: SystemParams) -> complex:
    """End-to-end coefficient of one user after segment aggregation.

    (1/sqrt(S)) * sum over active segments of e^{j theta_m} g_m.
    """
    if not placement.active:
        raise ValueError("placement has no active segments")
    total = 0.0 + 0.0j
    for m in placement.active:
        g = cascaded_gain(user, m, placement.positions[m], layout, params)
        total += np.exp(1j * placement.phases[m]) * g
    return complex(total / np.sqrt(placement.num_active))


def sum_rate(channels, users: UserSet, params: SystemParams) -> float:
    """Achievable uplink sum-rate log2(1 + sum_k P_k |h_k|^2 / sigma^2) [bits/s/Hz]."""
    h = np.asarray(channels)
    if h.shape != (users.num_users,):
        raise ValueError("need exactly one channel coefficient per user")
    snr = float(np.sum(users.power_w * np.abs(h) ** 2) / params.noise_power_w)
    return float(np.log2(1.0 + snr))


def placement_sum_rate(users: UserSet, placement: Placement, layout: WaveguideLayout, params: SystemParams) -> float:
    """Sum-rate achieved by a placement, vectorized over users."""
    g = cascaded_gain_matrix(users, placement, layout, params)
    v = np.exp(1j * placement.phase_array())
    h = g @ v / np.sqrt(placement.num_active)
    snr = float(np.sum(users.power_w * np.abs(h) ** 2) / params.noise_power_w)
    return float(np.log2(1.0 + snr))
