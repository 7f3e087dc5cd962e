"""Synthetic paintings with controllable surface statistics.

Each artist profile parameterizes a Gaussian random field synthesized in
the frequency domain: an anisotropic Gaussian spectral envelope (set by a
correlation length, an anisotropy ratio and a stroke direction) plus an
isotropic white noise floor.  Profiles far apart in parameter space are
separable by the discriminator; a pair of deliberately similar "sibling"
profiles keeps the pruning stage honest, mirroring the low-but-nonzero
false-positive rate of real studies.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .heightmap import HeightMap


@dataclass(frozen=True)
class ArtistProfile:
    """Parameters of one synthetic making style."""

    profile_id: str
    correlation_length: float  # cm, along the short axis
    anisotropy_ratio: float  # long axis / short axis, >= 1
    stroke_orientation: float  # degrees, direction of the long axis
    stroke_amplitude: float  # height units (std of the structured field)
    noise_floor: float  # height units (std of the white component)

    def __post_init__(self):
        if not self.correlation_length > 0:
            raise ValueError("correlation_length must be positive")
        if self.anisotropy_ratio < 1:
            raise ValueError("anisotropy_ratio must be >= 1")
        if self.stroke_amplitude < 0 or self.noise_floor < 0:
            raise ValueError("amplitudes must be non-negative")


#: Documented floor on the pairwise profile distance of the shipped presets
#: (see profile_distance).
PROFILE_SEPARATION_FLOOR = 0.04


def preset_profiles() -> list[ArtistProfile]:
    """Nine fixed profiles standing in for nine distinct artists.

    Profiles 1..7 are strongly separated.  Profiles 8 and 9 are siblings:
    close enough that a few of their cross-pair comparisons read as the
    same practice, so a realistic study exercises the edge-pruning stage
    the way real false positives would.
    """
    return [
        ArtistProfile("artist-1", 0.040, 1.0, 0.0, 1.00, 0.050),
        ArtistProfile("artist-2", 0.050, 2.2, 25.0, 1.20, 0.050),
        ArtistProfile("artist-3", 0.090, 1.0, 0.0, 1.00, 0.080),
        ArtistProfile("artist-4", 0.110, 2.8, 70.0, 1.40, 0.060),
        ArtistProfile("artist-5", 0.180, 1.1, 0.0, 1.10, 0.100),
        ArtistProfile("artist-6", 0.220, 3.2, 115.0, 1.60, 0.080),
        ArtistProfile("artist-7", 0.210, 1.6, 160.0, 1.30, 0.400),
        ArtistProfile("artist-8", 0.140, 1.8, 40.0, 1.20, 0.070),
        ArtistProfile("artist-9", 0.169, 1.8, 40.0, 1.20, 0.070),
    ]


def profile_distance(a: ArtistProfile, b: ArtistProfile) -> float:
    """Scale-free distance between two profiles (max over parameter axes)."""
    d_len = abs(math.log(a.correlation_length / b.correlation_length))
    d_ani = abs(math.log(a.anisotropy_ratio / b.anisotropy_ratio))
    d_ang = abs(a.stroke_orientation - b.stroke_orientation) % 180.0
    d_ang = min(d_ang, 180.0 - d_ang) / 90.0
    d_amp = abs(math.log(a.stroke_amplitude / b.stroke_amplitude)) if a.stroke_amplitude and b.stroke_amplitude else 1.0
    d_nf = abs(math.log(a.noise_floor / b.noise_floor)) if a.noise_floor and b.noise_floor else 1.0
    return max(d_len, d_ani, d_ang, d_amp, d_nf)


def gen_painting(
    profile: ArtistProfile,
    width_cm: float,
    height_cm: float,
    resolution_um: float,
    seed: int,
    painting_id: str | None = None,
) -> HeightMap:
    """Synthesize one painting-sized height map, deterministic given seed."""
    if width_cm <= 0 or height_cm <= 0 or resolution_um <= 0:
        raise ValueError("dimensions and resolution must be positive")
    px_cm = resolution_um * 1e-4
    w = int(round(width_cm / px_cm))
    h = int(round(height_cm / px_cm))

    fx = np.fft.fftfreq(w, d=px_cm)  # cycles per cm
    fy = np.fft.fftfreq(h, d=px_cm)
    kx, ky = np.meshgrid(fx, fy)

    theta = math.radians(profile.stroke_orientation)
    k_along = kx * math.cos(theta) + ky * math.sin(theta)
    k_across = -kx * math.sin(theta) + ky * math.cos(theta)
    len_along = profile.correlation_length * profile.anisotropy_ratio
    len_across = profile.correlation_length
    # sqrt of a Gaussian spectrum: corr(r) = exp(-r^2 / (2 l^2))
    amp = np.exp(
        -((2 * np.pi * k_along * len_along) ** 2 + (2 * np.pi * k_across * len_across) ** 2)
        / 4.0
    )
    amp[0, 0] = 0.0  # zero-mean field

    rng = np.random.default_rng(seed)
    white = rng.standard_normal((h, w))
    field = np.fft.ifft2(np.fft.fft2(white) * amp).real
    sd = field.std()
    if sd > 0:
        field /= sd

    heights = profile.stroke_amplitude * field
    if profile.noise_floor > 0:
        heights = heights + profile.noise_floor * rng.standard_normal((h, w))

    return HeightMap(
        values=heights,
        lateral_resolution=resolution_um,
        source_id=painting_id or f"{profile.profile_id}-s{seed}",
    )


def spectrum_orientation(hm: HeightMap) -> float:
    """Dominant direction (degrees, mod 180) of the structured relief.

    Estimated from the power spectrum: the white floor is subtracted
    (median power of the outer frequency band), the remaining energy is
    reduced to a second-moment tensor over a low-frequency disc, and the
    long-correlation axis is the direction perpendicular to the tensor's
    principal axis in k-space.
    """
    v = hm.values - hm.values.mean()
    p = np.abs(np.fft.fft2(v)) ** 2
    h, w = v.shape
    fx = np.fft.fftfreq(w)
    fy = np.fft.fftfreq(h)
    kx, ky = np.meshgrid(fx, fy)
    kr = np.hypot(kx, ky)

    floor = np.median(p[kr > 0.35])
    p_net = np.clip(p - floor, 0.0, None)
    p_net[0, 0] = 0.0

    # low-k disc holding 90% of the structured energy
    order = np.argsort(kr, axis=None)
    csum = np.cumsum(p_net.ravel()[order])
    cutoff_idx = int(np.searchsorted(csum, 0.90 * csum[-1]))
    k_cut = kr.ravel()[order][min(cutoff_idx, order.size - 1)]
    sel = kr <= max(k_cut, 1e-9)

    wgt = p_net[sel]
    sxx = float(np.sum(wgt * kx[sel] ** 2))
    syy = float(np.sum(wgt * ky[sel] ** 2))
    sxy = float(np.sum(wgt * kx[sel] * ky[sel]))
    principal = 0.5 * math.atan2(2 * sxy, sxx - syy)
    return (math.degrees(principal) + 90.0) % 180.0


# ---------------------------------------------------------------------------
# preset persistence


def save_profiles(profiles: list[ArtistProfile], path: str | Path) -> None:
    Path(path).write_text(json.dumps([asdict(p) for p in profiles], indent=2))


def load_profiles(path: str | Path) -> list[ArtistProfile]:
    return [ArtistProfile(**e) for e in json.loads(Path(path).read_text())]
