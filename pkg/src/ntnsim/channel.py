"""Hybrid FSO/RF link-rate models.

The RF rate follows an inverse-square SNR around a 1 m reference distance,
so all distances here are in meters. The FSO rate is a capacity lower bound
driven by Beer-Lambert extinction, with the visibility-to-attenuation
exponent from the Kim model and the k1 coefficient obtained by solving a
transcendental equation in the average-to-peak power ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

LN2 = math.log(2.0)
LOG10_E = math.log10(math.e)
TWO_PI_E = 2.0 * math.pi * math.e


class ConvergenceError(RuntimeError):
    """Root bracketing or iteration failed."""


class NoCrossoverError(ValueError):
    """The FSO-RF rate difference does not change sign over the bracket."""


def kim_size_exponent(visibility_km: float) -> float:
    """Kim-model particle size distribution exponent for a visibility."""
    v = visibility_km
    if v > 50.0:
        return 1.6
    if v > 6.0:
        return 1.3
    if v > 1.0:
        return 0.16 * v + 0.34
    if v > 0.5:
        return v - 0.5
    return 0.0


def kim_attenuation(visibility_km: float, wavelength_nm: float) -> tuple[float, float]:
    """Atmospheric extinction as (dB/km, 1/m) for a visibility and wavelength."""
    if visibility_km <= 0:
        raise ValueError("visibility must be positive")
    p = kim_size_exponent(visibility_km)
    beta_db = (3.91 / visibility_km) * (wavelength_nm / 550.0) ** (-p)
    beta = beta_db / (1e4 * LOG10_E)
    return beta_db, beta


def _apr_residual(mu: float, alpha: float) -> float:
    # 1/mu - e^-mu/(1-e^-mu) - alpha, written via expm1 for stability near 0
    decay = 0.0 if mu > 700.0 else 1.0 / math.expm1(mu)
    return 1.0 / mu - decay - alpha


def solve_mu_star(alpha: float, lo: float = 1e-9, hi: float = 1e3) -> float:
    """Solve alpha = 1/mu - e^-mu/(1-e^-mu) for mu by bisection.

    The right-hand side decreases monotonically from 1/2 (mu -> 0) to 0, so
    a unique root exists for alpha in (0, 1/2).
    """
    if not 0.0 < alpha < 0.5:
        raise ValueError("average-to-peak ratio must lie in (0, 1/2)")
    f_lo, f_hi = _apr_residual(lo, alpha), _apr_residual(hi, alpha)
    if f_lo <= 0.0 or f_hi >= 0.0:
        raise ConvergenceError(
            f"no sign change for alpha={alpha} on ({lo}, {hi})")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _apr_residual(mid, alpha) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14 * max(1.0, hi):
            break
    mu = 0.5 * (lo + hi)
    if abs(_apr_residual(mu, alpha)) > 1e-10:
        raise ConvergenceError(f"residual too large at mu={mu}")
    return mu


def fso_k1(alpha: float, gamma_fso_sq: float) -> float:
    """ASNR coefficient of the FSO capacity bound.

    Two branches split at alpha = 1/2; the boundary itself is rejected.
    ``gamma_fso_sq`` is the squared linear average optical SNR.
    """
    if alpha == 0.5:
        raise ValueError("alpha = 1/2 sits on the branch boundary")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if gamma_fso_sq <= 0:
        raise ValueError("squared ASNR must be positive")
    if alpha < 0.5:
        mu = solve_mu_star(alpha)
        shaping = math.exp(2.0 * alpha * mu) / TWO_PI_E
        shaping *= ((1.0 - math.exp(-mu)) / mu) ** 2
        return shaping * gamma_fso_sq / alpha ** 2
    return gamma_fso_sq / (TWO_PI_E * alpha ** 2)


@dataclass
class ChannelParams:
    """RF and FSO constants plus the derived attenuation coefficients.

    ``asnr_db_convention`` selects how the dB figure maps to the squared
    linear ASNR: "power" reads it as 10*log10(gamma^2) (default), and
    "amplitude" as 10*log10(gamma), i.e. gamma^2 = 10^(dB/5).
    """

    b_rf_hz: float = 1e9
    b_fso_hz: float = 1e9
    gamma0: float = 1e9
    visibility_km: float = 15.0
    wavelength_nm: float = 1550.0
    asnr_db: float = 25.0
    alpha: float = 0.1
    asnr_db_convention: str = "power"
    beta_db_per_km: float = field(init=False)
    beta_per_m: float = field(init=False)
    gamma_fso_sq: float = field(init=False)
    k1: float = field(init=False)
    k2: float = field(init=False)

    def __post_init__(self) -> None:
        for name in ("b_rf_hz", "b_fso_hz", "gamma0", "visibility_km",
                     "wavelength_nm"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        self.beta_db_per_km, self.beta_per_m = kim_attenuation(
            self.visibility_km, self.wavelength_nm)
        if self.asnr_db_convention == "power":
            self.gamma_fso_sq = 10.0 ** (self.asnr_db / 10.0)
        elif self.asnr_db_convention == "amplitude":
            self.gamma_fso_sq = 10.0 ** (self.asnr_db / 5.0)
        else:
            raise ValueError(
                f"unknown ASNR dB convention {self.asnr_db_convention!r}")
        self.k1 = fso_k1(self.alpha, self.gamma_fso_sq)
        self.k2 = 2.0 * self.beta_per_m


def rf_rate(d_m: float, p: ChannelParams) -> float:
    """RF achievable rate in bps over a link of ``d_m`` meters."""
    if d_m <= 0:
        raise ValueError("link distance must be positive")
    return p.b_rf_hz * math.log1p(p.gamma0 / (d_m * d_m)) / LN2


def fso_rate(d_m: float, p: ChannelParams) -> float:
    """FSO achievable rate (capacity lower bound) in bps."""
    if d_m <= 0:
        raise ValueError("link distance must be positive")
    x = p.k2 * d_m
    atten = 0.0 if x > 700.0 else math.exp(-x)
    return 0.5 * p.b_fso_hz * math.log1p(p.k1 * atten) / LN2


def hybrid_rate(d_m: float, p: ChannelParams) -> tuple[float, str]:
    """Best of the two carriers and which one was selected; ties go to FSO."""
    r_fso = fso_rate(d_m, p)
    r_rf = rf_rate(d_m, p)
    if r_fso >= r_rf:
        return r_fso, "fso"
    return r_rf, "rf"


def crossover_distance(p: ChannelParams, d_lo_m: float, d_hi_m: float,
                       tol_m: float = 1.0) -> float:
    """Distance where the FSO and RF rates cross, by bisection to ``tol_m``."""
    def diff(d: float) -> float:
        return fso_rate(d, p) - rf_rate(d, p)

    f_lo, f_hi = diff(d_lo_m), diff(d_hi_m)
    if f_lo == 0.0:
        return d_lo_m
    if f_hi == 0.0:
        return d_hi_m
    if (f_lo > 0) == (f_hi > 0):
        raise NoCrossoverError(
            f"rate difference keeps its sign on [{d_lo_m}, {d_hi_m}] m")
    lo, hi = d_lo_m, d_hi_m
    while hi - lo > tol_m:
        mid = 0.5 * (lo + hi)
        f_mid = diff(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
