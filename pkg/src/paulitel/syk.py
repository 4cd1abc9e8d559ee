"""Large-q fermion-model teleportation correlators at all temperatures.

Everything here is closed-form evaluation: the chaos exponent solves

    beta * lambda = 2 beta J cos(lambda beta / 4),

and the two-sided correlator of a weight-p probe with coupling g over N
Majoranas is, before the scrambling time,

    C(t) = (-i G_b)^p ( e^{-ig/2N} / (1 + (1 - e^{-ig/N}) X) )^{2p/q},
    X = (J / 2 lambda) e^{lambda t} e^{i lambda beta / 4},

with G_b = (lambda/2J)^{2/q}. Expanding in powers of e^{-ig/N} yields the
winding size distribution on the lattice S = q n + p:

    f(qn+p) = i (-i G_b)^p (1+X)^{-2p/q} C(n + 2p/q - 1, n) (X/(1+X))^n,

whose coefficient phases advance linearly with n (the size-winding form)
at rate 2 alpha = (2 lambda / J) e^{-lambda t} sin(lambda beta / 4) while
magnitudes decay at gamma = (2 lambda / J) e^{-lambda t} cos(lambda beta/4)
= (lambda/J)^2 e^{-lambda t}. The principal branch is used for all complex
powers; scanned parameter regions keep arguments well inside (-pi, pi).

The stringy-gravity correlator is an oscillatory Gamma-weight quadrature

    C / <psi psi> = (4^{2D} / Gamma(2D)) Int_0^inf dk k^{2D-1} e^{-4k}
                    exp(-i^{1+eps} g G_N A_eps k^eps e^{eps t}),

evaluated with an adaptive rule on (0, k_cut) where the weight tail is
negligible; at eps = 1 the integral develops the light-cone pole when
g~ G_N e^t reaches 4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln

from .util import write_csv


class NumericalFailure(RuntimeError):
    """Raised when a quadrature or series evaluation cannot converge."""


@dataclass(frozen=True)
class SykParams:
    n_fermions: int
    q: int
    p: int
    j: float
    beta: float
    g: float

    def __post_init__(self):
        if self.q % 2 != 0 or self.q < 4:
            raise ValueError("q must be even and at least 4")
        if self.p < 1:
            raise ValueError("p must be at least 1")
        if self.j <= 0:
            raise ValueError("J must be positive")
        if self.beta < 0:
            raise ValueError("beta must be non-negative")

    @property
    def delta2(self) -> float:
        """Twice the conformal weight, 2p/q."""
        return 2.0 * self.p / self.q


def solve_lyapunov(beta_j: float, tol: float = 1e-12) -> float:
    """Root lambda*beta of y = 2 betaJ cos(y/4) on (0, 2 pi].

    Interpolates between 2 betaJ (y -> 0, high temperature) and 2 pi
    (low temperature).
    """
    if beta_j < 0:
        raise ValueError("betaJ must be non-negative")
    if beta_j == 0.0:
        return 0.0
    lo, hi = 0.0, 2.0 * math.pi
    f_lo = -2.0 * beta_j  # y - 2 betaJ cos(y/4) at y = 0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = mid - 2.0 * beta_j * math.cos(mid / 4.0)
        if f_mid <= 0.0:
            lo, f_lo = mid, f_mid
        else:
            hi = mid
        if hi - lo <= tol * hi:
            break
    return 0.5 * (lo + hi)


def lyapunov(params: SykParams) -> float:
    """Chaos exponent lambda; equals 2J at infinite temperature."""
    if params.beta == 0.0:
        return 2.0 * params.j
    return solve_lyapunov(params.beta * params.j) / params.beta


def g_beta(params: SykParams) -> float:
    """Single-fermion imaginary-time two-point function (lambda/2J)^(2/q)."""
    lam = lyapunov(params)
    return (lam / (2.0 * params.j)) ** (2.0 / params.q)


def correlator_infinite_T(params: SykParams, t: float) -> complex:
    """Infinite-temperature correlator (no prefactor convention)."""
    if params.beta != 0.0:
        raise ValueError("infinite-temperature form requires beta = 0")
    x = (params.g / params.n_fermions) * 0.25 * math.exp(2.0 * params.j * t)
    return (1.0 + 1j * x) ** (-params.delta2)


def _prefactor(params: SykParams) -> complex:
    return (-1j * g_beta(params)) ** params.p


def _x_kernel(params: SykParams, t: float) -> complex:
    lam = lyapunov(params)
    phase = lam * params.beta / 4.0
    return (params.j / (2.0 * lam)) * math.exp(lam * t) * complex(math.cos(phase), math.sin(phase))


def correlator_finite_T(params: SykParams, t: float, form: str = "leading") -> complex:
    """Finite-temperature correlator, with the (-i G_beta)^p prefactor.

    `leading` is the g/N << 1 form; `full` keeps all orders of g/N and is
    the generating function of the winding size distribution.
    """
    lam = lyapunov(params)
    n = params.n_fermions
    if form == "leading":
        s = math.sin(lam * params.beta / 4.0)
        denom = (
            1.0
            - (params.g / n) * (params.j / (2.0 * lam)) * math.exp(lam * t) * s
            + 1j * (params.g / n) * 0.25 * math.exp(lam * t)
        )
        return _prefactor(params) * denom ** (-params.delta2)
    if form == "full":
        x = _x_kernel(params, t)
        w = np.exp(-1j * params.g / n)
        denom = 1.0 + (1.0 - w) * x
        return (
            _prefactor(params)
            * np.exp(-1j * params.g * params.p / (params.q * n))
            * denom ** (-params.delta2)
        )
    raise ValueError("form must be 'leading' or 'full'")


@dataclass
class WindingDistribution:
    """Complex winding coefficients f(q n + p) for n = 0..n_max."""

    f: np.ndarray
    offset: int  # p
    spacing: int  # q
    gamma: float  # size decay rate
    two_alpha: float  # winding rate: arg f advances ~ 2 alpha per n
    tail_mass: float
    truncation_ok: bool

    def n_values(self) -> np.ndarray:
        return np.arange(len(self.f), dtype=np.int64)

    def sizes(self) -> np.ndarray:
        return self.spacing * self.n_values() + self.offset

    def sum_abs(self) -> float:
        return float(np.abs(self.f).sum() + self.tail_mass)

    def to_csv(self, path) -> None:
        rows = (
            (n, z.real, z.imag, abs(z), np.angle(z))
            for n, z in zip(self.n_values(), self.f)
        )
        write_csv(path, ("n", "re_f", "im_f", "abs_f", "arg_f"), rows)


def winding_distribution(
    params: SykParams, t: float, n_max: int, tail_tol: float = 1e-8
) -> WindingDistribution:
    """Exact binomial-series coefficients of the full correlator."""
    lam = lyapunov(params)
    x = _x_kernel(params, t)
    u0 = x / (1.0 + x)
    d2 = params.delta2
    pref = 1j * _prefactor(params) * (1.0 + x) ** (-d2)
    n = np.arange(n_max + 1, dtype=np.float64)
    log_binom = gammaln(n + d2) - gammaln(d2) - gammaln(n + 1.0)
    log_mag = log_binom + n * math.log(abs(u0))
    phases = n * np.angle(u0)
    f = pref * np.exp(log_mag) * np.exp(1j * phases)
    # closed-form total |f| mass vs the stored partial sum
    total_abs = abs(pref) * (1.0 - abs(u0)) ** (-d2)
    tail = max(0.0, total_abs - float(np.abs(f).sum()))
    phase_lb4 = lam * params.beta / 4.0
    gamma = (2.0 * lam / params.j) * math.exp(-lam * t) * math.cos(phase_lb4)
    two_alpha = (2.0 * lam / params.j) * math.exp(-lam * t) * math.sin(phase_lb4)
    return WindingDistribution(
        f=f,
        offset=params.p,
        spacing=params.q,
        gamma=gamma,
        two_alpha=two_alpha,
        tail_mass=tail,
        truncation_ok=tail < tail_tol,
    )


def resum_winding(dist: WindingDistribution, params: SykParams) -> complex:
    """Resummation oracle: -i sum_S e^{-i g S / qN} f(S).

    Must reproduce correlator_finite_T(..., form="full") up to the
    truncated tail; this pins the branch of the complex powers.
    """
    s = dist.sizes().astype(np.float64)
    w = np.exp(-1j * params.g * s / (params.q * params.n_fermions))
    return complex(-1j * np.sum(w * dist.f))


def syk_size_moments(params: SykParams, t: float) -> tuple[float, float]:
    """Mean size and size width of the evolved weight-p probe.

    At beta = 0 these reduce to (p/2) e^{2Jt} and (sqrt(2qp)/4) e^{2Jt};
    at finite temperature mean * gamma = 2p holds identically.
    """
    lam = lyapunov(params)
    envelope = (2.0 * params.j / lam) ** 2 * math.exp(lam * t)
    mean = 0.5 * params.p * envelope
    width = 0.25 * math.sqrt(2.0 * params.q * params.p) * envelope
    return mean, width


@dataclass(frozen=True)
class StringyParams:
    delta: float  # conformal weight of the probe
    epsilon_str: float  # 1 = pure gravity, 0 = deeply stringy
    g_n: float  # Newton-constant scale
    g: float
    t: float
    a_eps: float = 1.0  # order-1 scattering constant

    def __post_init__(self):
        if not 0.0 <= self.epsilon_str <= 1.0:
            raise ValueError("epsilon_str must lie in [0, 1]")
        if self.delta <= 0:
            raise ValueError("Delta must be positive")


def stringy_correlator(sp: StringyParams, tail: float = 1e-12) -> complex:
    """Correlator in units of the two-point function <psi psi>.

    Gamma-weight quadrature with the weight kept in log space; the cutoff
    k_cut is grown until the (possibly growth-corrected) weight tail drops
    below `tail`. Raises NumericalFailure beyond the eps = 1 pole or if the
    adaptive rule does not converge.
    """
    d2 = 2.0 * sp.delta
    eps = sp.epsilon_str
    c = sp.g * sp.g_n * sp.a_eps * math.exp(eps * sp.t)
    rot = -((1j) ** (1.0 + eps)) * c  # coefficient of k^eps in the exponent
    grow = rot.real  # positive near eps = 1 for g > 0
    if eps == 1.0 and grow >= 4.0:
        raise NumericalFailure(
            f"light-cone pole reached: growth {grow:.6g} >= 4 (g~ G_N e^t too large)"
        )
    log_norm = d2 * math.log(4.0) - gammaln(d2)

    def log_weight(k: float) -> float:
        return (d2 - 1.0) * math.log(k) + log_norm - 4.0 * k + max(grow, 0.0) * k**eps

    k_peak = max(d2 / 4.0, 1e-6)
    k_cut = max(4.0 * k_peak, 16.0)
    log_tail = math.log(tail)
    for _ in range(200):
        if log_weight(k_cut) + math.log(k_cut) < log_tail:
            break
        k_cut *= 1.5
        if k_cut > 1e12:
            raise NumericalFailure("weight tail does not close; integral diverges")

    def integrand(k: float) -> complex:
        lw = (d2 - 1.0) * math.log(k) + log_norm - 4.0 * k
        return complex(np.exp(lw + rot * k**eps))

    re, re_err = quad(lambda k: integrand(k).real, 0.0, k_cut, limit=800)
    im, im_err = quad(lambda k: integrand(k).imag, 0.0, k_cut, limit=800)
    result = complex(re, im)
    err = math.hypot(re_err, im_err)
    if err > 1e-7 * max(1.0, abs(result)):
        raise NumericalFailure(
            f"quadrature error {err:.3g} too large for |C| = {abs(result):.6g} "
            f"(eps={eps}, k_cut={k_cut:.3g})"
        )
    return result


def correlator_scan_rows(params: SykParams, ts, form: str):
    """CSV rows (t, Re C, Im C, |C|, arg C) for a correlator scan."""
    for t in ts:
        if form == "infinite":
            c = correlator_infinite_T(params, t)
        else:
            c = correlator_finite_T(params, t, form)
        yield (t, c.real, c.imag, abs(c), math.atan2(c.imag, c.real))
