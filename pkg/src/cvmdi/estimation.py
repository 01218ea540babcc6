"""Maximum-likelihood channel estimation from relay broadcast records.

The relay publishes one (q, p) outcome per use while Alice and Bob keep
their own modulation records.  Transmissivities are estimated from the
modulation-relay covariances, quadrature by quadrature, and combined by
inverse-variance weighting.  Excess noise is the mean squared residual
after subtracting the reconstructed signal part, minus the shot noise.
Worst-case bounds follow the z-sigma confidence-interval rule: lower
transmissivities, upper excess noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .channel import NoiseVars
from .errors import ConfigurationError, DatasetError, DomainError

CSV_HEADER = "a_q,a_p,b_q,b_p,r_q,r_p"

_SQRT_HALF = math.sqrt(0.5)
_FIELDS = ("a_q", "a_p", "b_q", "b_p", "r_q", "r_p")
# Floor for plug-in total noise so that degenerate (signal-free) records do
# not poison the variance formulas with a non-positive variance.
_MIN_TOTAL = 1e-12


@dataclass(frozen=True, eq=False)
class QuadratureDataset:
    """Per-use modulation and relay records, all of one common length."""

    a_q: np.ndarray
    a_p: np.ndarray
    b_q: np.ndarray
    b_p: np.ndarray
    r_q: np.ndarray
    r_p: np.ndarray

    def __post_init__(self):
        lengths = set()
        for name in _FIELDS:
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim != 1:
                raise DatasetError(f"column {name} must be one-dimensional")
            object.__setattr__(self, name, arr)
            lengths.add(arr.shape[0])
        if len(lengths) != 1:
            raise DatasetError(f"columns have mismatched lengths {sorted(lengths)}")
        if self.m < 2:
            raise DatasetError(f"need at least 2 samples per column, got {self.m}")

    @property
    def m(self) -> int:
        return self.a_q.shape[0]

    def to_csv(self, path) -> None:
        """Write the six columns under the canonical header, full precision."""
        data = np.column_stack([getattr(self, name) for name in _FIELDS])
        np.savetxt(path, data, delimiter=",", header=CSV_HEADER, comments="",
                   fmt="%.17g")

    @classmethod
    def from_csv(cls, path) -> "QuadratureDataset":
        with open(path) as fh:
            header = fh.readline().strip()
            if header != CSV_HEADER:
                raise DatasetError(
                    f"unexpected header {header!r}, want {CSV_HEADER!r}")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        if data.shape[1] != len(_FIELDS):
            raise DatasetError(f"expected {len(_FIELDS)} columns, got {data.shape[1]}")
        return cls(*(data[:, i] for i in range(len(_FIELDS))))


def _check_v_m(v_m: float) -> None:
    if v_m <= 0.0:
        raise ConfigurationError(
            f"modulation variance must be positive for estimation, got {v_m}")


def estimate_covariances(d: QuadratureDataset) -> tuple[float, float, float, float]:
    """Empirical mean products between modulation and relay records.

    Returns (alice-q, alice-p, bob-q, bob-p).  Under the relay sign
    convention Alice's q enters the q output with a minus sign, so the
    alice-q covariance comes out negative; the transmissivity estimator
    squares it away.
    """
    m = d.m
    return (float(d.a_q @ d.r_q) / m, float(d.a_p @ d.r_p) / m,
            float(d.b_q @ d.r_q) / m, float(d.b_p @ d.r_p) / m)


def transmissivities_per_quadrature(
        d: QuadratureDataset, v_m: float) -> tuple[float, float, float, float]:
    """Per-quadrature transmissivity estimates 2 C^2 / v_m^2 for both links."""
    _check_v_m(v_m)
    c_aq, c_ap, c_bq, c_bp = estimate_covariances(d)
    scale = 2.0 / (v_m * v_m)
    return (scale * c_aq * c_aq, scale * c_ap * c_ap,
            scale * c_bq * c_bq, scale * c_bp * c_bp)


def estimate_transmissivities(d: QuadratureDataset, v_m: float) -> tuple[float, float]:
    """Combined transmissivity estimates for both links.

    The per-quadrature estimates are averaged with inverse-variance
    weights.  The weights use the analytic variance formulas evaluated at
    plug-in values (preliminary equal-weight estimates plus the
    residual-based noise estimate); they only deviate from 1/2 when the
    two quadratures see different noise.
    """
    _check_v_m(v_m)
    ta_q, ta_p, tb_q, tb_p = transmissivities_per_quadrature(d, v_m)
    ta0 = 0.5 * (ta_q + ta_p)
    tb0 = 0.5 * (tb_q + tb_p)
    noise = _plugin_noise(*estimate_excess_noise(d, ta0, tb0))
    tau_a = _combine(ta_q, ta_p, transmissivity_variance(ta0, tb0, v_m, noise, d.m))
    tau_b = _combine(tb_q, tb_p, transmissivity_variance(tb0, ta0, v_m, noise, d.m))
    return tau_a, tau_b


def _combine(est_q: float, est_p: float,
             variances: tuple[float, float, float]) -> float:
    var_q, var_p, _ = variances
    den = var_q + var_p
    if den == 0.0:
        return 0.5 * (est_q + est_p)
    return (est_q * var_p + est_p * var_q) / den


def estimate_excess_noise(d: QuadratureDataset, tau_a_hat: float,
                          tau_b_hat: float) -> tuple[float, float]:
    """Residual-based excess-noise estimates for both quadratures.

    The transmissivity estimates are clamped to [0, 1] before the square
    roots so that noisy small-sample runs stay real.  Estimates may be
    negative; an exactly signal-free record bottoms out at -1, the
    residual-free floor left by the shot-noise subtraction.
    """
    root_a = math.sqrt(min(max(tau_a_hat, 0.0), 1.0))
    root_b = math.sqrt(min(max(tau_b_hat, 0.0), 1.0))
    res_q = d.r_q - _SQRT_HALF * (root_b * d.b_q - root_a * d.a_q)
    res_p = d.r_p - _SQRT_HALF * (root_b * d.b_p + root_a * d.a_p)
    m = d.m
    return float(res_q @ res_q) / m - 1.0, float(res_p @ res_p) / m - 1.0


def transmissivity_variance(tau_a: float, tau_b: float, v_m: float,
                            noise: NoiseVars, m: int) -> tuple[float, float, float]:
    """Analytic estimator variances (q, p, combined) for the first link.

    Var = (8 tau_a / m)(tau_a + tau_b/2)[1 + total/((tau_a + tau_b/2) v_m)]
    per quadrature; the combined value is the optimal inverse-variance mix
    of the two.  Swap the transmissivity arguments for the second link.
    """
    if m < 1:
        raise DomainError(f"sample count must be >= 1, got {m}")
    _check_v_m(v_m)
    if tau_a == 0.0:
        return 0.0, 0.0, 0.0
    weight = tau_a + 0.5 * tau_b
    base = 8.0 * tau_a * weight / m
    var_q = base * (1.0 + noise.total_q / (weight * v_m))
    var_p = base * (1.0 + noise.total_p / (weight * v_m))
    return var_q, var_p, var_q * var_p / (var_q + var_p)


def excess_noise_variance(noise: NoiseVars, m: int) -> tuple[float, float]:
    """Analytic variances (2/m) * total^2 of the excess-noise estimators."""
    if m < 1:
        raise DomainError(f"sample count must be >= 1, got {m}")
    return 2.0 * noise.total_q ** 2 / m, 2.0 * noise.total_p ** 2 / m


@dataclass(frozen=True)
class EstimationReport:
    """Point estimates, their spreads, and (once filled) worst-case bounds."""

    tau_a: float
    tau_b: float
    tau_a_std: float
    tau_b_std: float
    excess_q: float
    excess_p: float
    excess_q_std: float
    excess_p_std: float
    z: float = 6.5
    tau_a_low: float | None = None
    tau_b_low: float | None = None
    excess_q_up: float | None = None
    excess_p_up: float | None = None

    def __post_init__(self):
        stds = (self.tau_a_std, self.tau_b_std, self.excess_q_std, self.excess_p_std)
        if min(stds) < 0.0:
            raise DomainError("standard deviations must be >= 0")
        if self.bounded:
            assert self.tau_a_low <= self.tau_a and self.tau_b_low <= self.tau_b
            assert self.excess_q_up >= self.excess_q and self.excess_p_up >= self.excess_p

    @property
    def bounded(self) -> bool:
        return self.tau_a_low is not None


def worst_case(report: EstimationReport, z: float | None = None) -> EstimationReport:
    """Fill the pessimistic bounds: lower transmissivities, upper noise.

    tau_low = clip(tau - z*std, 0, 1) and excess_up = excess + z*std; the
    default z = 6.5 keeps the per-parameter failure probability at the
    1e-10 level for Gaussian spreads.
    """
    z = report.z if z is None else float(z)
    if z < 0.0:
        raise DomainError(f"confidence multiplier must be >= 0, got {z}")
    return replace(
        report,
        z=z,
        tau_a_low=min(max(report.tau_a - z * report.tau_a_std, 0.0), 1.0),
        tau_b_low=min(max(report.tau_b - z * report.tau_b_std, 0.0), 1.0),
        excess_q_up=report.excess_q + z * report.excess_q_std,
        excess_p_up=report.excess_p + z * report.excess_p_std,
    )


def _plugin_noise(excess_q: float, excess_p: float) -> NoiseVars:
    """NoiseVars for plug-in variance formulas, flooring pathological
    below-shot-noise estimates instead of rejecting them."""
    floor = _MIN_TOTAL - 1.0
    return NoiseVars(max(excess_q, floor), max(excess_p, floor))


def estimate_channel(d: QuadratureDataset, v_m: float, z: float = 6.5) -> EstimationReport:
    """Full protocol-mode pipeline: estimates, plug-in spreads, bounds.

    The variance formulas are evaluated at the estimated parameters (the
    true ones are unknown at run time), which is asymptotically equivalent.
    """
    tau_a, tau_b = estimate_transmissivities(d, v_m)
    excess_q, excess_p = estimate_excess_noise(d, tau_a, tau_b)
    noise = _plugin_noise(excess_q, excess_p)
    _, _, var_a = transmissivity_variance(tau_a, tau_b, v_m, noise, d.m)
    _, _, var_b = transmissivity_variance(tau_b, tau_a, v_m, noise, d.m)
    s_q_sq, s_p_sq = excess_noise_variance(noise, d.m)
    report = EstimationReport(
        tau_a, tau_b, math.sqrt(var_a), math.sqrt(var_b),
        excess_q, excess_p, math.sqrt(s_q_sq), math.sqrt(s_p_sq), z=z)
    return worst_case(report)


def report_from_parameters(tau_a: float, tau_b: float, noise: NoiseVars,
                           v_m: float, m: int, z: float = 6.5) -> EstimationReport:
    """Analysis-mode report: true values with analytic spreads and bounds.

    This is what a run over the given channel would report on average; it
    powers figure-style curves without simulating data.
    """
    _, _, var_a = transmissivity_variance(tau_a, tau_b, v_m, noise, m)
    _, _, var_b = transmissivity_variance(tau_b, tau_a, v_m, noise, m)
    s_q_sq, s_p_sq = excess_noise_variance(noise, m)
    report = EstimationReport(
        tau_a, tau_b, math.sqrt(var_a), math.sqrt(var_b),
        noise.excess_q, noise.excess_p, math.sqrt(s_q_sq), math.sqrt(s_p_sq), z=z)
    return worst_case(report)
