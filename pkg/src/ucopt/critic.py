"""Online value-function critic and its weight-tuning law.

The critic approximates the optimal value as ``V(e) ~ w . sigma(e)`` with an
even-polynomial basis, turns the gradient estimate into a control through the
optimal law, and tunes ``w`` online from two signals: a Lyapunov-gated
stabilizing term and a normalized descent on the approximate Hamiltonian.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import CriticDivergenceError
from .optctl import CostSpec, scalar_hjb_oracle

__all__ = [
    "BasisKind",
    "BasisSpec",
    "ValueCritic",
    "CriticStepLog",
    "basis_eval",
    "value_estimate",
    "control_estimate",
    "approx_hamiltonian",
    "omega",
    "lyap_grad",
    "theta_indicator",
    "weight_update_rate",
    "critic_step",
    "oracle_projection",
]


class BasisKind(str, enum.Enum):
    EVEN_POLYNOMIAL = "even_polynomial"


@dataclass(frozen=True)
class BasisSpec:
    """Even powers ``x**2, x**4, ..., x**(2n)`` of ``x = e/scale``."""

    kind: BasisKind = BasisKind.EVEN_POLYNOMIAL
    n_neurons: int = 2
    scale: float = 1.0  # V

    def __post_init__(self):
        object.__setattr__(self, "kind", BasisKind(self.kind))
        if self.n_neurons < 1:
            raise ValueError(f"n_neurons must be >= 1, got {self.n_neurons}")
        if not self.scale > 0:
            raise ValueError(f"scale must be > 0, got {self.scale}")

    @cached_property
    def _powers(self):
        return 2.0 * np.arange(1, self.n_neurons + 1)

    @cached_property
    def _grad_coef(self):
        return self._powers / self.scale


@dataclass
class ValueCritic:
    basis: BasisSpec = field(default_factory=BasisSpec)
    w_hat: np.ndarray = None
    alpha1: float = 2.0
    alpha2: float = 0.24

    def __post_init__(self):
        if self.w_hat is None:
            self.w_hat = np.zeros(self.basis.n_neurons)
        else:
            self.w_hat = np.array(self.w_hat, dtype=float)
        if self.w_hat.shape != (self.basis.n_neurons,):
            raise ValueError(
                f"w_hat has shape {self.w_hat.shape}, basis has {self.basis.n_neurons} neurons"
            )
        if not (self.alpha1 > 0 and self.alpha2 > 0):
            raise ValueError(f"alpha1 and alpha2 must be > 0, got {self.alpha1}, {self.alpha2}")


@dataclass(slots=True)
class CriticStepLog:
    sigma: np.ndarray
    grad_sigma: np.ndarray
    v_hat: float
    v_e_hat: float  # grad_sigma . w, the critic's value-gradient estimate
    u_hat: float
    h_hat: float
    omega: np.ndarray
    theta: int
    w_dot_norm: float


def basis_eval(basis: BasisSpec, e: float):
    """Return ``(sigma, grad_sigma)`` at error ``e``; ``grad_sigma`` is d sigma/d e."""
    x = e / basis.scale
    odd = x ** (basis._powers - 1.0)
    return odd * x, basis._grad_coef * odd


def value_estimate(critic: ValueCritic, e: float) -> float:
    sigma, _ = basis_eval(critic.basis, e)
    return float(critic.w_hat @ sigma)


def _v_e_hat(critic, grad):
    return float(grad @ critic.w_hat)


def control_estimate(critic: ValueCritic, spec: CostSpec, g_val: float, e: float) -> float:
    """Critic control ``-g (grad_sigma . w) / (2r)``, before current saturation."""
    _, grad = basis_eval(critic.basis, e)
    return -0.5 / spec.r_weight * g_val * _v_e_hat(critic, grad)


def _h_hat(spec, e, v, k):
    # both quadratic terms written through v = grad_sigma . w
    return spec.q_weight * e * e - 0.25 * v * v * k + 0.25 * v * v + spec.d_max**2


def approx_hamiltonian(critic: ValueCritic, spec: CostSpec, g_val: float, e: float) -> float:
    _, grad = basis_eval(critic.basis, e)
    k = g_val * g_val / spec.r_weight
    return _h_hat(spec, e, _v_e_hat(critic, grad), k)


def omega(critic: ValueCritic, spec: CostSpec, g_val: float, e: float) -> np.ndarray:
    _, grad = basis_eval(critic.basis, e)
    k = g_val * g_val / spec.r_weight
    return -0.5 * k * grad * _v_e_hat(critic, grad)


def lyap_grad(e: float) -> float:
    """Gradient of the Lyapunov candidate ``|e|**5 / 5``."""
    return e * abs(e) ** 3


def theta_indicator(e: float, e_dot: float) -> int:
    """0 while the Lyapunov candidate is strictly decreasing, else 1."""
    return 0 if lyap_grad(e) * e_dot < 0.0 else 1


def _update(critic, spec, g_val, e, e_dot):
    """Shared kernel of the tuning law; returns every intermediate.

    omega is parallel to grad_sigma, so both terms of the law collapse to one
    scalar multiple of grad_sigma.
    """
    sigma, grad = basis_eval(critic.basis, e)
    k = g_val * g_val / spec.r_weight
    v = float(grad @ critic.w_hat)
    h = _h_hat(spec, e, v, k)
    om_coef = -0.5 * k * v
    om_sq = om_coef * om_coef * float(grad @ grad)
    theta = theta_indicator(e, e_dot)
    coef = 0.5 * critic.alpha1 * theta * k * lyap_grad(e) - critic.alpha2 * h * om_coef / (1.0 + om_sq) ** 2
    return sigma, grad, v, h, om_coef, theta, coef


def weight_update_rate(
    critic: ValueCritic, spec: CostSpec, g_val: float, e: float, e_dot: float
) -> np.ndarray:
    """Time derivative of the critic weights at ``(e, w_hat)``.

    ``(a1/2) theta (g^2/r) grad_sigma J1'(e) - a2 omega h / (1 + omega.omega)^2``
    """
    _, grad, *_, coef = _update(critic, spec, g_val, e, e_dot)
    w_dot = coef * grad
    if not np.isfinite(w_dot).all():
        raise CriticDivergenceError(f"non-finite weight rate at e={e:.6g}")
    return w_dot


def critic_step(critic: ValueCritic, spec: CostSpec, g_val: float, e: float, e_dot: float, dt: float):
    """Produce the control for this sample, then Euler-advance the weights.

    Mutates ``critic.w_hat``. Returns ``(u, CriticStepLog)``; the log holds
    quantities evaluated at the pre-update weights.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    sigma, grad, v, h, om_coef, theta, coef = _update(critic, spec, g_val, e, e_dot)
    u = -0.5 / spec.r_weight * g_val * v
    w_dot_norm = abs(coef) * math.sqrt(float(grad @ grad))
    if not (math.isfinite(u) and math.isfinite(w_dot_norm)):
        raise CriticDivergenceError(f"critic produced non-finite output at e={e:.6g}")
    log = CriticStepLog(
        sigma=sigma,
        grad_sigma=grad,
        v_hat=float(critic.w_hat @ sigma),
        v_e_hat=v,
        u_hat=u,
        h_hat=h,
        omega=om_coef * grad,
        theta=theta,
        w_dot_norm=w_dot_norm,
    )
    critic.w_hat = critic.w_hat + (dt * coef) * grad
    return u, log


def oracle_projection(
    basis: BasisSpec,
    spec: CostSpec,
    g_val: float,
    e_range: tuple[float, float] = (-1.0, 1.0),
    n_points: int = 401,
):
    """Least-squares weights whose gradient best matches the oracle gradient.

    Returns ``(w, rms)`` where ``rms`` is the fit residual on the sample grid,
    i.e. the basis approximation error for the value gradient.
    """
    es = np.linspace(e_range[0], e_range[1], n_points)
    G = np.array([basis_eval(basis, e)[1] for e in es])
    target = scalar_hjb_oracle(spec, es, g_val)
    w, *_ = np.linalg.lstsq(G, target, rcond=None)
    rms = float(np.sqrt(np.mean((G @ w - target) ** 2)))
    return w, rms
