"""Radial potentials V(r), Kato-norm machinery, and hypothesis audits.

Shipped kinds: zero, gaussian, soft inverse power (amplitude/(r^power +
core^power)-style with a smooth core), and tabulated values.  Positive
amplitude means repulsive (V >= 0).  Audits check the standing
assumptions: Kato + L^{3/2} membership, the negative-part Kato smallness
against 4*pi, V >= 0, x.grad V <= 0 pointwise, and x.grad V in L^r for
requested exponents.  Failures are reported, never raised.
"""

from dataclasses import dataclass, field as dfield

import numpy as np

from .grid import FOUR_PI, RadialField, RadialGrid, grad_norm_sq_spectral
from .riesz import RieszKernel, potential_energy

SIGN_TOL = 1e-12


@dataclass(frozen=True)
class PotentialSpec:
    """Radial potential with analytic derivative where the kind allows."""

    kind: str                      # zero | gaussian | softpower | table
    amplitude: float = 0.0
    width: float = 1.0             # gaussian scale
    power: float = 2.0             # softpower decay exponent
    core: float = 1.0              # softpower core radius
    radii: np.ndarray | None = None    # table kind
    values: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("zero", "gaussian", "softpower", "table"):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.kind == "gaussian" and self.width <= 0:
            raise ValueError("gaussian width must be positive")
        if self.kind == "softpower" and (self.power <= 0 or self.core <= 0):
            raise ValueError("softpower needs power > 0 and core > 0")
        if self.kind == "table":
            if self.radii is None or self.values is None:
                raise ValueError("table kind needs radii and values")
            r = np.asarray(self.radii, float)
            if np.any(np.diff(r) <= 0):
                raise ValueError("table radii must be strictly increasing")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "zero":
            out = np.zeros_like(r)
        elif self.kind == "gaussian":
            out = self.amplitude * np.exp(-((r / self.width) ** 2))
        elif self.kind == "softpower":
            out = self.amplitude * self.core**self.power / (r**self.power + self.core**self.power)
        else:
            out = np.interp(r, self.radii, self.values)
        return out if out.shape else float(out)

    def dV(self, r):
        """Radial derivative; analytic except for the table kind."""
        r = np.asarray(r, dtype=float)
        if self.kind == "zero":
            out = np.zeros_like(r)
        elif self.kind == "gaussian":
            out = self.amplitude * np.exp(-((r / self.width) ** 2)) * (-2.0 * r / self.width**2)
        elif self.kind == "softpower":
            denom = (r**self.power + self.core**self.power) ** 2
            out = -self.amplitude * self.core**self.power * self.power * r ** (self.power - 1) / denom
        else:
            out = np.interp(r, 0.5 * (self.radii[1:] + self.radii[:-1]),
                            np.diff(self.values) / np.diff(self.radii))
        return out if out.shape else float(out)

    def is_zero(self):
        return self.kind == "zero" or (self.kind != "table" and self.amplitude == 0.0)


def zero_potential():
    return PotentialSpec("zero")


def gaussian_potential(amplitude, width=1.0):
    return PotentialSpec("gaussian", amplitude=amplitude, width=width)


def softpower_potential(amplitude, power, core):
    return PotentialSpec("softpower", amplitude=amplitude, power=power, core=core)


def table_potential(radii, values):
    return PotentialSpec("table", radii=np.asarray(radii, float),
                         values=np.asarray(values, float))


# ---------------------------------------------------------------------------
# Kato norm: sup_x int |V(y)| / |x-y| dy.  By radial symmetry the sup runs
# over probe radii; each inner integral is Newton's theorem:
#   (4*pi/rho) int_0^rho s^2 |V| ds + 4*pi int_rho^inf s |V| ds,
# with the rho = 0 limit 4*pi int s |V| ds.

def _kato_profile(absV, grid: RadialGrid, probe_idx):
    r = grid.nodes
    dr = grid.dr
    inner = np.concatenate(([0.0], np.cumsum(r**2 * absV * dr)))
    outer_rev = np.concatenate((np.cumsum((r * absV * dr)[::-1])[::-1], [0.0]))
    vals = np.empty(len(probe_idx) + 1)
    vals[0] = FOUR_PI * outer_rev[0]  # center probe
    for k, i in enumerate(probe_idx):
        rho = r[i]
        vals[k + 1] = FOUR_PI * (inner[i + 1] / rho + outer_rev[i + 1])
    return vals


def _probe_indices(grid: RadialGrid, n_probes=64):
    # log-spaced probe radii in (0, r_max/2]
    targets = np.geomspace(grid.dr, grid.r_max / 2, n_probes)
    idx = np.unique(np.clip(np.round(targets / grid.dr).astype(int) - 1, 0, grid.n - 1))
    return idx


def kato_norm(V: PotentialSpec, grid: RadialGrid, n_probes=64, negative_part=False):
    """Kato norm of V (or of V_- = min(V,0)) on the grid.

    Returns (norm, probe_radius_at_max).  Warns through the audit if the
    tail |V| r^2 has not decayed at r_max.
    """
    vals = V(grid.nodes)
    if negative_part:
        vals = np.minimum(vals, 0.0)
    absV = np.abs(vals)
    idx = _probe_indices(grid, n_probes)
    prof = _kato_profile(absV, grid, idx)
    k = int(np.argmax(prof))
    best_rho = 0.0 if k == 0 else float(grid.nodes[idx[k - 1]])
    return float(prof[k]), best_rho


@dataclass
class PotentialAudit:
    kato_norm: float
    kato_norm_negative_part: float
    kato_max_probe: float
    l32_norm: float
    nonneg: bool
    radial_derivative_sign: bool       # x.grad V <= 0 on the grid
    x_grad_V_lr_norms: dict
    negative_part_below_4pi: bool
    tail_decayed: bool
    checks: dict = dfield(default_factory=dict)

    def theorem_hypotheses_pass(self):
        """V >= 0, x.grad V <= 0, x.grad V in L^r (finite norms)."""
        finite = all(np.isfinite(v) for v in self.x_grad_V_lr_norms.values())
        return self.nonneg and self.radial_derivative_sign and finite


def audit_hypotheses(V: PotentialSpec, grid: RadialGrid, r_exponents=(1.5, 2.0, np.inf)):
    r = grid.nodes
    vals = np.asarray(V(r), float)
    dv = np.asarray(V.dV(r), float)
    xgv = r * dv

    kn, probe = kato_norm(V, grid)
    knm, _ = kato_norm(V, grid, negative_part=True)
    l32 = float(np.sum(grid.weights * np.abs(vals) ** 1.5) ** (2.0 / 3.0))
    scale = max(np.max(np.abs(vals)), 1e-300)
    nonneg = bool(np.all(vals >= -SIGN_TOL * scale))
    dsign = bool(np.all(xgv <= SIGN_TOL * max(np.max(np.abs(xgv)), 1e-300)))
    norms = {}
    for e in r_exponents:
        if np.isinf(e):
            norms[e] = float(np.max(np.abs(xgv)))
        else:
            norms[e] = float(np.sum(grid.weights * np.abs(xgv) ** e) ** (1.0 / e))
    tail = bool(np.abs(vals[-1]) * r[-1] ** 2 <= 1e-6 * max(scale, 1.0))
    audit = PotentialAudit(
        kato_norm=kn,
        kato_norm_negative_part=knm,
        kato_max_probe=probe,
        l32_norm=l32,
        nonneg=nonneg,
        radial_derivative_sign=dsign,
        x_grad_V_lr_norms=norms,
        negative_part_below_4pi=bool(knm < FOUR_PI),
        tail_decayed=tail,
    )
    audit.checks = {
        "kato_finite": bool(np.isfinite(kn)),
        "l32_finite": bool(np.isfinite(l32)),
        "negative_part_below_4pi": audit.negative_part_below_4pi,
        "nonneg": nonneg,
        "x_grad_V_nonpositive": dsign,
        "x_grad_V_in_Lr": all(np.isfinite(v) for v in norms.values()),
        "tail_decayed": tail,
    }
    return audit


# ---------------------------------------------------------------------------
# V-dependent energies

def energy(u: RadialField, V: PotentialSpec, kern: RieszKernel, p: float):
    """(E, E0, lambda_norm_sq) for the Hamiltonian with potential V.

    E = E0 + (1/2) int V |u|^2,  E0 = (1/2)|grad u|^2 - P(u)/(2p),
    lambda_norm_sq = |grad u|^2 + int V |u|^2.
    """
    gsq = grad_norm_sq_spectral(u)
    P = potential_energy(kern, u, p)
    if V.is_zero():
        vterm = 0.0
    else:
        vterm = float(np.sum(u.grid.weights * V(u.grid.nodes) * np.abs(u.values) ** 2))
    E0 = 0.5 * gsq - P / (2.0 * p)
    E = E0 + 0.5 * vterm
    lam = gsq + vterm
    return E, E0, lam
