"""Time integration of i u_t + Lap u - V u + (I_gamma*|u|^p)|u|^{p-2} u = 0.

Strang splitting: a half-step of the local phase rotation
u <- u * exp(i (dt/2) [(I_gamma*|u|^p)|u|^{p-2} - V]), a full linear step
by sine-transform diagonalization of the Laplacian acting on v = r u,
then the phase half-step recomputed.  The phase flow preserves |u|
pointwise (the convolution depends only on |u|), so that substep is
exact, and the orthonormal DST makes the linear substep unitary: discrete
mass is conserved to round-off whenever the sponge is off.

The optional sponge multiplies u by exp(-dt sigma(r)) each step,
sigma(r) = strength ((r - start)/(r_max - start))^power beyond the start
radius, and the absorbed mass is accumulated as exported_mass so the
interior budget M + exported stays constant.
"""

import warnings
from dataclasses import dataclass, field as dfield

import numpy as np
import scipy.fft as sfft

from .exponents import ModelParams, scattering_pairs
from .grid import (RadialField, RadialGrid, grad_norm_sq_spectral, l2_norm_sq,
                   lp_norm, mass_in_ball)
from .morawetz import (DiagnosticsSeries, MorawetzWeight, morawetz_z,
                       morawetz_zpp, quadratic_weight, radial_cutoff)
from .potentials import PotentialSpec, energy as energy_triple
from .riesz import RieszKernel, potential_energy


class EvolutionBlowup(RuntimeError):
    def __init__(self, t):
        super().__init__(f"non-finite field detected at t = {t}")
        self.t = t


@dataclass
class SpongeConfig:
    enabled: bool = False
    start: float = 25.0
    strength: float = 5.0
    power: float = 4.0


@dataclass
class EvolveConfig:
    dt: float = 1e-3
    t_end: float = 5.0
    sample_every: int = 50
    scheme: str = "strang"            # strang | strang-linear-first | lie
    sponge: SpongeConfig = dfield(default_factory=SpongeConfig)
    linear_only: bool = False         # drop the nonlinear term (free/linear mode)
    store_fields: bool = False        # keep field snapshots at sample times
    weights: tuple = ()               # extra MorawetzWeight chains to record
    ball_radii: tuple = (10.0,)       # mass_in_ball / eta-mass radii
    chi_radii: tuple = ()             # P(chi_R u) radii for Morawetz averages
    track_zpp: bool = True

    def __post_init__(self):
        if self.dt <= 0 or self.t_end < 0:
            raise ValueError("dt > 0 and t_end >= 0 required")
        if self.scheme not in ("strang", "strang-linear-first", "lie"):
            raise ValueError("scheme must be strang, strang-linear-first, or lie")
        if self.sample_every < 1:
            raise ValueError("sample_every >= 1")


@dataclass
class Trajectory:
    times: np.ndarray
    diagnostics: DiagnosticsSeries
    fields: list | None
    final: RadialField
    boundary_warning: bool = False


class Stepper:
    """Holds the precomputed linear propagator and sponge for one setup."""

    def __init__(self, grid: RadialGrid, V: PotentialSpec, kern: RieszKernel,
                 params: ModelParams, dt: float, sponge: SpongeConfig | None = None,
                 linear_only: bool = False):
        self.grid = grid
        self.V = V
        self.kern = kern
        self.params = params
        self.dt = dt
        self.linear_only = linear_only
        self.phase_lin = np.exp(-1j * grid.wavenumbers**2 * dt)
        self.phase_lin_half = np.exp(-0.5j * grid.wavenumbers**2 * dt)
        self.Vr = np.zeros(grid.n) if V.is_zero() else np.asarray(V(grid.nodes), float)
        if sponge is not None and sponge.enabled:
            r = grid.nodes
            ramp = np.clip((r - sponge.start) / (grid.r_max - sponge.start),
                           0.0, None)
            self.damp = np.exp(-dt * sponge.strength * ramp**sponge.power)
        else:
            self.damp = None

    def _phase(self, u, half):
        if self.linear_only:
            wloc = -self.Vr
        else:
            g = np.abs(u) ** self.params.p
            wloc = self.kern.apply(g) * np.abs(u) ** (self.params.p - 2) - self.Vr
        return u * np.exp(1j * (self.dt * (0.5 if half else 1.0)) * wloc)

    def _linear(self, u, half=False):
        v = self.grid.nodes * u
        c = sfft.dst(v, type=1, norm="ortho")
        ph = self.phase_lin_half if half else self.phase_lin
        v = sfft.dst(ph * c, type=1, norm="ortho")
        return v / self.grid.nodes

    def step_values(self, u):
        """Strang step, local phase on the outside (the documented default)."""
        u = self._phase(u, half=True)
        u = self._linear(u)
        u = self._phase(u, half=True)
        return u

    def step_values_linear_first(self, u):
        """Strang step with the linear half-steps outside; same order and
        exact mass conservation, measurably smaller error constant on the
        energy for this nonlinearity."""
        u = self._linear(u, half=True)
        u = self._phase(u, half=False)
        u = self._linear(u, half=True)
        return u

    def step_values_lie(self, u):
        u = self._phase(u, half=False)
        return self._linear(u)


def step(u: RadialField, V: PotentialSpec, kern: RieszKernel,
         params: ModelParams, dt: float, linear_only=False) -> RadialField:
    """One Strang step; convenience wrapper building a throwaway Stepper."""
    st = Stepper(u.grid, V, kern, params, dt, linear_only=linear_only)
    out = st.step_values(u.values)
    if not np.all(np.isfinite(out.view(float))):
        raise EvolutionBlowup(dt)
    return RadialField(u.grid, out)


def evolve(u0: RadialField, V: PotentialSpec, kern: RieszKernel,
           params: ModelParams, cfg: EvolveConfig) -> Trajectory:
    """Run the splitting integrator, sampling diagnostics every sample_every steps."""
    grid = u0.grid
    st = Stepper(grid, V, kern, params, cfg.dt,
                 sponge=cfg.sponge, linear_only=cfg.linear_only)
    try:
        es = scattering_pairs(params)
        rbar, sigma_c = es.r_bar, es.sigma_c
    except ValueError:
        rbar, sigma_c = None, None

    weights = list(cfg.weights) if cfg.weights else [quadratic_weight(grid)]
    eta = {R: radial_cutoff(grid, R) for R in cfg.ball_radii}
    chi = {R: radial_cutoff(grid, R) for R in cfg.chi_radii}

    n_steps = int(round(cfg.t_end / cfg.dt))
    rec = {k: [] for k in ("t", "M", "E", "E0", "P", "grad_sq", "lambda_sq",
                           "exported", "track", "lr")}
    chains = {w.label(): ([], [], []) for w in weights}
    mball = {R: [] for R in cfg.ball_radii}
    emass = {R: [] for R in cfg.ball_radii}
    pchi = {R: [] for R in cfg.chi_radii}
    fields = [] if cfg.store_fields else None

    u = u0.values.copy()
    exported = 0.0

    def sample(tcur):
        f = RadialField(grid, u)
        E, E0, lam = energy_triple(f, V, kern, params.p)
        P = potential_energy(kern, f, params.p)
        M = l2_norm_sq(f)
        rec["t"].append(tcur)
        rec["M"].append(M)
        rec["E"].append(E)
        rec["E0"].append(E0)
        rec["P"].append(P)
        gsq = grad_norm_sq_spectral(f)
        rec["grad_sq"].append(gsq)
        rec["lambda_sq"].append(lam)
        rec["exported"].append(exported)
        rec["track"].append(P * M**sigma_c if sigma_c is not None else np.nan)
        rec["lr"].append(lp_norm(f, rbar) if rbar is not None else np.nan)
        for wgt in weights:
            z, zp = morawetz_z(f, wgt)
            zpp = morawetz_zpp(f, wgt, V, kern, params) if cfg.track_zpp else np.nan
            c = chains[wgt.label()]
            c[0].append(z)
            c[1].append(zp)
            c[2].append(zpp)
        for R in cfg.ball_radii:
            mball[R].append(mass_in_ball(f, R))
            emass[R].append(float(np.sum(grid.weights * eta[R] * np.abs(u) ** 2)))
        for R in cfg.chi_radii:
            pchi[R].append(potential_energy(kern, RadialField(grid, chi[R] * u),
                                            params.p))
        if fields is not None:
            fields.append(f.copy())

    stepfn = {"strang": st.step_values,
              "strang-linear-first": st.step_values_linear_first,
              "lie": st.step_values_lie}[cfg.scheme]
    sample(0.0)
    for k in range(1, n_steps + 1):
        u = stepfn(u)
        if st.damp is not None:
            m_before = float(np.sum(grid.weights * np.abs(u) ** 2))
            u = u * st.damp
            m_after = float(np.sum(grid.weights * np.abs(u) ** 2))
            exported += m_before - m_after
        if not np.all(np.isfinite(u.view(float))):
            raise EvolutionBlowup(k * cfg.dt)
        if k % cfg.sample_every == 0 or k == n_steps:
            sample(k * cfg.dt)

    fin = RadialField(grid, u)
    bwarn = False
    if st.damp is None:
        tail = float(np.max(np.abs(u[int(0.95 * grid.n):])))
        if tail > 1e-6 * max(float(np.max(np.abs(u))), 1e-300):
            bwarn = True
            warnings.warn("boundary amplitude exceeds 1e-6 of max|u| with sponge off")

    label0 = weights[0].label()
    series = DiagnosticsSeries(
        t=np.array(rec["t"]), M=np.array(rec["M"]), E=np.array(rec["E"]),
        E0=np.array(rec["E0"]), P=np.array(rec["P"]),
        grad_sq=np.array(rec["grad_sq"]), lambda_sq=np.array(rec["lambda_sq"]),
        z=np.array(chains[label0][0]), zp=np.array(chains[label0][1]),
        zpp=np.array(chains[label0][2]),
        mass_in_ball={R: np.array(v) for R, v in mball.items()},
        eta_mass={R: np.array(v) for R, v in emass.items()},
        p_chi={R: np.array(v) for R, v in pchi.items()},
        exported_mass=np.array(rec["exported"]),
        threshold_track=np.array(rec["track"]),
        lr_norm_rbar=np.array(rec["lr"]),
        extra_chains={lbl: tuple(np.array(x) for x in c) for lbl, c in chains.items()},
    )
    return Trajectory(times=series.t, diagnostics=series, fields=fields,
                      final=fin, boundary_warning=bwarn)


def conservation_report(traj: Trajectory) -> dict:
    """Max relative drift of M and E over the pre-export window."""
    d = traj.diagnostics
    if len(d.t) < 2:
        raise ValueError("need at least two samples")
    pre = d.exported_mass <= 1e-12 * max(d.M[0], 1e-300)
    M = d.M[pre]
    E = d.E[pre]
    mdrift = float(np.max(np.abs(M - M[0])) / abs(M[0])) if len(M) else np.nan
    escale = max(abs(E[0]), 1e-300) if len(E) else 1.0
    edrift = float(np.max(np.abs(E - E[0])) / escale) if len(E) else np.nan
    budget = d.M + d.exported_mass
    return {
        "mass_drift": mdrift,
        "energy_drift": edrift,
        "samples_pre_export": int(np.sum(pre)),
        "mass_budget_drift": float(np.max(np.abs(budget - budget[0])) / budget[0]),
        "lambda_sq_series": d.lambda_sq,
    }
