"""Implicit integration of the radial potential flow for a perturbation v.

With x = log(rho) the perturbed radial eigenvalue products become

    rho (phi + v_rho)                   = P + v_x
    rho (psi + v_rho + rho v_rhorho)    = S + v_xx

where P = rho phi_mod and S = rho psi_mod, so the flow for v reads

    v_t = log(1 + v_x/P) + log(1 + v_xx/S) - f_mod.

The grid is uniform in x on [rho_floor, delta^2].  Time stepping is
variable-step BDF2 (backward Euler on the first step) with Newton
iterations on the tridiagonal Jacobian; dt follows t so the cost grows
only logarithmically with the horizon.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import cumulative_trapezoid, solve_ivp
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded

from .exceptions import DomainError, FitError, PositivityError, StepFailure
from .geometry import MetricEigenvalues, RadialProfile, exceptional_area_coefficient
from .model import GluedModelSpec, ModelProfile, _model_jet, _phi_x_jet

log = logging.getLogger(__name__)

__all__ = [
    "FlowState",
    "SolverConfig",
    "EvolutionTrace",
    "GluedFlowModel",
    "BackgroundFlowModel",
    "ManufacturedProblem",
    "EvolvedProfile",
    "exp_decay_solution",
    "sample_times",
    "make_grid",
    "potential_flow_rhs",
    "q_remainder",
    "step",
    "evolve",
    "normalized_transform",
    "stability_check",
    "bilipschitz_to_model",
]


# ---------------------------------------------------------------------------
# Reference models: eigenvalues and forcing at a given time
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelSample:
    phi: np.ndarray
    psi: np.ndarray
    f: np.ndarray
    value: np.ndarray | None = None


class GluedFlowModel:
    """The glued model flow; ``zero_forcing`` drops f_mod (control runs)."""

    def __init__(self, spec: GluedModelSpec, zero_forcing=False):
        self.spec = spec
        self.zero_forcing = zero_forcing

    @property
    def b(self):
        return self.spec.b

    def sample(self, t, rho, with_value=False):
        jet = _model_jet(self.spec, t, rho, want_f=not self.zero_forcing)
        f = np.zeros_like(rho) if self.zero_forcing else jet.f
        return ModelSample(jet.d1, jet.psi, f, jet.value if with_value else None)

    def profile(self, t):
        return ModelProfile(self.spec, t)

    def describe(self):
        s = self.spec
        return {"model": "glued", "b": s.b, "a": s.a, "k": s.k, "delta": s.delta, "mode": s.mode,
                "zero_forcing": self.zero_forcing}


@dataclass(frozen=True)
class _BackgroundProfile(RadialProfile):
    spec: GluedModelSpec
    t: float

    def value(self, rho):
        return _phi_x_jet(self.spec, self.t, np.asarray(rho, dtype=float))[0]

    def d1(self, rho):
        return _phi_x_jet(self.spec, self.t, np.asarray(rho, dtype=float))[1]

    def d2(self, rho):
        return _phi_x_jet(self.spec, self.t, np.asarray(rho, dtype=float))[2]


class BackgroundFlowModel:
    """The pure orbifold background; its forcing is computed, not assumed."""

    b = None

    def __init__(self, mode="hyperbolic", delta=1.0, quartic_coeff=1.0 / 6.0):
        self.spec = GluedModelSpec(mode=mode, delta=delta, quartic_coeff=quartic_coeff)

    def sample(self, t, rho, with_value=False):
        val, d1, d2, dt = _phi_x_jet(self.spec, t, rho)
        psi = d1 + rho * d2
        f = dt - np.log(d1) - np.log(psi)
        return ModelSample(d1, psi, f, val if with_value else None)

    def profile(self, t):
        return _BackgroundProfile(self.spec, t)

    def describe(self):
        return {"model": "background", "mode": self.spec.mode, "delta": self.spec.delta}


class ManufacturedProblem:
    """Wraps a reference model with an exact solution ``v*`` imposed by forcing.

    ``exact(t, rho)`` returns (v, v_t, x-derivative, second x-derivative).
    The extra forcing makes ``v*`` solve the continuous equation, and the
    boundary values follow ``v*``.
    """

    def __init__(self, base, exact):
        self.base = base
        self.exact = exact
        self.b = None  # no exceptional curve in the manufactured setting

    def sample(self, t, rho, with_value=False):
        s = self.base.sample(t, rho, with_value)
        v, vt, vx, vxx = self.exact(t, rho)
        P, S = rho * s.phi, rho * s.psi
        # v_t = L(v) - f  holds for v* when  f = L(v*) - v*_t
        f = np.log1p(vx / P) + np.log1p(vxx / S) - vt
        return ModelSample(s.phi, s.psi, f, s.value)

    def boundary(self, t, rho):
        return self.exact(t, rho)[0]

    def profile(self, t):
        return self.base.profile(t)

    def describe(self):
        return {"model": "manufactured", "base": self.base.describe()}


def exp_decay_solution(t, rho):
    """v* = exp(-rho)/t with its t- and log-rho derivatives."""
    e = np.exp(-rho) / t
    vx = -rho * e
    vxx = (rho * rho - rho) * e
    return e, -e / t, vx, vxx


# ---------------------------------------------------------------------------
# State, configuration, trace
# ---------------------------------------------------------------------------

def make_grid(rho_floor, rho_max, nodes):
    if not 0 < rho_floor < rho_max:
        raise DomainError("need 0 < rho_floor < rho_max")
    if nodes < 8:
        raise DomainError("need at least 8 nodes")
    return np.exp(np.linspace(np.log(rho_floor), np.log(rho_max), nodes))


@dataclass
class FlowState:
    t: float
    rho: np.ndarray
    v: np.ndarray
    boundary: float = 0.0

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.rho.shape != self.v.shape:
            raise DomainError("grid and samples differ in shape")
        if np.any(np.diff(self.rho) <= 0):
            raise DomainError("grid must be strictly increasing")
        if not np.all(np.isfinite(self.v)):
            raise DomainError("perturbation is not finite")

    @property
    def h(self):
        return float(np.log(self.rho[1] / self.rho[0]))

    def derivatives(self):
        """(v_x, v_xx) in x = log(rho), reflected at the inner node."""
        return _derivatives(self.v, self.h, inner_bc="reflect")


@dataclass(frozen=True)
class SolverConfig:
    scheme: str = "bdf2"
    newton_tol: float = 1e-10
    dt_ratio: float = 1e-3
    max_newton: int = 20
    max_halvings: int = 8
    nodes: int = 2048
    rho_floor: float | None = None
    inner_bc: str = "reflect"
    samples_per_octave: int = 2
    store_profiles: bool = True

    def __post_init__(self):
        if self.scheme not in ("bdf2", "euler"):
            raise DomainError("scheme must be 'bdf2' or 'euler'")
        if not (self.newton_tol > 0 and self.dt_ratio > 0 and self.max_newton > 0):
            raise DomainError("tolerances must be positive")
        if self.inner_bc not in ("reflect", "dirichlet"):
            raise DomainError("inner_bc must be 'reflect' or 'dirichlet'")
        if self.samples_per_octave < 1:
            raise DomainError("samples_per_octave must be >= 1")


@dataclass
class EvolutionTrace:
    T: float
    times: list = field(default_factory=list)
    sup_v: list = field(default_factory=list)
    sup_f: list = field(default_factory=list)
    K: list = field(default_factory=list)
    K_arg: list = field(default_factory=list)
    area: list = field(default_factory=list)
    profiles: list = field(default_factory=list)
    dense_t: list = field(default_factory=list)
    dense_sup_v: list = field(default_factory=list)
    dense_sup_f: list = field(default_factory=list)
    rho: np.ndarray | None = None
    steps: int = 0
    rejected: int = 0
    model: object = None

    def as_arrays(self):
        return {k: np.asarray(getattr(self, k)) for k in ("times", "sup_v", "sup_f", "K", "area")}

    def rows(self):
        return [
            {"t": t, "sup_v": sv, "sup_f": sf, "K": k, "area_coeff": a}
            for t, sv, sf, k, a in zip(self.times, self.sup_v, self.sup_f, self.K, self.area)
        ]


# ---------------------------------------------------------------------------
# Discrete operator
# ---------------------------------------------------------------------------

def _derivatives(v, h, inner_bc="reflect"):
    vx = np.empty_like(v)
    vxx = np.empty_like(v)
    vx[1:-1] = (v[2:] - v[:-2]) / (2 * h)
    vxx[1:-1] = (v[2:] - 2 * v[1:-1] + v[:-2]) / (h * h)
    if inner_bc == "reflect":
        vx[0] = 0.0
        vxx[0] = 2 * (v[1] - v[0]) / (h * h)
    else:
        vx[0] = (v[1] - v[0]) / h
        vxx[0] = 0.0
    # outer node is a Dirichlet value; one-sided for reporting only
    vx[-1] = (3 * v[-1] - 4 * v[-2] + v[-3]) / (2 * h)
    vxx[-1] = (2 * v[-1] - 5 * v[-2] + 4 * v[-3] - v[-4]) / (h * h)
    return vx, vxx


def _positive(P, S, vx, vxx):
    return bool(np.all(P + vx > 0) and np.all(S + vxx > 0))


def potential_flow_rhs(state: FlowState, model, sample=None):
    """v_t according to the flow, at every node (outer node included)."""
    if sample is None:
        sample = model.sample(state.t, state.rho)
    vx, vxx = state.derivatives()
    P, S = state.rho * sample.phi, state.rho * sample.psi
    if not _positive(P, S, vx, vxx):
        raise PositivityError(f"perturbed metric not positive at t={state.t:g}")
    return np.log1p(vx / P) + np.log1p(vxx / S) - sample.f


def q_remainder(state: FlowState, model, sample=None):
    """Log-det difference minus its linearization; never positive."""
    if sample is None:
        sample = model.sample(state.t, state.rho)
    vx, vxx = state.derivatives()
    P, S = state.rho * sample.phi, state.rho * sample.psi
    if not _positive(P, S, vx, vxx):
        raise PositivityError(f"perturbed metric not positive at t={state.t:g}")
    a, c = vx / P, vxx / S
    return (np.log1p(a) - a) + (np.log1p(c) - c)


def _newton(v_guess, const, beta, rho, h, sample, config, v_out, v_in=None):
    """Solve v - beta*rhs(v) = const for the interior unknowns."""
    n = len(rho)
    P, S = rho * sample.phi, rho * sample.psi
    v = v_guess.copy()
    v[-1] = v_out
    first = 1 if config.inner_bc == "dirichlet" else 0
    if first:
        v[0] = v_in
    sl = slice(first, n - 1)
    for it in range(config.max_newton):
        vx, vxx = _derivatives(v, h, config.inner_bc)
        A = P + vx
        B = S + vxx
        if not (np.all(A[:-1] > 0) and np.all(B[:-1] > 0)):
            raise StepFailure("positivity lost in Newton iterate", {"iteration": it})
        rhs = np.log1p(vx / P) + np.log1p(vxx / S) - sample.f
        res = (v - beta * rhs - const)[sl]
        inv_a = 1.0 / A
        inv_b = 1.0 / B
        lower = -(-0.5 / h * inv_a + inv_b / (h * h))  # coefficient of v[i-1]
        diag = 1.0 + beta * 2.0 * inv_b / (h * h)
        upper = -(0.5 / h * inv_a + inv_b / (h * h))
        lower = beta * lower
        upper = beta * upper
        if config.inner_bc == "reflect":
            upper = upper.copy()
            upper[0] = -beta * 2.0 * inv_b[0] / (h * h)
        m = n - 1 - first
        ab = np.zeros((3, m))
        ab[0, 1:] = upper[first:n - 2]
        ab[1, :] = diag[sl]
        ab[2, :-1] = lower[first + 1:n - 1]
        delta = solve_banded((1, 1), ab, -res)
        v[sl] += delta
        if np.max(np.abs(delta)) <= config.newton_tol * (1.0 + np.max(np.abs(v))):
            vx, vxx = _derivatives(v, h, config.inner_bc)
            if not (np.all(P[:-1] + vx[:-1] > 0) and np.all(S[:-1] + vxx[:-1] > 0)):
                raise StepFailure("positivity lost after Newton", {"iteration": it})
            return v, it + 1
    raise StepFailure("Newton did not converge", {"iterations": config.max_newton,
                                                  "last_update": float(np.max(np.abs(delta)))})


def _boundary(model, t, rho, idx):
    if hasattr(model, "boundary"):
        return float(model.boundary(t, rho[[idx]])[0])
    return 0.0


def step(state: FlowState, config: SolverConfig, model, dt, previous=None):
    """One implicit step; ``previous = (t_prev, v_prev)`` enables BDF2.

    Returns the new state and the model sample at the new time.
    """
    t1 = state.t + dt
    sample = model.sample(t1, state.rho)
    h = state.h
    if previous is None or config.scheme == "euler":
        const = state.v
        beta = dt
        guess = state.v
    else:
        t_prev, v_prev = previous
        omega = dt / (state.t - t_prev)
        c1 = (1 + omega) ** 2 / (1 + 2 * omega)
        c2 = omega ** 2 / (1 + 2 * omega)
        const = c1 * state.v - c2 * v_prev
        beta = dt * (1 + omega) / (1 + 2 * omega)
        guess = state.v + omega * (state.v - v_prev)
    v_out = _boundary(model, t1, state.rho, -1)
    v_in = _boundary(model, t1, state.rho, 0) if config.inner_bc == "dirichlet" else None
    v, iters = _newton(guess, const, beta, state.rho, h, sample, config, v_out, v_in)
    return FlowState(t1, state.rho, v, v_out), sample


# ---------------------------------------------------------------------------
# Evolved profile and comparison quantities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EvolvedProfile(RadialProfile):
    """phi_model(t) + v, with v interpolated by a cubic spline in log(rho)."""

    base: RadialProfile
    rho: np.ndarray
    v: np.ndarray
    t: float

    def __post_init__(self):
        object.__setattr__(self, "_spline", CubicSpline(np.log(self.rho), self.v))

    @property
    def cap_scale(self):
        return max(self.base.cap_scale, float(self.rho[0]) * 4.0 ** 6)

    def value(self, rho):
        return self.base.value(rho) + self._spline(np.log(rho))

    def d1(self, rho):
        rho = np.asarray(rho, dtype=float)
        return self.base.d1(rho) + self._spline(np.log(rho), 1) / rho

    def d2(self, rho):
        rho = np.asarray(rho, dtype=float)
        x = np.log(rho)
        return self.base.d2(rho) + (self._spline(x, 2) - self._spline(x, 1)) / rho ** 2

    def psi(self, rho):
        rho = np.asarray(rho, dtype=float)
        return self.base.psi(rho) + self._spline(np.log(rho), 2) / rho


def bilipschitz_to_model(state: FlowState, sample):
    """K and its location for the evolved metric against the model."""
    vx, vxx = state.derivatives()
    P, S = state.rho * sample.phi, state.rho * sample.psi
    r1 = (P + vx) / P
    r2 = (S + vxx) / S
    ratios = np.maximum.reduce([r1, 1 / r1, r2, 1 / r2])
    inner = slice(0, len(state.rho) - 1)
    i = int(np.argmax(ratios[inner]))
    return float(ratios[i]), float(state.rho[i])


def _area(model, state):
    if getattr(model, "b", None) is None:
        return float("nan")
    prof = EvolvedProfile(model.profile(state.t), state.rho, state.v, state.t)
    try:
        return exceptional_area_coefficient(prof, rho0=prof.cap_scale)
    except Exception as exc:  # reported, not fatal
        log.warning("area extraction failed at t=%g: %s", state.t, exc)
        return float("nan")


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------

def sample_times(T, t_end, per_octave):
    n = int(math.floor(per_octave * math.log2(t_end / T) + 1e-9))
    ts = T * 2.0 ** (np.arange(n + 1) / per_octave)
    if ts[-1] < t_end * (1 - 1e-12):
        ts = np.append(ts, t_end)
    return ts


def evolve(T, t_end, model, config: SolverConfig = SolverConfig(), v0=None, rho_max=None):
    """Evolve v from v(T) (zero by default) to ``t_end``.

    Records sup|v|, sup|f|, the biLipschitz constant against the model and
    the exceptional area coefficient at dyadic times (``samples_per_octave``
    per doubling), plus sup|v| and sup|f| after every step.
    """
    if not 0 < T < t_end:
        raise DomainError("need 0 < T < t_end")
    if rho_max is None:
        rho_max = model.spec.delta ** 2 if hasattr(model, "spec") else 1.0
    rho_floor = config.rho_floor or 1e-3 / t_end
    rho = make_grid(rho_floor, rho_max, config.nodes)
    v = np.zeros_like(rho) if v0 is None else np.asarray(v0, dtype=float).copy()
    state = FlowState(T, rho, v, float(v[-1]))
    trace = EvolutionTrace(T=T, rho=rho, model=model.describe())
    sample = model.sample(T, rho)
    targets = list(sample_times(T, t_end, config.samples_per_octave))

    def record(state, sample):
        K, where = bilipschitz_to_model(state, sample)
        trace.times.append(state.t)
        trace.sup_v.append(float(np.max(np.abs(state.v))))
        trace.sup_f.append(float(np.max(np.abs(sample.f))))
        trace.K.append(K)
        trace.K_arg.append(where)
        trace.area.append(_area(model, state))
        if config.store_profiles:
            trace.profiles.append(state.v.copy())

    def record_dense(state, sample):
        trace.dense_t.append(state.t)
        trace.dense_sup_v.append(float(np.max(np.abs(state.v))))
        trace.dense_sup_f.append(float(np.max(np.abs(sample.f))))

    record(state, sample)
    record_dense(state, sample)
    targets.pop(0)
    previous = None
    while targets:
        target = targets[0]
        dt = min(config.dt_ratio * state.t, target - state.t)
        for halving in range(config.max_halvings + 1):
            try:
                new_state, new_sample = step(state, config, model, dt, previous)
                break
            except (StepFailure, PositivityError) as exc:
                trace.rejected += 1
                if halving == config.max_halvings:
                    raise StepFailure(
                        f"step from t={state.t:g} failed after {halving} halvings",
                        {"t": state.t, "dt": dt, "cause": str(exc)},
                    ) from exc
                dt *= 0.5
                previous = None  # restart the two-step history
        previous = (state.t, state.v)
        state, sample = new_state, new_sample
        trace.steps += 1
        record_dense(state, sample)
        if state.t >= target * (1 - 1e-12):
            state.t = target
            record(state, sample)
            targets.pop(0)
    return trace


# ---------------------------------------------------------------------------
# Normalized flow and stability
# ---------------------------------------------------------------------------

@dataclass
class NormalizedView:
    t_hat: float
    u_hat: np.ndarray
    v_hat: np.ndarray
    one_step_discrepancy: float | None = None


def _semidiscrete(model, rho, h, inner_bc, fixed):
    """Right-hand side of the method-of-lines system for the interior nodes."""
    cache = {}

    def rhs(t, v_int):
        if t not in cache:
            cache.clear()
            cache[t] = model.sample(t, rho)
        s = cache[t]
        v = np.empty(len(rho))
        v[:-1] = v_int
        v[-1] = fixed(t)
        vx, vxx = _derivatives(v, h, inner_bc)
        P, S = rho * s.phi, rho * s.psi
        # trial stages of the implicit integrator may leave the positive cone
        with np.errstate(invalid="ignore"):
            return (np.log1p(vx / P) + np.log1p(vxx / S) - s.f)[:-1]

    return rhs


def normalized_transform(state: FlowState, model, dt=None, rtol=1e-11, atol=1e-13):
    """(log t, u/t, v/t) and a one-step comparison of the two formulations.

    The same semi-discrete system is integrated over [t, t + dt] once in t
    for v and once in log t for v/t (where the equation gains a ``-v_hat``
    term); the returned discrepancy is the max difference of the resulting v.
    """
    s = model.sample(state.t, state.rho, with_value=True)
    u = s.value + state.v if s.value is not None else state.v
    view = NormalizedView(math.log(state.t), u / state.t, state.v / state.t)
    if dt is None:
        return view
    fixed = lambda t: state.boundary
    rhs = _semidiscrete(model, state.rho, state.h, "reflect", fixed)
    t0, t1 = state.t, state.t + dt
    direct = solve_ivp(rhs, (t0, t1), state.v[:-1], method="Radau", rtol=rtol, atol=atol)

    def rhs_hat(th, vh):
        t = math.exp(th)
        return rhs(t, t * vh) - vh

    hat = solve_ivp(rhs_hat, (math.log(t0), math.log(t1)), state.v[:-1] / t0, method="Radau",
                    rtol=rtol, atol=atol)
    if not (direct.success and hat.success):
        raise StepFailure("reference integration failed", {"direct": direct.message, "hat": hat.message})
    v_direct = direct.y[:, -1]
    v_hat = hat.y[:, -1] * t1
    view.one_step_discrepancy = float(np.max(np.abs(v_direct - v_hat)))
    return view


@dataclass
class StabilityReport:
    margins: np.ndarray
    min_margin: float
    worst_time: float
    passed: bool
    tail_exponent: float | None
    tail_constant: float | None
    minimal_T: float | None
    epsilon: float


def stability_check(trace: EvolutionTrace, epsilon=1e-2, fit_from=None):
    """max|v(t)| <= max|v(T)| + int_T^t max|f| at every recorded step.

    The tail integral from T to infinity is estimated from a power-law fit
    to the later half (in log t) of max|f|; ``minimal_T`` is the start time
    whose tail is at most ``epsilon`` (None if the fit does not decay faster
    than 1/t).
    """
    t = np.asarray(trace.dense_t)
    sv = np.asarray(trace.dense_sup_v)
    sf = np.asarray(trace.dense_sup_f)
    integral = cumulative_trapezoid(sf, t, initial=0.0)
    margins = sv[0] + integral - sv
    i = int(np.argmin(margins))
    exponent = constant = minimal_T = None
    positive = sf > 0
    if np.count_nonzero(positive) >= 4:
        lo = fit_from if fit_from is not None else math.sqrt(t[0] * t[-1])
        m = positive & (t >= lo)
        if np.count_nonzero(m) >= 4:
            p, c = np.polyfit(np.log(t[m]), np.log(sf[m]), 1)
            exponent, constant = float(p), float(math.exp(c))
            if exponent < -1:
                minimal_T = float((epsilon * (-exponent - 1) / constant) ** (1.0 / (exponent + 1)))
    return StabilityReport(
        margins=margins,
        min_margin=float(margins[i]),
        worst_time=float(t[i]),
        passed=bool(margins[i] >= -1e-12 * max(1.0, float(np.max(sv)))),
        tail_exponent=exponent,
        tail_constant=constant,
        minimal_T=minimal_T,
        epsilon=epsilon,
    )
