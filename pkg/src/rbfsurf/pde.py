"""Reaction-diffusion systems integrated on the discretized surface.

Two models are built in: an activator-inhibitor system producing Turing
patterns (spots/stripes), and the two-variable Mitchell-Schaeffer membrane
model for cardiac excitation.  Both advance the semidiscrete system

    d/dt fields = reaction(fields, t) + diag(D) * (operator @ fields)

with an embedded Dormand-Prince 5(4) pair under proportional-integral step
control.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DivergenceError, StiffnessError
from .kernels import Kernel, KernelFamily
from .lbo import SparseOperator, assemble_operator
from .nodesets import NodeSet
from .surface_geom import SurfaceFrame

# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TuringParams:
    """Activator-inhibitor coefficients; presets give spots or stripes."""

    d_u: float
    d_v: float
    alpha: float
    beta: float
    gamma: float
    tau1: float
    tau2: float

    def __post_init__(self):
        if not (self.d_u > 0 and self.d_v > 0):
            raise ValueError("diffusion coefficients must be positive")

    @classmethod
    def spots(cls):
        return cls(d_u=2.32e-3, d_v=4.5e-3, alpha=0.899, beta=-0.91,
                   gamma=-0.899, tau1=0.02, tau2=0.2)

    @classmethod
    def stripes(cls):
        return cls(d_u=1.08e-3, d_v=2.1e-3, alpha=0.899, beta=-0.91,
                   gamma=-0.899, tau1=3.5, tau2=0.0)

    @classmethod
    def preset(cls, name):
        presets = {"spots": cls.spots, "stripes": cls.stripes}
        try:
            return presets[name]()
        except KeyError:
            raise ValueError(f"unknown preset {name!r}; expected one of {sorted(presets)}") from None


@dataclass(frozen=True)
class SchaefferParams:
    """Membrane model constants (times in ms, diffusion in cm^2/ms)."""

    sigma: float = 1e-3
    tau_open: float = 130.0
    tau_close: float = 150.0
    tau_in: float = 0.2
    tau_out: float = 10.0
    v_crit: float = 0.13

    def __post_init__(self):
        if min(self.tau_open, self.tau_close, self.tau_in, self.tau_out) <= 0:
            raise ValueError("all time constants must be positive")
        if not 0 < self.v_crit < 1:
            raise ValueError(f"v_crit must lie in (0, 1), got {self.v_crit}")


@dataclass(frozen=True)
class StimulusSpec:
    """Gaussian current bump applied for the first ``t_stim`` milliseconds."""

    t_stim: float
    center: np.ndarray
    delta: float

    def __post_init__(self):
        if not self.t_stim > 0:
            raise ValueError("stimulus duration must be positive")
        if not self.delta > 0:
            raise ValueError("stimulus width must be positive")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))


@dataclass
class RdState:
    """Two nodal fields (2, N) at one time: (u, v) or (v, h)."""

    fields: np.ndarray
    time: float

    def __post_init__(self):
        self.fields = np.asarray(self.fields, dtype=float)
        if self.fields.ndim != 2 or self.fields.shape[0] != 2:
            raise ValueError(f"state must have shape (2, N), got {self.fields.shape}")


# ---------------------------------------------------------------------------
# reaction terms
# ---------------------------------------------------------------------------

def turing_reaction(u, v, p: TuringParams, form="canonical"):
    """Reaction pair (du, dv) of the activator-inhibitor system.

    ``form="canonical"`` is the standard cubic-coupling form matching the
    preset parameter tables; ``form="paper"`` keeps a literature variant
    that places the cubic nonlinearity differently, for auditing.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if p.tau1 != 0.0 and p.beta == 0.0:
        raise ValueError("beta must be nonzero when tau1 != 0 (cross-coupling divides by beta)")
    if form == "canonical":
        du = p.alpha * u * (1.0 - p.tau1 * v * v) + v * (1.0 - p.tau2 * u)
        ratio = p.alpha * p.tau1 / p.beta if p.tau1 != 0.0 else 0.0
        dv = p.beta * v * (1.0 + ratio * u * v) + u * (p.gamma + p.tau2 * v)
    elif form == "paper":
        du = p.alpha * u * (1.0 - p.tau1 * u * u) + v * (1.0 - p.tau2 * u)
        coupling = (p.alpha * p.tau1 * u * v / p.beta) * p.tau1 * u * u if p.tau1 != 0.0 else 0.0
        dv = p.beta * u * (1.0 + coupling) + u * (p.gamma - p.tau2 * v)
    else:
        raise ValueError(f"unknown reaction form {form!r}; expected 'canonical' or 'paper'")
    return du, dv


def schaeffer_reaction(v, h, p: SchaefferParams, j_stim=0.0):
    """Reaction pair (dv, dh) of the membrane model.

    The inward current ``h(1-v)v^2/tau_in`` and outward current
    ``-v/tau_out`` drive the voltage; the gate recovers below the critical
    voltage and closes above it (the tie ``v == v_crit`` recovers).
    """
    v = np.asarray(v, dtype=float)
    h = np.asarray(h, dtype=float)
    j_in = h * (1.0 - v) * v * v / p.tau_in
    j_out = -v / p.tau_out
    dv = j_in + j_out + j_stim
    dh = np.where(v <= p.v_crit, (1.0 - h) / p.tau_open, -h / p.tau_close)
    return dv, dh


def stimulus_eval(x, t, spec: StimulusSpec):
    """Stimulus value at point(s) x and time t: a Gaussian bump gated in time.

    Active while ``t <= t_stim`` (Heaviside with H(0) = 1), with spatial
    profile ``exp(-|x - center|^2 / delta^2)``.
    """
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    x = np.asarray(x, dtype=float)
    if t > spec.t_stim:
        return np.zeros(x.shape[:-1]) if x.ndim > 1 else 0.0
    d2 = np.sum((x - spec.center) ** 2, axis=-1)
    out = np.exp(-d2 / spec.delta**2)
    return out if x.ndim > 1 else float(out)


# ---------------------------------------------------------------------------
# models
# ---------------------------------------------------------------------------

class RdModel:
    """A two-field reaction plus per-field diffusivities."""

    diffusivities: np.ndarray

    def reaction(self, t, fields):
        """Return the (2, N) reaction term at time t."""
        raise NotImplementedError


class TuringModel(RdModel):
    def __init__(self, params: TuringParams, form="canonical"):
        self.params = params
        self.form = form
        self.diffusivities = np.array([params.d_u, params.d_v])

    def reaction(self, t, fields):
        du, dv = turing_reaction(fields[0], fields[1], self.params, self.form)
        return np.stack([du, dv])


class SchaefferModel(RdModel):
    """Membrane model on a node set; only the voltage field diffuses."""

    def __init__(self, params: SchaefferParams, points=None, stimulus: Optional[StimulusSpec] = None):
        self.params = params
        self.stimulus = stimulus
        self.diffusivities = np.array([params.sigma, 0.0])
        if stimulus is not None:
            if points is None:
                raise ValueError("stimulus requires node positions")
            self._profile = stimulus_eval(np.asarray(points, dtype=float), 0.0, stimulus)
        else:
            self._profile = None

    def reaction(self, t, fields):
        j = 0.0
        if self._profile is not None and t <= self.stimulus.t_stim:
            j = self._profile
        dv, dh = schaeffer_reaction(fields[0], fields[1], self.params, j)
        return np.stack([dv, dh])


# ---------------------------------------------------------------------------
# adaptive Dormand-Prince 5(4) integrator
# ---------------------------------------------------------------------------

_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
# fifth-order propagation weights equal the last A row (FSAL)
_DP_B5 = _DP_A[6]
_DP_ERR = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
                    -17253 / 339200, 22 / 525, -1 / 40])

_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 5.0
_PI_ALPHA = 0.7 / 5.0
_PI_BETA = 0.4 / 5.0
_MIN_STEP_FRACTION = 1e-12


def _rms(x):
    return float(np.sqrt(np.mean(x * x)))


def _initial_step(rhs, t0, y0, f0, t_end, rtol, atol):
    sc = atol + rtol * np.abs(y0)
    d0 = _rms(y0 / sc)
    d1 = _rms(f0 / sc)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, t_end - t0)
    f1 = rhs(t0 + h0, y0 + h0 * f0)
    d2 = _rms((f1 - f0) / sc) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, t_end - t0)


def integrate(model: RdModel, op: Optional[SparseOperator], state0: RdState,
              t_end, rtol=1e-6, atol=1e-9, snapshot_every=None,
              step_callback=None, max_steps=10_000_000):
    """Advance the reaction-diffusion state to ``t_end``.

    Steps are accepted when the weighted RMS of the embedded error estimate
    is at most 1; the step size follows a proportional-integral controller.
    Returns the snapshots taken at multiples of ``snapshot_every`` (the
    initial state included) plus the final state.

    ``step_callback(t, fields, derivative)`` fires after every accepted
    step; returning True stops the integration early.

    Raises
    ------
    StiffnessError
        If the step size underflows below 1e-12 * t_end.
    DivergenceError
        If the state stops being finite.
    """
    if not (rtol > 0 and atol > 0):
        raise ValueError("rtol and atol must be positive")
    if op is not None and state0.fields.shape[1] != op.n:
        raise ValueError(
            f"state has {state0.fields.shape[1]} nodes but operator has {op.n}"
        )
    if snapshot_every is not None and not snapshot_every > 0:
        raise ValueError("snapshot_every must be positive")

    diff = np.asarray(model.diffusivities, dtype=float).reshape(2, 1)

    if op is None:
        def rhs(t, y):
            return model.reaction(t, y)
    else:
        def rhs(t, y):
            return model.reaction(t, y) + diff * op.apply(y)

    t = float(state0.time)
    t_end = float(t_end)
    y = state0.fields.astype(float, copy=True)
    snapshots = [RdState(y.copy(), t)]
    if t_end <= t:
        return snapshots

    def next_snapshot_time(now):
        if snapshot_every is None:
            return t_end
        k = np.floor(now / snapshot_every + 1e-9) + 1
        return min(k * snapshot_every, t_end)

    f = rhs(t, y)
    if not np.all(np.isfinite(f)):
        raise DivergenceError(f"right-hand side not finite at t = {t:g}", time=t)
    h = _initial_step(rhs, t, y, f, t_end, rtol, atol)
    h_min = _MIN_STEP_FRACTION * (t_end - state0.time)
    err_prev = 1.0
    just_rejected = False
    t_stop = next_snapshot_time(t)
    k = [None] * 7
    steps = 0

    while t < t_end - 1e-14 * t_end:
        steps += 1
        if steps > max_steps:
            raise StiffnessError(f"step budget exhausted at t = {t:g}", time=t)
        h = min(h, t_stop - t)
        if h < h_min:
            raise StiffnessError(f"step size underflow at t = {t:g}", time=t)

        k[0] = f
        for s in range(1, 7):
            acc = _DP_A[s][0] * k[0]
            for j in range(1, s):
                acc = acc + _DP_A[s][j] * k[j]
            k[s] = rhs(t + _DP_C[s] * h, y + h * acc)
        y_new = y + h * (_DP_B5[0] * k[0] + _DP_B5[2] * k[2] + _DP_B5[3] * k[3]
                         + _DP_B5[4] * k[4] + _DP_B5[5] * k[5])
        err_vec = h * (_DP_ERR[0] * k[0] + _DP_ERR[2] * k[2] + _DP_ERR[3] * k[3]
                       + _DP_ERR[4] * k[4] + _DP_ERR[5] * k[5] + _DP_ERR[6] * k[6])
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = _rms(err_vec / sc)

        if np.isfinite(err) and err <= 1.0:
            t_new = t + h
            if not np.all(np.isfinite(y_new)):
                raise DivergenceError(f"state not finite at t = {t_new:g}", time=t_new)
            f = k[6]  # FSAL: last stage is rhs at the new point
            y = y_new
            t = t_new
            stop_requested = bool(step_callback and step_callback(t, y, f))
            if t >= t_stop - 1e-12 * max(1.0, abs(t_stop)):
                t = t_stop
                if snapshot_every is not None and t < t_end:
                    snapshots.append(RdState(y.copy(), t))
                t_stop = next_snapshot_time(t)
            if stop_requested:
                break
            if err == 0.0:
                fac = _FAC_MAX
            else:
                fac = _SAFETY * err ** -_PI_ALPHA * err_prev**_PI_BETA
            fac = min(1.0 if just_rejected else _FAC_MAX, max(_FAC_MIN, fac))
            h *= fac
            err_prev = max(err, 1e-4)
            just_rejected = False
        else:
            if np.isfinite(err):
                h *= min(1.0, max(_FAC_MIN, _SAFETY * err**-0.2))
            else:
                h *= _FAC_MIN
            just_rejected = True

    snapshots.append(RdState(y.copy(), t))
    return snapshots


# ---------------------------------------------------------------------------
# simulation drivers
# ---------------------------------------------------------------------------

@dataclass
class TuringRun:
    """Trajectory of a Turing simulation plus steady-state diagnostics."""

    states: list
    steady_time: Optional[float]
    final_rate_inf: float
    op: SparseOperator
    params: TuringParams

    @property
    def final(self):
        return self.states[-1]


@dataclass
class SchaefferRun:
    """Trajectory of a membrane simulation plus dense probe series."""

    states: list
    probe_nodes: list
    probe_t: np.ndarray
    probe_v: np.ndarray
    probe_h: np.ndarray
    op: SparseOperator
    params: SchaefferParams
    stimulus: StimulusSpec

    @property
    def final(self):
        return self.states[-1]

    def activation_time(self, column, threshold):
        """First probe time at which v exceeds the threshold, or None."""
        above = np.nonzero(self.probe_v[:, column] > threshold)[0]
        return float(self.probe_t[above[0]]) if len(above) else None


def _default_kernel(kernel):
    return kernel if kernel is not None else Kernel(KernelFamily.GAUSSIAN, 2.0)


def run_turing(nodes: NodeSet, frames: SurfaceFrame, params: Optional[TuringParams] = None,
               preset: Optional[str] = None, seed=0, t_end=2000.0, *, m=31, kernel=None,
               op=None, rtol=1e-5, atol=1e-8, snapshot_every=None,
               reaction_form="canonical", stop_when_steady=True,
               steady_tol=1e-4, steady_window=10.0):
    """Integrate the Turing system from a seeded perturbation of the activator.

    The initial activator is i.i.d. uniform(-0.5, 0.5) with the given seed,
    the inhibitor starts at zero.  The quasi-steady state is declared once
    the sup norm of du/dt stays below ``steady_tol`` for ``steady_window``
    time units; with ``stop_when_steady`` the run then ends early.
    """
    if params is None:
        if preset is None:
            raise ValueError("give either params or a preset name")
        params = TuringParams.preset(preset)
    kernel = _default_kernel(kernel)
    if op is None:
        op = assemble_operator(nodes, frames, m, kernel)

    rng = np.random.default_rng(seed)
    u0 = rng.uniform(-0.5, 0.5, size=len(nodes))
    state0 = RdState(np.stack([u0, np.zeros(len(nodes))]), 0.0)
    model = TuringModel(params, form=reaction_form)

    tracker = {"since": None, "steady_at": None, "rate": np.inf}

    def watch(t, fields, deriv):
        rate = float(np.abs(deriv[0]).max())
        tracker["rate"] = rate
        if rate < steady_tol:
            if tracker["since"] is None:
                tracker["since"] = t
            elif t - tracker["since"] >= steady_window:
                tracker["steady_at"] = t
                return stop_when_steady
        else:
            tracker["since"] = None
        return False

    states = integrate(model, op, state0, t_end, rtol=rtol, atol=atol,
                       snapshot_every=snapshot_every, step_callback=watch)
    final_rate = float(np.abs(model.reaction(states[-1].time, states[-1].fields)[0]
                              + params.d_u * op.apply(states[-1].fields[0])).max())
    return TuringRun(states, tracker["steady_at"], final_rate, op, params)


def estimate_diameter(points):
    """Cheap deterministic size estimate: twice the max distance from the centroid."""
    points = np.asarray(points, dtype=float)
    return 2.0 * float(np.linalg.norm(points - points.mean(axis=0), axis=1).max())


def run_schaeffer(nodes: NodeSet, frames: SurfaceFrame, params: Optional[SchaefferParams] = None,
                  stim: Optional[StimulusSpec] = None, t_end=600.0, probe=0, *,
                  stim_node=0, m=31, kernel=None, op=None, rtol=1e-5, atol=1e-8,
                  snapshot_every=None):
    """Integrate the membrane model from rest (v = 0, h = 1) under a stimulus.

    The default stimulus lasts 5 ms, is centered at ``stim_node`` and has
    width 0.15 times the geometry diameter.  ``probe`` is a node id or list
    of ids whose (t, v, h) history is recorded at every accepted step.
    """
    params = params or SchaefferParams()
    kernel = _default_kernel(kernel)
    if op is None:
        op = assemble_operator(nodes, frames, m, kernel)
    if stim is None:
        stim = StimulusSpec(t_stim=5.0, center=nodes.points[stim_node],
                            delta=0.15 * estimate_diameter(nodes.points))

    probes = [probe] if np.isscalar(probe) else list(probe)
    model = SchaefferModel(params, points=nodes.points, stimulus=stim)
    n = len(nodes)
    state0 = RdState(np.stack([np.zeros(n), np.ones(n)]), 0.0)

    times, v_hist, h_hist = [0.0], [state0.fields[0][probes].copy()], [state0.fields[1][probes].copy()]

    def record(t, fields, deriv):
        times.append(t)
        v_hist.append(fields[0][probes].copy())
        h_hist.append(fields[1][probes].copy())
        return False

    states = integrate(model, op, state0, t_end, rtol=rtol, atol=atol,
                       snapshot_every=snapshot_every, step_callback=record)
    return SchaefferRun(states, probes, np.array(times), np.array(v_hist),
                        np.array(h_hist), op, params, stim)


# ---------------------------------------------------------------------------
# trajectory output
# ---------------------------------------------------------------------------

def save_snapshots(nodes: NodeSet, states: Sequence[RdState], outdir,
                   field_names=("u", "v"), vtk=False):
    """Write one CSV per snapshot plus a times.csv index (and optional VTK)."""
    os.makedirs(outdir, exist_ok=True)
    index_path = os.path.join(outdir, "times.csv")
    with open(index_path, "w", encoding="utf-8") as idx:
        idx.write("snapshot,time,file\n")
        for num, state in enumerate(states):
            name = f"snapshot_{num:04d}.csv"
            data = np.column_stack([nodes.points, state.fields.T])
            header = "x,y,z," + ",".join(field_names)
            np.savetxt(os.path.join(outdir, name), data, fmt="%.17g",
                       delimiter=",", header=header, comments="")
            idx.write(f"{num},{state.time:.17g},{name}\n")
            if vtk:
                vtk_name = f"snapshot_{num:04d}.vtk"
                scalars = dict(zip(field_names, state.fields))
                write_vtk_pointcloud(os.path.join(outdir, vtk_name), nodes.points, scalars)
    return index_path


def write_vtk_pointcloud(path, points, scalars):
    """Legacy ASCII VTK polydata with point scalars, for external viewers."""
    points = np.asarray(points, dtype=float)
    n = len(points)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write("rbfsurf point cloud\n")
        fh.write("ASCII\nDATASET POLYDATA\n")
        fh.write(f"POINTS {n} double\n")
        for p in points:
            fh.write(f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g}\n")
        fh.write(f"VERTICES {n} {2 * n}\n")
        for i in range(n):
            fh.write(f"1 {i}\n")
        fh.write(f"POINT_DATA {n}\n")
        for name, values in scalars.items():
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            for val in np.asarray(values, dtype=float):
                fh.write(f"{val:.17g}\n")


def save_probe_csv(path, run: SchaefferRun, column=0):
    """Probe history as CSV with columns t,v,h."""
    data = np.column_stack([run.probe_t, run.probe_v[:, column], run.probe_h[:, column]])
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header="t,v,h", comments="")
