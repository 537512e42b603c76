"""Truncated propagation of the bilinear Schroedinger dynamics.

The state lives in the span of the first K eigenfunctions; the generator is
Lambda + u(t) B with Lambda diagonal and B real symmetric.  Time stepping
applies the exponential of the frozen midpoint Hamiltonian through its
eigendecomposition, so every step is unitary by construction; periodic
drives reuse the one-period propagator.

Also here: the first-order (linearized) response used to validate moment
controls, the bracket-closure dimension count behind the finite-dimensional
controllability criterion, and resonant population-transfer synthesis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, ValidationError
from .moment import exp_inner

_EIGH_CHUNK = 8192


@dataclass
class GalerkinSystem:
    lam: np.ndarray        # ascending real eigenvalues
    B: np.ndarray          # real symmetric coupling matrix

    def __post_init__(self):
        self.lam = np.asarray(self.lam, dtype=float)
        self.B = np.asarray(self.B, dtype=float)
        K = self.lam.size
        if self.B.shape != (K, K):
            raise ValidationError("coupling matrix shape must match the eigenvalue count")
        if not np.allclose(self.B, self.B.T, rtol=0, atol=1e-12 * max(1.0, float(np.abs(self.B).max()))):
            raise ValidationError("coupling matrix must be symmetric")
        if np.any(np.diff(self.lam) < 0):
            raise ValidationError("eigenvalues must be sorted ascending")

    @property
    def dim(self) -> int:
        return self.lam.size


# ---------------------------------------------------------------------------
# control signals

@dataclass
class TrigControl:
    """u(t) = const + sum of coeff * cos/sin(freq t) on [0, horizon]."""

    horizon: float
    const: float = 0.0
    terms: list[tuple[float, str, float]] = field(default_factory=list)  # (freq, "cos"|"sin", coeff)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.full_like(t, self.const, dtype=float)
        for freq, kind, c in self.terms:
            out = out + c * (np.cos(freq * t) if kind == "cos" else np.sin(freq * t))
        return out

    def moment_integral(self, alpha: float) -> complex:
        """Closed form of the integral of u(t) e^{i alpha t} over (0, horizon)."""
        total = self.const * exp_inner(alpha, self.horizon)
        for freq, kind, c in self.terms:
            plus = exp_inner(alpha + freq, self.horizon)
            minus = exp_inner(alpha - freq, self.horizon)
            total += c * (0.5 * (plus + minus) if kind == "cos" else (plus - minus) / 2j)
        return total

    @property
    def max_frequency(self) -> float:
        return max([abs(f) for f, _, _ in self.terms], default=0.0)

    @property
    def period(self) -> float | None:
        freqs = sorted({abs(f) for f, _, _ in self.terms if f != 0.0})
        if len(freqs) != 1:
            return None
        return 2 * math.pi / freqs[0]

    def scaled(self, factor: float) -> "TrigControl":
        return TrigControl(horizon=self.horizon, const=factor * self.const,
                           terms=[(f, k, factor * c) for f, k, c in self.terms])


def resonant_pulse(amplitude: float, frequency: float, horizon: float) -> TrigControl:
    return TrigControl(horizon=horizon, terms=[(frequency, "cos", amplitude)])


@dataclass
class SampledControl:
    """Piecewise-constant control: samples[i] on [i dt, (i+1) dt)."""

    samples: np.ndarray
    dt: float

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)

    @property
    def horizon(self) -> float:
        return self.samples.size * self.dt

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.clip((t / self.dt).astype(int), 0, self.samples.size - 1)
        return self.samples[idx]

    def moment_integral(self, alpha: float) -> complex:
        total = 0.0 + 0.0j
        for i, u in enumerate(self.samples):
            a, b = i * self.dt, (i + 1) * self.dt
            if alpha == 0.0:
                total += u * (b - a)
            else:
                total += u * (np.exp(1j * alpha * b) - np.exp(1j * alpha * a)) / (1j * alpha)
        return complex(total)

    @property
    def max_frequency(self) -> float:
        return math.pi / self.dt

    @property
    def period(self):
        return None

    def scaled(self, factor: float) -> "SampledControl":
        return SampledControl(samples=factor * self.samples, dt=self.dt)


# ---------------------------------------------------------------------------
# propagation

@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray      # (len(times), K) complex
    norm_drift: float

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def populations(self) -> np.ndarray:
        return np.abs(self.states) ** 2


def _step_matrices(lam, B, u_mids, dt):
    """Unitary midpoint-exponential steps for a batch of control values."""
    H = np.diag(lam)[None, :, :] + u_mids[:, None, None] * B[None, :, :]
    w, v = np.linalg.eigh(H)
    phase = np.exp(-1j * dt * w)
    return np.einsum("nij,nj,nkj->nik", v, phase, v)


def _polar_unitary(U):
    """Nearest unitary; absorbs the roundoff of long step products."""
    w, _, vt = np.linalg.svd(U)
    return w @ vt


def choose_step_count(system: GalerkinSystem, control, horizon: float, n_steps: int | None):
    if n_steps is not None:
        return int(n_steps)
    comm = np.linalg.norm(np.diag(system.lam) @ system.B - system.B @ np.diag(system.lam))
    u_scale = float(np.max(np.abs(control(np.linspace(0, horizon, 257)))))
    # resolve the control oscillation and keep the midpoint commutator error small
    n_osc = int(64 * max(1.0, control.max_frequency * horizon / (2 * math.pi)))
    n_comm = int(math.sqrt(max(comm * u_scale, 1e-12)) * horizon * 20)
    return max(512, n_osc, n_comm)


def propagate(system: GalerkinSystem, psi0, control, n_steps: int | None = None,
              record: int = 129) -> Trajectory:
    """Unitary propagation of i psi' = (Lambda + u(t) B) psi.

    Periodic single-frequency drives take a fast path: the single-period
    step product is formed once (and projected back to the unitary group)
    and applied period by period.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-12:
        raise ValidationError("initial state must be normalized")
    T = control.horizon
    period = control.period
    lam, B = system.lam, system.B

    if period is not None and T > 8 * period:
        return _propagate_periodic(system, psi0, control, period, record)

    n = choose_step_count(system, control, T, n_steps)
    dt = T / n
    if dt <= 0 or not math.isfinite(dt):
        raise NumericalError("step size underflow")
    t_mid = (np.arange(n) + 0.5) * dt
    times = [0.0]
    states = [psi0]
    psi = psi0
    rec_every = max(1, n // max(record - 1, 1))
    for start in range(0, n, _EIGH_CHUNK):
        stop = min(start + _EIGH_CHUNK, n)
        U = _step_matrices(lam, B, control(t_mid[start:stop]), dt)
        for i in range(stop - start):
            psi = U[i] @ psi
            step = start + i + 1
            if step % rec_every == 0 or step == n:
                times.append(step * dt)
                states.append(psi)
    states = np.asarray(states)
    drift = float(np.max(np.abs(np.linalg.norm(states, axis=1) - 1.0)))
    return Trajectory(times=np.asarray(times), states=states, norm_drift=drift)


def _propagate_periodic(system, psi0, control, period, record, n_per_period=1024):
    T = control.horizon
    lam, B = system.lam, system.B
    dt = period / n_per_period
    t_mid = (np.arange(n_per_period) + 0.5) * dt
    U = _step_matrices(lam, B, control(t_mid), dt)
    M = np.eye(system.dim, dtype=complex)
    for i in range(n_per_period):
        M = U[i] @ M
    M = _polar_unitary(M)
    n_periods = int(T // period)
    times = [0.0]
    states = [psi0]
    psi = psi0
    rec_every = max(1, n_periods // max(record - 1, 1))
    for p in range(n_periods):
        psi = M @ psi
        if (p + 1) % rec_every == 0 or p + 1 == n_periods:
            times.append((p + 1) * period)
            states.append(psi)
    remainder = T - n_periods * period
    if remainder > 1e-12 * T:
        n_rem = max(8, int(n_per_period * remainder / period))
        dtr = remainder / n_rem
        tm = n_periods * period + (np.arange(n_rem) + 0.5) * dtr
        Ur = _step_matrices(lam, B, control(tm), dtr)
        for i in range(n_rem):
            psi = Ur[i] @ psi
        times.append(T)
        states.append(psi)
    states = np.asarray(states)
    drift = float(np.max(np.abs(np.linalg.norm(states, axis=1) - 1.0)))
    return Trajectory(times=np.asarray(times), states=states, norm_drift=drift)


def propagate_reversed(system: GalerkinSystem, psi0, control, n_steps: int) -> np.ndarray:
    """One pass of the reversed dynamics, generator -(Lambda + u(T - t) B).

    With the mirrored step grid each reversed step is the exact inverse of
    the corresponding forward step, so forward-then-reversed returns the
    initial state up to rounding.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    T = control.horizon
    dt = T / n_steps
    t_mid = T - (np.arange(n_steps) + 0.5) * dt   # u(T - t) on the forward grid
    # exp(-i dt (-(Lambda + uB))) realized as eigh of -Lambda - uB
    U = _step_matrices(-system.lam, system.B, -np.asarray(control(t_mid)), dt)
    psi = psi0
    for i in range(n_steps):
        psi = U[i] @ psi
    return psi


def linearized_response(system: GalerkinSystem, control) -> np.ndarray:
    """First-order transition amplitudes from the ground mode.

    gamma_k = -i B[k, 0] * integral of u(t) e^{i (lambda_k - lambda_1) t}.
    """
    alpha = system.lam - system.lam[0]
    return np.array([-1j * system.B[k, 0] * control.moment_integral(alpha[k])
                     for k in range(system.dim)])


def first_order_prediction(system: GalerkinSystem, control) -> np.ndarray:
    """Free evolution of the ground mode plus the linearized correction."""
    gamma = linearized_response(system, control)
    pred = gamma.copy()
    pred[0] += 1.0
    return np.exp(-1j * system.lam * control.horizon) * pred


# ---------------------------------------------------------------------------
# bracket closure

@dataclass
class LieClosureReport:
    n1: int
    admissible_pairs: list[tuple[int, int]]      # 1-based
    reached_dimension: int
    target_dimension: int
    generated: bool
    bracket_depth: int


def admissible_pairs(system: GalerkinSystem, resonance_tol: float = 1e-8,
                     element_tol: float | None = None, int_labels=None) -> list[tuple[int, int]]:
    """Coupled pairs whose transition frequency collides with no other coupled pair."""
    B, lam = system.B, system.lam
    K = system.dim
    if element_tol is None:
        element_tol = 1e-12 * max(1.0, float(np.abs(B).max()))
    coupled = [(j, k) for j in range(K) for k in range(j + 1, K)
               if abs(B[j, k]) > element_tol]
    out = []
    scale = max(1.0, float(np.abs(lam).max()))
    for (j, k) in coupled:
        fjk = abs(lam[k] - lam[j])
        degenerate = False
        for (l, m) in coupled:
            if (l, m) == (j, k):
                continue
            if int_labels is not None:
                if abs(int_labels[m] ** 2 - int_labels[l] ** 2) == abs(int_labels[k] ** 2 - int_labels[j] ** 2):
                    degenerate = True
                    break
            elif abs(abs(lam[m] - lam[l]) - fjk) <= resonance_tol * scale:
                degenerate = True
                break
        if not degenerate:
            out.append((j + 1, k + 1))
    return out


def _pair_generator(n, j, k, theta):
    E = np.zeros((n, n), dtype=complex)
    E[j, k] = np.exp(1j * theta)
    E[k, j] = -np.exp(-1j * theta)
    return E


def lie_closure(system: GalerkinSystem, resonance_tol: float = 1e-8,
                int_labels=None) -> LieClosureReport:
    """Dimension of the real Lie algebra generated by the admissible rotations.

    Generators are the skew-Hermitian pair matrices at phases 0 and pi/2 for
    every admissible pair; brackets are iterated breadth-first while the
    real span (tracked by Gram-Schmidt on vectorized matrices) grows.
    """
    n = system.dim
    if n > 12:
        raise ValidationError("bracket closure capped at dimension 12")
    pairs = admissible_pairs(system, resonance_tol, int_labels=int_labels)
    gens = []
    for (j, k) in pairs:
        gens.append(_pair_generator(n, j - 1, k - 1, 0.0))
        gens.append(_pair_generator(n, j - 1, k - 1, math.pi / 2))

    ortho: list[np.ndarray] = []

    def try_add(Mx) -> bool:
        v = np.concatenate([Mx.real.ravel(), Mx.imag.ravel()])
        nv = np.linalg.norm(v)
        if nv < 1e-12:
            return False
        for q in ortho:
            v = v - np.dot(q, v) * q
        r = np.linalg.norm(v)
        if r > 1e-10 * nv:
            ortho.append(v / r)
            return True
        return False

    frontier = [g for g in gens if try_add(g)]
    depth = 0
    target = n * n - 1
    while frontier and len(ortho) < target:
        depth += 1
        new = []
        for g in gens:
            for Mx in frontier:
                C = g @ Mx - Mx @ g
                if try_add(C):
                    new.append(C)
        frontier = new
    return LieClosureReport(n1=n, admissible_pairs=pairs, reached_dimension=len(ortho),
                            target_dimension=target, generated=(len(ortho) == target),
                            bracket_depth=depth)


# ---------------------------------------------------------------------------
# resonant transfers

@dataclass
class TransferResult:
    control: TrigControl | None
    fidelity: float
    norm_drift: float
    boundary_population: float
    trajectory: Trajectory | None = None


def resonant_transfer(system: GalerkinSystem, source: int, target: int, amplitude: float,
                      resonance_tol: float = 1e-8, int_labels=None,
                      keep_trajectory: bool = False) -> TransferResult:
    """Population transfer source -> target (1-based) by a resonant pulse.

    u(t) = amplitude * cos(|lambda_m - lambda_n| t) over the first-order
    pulse duration pi / (amplitude |B_mn|); the reported fidelity is
    |<target, psi(T)>|.
    """
    K = system.dim
    if not (1 <= source <= K and 1 <= target <= K):
        raise ValidationError("mode index out of range")
    if source == target:
        return TransferResult(control=None, fidelity=1.0, norm_drift=0.0, boundary_population=0.0)
    m, nn = source - 1, target - 1
    Bmn = system.B[m, nn]
    if Bmn == 0.0:
        raise ValidationError(f"modes {source} and {target} are uncoupled (zero matrix element)")
    pairs = admissible_pairs(system, resonance_tol, int_labels=int_labels)
    if (min(source, target), max(source, target)) not in pairs:
        f0 = abs(system.lam[nn] - system.lam[m])
        scale = max(1.0, float(np.abs(system.lam).max()))
        elem_tol = 1e-12 * max(1.0, float(np.abs(system.B).max()))
        colliding = [(l + 1, m2 + 1) for l in range(K) for m2 in range(l + 1, K)
                     if (l, m2) != (min(m, nn), max(m, nn))
                     and abs(system.B[l, m2]) > elem_tol
                     and abs(abs(system.lam[m2] - system.lam[l]) - f0) <= resonance_tol * scale]
        raise ValidationError(
            f"transition {source}->{target} is frequency-degenerate among coupled pairs; "
            f"colliding pairs: {colliding}")
    omega = abs(system.lam[nn] - system.lam[m])
    T = math.pi / (amplitude * abs(Bmn))
    u = resonant_pulse(amplitude, omega, T)
    psi0 = np.zeros(K, dtype=complex)
    psi0[m] = 1.0
    traj = propagate(system, psi0, u)
    pops = traj.populations()
    boundary = float(pops[:, -2:].max()) if K >= max(source, target) + 3 else 0.0
    fid = float(abs(traj.final[nn]))
    return TransferResult(control=u, fidelity=fid, norm_drift=traj.norm_drift,
                          boundary_population=boundary,
                          trajectory=traj if keep_trajectory else None)


@dataclass
class SubsystemDemoReport:
    transfer: TransferResult
    family: str
    dropped_coupling_max: float       # coupling into the complement family
    truncation_boundary_max: float


def subsystem_transfer_demo(family: str, params: dict, source: int, target: int,
                            amplitude: float, num_modes: int | None = None) -> SubsystemDemoReport:
    """Transfer within a closed-form invariant subsystem.

    Builds the reduced basis, the matching coupling matrix (polynomial
    potential for the equilateral star, exchange operators otherwise),
    verifies that the coupling into the dropped complement vanishes, and
    runs the resonant transfer inside the truncation (default size: three
    times the highest index involved).
    """
    from . import potentials, spectrum

    if num_modes is None:
        num_modes = 3 * max(source, target)
    basis = spectrum.explicit_subsystem(family, num_modes, **params)
    if family == "equilateral_star":
        L = float(params.get("length", 1.0))
        op = potentials.ControlOperator(
            per_edge={basis.edge_ids[0]: potentials.squared_shift_potential(L)})
        B = potentials.build_matrix(op, basis)
        dropped = spectrum.equilateral_dropped_modes(max(2, num_modes // 2),
                                                     int(params.get("n_edges", 3)), L)
        poly = potentials.squared_shift_potential(L)
        worst = 0.0
        # B acts on edge 1 only, where the dropped family vanishes identically
        for dm in dropped:
            amp_d = dm.per_edge[0][0]
            for k in range(1, num_modes + 1):
                mk = basis.modes[k - 1]
                acc = sum(c * potentials.trig_poly_integral(p, dm.omega, L,
                                                            potentials.TrigKind.SINSIN, mk.omega)
                          for p, c in enumerate(poly))
                worst = max(worst, abs(amp_d * mk.per_edge[0][0] * acc))
        dropped_max = worst
    else:
        B = potentials.build_exchange_matrix(basis)
        dropped_max = 0.0
    if dropped_max > 1e-10:
        raise NumericalError(
            f"coupling operator leaks out of the invariant subsystem (max {dropped_max:.3g})")
    system = GalerkinSystem(lam=basis.eigenvalues, B=B)
    res = resonant_transfer(system, source, target, amplitude,
                            int_labels=basis.int_labels)
    return SubsystemDemoReport(transfer=res, family=family,
                               dropped_coupling_max=dropped_max,
                               truncation_boundary_max=res.boundary_population)
