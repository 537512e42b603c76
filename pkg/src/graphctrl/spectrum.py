"""Laplacian spectra of intervals and star graphs.

Eigenfunctions are per-edge trigonometric: a * sin(omega x) on edges whose
external vertex is Dirichlet, a * cos(omega x) on Neumann edges, with
omega = sqrt(lambda).  Vertex conditions at the center reduce the problem to
a scalar secular function

    S(x) = sum_l w_l * sigma_l(x L_l) * prod_{j != l} tau_j(x L_j)

with tau = sin, sigma = cos on Dirichlet edges and tau = cos, sigma = -sin
on Neumann edges.  S is entire (pole-free) and its positive zeros, counted
with their order, enumerate the spectrum: simple sign-change zeros carry
eigenfunctions that do not vanish at the center, while points where r >= 2
edge factors vanish simultaneously carry r-1 eigenfunctions supported on
those edges (a zero of S of order r-1).  The latter exist only when length
ratios are rational and are enumerated in closed form.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, UnsupportedTopology, ValidationError
from .graph import BoundaryCondition, MetricGraph, Topology

_BISECT_REL = 1e-13
_CLUSTER_REL = 1e-9


class TrigMode(enum.Enum):
    SIN = "sin"
    COS = "cos"


@dataclass
class EigenMode:
    index: int              # 1-based position in the ordered spectrum
    lam: float
    omega: float
    per_edge: list[tuple[float, TrigMode]]
    multiplicity_group: int | None = None
    center_value: float = 0.0

    def edge_value(self, edge: int, x):
        amp, mode = self.per_edge[edge]
        f = np.sin if mode is TrigMode.SIN else np.cos
        return amp * f(self.omega * np.asarray(x))


@dataclass
class SpectralBasis:
    modes: list[EigenMode]
    lengths: np.ndarray
    edge_ids: list[str]
    gap_report: tuple[int, float]    # (M, delta) for the sqrt-eigenvalue gap
    weyl_report: tuple[float, float]  # (c1, c2) = min/max over k>=2 of lambda_k / k^2
    int_labels: list[int] | None = None   # integer labels when mu_k = scale * label^2
    int_scale: float | None = None
    family: str | None = None

    def __len__(self):
        return len(self.modes)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([m.lam for m in self.modes])

    @property
    def omegas(self) -> np.ndarray:
        return np.array([m.omega for m in self.modes])


# ---------------------------------------------------------------------------
# secular function assembly

def _edge_kinds(graph: MetricGraph) -> list[TrigMode]:
    kinds = []
    for e in graph.edges:
        cond = graph.external_bc(e)
        kinds.append(TrigMode.SIN if cond is BoundaryCondition.DIRICHLET else TrigMode.COS)
    return kinds


def assemble_secular(lengths, kinds, weights=None):
    """Return vectorized callables (S, S') for the pole-free secular function."""
    lengths = np.asarray(lengths, dtype=float)
    n = lengths.size
    if weights is None:
        weights = np.ones(n)
    weights = np.asarray(weights, dtype=float)
    is_sin = np.array([k is TrigMode.SIN for k in kinds])

    def parts(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        arg = np.outer(x, lengths)
        tau = np.where(is_sin[None, :], np.sin(arg), np.cos(arg))
        sigma = np.where(is_sin[None, :], np.cos(arg), -np.sin(arg))
        dtau = np.where(is_sin[None, :], lengths[None, :] * np.cos(arg),
                        -lengths[None, :] * np.sin(arg))
        dsigma = np.where(is_sin[None, :], -lengths[None, :] * np.sin(arg),
                          -lengths[None, :] * np.cos(arg))
        return tau, sigma, dtau, dsigma

    def S(x):
        scalar = np.isscalar(x)
        tau, sigma, _, _ = parts(x)
        total = np.zeros(tau.shape[0])
        for l in range(n):
            others = [j for j in range(n) if j != l]
            total += weights[l] * sigma[:, l] * np.prod(tau[:, others], axis=1)
        return total[0] if scalar else total

    def Sprime(x):
        scalar = np.isscalar(x)
        tau, sigma, dtau, dsigma = parts(x)
        total = np.zeros(tau.shape[0])
        for l in range(n):
            others = [j for j in range(n) if j != l]
            total += weights[l] * dsigma[:, l] * np.prod(tau[:, others], axis=1)
            for m in others:
                rest = [j for j in range(n) if j != l and j != m]
                total += weights[l] * sigma[:, l] * dtau[:, m] * np.prod(tau[:, rest], axis=1)
        return total[0] if scalar else total

    return S, Sprime


def secular_function(graph: MetricGraph):
    """Pole-free secular function whose positive zeros are the sqrt-eigenvalues.

    For an interval the classical closed forms are used.  For a star the
    expanded product form is assembled; zeros where several edge factors
    vanish at once correspond to center-vanishing eigenfunctions and are
    enumerated separately by the solver.
    """
    if graph.topology is Topology.INTERVAL:
        e = graph.edges[0]
        tail, head = graph.bc[e.tail], graph.bc[e.head]
        L = e.length
        mixed = (tail != head)
        if mixed:
            return (lambda x: np.cos(np.asarray(x) * L)), f"cos({L} x)"
        return (lambda x: np.sin(np.asarray(x) * L)), f"sin({L} x)"
    if graph.topology is not Topology.STAR:
        raise UnsupportedTopology(f"secular function not available for topology {graph.topology.value}")
    kinds = _edge_kinds(graph)
    S, _ = assemble_secular(graph.lengths, kinds)
    names = ",".join("sin" if k is TrigMode.SIN else "cos" for k in kinds)
    return S, f"star secular, edge factors ({names})"


# ---------------------------------------------------------------------------
# root scanning

def _bisect(f, a, b, fa, fb, rel=_BISECT_REL):
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0:
        raise NumericalError(f"root not bracketed on [{a}, {b}]")
    while (b - a) > rel * max(1.0, abs(b)):
        m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0.0:
            return m
        if fa * fm < 0:
            b, fb = m, fm
        else:
            a, fa = m, fm
    return 0.5 * (a + b)


def scan_sign_changes(f, x_max, resolution, x_min=0.0):
    """All bracketed sign-change roots of f in (x_min, x_max]."""
    grid = np.arange(x_min + resolution, x_max, resolution)
    if grid.size < 2:
        return []
    vals = np.asarray(f(grid))
    roots = []
    idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    for i in idx:
        roots.append(_bisect(lambda t: float(f(t)), grid[i], grid[i + 1],
                             float(vals[i]), float(vals[i + 1])))
    # grid points landing exactly on a root
    for i in np.nonzero(vals == 0.0)[0]:
        roots.append(float(grid[i]))
    return sorted(roots)


def _vanishing_points(length, kind: TrigMode, x_max):
    """Zeros of the edge factor tau on (0, x_max]: sin -> n pi / L, cos -> (n-1/2) pi / L."""
    if kind is TrigMode.SIN:
        n_max = int(x_max * length / math.pi)
        return [(n * math.pi) / length for n in range(1, n_max + 1)]
    n_max = int(x_max * length / math.pi + 0.5)
    return [((n - 0.5) * math.pi) / length for n in range(1, n_max + 1)]


def common_vanishing_points(lengths, kinds, x_max, cluster_rel=_CLUSTER_REL):
    """Points where >= 2 edge factors vanish simultaneously.

    Returns a list of (x, [edge indices]) sorted by x.  Only rationally
    related lengths produce such points; they are detected by clustering the
    closed-form zeros of the individual factors.
    """
    events = []
    for j, (L, k) in enumerate(zip(lengths, kinds)):
        events.extend((x, j) for x in _vanishing_points(L, k, x_max))
    events.sort()
    branches = []
    i = 0
    while i < len(events):
        x0, j0 = events[i]
        group = [(x0, j0)]
        k = i + 1
        while k < len(events) and events[k][0] - x0 <= cluster_rel * max(1.0, x0):
            group.append(events[k])
            k += 1
        if len({j for _, j in group}) >= 2:
            xs = [x for x, _ in group]
            branches.append((sum(xs) / len(xs), sorted({j for _, j in group})))
        i = k
    return branches


# ---------------------------------------------------------------------------
# eigenfunction assembly

def _trig_norm_integral(omega, L, mode: TrigMode):
    """Integral over (0, L) of sin^2(omega x) resp. cos^2(omega x)."""
    if omega == 0.0:
        return 0.0 if mode is TrigMode.SIN else L
    osc = math.sin(2 * L * omega) / (4 * omega)
    return L / 2 - osc if mode is TrigMode.SIN else L / 2 + osc


def _simple_mode(x0, lengths, kinds) -> tuple[list[float], float]:
    """Amplitudes of the center-nonvanishing eigenfunction at sqrt(lambda)=x0.

    Continuity pins a_j * tau_j(x0 L_j) to a common center value c; the
    normalization then fixes c.  This is equivalent to anchoring the
    continuity chain at the edge with the largest |tau| (no division by a
    near-vanishing factor: the quotient c / tau_j is the actual amplitude).
    """
    taus = []
    for L, k in zip(lengths, kinds):
        t = math.sin(x0 * L) if k is TrigMode.SIN else math.cos(x0 * L)
        taus.append(t)
    norm_sq = 0.0
    for (L, k), t in zip(zip(lengths, kinds), taus):
        if t == 0.0:
            raise NumericalError(f"edge factor vanishes at x={x0}; not a simple mode")
        norm_sq += _trig_norm_integral(x0, L, k) / t**2
    c = 1.0 / math.sqrt(norm_sq)
    return [c / t for t in taus], c


def _branch_modes(x0, lengths, kinds, support):
    """Orthonormal basis (r-1 functions) of the center-vanishing eigenspace.

    The eigenfunctions are supported on the edges in ``support`` whose own
    factor vanishes at x0; the Kirchhoff condition leaves an (r-1)-dim
    amplitude space, orthonormalized against the L2 weights.
    """
    r = len(support)
    d = []
    for j in support:
        L, k = lengths[j], kinds[j]
        d.append(math.cos(x0 * L) if k is TrigMode.SIN else -math.sin(x0 * L))
    w = np.array([_trig_norm_integral(x0, lengths[j], kinds[j]) for j in support])
    d = np.array(d)
    vecs = []
    for i in range(1, r):
        v = np.zeros(r)
        v[i] = 1.0
        v[0] = -d[i] / d[0]
        for prev in vecs:
            v -= prev * np.dot(prev * w, v)
        v /= math.sqrt(np.dot(v * w, v))
        vecs.append(v)
    out = []
    for v in vecs:
        amps = np.zeros(len(lengths))
        amps[support] = v
        out.append(amps)
    return out


def _weyl_report(lams):
    ks = np.arange(1, len(lams) + 1)
    sel = ks >= 2
    vals = np.asarray(lams)[sel] / ks[sel] ** 2
    return (float(vals.min()), float(vals.max())) if vals.size else (math.nan, math.nan)


def _gap_report(omegas, m_max=10, floor_rel=1e-9):
    omegas = np.asarray(omegas)
    scale = max(1.0, float(omegas.max(initial=1.0)))
    for M in range(1, m_max + 1):
        if len(omegas) <= M:
            break
        gaps = omegas[M:] - omegas[:-M]
        delta = float(gaps.min()) / M
        if delta > floor_rel * scale:
            return (M, delta)
    return (m_max, 0.0)


def solve_spectrum(graph: MetricGraph, num_modes: int, scan_resolution: float | None = None) -> SpectralBasis:
    """First ``num_modes`` eigenvalues and normalized eigenfunctions.

    Sign-change zeros of the secular function are refined by bisection;
    closed-form center-vanishing branches (rationally related lengths) are
    merged in with their multiplicity.  The all-Neumann constant mode is
    included explicitly.
    """
    if num_modes < 1:
        raise ValidationError("num_modes must be >= 1")
    if graph.topology is Topology.INTERVAL:
        return _interval_spectrum(graph, num_modes)
    if graph.topology is not Topology.STAR:
        raise UnsupportedTopology(f"spectrum solver does not support topology {graph.topology.value}")

    lengths = graph.lengths
    kinds = _edge_kinds(graph)
    total_len = float(lengths.sum())
    res_limit = math.pi / (2 * total_len)
    if scan_resolution is None:
        scan_resolution = res_limit / 8
    elif scan_resolution >= res_limit:
        raise ValidationError(
            f"scan_resolution {scan_resolution} too coarse; must be < pi/(2 sum L) = {res_limit:.6g}")

    S, _ = assemble_secular(lengths, kinds)
    all_neumann = all(k is TrigMode.COS for k in kinds)

    # grow the scan window until enough eigenvalues are collected
    x_max = (num_modes + 2) * math.pi / total_len + 1.0
    for _ in range(40):
        entries = _collect_roots(S, lengths, kinds, x_max, scan_resolution)
        count = sum(mult for _, mult, _ in entries) + (1 if all_neumann else 0)
        if count >= num_modes:
            break
        x_max *= 1.4
    else:
        raise NumericalError("root scan failed to collect the requested number of modes")

    modes: list[EigenMode] = []
    if all_neumann:
        amp = 1.0 / math.sqrt(total_len)
        modes.append(EigenMode(index=1, lam=0.0, omega=0.0,
                               per_edge=[(amp, TrigMode.COS)] * len(lengths),
                               center_value=amp))
    group_id = 0
    for x0, mult, support in entries:
        lam = x0 * x0
        if mult == 1 and support is None:
            amps, c = _simple_mode(x0, lengths, kinds)
            modes.append(EigenMode(index=0, lam=lam, omega=x0,
                                   per_edge=[(a, k) for a, k in zip(amps, kinds)],
                                   center_value=c))
        else:
            group_id += 1
            for amps in _branch_modes(x0, lengths, kinds, support):
                modes.append(EigenMode(index=0, lam=lam, omega=x0,
                                       per_edge=[(float(a), k) for a, k in zip(amps, kinds)],
                                       multiplicity_group=group_id, center_value=0.0))
        if len(modes) >= num_modes and modes[-1].multiplicity_group is None:
            break

    modes.sort(key=lambda m: m.lam)
    modes = modes[:num_modes]
    for i, m in enumerate(modes):
        m.index = i + 1
    lams = [m.lam for m in modes]
    return SpectralBasis(modes=modes, lengths=lengths, edge_ids=graph.edge_ids,
                         gap_report=_gap_report([m.omega for m in modes]),
                         weyl_report=_weyl_report(lams))


def _collect_roots(S, lengths, kinds, x_max, resolution):
    """Merge sign-change roots with closed-form branch points.

    Returns a list of (x, multiplicity, support) sorted by x, where support
    is None for simple center-nonvanishing roots.
    """
    branches = common_vanishing_points(lengths, kinds, x_max)
    sign_roots = scan_sign_changes(S, x_max, resolution)
    entries = []
    bx = np.array([b[0] for b in branches]) if branches else np.empty(0)
    for x0 in sign_roots:
        if bx.size:
            i = int(np.argmin(np.abs(bx - x0)))
            if abs(bx[i] - x0) <= 1e-8 * max(1.0, x0):
                continue  # odd-order branch zero; counted via the branch list
        entries.append((x0, 1, None))
    for x0, support in branches:
        entries.append((x0, len(support) - 1, support))
    entries.sort(key=lambda t: t[0])
    return entries


def _interval_spectrum(graph: MetricGraph, num_modes: int) -> SpectralBasis:
    e = graph.edges[0]
    L = e.length
    tail, head = graph.bc[e.tail], graph.bc[e.head]
    mode = TrigMode.SIN if tail is BoundaryCondition.DIRICHLET else TrigMode.COS
    modes = []
    if tail is BoundaryCondition.NEUMANN and head is BoundaryCondition.NEUMANN:
        modes.append(EigenMode(index=1, lam=0.0, omega=0.0,
                               per_edge=[(1.0 / math.sqrt(L), TrigMode.COS)],
                               center_value=1.0 / math.sqrt(L)))
    mixed = (tail != head)
    n = 1
    while len(modes) < num_modes:
        omega = ((n - 0.5) if mixed else n) * math.pi / L
        amp = 1.0 / math.sqrt(_trig_norm_integral(omega, L, mode))
        modes.append(EigenMode(index=len(modes) + 1, lam=omega * omega, omega=omega,
                               per_edge=[(amp, mode)],
                               center_value=amp * (math.sin(omega * L) if mode is TrigMode.SIN
                                                   else math.cos(omega * L))))
        n += 1
    lams = [m.lam for m in modes]
    return SpectralBasis(modes=modes, lengths=graph.lengths, edge_ids=graph.edge_ids,
                         gap_report=_gap_report([m.omega for m in modes]),
                         weyl_report=_weyl_report(lams))


# ---------------------------------------------------------------------------
# closed-form subsystems

def explicit_subsystem(family: str, num_modes: int, **params) -> SpectralBasis:
    """Closed-form orthonormal eigenfunction systems of the known families.

    family:
      "equilateral_star" (n_edges, length): Dirichlet star, all edges equal.
        Alternates the all-equal odd modes with the single level-(k) member
        of each degenerate eigenspace that does not vanish on edge 1.
      "two_equal_edges" (length): antisymmetric modes on two equal Dirichlet
        edges of a larger star.
      "paired_star" (lengths): one antisymmetric family per equal-length pair.
      "loops" (lengths): one sine family per loop, eigenvalues 4 k^2 pi^2 / L^2.
    """
    if num_modes < 1:
        raise ValidationError("num_modes must be >= 1")
    if family == "equilateral_star":
        return _equilateral_subsystem(num_modes, int(params.get("n_edges", 3)),
                                      float(params.get("length", 1.0)))
    if family == "two_equal_edges":
        return _two_equal_subsystem(num_modes, float(params.get("length", 1.0)))
    if family == "paired_star":
        return _scaled_family(num_modes, params["lengths"], loop=False)
    if family == "loops":
        return _scaled_family(num_modes, params["lengths"], loop=True)
    raise ValidationError(f"unknown subsystem family {family!r}")


def _equilateral_subsystem(num_modes, n_edges, L) -> SpectralBasis:
    if n_edges < 3:
        raise ValidationError("equilateral star family requires >= 3 edges")
    if L <= 0:
        raise ValidationError("length must be positive")
    modes = []
    for k in range(1, num_modes + 1):
        omega = k * math.pi / (2 * L)
        if k % 2 == 1:  # simple level: equal amplitude on every edge
            amp = math.sqrt(2.0 / (n_edges * L))
            amps = [amp] * n_edges
        else:  # the one member of the degenerate level not vanishing on edge 1
            a = -math.sqrt(2.0 * (n_edges - 1) / (n_edges * L))
            b = math.sqrt(2.0 / (n_edges * (n_edges - 1) * L))
            amps = [a] + [b] * (n_edges - 1)
        modes.append(EigenMode(index=k, lam=omega * omega, omega=omega,
                               per_edge=[(a, TrigMode.SIN) for a in amps],
                               center_value=(amps[0] * math.sin(omega * L))))
    return SpectralBasis(modes=modes, lengths=np.full(n_edges, L),
                         edge_ids=[f"e{j+1}" for j in range(n_edges)],
                         gap_report=_gap_report([m.omega for m in modes]),
                         weyl_report=_weyl_report([m.lam for m in modes]),
                         int_labels=list(range(1, num_modes + 1)),
                         int_scale=math.pi**2 / (4 * L * L),
                         family="equilateral_star")


def equilateral_dropped_modes(num_levels, n_edges, L) -> list[EigenMode]:
    """The degenerate-level eigenfunctions vanishing on edge 1 (leakage checks)."""
    out = []
    for k in range(1, num_levels + 1):
        omega = k * math.pi / L
        # orthonormal basis of {amps: amps[0] = 0, sum amps = 0}, weights L/2
        raw = []
        for i in range(1, n_edges - 1):
            v = np.zeros(n_edges)
            v[i] = 1.0
            v[i + 1] = -1.0
            raw.append(v)
        basis = []
        for v in raw:
            for prev in basis:
                v = v - prev * np.dot(prev, v)
            v = v / math.sqrt(np.dot(v, v))
            basis.append(v)
        for v in basis:
            amps = v * math.sqrt(2.0 / L)
            out.append(EigenMode(index=k, lam=omega * omega, omega=omega,
                                 per_edge=[(float(a), TrigMode.SIN) for a in amps],
                                 multiplicity_group=k, center_value=0.0))
    return out


def _two_equal_subsystem(num_modes, L) -> SpectralBasis:
    amp = 1.0 / math.sqrt(L)
    modes = []
    for k in range(1, num_modes + 1):
        omega = k * math.pi / L
        modes.append(EigenMode(index=k, lam=omega * omega, omega=omega,
                               per_edge=[(amp, TrigMode.SIN), (-amp, TrigMode.SIN)],
                               center_value=0.0))
    return SpectralBasis(modes=modes, lengths=np.array([L, L]), edge_ids=["e1", "e2"],
                         gap_report=_gap_report([m.omega for m in modes]),
                         weyl_report=_weyl_report([m.lam for m in modes]),
                         int_labels=list(range(1, num_modes + 1)),
                         int_scale=math.pi**2 / (L * L),
                         family="two_equal_edges")


def _scaled_family(num_modes, lengths, loop: bool) -> SpectralBasis:
    """Families made of one sine series per component (pair or loop).

    paired_star: mu = m^2 pi^2 / L_j^2, +/- amplitudes on the pair edges.
    loops:       mu = 4 m^2 pi^2 / L_j^2, sqrt(2/L) amplitude on one loop.
    """
    lengths = np.asarray(lengths, dtype=float)
    if lengths.size < 1 or np.any(lengths <= 0):
        raise ValidationError("family needs positive lengths")
    factor = 2.0 if loop else 1.0
    # enumerate (m, j) by increasing frequency
    heap = [(factor * math.pi / L, 1, j) for j, L in enumerate(lengths)]
    entries = []
    import heapq
    heapq.heapify(heap)
    while len(entries) < num_modes:
        om, m, j = heapq.heappop(heap)
        entries.append((om, m, j))
        heapq.heappush(heap, (factor * (m + 1) * math.pi / lengths[j], m + 1, j))
    n_edges = lengths.size if loop else 2 * lengths.size
    modes = []
    labels = []
    for i, (om, m, j) in enumerate(entries):
        amps = np.zeros(n_edges)
        if loop:
            amps[j] = math.sqrt(2.0 / lengths[j])
        else:
            amps[2 * j] = 1.0 / math.sqrt(lengths[j])
            amps[2 * j + 1] = -amps[2 * j]
        modes.append(EigenMode(index=i + 1, lam=om * om, omega=om,
                               per_edge=[(float(a), TrigMode.SIN) for a in amps],
                               center_value=0.0))
        labels.append(m)
    single = lengths.size == 1
    edge_ids = [f"e{j+1}" for j in range(n_edges)]
    return SpectralBasis(modes=modes, lengths=(lengths if loop else np.repeat(lengths, 2)),
                         edge_ids=edge_ids,
                         gap_report=_gap_report([m.omega for m in modes]),
                         weyl_report=_weyl_report([m.lam for m in modes]),
                         int_labels=labels if single else None,
                         int_scale=(factor**2 * math.pi**2 / lengths[0]**2 if single else None),
                         family="loops" if loop else "paired_star")


# ---------------------------------------------------------------------------
# hypothesis validation

@dataclass
class SpectralHypothesesReport:
    weyl: tuple[float, float]
    gap: tuple[int, float]
    simplicity: bool
    center_decay_exponent: float
    center_min_product: float


def validate_spectral_hypotheses(basis: SpectralBasis, min_modes: int = 20) -> SpectralHypothesesReport:
    """Two-sided k^2 growth, sqrt-gap parameters, simplicity, center decay."""
    if len(basis) < min_modes:
        raise ValidationError(f"need at least {min_modes} modes, got {len(basis)}")
    lams = basis.eigenvalues
    rel = np.diff(lams) / np.maximum(np.abs(lams[1:]), 1e-300)
    simple = bool(np.all(rel > 1e-9))
    centers = np.array([abs(m.center_value) for m in basis.modes])
    ks = np.arange(1, len(basis) + 1)
    sel = centers > 0
    if sel.sum() >= 2:
        A = np.vstack([np.log(ks[sel]), np.ones(sel.sum())]).T
        slope, _ = np.linalg.lstsq(A, np.log(centers[sel]), rcond=None)[0]
        p_fit = -float(slope)
        min_prod = float(np.min(centers[sel] * ks[sel] ** p_fit))
    else:
        p_fit, min_prod = math.nan, 0.0
    return SpectralHypothesesReport(weyl=basis.weyl_report, gap=basis.gap_report,
                                    simplicity=simple,
                                    center_decay_exponent=p_fit,
                                    center_min_product=min_prod)
