"""Clustered exponential families, divided differences and moment problems.

Given an increasing frequency family nu with the windowed gap property
inf |nu_{k+M} - nu_k| >= delta * M, consecutive frequencies closer than
delta are grouped into clusters of size at most M-1.  Within each cluster
the upper-triangular divided-difference matrix

    F[j, k] = prod_{l <= k, l != j} (nu_j - nu_l)^{-1}   (j <= k, F[0,0] = 1)

recombines the raw exponentials e^{i nu t} into divided differences that
recover a Riesz basis on (0, T) once T > 2 pi / delta; the code verifies
that statement at finite rank through the extreme eigenvalues of the Gram
matrix.

The moment solver produces a real control u on (0, T) with prescribed
windowed Fourier coefficients at the shifted frequencies lambda_k -
lambda_1.  Realness is built in by mirroring the data to signed frequencies
with conjugate targets, exactly the symmetrization that makes the imaginary
part orthogonal to the whole family.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, ValidationError

MAX_MOMENT_SIZE = 512
CONDITION_LIMIT = 1e10


# ---------------------------------------------------------------------------
# cluster partitions

@dataclass
class ClusterPartition:
    frequencies: np.ndarray          # strictly increasing
    labels: np.ndarray               # integer labels (signed indexing supported)
    delta: float
    M: int
    clusters: list[tuple[int, int]]  # [start, end) positions

    @property
    def sizes(self) -> list[int]:
        return [e - s for s, e in self.clusters]

    def cluster_values(self, c: int) -> np.ndarray:
        s, e = self.clusters[c]
        return self.frequencies[s:e]

    def cluster_labels(self, c: int) -> np.ndarray:
        s, e = self.clusters[c]
        return self.labels[s:e]


def validate_gap_condition(freqs: np.ndarray, delta: float, M: int):
    """Check inf_k |nu_{k+M} - nu_k| >= delta * M over the truncation."""
    n = freqs.size
    if n > M:
        gaps = freqs[M:] - freqs[:-M]
        bad = np.nonzero(gaps < delta * M - 1e-12 * max(1.0, delta * M))[0]
        if bad.size:
            i = int(bad[0])
            raise ValidationError(
                f"window gap violated: nu[{i + M}] - nu[{i}] = {gaps[i]:.6g} < delta*M = {delta * M:.6g}")


def build_partition(frequencies, delta: float | None = None, M: int | None = None,
                    labels=None) -> ClusterPartition:
    """Greedy left-to-right clustering: cut whenever the next gap is >= delta.

    The pair (delta, M) is validated against the windowed gap condition and
    against the cluster-size bound (<= M-1 for M >= 2, singletons for M=1);
    when not supplied both are estimated from the data.
    """
    freqs = np.asarray(frequencies, dtype=float)
    if freqs.size == 0:
        raise ValidationError("frequency list is empty")
    if np.any(np.diff(freqs) <= 0):
        raise ValidationError("frequencies must be strictly increasing and pairwise distinct")
    if labels is None:
        labels = np.arange(1, freqs.size + 1)
    labels = np.asarray(labels, dtype=int)
    if labels.size != freqs.size:
        raise ValidationError("labels must match frequencies in length")

    if delta is None or M is None:
        delta, M = estimate_gap_parameters(freqs)
    if delta <= 0 or M < 1:
        raise ValidationError("delta must be positive and M >= 1")
    validate_gap_condition(freqs, delta, M)

    clusters = []
    start = 0
    for i in range(freqs.size - 1):
        if freqs[i + 1] - freqs[i] >= delta:
            clusters.append((start, i + 1))
            start = i + 1
    clusters.append((start, freqs.size))
    limit = 1 if M == 1 else M - 1
    for s, e in clusters:
        if e - s > limit:
            raise ValidationError(
                f"cluster {s}:{e} has size {e - s} > {limit} allowed for M = {M} "
                f"(frequencies {freqs[s]:.6g}..{freqs[e - 1]:.6g})")
    return ClusterPartition(frequencies=freqs, labels=labels, delta=float(delta),
                            M=int(M), clusters=clusters)


def estimate_gap_parameters(freqs: np.ndarray, m_max: int = 10) -> tuple[float, int]:
    """Smallest workable M (then largest delta) for the windowed gap condition.

    delta_M = min_k (nu_{k+M} - nu_k) / M is the largest delta valid for a
    given M.  M is feasible when the greedy clustering at delta_M respects
    the size bound; among feasible M the smallest one whose delta is at
    least half the best achievable is returned.
    """
    freqs = np.asarray(freqs, dtype=float)
    deltas = {}
    for M in range(1, m_max + 1):
        if freqs.size <= M:
            break
        deltas[M] = float(np.min(freqs[M:] - freqs[:-M]) / M)
    if not deltas:
        return (1.0, 1)
    best = max(deltas.values())
    for M, d in deltas.items():
        if d < 0.5 * best or d <= 0:
            continue
        sizes = _greedy_sizes(freqs, d)
        if max(sizes) <= (1 if M == 1 else M - 1):
            return (d, M)
    return (best, max(deltas, key=deltas.get))


def _greedy_sizes(freqs, delta):
    sizes, run = [], 1
    for g in np.diff(freqs):
        if g >= delta:
            sizes.append(run)
            run = 1
        else:
            run += 1
    sizes.append(run)
    return sizes


# ---------------------------------------------------------------------------
# divided differences

def dd_matrix(values: np.ndarray) -> np.ndarray:
    """Upper-triangular divided-difference matrix of one cluster."""
    v = np.asarray(values, dtype=float)
    n = v.size
    F = np.zeros((n, n))
    F[0, 0] = 1.0
    for k in range(n):
        for j in range(k + 1):
            prod = 1.0
            for l in range(k + 1):
                if l != j:
                    prod /= (v[j] - v[l])
            F[j, k] = prod
    return F


@dataclass
class DividedDifferenceSystem:
    partition: ClusterPartition
    horizon: float
    blocks: list[np.ndarray]
    gram: np.ndarray
    frame_bounds: tuple[float, float]
    trace_diag: list[float] = field(default_factory=list)

    @property
    def weights(self) -> np.ndarray:
        """Block-diagonal transpose action: xi = W^T e with W = blockdiag(F_m)."""
        n = self.partition.frequencies.size
        W = np.zeros((n, n))
        for (s, e), F in zip(self.partition.clusters, self.blocks):
            W[s:e, s:e] = F
        return W

    def dd_function(self, k: int):
        """xi_k as a callable of t (0-based position k)."""
        W = self.weights
        nu = self.partition.frequencies

        def xi(t):
            t = np.asarray(t, dtype=float)
            return sum(W[p, k] * np.exp(1j * nu[p] * t) for p in range(nu.size) if W[p, k] != 0.0)
        return xi


def exp_inner(omega: float, T: float) -> complex:
    """Integral over (0, T) of e^{i omega t}."""
    if omega == 0.0:
        return complex(T)
    return (cmath.exp(1j * omega * T) - 1.0) / (1j * omega)


def exponential_gram(freqs: np.ndarray, T: float) -> np.ndarray:
    """Hermitian Gram <e_p, e_q> = integral of e^{i (nu_q - nu_p) t}."""
    n = freqs.size
    E = np.empty((n, n), dtype=complex)
    for p in range(n):
        for q in range(p, n):
            v = exp_inner(freqs[q] - freqs[p], T)
            E[p, q] = v
            E[q, p] = v.conjugate()
    return E


def build_dd_system(partition: ClusterPartition, T: float) -> DividedDifferenceSystem:
    """Assemble the divided-difference family and its Gram frame bounds.

    The Riesz window requires T > 2 pi / delta; equality is admitted (up to
    rounding) since the finite truncation is still well conditioned there
    (e.g. orthogonal integer-lattice exponentials at exactly one period).
    """
    if T < (2 * math.pi / partition.delta) * (1.0 - 1e-12):
        raise ValidationError(
            f"horizon T = {T:.6g} too small: the Riesz-basis window requires "
            f"T > 2 pi / delta = {2 * math.pi / partition.delta:.6g}")
    blocks = [dd_matrix(partition.cluster_values(c)) for c in range(len(partition.clusters))]
    for F in blocks:
        if np.any(np.abs(np.diag(F)) == 0.0):
            raise NumericalError("divided-difference block is singular")
    n = partition.frequencies.size
    W = np.zeros((n, n))
    for (s, e), F in zip(partition.clusters, blocks):
        W[s:e, s:e] = F
    E = exponential_gram(partition.frequencies, T)
    G = W.T @ E @ W
    G = 0.5 * (G + G.conj().T)
    eigs = np.linalg.eigvalsh(G)
    traces = [float(np.sum(F * F)) for F in blocks]
    return DividedDifferenceSystem(partition=partition, horizon=float(T), blocks=blocks,
                                   gram=G, frame_bounds=(float(eigs[0]), float(eigs[-1])),
                                   trace_diag=traces)


@dataclass
class TraceBoundReport:
    per_cluster: list[tuple[float, int, float]]      # (trace, min |label|, ratio), sqrt scale
    sup_ratio: float
    theta_per_cluster: list[tuple[float, int, float]]
    theta_sup_ratio: float
    fitted_slope: float
    dtilde: float


def check_trace_bounds(system: DividedDifferenceSystem, dtilde: float) -> TraceBoundReport:
    """Trace growth of the blocks against min |label|^(2(1+d)) (and the
    squared-frequency blocks against min |label|^(2d))."""
    if dtilde < 0:
        raise ValidationError("dtilde must be >= 0")
    part = system.partition
    rows, theta_rows = [], []
    for c, F in enumerate(system.blocks):
        lab = int(np.min(np.abs(part.cluster_labels(c))))
        tr = float(np.sum(F * F))
        rows.append((tr, lab, tr / lab ** (2 * (1 + dtilde))))
        nu = part.cluster_values(c)
        theta = np.sign(nu) * nu ** 2
        Ft = dd_matrix(theta)
        trt = float(np.sum(Ft * Ft))
        theta_rows.append((trt, lab, trt / max(lab ** (2 * dtilde), 1e-300)))
    labs = np.array([r[1] for r in rows], dtype=float)
    ratios = np.array([r[2] for r in rows])
    if labs.size >= 2 and np.all(ratios > 0):
        A = np.vstack([np.log(labs), np.ones(labs.size)]).T
        slope = float(np.linalg.lstsq(A, np.log(ratios), rcond=None)[0][0])
    else:
        slope = math.nan
    return TraceBoundReport(per_cluster=rows, sup_ratio=float(max(r[2] for r in rows)),
                            theta_per_cluster=theta_rows,
                            theta_sup_ratio=float(max(r[2] for r in theta_rows)),
                            fitted_slope=slope, dtilde=dtilde)


# ---------------------------------------------------------------------------
# moment problem

@dataclass
class MomentSolution:
    horizon: float
    dictionary: list[tuple[float, str]]   # (frequency, "const" | "cos" | "sin")
    coefficients: np.ndarray              # real coefficients over the dictionary
    residuals: np.ndarray                 # complex, per target equation
    gram_condition: float
    imag_moment_defect: float
    mode: str

    def control(self, t):
        """Evaluate the reconstructed real control."""
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for (freq, kind), c in zip(self.dictionary, self.coefficients):
            if kind == "const":
                out = out + c
            elif kind == "cos":
                out = out + c * np.cos(freq * t)
            else:
                out = out + c * np.sin(freq * t)
        return out

    def samples(self, n: int):
        t = np.linspace(0.0, self.horizon, n)
        return t, self.control(t)

    @property
    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residuals)))


def _moment_row(alpha: float, freq: float, T: float) -> tuple[complex, complex]:
    """Closed-form moments of (cos(freq t), sin(freq t)) against e^{i alpha t}."""
    plus = exp_inner(alpha + freq, T)
    minus = exp_inner(alpha - freq, T)
    return 0.5 * (plus + minus), (plus - minus) / 2j


def solve_moment(lambdas, x, T: float, mode: str = "direct",
                 delta: float | None = None, M: int | None = None) -> MomentSolution:
    """Real control u on (0, T) with integral of u e^{i (lambda_k - lambda_1) t} = x_k.

    The control is represented over the real dictionary {1} U {cos, sin} at
    the shifted frequencies; the resulting square linear system is solved
    directly, or (mode "dd_preconditioned") after recombining the equations
    and the dictionary per cluster with the divided-difference blocks of the
    signed frequency family, which tames the conditioning when frequencies
    cluster.
    """
    lam = np.asarray(lambdas, dtype=float)
    x = np.asarray(x, dtype=complex)
    K = lam.size
    if x.size != K:
        raise ValidationError("lambdas and targets must have equal length")
    if K < 1 or K > MAX_MOMENT_SIZE:
        raise ValidationError(f"moment problem size must be in 1..{MAX_MOMENT_SIZE}")
    if abs(x[0].imag) > 1e-12 * max(1.0, abs(x[0])):
        raise ValidationError("x_1 must be real (tangent-space condition)")
    if np.any(np.diff(lam) <= 0):
        raise ValidationError("frequencies must be strictly increasing (duplicates are infeasible)")
    alpha = lam - lam[0]

    if mode == "direct":
        coeffs, resid, cond = _solve_direct(alpha, x, T)
        defect = 0.0  # real dictionary with real coefficients: Im u vanishes identically
        dictionary = _dictionary(alpha)
        sol = MomentSolution(horizon=T, dictionary=dictionary, coefficients=coeffs,
                             residuals=resid, gram_condition=cond,
                             imag_moment_defect=defect, mode=mode)
    elif mode == "dd_preconditioned":
        sol = _solve_dd(alpha, x, T, delta, M)
    else:
        raise ValidationError(f"unknown mode {mode!r}")
    if sol.gram_condition > CONDITION_LIMIT:
        raise NumericalError(
            f"moment system condition {sol.gram_condition:.3g} above {CONDITION_LIMIT:.0e}; "
            f"increase T (the Riesz window needs T > 2 pi / delta)")
    return sol


def _dictionary(alpha):
    dictionary = [(0.0, "const")]
    for a in alpha[1:]:
        dictionary.append((float(a), "cos"))
        dictionary.append((float(a), "sin"))
    return dictionary


def _assemble_real_system(alpha, T):
    """Rows: Re/Im of the moment equations; columns: the real dictionary."""
    K = alpha.size
    n = 2 * K - 1
    A = np.zeros((n, n))

    def fill_row(r_re, r_im, alpha_k):
        col = 0
        const = exp_inner(alpha_k, T)
        A[r_re, col] = const.real
        if r_im is not None:
            A[r_im, col] = const.imag
        col += 1
        for a in alpha[1:]:
            mc, ms = _moment_row(alpha_k, a, T)
            A[r_re, col], A[r_re, col + 1] = mc.real, ms.real
            if r_im is not None:
                A[r_im, col], A[r_im, col + 1] = mc.imag, ms.imag
            col += 2

    fill_row(0, None, alpha[0])
    for k in range(1, K):
        fill_row(2 * k - 1, 2 * k, alpha[k])
    return A


def _solve_direct(alpha, x, T):
    K = alpha.size
    A = _assemble_real_system(alpha, T)
    b = np.zeros(2 * K - 1)
    b[0] = x[0].real
    for k in range(1, K):
        b[2 * k - 1] = x[k].real
        b[2 * k] = x[k].imag
    cond = float(np.linalg.cond(A))
    try:
        coeffs = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"moment system singular: {exc}")
    resid = _moment_residuals(alpha, x, T, coeffs)
    return coeffs, resid, cond


def _moment_residuals(alpha, x, T, coeffs):
    K = alpha.size
    resid = np.empty(K, dtype=complex)
    for k in range(K):
        acc = coeffs[0] * exp_inner(alpha[k], T)
        col = 1
        for a in alpha[1:]:
            mc, ms = _moment_row(alpha[k], a, T)
            acc += coeffs[col] * mc + coeffs[col + 1] * ms
            col += 2
        resid[k] = acc - x[k]
    return resid


def _solve_dd(alpha, x, T, delta, M):
    """Signed-frequency complex solve, row/column preconditioned per cluster.

    The signed family is alpha_{-k} = -alpha_k with conjugate targets (the
    zero frequency enters once); the system A d = x with A[p, q] = integral
    of e^{i (alpha_p + alpha_q) t} is transformed to (W A W^T) y = W x with
    W the block-diagonal divided-difference matrix, and d = W^T y.
    """
    K = alpha.size
    signed = np.concatenate([-alpha[:0:-1], alpha])      # ascending, 2K-1 entries
    labels = np.concatenate([-np.arange(K, 1, -1), np.arange(1, K + 1)])
    xt = np.concatenate([np.conj(x[:0:-1]), x])
    part = build_partition(signed, delta, M, labels=labels)
    system = build_dd_system(part, T)
    W = system.weights
    n = signed.size
    A = np.empty((n, n), dtype=complex)
    for p in range(n):
        for q in range(p, n):
            v = exp_inner(signed[p] + signed[q], T)
            A[p, q] = A[q, p] = v
    Ap = W @ A @ W.T
    cond = float(np.linalg.cond(Ap))
    try:
        y = np.linalg.solve(Ap, W @ xt)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"preconditioned moment system singular: {exc}")
    d = W.T @ y

    # collapse e^{+-i a t} pairs onto the real dictionary
    coeffs = np.zeros(2 * K - 1)
    pos = {int(l): i for i, l in enumerate(labels)}
    coeffs[0] = d[pos[1]].real
    for k in range(2, K + 1):
        dk, dmk = d[pos[k]], d[pos[-k]]
        coeffs[2 * k - 3] = (dk + dmk).real
        coeffs[2 * k - 2] = (dmk - dk).imag
    # moment functionals of Im(u) against every dictionary frequency
    defect = _imag_moment_defect(signed, d, T)
    resid = _moment_residuals(alpha, x, T, coeffs)
    return MomentSolution(horizon=T, dictionary=_dictionary(alpha), coefficients=coeffs,
                          residuals=resid, gram_condition=cond,
                          imag_moment_defect=defect, mode="dd_preconditioned")


def _imag_moment_defect(signed, d, T):
    """max_k | integral of Im(u) e^{i alpha_k t} | for u = sum d_q e^{i alpha_q t}."""
    # Im u = (u - conj u) / 2i has coefficients (d_q - conj(d_{q'}))/2i on e^{i a_q}
    # against the mirrored index q'; evaluate directly on the exponential family.
    n = signed.size
    worst = 0.0
    conj_coeff = np.zeros(n, dtype=complex)
    for q in range(n):
        mirror = np.nonzero(np.isclose(signed, -signed[q], rtol=0, atol=1e-12))[0]
        if mirror.size:
            conj_coeff[q] = np.conj(d[mirror[0]])
    im_coeff = (d - conj_coeff) / 2j
    for k in range(n):
        acc = sum(im_coeff[q] * exp_inner(signed[k] + signed[q], T) for q in range(n))
        worst = max(worst, abs(acc))
    return float(worst)


def verify_biorthogonality(system: DividedDifferenceSystem) -> tuple[float, float]:
    """Deviation of the finite-rank biorthogonal family from exactness.

    Returns (max |<xi_j, u_k> - delta_jk|, max |<w_k, e_j> - delta_kj|) where
    u is the Gram-inverse family in span(Xi) and w = F(v) u is its image
    biorthogonal to the raw exponentials.
    """
    G = system.gram
    n = G.shape[0]
    if n > 256:
        raise ValidationError("biorthogonality check capped at 256 functions")
    try:
        Ginv = np.linalg.inv(G)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"Gram matrix numerically singular: {exc}")
    dev1 = float(np.max(np.abs(G @ Ginv - np.eye(n))))

    # w_k = sum_m F[k, m] u_m biorthogonal to e_j: test on the raw Gram
    part = system.partition
    W = system.weights
    E = exponential_gram(part.frequencies, system.horizon)
    # <u_m, e_j>: u_m = sum_q Ginv[q, m] xi_q, xi in e-coords via W
    U_e = W @ Ginv                       # e-coordinates of the u family (columns)
    inner_ue = U_e.conj().T @ E          # <u_m, e_j>
    Wf = np.zeros((n, n))
    for (s, e), F in zip(part.clusters, system.blocks):
        Wf[s:e, s:e] = F
    inner_we = Wf @ inner_ue             # rows: w_k against e_j
    dev2 = float(np.max(np.abs(inner_we - np.eye(n))))
    return dev1, dev2
