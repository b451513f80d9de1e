"""Alternating minimization over the orthogonal group via Cayley retractions.

Minimizes the cross-term trace objective -2 tr(P_c^T K P_s) over pairs of
orthogonal matrices, where K is the feature cross kernel F_c U F_s^T. Each
half-step follows the curved path P(tau) = (I + tau/2 S)^-1 (I - tau/2 S) P
for the skew matrix S built from the Euclidean gradient, with a monotone
Armijo backtracking search along the path. The trial step grows after each
acceptance so the search can take large steps once the path flattens.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .affinity import NormalizedAffinity
from .errors import (
    ChannelMismatch,
    DimensionMismatch,
    NumericalFailure,
)
from .features import FeatureMap, ProjectionPair

__all__ = [
    "SolverConfig",
    "SolverReport",
    "Termination",
    "CrossKernel",
    "build_kernel",
    "objective_cross",
    "objective_full",
    "gradient_pc",
    "gradient_ps",
    "skew_step",
    "cayley_retract",
    "curvilinear_search",
    "SearchResult",
    "align",
    "procrustes_oracle",
]


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 100
    epsilon: float = 1e-6
    tau_init: float = 1e-2
    backtrack_factor: float = 0.5
    armijo_c1: float = 1e-4
    max_backtracks: int = 30

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.tau_init <= 0:
            raise ValueError("tau_init must be positive")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("backtrack_factor must be in (0, 1)")
        if not 0 < self.armijo_c1 < 1:
            raise ValueError("armijo_c1 must be in (0, 1)")
        if self.max_backtracks < 1:
            raise ValueError("max_backtracks must be >= 1")


class Termination(enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERATIONS = "MaxIterations"


@dataclass
class SolverReport:
    """Per-iteration traces of the alternating solve.

    Residual and orthogonality traces have one entry per convergence check
    (iterations_run + 1); objective, tau and stall traces have one entry
    per completed iteration, with the initial objective prepended to
    objective_trace.
    """

    iterations_run: int = 0
    objective_trace: list = field(default_factory=list)
    residual_c_trace: list = field(default_factory=list)
    residual_s_trace: list = field(default_factory=list)
    tau_trace: list = field(default_factory=list)
    stall_trace: list = field(default_factory=list)
    orthogonality_trace: list = field(default_factory=list)
    termination: Termination = Termination.MAX_ITERATIONS


@dataclass(frozen=True)
class CrossKernel:
    """Cached C x C product of content features, normalized affinity, style features."""

    k_matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.k_matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"kernel must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise DimensionMismatch("kernel contains non-finite entries")
        object.__setattr__(self, "k_matrix", m)

    @property
    def channels(self) -> int:
        return self.k_matrix.shape[0]


def build_kernel(
    content: FeatureMap, style: FeatureMap, na: NormalizedAffinity
) -> CrossKernel:
    if content.channels != style.channels:
        raise ChannelMismatch(
            f"content has {content.channels} channels, style {style.channels}"
        )
    if na.n_content != content.n_locations or na.n_style != style.n_locations:
        raise DimensionMismatch(
            f"affinity shape {na.u_cs.shape} does not match feature maps "
            f"({content.n_locations}, {style.n_locations})"
        )
    k = content.data @ (na.u_cs @ style.data.T)
    return CrossKernel(k)


def _check_pair_kernel(pair: ProjectionPair, kernel: CrossKernel):
    if pair.channels != kernel.channels:
        raise DimensionMismatch(
            f"projection dimension {pair.channels} != kernel dimension {kernel.channels}"
        )


def objective_cross(pair: ProjectionPair, kernel: CrossKernel) -> float:
    """-2 tr(P_c^T K P_s), the only non-constant term of the alignment objective."""
    _check_pair_kernel(pair, kernel)
    return _objective_cross_raw(pair.p_c, pair.p_s, kernel.k_matrix)


def _objective_cross_raw(p_c: np.ndarray, p_s: np.ndarray, k: np.ndarray) -> float:
    return -2.0 * float(np.sum(p_c * (k @ p_s)))


def objective_full(
    pair: ProjectionPair,
    content: FeatureMap,
    style: FeatureMap,
    na: NormalizedAffinity,
) -> float:
    """Full three-term trace objective; equals the weighted-pair distance sum."""
    if pair.channels != content.channels or content.channels != style.channels:
        raise DimensionMismatch(
            f"channel mismatch: pair={pair.channels} content={content.channels} "
            f"style={style.channels}"
        )
    z_c = pair.p_c.T @ content.data
    z_s = pair.p_s.T @ style.data
    t_c = float(np.sum(na.d_c * np.sum(z_c * z_c, axis=0)))
    t_s = float(np.sum(na.d_s * np.sum(z_s * z_s, axis=0)))
    cross = float(np.sum((z_c @ na.u_cs) * z_s))
    return t_c + t_s - 2.0 * cross


def gradient_pc(pair: ProjectionPair, kernel: CrossKernel) -> np.ndarray:
    """Euclidean gradient of the cross objective w.r.t. the content projection."""
    _check_pair_kernel(pair, kernel)
    return -2.0 * kernel.k_matrix @ pair.p_s


def gradient_ps(pair: ProjectionPair, kernel: CrossKernel) -> np.ndarray:
    """Euclidean gradient w.r.t. the style projection."""
    _check_pair_kernel(pair, kernel)
    return -2.0 * kernel.k_matrix.T @ pair.p_c


def skew_step(gradient: np.ndarray, p: np.ndarray) -> np.ndarray:
    """S = G P^T - P G^T, exactly skew-symmetric by construction."""
    if gradient.shape != p.shape:
        raise DimensionMismatch(
            f"gradient shape {gradient.shape} != projection shape {p.shape}"
        )
    a = gradient @ p.T
    return a - a.T


def cayley_retract(p: np.ndarray, s: np.ndarray, tau: float) -> np.ndarray:
    """Move along the Cayley curve: (I + tau/2 S)^-1 (I - tau/2 S) P.

    Orthogonality-preserving for skew S; the system matrix is always
    nonsingular since skew matrices have purely imaginary eigenvalues.
    """
    if p.shape != s.shape:
        raise DimensionMismatch(f"shapes differ: p {p.shape}, s {s.shape}")
    if tau == 0.0:
        return p.copy()
    n = p.shape[0]
    eye = np.eye(n)
    half = (tau / 2.0) * s
    lhs = eye + half
    rhs = (eye - half) @ p
    y = np.linalg.solve(lhs, rhs)
    resid = np.linalg.norm(lhs @ y - rhs)
    if resid > 1e-8 * max(1.0, np.linalg.norm(rhs)):
        raise NumericalFailure(f"Cayley solve residual {resid:.3e} exceeds tolerance")
    return y


@dataclass(frozen=True)
class SearchResult:
    tau: float
    p: np.ndarray
    objective: float
    stalled: bool


def curvilinear_search(
    p: np.ndarray,
    s: np.ndarray,
    evaluate,
    tau_init: float,
    config: SolverConfig,
) -> SearchResult:
    """Armijo backtracking along the Cayley curve.

    Accepts the largest tau = tau_init * factor^m (m <= max_backtracks)
    with evaluate(retracted) <= evaluate(p) - c1 * tau * ||S||_F^2 / 2.
    Returns tau = 0 with p unchanged when every trial fails (a stall, not
    an error).
    """
    f0 = evaluate(p)
    s_norm_sq = float(np.sum(s * s))
    if s_norm_sq == 0.0:
        return SearchResult(0.0, p, f0, False)
    tau = tau_init
    for _ in range(config.max_backtracks + 1):
        candidate = cayley_retract(p, s, tau)
        f_new = evaluate(candidate)
        if f_new <= f0 - config.armijo_c1 * tau * s_norm_sq / 2.0:
            return SearchResult(tau, candidate, f_new, False)
        tau *= config.backtrack_factor
    return SearchResult(0.0, p, f0, True)


def _orth_residual(p: np.ndarray) -> float:
    return float(np.linalg.norm(p.T @ p - np.eye(p.shape[0])))


def align(
    content: FeatureMap,
    style: FeatureMap,
    na: NormalizedAffinity,
    config: SolverConfig | None = None,
) -> tuple[ProjectionPair, SolverReport]:
    """Alternate Cayley-retraction updates of the two projections.

    Starts from the identity pair; each iteration updates the content
    projection, then the style projection against the updated one, and
    checks the stationarity residual ||G - P G^T P||_F of both gradients
    at the new iterates.
    """
    config = config or SolverConfig()
    kernel = build_kernel(content, style, na)
    k = kernel.k_matrix
    c = kernel.channels

    p_c = np.eye(c)
    p_s = np.eye(c)
    f = _objective_cross_raw(p_c, p_s, k)

    report = SolverReport()
    report.objective_trace.append(f)
    report.orthogonality_trace.append(max(_orth_residual(p_c), _orth_residual(p_s)))

    # independent trial steps for the two half-updates, grown on acceptance
    trial_c = config.tau_init
    trial_s = config.tau_init
    shrink_all = config.backtrack_factor ** config.max_backtracks

    t = 0
    while True:
        g_c = -2.0 * k @ p_s
        g_s = -2.0 * k.T @ p_c
        res_c = float(np.linalg.norm(g_c - p_c @ g_c.T @ p_c))
        res_s = float(np.linalg.norm(g_s - p_s @ g_s.T @ p_s))
        report.residual_c_trace.append(res_c)
        report.residual_s_trace.append(res_s)
        if res_c <= config.epsilon and res_s <= config.epsilon:
            report.termination = Termination.CONVERGED
            break
        if t >= config.max_iterations:
            report.termination = Termination.MAX_ITERATIONS
            break

        s_c = skew_step(g_c, p_c)
        result_c = curvilinear_search(
            p_c, s_c, lambda q: _objective_cross_raw(q, p_s, k), trial_c, config
        )
        p_c, f = result_c.p, result_c.objective
        if result_c.stalled:
            trial_c = max(trial_c * shrink_all, 1e-18)
        else:
            trial_c = result_c.tau / config.backtrack_factor

        g_s = -2.0 * k.T @ p_c
        s_s = skew_step(g_s, p_s)
        result_s = curvilinear_search(
            p_s, s_s, lambda q: _objective_cross_raw(p_c, q, k), trial_s, config
        )
        p_s, f = result_s.p, result_s.objective
        if result_s.stalled:
            trial_s = max(trial_s * shrink_all, 1e-18)
        else:
            trial_s = result_s.tau / config.backtrack_factor

        t += 1
        report.objective_trace.append(f)
        report.tau_trace.append((result_c.tau, result_s.tau))
        report.stall_trace.append((result_c.stalled, result_s.stalled))
        report.orthogonality_trace.append(
            max(_orth_residual(p_c), _orth_residual(p_s))
        )

    report.iterations_run = t
    return ProjectionPair(p_c, p_s), report


def procrustes_oracle(kernel: CrossKernel) -> tuple[np.ndarray, float]:
    """Closed-form optimum of the bilinear trace objective.

    Minimizing -2 tr(P_c^T K P_s) over orthogonal pairs is the orthogonal
    Procrustes problem: the optimum is -2 * (sum of singular values of K),
    attained when P_s P_c^T = V U^T for K = U Sigma V^T. With repeated or
    zero singular values the optimal transfer matrix is non-unique and only
    the objective value is a valid oracle.
    """
    u, sigma, vt = np.linalg.svd(kernel.k_matrix)
    transfer = (u @ vt).T
    return transfer, -2.0 * float(np.sum(sigma))
