"""First-variation calculus for supports: smooth bump vector fields, transport
v_t(x) = v(x + t Phi(x)), Hadamard terms, the multiplier estimator, penalty
bracket estimates, truncations and the coercivity check."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage

from .domain import BallSpec, GridDomain, ball_inside_domain, ball_support
from .spectral import edge_differences, j_energy, smallest_eigenpair

MODES = ("dilation", "translation", "random_smooth")


# ---------------------------------------------------------------------------
# smooth cutoff and generators


def bump(s: np.ndarray) -> np.ndarray:
    """eta(s) = exp(1 - 1/(1 - s^2)) for |s| < 1, else 0; eta(0) = 1."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


def _bump_grad_factor(s: np.ndarray) -> np.ndarray:
    """k(s) with grad eta(|x - x0|/r) = k(s) (x - x0) / r^2."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    q = 1.0 - s[inside] ** 2
    out[inside] = -2.0 * np.exp(1.0 - 1.0 / q) / (q * q)
    return out


@dataclass(frozen=True, eq=False)
class PerturbationField:
    """Phi = eta(|x - x0|/r) g(x) with a polynomial generator

        g(x) = c + r B xi + r [xi^T Q_0 xi, xi^T Q_1 xi],   xi = (x - x0)/r.

    Grid samples of Phi, D Phi and div Phi come from the closed form.
    """

    domain: GridDomain
    ball: BallSpec
    mode: str
    c: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    values: np.ndarray
    jacobian: np.ndarray
    divergence: np.ndarray
    jac_bound: float
    max_norm: float

    def at(self, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Phi (..., 2) and D Phi (..., 2, 2) at arbitrary points."""
        return _evaluate(self.ball, self.c, self.B, self.Q, x, y)


def _evaluate(ball, c, B, Q, x, y):
    r = ball.radius
    dx = np.asarray(x, dtype=float) - ball.center[0]
    dy = np.asarray(y, dtype=float) - ball.center[1]
    xi = np.stack([dx, dy], axis=-1) / r
    s = np.hypot(dx, dy) / r
    eta = bump(s)
    k = _bump_grad_factor(s)
    quad = np.einsum("...i,kij,...j->...k", xi, Q, xi)
    g = c + r * (xi @ B.T) + r * quad
    # d g_k / d x_l = B_kl + 2 (Q_k xi)_l
    dg = B + 2.0 * np.einsum("kij,...j->...ki", Q, xi)
    grad_eta = (k / r)[..., None] * xi
    phi = eta[..., None] * g
    dphi = g[..., :, None] * grad_eta[..., None, :] + eta[..., None, None] * dg
    return phi, dphi


def _generator(mode: str, seed: int):
    if mode == "dilation":
        return np.zeros(2), np.eye(2), np.zeros((2, 2, 2))
    if mode == "translation":
        rng = np.random.default_rng(seed)
        ang = rng.uniform(0.0, 2.0 * math.pi)
        return np.array([math.cos(ang), math.sin(ang)]), np.zeros((2, 2)), np.zeros((2, 2, 2))
    if mode == "random_smooth":
        rng = np.random.default_rng(seed)
        c = 0.2 * rng.standard_normal(2)
        B = np.eye(2) + 0.3 * rng.standard_normal((2, 2))
        Q = 0.2 * rng.standard_normal((2, 2, 2))
        Q = 0.5 * (Q + Q.transpose(0, 2, 1))
        return c, B, Q
    raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")


def make_bump_field(
    domain: GridDomain, ball: BallSpec, mode: str = "dilation", seed: int = 0
) -> PerturbationField:
    """Bump field localized in ``ball``; the ball must keep 2h from the edge
    of D.  ``translation`` uses a seeded unit direction."""
    if not ball_inside_domain(domain, ball, margin=2.0 * domain.h):
        raise ValueError("perturbation not compactly supported")
    c, B, Q = _generator(mode, seed)
    X, Y = domain.centers()
    phi, dphi = _evaluate(ball, c, B, Q, X, Y)
    div = dphi[..., 0, 0] + dphi[..., 1, 1]
    # sup of the closed-form Jacobian over a fine polar lattice of the ball
    rr, th = np.meshgrid(np.linspace(0, 1, 257)[:-1], np.linspace(0, 2 * math.pi, 256))
    px = ball.center[0] + ball.radius * rr * np.cos(th)
    py = ball.center[1] + ball.radius * rr * np.sin(th)
    pv, pd = _evaluate(ball, c, B, Q, px, py)
    jac_bound = float(np.linalg.norm(pd, ord=2, axis=(-2, -1)).max())
    max_norm = float(np.linalg.norm(pv, axis=-1).max())
    for a in (phi, dphi, div):
        a.setflags(write=False)
    return PerturbationField(
        domain, ball, mode, c, B, Q, phi, dphi, div, jac_bound, max_norm
    )


def cutoff_field(domain: GridDomain, ball: BallSpec) -> np.ndarray:
    """eta(|x - x0|/r) on the grid, a nonnegative cutoff supported in the ball."""
    X, Y = domain.centers()
    return bump(np.hypot(X - ball.center[0], Y - ball.center[1]) / ball.radius)


# ---------------------------------------------------------------------------
# transport


def _check_t(phi: PerturbationField, t: float):
    if abs(t) * phi.jac_bound >= 0.5:
        raise ValueError("transport not injective")


def transport_field(v: np.ndarray, phi: PerturbationField, t: float) -> np.ndarray:
    """v_t(x) = v(x + t Phi(x)) by bilinear interpolation, v extended by zero
    outside the grid; the result is zeroed outside D."""
    _check_t(phi, t)
    if t == 0:
        return v.copy()
    d = phi.domain
    X, Y = d.centers()
    px = (X + t * phi.values[..., 0] - d.origin[0]) / d.h
    py = (Y + t * phi.values[..., 1] - d.origin[1]) / d.h
    out = ndimage.map_coordinates(v, [px, py], order=1, mode="constant", cval=0.0)
    out[~d.mask] = 0.0
    return out


def subcell_volume(v: np.ndarray, h: float, rel_threshold: float = 1e-12) -> float:
    """|{v > 0}| from cell counting plus a correction per boundary face.

    Across each face between a positive cell p and a zero cell, the zero
    crossing x* (measured from p toward the zero cell) is extrapolated
    linearly from p and the positive cell behind it, clipped to [0, 2h];
    the face then contributes (x* - h/2) h.  Faces without a decreasing
    profile contribute 0.
    """
    vmax = float(np.max(np.abs(v))) if v.size else 0.0
    if vmax == 0.0:
        return 0.0
    pos = v > rel_threshold * vmax
    w = np.where(pos, v, 0.0)
    vol = float(pos.sum()) * h * h
    p = np.pad(w, 2)
    pp = np.pad(pos, 2)
    core = (slice(2, -2), slice(2, -2))
    corr = 0.0
    for axis in (0, 1):
        for step in (1, -1):
            out = np.roll(pp, -step, axis=axis)[core]
            back = np.roll(p, step, axis=axis)[core]
            back_pos = np.roll(pp, step, axis=axis)[core]
            here = p[core]
            face = pos & ~out & back_pos & (back > here)
            xs = here[face] * h / (back[face] - here[face])
            corr += float(np.sum(np.clip(xs, 0.0, 2.0 * h) - 0.5 * h)) * h
    return vol + corr


def cell_gradient(u: np.ndarray, cells: np.ndarray, h: float) -> np.ndarray:
    """Per-cell gradient (nx, ny, 2): centered where both axis neighbors lie in
    ``cells``, one-sided into the support where one of them does not, zero
    off the support."""
    w = np.where(cells, u, 0.0)
    g = np.zeros(u.shape + (2,))
    pw = np.pad(w, 1)
    pc = np.pad(cells, 1)
    for axis in (0, 1):
        fwd = np.roll(pw, -1, axis=axis)[1:-1, 1:-1]
        bwd = np.roll(pw, 1, axis=axis)[1:-1, 1:-1]
        fin = np.roll(pc, -1, axis=axis)[1:-1, 1:-1]
        bin_ = np.roll(pc, 1, axis=axis)[1:-1, 1:-1]
        d = np.where(fin & bin_, (fwd - bwd) / (2 * h), 0.0)
        d = np.where(fin & ~bin_, (fwd - w) / h, d)
        d = np.where(~fin & bin_, (w - bwd) / h, d)
        g[..., axis] = np.where(cells, d, 0.0)
    return g


def hadamard_terms(
    u: np.ndarray, cells: np.ndarray, lambda_ref: float, phi: PerturbationField
) -> tuple[float, float]:
    """First variations (dJ, dVol) of J and of the support volume along Phi."""
    h2 = phi.domain.h ** 2
    g = cell_gradient(u, cells, phi.domain.h)
    D = phi.jacobian
    div = phi.divergence
    dphi_g = np.einsum("...kl,...l->...k", D, g)
    integrand = 2.0 * np.sum(dphi_g * g, axis=-1) - np.sum(g * g, axis=-1) * div
    integrand += lambda_ref * u * u * div
    dJ = float(np.sum(np.where(cells, integrand, 0.0))) * h2
    dvol = -float(np.sum(np.where(cells, div, 0.0))) * h2
    return dJ, dvol


def lambda_from_euler_lagrange(
    u: np.ndarray, cells: np.ndarray, lambda_ref: float, phi: PerturbationField
) -> float:
    """Multiplier estimate dJ / (-dVol) = dJ / int_{Omega_u} div Phi."""
    dJ, dvol = hadamard_terms(u, cells, lambda_ref, phi)
    ball_area = math.pi * phi.ball.radius**2
    if abs(dvol) <= 1e-6 * float(np.abs(phi.divergence).max()) * ball_area:
        raise ValueError("divergence-neutral field")
    return dJ / (-dvol)


def _inverse_map(phi: PerturbationField, t: float, X, Y):
    """Solve x + t Phi(x) = y by fixed-point iteration (a contraction since
    |t| sup|D Phi| < 1/2)."""
    x, y = X.copy(), Y.copy()
    for _ in range(100):
        p, _ = phi.at(x, y)
        nx_, ny_ = X - t * p[..., 0], Y - t * p[..., 1]
        delta = max(float(np.abs(nx_ - x).max()), float(np.abs(ny_ - y).max()))
        x, y = nx_, ny_
        if delta <= 1e-15 * max(1.0, phi.ball.radius):
            break
    return x, y


@dataclass(frozen=True)
class TransportExpansion:
    t: float
    volume_t: float
    volume_linear_prediction: float
    j_t: float
    j_linear_prediction: float


def transported_energy(
    u: np.ndarray, cells: np.ndarray, lambda_ref: float, phi: PerturbationField, t: float
) -> TransportExpansion:
    """J and support volume of u_t by exact change of variables y = x + t Phi(x).

    Gradients and values of u stay on the grid; only the Jacobian factors
    move, so

        J(u_t)     = sum [ |(I + t DPhi)^T g|^2 - lambda u^2 ] / det(I + t DPhi) h^2
        |Omega_t|  = sum_{Omega_u} h^2 / det(I + t DPhi)

    with DPhi evaluated at the preimage of each cell center.  The t-derivative
    at 0 is exactly the pair returned by ``hadamard_terms``.
    """
    _check_t(phi, t)
    d = phi.domain
    h2 = d.h**2
    g = cell_gradient(u, cells, d.h)
    idx = np.nonzero(cells)
    X, Y = d.centers()
    xs, ys = _inverse_map(phi, t, X[idx], Y[idx])
    _, D = phi.at(xs, ys)
    M = np.eye(2) + t * D
    det = M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
    gc = g[idx]
    mg = np.einsum("...lk,...l->...k", M, gc)
    uc = u[idx]
    j_t = float(np.sum((np.sum(mg * mg, axis=-1) - lambda_ref * uc * uc) / det)) * h2
    vol_t = float(np.sum(1.0 / det)) * h2
    j0 = float(np.sum(np.sum(gc * gc, axis=-1) - lambda_ref * uc * uc)) * h2
    vol0 = float(len(uc)) * h2
    dJ, dvol = hadamard_terms(u, cells, lambda_ref, phi)
    return TransportExpansion(t, vol_t, vol0 + t * dvol, j_t, j0 + t * dJ)


def first_order_remainders(
    u: np.ndarray, cells: np.ndarray, lambda_ref: float, phi: PerturbationField, ts: Sequence[float]
) -> np.ndarray:
    """|J(u_t) - J(u) - t dJ| for each t."""
    return np.array(
        [abs(e.j_t - e.j_linear_prediction) for e in
         (transported_energy(u, cells, lambda_ref, phi, t) for t in ts)]
    )


# ---------------------------------------------------------------------------
# truncation and penalty brackets


def truncation_perturbation(u: np.ndarray, zeta: np.ndarray, eps: float) -> np.ndarray:
    """max(u - eps zeta, 0)."""
    if np.any(zeta < 0):
        raise ValueError("zeta must be nonnegative")
    if eps == 0:
        return u.copy()
    return np.maximum(u - eps * zeta, 0.0)


@dataclass(frozen=True)
class FamilySpec:
    """Near-optimal comparison family localized in one ball: transport
    ladders t = +-2^-k t0 per mode, and truncations max(u - eps eta, 0)."""

    ball: BallSpec
    modes: tuple = ("dilation",)
    t0: Optional[float] = None
    ks: tuple = (4, 5, 6, 7, 8, 9)
    truncation_eps: tuple = ()


@dataclass(frozen=True)
class BracketEstimate:
    h: float
    mu_minus_ub: float
    mu_plus_lb: float
    lambda_ref: float
    family_size: int
    ratios: list = field(default_factory=list)


def estimate_bracket(
    domain: GridDomain,
    u: np.ndarray,
    cells: np.ndarray,
    lambda_ref: float,
    h_window: float,
    family: FamilySpec,
    seed: int = 0,
) -> BracketEstimate:
    """Empirical one-sided bounds on the penalty bracket at window ``h_window``.

    ``lambda_ref`` is the eigenvalue used inside J.  Ratio rows are
    (kind, mode, parameter, side, volume delta, energy delta, ratio), with
    side -1 for volumes in [a - h, a) and +1 for (a, a + h].  Transport
    members use the change-of-variables J; truncations use ``j_energy``.
    The Euler-Lagrange multiplier for the first mode is stored in
    ``lambda_ref`` of the result.
    """
    h2 = domain.h**2
    a = float(cells.sum()) * h2
    rows = []
    lam_el = None
    for m, mode in enumerate(family.modes):
        phi = make_bump_field(domain, family.ball, mode, seed=seed + m)
        if lam_el is None:
            lam_el = lambda_from_euler_lagrange(u, cells, lambda_ref, phi)
        t0 = family.t0 if family.t0 is not None else 0.45 / phi.jac_bound
        for k in family.ks:
            for sign in (1.0, -1.0):
                t = sign * t0 * 2.0**-k
                e = transported_energy(u, cells, lambda_ref, phi, t)
                j0 = e.j_linear_prediction - t * hadamard_terms(u, cells, lambda_ref, phi)[0]
                rows.append(_ratio_row("transport", mode, t, a, e.volume_t, e.j_t - j0, h_window))
    if family.truncation_eps:
        zeta = cutoff_field(domain, family.ball)
        j_u = j_energy(domain, u, lambda_ref).j
        for eps in family.truncation_eps:
            v = truncation_perturbation(u, zeta, eps)
            vol = float((v > 0).sum()) * h2
            dj = j_energy(domain, v, lambda_ref).j - j_u
            rows.append(_ratio_row("truncation", "eta", eps, a, vol, dj, h_window))
    rows = [r for r in rows if r is not None]
    minus = [r[6] for r in rows if r[3] < 0]
    plus = [r[6] for r in rows if r[3] > 0]
    missing = [name for name, s in (("minus", minus), ("plus", plus)) if not s]
    if missing:
        raise ValueError(f"empty family on the {' and '.join(missing)} side")
    return BracketEstimate(
        h=h_window,
        mu_minus_ub=max(0.0, min(minus)),
        mu_plus_lb=max(0.0, max(plus)),
        lambda_ref=float(lam_el) if lam_el is not None else float("nan"),
        family_size=len(rows),
        ratios=rows,
    )


def ladder_errors(estimate: BracketEstimate) -> dict:
    """Per volume side, (|t|, |ratio/Lambda_EL - 1|) of the transport rows,
    coarsest t first.  Lambda_EL is ``estimate.lambda_ref``."""
    ref = estimate.lambda_ref
    out: dict = {}
    for kind, _, t, side, _, _, ratio in estimate.ratios:
        if kind == "transport":
            out.setdefault(side, []).append((abs(t), abs(ratio / ref - 1.0)))
    return {side: sorted(v, reverse=True) for side, v in sorted(out.items())}


def _ratio_row(kind, mode, param, a, vol, dj, window):
    dv = vol - a
    if -window <= dv < 0:
        return (kind, mode, param, -1, dv, dj, dj / (-dv))
    if 0 < dv <= window:
        return (kind, mode, param, 1, dv, dj, max(-dj, 0.0) / dv)
    return None


# ---------------------------------------------------------------------------
# coercivity


@dataclass(frozen=True)
class CoercivityReport:
    c_explicit: float
    lambda_ball: float
    margins: np.ndarray
    violations: int

    @property
    def min_margin(self) -> float:
        return float(self.margins.min())


def _split_energy(w: np.ndarray, inside: np.ndarray) -> tuple[float, float]:
    """Edge energy split into edges touching ``inside`` and edges with both
    endpoints outside it."""
    dx, dy = edge_differences(w)
    pin = np.pad(inside, 1)
    tx = pin[:-1, 1:-1] | pin[1:, 1:-1]
    ty = pin[1:-1, :-1] | pin[1:-1, 1:]
    e_in = float(np.sum(dx[tx] ** 2) + np.sum(dy[ty] ** 2))
    e_out = float(np.sum(dx[~tx] ** 2) + np.sum(dy[~ty] ** 2))
    return e_in, e_out


def coercivity_check(
    domain: GridDomain,
    u: np.ndarray,
    lambda_a: float,
    ball: BallSpec,
    trial_count: int = 100,
    seed: int = 0,
) -> CoercivityReport:
    """Test J(v) >= 1/2 int_B |grad v|^2 - C on random v equal to u off B.

    C = |int_{D\\B} (|grad u|^2 - lambda u^2)| + 2 lambda |u|^2_{L2(B)}
        + 4 lambda |grad u|^2_{L2(B)} / lambda_1(B),
    which bounds J from below once lambda_1(B) >= 8 lambda.
    """
    h = domain.h
    h2 = h * h
    bsup = ball_support(domain, ball)
    inside = bsup.cells
    lam_b = smallest_eigenpair(domain, bsup, tol=1e-10).lam
    if lam_b < max(1.0, 8.0 * lambda_a):
        raise ValueError("R too large for λ_a")
    u = np.where(domain.mask, u, 0.0)
    grad_in, grad_out = _split_energy(u, inside)
    mass_in = float(np.sum(u[inside] ** 2)) * h2
    mass_out = float(np.sum(u[~inside] ** 2)) * h2
    c_exp = abs(grad_out - lambda_a * mass_out) + 2 * lambda_a * mass_in
    c_exp += 4 * lambda_a * grad_in / lam_b
    rng = np.random.default_rng(seed)
    X, Y = domain.centers()
    xi = (X - ball.center[0]) / ball.radius
    yi = (Y - ball.center[1]) / ball.radius
    cut = bump(np.hypot(xi, yi))
    umax = float(np.abs(u).max()) or 1.0
    margins = np.empty(trial_count)
    for n in range(trial_count):
        noise = np.zeros_like(u)
        for _ in range(4):
            kx, ky = rng.integers(1, 6, size=2)
            ph = rng.uniform(0, 2 * math.pi, size=2)
            noise += rng.standard_normal() * np.cos(kx * math.pi * xi + ph[0]) * np.cos(
                ky * math.pi * yi + ph[1]
            )
        amp = umax * 10.0 ** rng.uniform(-2.0, 2.0)
        v = u + np.where(inside, amp * cut * noise, 0.0)
        jv = j_energy(domain, v, lambda_a).j
        e_in, _ = _split_energy(v, inside)
        margins[n] = jv - (0.5 * e_in - c_exp)
    return CoercivityReport(c_exp, lam_b, margins, int(np.sum(margins < 0)))


def ball_radius_for(domain: GridDomain, center, lambda_a: float, r_max: float) -> float:
    """Largest radius on a halving ladder from ``r_max`` whose discrete ball
    satisfies lambda_1(B) >= max(1, 8 lambda_a)."""
    r = r_max
    while r >= 2 * domain.h:
        sup = ball_support(domain, BallSpec(tuple(center), r))
        if smallest_eigenpair(domain, sup, tol=1e-8).lam >= max(1.0, 8.0 * lambda_a):
            return r
        r *= 0.5 ** 0.25
    raise ValueError("R too large for λ_a")
