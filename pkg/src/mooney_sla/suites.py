"""Randomized and end-to-end verification suites.

Each suite compares the production code against an independent route (see
:mod:`oracles`) and returns a :class:`SuiteResult`.  They back the ``verify``
command and the acceptance tests; every random draw comes from a seeded
``numpy`` generator so results are reproducible.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import coercivity, oracles
from .constitutive import MaterialParams, QuadPointState, cauchy_stress
from .errors import CertificationError
from .fem_assembly import assemble, build_dofmap
from .sla_driver import element_gradients, equilibrium_config, patch_config, pure_shear_config, run

__all__ = [
    "SuiteResult",
    "SUITES",
    "run_suite",
    "random_params",
    "random_certified_points",
    "quadform_suite",
    "psd_suite",
    "soundness_suite",
    "linearization_suite",
    "patch_suite",
    "pure_shear_suite",
    "transfer_suite",
    "equilibrium_suite",
]


@dataclass
class SuiteResult:
    name: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    message: str = ""
    seconds: float = 0.0

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.message} ({self.seconds:.2f} s)"

    def to_dict(self):
        return {"name": self.name, "passed": self.passed, "message": self.message,
                "seconds": self.seconds, "metrics": self.metrics}


def random_params(rng, beta=1.0):
    s1 = rng.uniform(1e-2, 5.0)
    s2 = rng.uniform(-5.0, s1)
    return MaterialParams(s1=s1, s2=s2, beta=beta)


def _diag_B0(g1, g2):
    B0 = np.zeros(np.shape(g1) + (2, 2))
    B0[..., 0, 0] = g1
    B0[..., 1, 1] = g2
    return B0


def _x_vector(H):
    a, c = H[..., 0, 0], H[..., 1, 1]
    b = 0.5 * (H[..., 0, 1] + H[..., 1, 0])
    d = 0.5 * (H[..., 0, 1] - H[..., 1, 0])
    return np.stack([a, c, b, d], axis=-1)


def quadform_suite(seed=42, n=10_000, rtol=1e-12, n_params=100):
    """Trace form, block form and ``X^T A X`` agree pairwise.

    The relative difference is taken against the largest of the two values
    and the summed magnitudes of the additive terms of each route, so a
    near-zero total produced by cancellation is not mistaken for an error.
    """
    rng = np.random.default_rng(seed)
    per = n // n_params
    worst = 0.0
    for _ in range(n_params):
        params = random_params(rng)
        g = np.sort(rng.uniform(0.1, 10.0, (per, 2)), axis=1)
        g1, g2 = g[:, 1], g[:, 0]
        p0 = rng.uniform(-5.0, 5.0, per)
        beta = rng.uniform(0.0, 100.0, per)
        H = rng.normal(size=(per, 2, 2))
        B0 = _diag_B0(g1, g2)
        T0 = cauchy_stress(B0, p0, params)
        via_trace = oracles.trace_form(H, H, B0, T0, beta, params)
        parts = oracles.block_form(H, g1, g2, p0, beta, params, parts=True)
        via_blocks = sum(parts)
        s = coercivity.SpectralState.from_eigenvalues(g1, g2, p0, params)
        M = coercivity.build_A(s, beta, params).to_array()
        X = _x_vector(H)
        terms = M * X[:, :, None] * X[:, None, :]
        via_matrix = terms.sum(axis=(1, 2))
        scale = np.maximum(sum(np.abs(p) for p in parts), np.abs(terms).sum(axis=(1, 2)))
        for x, y in ((via_trace, via_blocks), (via_trace, via_matrix), (via_blocks, via_matrix)):
            worst = max(worst, float(np.max(oracles._rel_diff(x, y, scale))))
    passed = worst <= rtol
    return SuiteResult("quadform", passed, {"trials": per * n_params, "max_rel_diff": worst},
                       f"{per * n_params} trials, max relative difference {worst:.2e}")


def psd_suite(seed=42, n=10_000, band=1e-10):
    """Sylvester-type test against Jacobi eigenvalues on random ``(A, alpha)``.

    Cases whose smallest eigenvalue of ``A - alpha I`` lies within ``band``
    of zero are ties and are not counted as disagreements.
    """
    rng = np.random.default_rng(seed)
    disagree, ties, first = 0, 0, None
    for i in range(n):
        params = random_params(rng)
        s = coercivity.SpectralState.from_eigenvalues(
            rng.uniform(0.1, 10.0), rng.uniform(0.1, 10.0), rng.uniform(-5.0, 5.0), params)
        A = coercivity.build_A(s, rng.uniform(0.0, 100.0), params)
        alpha = rng.uniform(0.0, 3.0)
        lam = oracles.jacobi_eigenvalues(A.to_array() - alpha * np.eye(4))[0]
        if abs(lam) <= band:
            ties += 1
            continue
        if coercivity.check_psd(A, alpha) != oracles.psd_eigen_oracle(A, alpha, tol=band):
            disagree += 1
            if first is None:
                first = i
    return SuiteResult("psd", disagree == 0,
                       {"trials": n, "disagreements": disagree, "ties": ties, "first": first},
                       f"{n} trials, {disagree} disagreements, {ties} ties")


def random_certified_points(rng, params, n_points, frac=None):
    """Sample points satisfying the certification hypotheses.

    Eigenvalues are drawn log-uniformly in ``[0.2, 5]`` subject to
    ``det B0 >= k``; ``alpha`` is a fraction of its bound and each ``p0`` is
    drawn inside the admissible pressure window.  Returns
    ``(points, alpha, k)`` or ``None`` if the window came out empty.
    """
    k = coercivity.default_k(params)
    g = []
    while len(g) < n_points:
        g1, g2 = np.exp(rng.uniform(math.log(0.2), math.log(5.0), 2))
        if g1 * g2 >= k:
            g.append(sorted((g1, g2), reverse=True))
    g = np.array(g)
    s = coercivity.SpectralState.from_eigenvalues(g[:, 0], g[:, 1], np.zeros(n_points), params)
    dbar = float(np.max(s.trB0 / np.sqrt(s.detB0)))
    frac = rng.uniform(0.05, 0.95) if frac is None else frac
    alpha = frac * coercivity.alpha_bound(params, k) / dbar
    r = coercivity.roots_a_b(s, alpha, params)
    lo = r.a0 + alpha * dbar
    hi = np.minimum(r.b0 - alpha * dbar, r.b_star - 2.0 * alpha)
    if np.any(hi <= lo):
        return None
    x = lo + (hi - lo) * rng.uniform(0.02, 0.98, n_points)
    pts = coercivity.SpectralState.from_eigenvalues(g[:, 0], g[:, 1], -0.5 * x, params)
    return pts, alpha, k


HAND_CASE = {"gamma": (4.0, 0.25), "p0": -0.7, "s1": 1.0, "s2": 0.0, "alpha": 0.1, "k": 0.5,
             "beta0": 4.820625 / 2.65}


def soundness_suite(seed=42, n=1_000, hand_tol=1e-5):
    """Certified ``beta0`` makes ``A - alpha I`` PSD at ``beta0``, ``2 beta0 + 1``, ``10 beta0 + 10``."""
    rng = np.random.default_rng(seed)
    done, failures, first = 0, 0, None
    while done < n:
        params = random_params(rng)
        drawn = random_certified_points(rng, params, int(rng.integers(1, 9)))
        if drawn is None:
            continue
        pts, alpha, k = drawn
        try:
            rep = coercivity.certify(pts, alpha=alpha, k=k, params=params)
        except CertificationError:
            failures += 1
            first = first if first is not None else done
            done += 1
            continue
        b0 = rep.beta0
        for beta in (b0, 2 * b0 + 1, 10 * b0 + 10):
            if not np.all(coercivity.check_psd(coercivity.build_A(pts, beta, params), alpha)):
                failures += 1
                first = first if first is not None else done
                break
        done += 1
    h = HAND_CASE
    hp = MaterialParams(s1=h["s1"], s2=h["s2"], beta=1.0)
    hs = coercivity.SpectralState.from_eigenvalues(*h["gamma"], h["p0"], hp)
    hand = coercivity.certify([hs], alpha=h["alpha"], k=h["k"], params=hp).beta0
    hand_err = abs(hand - h["beta0"])
    passed = failures == 0 and hand_err <= hand_tol
    return SuiteResult("soundness", passed,
                       {"sets": n, "failures": failures, "first": first,
                        "hand_beta0": hand, "hand_error": hand_err},
                       f"{n} certified sets, {failures} failures; hand case beta0 = {hand:.6f}")


def linearization_suite(seed=42, n=100, ts=None, target=2.0, tol=0.1):
    """Remainder of the linearized relative stress decays quadratically."""
    rng = np.random.default_rng(seed)
    ts = np.logspace(-1, -5, 9) if ts is None else ts
    slopes = []
    for _ in range(n):
        params = random_params(rng)
        F = np.eye(2) + 0.3 * rng.normal(size=(2, 2))
        if np.linalg.det(F) < 0.2:
            F = np.eye(2)
        B0 = F @ F.T
        H = rng.normal(size=(2, 2))
        H /= np.linalg.norm(H)
        beta = rng.uniform(0.0, 100.0)
        slope, _, _ = oracles.linearization_slope(B0, rng.uniform(-5.0, 5.0), H, beta,
                                                  params.with_beta(beta), ts=ts)
        slopes.append(slope)
    slopes = np.array(slopes)
    dev = float(np.max(np.abs(slopes - target)))
    return SuiteResult("linearization", dev <= tol,
                       {"states": n, "min_slope": float(slopes.min()),
                        "max_slope": float(slopes.max())},
                       f"{n} states, slopes in [{slopes.min():.3f}, {slopes.max():.3f}]")


def patch_suite(t=0.1, n=8, var_tol=1e-9, h_tol=1e-8, res_tol=1e-12):
    """Uniaxial traction on an ``n x n`` rectangle reproduces the homogeneous oracle."""
    cfg = patch_config(t=t, n=n)
    params = cfg.params()
    mesh0 = cfg.build_mesh()
    res = run(cfg, mesh=mesh0)
    u = res.state.displacement
    H = element_gradients(mesh0, u)
    variance = float(H.reshape(-1, 4).var(axis=0).max())
    H_ref = oracles.patch_test_oracle(t, params.beta, params)
    h_err = float(np.max(np.abs(H - H_ref)) / np.linalg.norm(H_ref))
    P = np.asarray(cfg.boundary.traction_stress, dtype=float)
    f = mesh0.normals() @ P.T
    states0 = QuadPointState.initial(params, n=mesh0.n_triangles)
    resid = oracles.traction_residual(mesh0, states0, u, f, params.beta, params)
    passed = variance <= var_tol and h_err <= h_tol and resid <= res_tol
    return SuiteResult("patch", passed,
                       {"variance": variance, "H_rel_error": h_err, "traction_residual": resid,
                        "H": H.mean(axis=0).tolist(), "H_oracle": H_ref.tolist()},
                       f"variance {variance:.1e}, H error {h_err:.1e}, residual {resid:.1e}")


def pure_shear_suite(n=16, kappa=0.2, steps=(20, 40, 80), main=40, rel_tol=0.02, det_tol=0.01):
    """Sheared square against the universal simple-shear solution."""
    cfg0 = pure_shear_config(n=n, steps=main, kappa=kappa)
    target = oracles.pure_shear_oracle(kappa, cfg0.params()).T12
    errs, det_dev, T12 = {}, None, None
    for N in steps:
        res = run(pure_shear_config(n=n, steps=N, kappa=kappa))
        fin = res.final_summary()
        errs[N] = abs(fin["mean_T12"] - target)
        if N == main:
            T12, det_dev = fin["mean_T12"], fin["max_abs_detF_minus_1"]
    ordered = [errs[N] for N in sorted(errs)]
    monotone = all(b < a for a, b in zip(ordered, ordered[1:]))
    passed = abs(T12 - target) <= rel_tol * abs(target) and det_dev <= det_tol and monotone
    return SuiteResult("pure-shear", passed,
                       {"T12": T12, "T12_exact": target, "max_abs_detF_minus_1": det_dev,
                        "errors": {str(k): v for k, v in errs.items()}, "monotone": monotone},
                       f"T12 = {T12:.6f} (exact {target:.6f}), max|detF-1| = {det_dev:.1e}, "
                       f"errors {', '.join(f'{e:.1e}' for e in ordered)}")


def _certified_mesh_states(rng, mesh, params):
    drawn = None
    while drawn is None:
        drawn = random_certified_points(rng, params, mesh.n_triangles)
    pts, alpha, k = drawn
    theta = rng.uniform(0.0, math.pi, mesh.n_triangles)
    Q = np.stack([np.stack([np.cos(theta), -np.sin(theta)], -1),
                  np.stack([np.sin(theta), np.cos(theta)], -1)], -2)
    B0 = Q @ _diag_B0(pts.gamma1, pts.gamma2) @ np.swapaxes(Q, -1, -2)
    T0 = cauchy_stress(B0, pts.p0, params)
    F = np.linalg.cholesky(B0)
    states = QuadPointState(F=F, B0=B0, T0=T0, p0=np.asarray(pts.p0, dtype=float),
                            rho=params.rho0 / np.linalg.det(F))
    rep = coercivity.certify(coercivity.spectral_of(B0, pts.p0, params), alpha=alpha, k=k,
                             params=params)
    return states, rep


def transfer_suite(seed=42, n_configs=5, n_vectors=100, slack=1e-10):
    """Assembled form dominates ``(alpha / 2) sum area |grad u|^2`` on certified states."""
    rng = np.random.default_rng(seed)
    from .mesh_io import rectangle_mesh

    mesh = rectangle_mesh(1.0, 1.0, 4, 4, labels={"bottom": 3, "right": 2, "top": 1, "left": 1})
    area = mesh.areas()
    violations, checks, worst = 0, 0, math.inf
    for _ in range(n_configs):
        params = random_params(rng)
        states, rep = _certified_mesh_states(rng, mesh, params)
        for beta in (rep.beta0, 2 * rep.beta0 + 1):
            system = assemble(mesh, states, beta, params, dofmap=build_dofmap(mesh))
            for _ in range(n_vectors // 2):
                q = rng.normal(size=system.matrix.shape[0])
                u = system.prolongation @ q
                lhs = float(q @ (system.matrix @ q))
                H = element_gradients(mesh, u)
                rhs = 0.5 * rep.alpha * float(np.sum(area * np.sum(H * H, axis=(1, 2))))
                ratio = (lhs - rhs) / max(abs(lhs), abs(rhs))
                worst = min(worst, ratio)
                checks += 1
                if ratio < -slack:
                    violations += 1
    return SuiteResult("transfer", violations == 0,
                       {"checks": checks, "violations": violations, "min_rel_margin": worst},
                       f"{checks} checks, {violations} violations, min relative margin {worst:.2e}")


def equilibrium_suite():
    """Unloaded stress-free body stays put."""
    res = run(equilibrium_config())
    umax = float(np.max(np.abs(res.state.displacement)))
    return SuiteResult("equilibrium", umax == 0.0, {"max_abs_u": umax}, f"max |u| = {umax:.1e}")


SUITES = {
    "quadform": quadform_suite,
    "psd": psd_suite,
    "soundness": soundness_suite,
    "linearization": linearization_suite,
    "patch": patch_suite,
    "pure-shear": pure_shear_suite,
    "transfer": transfer_suite,
    "equilibrium": equilibrium_suite,
}
SEEDED = {"quadform", "psd", "soundness", "linearization", "transfer"}


def run_suite(name, seed=42):
    """Run one suite by name and time it."""
    fn = SUITES[name]
    t0 = time.perf_counter()
    res = fn(seed=seed) if name in SEEDED else fn()
    res.seconds = time.perf_counter() - t0
    return res
