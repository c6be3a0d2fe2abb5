"""Verification campaigns driven by a :class:`~nelson_ibc.config.RunConfig`.

Each campaign returns a list of check records (name, measured value,
tolerance, pass flag) and writes its CSV tables into the output directory.
"""

import logging
import math
import os

import numpy as np

from .bounds import (verify_F_bounds, verify_G_bounds, verify_perturbation_decay,
                     verify_Td_bound, verify_Tod_Sod_bounds)
from .fock import adjoint, enumerate_basis, inner_product
from .errors import SeriesDivergent
from .model import ModelParams
from .norms import op_norm, self_adjointness_defect, weighted_eigh
from .ops_modified import assemble_F
from .positivity import (Cone, certify_improves, certify_preserves, flip_matrix, parity,
                         perron_frobenius_check)
from .renorm import (build_cutoff_family, closed_form_E_Lambda, compute_E_Lambda,
                     convergence_study)
from .resolvent import (a_action, auto_lambda, build_hamiltonian, dense,
                        dense_resolvent, extend_resolvent, relative_difference,
                        resolvent_neumann, verify_distributional_identity)

logger = logging.getLogger(__name__)

N_PROBE_PAIRS = 100


def check(name, value, tolerance, passed, **extra):
    rec = {"name": name, "value": value, "tolerance": tolerance, "passed": bool(passed)}
    rec.update(extra)
    return rec


def _max_rel(A, B):
    A, B = dense(A), dense(B)
    scale = max(np.abs(A).max(), np.abs(B).max())
    return float(np.abs(A - B).max() / scale) if scale else 0.0


def resolve_build(cfg, basis, params=None):
    """Hamiltonian build at the configured (or automatic) ``lam`` and ``mu``."""
    params = params or cfg.params
    tail = cfg.tail
    if cfg["lambda"] == "auto":
        build, mu_auto, _ = auto_lambda(basis, params, tail)
    else:
        build = build_hamiltonian(basis, params, float(cfg["lambda"]), tail)
        mu_auto = build.modified.mu0 + 1.0
    mu = mu_auto if cfg["mu"] == "auto" else float(cfg["mu"])
    return build, mu


def adjointness_defect(A, mu, rng, n_pairs=N_PROBE_PAIRS):
    """``max |<A* phi, psi> - <phi, A psi>| / (||phi|| ||psi|| ||A||)`` over random pairs."""
    A = dense(A)
    A_star = adjoint(A, mu)
    nA = op_norm(A, mu)
    if nA == 0:
        return 0.0
    worst = 0.0
    for _ in range(n_pairs):
        phi, psi = rng.standard_normal((2, A.shape[0]))
        lhs = inner_product(A_star @ phi, psi, mu)
        rhs = inner_product(phi, A @ psi, mu)
        den = math.sqrt(inner_product(phi, phi, mu) * inner_product(psi, psi, mu)) * nA
        worst = max(worst, abs(lhs - rhs) / den)
    return worst


def assembled_operators(build):
    core, mod = build.core, build.modified
    return {
        "a(v)": core.a_v, "a*(v)": core.a_star_v, "G": core.G, "G*": core.G_star,
        "T_od": core.T_od, "F": mod.F, "F*": mod.F_star, "S_od": mod.S_od,
        "H_G": build.H_G, "H_F": build.H_F, "R0": build.R0,
    }


def build_check(cfg, basis, out_dir, rng):
    params, tail = cfg.params, cfg.tail
    build, mu = resolve_build(cfg, basis)
    core, mod = build.core, build.modified
    w = basis.mu
    out = []

    worst = max(adjointness_defect(A, w, rng) for A in assembled_operators(build).values())
    out.append(check("adjointness", worst, 1e-12, worst <= 1e-12))

    d = _max_rel(core.a_star_v, adjoint(core.a_v, w))
    out.append(check("a*(v) equals adjoint of a(v)", d, 1e-14, d <= 1e-14))
    G_adj = adjoint(-dense(core.a_v) / (core.L_P + core.lam)[None, :], w)
    d = _max_rel(core.G, G_adj)
    out.append(check("G equals adjoint of -a(v)(L_P+lam)^-1", d, 1e-13, d <= 1e-13))
    d = _max_rel(mod.F, assemble_F(core, mod.tau_plus, method="direct"))
    out.append(check("F relation form equals direct kernel", d, 1e-13, d <= 1e-13))

    S_alt = (dense(core.T_od) + np.diag(mod.tau_minus)
             + dense(mod.F_star) @ (mod.tau_plus[:, None] * dense(core.G)))
    d = _max_rel(mod.S, S_alt)
    out.append(check("S = T_od + tau_- + F* tau_+ G", d, 1e-10, d <= 1e-10))

    gap = build.representation_gap()
    out.append(check("representation identity H_G = H_F", gap, 1e-9, gap <= 1e-9))
    sa = self_adjointness_defect(build.H_G, w)
    out.append(check("H_G self-adjoint", sa, 1e-12, sa <= 1e-12))

    eye = np.eye(basis.dim)
    inv = build.inv_one_minus_G
    d = float(np.abs((eye - dense(core.G)) @ inv.inverse - eye).max())
    out.append(check("(1-G)(1-G)^-1 = 1", d, 1e-12, d <= 1e-12, norm_G=inv.norm))

    b2 = build_hamiltonian(basis, params, 2.0, tail)
    b5 = build_hamiltonian(basis, params, 5.0, tail)
    d = op_norm(b2.H_G - b5.H_G, w) / op_norm(b2.H_G, w)
    out.append(check("H_G independent of lambda (2 vs 5)", d, 1e-9, d <= 1e-9))
    T_diff = dense(b2.core.T) - dense(b5.core.T)
    GG = (2.0 - 5.0) * dense(b2.core.G_star) @ dense(b5.core.G)
    d = _max_rel(T_diff, GG)
    out.append(check("T_lam - T_mu = (lam-mu) G_lam* G_mu", d, 1e-10, d <= 1e-10))

    psi = rng.standard_normal(basis.dim)
    A2, A5 = a_action(b2.core, psi), a_action(b5.core, psi)
    d = float(np.abs(A2 - A5).max() / max(np.abs(A2).max(), 1e-300))
    out.append(check("A-action independent of lambda", d, 1e-10, d <= 1e-10))
    rep = verify_distributional_identity(build, psi)
    out.append(check("H psi = L_P psi + a* psi + A psi", rep["relative"], 1e-10,
                     rep["relative"] <= 1e-10))
    resolved = {"lambda": build.lam, "mu": mu, "mu0": mod.mu0}
    return out, resolved


def _neumann_checks(build, mu, res, cone, basis, E0):
    """Checks on a converged Neumann resolvent and its extension."""
    w = basis.mu
    out = []
    rep = certify_improves(res.resolvent, cone, basis)
    out.append(check("Neumann resolvent improves positivity", rep.min_entry, 0.0,
                     rep.holds, series_norm=res.norm, terms=res.terms))
    out.append(check("Neumann partial sums preserve positivity",
                     res.min_partial_entry, 0.0, res.min_partial_entry >= 0))
    gamma = build.lam - mu
    R_dense = dense_resolvent(build.H_F, gamma)
    d = relative_difference(res.resolvent, R_dense, w)
    out.append(check("Neumann resolvent vs dense solve", d, 1e-8, d <= 1e-8))

    lo = -E0 + 0.1
    worst, min_entry = 0.0, np.inf
    targets = [float(t) for t in np.linspace(lo, gamma, 5)] if lo < gamma else []
    for lam_t in targets:
        R = extend_resolvent(res.resolvent, gamma, lam_t, w)
        worst = max(worst, relative_difference(R, dense_resolvent(build.H_F, lam_t), w))
        min_entry = min(min_entry, float(certify_improves(R, cone, basis).min_entry))
    out.append(check("resolvent extension vs dense solve", worst, 1e-8,
                     bool(targets) and worst <= 1e-8, targets=targets))
    out.append(check("resolvent extension improves positivity",
                     min_entry if targets else None, 0.0,
                     bool(targets) and min_entry > 0))
    return out


def positivity_campaign(cfg, basis, out_dir, rng):
    params = cfg.params
    build, mu = resolve_build(cfg, basis)
    mod = build.modified
    w = basis.mu
    cone = Cone("C_plus") if params.g <= 0 else Cone("C_minus")
    out = []

    rep = certify_improves(build.R0, cone, basis)
    out.append(check("R0 improves positivity", rep.min_entry, 0.0, rep.holds,
                     witness=rep.witness))
    K = -(dense(mod.S) - mu * np.eye(basis.dim)) @ build.R0
    rep = certify_preserves(K, cone, basis)
    out.append(check("-(S-mu)R0 preserves positivity", rep.min_entry, 0.0, rep.holds))

    pf = perron_frobenius_check(build.H_G, w, cone, basis)
    out.append(check("ground state simple", pf.gap, 1e-8, pf.gap > 1e-8,
                     ground_energy=pf.ground_energy))
    out.append(check("ground state positive", pf.min_component, 0.0,
                     pf.eigenvector_positive))
    E0 = pf.ground_energy

    sign = parity(basis) if cone.kind == "C_minus" else None
    try:
        res = resolvent_neumann(build, mu, sign=sign)
    except SeriesDivergent as exc:
        out.append(check("Neumann series converges", exc.norm, 1.0, False))
        res = None
    if res is not None:
        out.extend(_neumann_checks(build, mu, res, cone, basis, E0))

    flipped = ModelParams(params.m, -params.g, params.P)
    fb = build_hamiltonian(basis, flipped, build.lam, cfg.tail)
    ev_a = weighted_eigh(build.H_G, w)[0]
    ev_b = weighted_eigh(fb.H_G, w)[0]
    d = float(np.abs(ev_a - ev_b).max() / max(np.abs(ev_a).max(), 1.0))
    out.append(check("spectrum invariant under g -> -g", d, 1e-10, d <= 1e-10))
    d = _max_rel(flip_matrix(build.H_G, basis), fb.H_G)
    out.append(check("parity flip maps H(g) to H(-g)", d, 1e-12, d <= 1e-12))
    other = Cone("C_minus") if cone.kind == "C_plus" else Cone("C_plus")
    pf2 = perron_frobenius_check(fb.H_G, w, other, basis)
    out.append(check(f"ground state of the flipped build lies in {other.kind}",
                     pf2.min_component, 0.0, pf2.eigenvector_positive))
    resolved = {"lambda": build.lam, "mu": mu, "mu0": mod.mu0, "E0": E0}
    return out, resolved


def renorm_campaign(cfg, basis, out_dir, rng):
    params, tail = cfg.params, cfg.tail
    rn = cfg["renorm"]
    out = []
    for Lam in rn["closed_form_cutoffs"]:
        E = compute_E_Lambda(params, Lam, tail)
        if params.m == 0:
            ref = closed_form_E_Lambda(params.g, Lam)
            d = abs(E - ref) / abs(ref) if ref else abs(E)
            out.append(check(f"E_Lambda closed form at {Lam:g}", d, 1e-6, d <= 1e-6))
    grid = cfg.grid(rn["grid"])
    sb = enumerate_basis(grid, cfg["n_max"], cfg["max_dim"])
    family = build_cutoff_family(sb, params, rn["cutoffs"], tail)
    lam_eval = None if rn["lambda_eval"] == "auto" else float(rn["lambda_eval"])
    study = convergence_study(family, lam_eval=lam_eval,
                              lam_build=float(rn["lambda_build"]), tail=tail)
    study.write_csv(os.path.join(out_dir, "renorm_study.csv"))
    out.append(check("resolvent difference strictly decreasing in Lambda",
                     study.column("resolvent_diff"), None, study.strictly_decreasing()))
    out.append(check("unsubtracted ground energy strictly decreasing in Lambda",
                     study.E0_unsubtracted, None,
                     study.unsubtracted_strictly_decreasing()))
    resolved = {"lambda_eval": study.lam_eval, "lambda_build": study.lam_build,
                "study_dim": sb.dim,
                "saturation_floor": study.rows[0].saturation_floor if study.rows else None}
    return out, resolved


def bounds_campaign(cfg, basis, out_dir, rng):
    params, tail = cfg.params, cfg.tail
    bc = cfg["bounds"]
    lams = [float(x) for x in bc["lambdas"]]
    reports = {}
    for k, r in verify_G_bounds(basis, params, lams, bc["s"], tail).items():
        reports[f"G_{k}"] = r
    for k, r in verify_F_bounds(basis, params, lams, bc["s"], tail).items():
        reports[f"F_{k}"] = r
    reports["perturbation"] = verify_perturbation_decay(basis, params, lams, tail)
    reports["T_d"] = verify_Td_bound(basis, params, bc["eps"], bc["td_lambda"], tail,
                                     max_dim=cfg["max_dim"])
    for k, r in verify_Tod_Sod_bounds(basis, params, lams, bc["probes"],
                                      int(cfg["seed"]), tail).items():
        reports[k] = r
    out = []
    for key, r in reports.items():
        r.write_csv(os.path.join(out_dir, f"bounds_{key}.csv"))
        out.append(check(r.name, r.values, r.threshold, r.passed, slope=r.slope,
                         notes=r.notes))
    return out, {}


CAMPAIGN_FUNCS = {
    "build-check": build_check,
    "positivity": positivity_campaign,
    "renorm-study": renorm_campaign,
    "bounds": bounds_campaign,
}


def campaigns_for(name):
    return list(CAMPAIGN_FUNCS) if name == "all" else [name]


def run_campaigns(cfg, out_dir):
    """Run the configured campaign(s); returns ``(checks, resolved, basis)``."""
    basis = enumerate_basis(cfg.grid(), cfg["n_max"], cfg["max_dim"])
    checks, resolved = [], {}
    for name in campaigns_for(cfg["campaign"]):
        rng = np.random.default_rng(int(cfg["seed"]))
        logger.info("campaign %s", name)
        res, info = CAMPAIGN_FUNCS[name](cfg, basis, out_dir, rng)
        for rec in res:
            rec["campaign"] = name
        checks.extend(res)
        resolved[name] = info
    return checks, resolved, basis

