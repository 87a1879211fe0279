"""Positive-half Virasoro actions on scattering data, frames and ln tau.

The vector fields on the negative subgroup are
Z_l(f) = -(lam**(l+1) f_lam f^-1 + lam**l f Gamma f^-1)_- f for l >= -1,
parameterized by the constant matrix Gamma (zero, or the diagonal
(1/n) diag(0, 1, ..., n-1) preset).  The induced variations of the reduced
frame and of ln tau are evaluated both through their closed pairing
formulas and through the exact epsilon route (perturb f, refactorize, take
the epsilon part), and for the diagonal gl coordinates the ln tau variation
is also produced by a differential operator in ln tau whose coefficient
convention is detected rather than assumed (the stated and derived
constants of its quadratic part differ by a factor two).
"""

from __future__ import annotations

import numpy as np

from .context import JetContext
from .errors import ShapeError
from .scattering import FactorizationResult, factorize_jet
from .series import ScalarJet, Series, directional_derivative
from .splitting import SplittingSpec, reality_check
from .tau import LnTauJet, first_partial_pairing, ln_tau_jet, \
    second_partial_formula

__all__ = ["gamma_xi0", "virasoro_field", "tangency_defect", "bracket_defect",
           "induced_frame_variation", "gl_frame_variation", "script_j",
           "induced_lntau_variation", "eps_perturbed_result", "c_ell",
           "c_ell_const_defect", "theorem76_operator", "masked_scalar_defect",
           "proof_identities_check", "zeta_v_formula", "eta_field",
           "eta_tangency_defect", "eta_bracket_defect", "thm56_defect"]


def gamma_xi0(n: int) -> np.ndarray:
    """The preset Gamma = (1/n) diag(0, 1, ..., n-1)."""
    return np.diag(np.arange(n) / n).astype(complex)


def virasoro_field(f: Series, ell: int, gamma: np.ndarray | None) -> Series:
    """Z_l(f), tangent to the negative subgroup at f."""
    if ell < -1:
        raise ShapeError("virasoro_field needs l >= -1")
    finv = f.inv()
    x = (f.dlambda() * finv).shift(ell + 1)
    if gamma is not None:
        g = Series.monomial(f.ctx, np.asarray(gamma, dtype=complex))
        x = x + (f * g * finv).shift(ell)
    return -(x.minus()) * f


def tangency_defect(f: Series, ell: int, gamma: np.ndarray | None) -> float:
    z = virasoro_field(f, ell, gamma)
    return (z * f.inv()).plus().max_abs()


def bracket_defect(f: Series, j: int, k: int,
                   gamma: np.ndarray | None) -> float:
    """|| [Z_j, Z_k](f) - (k - j) Z_{j+k}(f) || with the vector-field bracket
    computed exactly through directional derivatives."""
    zj = virasoro_field(f, j, gamma)
    zk = virasoro_field(f, k, gamma)
    lhs = (directional_derivative(lambda g: virasoro_field(g, k, gamma), f, zj)
           - directional_derivative(lambda g: virasoro_field(g, j, gamma), f, zk))
    if k == j:
        return lhs.max_abs()
    rhs = virasoro_field(f, j + k, gamma) * float(k - j)
    return (lhs - rhs).max_abs()


# ---------------------------------------------------------------------------
# induced variations

def _gamma_operand(result: FactorizationResult,
                   gamma: np.ndarray | None) -> Series:
    """lam f_lam f^-1 + f Gamma f^-1 as a jet-constant series."""
    f = result.f.base_part()
    finv = f.inv()
    x = (f.dlambda() * finv).shift(1)
    if gamma is not None:
        g = Series.monomial(result.ctx, np.asarray(gamma, dtype=complex))
        x = x + f * g * finv
    return x


def induced_frame_variation(result: FactorizationResult, ell: int,
                            gamma: np.ndarray | None) -> Series:
    """delta_l(M) M^-1 = -(lam**l E (lam f_lam f^-1 + f Gamma f^-1) E^-1)_-."""
    a = _gamma_operand(result, gamma)
    return -((result.E * a * result.Einv).shift(ell)).minus()


def script_j(result: FactorizationResult) -> Series:
    """The diagonal-coordinate weight element sum_{i,j} j t_{i,j} e_ii lam^j;
    equals lam V_lam V^-1 for the gl vacuum frame."""
    seq, ctx = result.seq, result.ctx
    if seq.family != "gl":
        raise ShapeError("script_j is defined for the gl family")
    out = Series.zeros(ctx)
    for var in seq.variables:
        base, shift = seq.gens[var]
        j = shift + 1
        e = seq.bases[base][1]
        alpha = [0] * len(ctx.variables)
        alpha[ctx.var_index(var)] = 1
        out = out + Series.monomial(ctx, j * e, degree=j, alpha=tuple(alpha))
    return out


def gl_frame_variation(result: FactorizationResult, ell: int) -> Series:
    """zeta_l(M) M^-1 = -(lam**(l+1) M_lam M^-1 + lam**l M J M^-1)_- in the
    diagonal gl coordinates (Gamma = 0)."""
    sj = script_j(result)
    x = ((result.M.dlambda() * result.Minv).shift(ell + 1)
         + (result.M * sj * result.Minv).shift(ell))
    return -(x.minus())


def eps_perturbed_result(result: FactorizationResult, df: Series
                         ) -> FactorizationResult:
    """Refactorize f + eps df (the exact variation route)."""
    f0 = result.f.base_part()
    return factorize_jet(result.spec, result.seq, result.ctx,
                         f0.with_eps(df.embed(result.ctx)), V=result.V)


def induced_lntau_variation(result: FactorizationResult, ell: int,
                            gamma: np.ndarray | None) -> ScalarJet:
    """delta_l(ln tau) = <lam**l E (lam f_lam f^-1 + f Gamma f^-1) E^-1,
    lam E_lam E^-1>_0; the index-(-1) reading without the lam shift is
    asserted equal (the two appear interchangeably)."""
    a = _gamma_operand(result, gamma)
    g = (result.E * a * result.Einv).shift(ell)
    e_log = result.E.dlambda() * result.Einv
    out = g.pairing(e_log.shift(1), 0)
    alt = g.pairing(e_log, -1)
    if (out - alt).max_abs() > 1e-9 * max(1.0, out.max_abs()):
        raise ShapeError("pairing-index readings of the ln tau variation "
                         "disagree; window too shallow")
    return out


def thm56_defect(result_eps: FactorizationResult) -> float:
    """General variation law: d/d eps ln tau = -<M_eps M^-1, E_lam E^-1>_{-1}."""
    lhs = ln_tau_jet(result_eps).X.eps_part()
    m0 = result_eps.M.base_part()
    e0 = result_eps.E.base_part()
    rhs = -(result_eps.M.eps_part() * m0.inv()).pairing(
        e0.dlambda() * e0.inv(), -1)
    return (lhs - rhs).max_abs()


# ---------------------------------------------------------------------------
# constants and the differential-operator form

def c_ell(f: Series, ell: int) -> complex:
    """c_l(f) = <lam**(l+2) (f_lam f^-1)^2>_0 (vanishes for l <= 1)."""
    if ell < -1:
        raise ShapeError("c_ell needs l >= -1")
    x = f.dlambda() * f.inv()
    return (x * x).trace_coeff(-(ell + 2)).coeff(0)


def c_ell_const_defect(result: FactorizationResult, ell: int) -> float:
    """<lam**l (E lam f_lam f^-1 E^-1)^2>_0 must be the t-independent c_l(f)."""
    f0 = result.f.base_part()
    g = result.E * (f0.dlambda() * f0.inv()).shift(1) * result.Einv
    jet = (g * g).trace_coeff(-ell)
    return (jet - ScalarJet.const(result.ctx, c_ell(f0.at_zero(
        JetContext((), 0, result.ctx.n, result.ctx.lo, result.ctx.hi)), ell))
    ).max_abs()


_T76_COEFFS = {"proof": (0.5, 0.5), "printed": (1.0, 0.5)}


def theorem76_operator(result: FactorizationResult, tau: LnTauJet, ell: int,
                       partials: str = "formula",
                       coefficients: str = "proof"
                       ) -> tuple[ScalarJet, list[str]]:
    """The differential-operator form of the ln tau Virasoro action for the
    diagonal gl coordinates with Gamma = 0:

        zeta_l X = sum_{i,j} j t_{i,j} X_{t_{i,j+l}}
                   [+ sum_i sum_{j=1}^{l-1} (ca X_{t_{i,j}} X_{t_{i,l-j}}
                                             + cb X_{t_{i,j} t_{i,l-j}})]
                   - 1/2 c_l(f),

    with X_{t_{i,0}} = 0.  ``partials="formula"`` reads every partial
    through the reduced-frame pairings (exact for indices outside the
    active variable set); ``partials="jet"`` differentiates the stored jet
    and *drops* out-of-range terms, returning the variables whose
    coefficients are no longer comparable (never extrapolating).
    ``coefficients`` picks the quadratic constants: the stated pair
    ("printed", ca = 1) or the pair its own derivation produces
    ("proof", ca = 1/2).
    """
    seq, ctx = result.seq, result.ctx
    if seq.family != "gl":
        raise ShapeError("theorem76_operator is for the gl family")
    ca, cb = _T76_COEFFS[coefficients]
    op = ScalarJet.zeros(ctx)
    masked: list[str] = []
    flows = sorted({shift + 1 for _, shift in seq.gens.values()})
    m_top = max(flows)
    if flows != list(range(1, m_top + 1)):
        raise ShapeError("theorem76_operator needs the full (consecutive) "
                         "flow grid of the untwisted hierarchy")

    def f1(i: int, k: int) -> ScalarJet | None:
        if k == 0:
            return None  # X_{t_{i,0}} = 0
        if partials == "formula":
            return first_partial_pairing(result, f"e{i}", k - 1)
        var = f"t{i}_{k}"
        if var in seq.gens:
            return tau.X.partial(var)
        return "out-of-range"

    for var in seq.variables:
        base, shift = seq.gens[var]
        i = int(base[1:])
        j = shift + 1
        term = f1(i, j + ell)
        if term is None:
            continue
        if isinstance(term, str):
            masked.append(var)
            continue
        op = op + term.times_var(var) * float(j)
    if ell >= 2:
        for i in range(1, seq.n + 1):
            for j in range(1, ell):
                if partials == "formula":
                    a = first_partial_pairing(result, f"e{i}", j - 1)
                    b = first_partial_pairing(result, f"e{i}", ell - j - 1)
                    sec = second_partial_formula(result, (f"e{i}", j - 1),
                                                 (f"e{i}", ell - j - 1))
                else:
                    if j > m_top or ell - j > m_top:
                        raise ShapeError(
                            "theorem76_operator: quadratic term needs "
                            f"t_{{i,{j}}} and t_{{i,{ell - j}}} active")
                    a = tau.X.partial(f"t{i}_{j}")
                    b = tau.X.partial(f"t{i}_{ell - j}")
                    sec = tau.X.partial(f"t{i}_{j}").partial(f"t{i}_{ell - j}")
                op = op + a * b * ca + sec * cb
    f0 = result.f.base_part().at_zero(
        JetContext((), 0, ctx.n, ctx.lo, ctx.hi))
    op = op - ScalarJet.const(ctx, 0.5 * c_ell(f0, ell))
    return op, masked


def masked_scalar_defect(a: ScalarJet, b: ScalarJet,
                         masked_vars: list[str]) -> float:
    """Defect of a - b on jet coefficients with zero exponent in every
    masked variable (terms the jet route could not evaluate)."""
    diff = a - b
    ctx = a.ctx
    keep = np.ones(ctx.T, dtype=bool)
    for var in masked_vars:
        keep &= ctx.midx[:, ctx.var_index(var)] == 0
    keep &= ctx.totals <= diff.vorder
    return max(float(np.abs(v * keep).max()) for v in diff.vals)


# ---------------------------------------------------------------------------
# auxiliary identities from the operator-form derivation

def proof_identities_check(result: FactorizationResult, tau: LnTauJet,
                           i: int) -> dict:
    """B_i = M(I - 2 e_ii) lam M^-1 satisfies B_i = lam I - 2 Q_i,
    B_i^2 = lam^2 I, lam dB/dlam = [P, B] + B, tr(B dB/dlam) = n lam;
    xi = M^-1 M_lam has only degrees <= -2 with X_{t_{i,j}} = xi_{ii,-(j+1)};
    and the quadratic relation for Q_{i,-1}."""
    seq, ctx = result.seq, result.ctx
    if seq.family != "gl":
        raise ShapeError("proof identities are for the gl family")
    n = ctx.n
    e = np.zeros((n, n), dtype=complex)
    e[i - 1, i - 1] = 1.0
    b_i = np.eye(n) - 2 * e
    B = result.M * Series.from_degree_matrices(ctx, {1: b_i}) * result.Minv
    Q = result.conjugated_base(f"e{i}")
    P = (result.M.dlambda() * result.Minv).shift(1)
    out = {}
    lam2 = Series.from_degree_matrices(ctx, {2: np.eye(n)})
    lam1 = Series.from_degree_matrices(ctx, {1: np.eye(n)})
    out["b_square"] = (B * B - lam2).max_abs()
    out["b_linear"] = (B - (lam1 - Q * 2.0)).max_abs()
    dB = B.dlambda()
    out["b_deriv"] = (dB.shift(1) - (P * B - B * P + B)).max_abs()
    trace = (B * dB).trace_coeff(1) - ScalarJet.const(ctx, float(n))
    worst_tr = trace.max_abs()
    for k in range(-2 * ctx.order - 2, 3):
        if k == 1:
            continue
        worst_tr = max(worst_tr, (B * dB).trace_coeff(k).max_abs())
    out["b_trace"] = worst_tr
    xi = result.Minv * result.M.dlambda()
    out["xi_support"] = max(xi.plus().max_abs(), xi.degree_slice(-1).max_abs())
    worst = 0.0
    for var in seq.variables:
        base, shift = seq.gens[var]
        if base != f"e{i}":
            continue
        j = shift + 1
        worst = max(worst, (tau.X.partial(var)
                            - xi.entry_jet(i - 1, i - 1, -(j + 1))).max_abs())
    out["xi_entry"] = worst
    q0 = Q.degree_slice(0)
    qm1 = Q.degree_slice(-1)
    es = Series.monomial(ctx, e)
    out["q_quadratic"] = (q0 * q0 - qm1 + es * qm1 + qm1 * es).max_abs()
    return out


def zeta_v_formula(result: FactorizationResult, ell: int) -> Series:
    """zeta_l(v_f) = -pi_1(Res_lam(lam**(l+1) M_lam M^-1 + lam**l M J M^-1))."""
    sj = script_j(result)
    x = ((result.M.dlambda() * result.Minv).shift(ell + 1)
         + (result.M * sj * result.Minv).shift(ell))
    offdiag = 1.0 - np.eye(result.ctx.n)
    return (-1.0) * x.degree_slice(-1).hadamard(offdiag)


# ---------------------------------------------------------------------------
# the sigma-restricted half action

def eta_field(f: Series, j: int) -> Series:
    """eta_j(f) = (1/2) zeta_{2j}(f), tangent to the sigma-twisted subgroup."""
    if j < 0:
        raise ShapeError("eta_field needs j >= 0")
    return virasoro_field(f, 2 * j, None).scale(0.5)


def eta_tangency_defect(spec: SplittingSpec, f: Series, j: int) -> float:
    """First-order invariance of the sigma reality condition along eta_j."""
    ext = f.with_eps(eta_field(f, j))
    return reality_check(spec, ext, level="group")


def eta_bracket_defect(f: Series, j: int, k: int) -> float:
    ej = eta_field(f, j)
    ek = eta_field(f, k)
    lhs = (directional_derivative(lambda g: eta_field(g, k), f, ej)
           - directional_derivative(lambda g: eta_field(g, j), f, ek))
    if j == k:
        return lhs.max_abs()
    rhs = eta_field(f, j + k) * float(k - j)
    return (lhs - rhs).max_abs()
