"""Vacuum sequences, vacuum frames, and the hierarchy flows.

A vacuum sequence is a commuting family of generators J_v in the positive
half, each of the form (base element) * lambda**shift, together with the
flow-variable names.  Families provided here:

* ``akns``       -- J_j = a lambda**j with a regular diagonal (covers the
                    2x2 case a = diag(i,-i) and the vector case
                    a = diag(i,...,i,-i));
* ``odd_akns``   -- J_j = a lambda**(2j-1) (the twisted sl2 reductions:
                    mKdV with a = diag(i,-i), complex mKdV with diag(1,-1));
* ``gl``         -- J_{k,j} = e_kk lambda**j in the diagonal coordinates
                    t_{k,j}; x-translation is sum_k c_k d/dt_{k,1};
* ``kdv``        -- J_j = J**(2j-1) with J = a lambda + e_12, a = diag(1,-1),
                    for the twisted splitting of the KdV hierarchy.

The flow generated by J_v is u_t = [d/dx - (J_1 + u), (Q lambda**shift)_+]
evaluated on jets with d/dx acting as the x-combination of jet partials.
The closed-form equations of the named flows are kept here as fixtures; the
printed orientation of a few of them disagrees between their own sources,
so each closed form is checked in both orientations and the matching sign
is reported rather than assumed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .context import JetContext, default_window
from .errors import DimensionMismatch, ShapeError
from .series import ScalarJet, Series, commutator, jet_exp

__all__ = ["VacuumSequence", "akns_sequence", "odd_akns_sequence",
           "gl_sequence", "kdv_sequence", "vacuum_frame", "flow_rhs",
           "q_recursion_vector_akns", "named_flow_residual", "FlowCheck",
           "NAMED_FLOWS"]

LAX_TOL = 1e-8


@dataclass(frozen=True)
class VacuumSequence:
    """Commuting generators of a hierarchy plus its flow-variable layout."""

    family: str
    n: int
    a: np.ndarray
    variables: tuple[str, ...]
    bases: dict = field(repr=False)          # base key -> {degree: matrix}
    gens: dict = field(repr=False)           # var -> (base key, shift)
    x_comb: tuple = ()                       # ((var, coeff), ...) giving d/dx
    c: tuple = ()                            # gl: diagonal of a

    @property
    def j_max(self) -> int:
        top = 0
        for var, (base, shift) in self.gens.items():
            top = max(top, max(self.bases[base]) + shift)
        return top

    def context(self, order: int, window: tuple[int, int] | None = None) -> JetContext:
        lo, hi = window if window is not None else default_window(order, self.j_max)
        return JetContext(self.variables, order, self.n, lo, hi)

    def base_series(self, ctx: JetContext, key: str) -> Series:
        return Series.from_degree_matrices(ctx, self.bases[key])

    def generator(self, ctx: JetContext, var: str) -> Series:
        base, shift = self.gens[var]
        return self.base_series(ctx, key=base).shift(shift)

    def j1(self, ctx: JetContext) -> Series:
        """The x-generator: a*lambda for the diagonal families, J for KdV."""
        if self.family == "kdv":
            return self.base_series(ctx, "J")
        return Series.from_degree_matrices(ctx, {1: self.a})

    def partial_x(self, value):
        """d/dx on jets: t_1 for the rank-one families, sum c_k d/dt_{k,1}
        for the diagonal coordinates of the gl family."""
        out = None
        for var, coeff in self.x_comb:
            term = value.jet_partial(var) * coeff
            out = term if out is None else out + term
        return out

    def commutation_defect(self, ctx: JetContext) -> float:
        worst = 0.0
        gens = [self.generator(ctx, v) for v in self.variables]
        for i in range(len(gens)):
            for j in range(i + 1, len(gens)):
                worst = max(worst, commutator(gens[i], gens[j]).max_abs())
        return worst

    def y_shape_mask(self) -> np.ndarray:
        """Entry mask of the phase space Y = [J_1, L_-]_+ for the family."""
        n = self.n
        if self.family in ("gl", "gl_power"):
            return (np.ones((n, n)) - np.eye(n)).astype(bool)
        if self.family == "kdv":
            m = np.zeros((2, 2), dtype=bool)
            m[1, 0] = True
            return m
        m = np.zeros((n, n), dtype=bool)
        m[: n - 1, n - 1] = True
        m[n - 1, : n - 1] = True
        return m


def akns_sequence(n: int, num_flows: int, a: np.ndarray | None = None) -> VacuumSequence:
    """J_j = a lambda**j; default a = diag(i,...,i,-i) (2x2 for n = 2)."""
    if a is None:
        a = np.diag([1j] * (n - 1) + [-1j])
    a = np.asarray(a, dtype=complex)
    variables = tuple(f"t{j}" for j in range(1, num_flows + 1))
    gens = {f"t{j}": ("J1", j - 1) for j in range(1, num_flows + 1)}
    return VacuumSequence(family="akns", n=n, a=a, variables=variables,
                          bases={"J1": {1: a}}, gens=gens,
                          x_comb=(("t1", 1.0),))


def odd_akns_sequence(a: np.ndarray, num_flows: int) -> VacuumSequence:
    """J_j = a lambda**(2j-1) (vacuum sequence of the twisted sl2 reductions)."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    variables = tuple(f"t{j}" for j in range(1, num_flows + 1))
    gens = {f"t{j}": ("J1", 2 * j - 2) for j in range(1, num_flows + 1)}
    return VacuumSequence(family="odd_akns", n=n, a=a, variables=variables,
                          bases={"J1": {1: a}}, gens=gens,
                          x_comb=(("t1", 1.0),))


def gl_sequence(c, num_flows: int, parity: str = "all") -> VacuumSequence:
    """J_{k,j} = e_kk lambda**j in the t_{k,j} coordinates, a = diag(c).

    ``parity="odd"`` keeps only j in {1, 3, ...} (the vacuum sequence of the
    sigma-twisted restriction, whose generators must sit in the twisted
    subalgebra: e_kk is symmetric, so only odd lambda powers qualify)."""
    c = tuple(complex(x) for x in c)
    n = len(c)
    if len(set(c)) != n:
        raise DimensionMismatch("gl family needs pairwise distinct diagonal")
    a = np.diag(c)
    if parity == "odd":
        exponents = tuple(range(1, 2 * num_flows, 2))
    else:
        exponents = tuple(range(1, num_flows + 1))
    variables = tuple(f"t{k}_{j}" for k in range(1, n + 1) for j in exponents)
    bases = {}
    gens = {}
    for k in range(1, n + 1):
        e = np.zeros((n, n), dtype=complex)
        e[k - 1, k - 1] = 1.0
        bases[f"e{k}"] = {1: e}
        for j in exponents:
            gens[f"t{k}_{j}"] = (f"e{k}", j - 1)
    x_comb = tuple((f"t{k}_1", c[k - 1]) for k in range(1, n + 1))
    return VacuumSequence(family="gl", n=n, a=a, variables=variables,
                          bases=bases, gens=gens, x_comb=x_comb, c=c)


def gl_power_sequence(c, num_flows: int) -> VacuumSequence:
    """The same gl hierarchy in the power-sum coordinates s_{i,j} with
    generators a**i lambda**j; related to :func:`gl_sequence` by the linear
    change t_{k,j} = sum_i s_{i,j} c_k**i."""
    c = tuple(complex(x) for x in c)
    n = len(c)
    a = np.diag(c)
    variables = tuple(f"s{i}_{j}" for i in range(1, n + 1)
                      for j in range(1, num_flows + 1))
    bases = {}
    gens = {}
    power = np.eye(n, dtype=complex)
    for i in range(1, n + 1):
        power = power @ a
        bases[f"a{i}"] = {1: power.copy()}
        for j in range(1, num_flows + 1):
            gens[f"s{i}_{j}"] = (f"a{i}", j - 1)
    return VacuumSequence(family="gl_power", n=n, a=a, variables=variables,
                          bases=bases, gens=gens, x_comb=(("s1_1", 1.0),),
                          c=c)


def kdv_sequence(num_flows: int) -> VacuumSequence:
    """J_j = J**(2j-1), J = a lambda + e_12 with a = diag(1,-1); since
    J**2 = lambda**2 I this is lambda**(2j-2) J."""
    a = np.diag([1.0, -1.0]).astype(complex)
    J = {1: a, 0: np.array([[0, 1], [0, 0]], dtype=complex)}
    variables = tuple(f"t{j}" for j in range(1, num_flows + 1))
    gens = {f"t{j}": ("J", 2 * j - 2) for j in range(1, num_flows + 1)}
    return VacuumSequence(family="kdv", n=2, a=a, variables=variables,
                          bases={"J": J}, gens=gens, x_comb=(("t1", 1.0),))


def vacuum_frame(seq: VacuumSequence, ctx: JetContext) -> Series:
    """V(t) = exp(sum_v t_v J_v) as a jet."""
    x = Series.zeros(ctx)
    for v in seq.variables:
        base, shift = seq.gens[v]
        coeffs = {k + shift: m for k, m in seq.bases[base].items()}
        x = x + Series.from_degree_matrices(ctx, coeffs,
                                            alpha=_unit_index(ctx, v))
    return jet_exp(x)


def _unit_index(ctx: JetContext, var: str) -> tuple[int, ...]:
    e = [0] * len(ctx.variables)
    e[ctx.var_index(var)] = 1
    return tuple(e)


def lax_bracket(seq: VacuumSequence, u: Series, q: Series, sign: int = -1) -> Series:
    """[d/dx + sign (J_1 + u), Q] on jets (sign -1 is the defining equation)."""
    ctx = u.ctx
    j1 = seq.j1(ctx)
    return seq.partial_x(q) + float(sign) * commutator(j1 + u, q)


def flow_rhs(seq: VacuumSequence, u: Series, q: Series, var: str) -> Series:
    """[d/dx - (J_1 + u), (phi_v(Q) lambda**s)_+] restricted to its
    degree-zero part (the higher degrees cancel when Q satisfies the Lax
    condition, which is validated first).

    phi_v is realized per family: a lambda shift of Q for the rank-one
    families, and for the diagonal gl coordinates the Lagrange polynomial
    L_k with L_k(c_i) = delta_ik applied to Q monomial by monomial,
    e_kk lam**j = sum_m beta_m (a lam)**m lam**(j-m)."""
    ctx = u.ctx
    res = lax_bracket(seq, u, q).max_abs()
    if res > LAX_TOL * max(1.0, q.max_abs()):
        raise ShapeError(f"flow_rhs: Q fails the Lax condition (residual {res:.3e})")
    base, shift = seq.gens[var]
    if seq.family in ("gl", "gl_power"):
        b = _gl_generator_of_q(seq, q, base, shift).plus()
    else:
        b = q.shift(shift).plus()
    out = seq.partial_x(b) - commutator(seq.j1(ctx) + u, b)
    spill = (out - out.degree_slice(0)).max_abs()
    if spill > LAX_TOL * max(1.0, out.max_abs()):
        raise ShapeError(f"flow_rhs: nonzero lambda degrees in the flow "
                         f"({spill:.3e})")
    out = out.degree_slice(0)
    mask = seq.y_shape_mask()
    off = (out - out.hadamard(mask.astype(float))).max_abs()
    if off > LAX_TOL * max(1.0, out.max_abs()):
        raise ShapeError(f"flow_rhs: result leaves the phase-space shape "
                         f"({off:.3e})")
    return out


def _gl_generator_of_q(seq: VacuumSequence, q: Series, base: str,
                       shift: int) -> Series:
    """M (base) lam**(shift+1) M^-1 rebuilt from Q = M a lam M^-1 alone."""
    mat = seq.bases[base][1]
    if base.startswith("e"):
        k = int(base[1:])
        c = np.array(seq.c)
        roots = np.delete(c, k - 1)
        beta = np.poly(roots) / np.prod(c[k - 1] - roots)  # highest power first
    else:  # gl_power basis a**i
        i = int(base[1:])
        beta = np.zeros(i + 1, dtype=complex)
        beta[0] = 1.0
    deg = len(beta) - 1
    out = None
    power = Series.identity(q.ctx)
    for m in range(deg + 1):
        coeff = beta[deg - m]
        term = (power * coeff).shift(shift + 1 - m)
        out = term if out is None else out + term
        if m < deg:
            power = power * q
    return out

def q_recursion_vector_akns(seq: VacuumSequence, u: Series, depth: int):
    """Solve Q = a lambda + u + sum_{j>=1} Q_{-j} lambda**-j order by order.

    Splitting Q_{-j} = P_{-j} + T_{-j} into the off-diagonal-block and
    block-diagonal parts, the x-evolution gives
    P_{-(j+1)} = -a/2 ((P_{-j})_x + [T_{-j}, u]) and conjugacy gives
    T_{-(j+1)} = a/2 sum_{i=0..j} (P_{-i} P_{-(j-i)} + T_{-i} T_{-(j-i)}).
    Returns (Q series, [P_0..], [T_0..]).
    """
    ctx = u.ctx
    if seq.family != "akns":
        raise ShapeError("the closed recursion is for the vector AKNS family")
    mask = seq.y_shape_mask()
    stray = (u - u.hadamard(mask.astype(float))).max_abs()
    if stray > 1e-12 * max(1.0, u.max_abs()):
        raise ShapeError(f"q_recursion: u leaves the off-diagonal block shape "
                         f"({stray:.3e})")
    a_s = Series.monomial(ctx, seq.a)
    P = [u]
    T = [Series.zeros(ctx)]
    for j in range(depth):
        px = seq.partial_x(P[j])
        P.append((a_s * (px + commutator(T[j], u))).scale(-0.5))
        acc = Series.zeros(ctx)
        for i in range(j + 1):
            acc = acc + P[i] * P[j - i] + T[i] * T[j - i]
        T.append((a_s * acc).scale(0.5))
    q = Series.from_degree_matrices(ctx, {1: seq.a}) + u
    for j in range(1, depth + 1):
        q = q + (P[j] + T[j]).shift(-j)
    return q, P, T


# ---------------------------------------------------------------------------
# named closed-form flows

@dataclass
class FlowCheck:
    name: str
    component: str
    sign: int            # orientation of the closed form that matched
    residual: float      # residual of the matching orientation
    residual_other: float


def _entry(u: Series, i: int, j: int) -> ScalarJet:
    return u.entry_jet(i, j, 0)


def _dx(seq: VacuumSequence, s: ScalarJet) -> ScalarJet:
    out = None
    for var, coeff in seq.x_comb:
        term = s.partial(var) * coeff
        out = term if out is None else out + term
    return out


def _best_sign(lhs, rhs) -> tuple[int, float, float]:
    r_plus = (lhs - rhs).max_abs()
    r_minus = (lhs + rhs).max_abs()
    if r_plus <= r_minus:
        return 1, r_plus, r_minus
    return -1, r_minus, r_plus


def _scalar_records(name, seq, u, var, comps) -> list[FlowCheck]:
    out = []
    for comp, (i, j), rhs_fn in comps:
        y = _entry(u, i, j)
        lhs = y.partial(var)
        rhs = rhs_fn(y)
        sign, res, other = _best_sign(lhs, rhs)
        out.append(FlowCheck(name, comp, sign, res, other))
    return out


def named_flow_residual(seq: VacuumSequence, u: Series, name: str) -> list[FlowCheck]:
    """Residuals of the printed closed-form equation for a named flow.

    Both orientations of the right-hand side are evaluated and the matching
    one reported; the comparison happens on jets of order d - (equation
    order) automatically through the trusted-order bookkeeping.
    """
    ctx = u.ctx
    if name in ("akns_t2", "akns_t3", "nls"):
        if seq.family != "akns" or seq.n != 2:
            raise ShapeError(f"{name} needs the 2x2 AKNS family")
        if not np.allclose(seq.a, np.diag([1j, -1j])):
            raise ShapeError(f"{name} closed forms assume a = diag(i,-i)")
        q, r = _entry(u, 0, 1), _entry(u, 1, 0)
        dx = lambda s: _dx(seq, s)
        if name == "akns_t2":
            comps = [
                ("q", (0, 1), lambda y: (dx(dx(q)) - 2.0 * q * q * r).scale(-0.5j)),
                ("r", (1, 0), lambda y: (dx(dx(r)) - 2.0 * q * r * r).scale(0.5j)),
            ]
            return _scalar_records(name, seq, u, "t2", comps)
        if name == "akns_t3":
            comps = [
                ("q", (0, 1), lambda y: (dx(dx(dx(q))) - 6.0 * q * dx(q) * r).scale(-0.25)),
                ("r", (1, 0), lambda y: (dx(dx(dx(r))) - 6.0 * q * r * dx(r)).scale(0.25)),
            ]
            return _scalar_records(name, seq, u, "t3", comps)
        # NLS: r_t = (i/2)(r_xx + 2 |r|^2 r) on the u(2) real form
        comps = [("r", (1, 0),
                  lambda y: (dx(dx(r)) + 2.0 * r.conj() * r * r).scale(0.5j))]
        return _scalar_records(name, seq, u, "t2", comps)

    if name == "mkdv":
        if seq.family != "odd_akns" or not np.allclose(seq.a, np.diag([1j, -1j])):
            raise ShapeError("mkdv needs the odd sl2 sequence with a = diag(i,-i)")
        r = _entry(u, 1, 0)
        dx = lambda s: _dx(seq, s)
        comps = [("r", (1, 0),
                  lambda y: (dx(dx(dx(r))) + 6.0 * r * r * dx(r)).scale(0.25))]
        return _scalar_records(name, seq, u, "t2", comps)

    if name == "cmkdv":
        if seq.family != "odd_akns" or not np.allclose(seq.a, np.diag([1.0, -1.0])):
            raise ShapeError("cmkdv needs the odd sl2 sequence with a = diag(1,-1)")
        q = _entry(u, 0, 1)
        dx = lambda s: _dx(seq, s)
        comps = [("q", (0, 1),
                  lambda y: (dx(dx(dx(q))) - 6.0 * q * q * dx(q)).scale(0.25))]
        return _scalar_records(name, seq, u, "t2", comps)

    if name == "kdv":
        if seq.family != "kdv":
            raise ShapeError("kdv needs the twisted splitting family")
        r = _entry(u, 1, 0)
        dx = lambda s: _dx(seq, s)
        comps = [("r", (1, 0),
                  lambda y: (dx(dx(dx(r))) - 6.0 * r * dx(r)).scale(0.25))]
        return _scalar_records(name, seq, u, "t2", comps)

    if name in ("vector_akns_t2", "vector_akns_t3", "vector_nls", "vector_mkdv"):
        want = "odd_akns" if name == "vector_mkdv" else "akns"
        if seq.family != want:
            raise ShapeError(f"{name} needs the {want} vacuum sequence")
        nv = seq.n - 1
        uq = u.block_mask(range(nv), [nv])
        ur = u.block_mask([nv], range(nv))
        dxs = seq.partial_x
        out = []
        if name == "vector_akns_t2":
            var = "t2"
            rq = (dxs(dxs(uq)).scale(-1.0) + 2.0 * uq * ur * uq).scale(0.5j)
            rr = (dxs(dxs(ur)) - 2.0 * ur * uq * ur).scale(0.5j)
        elif name == "vector_akns_t3":
            # u_t3 = -u_xxx/4 + (3/4)(u_x u^2 + u^2 u_x); the stated table's
            # middle terms disagree with its own scalar reduction, so the
            # closed form here is the derived one (q r q_x terms only)
            var = "t3"
            uqx, urx = dxs(uq), dxs(ur)
            rq = (dxs(dxs(uqx)).scale(-1.0) + 3.0 * uq * ur * uqx
                  + 3.0 * uqx * ur * uq).scale(0.25)
            rr = (dxs(dxs(urx)).scale(-1.0) + 3.0 * ur * uq * urx
                  + 3.0 * urx * uq * ur).scale(0.25)
        elif name == "vector_nls":
            var = "t2"
            uqct = uq.conj_coeffs().transpose()
            rq = (dxs(dxs(uq)) + 2.0 * uq * uqct * uq).scale(-0.5j)
            rr = None
        else:  # vector_mkdv on the real symmetric form
            var = "t2"
            urx = dxs(ur)
            rq = None
            rr = (dxs(dxs(urx)) + 3.0 * ur * ur.transpose() * urx
                  + 3.0 * ur * urx.transpose() * ur).scale(-0.25)
        for comp, blk, rhs in (("q", uq, rq), ("r", ur, rr)):
            if rhs is None:
                continue
            sign, res, other = _best_sign(blk.jet_partial(var), rhs)
            out.append(FlowCheck(name, comp, sign, res, other))
        return out

    if name == "n_wave":
        if seq.family != "gl":
            raise ShapeError("n_wave needs the gl family")
        c = np.array(seq.c)
        denom = c[:, None] - c[None, :]
        np.fill_diagonal(denom, 1.0)
        ad_inv = (1.0 / denom) * (1.0 - np.eye(seq.n))
        out = []
        for k in range(1, seq.n + 1):
            e = np.zeros((seq.n, seq.n), dtype=complex)
            e[k - 1, k - 1] = 1.0
            es = Series.monomial(u.ctx, e)
            w = commutator(es, u.hadamard(ad_inv))
            rhs = seq.partial_x(w) - commutator(u, w)
            sign, res, other = _best_sign(u.jet_partial(f"t{k}_1"), rhs)
            out.append(FlowCheck(name, f"t{k}_1", sign, res, other))
        return out

    raise ShapeError(f"unknown named flow {name!r}")


NAMED_FLOWS = ("akns_t2", "akns_t3", "nls", "mkdv", "cmkdv", "kdv",
               "vector_akns_t2", "vector_akns_t3", "vector_nls",
               "vector_mkdv", "n_wave")
