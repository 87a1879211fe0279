"""Shared oracles and generators for the test suite.

The oracles here are deliberately naive (dict-based double sums) and never
call the vectorized kernels they are used to check.
"""

from __future__ import annotations

import numpy as np

from loopjet import JetContext, ScalarJet, Series


def rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def random_matrix(gen, n: int, scale: float = 1.0) -> np.ndarray:
    return scale * (gen.standard_normal((n, n)) + 1j * gen.standard_normal((n, n)))


def random_laurent_dict(gen, n: int, lo: int, hi: int, scale: float = 1.0):
    return {k: random_matrix(gen, n, scale) for k in range(lo, hi + 1)}


def series_from_dict(ctx: JetContext, coeffs, alpha=0, exact=True) -> Series:
    return Series.from_degree_matrices(ctx, coeffs, alpha=alpha, exact=exact)


def conv_oracle(a: dict, b: dict) -> dict:
    """Brute-force double-sum Laurent convolution over all stored degrees."""
    out: dict = {}
    for ka, ma in a.items():
        for kb, mb in b.items():
            k = ka + kb
            out[k] = out.get(k, 0) + ma @ mb
    return out


def jet_conv_oracle(a: dict, b: dict, order: int) -> dict:
    """Brute-force multi-index Cauchy product (values: numpy arrays)."""
    out: dict = {}
    for aa, va in a.items():
        for ab, vb in b.items():
            c = tuple(x + y for x, y in zip(aa, ab))
            if sum(c) > order:
                continue
            out[c] = out.get(c, 0) + va * vb if np.isscalar(va) else out.get(c, 0) + va @ vb
    return out


def random_jet_series(ctx: JetContext, gen, lo: int, hi: int,
                      scale: float = 0.5, exact: bool = True) -> Series:
    """Random series with content on every jet index and degrees [lo, hi]."""
    out = Series.zeros(ctx)
    for row in range(ctx.T):
        coeffs = random_laurent_dict(gen, ctx.n, lo, hi, scale)
        out = out + Series.from_degree_matrices(ctx, coeffs,
                                                alpha=row, exact=exact)
    return out


def random_scalar_jet(ctx: JetContext, gen, scale: float = 0.5) -> ScalarJet:
    vals = scale * (gen.standard_normal(ctx.T) + 1j * gen.standard_normal(ctx.T))
    return ScalarJet(ctx, (vals.astype(np.complex128),), ctx.order)


def jet_dict(series: Series, degrees) -> dict:
    """Read a series back into a {(alpha, k): matrix} dict via trusted reads."""
    out = {}
    for row in range(series.ctx.T):
        alpha = tuple(series.ctx.midx[row])
        for k in degrees:
            out[(alpha, k)] = series.coeff(alpha, k)
    return out
