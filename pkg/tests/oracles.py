"""Independent reference computations used by the tests.

Nothing here calls the package's integrator or quadrature.
"""

import numpy as np

_X, _W = np.polynomial.legendre.leggauss(24)


def _gauss_nodes(lo, hi):
    """Gauss-Legendre nodes/weights on [lo, hi]; lo, hi broadcast."""
    lo = np.asarray(lo, dtype=float)[..., None]
    hi = np.asarray(hi, dtype=float)[..., None]
    half = 0.5 * (hi - lo)
    return lo + half * (_X + 1), half * _W


def partition_integral_oracle(s0, D0, lo, t, panels=8):
    """F(t) = int_lo^t exp{int_lo^tau [s0 - I(lo, s)] ds} D0(tau) dtau.

    I(lo, s) = int_lo^s exp{-int_sigma^s s0} D0(sigma) dsigma.  Four nested
    composite Gauss-Legendre rules; ``s0`` and ``D0`` are vectorized callables.
    """
    def inner_I(s):
        sig, w = _gauss_nodes(lo, s)
        r, wr = _gauss_nodes(sig, s[..., None])
        decay = np.exp(-np.sum(wr * s0(r), axis=-1))
        return np.sum(w * decay * D0(sig), axis=-1)

    def Lam(tau):
        s, w = _gauss_nodes(lo, tau)
        return np.sum(w * (s0(s) - inner_I(s)), axis=-1)

    edges = np.linspace(lo, t, panels + 1)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        tau, w = _gauss_nodes(a, b)
        total += float(np.sum(w * np.exp(Lam(tau)) * D0(tau)))
    return total
