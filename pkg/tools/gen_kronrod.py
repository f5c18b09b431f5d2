"""Generate the 43-point Gauss-Kronrod rule frozen into fads/kronrod.py.

The rule extends the 21-point Gauss-Legendre rule with the 22 roots of the
Stieltjes polynomial E_22, i.e. the degree-22 monic polynomial satisfying

    integral_{-1}^{1} P_21(x) E_22(x) x^j dx = 0   for j = 0..21.

The linear system for the coefficients of E_22 is solved exactly with
sympy rationals; roots and interpolatory weights are then computed with
mpmath at 60 significant digits.  The printed constants go verbatim into
``src/fads/kronrod.py``.

Run:  python tools/gen_kronrod.py
"""

import mpmath as mp
import sympy as sp

N = 21  # embedded Gauss rule size; Kronrod rule has 2N+1 = 43 nodes


def stieltjes_coefficients(n):
    x = sp.Symbol("x")
    pn = sp.expand(sp.legendre(n, x))
    # E(x) = x^(n+1) + sum_k c_k x^k, orthogonality to x^j * P_n for j <= n
    cs = sp.symbols(f"c0:{n + 1}")
    e = x ** (n + 1) + sum(c * x**k for k, c in enumerate(cs))
    eqs = []
    for j in range(n + 1):
        eqs.append(sp.integrate(pn * e * x**j, (x, -1, 1)))
    sol = sp.linsolve(eqs, cs)
    (vals,) = sol
    coeffs = list(vals) + [sp.Integer(1)]  # ascending powers 0..n+1
    return coeffs


def main():
    mp.mp.dps = 60
    coeffs = stieltjes_coefficients(N)
    # mpmath polyroots wants descending powers
    desc = [mp.mpf(sp.Rational(c)) for c in reversed(coeffs)]
    roots = mp.polyroots(desc, maxsteps=400, extraprec=300)
    assert all(abs(mp.im(r)) < mp.mpf("1e-40") for r in roots)
    kron_new = sorted(mp.mpf(mp.re(r)) for r in roots)

    # Gauss-Legendre 21 nodes: roots of P_21
    x = sp.Symbol("x")
    p21 = sp.Poly(sp.expand(sp.legendre(N, x)), x).all_coeffs()
    g_roots = mp.polyroots(
        [mp.mpf(sp.Rational(c)) for c in p21], maxsteps=400, extraprec=300
    )
    gauss = sorted(mp.mpf(mp.re(r)) for r in g_roots)

    nodes = sorted(gauss + kron_new)
    assert len(nodes) == 2 * N + 1

    # interpolatory weights from the moment equations (Vandermonde, 60 dps)
    m = 2 * N + 1
    v = mp.matrix(m, m)
    rhs = mp.matrix(m, 1)
    for k in range(m):
        for i in range(m):
            v[k, i] = nodes[i] ** k
        rhs[k] = mp.mpf(2) / (k + 1) if k % 2 == 0 else mp.mpf(0)
    w = mp.lu_solve(v, rhs)

    # degree exactness check: Kronrod extension of G_n (n odd) is exact to 3n+2
    for k in range(0, 3 * N + 3):
        quad = mp.fsum(w[i] * nodes[i] ** k for i in range(m))
        exact = mp.mpf(2) / (k + 1) if k % 2 == 0 else mp.mpf(0)
        assert abs(quad - exact) < mp.mpf("1e-45"), (k, quad, exact)
    print(f"# degree exactness verified through {3 * N + 2}")

    print("GK43_NODES = (")
    for nd in nodes:
        print(f"    {mp.nstr(nd, 20)},")
    print(")")
    print("GK43_WEIGHTS = (")
    for i in range(m):
        print(f"    {mp.nstr(w[i], 20)},")
    print(")")


if __name__ == "__main__":
    main()
