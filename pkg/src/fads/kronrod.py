"""Fixed 43-point Gauss-Kronrod rule on [-1, 1].

The rule extends the 21-point Gauss-Legendre rule by the 22 Stieltjes
nodes and is exact for polynomials up to degree 65.  Constants were
generated by ``tools/gen_kronrod.py`` (exact rational construction,
60-digit root finding) and are frozen here so the package has no
build-time dependency on sympy/mpmath.
"""

import numpy as np

GK43_NODES = (
    -0.99896193068731718686,
    -0.99375217062038950026,
    -0.98318486356168595383,
    -0.96722683856630629432,
    -0.94614721677851262707,
    -0.92009933415040082879,
    -0.88912831533118433426,
    -0.85336336458331728365,
    -0.81305258084753191325,
    -0.76843996347567790862,
    -0.71972345257202475786,
    -0.66713880419741231931,
    -0.61099712378976603905,
    -0.55161883588721980706,
    -0.4892959088956686414,
    -0.42434212020743878357,
    -0.3571252536599210773,
    -0.2880213168024010966,
    -0.21738009387172883298,
    -0.14556185416089509094,
    -0.072967247595790589088,
    0.0,
    0.072967247595790589088,
    0.14556185416089509094,
    0.21738009387172883298,
    0.2880213168024010966,
    0.3571252536599210773,
    0.42434212020743878357,
    0.4892959088956686414,
    0.55161883588721980706,
    0.61099712378976603905,
    0.66713880419741231931,
    0.71972345257202475786,
    0.76843996347567790862,
    0.81305258084753191325,
    0.85336336458331728365,
    0.88912831533118433426,
    0.92009933415040082879,
    0.94614721677851262707,
    0.96722683856630629432,
    0.98318486356168595383,
    0.99375217062038950026,
    0.99896193068731718686,
)
GK43_WEIGHTS = (
    0.0027954812324115695086,
    0.0078183373021241792478,
    0.013304642607088317448,
    0.018560055408876216262,
    0.023574199083029030565,
    0.028518426570204953083,
    0.033402546320807622071,
    0.038083153453465002584,
    0.042496932881118485504,
    0.046697324731514497925,
    0.050697197796517511975,
    0.054418675178383649262,
    0.057810457497609522303,
    0.060898680204661962686,
    0.063695615249100799842,
    0.066149577815951110014,
    0.06822070626102521507,
    0.06992976500839875338,
    0.071293346363784556102,
    0.072275482222034062651,
    0.072845652830508441029,
    0.073027487962769082973,
    0.072845652830508441029,
    0.072275482222034062651,
    0.071293346363784556102,
    0.06992976500839875338,
    0.06822070626102521507,
    0.066149577815951110014,
    0.063695615249100799842,
    0.060898680204661962686,
    0.057810457497609522303,
    0.054418675178383649262,
    0.050697197796517511975,
    0.046697324731514497925,
    0.042496932881118485504,
    0.038083153453465002584,
    0.033402546320807622071,
    0.028518426570204953083,
    0.023574199083029030565,
    0.018560055408876216262,
    0.013304642607088317448,
    0.0078183373021241792478,
    0.0027954812324115695086,
)

_NODES = np.array(GK43_NODES)
_WEIGHTS = np.array(GK43_WEIGHTS)


def gk43_nodes_weights(lo, hi):
    """Affinely map the rule to [lo, hi]; returns (nodes, weights) arrays.

    ``lo``/``hi`` may be scalars or broadcastable arrays; output shapes are
    ``lo.shape + (43,)``.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = mid[..., None] + half[..., None] * _NODES
    w = half[..., None] * _WEIGHTS
    return x, w
