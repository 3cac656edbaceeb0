"""Pure numpy versions of the compiled rank-1 update kernels.

Same arithmetic as ``_kernels.pyx``; used when the extension is not built or
when ``PROEMLC_PURE_PYTHON`` is set.
"""

import numpy as np


def rank1_update(m_inv, beta, h, y):
    u = m_inv @ h
    denom = 1.0 + h @ u
    r = y - h @ beta
    v = u / np.sqrt(denom)
    m_inv -= np.outer(v, v)
    beta += np.outer(v / np.sqrt(denom), r)


def rank1_sweep(m_inv, beta, H, Y):
    for k in range(H.shape[0]):
        rank1_update(m_inv, beta, H[k], Y[k])
