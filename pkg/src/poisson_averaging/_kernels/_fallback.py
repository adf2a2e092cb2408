"""Pure numpy implementation of the batched polynomial kernel."""

import numpy as np


def poly_eval_batch(points, exponents, coeffs):
    """Evaluate ``sum_t coeffs[t] * prod_i points[i] ** exponents[t, i]``.

    ``points`` has shape ``(d, N)``, ``exponents`` ``(T, d)`` (int64) and
    ``coeffs`` ``(T,)``.  Returns shape ``(N,)``.
    """
    points = np.asarray(points, dtype=np.float64)
    d, n = points.shape
    out = np.zeros(n)
    if exponents.shape[0] == 0:
        return out
    # powers[i][k] = points[i] ** k, built by repeated multiplication
    powers = []
    for i in range(d):
        row = [np.ones(n)]
        for _ in range(int(exponents[:, i].max())):
            row.append(row[-1] * points[i])
        powers.append(row)
    for t in range(exponents.shape[0]):
        term = np.full(n, coeffs[t])
        for i in range(d):
            e = exponents[t, i]
            if e:
                term = term * powers[i][e]
        out += term
    return out
