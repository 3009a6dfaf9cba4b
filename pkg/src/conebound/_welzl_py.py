"""Pure-Python move-to-front smallest enclosing ball (fallback for ``_welzl``).

Same algorithm and tolerances as the compiled kernel. The scan for the next
point outside the current ball is vectorised with numpy; the recursion over
support sets is plain Python.
"""

import numpy as np

INSIDE_REL = 1e-12
INSIDE_ABS = 1e-15
PIVOT_TOL = 1e-12


def circumball(points, support):
    """Smallest ball with every support point on its boundary.

    Returns ``(center, r2, ok)``; ``ok`` is False when the support set is
    affinely dependent.
    """
    k = len(support)
    dim = points.shape[1]
    if k == 0:
        return np.zeros(dim), -1.0, True
    p0 = points[support[0]]
    if k == 1:
        return p0.copy(), 0.0, True
    U = points[support[1:]] - p0
    A = U @ U.T
    rhs = 0.5 * np.einsum("ij,ij->i", U, U)
    lam = _solve(A, rhs)
    if lam is None:
        return None, None, False
    c = p0 + lam @ U
    d = c - p0
    return c, float(d @ d), True


def _solve(A, b):
    # Gaussian elimination with partial pivoting, mirroring the compiled kernel
    A = A.astype(float).copy()
    b = b.astype(float).copy()
    n = b.size
    scale = max(float(np.max(np.abs(np.diag(A)))), 1e-300)
    for col in range(n):
        piv = col + int(np.argmax(np.abs(A[col:, col])))
        if abs(A[piv, col]) < PIVOT_TOL * scale:
            return None
        if piv != col:
            A[[col, piv]] = A[[piv, col]]
            b[[col, piv]] = b[[piv, col]]
        for r in range(col + 1, n):
            f = A[r, col] / A[col, col]
            A[r, col:] -= f * A[col, col:]
            b[r] -= f * b[col]
    x = np.empty(n)
    for r in range(n - 1, -1, -1):
        x[r] = (b[r] - A[r, r + 1:] @ x[r + 1:]) / A[r, r]
    return x


def _mtf(points, order, end, support, fallback):
    c, r2, ok = circumball(points, support)
    if not ok:
        # the new point is (numerically) on the sphere through the old support
        return fallback
    best = (c, r2, list(support))
    if len(support) == points.shape[1] + 1:
        return best
    i = 0
    while i < end:
        c, r2, _ = best
        diff = points[order[i:end]] - c
        d2 = np.einsum("ij,ij->i", diff, diff)
        outside = np.nonzero(d2 > r2 + INSIDE_REL * max(r2, 0.0) + INSIDE_ABS)[0]
        if outside.size == 0:
            break
        i += int(outside[0])
        p = int(order[i])
        best = _mtf(points, order, i, support + [p], best)
        # move to front
        order[1:i + 1] = order[0:i].copy()
        order[0] = p
        i += 1
    return best


def smallest_enclosing_ball(points, order):
    """Smallest enclosing ball of the rows of `points`.

    Parameters
    ----------
    points : (N, n) float array
    order : (N,) int array
        Processing order (a permutation of ``range(N)``); modified in place.

    Returns
    -------
    center, r2, support
    """
    points = np.ascontiguousarray(points, dtype=float)
    order = np.asarray(order, dtype=np.intp)
    c, r2, support = _mtf(points, order, len(order), [], None)
    return np.asarray(c, dtype=float), float(r2), np.asarray(support, dtype=np.intp)
