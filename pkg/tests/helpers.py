"""Small constructors shared by the test modules."""
import numpy as np

from adjmm.operator import dense_pair
from adjmm.sampling import DirectionPair, IteratePair

E1, E2 = np.array([1.0, 0.0]), np.array([0.0, 1.0])


def frame_2x2(M):
    """Pair for A = M, V = 0 with u = v = e1 and w = x = e2.

    In this frame the two-step coefficients are (a, b, c, d) = (M11, M21, M12, M22)
    and the one-step ones are a = M12 + M21, b = 2 (M22 - M11).
    """
    M = np.asarray(M, dtype=float)
    pair = dense_pair(M, np.zeros_like(M))
    it = IteratePair(E1.copy(), E1.copy(), float(M[0, 0]))
    return pair, it, DirectionPair(w=E2.copy(), x=E2.copy())


def from_abcd(a, b, c, d):
    return frame_2x2([[a, c], [b, d]])


# (criterion, passed, detail) lines from the acceptance module, echoed in the
# terminal summary so they show up without -s
ACCEPTANCE = []


def record(number, passed, detail):
    line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}"
    ACCEPTANCE.append((number, passed, line))
    print(line)
    return passed
