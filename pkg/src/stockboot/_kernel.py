"""Compiled inner loop of the forward simulation.

Kept in its own module (a real file on disk) so numba can cache the compiled
function between processes. Only plain float64 arrays cross this boundary.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def run_forward(n0, G, step_survival, sel_com, weight, landings_kt,
                rec, rec_spread, step_smar, step_soct, max_removal,
                n_smar, n_soct, catch, n_eoy, shortfall, bsel_out):
    """March the population through every step, filling the output arrays.

    n0 is consumed as the working state (pass a copy). Within a step the
    order is: record survey snapshots, grow, survive, remove landings; at the
    last step of a year the end-of-year state is recorded before ageing and
    recruitment.
    """
    n_years, steps = landings_kt.shape
    nages, nbins = n0.shape
    N = n0
    for y in range(n_years):
        for s in range(steps):
            if s == step_smar:
                n_smar[y] = N
            if s == step_soct:
                n_soct[y] = N
            N = np.dot(N, G)
            N *= step_survival
            bsel = 0.0
            for a in range(nages):
                for l in range(nbins):
                    bsel += N[a, l] * sel_com[l] * weight[l]
            bsel_out[y, s] = bsel
            want = landings_kt[y, s]
            if want > 0.0:
                lam = want / bsel if bsel > 0.0 else 0.0
                got = 0.0
                for l in range(nbins):
                    f = lam * sel_com[l]
                    if f > max_removal:
                        f = max_removal
                    for a in range(nages):
                        c = N[a, l] * f
                        catch[y, s, a, l] = c
                        N[a, l] -= c
                        got += c * weight[l]
                if got < want * (1.0 - 1e-9):
                    shortfall[y, s] = want - got
            if s == steps - 1:
                n_eoy[y] = N
                # ageing: the oldest age class absorbs its predecessor
                for l in range(nbins):
                    N[nages - 1, l] += N[nages - 2, l]
                for a in range(nages - 2, 0, -1):
                    for l in range(nbins):
                        N[a, l] = N[a - 1, l]
                if y < n_years - 1:
                    for l in range(nbins):
                        N[0, l] = rec[y + 1] * rec_spread[l]
                else:
                    for l in range(nbins):
                        N[0, l] = 0.0
