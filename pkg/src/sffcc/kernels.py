"""Hot per-trial kernels: noise sampling, RUS fusions, syndrome analysis.

Every function here is compiled with numba unless ``SFFCC_NUMBA=0``; the pure
Python path runs the identical source and consumes the identical random
stream (a counter-free splitmix64 threaded through every sampler), so both
backends are bit-for-bit reproducible from a trial seed.

Error-propagation conventions (validated against :mod:`sffcc.oracle`):

* photon emission copies the spin X bit onto the photon and transfers the
  spin Z bit to it;
* branching adds an X to the photon and, except for the first emission of
  the cycle, an X to the spin;
* an odd number of X-type faults between the two time-bin excitations loses
  the photon and leaves a spin X plus 50/50 dephasing; an even, non-zero
  number cancels to dephasing alone;
* X/Z faults after the late excitation or on the closing pulse stay on the
  spin, to be carried into later photons.
"""

from __future__ import annotations

import numpy as np

from .backend import jit, jit_rng

MASK64 = 0xFFFFFFFFFFFFFFFF
_INV53 = 1.0 / 9007199254740992.0

# indices into the packed noise-parameter vector
P_LOSS, P_BRANCH, P_DEP, P_ZSPIN, P_XPHOT, P_ZPHOT, P_BLINK_A, P_BLINK_D, P_KAPPA = range(9)
N_PARAMS = 9

# policy flag indices
F_BIAS, F_REINIT, F_BUFFER_NOISE = range(3)

# slot outcome states
OUT_OK = 0
OUT_ERASED = 1


@jit_rng
def rng_uniform(state):
    """Advance the splitmix64 stream; returns (state, u) with u in [0, 1)."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    z = z ^ (z >> 31)
    return state, float(z >> 11) * _INV53


@jit
def _spin_fault_slot(state, v, sx, sz, p_dep, kappa, laser_here):
    """Depolarising slot on a pulse with no emission in flight: plain spin Pauli."""
    if p_dep > 0.0:
        state, u = rng_uniform(state)
        if u < p_dep:
            k = int(u * 3.0 / p_dep)
            if k > 2:
                k = 2
            if k != 2:          # X or Y component
                sx[v] ^= 1
            if k != 0:          # Y or Z component
                sz[v] ^= 1
    if laser_here and kappa > 0.0:
        state, u = rng_uniform(state)
        if u < kappa:
            sx[v] ^= 1
    return state


@jit
def hadamard_step(state, v, sx, sz, params):
    """Spin pi/2 pulse starting a new encoded qubit: swap X/Z then pulse noise."""
    tmp = sx[v]
    sx[v] = sz[v]
    sz[v] = tmp
    state = _spin_fault_slot(state, v, sx, sz, params[P_DEP], params[P_KAPPA], True)
    if params[P_ZSPIN] > 0.0:
        state, u = rng_uniform(state)
        if u < params[P_ZSPIN]:
            sz[v] ^= 1
    return state


@jit
def buffer_step(state, v, sx, sz, params):
    """Idle refocusing pi pulse while waiting for the layer to complete."""
    state = _spin_fault_slot(state, v, sx, sz, params[P_DEP], params[P_KAPPA], True)
    if params[P_ZSPIN] > 0.0:
        state, u = rng_uniform(state)
        if u < params[P_ZSPIN]:
            sz[v] ^= 1
    return state


@jit
def emit_photon(state, v, sx, sz, blink, first, params):
    """One time-bin emission round; returns (state, px, pz, lost)."""
    lost = 0
    pa = params[P_BLINK_A]
    pd = params[P_BLINK_D]
    if pa > 0.0 or pd > 0.0:
        state, u = rng_uniform(state)
        if blink[v] == 1:
            if u < pd:
                blink[v] = 0
        else:
            if u < pa:
                blink[v] = 1
        if blink[v] == 0:
            lost = 1

    # effective CNOT: spin X copied onto the photon, spin Z transferred to it
    px = sx[v]
    pz = sz[v]
    sz[v] = 0

    if params[P_BRANCH] > 0.0:
        state, u = rng_uniform(state)
        if u < params[P_BRANCH]:
            px ^= 1
            if first[v] == 0:
                sx[v] ^= 1

    # faults between the two excitations (after early pulse, after intra-bin pi)
    n_x = 0
    p_dep = params[P_DEP]
    if p_dep > 0.0:
        for _slot in range(2):
            state, u = rng_uniform(state)
            if u < p_dep:
                k = int(u * 3.0 / p_dep)
                if k > 2:
                    k = 2
                if k != 2:
                    n_x += 1
                if k != 0:
                    pz ^= 1
    if params[P_KAPPA] > 0.0:  # laser-induced flip on the intra-bin pi pulse
        state, u = rng_uniform(state)
        if u < params[P_KAPPA]:
            n_x += 1
    if n_x > 0:
        if n_x % 2 == 1:       # photon leaves the qubit space; spin X plus dephasing
            lost = 1
            sx[v] ^= 1
            state, u = rng_uniform(state)
            if u < 0.5:
                sz[v] ^= 1
        else:                  # straddling X pair cancels, dephasing remains
            state, u = rng_uniform(state)
            if u < 0.5:
                sz[v] ^= 1

    # faults after the late excitation and on the closing pi pulse stay on the spin
    if p_dep > 0.0:
        for _slot in range(2):
            state, u = rng_uniform(state)
            if u < p_dep:
                k = int(u * 3.0 / p_dep)
                if k > 2:
                    k = 2
                if k != 2:
                    sx[v] ^= 1
                if k != 0:
                    sz[v] ^= 1
    if params[P_KAPPA] > 0.0:  # laser flip on the closing pi pulse
        state, u = rng_uniform(state)
        if u < params[P_KAPPA]:
            sx[v] ^= 1
    if params[P_ZSPIN] > 0.0:
        state, u = rng_uniform(state)
        if u < params[P_ZSPIN]:
            sz[v] ^= 1

    if params[P_LOSS] > 0.0:
        state, u = rng_uniform(state)
        if u < params[P_LOSS]:
            lost = 1
    if params[P_XPHOT] > 0.0:
        state, u = rng_uniform(state)
        if u < params[P_XPHOT]:
            px ^= 1
    if params[P_ZPHOT] > 0.0:
        state, u = rng_uniform(state)
        if u < params[P_ZPHOT]:
            pz ^= 1

    first[v] = 0
    return state, px, pz, lost


@jit
def run_slot(state, va, vb, n_attempts, bias_after_loss, reinit_after_zz,
             sx, sz, blink, first, params):
    """Repeat-until-success encoded fusion between emitters `va` and `vb`.

    Returns (state, xx_state, xx_flip, zz_state, zz_flip, n_used) where the
    *_state fields are OUT_OK / OUT_ERASED.
    """
    mode_bias = False
    xx_alive = True
    xx_acc = 0
    xx_done = False
    xx_flip = 0
    zz_done = False
    zz_flip = 0
    n = 0
    done = False
    while n < n_attempts and not done:
        n += 1
        state, ax, az, alost = emit_photon(state, va, sx, sz, blink, first, params)
        state, bx, bz, blost = emit_photon(state, vb, sx, sz, blink, first, params)
        if not mode_bias:
            if alost == 1 or blost == 1:
                xx_alive = False
                if bias_after_loss:
                    mode_bias = True
                continue
            state, u = rng_uniform(state)
            if u < 0.5:  # fusion success: both parities measured
                if not zz_done:
                    zz_done = True
                    zz_flip = ax ^ bx
                xx_acc ^= az ^ bz
                if xx_alive:
                    xx_done = True
                    xx_flip = xx_acc
                done = True
            else:        # failure basis: single-qubit X pair, XX product survives
                xx_acc ^= az ^ bz
        else:
            # biased attempt: both photons measured in Z individually
            if alost == 0:
                sx[va] = 0
                sz[va] = 0
            if blost == 0:
                sx[vb] = 0
                sz[vb] = 0
            if alost == 0 and blost == 0:
                if not zz_done:
                    zz_done = True
                    zz_flip = ax ^ bx
                if reinit_after_zz and n < n_attempts:
                    # spins re-initialised: retry the fusion for the XX parity
                    mode_bias = False
                    xx_alive = True
                    xx_acc = 0
                else:
                    done = True
    if (not done) and (not mode_bias) and xx_alive and n == n_attempts:
        xx_done = True   # every attempt failed: XX recovered from the products
        xx_flip = xx_acc
    xx_state = OUT_OK if xx_done else OUT_ERASED
    zz_state = OUT_OK if zz_done else OUT_ERASED
    return state, xx_state, xx_flip, zz_state, zz_flip, n


@jit
def run_trial(state, L, n_attempts, flags,
              edges_by_colour, edge_endpoints, params,
              xx_flip, xx_er, zz_flip, zz_er, layer_nmax,
              sx, sz, blink, first, slot_attempts):
    """Simulate one logical cycle; fills per-slot outcome and attempt arrays."""
    layers = 6 * L
    two_l = 2 * L
    n_emitters = sx.shape[0]
    per_layer = edges_by_colour.shape[1]

    for v in range(n_emitters):
        sx[v] = 0
        sz[v] = 0
        first[v] = 1
        blink[v] = 1
    pa = params[P_BLINK_A]
    pd = params[P_BLINK_D]
    if pa > 0.0 or pd > 0.0:
        alive_prob = pa / (pa + pd)
        for v in range(n_emitters):
            state, u = rng_uniform(state)
            blink[v] = 1 if u < alive_prob else 0

    bias_after_loss = flags[F_BIAS] != 0
    reinit_after_zz = flags[F_REINIT] != 0
    buffer_noise = flags[F_BUFFER_NOISE] != 0
    noisy = (params[P_DEP] > 0.0 or params[P_KAPPA] > 0.0 or params[P_ZSPIN] > 0.0)

    for t in range(layers):
        c = t % 3
        if noisy:
            for v in range(n_emitters):
                state = hadamard_step(state, v, sx, sz, params)
        else:
            for v in range(n_emitters):
                tmp = sx[v]
                sx[v] = sz[v]
                sz[v] = tmp
        nmax = 0
        k = t // 3
        for ei in range(per_layer):
            e = edges_by_colour[c, ei]
            va = edge_endpoints[e, 0]
            vb = edge_endpoints[e, 1]
            state, xs, xf, zs, zf, n = run_slot(
                state, va, vb, n_attempts, bias_after_loss, reinit_after_zz,
                sx, sz, blink, first, params)
            s = e * two_l + k
            xx_er[s] = xs
            xx_flip[s] = xf
            zz_er[s] = zs
            zz_flip[s] = zf
            slot_attempts[s] = n
            if n > nmax:
                nmax = n
        layer_nmax[t] = nmax
        if buffer_noise and noisy:
            for ei in range(per_layer):
                e = edges_by_colour[c, ei]
                s = e * two_l + k
                idle = 2 * (nmax - slot_attempts[s])
                if idle > 0:
                    for side in range(2):
                        v = edge_endpoints[e, side]
                        for _p in range(idle):
                            state = buffer_step(state, v, sx, sz, params)
    return state


@jit
def detector_syndrome(xx_flip, xx_er, zz_flip, zz_er, bit_dets, det_flip):
    """Fold unerased outcome flips into check values (1 marks a defect)."""
    n_slots = xx_flip.shape[0]
    for d in range(det_flip.shape[0]):
        det_flip[d] = 0
    for s in range(n_slots):
        if xx_er[s] == 0 and xx_flip[s] == 1:
            det_flip[bit_dets[2 * s, 0]] ^= 1
            det_flip[bit_dets[2 * s, 1]] ^= 1
        if zz_er[s] == 0 and zz_flip[s] == 1:
            det_flip[bit_dets[2 * s + 1, 0]] ^= 1
            det_flip[bit_dets[2 * s + 1, 1]] ^= 1


@jit
def error_sheet_parity(xx_flip, xx_er, zz_flip, zz_er, bit_sheet):
    """Logical-surface parities of the unerased outcome flips; returns 2-bit mask."""
    n_slots = xx_flip.shape[0]
    p0 = 0
    p1 = 0
    for s in range(n_slots):
        if xx_er[s] == 0 and xx_flip[s] == 1:
            p0 ^= bit_sheet[2 * s, 0]
            p1 ^= bit_sheet[2 * s, 1]
        if zz_er[s] == 0 and zz_flip[s] == 1:
            p0 ^= bit_sheet[2 * s + 1, 0]
            p1 ^= bit_sheet[2 * s + 1, 1]
    return p0 | (p1 << 1)


@jit
def _uf_find(parent, par0, par1, x):
    """Union-find root with accumulated sheet parities (path halving)."""
    p0 = 0
    p1 = 0
    while parent[x] != x:
        p0 ^= par0[x]
        p1 ^= par1[x]
        gp = parent[parent[x]]
        par0[x] ^= par0[parent[x]]
        par1[x] ^= par1[parent[x]]
        parent[x] = gp
        x = gp
    return x, p0, p1


@jit
def erased_cycle_parities(erased_bits, bit_dets, bit_sheet, parent, par0, par1, rank):
    """Detect erased cycles with odd logical-surface crossings.

    Returns a 2-bit mask: bit ``i`` set means surface ``i`` cannot be deformed
    off the erasure (a heralded logical erasure for that surface).
    """
    n_dets = parent.shape[0]
    for d in range(n_dets):
        parent[d] = d
        par0[d] = 0
        par1[d] = 0
        rank[d] = 0
    mask = 0
    for i in range(erased_bits.shape[0]):
        b = erased_bits[i]
        u = bit_dets[b, 0]
        v = bit_dets[b, 1]
        s0 = bit_sheet[b, 0]
        s1 = bit_sheet[b, 1]
        ru, pu0, pu1 = _uf_find(parent, par0, par1, u)
        rv, pv0, pv1 = _uf_find(parent, par0, par1, v)
        if ru == rv:
            mask |= (pu0 ^ pv0 ^ s0) | ((pu1 ^ pv1 ^ s1) << 1)
        else:
            if rank[ru] < rank[rv]:
                ru, rv = rv, ru
                pu0, pv0 = pv0, pu0
                pu1, pv1 = pv1, pu1
            parent[rv] = ru
            par0[rv] = pu0 ^ pv0 ^ s0
            par1[rv] = pu1 ^ pv1 ^ s1
            if rank[ru] == rank[rv]:
                rank[ru] += 1
    return mask


@jit
def defect_distance_matrix(defects, det_bits, det_other, bit_weight, bit_sheet,
                           dist_out, par_out, dist_buf, par_buf, deque_buf):
    """All-pairs defect distances with shortest-path sheet parities (0-1 BFS).

    ``bit_weight`` is 0 for erased outcomes (free supercell moves), 1 else.
    Ties are broken by first settlement, deterministically for a fixed trial.
    """
    n_def = defects.shape[0]
    n_dets = det_bits.shape[0]
    big = 1 << 30
    for i in range(n_def):
        src = defects[i]
        for d in range(n_dets):
            dist_buf[d] = big
            par_buf[d] = 0
        head = n_dets * 13          # deque grows both ways inside the buffer
        tail = head
        deque_buf[tail] = src
        tail += 1
        dist_buf[src] = 0
        while head < tail:
            d = deque_buf[head]
            head += 1
            dd = dist_buf[d]
            for j in range(12):
                b = det_bits[d, j]
                nb = det_other[d, j]
                w = bit_weight[b]
                nd = dd + w
                if nd < dist_buf[nb]:
                    dist_buf[nb] = nd
                    par_buf[nb] = par_buf[d] ^ (bit_sheet[b, 0] | (bit_sheet[b, 1] << 1))
                    if w == 0:
                        head -= 1
                        deque_buf[head] = nb
                    else:
                        deque_buf[tail] = nb
                        tail += 1
        for k in range(n_def):
            dist_out[i, k] = dist_buf[defects[k]]
            par_out[i, k] = par_buf[defects[k]]
