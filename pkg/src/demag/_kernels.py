"""Compiled amplitude kernels.

All kernels mutate the amplitude array in place. Qubit ``k`` is bit ``k`` of
the basis index (little-endian). Loops are strictly sequential, so results
are bitwise reproducible for fixed inputs.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def apply_1q(psi, q, m):
    n = psi.size
    step = 1 << q
    m00 = m[0, 0]
    m01 = m[0, 1]
    m10 = m[1, 0]
    m11 = m[1, 1]
    for base in range(0, n, 2 * step):
        for i0 in range(base, base + step):
            i1 = i0 + step
            x0 = psi[i0]
            x1 = psi[i1]
            psi[i0] = m00 * x0 + m01 * x1
            psi[i1] = m10 * x0 + m11 * x1


@njit(cache=True)
def apply_2q(psi, qa, qb, m):
    """Dense 4x4 gate; local index is bit(qa) + 2*bit(qb)."""
    n = psi.size
    ma = 1 << qa
    mb = 1 << qb
    lo = min(ma, mb)
    hi = max(ma, mb)
    for h in range(0, n, 2 * hi):
        for l in range(h, h + hi, 2 * lo):
            for i0 in range(l, l + lo):
                i1 = i0 | ma
                i2 = i0 | mb
                i3 = i1 | mb
                x0 = psi[i0]
                x1 = psi[i1]
                x2 = psi[i2]
                x3 = psi[i3]
                psi[i0] = m[0, 0] * x0 + m[0, 1] * x1 + m[0, 2] * x2 + m[0, 3] * x3
                psi[i1] = m[1, 0] * x0 + m[1, 1] * x1 + m[1, 2] * x2 + m[1, 3] * x3
                psi[i2] = m[2, 0] * x0 + m[2, 1] * x1 + m[2, 2] * x2 + m[2, 3] * x3
                psi[i3] = m[3, 0] * x0 + m[3, 1] * x1 + m[3, 2] * x2 + m[3, 3] * x3


@njit(cache=True)
def apply_site_gates(v, sys_q, bath_q, fr, fi):
    """Fused (Y-coupler x X-field) gates on disjoint (system, bath) pairs.

    ``v`` is the float64 view of the amplitudes. Each 4x4 gate ``k`` must have
    real entries only where the two local indices differ in the bath bit or not
    at all, and imaginary entries only where they differ in the system bit
    (this holds for products of cos/sin rotations generated by X_s and Y_s Y_b).
    ``fr``/``fi`` hold the real and imaginary parts.
    """
    n = v.size >> 1
    for k in range(sys_q.size):
        ma = 1 << sys_q[k]
        mb = 1 << bath_q[k]
        lo = min(ma, mb)
        hi = max(ma, mb)
        r00 = fr[k, 0, 0]
        r02 = fr[k, 0, 2]
        q01 = fi[k, 0, 1]
        q03 = fi[k, 0, 3]
        r11 = fr[k, 1, 1]
        r13 = fr[k, 1, 3]
        q10 = fi[k, 1, 0]
        q12 = fi[k, 1, 2]
        r22 = fr[k, 2, 2]
        r20 = fr[k, 2, 0]
        q23 = fi[k, 2, 3]
        q21 = fi[k, 2, 1]
        r33 = fr[k, 3, 3]
        r31 = fr[k, 3, 1]
        q32 = fi[k, 3, 2]
        q30 = fi[k, 3, 0]
        for h in range(0, n, 2 * hi):
            for l in range(h, h + hi, 2 * lo):
                for i0 in range(l, l + lo):
                    i1 = i0 | ma
                    i2 = i0 | mb
                    i3 = i1 | mb
                    a0 = v[2 * i0]
                    b0 = v[2 * i0 + 1]
                    a1 = v[2 * i1]
                    b1 = v[2 * i1 + 1]
                    a2 = v[2 * i2]
                    b2 = v[2 * i2 + 1]
                    a3 = v[2 * i3]
                    b3 = v[2 * i3 + 1]
                    v[2 * i0] = r00 * a0 + r02 * a2 - q01 * b1 - q03 * b3
                    v[2 * i0 + 1] = r00 * b0 + r02 * b2 + q01 * a1 + q03 * a3
                    v[2 * i1] = r11 * a1 + r13 * a3 - q10 * b0 - q12 * b2
                    v[2 * i1 + 1] = r11 * b1 + r13 * b3 + q10 * a0 + q12 * a2
                    v[2 * i2] = r22 * a2 + r20 * a0 - q23 * b3 - q21 * b1
                    v[2 * i2 + 1] = r22 * b2 + r20 * b0 + q23 * a3 + q21 * a1
                    v[2 * i3] = r33 * a3 + r31 * a1 - q32 * b2 - q30 * b0
                    v[2 * i3 + 1] = r33 * b3 + r31 * b1 + q32 * a2 + q30 * a0


@njit(cache=True)
def diagonal_energy(index, z_qubits, z_coeffs, zz_a, zz_b, zz_coeffs):
    """Energy of one basis state under a sum of Z and ZZ terms (z = 1 - 2*bit)."""
    e = 0.0
    for k in range(z_qubits.size):
        e += z_coeffs[k] * (1.0 - 2.0 * ((index >> z_qubits[k]) & 1))
    for k in range(zz_a.size):
        par = ((index >> zz_a[k]) ^ (index >> zz_b[k])) & 1
        e += zz_coeffs[k] * (1.0 - 2.0 * par)
    return e


@njit(cache=True)
def apply_zterms_phase(psi, angle, z_qubits, z_coeffs, zz_a, zz_b, zz_coeffs):
    """psi[b] *= exp(-i * angle * E_Z(b)), with E_Z recomputed per amplitude."""
    for b in range(psi.size):
        e = diagonal_energy(b, z_qubits, z_coeffs, zz_a, zz_b, zz_coeffs)
        psi[b] *= np.cos(angle * e) - 1j * np.sin(angle * e)


@njit(cache=True)
def apply_split_phase(psi, n_low, low_phase, high_phase):
    """psi[h*2^n_low + l] *= high_phase[h] * low_phase[l]."""
    nl = 1 << n_low
    for h in range(high_phase.size):
        f = high_phase[h]
        off = h << n_low
        for l in range(nl):
            psi[off + l] *= f * low_phase[l]


@njit(cache=True)
def sum_sq(psi):
    s = 0.0
    for i in range(psi.size):
        s += psi[i].real * psi[i].real + psi[i].imag * psi[i].imag
    return s


@njit(cache=True)
def prob_bit_one(psi, q):
    s = 0.0
    m = 1 << q
    for i in range(psi.size):
        if i & m:
            s += psi[i].real * psi[i].real + psi[i].imag * psi[i].imag
    return s
