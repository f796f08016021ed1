#!/usr/bin/env python3
"""Independent reference energies used to freeze constants in the Rust tests.

Everything here is computed in Python with its own code path: the Boys
function is evaluated by high-precision numerical quadrature (mpmath, no
error-function identity), a sample of closed-form integrals is cross-checked
against direct numerical integration (scipy), and RHF / MP2 / dense FCI are
implemented independently on top of numpy. The printed values are copied
verbatim into the Rust test suite as frozen expectations.

Run:  python3 tools/reference_energies.py
"""

import itertools

import mpmath as mp
import numpy as np
from scipy import integrate

ANGSTROM_TO_BOHR = 1.8897259886

# STO-6G hydrogen 1s: published exponents (zeta = 1.24 folded in) and
# contraction coefficients for unit-normalized primitives.
STO6G_EXPONENTS = [
    35.52322122,
    6.513143725,
    1.822142904,
    0.6259552659,
    0.2430767471,
    0.1001124280,
]
STO6G_COEFFS = [
    0.00916359628,
    0.04936149294,
    0.16853830490,
    0.37056279970,
    0.41649152980,
    0.13033408410,
]

mp.mp.dps = 40


def boys0_mp(t):
    """F0(t) = integral_0^1 exp(-t u^2) du, 40-digit adaptive quadrature."""
    if t < 0:
        raise ValueError("negative Boys argument")
    f = mp.quad(lambda u: mp.e ** (-mp.mpf(t) * u * u), [0, 1])
    return float(f)


def boys0(t):
    """Fast QUADPACK evaluation of the same integral (no erf identity)."""
    if t < 0:
        raise ValueError("negative Boys argument")
    val, _ = integrate.quad(
        lambda u: np.exp(-t * u * u), 0.0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=200
    )
    return val


# --- primitive s-Gaussian integrals (unit prefactor exp(-a|r-A|^2)) ---


def prim_overlap(a, ra, b, rb):
    p = a + b
    d2 = np.dot(ra - rb, ra - rb)
    return (np.pi / p) ** 1.5 * np.exp(-a * b / p * d2)


def prim_kinetic(a, ra, b, rb):
    p = a + b
    mu = a * b / p
    d2 = np.dot(ra - rb, ra - rb)
    return mu * (3.0 - 2.0 * mu * d2) * prim_overlap(a, ra, b, rb)


def prim_nuclear(a, ra, b, rb, rc, zc):
    p = a + b
    d2 = np.dot(ra - rb, ra - rb)
    rp = (a * ra + b * rb) / p
    pc2 = np.dot(rp - rc, rp - rc)
    k = np.exp(-a * b / p * d2)
    return -zc * (2.0 * np.pi / p) * k * boys0(p * pc2)


def prim_eri_chem(a, ra, b, rb, c, rc, d, rd):
    """(ab|cd) in chemist notation for unit-prefactor s primitives."""
    p = a + b
    q = c + d
    rp = (a * ra + b * rb) / p
    rq = (c * rc + d * rd) / q
    kab = np.exp(-a * b / p * np.dot(ra - rb, ra - rb))
    kcd = np.exp(-c * d / q * np.dot(rc - rd, rc - rd))
    rho = p * q / (p + q)
    pq2 = np.dot(rp - rq, rp - rq)
    pref = 2.0 * np.pi ** 2.5 / (p * q * np.sqrt(p + q))
    return pref * kab * kcd * boys0(rho * pq2)


# --- contracted basis -------------------------------------------------


def build_basis(centers_bohr):
    """One STO-6G 1s function per center; returns [(alpha_i, coeff_i, R)]."""
    shells = []
    for rc in centers_bohr:
        prims = []
        for alpha, c in zip(STO6G_EXPONENTS, STO6G_COEFFS):
            norm = (2.0 * alpha / np.pi) ** 0.75
            prims.append((alpha, c * norm))
        # renormalize the contraction
        s = 0.0
        for ai, ci in prims:
            for aj, cj in prims:
                s += ci * cj * prim_overlap(ai, rc, aj, rc)
        prims = [(a, c / np.sqrt(s)) for a, c in prims]
        shells.append((prims, np.asarray(rc, dtype=float)))
    return shells


def ao_integrals(shells, charges_positions):
    n = len(shells)
    S = np.zeros((n, n))
    T = np.zeros((n, n))
    V = np.zeros((n, n))
    for i, (pi, ri) in enumerate(shells):
        for j, (pj, rj) in enumerate(shells):
            for a, ca in pi:
                for b, cb in pj:
                    S[i, j] += ca * cb * prim_overlap(a, ri, b, rj)
                    T[i, j] += ca * cb * prim_kinetic(a, ri, b, rj)
                    for rc, zc in charges_positions:
                        V[i, j] += ca * cb * prim_nuclear(a, ri, b, rj, rc, zc)
    eri_chem = np.zeros((n, n, n, n))
    for i, (pi, ri) in enumerate(shells):
        for j, (pj, rj) in enumerate(shells):
            for k, (pk, rk) in enumerate(shells):
                for l, (pl, rl) in enumerate(shells):
                    acc = 0.0
                    for a, ca in pi:
                        for b, cb in pj:
                            for c, cc in pk:
                                for d, cd in pl:
                                    acc += ca * cb * cc * cd * prim_eri_chem(
                                        a, ri, b, rj, c, rk, d, rl
                                    )
                    eri_chem[i, j, k, l] = acc
    return S, T, V, eri_chem


def nuclear_repulsion(charges_positions):
    e = 0.0
    for (ra, za), (rb, zb) in itertools.combinations(charges_positions, 2):
        e += za * zb / np.linalg.norm(ra - rb)
    return e


# --- mean field -------------------------------------------------------


def lowdin(S):
    w, U = np.linalg.eigh(S)
    return U @ np.diag(w ** -0.5) @ U.T


def rhf(S, Hcore, eri_chem, nelec, max_iter=2000, conv=1e-13):
    # converge on the DENSITY, not the energy: the energy is quadratic in the
    # density error, so an energy-converged density can still carry ~1e-6
    # error, which propagates linearly into orbital energies and MP2.
    n = S.shape[0]
    nocc = nelec // 2
    X = lowdin(S)
    F = Hcore.copy()
    D = np.zeros((n, n))
    for it in range(max_iter):
        Fp = X.T @ F @ X
        eps, Cp = np.linalg.eigh(Fp)
        C = X @ Cp
        Cocc = C[:, :nocc]
        Dn = 2.0 * Cocc @ Cocc.T
        if it < 10:
            Dn = 0.7 * Dn + 0.3 * D
        delta = np.max(np.abs(Dn - D))
        D = Dn
        J = np.einsum("rs,pqrs->pq", D, eri_chem)
        K = np.einsum("rs,prqs->pq", D, eri_chem)
        F = Hcore + J - 0.5 * K
        e_elec = 0.5 * np.sum(D * (Hcore + F))
        if delta < conv and it > 12:
            return e_elec, eps, C
    raise RuntimeError("SCF did not converge")


def mp2(eri_chem, C, eps, nelec):
    n = C.shape[0]
    nocc = nelec // 2
    mo = np.einsum("pi,qj,rk,sl,pqrs->ijkl", C, C, C, C, eri_chem)
    e = 0.0
    for i in range(nocc):
        for j in range(nocc):
            for a in range(nocc, n):
                for b in range(nocc, n):
                    iajb = mo[i, a, j, b]
                    ibja = mo[i, b, j, a]
                    e += iajb * (2.0 * iajb - ibja) / (
                        eps[i] + eps[j] - eps[a] - eps[b]
                    )
    return e


# --- dense FCI over Sz=0 determinants --------------------------------


def combinations_mask(norb, nelec):
    out = []
    for occ in itertools.combinations(range(norb), nelec):
        m = 0
        for o in occ:
            m |= 1 << o
        out.append(m)
    return sorted(out)


def occ_list(mask):
    out = []
    i = 0
    while mask >> i:
        if (mask >> i) & 1:
            out.append(i)
        i += 1
    return out


def phase_annihilate(mask, p):
    if not (mask >> p) & 1:
        return None
    below = bin(mask & ((1 << p) - 1)).count("1")
    return mask & ~(1 << p), (-1.0) ** below


def phase_create(mask, p):
    if (mask >> p) & 1:
        return None
    below = bin(mask & ((1 << p) - 1)).count("1")
    return mask | (1 << p), (-1.0) ** below


def spin_orbital_ints(h, eri_phys):
    """Lift spatial integrals to spin orbitals, alpha block first."""
    m = h.shape[0]
    M = 2 * m
    hso = np.zeros((M, M))
    hso[:m, :m] = h
    hso[m:, m:] = h
    vso = np.zeros((M, M, M, M))
    for spin_p in (0, 1):
        for spin_q in (0, 1):
            sl_p = slice(spin_p * m, spin_p * m + m)
            sl_q = slice(spin_q * m, spin_q * m + m)
            vso[sl_p, sl_q, sl_p, sl_q] = eri_phys
    return hso, vso


def slater_condon(bra, ket, hso, vanti):
    diff = bra ^ ket
    ndiff = bin(diff).count("1")
    if ndiff == 0:
        occ = occ_list(ket)
        e = sum(hso[p, p] for p in occ)
        e += 0.5 * sum(vanti[p, q, p, q] for p in occ for q in occ)
        return e
    if ndiff == 2:
        p = occ_list(diff & ket)[0]
        q = occ_list(diff & bra)[0]
        m1, s1 = phase_annihilate(ket, p)
        m2, s2 = phase_create(m1, q)
        assert m2 == bra
        occ = occ_list(ket & bra)
        return s1 * s2 * (hso[q, p] + sum(vanti[q, k, p, k] for k in occ))
    if ndiff == 4:
        ann = occ_list(diff & ket)
        cre = occ_list(diff & bra)
        p, q = ann
        r, s = cre
        m1, s1 = phase_annihilate(ket, q)
        m2, s2 = phase_annihilate(m1, p)
        m3, s3 = phase_create(m2, r)
        m4, s4 = phase_create(m3, s)
        assert m4 == bra
        return s1 * s2 * s3 * s4 * (vanti[r, s, p, q])
    return 0.0


def fci_ground(h, eri_phys, nelec):
    m = h.shape[0]
    hso, vso = spin_orbital_ints(h, eri_phys)
    vanti = vso - vso.transpose(0, 1, 3, 2)
    na = nelec // 2
    nb = nelec - na
    amasks = combinations_mask(m, na)
    bmasks = combinations_mask(m, nb)
    dets = []
    for am in amasks:
        for bm in bmasks:
            dets.append(am | (bm << m))
    dim = len(dets)
    H = np.zeros((dim, dim))
    for i in range(dim):
        for j in range(i, dim):
            if bin(dets[i] ^ dets[j]).count("1") > 4:
                continue
            el = slater_condon(dets[i], dets[j], hso, vanti)
            H[i, j] = el
            H[j, i] = el
    w = np.linalg.eigvalsh(H)
    return w[0], dim


# --- spot checks of the closed forms against direct quadrature --------


def spot_check_integrals():
    a, b = 1.3, 0.71
    ra = np.array([0.0, 0.0, 0.0])
    rb = np.array([0.4, -0.3, 0.9])
    rc = np.array([-0.2, 0.5, 0.3])

    def g(alpha, center):
        return lambda x, y, z: np.exp(
            -alpha * ((x - center[0]) ** 2 + (y - center[1]) ** 2 + (z - center[2]) ** 2)
        )

    ga, gb = g(a, ra), g(b, rb)
    L = 7.0
    s_num, _ = integrate.tplquad(
        lambda x, y, z: ga(x, y, z) * gb(x, y, z), -L, L, -L, L, -L, L
    )
    assert abs(s_num - prim_overlap(a, ra, b, rb)) < 1e-9, "overlap mismatch"

    def lap_gb(x, y, z):
        r2 = (x - rb[0]) ** 2 + (y - rb[1]) ** 2 + (z - rb[2]) ** 2
        return (4.0 * b * b * r2 - 6.0 * b) * gb(x, y, z)

    t_num, _ = integrate.tplquad(
        lambda x, y, z: -0.5 * ga(x, y, z) * lap_gb(x, y, z), -L, L, -L, L, -L, L
    )
    assert abs(t_num - prim_kinetic(a, ra, b, rb)) < 1e-9, "kinetic mismatch"

    # nuclear attraction via the 1/r = (2/sqrt(pi)) int exp(-r^2 t^2) dt trick
    p = a + b
    rp = (a * ra + b * rb) / p
    kab = np.exp(-a * b / p * np.dot(ra - rb, ra - rb))

    def v_integrand(t):
        z = p + t * t
        pc2 = np.dot(rp - rc, rp - rc)
        return (np.pi / z) ** 1.5 * np.exp(-p * t * t * pc2 / z) * (p / z) ** 0.0

    # integral over t of kab * (2/sqrt(pi)) * (pi/ (p+t^2))^(3/2) * exp(-p t^2 |P-C|^2/(p+t^2))
    def v_full(t):
        z = p + t * t
        pc2 = np.dot(rp - rc, rp - rc)
        return (np.pi / z) ** 1.5 * np.exp(-p * t * t * pc2 / z)

    v_num, _ = integrate.quad(v_full, 0, np.inf, limit=400)
    v_num *= -1.0 * kab * 2.0 / np.sqrt(np.pi)
    assert abs(v_num - prim_nuclear(a, ra, b, rb, rc, 1.0)) < 1e-9, "nuclear mismatch"

    # ERI by the same reduction: both electron densities are Gaussians at P, Q
    c, d = 0.9, 1.7
    rd = np.array([0.6, 0.1, -0.4])
    q = c + d
    rq = (c * rc + d * rd) / q
    kcd = np.exp(-c * d / q * np.dot(rc - rd, rc - rd))

    def eri_full(t):
        z1 = p + t * t
        z2 = q + t * t
        # int exp(-p|r1-P|^2 - q|r2-Q|^2 - t^2 |r1-r2|^2) dr1 dr2
        denom = p * q + t * t * (p + q)
        pq2 = np.dot(rp - rq, rp - rq)
        return np.pi ** 3.0 / denom ** 1.5 * np.exp(-p * q * t * t * pq2 / denom)

    e_num, _ = integrate.quad(eri_full, 0, np.inf, limit=400)
    e_num *= kab * kcd * 2.0 / np.sqrt(np.pi)
    closed = prim_eri_chem(a, ra, b, rb, c, rc, d, rd)
    assert abs(e_num - closed) < 1e-9, "eri mismatch"
    print("# spot checks of closed forms vs direct quadrature: OK")


# --- systems ----------------------------------------------------------


def atoms_to_system(coords_angstrom):
    centers = [np.asarray(c) * ANGSTROM_TO_BOHR for c in coords_angstrom]
    shells = build_basis(centers)
    charges = [(c, 1.0) for c in centers]
    S, T, V, eri_chem = ao_integrals(shells, charges)
    eri_phys = eri_chem.transpose(0, 2, 1, 3)
    return S, T + V, eri_chem, eri_phys, nuclear_repulsion(charges)


def lowdin_mo(S, H, eri_phys):
    X = lowdin(S)
    h = X.T @ H @ X
    mo = np.einsum("pi,qj,rk,sl,pqrs->ijkl", X, X, X, X, eri_phys)
    return h, mo


def main():
    spot_check_integrals()

    print("boys_f0_1   = %.15f" % boys0_mp(1.0))
    print("boys_f0_10  = %.15f" % boys0_mp(10.0))
    print("boys_f0_tiny= %.15f" % boys0_mp(1e-12))
    print("boys_f0_025 = %.15f" % boys0_mp(0.25))
    print("boys_f0_100 = %.15f" % boys0_mp(100.0))
    assert abs(boys0(1.0) - boys0_mp(1.0)) < 1e-13
    assert abs(boys0(10.0) - boys0_mp(10.0)) < 1e-13
    assert abs(boys0(100.0) - boys0_mp(100.0)) < 1e-13

    # isolated hydrogen atom: single basis function, E = h11
    S, H, eri_chem, eri_phys, _ = atoms_to_system([[0.0, 0.0, 0.0]])
    e_h_atom = H[0, 0] / S[0, 0]
    print("e_h_atom    = %.12f" % e_h_atom)

    # H2 at 0.7414 angstrom
    r = 0.7414
    S, H, eri_chem, eri_phys, enuc = atoms_to_system(
        [[0.0, 0.0, 0.0], [0.0, 0.0, r]]
    )
    print("h2_s12      = %.12f" % S[0, 1])
    print("h2_h11      = %.12f" % H[0, 0])
    print("h2_h12      = %.12f" % H[0, 1])
    print("h2_eri_1111 = %.12f" % eri_chem[0, 0, 0, 0])
    print("h2_eri_1122 = %.12f" % eri_chem[0, 0, 1, 1])
    print("h2_eri_1112 = %.12f" % eri_chem[0, 0, 0, 1])
    print("h2_eri_1212 = %.12f" % eri_chem[0, 1, 0, 1])
    print("h2_enuc     = %.12f" % enuc)
    e_elec, eps, C = rhf(S, H, eri_chem, 2)
    print("h2_rhf_total    = %.12f" % (e_elec + enuc))
    e_mp2 = mp2(eri_chem, C, eps, 2)
    print("h2_mp2_total    = %.12f" % (e_elec + e_mp2 + enuc))
    h, mo = lowdin_mo(S, H, eri_phys)
    e0, dim = fci_ground(h, mo, 2)
    print("h2_fci_total    = %.12f  (dim %d)" % (e0 + enuc, dim))

    # H2 at 8 angstrom: FCI should hit 2 * E(H)
    S, H, _, eri_phys, enuc = atoms_to_system([[0, 0, 0], [0, 0, 8.0]])
    h, mo = lowdin_mo(S, H, eri_phys)
    e0, _ = fci_ground(h, mo, 2)
    print("h2_far_fci_total= %.12f  vs 2*E(H) = %.12f" % (e0 + enuc, 2 * e_h_atom))

    # H4 square, side 1.2 angstrom
    a = 1.2
    S, H, eri_chem, eri_phys, enuc = atoms_to_system(
        [[0, 0, 0], [a, 0, 0], [a, a, 0], [0, a, 0]]
    )
    h, mo = lowdin_mo(S, H, eri_phys)
    e0, dim = fci_ground(h, mo, 4)
    print("h4_square12_fci_total = %.12f  (dim %d)" % (e0 + enuc, dim))

    # H4 chain, spacing 1.0 angstrom
    S, H, eri_chem, eri_phys, enuc = atoms_to_system(
        [[0, 0, 0], [0, 0, 1.0], [0, 0, 2.0], [0, 0, 3.0]]
    )
    e_elec, eps, C = rhf(S, H, eri_chem, 4)
    print("h4_chain10_rhf_total  = %.12f" % (e_elec + enuc))
    e_mp2 = mp2(eri_chem, C, eps, 4)
    print("h4_chain10_mp2_total  = %.12f" % (e_elec + e_mp2 + enuc))
    h, mo = lowdin_mo(S, H, eri_phys)
    e0, dim = fci_ground(h, mo, 4)
    print("h4_chain10_fci_total  = %.12f  (dim %d)" % (e0 + enuc, dim))

    # H6 regular hexagon, side 1.5 angstrom
    rad = 1.5
    coords = []
    for k in range(6):
        ang = np.pi / 3.0 * k
        coords.append([rad * np.cos(ang), rad * np.sin(ang), 0.0])
    S, H, eri_chem, eri_phys, enuc = atoms_to_system(coords)
    e_elec, eps, C = rhf(S, H, eri_chem, 6)
    print("h6_hex15_rhf_total    = %.12f" % (e_elec + enuc))
    h, mo = lowdin_mo(S, H, eri_phys)
    e0, dim = fci_ground(h, mo, 6)
    print("h6_hex15_fci_total    = %.12f  (dim %d)" % (e0 + enuc, dim))


if __name__ == "__main__":
    main()
