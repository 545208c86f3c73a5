#!/usr/bin/env python3
"""Generate STO-3G FCIDUMP files for linear hydrogen chains.

Computes s-type Gaussian integrals in closed form, runs an SCF (RHF for
even electron counts, average-Fock ROHF for odd), transforms the
integrals to the molecular-orbital basis, and writes Molpro-convention
FCIDUMP files into data/.  A determinant-basis Slater-Condon FCI is run
on each system and the resulting energies are written to
data/reference_energies.json so they can be frozen into tests.

Usage:  python3 python/generate_fcidump.py
"""

import itertools
import json
import math
import os

import numpy as np
from scipy.special import erf

BOHR_PER_ANGSTROM = 1.0 / 0.52917721092

# STO-3G hydrogen s shell: (exponent, contraction coefficient)
STO3G_H = [
    (3.425250914, 0.1543289673),
    (0.6239137298, 0.5353281423),
    (0.1688554040, 0.4446345422),
]


def boys_f0(t):
    if t < 1e-12:
        return 1.0 - t / 3.0
    st = math.sqrt(t)
    return 0.5 * math.sqrt(math.pi / t) * erf(st)


def prim_norm(alpha):
    return (2.0 * alpha / math.pi) ** 0.75


def overlap_prim(a, ra, b, rb):
    p = a + b
    ab2 = np.dot(ra - rb, ra - rb)
    return (math.pi / p) ** 1.5 * math.exp(-a * b / p * ab2)


def kinetic_prim(a, ra, b, rb):
    p = a + b
    ab2 = np.dot(ra - rb, ra - rb)
    mu = a * b / p
    return mu * (3.0 - 2.0 * mu * ab2) * (math.pi / p) ** 1.5 * math.exp(-mu * ab2)


def nuclear_prim(a, ra, b, rb, rc):
    p = a + b
    ab2 = np.dot(ra - rb, ra - rb)
    rp = (a * ra + b * rb) / p
    pc2 = np.dot(rp - rc, rp - rc)
    return -2.0 * math.pi / p * math.exp(-a * b / p * ab2) * boys_f0(p * pc2)


def eri_prim(a, ra, b, rb, c, rc, d, rd):
    p = a + b
    q = c + d
    ab2 = np.dot(ra - rb, ra - rb)
    cd2 = np.dot(rc - rd, rc - rd)
    rp = (a * ra + b * rb) / p
    rq = (c * rc + d * rd) / q
    pq2 = np.dot(rp - rq, rp - rq)
    pref = 2.0 * math.pi ** 2.5 / (p * q * math.sqrt(p + q))
    return (
        pref
        * math.exp(-a * b / p * ab2 - c * d / q * cd2)
        * boys_f0(p * q / (p + q) * pq2)
    )


def ao_integrals(coords):
    """One- and two-electron AO integrals for one STO-3G s function per atom."""
    n = len(coords)
    shells = [
        [(alpha, coef * prim_norm(alpha)) for alpha, coef in STO3G_H] for _ in coords
    ]
    s = np.zeros((n, n))
    t = np.zeros((n, n))
    v = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            for ai, ci in shells[i]:
                for aj, cj in shells[j]:
                    cc = ci * cj
                    s[i, j] += cc * overlap_prim(ai, coords[i], aj, coords[j])
                    t[i, j] += cc * kinetic_prim(ai, coords[i], aj, coords[j])
                    for rc in coords:
                        v[i, j] += cc * nuclear_prim(ai, coords[i], aj, coords[j], rc)
    eri = np.zeros((n, n, n, n))
    for i, j, k, l in itertools.product(range(n), repeat=4):
        if i < j or k < l or (i, j) < (k, l):
            continue
        val = 0.0
        for ai, ci in shells[i]:
            for aj, cj in shells[j]:
                for ak, ck in shells[k]:
                    for al, cl in shells[l]:
                        val += ci * cj * ck * cl * eri_prim(
                            ai, coords[i], aj, coords[j], ak, coords[k], al, coords[l]
                        )
        for p, q in ((i, j), (j, i)):
            for r, u in ((k, l), (l, k)):
                eri[p, q, r, u] = val
                eri[r, u, p, q] = val
    return s, t + v, eri


def nuclear_repulsion(coords):
    e = 0.0
    for i in range(len(coords)):
        for j in range(i):
            e += 1.0 / np.linalg.norm(coords[i] - coords[j])
    return e


def scf(hcore, s, eri, nalpha, nbeta, max_iter=200, tol=1e-12):
    """Restricted SCF; for open shells uses the spin-averaged Fock operator.

    Returns (orbital energies, MO coefficients).  DIIS on the averaged
    Fock keeps stretched geometries convergent.
    """
    n = hcore.shape[0]
    sval, svec = np.linalg.eigh(s)
    x = svec @ np.diag(sval ** -0.5) @ svec.T
    c = None
    eps = None
    fock_list, err_list = [], []
    f_eff = hcore
    for _ in range(max_iter):
        eps, cp = np.linalg.eigh(x.T @ f_eff @ x)
        c = x @ cp
        pa = c[:, :nalpha] @ c[:, :nalpha].T
        pb = c[:, :nbeta] @ c[:, :nbeta].T
        ptot = pa + pb
        j = np.einsum("pqrs,rs->pq", eri, ptot)
        ka = np.einsum("prqs,rs->pq", eri, pa)
        kb = np.einsum("prqs,rs->pq", eri, pb)
        fa = hcore + j - ka
        fb = hcore + j - kb
        new_f = 0.5 * (fa + fb)
        err = new_f @ ptot @ s - s @ ptot @ new_f
        fock_list.append(new_f)
        err_list.append(err)
        if len(fock_list) > 8:
            fock_list.pop(0)
            err_list.pop(0)
        if np.max(np.abs(err)) < tol:
            break
        m = len(fock_list)
        bmat = -np.ones((m + 1, m + 1))
        bmat[m, m] = 0.0
        for a in range(m):
            for b in range(m):
                bmat[a, b] = np.sum(err_list[a] * err_list[b])
        rhs = np.zeros(m + 1)
        rhs[m] = -1.0
        try:
            w = np.linalg.solve(bmat, rhs)[:m]
            f_eff = sum(wi * fi for wi, fi in zip(w, fock_list))
        except np.linalg.LinAlgError:
            f_eff = new_f
    return eps, c


def mo_transform(hcore, eri, c):
    h_mo = c.T @ hcore @ c
    eri_mo = np.einsum("pqrs,pi,qj,rk,sl->ijkl", eri, c, c, c, c, optimize=True)
    return h_mo, eri_mo


def write_fcidump(path, h_mo, eri_mo, e_core, nelec, ms2):
    n = h_mo.shape[0]
    lines = [f"&FCI NORB={n},NELEC={nelec},MS2={ms2},"]
    lines.append("  ORBSYM=" + "1," * n)
    lines.append("  ISYM=1,")
    lines.append("&END")
    for p in range(n):
        for q in range(p + 1):
            for r in range(p + 1):
                smax = q if r == p else r
                for u in range(smax + 1):
                    val = eri_mo[p, q, r, u]
                    if abs(val) > 1e-14:
                        lines.append(
                            f" {val: .16E} {p+1:3d} {q+1:3d} {r+1:3d} {u+1:3d}"
                        )
    for p in range(n):
        for q in range(p + 1):
            if abs(h_mo[p, q]) > 1e-14:
                lines.append(f" {h_mo[p, q]: .16E} {p+1:3d} {q+1:3d}   0   0")
    lines.append(f" {e_core: .16E}   0   0   0   0")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


# --- independent determinant-basis FCI (Slater-Condon rules) ---


def spin_orbital_ints(h_mo, eri_mo):
    """Blocked spin orbitals: alpha 0..n-1, beta n..2n-1."""
    n = h_mo.shape[0]
    m = 2 * n
    h1 = np.zeros((m, m))
    h1[:n, :n] = h_mo
    h1[n:, n:] = h_mo
    # antisymmetrized <pq||rs> in physicist notation
    g = np.zeros((m, m, m, m))
    for p, q, r, u in itertools.product(range(m), repeat=4):
        sp, so = p % n, p // n
        sq, sq_s = q % n, q // n
        sr, sr_s = r % n, r // n
        su, su_s = u % n, u // n
        direct = eri_mo[sp, sr, sq, su] if (so == sr_s and sq_s == su_s) else 0.0
        exch = eri_mo[sp, su, sq, sr] if (so == su_s and sq_s == sr_s) else 0.0
        g[p, q, r, u] = direct - exch
    return h1, g


def det_energy(det, h1, g):
    e = sum(h1[i, i] for i in det)
    for i, j in itertools.combinations(det, 2):
        e += g[i, j, i, j]
    return e


def excitation_sign(det, holes, parts):
    """Sign of rearranging det with holes->parts into sorted order."""
    d = list(det)
    sign = 1
    for h, p in zip(holes, parts):
        idx = d.index(h)
        d[idx] = p
        # bubble into place and count transpositions
        while idx > 0 and d[idx - 1] > d[idx]:
            d[idx - 1], d[idx] = d[idx], d[idx - 1]
            sign = -sign
            idx -= 1
        while idx < len(d) - 1 and d[idx + 1] < d[idx]:
            d[idx + 1], d[idx] = d[idx], d[idx + 1]
            sign = -sign
            idx += 1
    return sign


def fci_ground_energy(h_mo, eri_mo, nalpha, nbeta):
    n = h_mo.shape[0]
    h1, g = spin_orbital_ints(h_mo, eri_mo)
    alphas = list(itertools.combinations(range(n), nalpha))
    betas = list(itertools.combinations(range(n, 2 * n), nbeta))
    dets = [tuple(sorted(a + b)) for a in alphas for b in betas]
    index = {d: i for i, d in enumerate(dets)}
    dim = len(dets)
    ham = np.zeros((dim, dim))
    for d, di in index.items():
        ham[di, di] = det_energy(d, h1, g)
        occ = set(d)
        virt = [p for p in range(2 * n) if p not in occ]
        for i in d:
            for a in virt:
                if (i < n) != (a < n):
                    continue
                nd = tuple(sorted(occ - {i} | {a}))
                sign = excitation_sign(d, [i], [a])
                val = h1[i, a] + sum(g[i, j, a, j] for j in occ if j != i)
                ham[di, index[nd]] = sign * val
        for i, j in itertools.combinations(d, 2):
            for a, b in itertools.combinations(virt, 2):
                na_ij = (i < n) + (j < n)
                na_ab = (a < n) + (b < n)
                if na_ij != na_ab:
                    continue
                nd = tuple(sorted(occ - {i, j} | {a, b}))
                sign = excitation_sign(d, [i, j], [a, b])
                ham[di, index[nd]] = sign * g[i, j, a, b]
    evals = np.linalg.eigvalsh(ham)
    return evals[0]


def chain(natoms, spacing_angstrom):
    d = spacing_angstrom * BOHR_PER_ANGSTROM
    return [np.array([0.0, 0.0, k * d]) for k in range(natoms)]


def build(natoms, spacing, nelec, ms2, tag, out_dir, refs):
    coords = chain(natoms, spacing)
    s, hcore, eri = ao_integrals(coords)
    e_nuc = nuclear_repulsion(coords)
    nalpha = (nelec + ms2) // 2
    nbeta = (nelec - ms2) // 2
    eps, c = scf(hcore, s, eri, nalpha, nbeta)
    h_mo, eri_mo = mo_transform(hcore, eri, c)
    path = os.path.join(out_dir, f"{tag}.fcidump")
    write_fcidump(path, h_mo, eri_mo, e_nuc, nelec, ms2)

    h1, g = spin_orbital_ints(h_mo, eri_mo)
    hf_det = tuple(range(nalpha)) + tuple(natoms + k for k in range(nbeta))
    e_hf = det_energy(sorted(hf_det), h1, g) + e_nuc
    e_fci = fci_ground_energy(h_mo, eri_mo, nalpha, nbeta) + e_nuc
    refs[tag] = {
        "natoms": natoms,
        "spacing_angstrom": spacing,
        "nelec": nelec,
        "ms2": ms2,
        "e_nuclear": e_nuc,
        "e_hf_determinant": e_hf,
        "e_fci": e_fci,
    }
    print(f"{tag}: E_HF = {e_hf:.10f}  E_FCI = {e_fci:.10f}")


def main():
    out_dir = os.path.join(os.path.dirname(__file__), "..", "data")
    os.makedirs(out_dir, exist_ok=True)
    refs = {}
    build(2, 0.7414, 2, 0, "h2_0.7414", out_dir, refs)
    build(4, 1.00, 4, 0, "h4_1.00", out_dir, refs)
    build(4, 1.50, 4, 0, "h4_1.50", out_dir, refs)
    build(4, 2.00, 4, 0, "h4_2.00", out_dir, refs)
    build(5, 1.00, 5, 1, "h5_1.00", out_dir, refs)
    build(5, 1.50, 5, 1, "h5_1.50", out_dir, refs)
    build(6, 1.00, 6, 0, "h6_1.00", out_dir, refs)
    with open(os.path.join(out_dir, "reference_energies.json"), "w") as f:
        json.dump(refs, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
