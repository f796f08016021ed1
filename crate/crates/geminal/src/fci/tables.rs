//! Precomputed occupation-string excitation tables that back the iterative
//! solver's Hamiltonian application.
//!
//! Alpha and beta strings range over the same set, so one table serves both
//! spins: per string, all single excitations (with the spin-independent part
//! of their matrix element folded in) and all same-spin double excitations
//! (whose elements are complete scalars). Opposite-spin double excitations
//! are products of one alpha and one beta single.

use super::{annihilate, create, SpinOrbitalInts};

struct Single {
    target: u32,
    /// Created spatial orbital.
    p: u8,
    /// Annihilated spatial orbital.
    q: u8,
    sign: f64,
    /// One-electron part plus the same-spin two-electron part of the
    /// element; the opposite-spin Coulomb part depends on the other string.
    base: f64,
}

pub struct SigmaEngine {
    n_str: usize,
    m: usize,
    diag: Vec<f64>,
    singles: Vec<Vec<Single>>,
    doubles: Vec<Vec<(u32, f64)>>,
    /// `coulomb[is*m*m + p*m + q]` = Σ over occupied t of string `is` of
    /// `⟨pt|qt⟩`: the opposite-spin completion of a single excitation.
    coulomb: Vec<f64>,
    /// Row-major copy of the spatial two-electron tensor for the
    /// opposite-spin term.
    v_flat: Vec<f64>,
}

fn occupied_bits(mut w: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(w.count_ones() as usize);
    while w != 0 {
        out.push(w.trailing_zeros() as usize);
        w &= w - 1;
    }
    out
}

impl SigmaEngine {
    pub fn new(so: &SpinOrbitalInts, strings: &[u64]) -> SigmaEngine {
        let m = so.m;
        let n_str = strings.len();

        let mut singles = Vec::with_capacity(n_str);
        let mut doubles = Vec::with_capacity(n_str);
        for &w in strings {
            let occ = occupied_bits(w);
            let virt: Vec<usize> = (0..m).filter(|p| w & (1u64 << p) == 0).collect();

            let mut sv = Vec::new();
            for &q in &occ {
                let (w1, s1) = annihilate(w, q).unwrap();
                for &p in &virt {
                    let (w2, s2) = create(w1, p).unwrap();
                    let target = strings.binary_search(&w2).unwrap() as u32;
                    let mut base = so.h_sp[[p, q]];
                    for &t in &occ {
                        if t != q {
                            base += so.v_sp[[p, t, q, t]] - so.v_sp[[p, t, t, q]];
                        }
                    }
                    sv.push(Single {
                        target,
                        p: p as u8,
                        q: q as u8,
                        sign: s1 * s2,
                        base,
                    });
                }
            }

            let mut dv = Vec::new();
            for (i2, &q2) in occ.iter().enumerate() {
                for &q1 in &occ[..i2] {
                    let (wa, sa) = annihilate(w, q1).unwrap();
                    let (wb, sb) = annihilate(wa, q2).unwrap();
                    for (j2, &p2) in virt.iter().enumerate() {
                        for &p1 in &virt[..j2] {
                            let (wc, sc) = create(wb, p2).unwrap();
                            let (wd, sd) = create(wc, p1).unwrap();
                            let target = strings.binary_search(&wd).unwrap() as u32;
                            let val = sa
                                * sb
                                * sc
                                * sd
                                * (so.v_sp[[p1, p2, q1, q2]] - so.v_sp[[p1, p2, q2, q1]]);
                            dv.push((target, val));
                        }
                    }
                }
            }
            singles.push(sv);
            doubles.push(dv);
        }

        let mut coulomb = vec![0.0; n_str * m * m];
        for (is, &w) in strings.iter().enumerate() {
            let occ = occupied_bits(w);
            let block = &mut coulomb[is * m * m..(is + 1) * m * m];
            for p in 0..m {
                for q in 0..m {
                    let mut acc = 0.0;
                    for &t in &occ {
                        acc += so.v_sp[[p, t, q, t]];
                    }
                    block[p * m + q] = acc;
                }
            }
        }

        let mut diag = vec![0.0; n_str * n_str];
        for (ia, &wa) in strings.iter().enumerate() {
            for (ib, &wb) in strings.iter().enumerate() {
                diag[ia * n_str + ib] = so.diagonal(wa | (wb << m));
            }
        }

        let v_flat = so.v_sp.as_slice().expect("standard layout").to_vec();

        SigmaEngine {
            n_str,
            m,
            diag,
            singles,
            doubles,
            coulomb,
            v_flat,
        }
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// `σ = H c` over the alpha-major determinant ordering.
    pub fn apply(&self, c: &[f64]) -> Vec<f64> {
        let n = self.n_str;
        let m = self.m;
        assert_eq!(c.len(), n * n);
        let mut sigma: Vec<f64> = (0..n * n).map(|i| self.diag[i] * c[i]).collect();

        // excitations within the alpha string (beta spectator)
        for ib in 0..n {
            let coul = &self.coulomb[ib * m * m..(ib + 1) * m * m];
            for ia in 0..n {
                let mut acc = 0.0;
                for s in &self.singles[ia] {
                    acc += s.sign * (s.base + coul[s.p as usize * m + s.q as usize])
                        * c[s.target as usize * n + ib];
                }
                for &(t, v) in &self.doubles[ia] {
                    acc += v * c[t as usize * n + ib];
                }
                sigma[ia * n + ib] += acc;
            }
        }

        // excitations within the beta string (alpha spectator)
        for ia in 0..n {
            let coul = &self.coulomb[ia * m * m..(ia + 1) * m * m];
            let row = ia * n;
            for ib in 0..n {
                let mut acc = 0.0;
                for s in &self.singles[ib] {
                    acc += s.sign * (s.base + coul[s.p as usize * m + s.q as usize])
                        * c[row + s.target as usize];
                }
                for &(t, v) in &self.doubles[ib] {
                    acc += v * c[row + t as usize];
                }
                sigma[row + ib] += acc;
            }
        }

        // opposite-spin doubles: alpha single times beta single; the
        // exchange contribution vanishes across spins, leaving ⟨pu|qt⟩
        let m2 = m * m;
        let m3 = m2 * m;
        for ia in 0..n {
            for sa in &self.singles[ia] {
                let arow = sa.target as usize * n;
                let a_off = sa.p as usize * m3 + sa.q as usize * m;
                let sa_sign = sa.sign;
                for ib in 0..n {
                    let mut acc = 0.0;
                    for sb in &self.singles[ib] {
                        acc += sb.sign
                            * self.v_flat[a_off + sb.p as usize * m2 + sb.q as usize]
                            * c[arow + sb.target as usize];
                    }
                    sigma[ia * n + ib] += sa_sign * acc;
                }
            }
        }
        sigma
    }
}
