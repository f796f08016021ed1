//! Minimal-basis molecular integrals for hydrogen clusters.
//!
//! One contracted s-type Gaussian per atom (an STO-6G hydrogen function
//! with a 1.24 scale factor folded into the exponents), so every integral
//! has a closed form in terms of the Gaussian product theorem and the
//! zeroth-order Boys function.

use ndarray::{Array2, Array4};

use crate::geometry::Geometry;
use crate::{Error, Result};

/// Contraction exponents of the hydrogen basis function (scale factor
/// already applied).
pub const STO6G_EXPONENTS: [f64; 6] = [
    35.52322122,
    6.513143725,
    1.822142904,
    0.6259552659,
    0.2430767471,
    0.1001124280,
];

/// Contraction coefficients matching [`STO6G_EXPONENTS`], quoted for
/// unit-normalized primitives.
pub const STO6G_COEFFS: [f64; 6] = [
    0.00916359628,
    0.04936149294,
    0.16853830490,
    0.37056279970,
    0.41649152980,
    0.13033408410,
];

/// Boys function of order zero, `F0(t) = ∫₀¹ exp(-t u²) du`.
///
/// Uses the error-function closed form except for tiny arguments, where a
/// Taylor expansion avoids the 0/0.
pub fn boys_f0(t: f64) -> Result<f64> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::BoysArgument(t));
    }
    if t < 1e-10 {
        // 1 - t/3 + t²/10 - t³/42 + t⁴/216 - t⁵/1320
        let t2 = t * t;
        Ok(1.0 - t / 3.0 + t2 / 10.0 - t2 * t / 42.0 + t2 * t2 / 216.0
            - t2 * t2 * t / 1320.0)
    } else {
        let st = t.sqrt();
        Ok(0.5 * (std::f64::consts::PI / t).sqrt() * libm::erf(st))
    }
}

/// A normalized contracted s-type Gaussian centered on one atom
/// (coordinates in bohr, primitive norms folded into the coefficients).
#[derive(Clone, Debug)]
pub struct ContractedGaussian {
    pub center: [f64; 3],
    pub exps: [f64; 6],
    pub coeffs: [f64; 6],
}

fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

/// Gaussian product center of two primitives.
fn product_center(alpha: f64, a: &[f64; 3], beta: f64, b: &[f64; 3]) -> [f64; 3] {
    let p = alpha + beta;
    [
        (alpha * a[0] + beta * b[0]) / p,
        (alpha * a[1] + beta * b[1]) / p,
        (alpha * a[2] + beta * b[2]) / p,
    ]
}

/// One basis function per atom, contraction renormalized so the diagonal
/// of the overlap matrix is exactly one.
pub fn hydrogen_basis(geom: &Geometry) -> Vec<ContractedGaussian> {
    // Fold the primitive norm (2a/pi)^(3/4) into each coefficient, then
    // rescale the contraction to unit self-overlap.
    let mut coeffs = [0.0f64; 6];
    for i in 0..6 {
        coeffs[i] = STO6G_COEFFS[i]
            * (2.0 * STO6G_EXPONENTS[i] / std::f64::consts::PI).powf(0.75);
    }
    let mut self_overlap = 0.0;
    for i in 0..6 {
        for j in 0..6 {
            let p = STO6G_EXPONENTS[i] + STO6G_EXPONENTS[j];
            self_overlap += coeffs[i] * coeffs[j] * (std::f64::consts::PI / p).powf(1.5);
        }
    }
    let scale = self_overlap.sqrt().recip();
    for c in coeffs.iter_mut() {
        *c *= scale;
    }
    geom.coords_bohr()
        .into_iter()
        .map(|center| ContractedGaussian {
            center,
            exps: STO6G_EXPONENTS,
            coeffs,
        })
        .collect()
}

// Primitive integrals over unit-prefactor Gaussians exp(-a|r-A|²); the
// contraction coefficients carry all normalization.

fn prim_overlap(alpha: f64, a: &[f64; 3], beta: f64, b: &[f64; 3]) -> f64 {
    let p = alpha + beta;
    let kab = (-alpha * beta / p * dist2(a, b)).exp();
    (std::f64::consts::PI / p).powf(1.5) * kab
}

fn prim_kinetic(alpha: f64, a: &[f64; 3], beta: f64, b: &[f64; 3]) -> f64 {
    let p = alpha + beta;
    let mu = alpha * beta / p;
    mu * (3.0 - 2.0 * mu * dist2(a, b)) * prim_overlap(alpha, a, beta, b)
}

/// Attraction to a unit point charge at `c` (sign included).
fn prim_nuclear(alpha: f64, a: &[f64; 3], beta: f64, b: &[f64; 3], c: &[f64; 3]) -> Result<f64> {
    let p = alpha + beta;
    let kab = (-alpha * beta / p * dist2(a, b)).exp();
    let pc = product_center(alpha, a, beta, b);
    let f0 = boys_f0(p * dist2(&pc, c))?;
    Ok(-(2.0 * std::f64::consts::PI / p) * kab * f0)
}

/// Two-electron repulsion in chemist grouping: charge density ab with
/// electron 1, cd with electron 2.
fn prim_eri(
    alpha: f64,
    a: &[f64; 3],
    beta: f64,
    b: &[f64; 3],
    gamma: f64,
    c: &[f64; 3],
    delta: f64,
    d: &[f64; 3],
) -> Result<f64> {
    let p = alpha + beta;
    let q = gamma + delta;
    let kab = (-alpha * beta / p * dist2(a, b)).exp();
    let kcd = (-gamma * delta / q * dist2(c, d)).exp();
    let pp = product_center(alpha, a, beta, b);
    let qq = product_center(gamma, c, delta, d);
    let f0 = boys_f0(p * q / (p + q) * dist2(&pp, &qq))?;
    let pref = 2.0 * std::f64::consts::PI.powf(2.5) / (p * q * (p + q).sqrt());
    Ok(pref * kab * kcd * f0)
}

fn contracted_overlap(f: &ContractedGaussian, g: &ContractedGaussian) -> f64 {
    let mut s = 0.0;
    for i in 0..6 {
        for j in 0..6 {
            s += f.coeffs[i] * g.coeffs[j]
                * prim_overlap(f.exps[i], &f.center, g.exps[j], &g.center);
        }
    }
    s
}

fn contracted_kinetic(f: &ContractedGaussian, g: &ContractedGaussian) -> f64 {
    let mut t = 0.0;
    for i in 0..6 {
        for j in 0..6 {
            t += f.coeffs[i] * g.coeffs[j]
                * prim_kinetic(f.exps[i], &f.center, g.exps[j], &g.center);
        }
    }
    t
}

fn contracted_nuclear(
    f: &ContractedGaussian,
    g: &ContractedGaussian,
    nuclei: &[[f64; 3]],
) -> Result<f64> {
    let mut v = 0.0;
    for i in 0..6 {
        for j in 0..6 {
            for c in nuclei {
                v += f.coeffs[i] * g.coeffs[j]
                    * prim_nuclear(f.exps[i], &f.center, g.exps[j], &g.center, c)?;
            }
        }
    }
    Ok(v)
}

fn contracted_eri(
    f: &ContractedGaussian,
    g: &ContractedGaussian,
    h: &ContractedGaussian,
    k: &ContractedGaussian,
) -> Result<f64> {
    let mut v = 0.0;
    for i in 0..6 {
        for j in 0..6 {
            let cij = f.coeffs[i] * g.coeffs[j];
            for l in 0..6 {
                for m in 0..6 {
                    v += cij * h.coeffs[l] * k.coeffs[m]
                        * prim_eri(
                            f.exps[i], &f.center, g.exps[j], &g.center, h.exps[l],
                            &h.center, k.exps[m], &k.center,
                        )?;
                }
            }
        }
    }
    Ok(v)
}

/// Point-charge repulsion between the hydrogen nuclei, in hartree.
pub fn nuclear_repulsion(geom: &Geometry) -> f64 {
    let xyz = geom.coords_bohr();
    let mut e = 0.0;
    for i in 0..xyz.len() {
        for j in 0..i {
            e += 1.0 / dist2(&xyz[i], &xyz[j]).sqrt();
        }
    }
    e
}

/// All one- and two-electron integrals of a cluster in one basis.
///
/// The two-electron tensor `v` uses the physics convention
/// `v[[p, q, r, s]] = ⟨pq|rs⟩`: p and r belong to electron 1, q and s to
/// electron 2.
#[derive(Clone, Debug)]
pub struct IntegralSet {
    pub n_electrons: usize,
    /// Overlap matrix (identity after an orthonormal transform).
    pub s: Array2<f64>,
    /// Core Hamiltonian: kinetic energy plus nuclear attraction.
    pub h: Array2<f64>,
    /// Two-electron repulsion, physics ordering.
    pub v: Array4<f64>,
    /// Nuclear point-charge repulsion.
    pub e_nuclear: f64,
}

impl IntegralSet {
    pub fn n_basis(&self) -> usize {
        self.h.nrows()
    }

    /// Compute the atomic-orbital integral set of a cluster.
    pub fn compute(geom: &Geometry) -> Result<IntegralSet> {
        geom.validate()?;
        let basis = hydrogen_basis(geom);
        let m = basis.len();
        let nuclei = geom.coords_bohr();

        let mut s = Array2::zeros((m, m));
        let mut h = Array2::zeros((m, m));
        for a in 0..m {
            for b in 0..=a {
                let sab = contracted_overlap(&basis[a], &basis[b]);
                let hab = contracted_kinetic(&basis[a], &basis[b])
                    + contracted_nuclear(&basis[a], &basis[b], &nuclei)?;
                s[[a, b]] = sab;
                s[[b, a]] = sab;
                h[[a, b]] = hab;
                h[[b, a]] = hab;
            }
        }

        // Chemist-ordered tensor first: (ab|cd) has the full 8-fold
        // permutational symmetry, so only canonical quartets are computed.
        let mut chem = Array4::zeros((m, m, m, m));
        for a in 0..m {
            for b in 0..=a {
                let ab = a * (a + 1) / 2 + b;
                for c in 0..=a {
                    let dmax = if c == a { b } else { c };
                    for d in 0..=dmax {
                        let cd = c * (c + 1) / 2 + d;
                        if cd > ab {
                            continue;
                        }
                        let val = contracted_eri(&basis[a], &basis[b], &basis[c], &basis[d])?;
                        for (i, j, k, l) in [
                            (a, b, c, d),
                            (b, a, c, d),
                            (a, b, d, c),
                            (b, a, d, c),
                            (c, d, a, b),
                            (d, c, a, b),
                            (c, d, b, a),
                            (d, c, b, a),
                        ] {
                            chem[[i, j, k, l]] = val;
                        }
                    }
                }
            }
        }
        // Physics ordering: ⟨pq|rs⟩ = (pr|qs).
        let mut v = Array4::zeros((m, m, m, m));
        for p in 0..m {
            for q in 0..m {
                for r in 0..m {
                    for sx in 0..m {
                        v[[p, q, r, sx]] = chem[[p, r, q, sx]];
                    }
                }
            }
        }

        Ok(IntegralSet {
            n_electrons: geom.n_electrons(),
            s,
            h,
            v,
            e_nuclear: nuclear_repulsion(geom),
        })
    }

    /// Re-express the integrals in the basis whose columns are `c`
    /// (AO-to-MO transformation). Four sequential one-index contractions,
    /// O(m⁵) each.
    pub fn transform(&self, c: &Array2<f64>) -> Result<IntegralSet> {
        let m = self.n_basis();
        if c.nrows() != m || c.ncols() != m {
            return Err(Error::Shape(format!(
                "transform matrix is {}x{}, expected {}x{}",
                c.nrows(),
                c.ncols(),
                m,
                m
            )));
        }
        let s = c.t().dot(&self.s).dot(c);
        let h = c.t().dot(&self.h).dot(c);

        let mut t1 = Array4::zeros((m, m, m, m));
        for p in 0..m {
            for nu in 0..m {
                for la in 0..m {
                    for sg in 0..m {
                        let mut acc = 0.0;
                        for mu in 0..m {
                            acc += c[[mu, p]] * self.v[[mu, nu, la, sg]];
                        }
                        t1[[p, nu, la, sg]] = acc;
                    }
                }
            }
        }
        let mut t2 = Array4::zeros((m, m, m, m));
        for p in 0..m {
            for q in 0..m {
                for la in 0..m {
                    for sg in 0..m {
                        let mut acc = 0.0;
                        for nu in 0..m {
                            acc += c[[nu, q]] * t1[[p, nu, la, sg]];
                        }
                        t2[[p, q, la, sg]] = acc;
                    }
                }
            }
        }
        let mut t3 = Array4::zeros((m, m, m, m));
        for p in 0..m {
            for q in 0..m {
                for r in 0..m {
                    for sg in 0..m {
                        let mut acc = 0.0;
                        for la in 0..m {
                            acc += c[[la, r]] * t2[[p, q, la, sg]];
                        }
                        t3[[p, q, r, sg]] = acc;
                    }
                }
            }
        }
        let mut v = Array4::zeros((m, m, m, m));
        for p in 0..m {
            for q in 0..m {
                for r in 0..m {
                    for sx in 0..m {
                        let mut acc = 0.0;
                        for sg in 0..m {
                            acc += c[[sg, sx]] * t3[[p, q, r, sg]];
                        }
                        v[[p, q, r, sx]] = acc;
                    }
                }
            }
        }

        Ok(IntegralSet {
            n_electrons: self.n_electrons,
            s,
            h,
            v,
            e_nuclear: self.e_nuclear,
        })
    }

    /// Whether the overlap matrix is the identity to `tol`.
    pub fn is_orthonormal(&self, tol: f64) -> bool {
        let m = self.n_basis();
        for i in 0..m {
            for j in 0..m {
                let want = if i == j { 1.0 } else { 0.0 };
                if (self.s[[i, j]] - want).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Direct sum of non-interacting fragments: block-diagonal one-electron
    /// part, two-electron elements only when all four indices stay inside
    /// one fragment, and additive nuclear repulsion. Each fragment must be
    /// in an orthonormal basis.
    pub fn compose(parts: &[&IntegralSet]) -> Result<IntegralSet> {
        if parts.is_empty() {
            return Err(Error::Data("compose needs at least one fragment".into()));
        }
        for p in parts {
            if !p.is_orthonormal(1e-8) {
                return Err(Error::NotOrthonormal);
            }
        }
        let m: usize = parts.iter().map(|p| p.n_basis()).sum();
        let mut s = Array2::eye(m);
        let mut h = Array2::zeros((m, m));
        let mut v = Array4::zeros((m, m, m, m));
        let mut off = 0;
        for part in parts {
            let mp = part.n_basis();
            for i in 0..mp {
                for j in 0..mp {
                    h[[off + i, off + j]] = part.h[[i, j]];
                    s[[off + i, off + j]] = part.s[[i, j]];
                }
            }
            for p in 0..mp {
                for q in 0..mp {
                    for r in 0..mp {
                        for sx in 0..mp {
                            v[[off + p, off + q, off + r, off + sx]] =
                                part.v[[p, q, r, sx]];
                        }
                    }
                }
            }
            off += mp;
        }
        Ok(IntegralSet {
            n_electrons: parts.iter().map(|p| p.n_electrons).sum(),
            s,
            h,
            v,
            e_nuclear: parts.iter().map(|p| p.e_nuclear).sum(),
        })
    }
}
