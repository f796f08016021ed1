//! Closed-shell mean-field reference: restricted Hartree–Fock with Löwdin
//! orthogonalization, plus the second-order Møller–Plesset correction.

use ndarray::{Array1, Array2};

use crate::integrals::IntegralSet;
use crate::linalg::{eigh_ascending, inverse_sqrt};
use crate::{Error, Result};

/// Self-consistent-field knobs. The defaults converge every cluster the
/// generators produce; non-convergence is reported, never hidden.
#[derive(Clone, Debug)]
pub struct ScfOptions {
    pub max_iter: usize,
    /// Convergence threshold on the largest density-matrix change.
    pub conv_tol: f64,
    /// Fraction of the previous density mixed in during early iterations
    /// (before the residual extrapolation has a history to work with).
    pub damping: f64,
    /// Number of initial iterations that may use damping.
    pub damp_iters: usize,
    /// Smallest acceptable overlap eigenvalue.
    pub lindep_tol: f64,
    /// Added to virtual-orbital energies during the iteration (removed
    /// before anything is reported). Plain Roothaan steps are linearly
    /// unstable for stretched clusters — the symmetry-breaking response
    /// grows like (pair repulsion)/(frontier gap), which exceeds one well
    /// before dissociation and sends the density into an ionic two-cycle.
    /// The shift caps that factor near (pair repulsion)/shift, so the
    /// symmetric solution stays attracting at any separation.
    pub level_shift: f64,
    /// History length for Pulay residual extrapolation, which undoes the
    /// level shift's slow tail (contraction ~ shift/(shift + gap) for
    /// small-gap stable modes). Zero disables extrapolation.
    pub diis_window: usize,
    /// Density change below which extrapolation engages. Extrapolating
    /// from the start can land on whichever stationary state is nearest;
    /// waiting until the damped, shifted iteration has entered a basin
    /// keeps the acceleration from choosing the state.
    pub diis_trigger: f64,
}

impl Default for ScfOptions {
    fn default() -> ScfOptions {
        ScfOptions {
            max_iter: 500,
            conv_tol: 1e-8,
            damping: 0.3,
            damp_iters: 10,
            lindep_tol: 1e-8,
            level_shift: 1.0,
            diis_window: 8,
            diis_trigger: 1e-2,
        }
    }
}

/// Converged (or flagged) restricted Hartree–Fock state.
#[derive(Clone, Debug)]
pub struct RhfSolution {
    pub energy_total: f64,
    pub energy_electronic: f64,
    pub orbital_energies: Array1<f64>,
    /// Orbital coefficients, one column per molecular orbital, orthonormal
    /// with respect to the overlap matrix.
    pub coefficients: Array2<f64>,
    pub converged: bool,
    pub iterations: usize,
}

fn fock_matrix(ints: &IntegralSet, d: &Array2<f64>) -> Array2<f64> {
    let m = ints.n_basis();
    let mut f = ints.h.clone();
    for mu in 0..m {
        for nu in 0..m {
            let mut acc = 0.0;
            for la in 0..m {
                for sg in 0..m {
                    // Coulomb minus half exchange, ⟨pq|rs⟩ ordering
                    acc += d[[la, sg]]
                        * (ints.v[[mu, la, nu, sg]] - 0.5 * ints.v[[mu, nu, la, sg]]);
                }
            }
            f[[mu, nu]] += acc;
        }
    }
    f
}

fn density_from_orbitals(c: &Array2<f64>, n_occ: usize) -> Array2<f64> {
    let occ = c.slice(ndarray::s![.., 0..n_occ]);
    2.0 * occ.dot(&occ.t())
}

/// Solve restricted Hartree–Fock, falling back to a slower but
/// cycle-proof iteration when the accelerated default stalls.
///
/// The default options (level shift plus late Pulay extrapolation) settle
/// almost every generated cluster in well under 500 iterations, and the
/// extrapolation is what pins down exactly-degenerate frontier cases such
/// as tetrahedra. Band-like long chains near the metallic regime are the
/// opposite: extrapolation can cycle there, while the plain damped,
/// shifted iteration always contracts — just slowly (the tail goes like
/// shift/(shift + gap) per step). Trying both costs at most a few
/// thousand diagonalizations of a tiny matrix. If neither attempt
/// converges the lower-energy state is returned, still flagged.
pub fn rhf(ints: &IntegralSet) -> Result<RhfSolution> {
    let accelerated = rhf_with(ints, &ScfOptions::default())?;
    if accelerated.converged {
        return Ok(accelerated);
    }
    let plain = rhf_with(
        ints,
        &ScfOptions {
            max_iter: 5000,
            diis_window: 0,
            ..ScfOptions::default()
        },
    )?;
    if plain.converged || plain.energy_total <= accelerated.energy_total {
        Ok(plain)
    } else {
        Ok(accelerated)
    }
}

/// Solve restricted Hartree–Fock for an even-electron cluster.
pub fn rhf_with(ints: &IntegralSet, opts: &ScfOptions) -> Result<RhfSolution> {
    if ints.n_electrons == 0 || ints.n_electrons % 2 != 0 {
        return Err(Error::Electrons(format!(
            "restricted mean field needs a positive even electron count, got {}",
            ints.n_electrons
        )));
    }
    let n_occ = ints.n_electrons / 2;
    let m = ints.n_basis();
    if n_occ > m {
        return Err(Error::Electrons(format!(
            "{} electrons do not fit in {} orbitals",
            ints.n_electrons, m
        )));
    }

    let x = inverse_sqrt(&ints.s, opts.lindep_tol)?;
    let to_ortho = |f: &Array2<f64>| x.t().dot(f).dot(&x);

    // Core-Hamiltonian guess with a small uniform off-diagonal bias. Beyond
    // ~10 angstrom separation every coupling matrix element underflows, the
    // guess becomes exactly block-degenerate, and the eigensolver is free
    // to hand back orbitals localized on single atoms — a seed the
    // iteration cannot escape, because the resulting Fock matrices are just
    // as blind. The bias always prefers the delocalized combination and is
    // three orders of magnitude below real couplings at bonding distances.
    let mut h_guess = ints.h.clone();
    for i in 0..m {
        for j in 0..m {
            if i != j {
                h_guess[[i, j]] -= 1e-2;
            }
        }
    }
    let (_, cp0) = eigh_ascending(&to_ortho(&h_guess))?;
    let mut d = density_from_orbitals(&x.dot(&cp0), n_occ);
    // Occupied projector in the orthogonalized basis, for the level shift
    // and the extrapolation residual.
    let occ0 = cp0.slice(ndarray::s![.., 0..n_occ]);
    let mut p_occ = occ0.dot(&occ0.t());

    // Pulay history: (unshifted orthogonalized Fock, residual [F, P]).
    let mut history: Vec<(Array2<f64>, Array2<f64>)> = Vec::new();
    let mut diis_armed = false;
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..opts.max_iter {
        iterations = it + 1;
        let f = fock_matrix(ints, &d);
        let fp = to_ortho(&f);
        if diis_armed && opts.diis_window > 0 {
            let residual = fp.dot(&p_occ) - p_occ.dot(&fp);
            history.push((fp.clone(), residual));
            if history.len() > opts.diis_window {
                history.remove(0);
            }
        }
        let mut fp_eff = diis_extrapolate(&history).unwrap_or(fp);
        // Shift the current virtual space up before diagonalizing; at
        // self-consistency the shifted and unshifted operators share
        // eigenvectors, so the fixed point is unchanged.
        for i in 0..m {
            for j in 0..m {
                let q = (i == j) as usize as f64 - p_occ[[i, j]];
                fp_eff[[i, j]] += opts.level_shift * q;
            }
        }
        let (_, cp) = eigh_ascending(&fp_eff)?;
        let d_raw = density_from_orbitals(&x.dot(&cp), n_occ);
        let occ = cp.slice(ndarray::s![.., 0..n_occ]);
        p_occ = occ.dot(&occ.t());
        let delta = d_raw
            .iter()
            .zip(d.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        d = if history.len() < 2 && it < opts.damp_iters {
            (1.0 - opts.damping) * &d_raw + opts.damping * &d
        } else {
            d_raw
        };
        if delta < opts.conv_tol {
            converged = true;
            break;
        }
        if delta < opts.diis_trigger {
            diis_armed = true;
        }
    }

    // Report unshifted orbital energies and the energy of the density the
    // loop actually settled on.
    let f = fock_matrix(ints, &d);
    let (orbital_energies, cp) = eigh_ascending(&to_ortho(&f))?;
    let coefficients = x.dot(&cp);
    // E = ½ Tr[D (H + F)]
    let mut energy_electronic = 0.0;
    for mu in 0..m {
        for nu in 0..m {
            energy_electronic += 0.5 * d[[mu, nu]] * (ints.h[[mu, nu]] + f[[mu, nu]]);
        }
    }
    Ok(RhfSolution {
        energy_total: energy_electronic + ints.e_nuclear,
        energy_electronic,
        orbital_energies,
        coefficients,
        converged,
        iterations,
    })
}

/// Pulay mixing: the residual-norm-minimizing linear combination of the
/// stored Fock matrices. Returns None until two iterations of history
/// exist or when every attempt at the (often ill-conditioned) normal
/// system fails; the caller then uses the latest Fock matrix unmixed.
fn diis_extrapolate(history: &[(Array2<f64>, Array2<f64>)]) -> Option<Array2<f64>> {
    // Oldest entries are dropped first when the system misbehaves.
    for start in 0..history.len().saturating_sub(1) {
        let entries = &history[start..];
        let k = entries.len();
        let mut b = nalgebra::DMatrix::<f64>::zeros(k + 1, k + 1);
        for i in 0..k {
            for j in 0..k {
                b[(i, j)] = entries[i]
                    .1
                    .iter()
                    .zip(entries[j].1.iter())
                    .map(|(a, c)| a * c)
                    .sum();
            }
            b[(i, k)] = 1.0;
            b[(k, i)] = 1.0;
        }
        let mut rhs = nalgebra::DVector::<f64>::zeros(k + 1);
        rhs[k] = 1.0;
        let Some(sol) = b.lu().solve(&rhs) else {
            continue;
        };
        let coeffs = sol.rows(0, k);
        if coeffs.iter().any(|c| !c.is_finite() || c.abs() > 1e6) {
            continue;
        }
        let shape = entries[0].0.raw_dim();
        let mut mixed = Array2::<f64>::zeros(shape);
        for (i, (f, _)) in entries.iter().enumerate() {
            mixed.scaled_add(coeffs[i], f);
        }
        return Some(mixed);
    }
    None
}

/// Integrals re-expressed in the converged molecular-orbital basis.
pub fn mo_basis(ints: &IntegralSet, sol: &RhfSolution) -> Result<IntegralSet> {
    ints.transform(&sol.coefficients)
}

/// Second-order Møller–Plesset correlation energy from molecular-orbital
/// integrals. Rejects a vanishing frontier gap instead of dividing by it.
pub fn mp2_correction(mo: &IntegralSet, eps: &Array1<f64>, n_occ: usize) -> Result<f64> {
    let m = mo.n_basis();
    if n_occ == 0 || n_occ >= m {
        return Err(Error::Electrons(format!(
            "second-order correction needs occupied and virtual orbitals, got {} of {}",
            n_occ, m
        )));
    }
    let gap = eps[n_occ] - eps[n_occ - 1];
    if gap < 1e-8 {
        return Err(Error::DegenerateGap(gap));
    }
    let mut e2 = 0.0;
    for i in 0..n_occ {
        for j in 0..n_occ {
            for a in n_occ..m {
                for b in n_occ..m {
                    let iajb = mo.v[[i, j, a, b]];
                    let ibja = mo.v[[i, j, b, a]];
                    e2 += iajb * (2.0 * iajb - ibja) / (eps[i] + eps[j] - eps[a] - eps[b]);
                }
            }
        }
    }
    Ok(e2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::chain;
    use crate::geometry::Geometry;

    fn h2() -> Geometry {
        let mut g = chain(2, 0.7414);
        g.family = "h2".into();
        g
    }

    // Reference energies below were produced with the density converged to
    // machine precision, so the pinned-value tests iterate further than the
    // everyday default.
    fn tight() -> ScfOptions {
        ScfOptions {
            conv_tol: 1e-12,
            ..ScfOptions::default()
        }
    }

    #[test]
    fn h2_reference_energies() {
        let ints = IntegralSet::compute(&h2()).unwrap();
        let sol = rhf_with(&ints, &tight()).unwrap();
        assert!(sol.converged);
        assert!((sol.energy_total - -1.125292580809).abs() < 1e-9);
        assert!((sol.energy_total - (sol.energy_electronic + ints.e_nuclear)).abs() < 1e-12);

        let mo = mo_basis(&ints, &sol).unwrap();
        assert!(mo.is_orthonormal(1e-8));
        let e2 = mp2_correction(&mo, &sol.orbital_energies, 1).unwrap();
        assert!((sol.energy_total + e2 - -1.138493248264).abs() < 1e-9);
    }

    #[test]
    fn h4_chain_reference_energies() {
        let g = chain(4, 1.0);
        let ints = IntegralSet::compute(&g).unwrap();
        let sol = rhf_with(&ints, &tight()).unwrap();
        assert!(sol.converged);
        assert!((sol.energy_total - -2.112460725237).abs() < 1e-9);
        let mo = mo_basis(&ints, &sol).unwrap();
        let e2 = mp2_correction(&mo, &sol.orbital_energies, 2).unwrap();
        assert!((sol.energy_total + e2 - -2.153971299126).abs() < 1e-9);
    }

    #[test]
    fn h6_hexagon_reference_energy() {
        // regular hexagon, 1.5 angstrom edge
        let coords: Vec<[f64; 3]> = (0..6)
            .map(|k| {
                let ang = std::f64::consts::PI / 3.0 * k as f64;
                [1.5 * ang.cos(), 1.5 * ang.sin(), 0.0]
            })
            .collect();
        let g = Geometry::new(coords, "hexagon", &[("side", 1.5)]);
        let ints = IntegralSet::compute(&g).unwrap();
        let sol = rhf_with(&ints, &tight()).unwrap();
        assert!(sol.converged);
        assert!((sol.energy_total - -2.840830482691).abs() < 1e-9);
    }

    #[test]
    fn orbitals_are_overlap_orthonormal() {
        let ints = IntegralSet::compute(&chain(4, 1.1)).unwrap();
        let sol = rhf(&ints).unwrap();
        let g = sol.coefficients.t().dot(&ints.s).dot(&sol.coefficients);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g[[i, j]] - want).abs() < 1e-9);
            }
        }
        // orbital energies come out ascending
        for w in sol.orbital_energies.as_slice().unwrap().windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn odd_electron_counts_are_rejected() {
        let g = chain(3, 1.0);
        let ints = IntegralSet::compute(&g).unwrap();
        assert!(matches!(rhf(&ints), Err(Error::Electrons(_))));
    }

    #[test]
    fn iteration_starvation_is_flagged_not_hidden() {
        let ints = IntegralSet::compute(&chain(4, 1.0)).unwrap();
        let opts = ScfOptions {
            max_iter: 1,
            ..ScfOptions::default()
        };
        let sol = rhf_with(&ints, &opts).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.iterations, 1);
    }

    #[test]
    fn degenerate_frontier_gap_is_rejected() {
        let ints = IntegralSet::compute(&h2()).unwrap();
        let sol = rhf(&ints).unwrap();
        let mo = mo_basis(&ints, &sol).unwrap();
        let eps = ndarray::arr1(&[-0.5, -0.5 + 1e-12]);
        assert!(matches!(
            mp2_correction(&mo, &eps, 1),
            Err(Error::DegenerateGap(_))
        ));
    }
}
