use geminal::fci::{FciOptions, FciProblem, SolverChoice};
use geminal::geometry::{self, Geometry};
use geminal::integrals::IntegralSet;
use geminal::linalg::{eigh_ascending, inverse_sqrt};

fn lowdin(geom: &Geometry) -> IntegralSet {
    let ints = IntegralSet::compute(geom).unwrap();
    let x = inverse_sqrt(&ints.s, 1e-8).unwrap();
    ints.transform(&x).unwrap()
}

fn main() {
    let a = lowdin(&geometry::chain(2, 1.0));
    let b = lowdin(&geometry::chain(2, 1.5));
    let joined = IntegralSet::compose(&[&a, &b]).unwrap();
    let prob = FciProblem::new(&joined).unwrap();
    println!("dim = {}", prob.dim());

    let dense = prob.dense_matrix();
    let (vals, _) = eigh_ascending(&dense).unwrap();
    println!("lowest dense electronic eigenvalues: {:?}", &vals.to_vec()[..8]);

    let sol = prob
        .solve(&FciOptions {
            solver: SolverChoice::Iterative,
            ..FciOptions::default()
        })
        .unwrap();
    println!(
        "iterative electronic = {:.9}, iterations = {}",
        sol.energy_electronic, sol.iterations
    );
    let rank = vals
        .iter()
        .position(|&v| (v - sol.energy_electronic).abs() < 1e-6);
    println!("matches dense eigenvalue index {:?}", rank);

    // diagonal landscape: where does the minimum sit?
    let diag: Vec<f64> = (0..prob.dim())
        .map(|i| {
            let d = prob.determinant(i);
            prob.so.diagonal(d.combined(prob.so.n_spin() / 2))
        })
        .collect();
    let min_idx = (0..diag.len()).min_by(|&i, &j| diag[i].total_cmp(&diag[j])).unwrap();
    let min_det = prob.determinant(min_idx);
    println!(
        "lowest diagonal {:.6} at index {} det alpha={:04b} beta={:04b}",
        diag[min_idx], min_idx, min_det.alpha, min_det.beta
    );
}
