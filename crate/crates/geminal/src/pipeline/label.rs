//! Dataset labeling: exact ground-state energies and descriptor spectra for
//! batches of geometries, in parallel, merged deterministically.

use std::path::{Path, PathBuf};

use crate::dataset::{config_hash, Dataset, Provenance, Record};
use crate::descriptor::{e_infinity, geminal_eigenvalues, EInfinityMode};
use crate::fci::FciProblem;
use crate::geometry::Geometry;
use crate::integrals::IntegralSet;
use crate::linalg::inverse_sqrt;
use crate::pipeline::{label_fci_options, par_map};
use crate::{Error, Result};

/// Label one geometry: integrals → symmetric orthogonalization → exact
/// diagonalization → descriptor spectrum → record.
pub fn label_geometry(geom: &Geometry, id: &str) -> Result<Record> {
    let ints = IntegralSet::compute(geom)?;
    let x = inverse_sqrt(&ints.s, 1e-8)?;
    let orth = ints.transform(&x)?;
    let problem = FciProblem::new(&orth)?;
    let solution = problem.solve(&label_fci_options(problem.dim()))?;
    let features = geminal_eigenvalues(&orth)?;
    let e_inf = e_infinity(
        features.as_slice().expect("eigenvalues are contiguous"),
        orth.n_electrons,
        EInfinityMode::default(),
    )?;
    Ok(Record {
        id: id.to_string(),
        family_tag: geom.family.clone(),
        params: geom.params.clone(),
        n_electrons: orth.n_electrons,
        features: features.to_vec(),
        e_infinity: e_inf,
        e_nuclear: orth.e_nuclear,
        target_total: solution.energy_total,
        target_electronic: solution.energy_electronic,
        provenance: Provenance::FciLabel {
            source: id.to_string(),
        },
    })
}

/// Outcome of labeling a batch: records in input order, plus per-geometry
/// failures that did not stop the run.
#[derive(Debug)]
pub struct LabelReport {
    pub records: Vec<Record>,
    /// `(id, error message)` for every geometry that failed to label.
    pub failures: Vec<(String, String)>,
}

/// Label a batch of geometries on up to `workers` threads. Output order
/// follows input order regardless of the worker count; a failed geometry
/// lands in `failures` instead of aborting the batch.
pub fn label_geometries(
    geoms: &[Geometry],
    ids: &[String],
    workers: usize,
) -> Result<LabelReport> {
    if geoms.len() != ids.len() {
        return Err(Error::Shape(format!(
            "{} geometries but {} ids",
            geoms.len(),
            ids.len()
        )));
    }
    let indices: Vec<usize> = (0..geoms.len()).collect();
    let results = par_map(&indices, workers, |&i| label_geometry(&geoms[i], &ids[i]));
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (i, result) in results.into_iter().enumerate() {
        match result {
            Ok(record) => records.push(record),
            Err(e) => failures.push((ids[i].clone(), e.to_string())),
        }
    }
    Ok(LabelReport { records, failures })
}

/// `label` subcommand: read every `.xyz` file under `geoms_dir` (sorted by
/// file name), label in parallel, and write one dataset file. Per-geometry
/// failures are logged to stderr and skipped; the run fails only when the
/// inputs are unreadable or nothing labels at all.
pub fn cmd_label(geoms_dir: &Path, out: &Path, workers: usize, seed: u64) -> Result<()> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(geoms_dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "xyz"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Data(format!(
            "no .xyz files under {}",
            geoms_dir.display()
        )));
    }
    let mut geoms = Vec::with_capacity(paths.len());
    let mut ids = Vec::with_capacity(paths.len());
    for path in &paths {
        let text = std::fs::read_to_string(path)?;
        geoms.push(Geometry::from_xyz(&text, &path.display().to_string())?);
        ids.push(
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
        );
    }
    let report = label_geometries(&geoms, &ids, workers)?;
    for (id, msg) in &report.failures {
        eprintln!("label: skipping {id}: {msg}");
    }
    if report.records.is_empty() {
        return Err(Error::Data("every geometry failed to label".into()));
    }
    let mut ds = Dataset::new(seed, config_hash(&ids.join("\n")));
    for record in report.records {
        ds.push(record);
    }
    ds.write(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fci::FciOptions;
    use crate::geometry::{chain, tetrahedral, Geometry};

    fn h2_at(r: f64) -> Geometry {
        let mut g = chain(2, r);
        g.family = "h2".into();
        g
    }

    #[test]
    fn label_matches_a_direct_solve() {
        let g = h2_at(0.7414);
        let record = label_geometry(&g, "probe").unwrap();
        assert_eq!(record.features.len(), 6);
        assert_eq!(record.n_electrons, 2);
        assert_eq!(record.family_tag, "h2");

        let ints = IntegralSet::compute(&g).unwrap();
        let x = inverse_sqrt(&ints.s, 1e-8).unwrap();
        let orth = ints.transform(&x).unwrap();
        let sol = FciProblem::new(&orth)
            .unwrap()
            .solve(&FciOptions::default())
            .unwrap();
        assert!((record.target_total - sol.energy_total).abs() < 1e-12);
        assert!(
            (record.target_total - record.target_electronic - record.e_nuclear).abs() < 1e-12
        );
        assert!(matches!(
            &record.provenance,
            Provenance::FciLabel { source } if source == "probe"
        ));
    }

    #[test]
    fn four_atom_records_have_pair_count_features() {
        let record = label_geometry(&tetrahedral(1.8, 1.4), "t").unwrap();
        assert_eq!(record.features.len(), 28);
    }

    #[test]
    fn separated_pair_labels_as_two_free_atoms() {
        let record = label_geometry(&h2_at(8.0), "far").unwrap();
        let atom = IntegralSet::compute(&Geometry::new(vec![[0.0; 3]], "h1", &[])).unwrap();
        let want = 2.0 * atom.h[[0, 0]];
        assert!(
            (record.target_total - want).abs() < 1e-6,
            "{} vs {}",
            record.target_total,
            want
        );
    }

    #[test]
    fn worker_count_does_not_change_the_report() {
        let geoms: Vec<Geometry> = [0.7, 0.9, 1.2, 1.8, 2.5]
            .iter()
            .map(|&r| chain(4, r))
            .collect();
        let ids: Vec<String> = (0..geoms.len()).map(|i| format!("g{i}")).collect();
        let one = label_geometries(&geoms, &ids, 1).unwrap();
        let three = label_geometries(&geoms, &ids, 3).unwrap();
        assert_eq!(one.records, three.records);
        assert!(one.failures.is_empty());
    }

    #[test]
    fn failures_are_collected_not_fatal() {
        let geoms = vec![
            h2_at(1.0),
            Geometry::new(vec![[0.0; 3]], "h1", &[]), // odd electron count
            h2_at(1.5),
        ];
        let ids: Vec<String> = vec!["a".into(), "bad".into(), "c".into()];
        let report = label_geometries(&geoms, &ids, 2).unwrap();
        assert_eq!(report.records.len(), 2);
        assert_eq!(report.records[0].id, "a");
        assert_eq!(report.records[1].id, "c");
        assert_eq!(report.failures.len(), 1);
        assert_eq!(report.failures[0].0, "bad");
    }

    #[test]
    fn cmd_label_writes_a_sorted_reproducible_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let geoms_dir = dir.path().join("geoms");
        std::fs::create_dir(&geoms_dir).unwrap();
        // written out of order on purpose; ids must come out sorted
        std::fs::write(geoms_dir.join("b.xyz"), h2_at(1.2).to_xyz()).unwrap();
        std::fs::write(geoms_dir.join("a.xyz"), h2_at(0.8).to_xyz()).unwrap();
        std::fs::write(
            geoms_dir.join("c.xyz"),
            Geometry::new(vec![[0.0; 3]], "h1", &[]).to_xyz(),
        )
        .unwrap();
        std::fs::write(geoms_dir.join("notes.txt"), "ignored").unwrap();

        let out = dir.path().join("data.jsonl");
        cmd_label(&geoms_dir, &out, 2, 7).unwrap();
        let ds = Dataset::read(&out).unwrap();
        assert_eq!(ds.manifest.count, 2);
        assert_eq!(ds.manifest.seed, 7);
        assert_eq!(ds.records[0].id, "a");
        assert_eq!(ds.records[1].id, "b");

        let again = dir.path().join("again.jsonl");
        cmd_label(&geoms_dir, &again, 1, 7).unwrap();
        assert_eq!(
            std::fs::read(&out).unwrap(),
            std::fs::read(&again).unwrap()
        );
    }

    #[test]
    fn empty_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("data.jsonl");
        assert!(matches!(
            cmd_label(dir.path(), &out, 1, 0),
            Err(Error::Data(_))
        ));
    }
}
