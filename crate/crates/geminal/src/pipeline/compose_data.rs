//! Size-consistent composite training data: direct sums of labeled
//! fragments. The exact energy of non-interacting fragments is the sum of
//! the fragment energies, so large-cluster records come from small-cluster
//! solves plus one descriptor evaluation of the composite.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{config_hash, Dataset, Provenance, Record};
use crate::descriptor::{e_infinity, geminal_eigenvalues, EInfinityMode};
use crate::geometry::from_family_params;
use crate::integrals::IntegralSet;
use crate::linalg::inverse_sqrt;
use crate::pipeline::par_map;
use crate::{Error, Result};

/// One labeled fragment held ready for composition.
#[derive(Clone, Debug)]
pub struct FragmentEntry {
    pub id: String,
    pub n_atoms: usize,
    /// Integrals in a symmetrically orthogonalized basis — composition
    /// requires orthonormal fragments.
    pub ints: IntegralSet,
    pub target_total: f64,
    pub target_electronic: f64,
    pub e_nuclear: f64,
}

/// Labeled fragments bucketed by atom count, with integrals precomputed
/// once per fragment.
#[derive(Debug, Default)]
pub struct FragmentPools {
    pools: BTreeMap<usize, Vec<FragmentEntry>>,
}

impl FragmentPools {
    /// Rebuild every record's geometry from its family tag and parameters,
    /// compute its orthonormal-basis integrals once, and bucket by atom
    /// count. A record whose rebuilt geometry does not reproduce its stored
    /// nuclear repulsion is rejected — it belongs to a different geometry
    /// than its label.
    pub fn from_records<'a, I>(records: I) -> Result<FragmentPools>
    where
        I: IntoIterator<Item = &'a Record>,
    {
        let mut pools: BTreeMap<usize, Vec<FragmentEntry>> = BTreeMap::new();
        for record in records {
            let n_atoms = record.n_electrons; // one electron per hydrogen
            let geom = from_family_params(&record.family_tag, n_atoms, &record.params)?;
            let ints = IntegralSet::compute(&geom)?;
            let x = inverse_sqrt(&ints.s, 1e-8)?;
            let orth = ints.transform(&x)?;
            if (orth.e_nuclear - record.e_nuclear).abs() > 1e-8 {
                return Err(Error::Data(format!(
                    "record {}: rebuilt geometry has nuclear repulsion {} but the label says {}",
                    record.id, orth.e_nuclear, record.e_nuclear
                )));
            }
            pools.entry(n_atoms).or_default().push(FragmentEntry {
                id: record.id.clone(),
                n_atoms,
                ints: orth,
                target_total: record.target_total,
                target_electronic: record.target_electronic,
                e_nuclear: record.e_nuclear,
            });
        }
        Ok(FragmentPools { pools })
    }

    /// The fragments with `n_atoms` atoms; an error if none are loaded.
    pub fn pool(&self, n_atoms: usize) -> Result<&[FragmentEntry]> {
        match self.pools.get(&n_atoms) {
            Some(entries) if !entries.is_empty() => Ok(entries),
            _ => Err(Error::Data(format!(
                "no labeled {n_atoms}-atom fragments available"
            ))),
        }
    }

    /// Atom counts with at least one fragment, ascending.
    pub fn sizes(&self) -> Vec<usize> {
        self.pools.keys().copied().collect()
    }
}

/// Parse a partition list like `"8+2,6+4,6+2+2"` into fragment sizes.
/// Every fragment must have an even, nonzero atom count — labels exist
/// only for spin-balanced clusters.
pub fn parse_partitions(text: &str) -> Result<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            return Err(Error::Config(format!("empty partition in {text:?}")));
        }
        let mut sizes = Vec::new();
        for item in part.split('+') {
            let n: usize = item
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad fragment size {item:?} in {text:?}")))?;
            if n == 0 || n % 2 != 0 {
                return Err(Error::Config(format!(
                    "fragment sizes must be even and nonzero, got {n} in {text:?}"
                )));
            }
            sizes.push(n);
        }
        out.push(sizes);
    }
    Ok(out)
}

/// Draw `count` composite records: for each, a partition uniformly at
/// random, then a uniform fragment from the pool of every required size.
///
/// The whole draw plan comes from one seeded stream before any work
/// happens, so the output is identical for any worker count. Targets are
/// sums of the stored fragment labels — no solve runs on the composite.
pub fn compose_records(
    pools: &FragmentPools,
    partitions: &[Vec<usize>],
    count: usize,
    seed: u64,
    id_prefix: &str,
    workers: usize,
) -> Result<Vec<Record>> {
    if partitions.is_empty() {
        return Err(Error::Config("at least one partition is required".into()));
    }
    // fail on missing pools up front, independent of the draw
    for partition in partitions {
        for &size in partition {
            pools.pool(size)?;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plan: Vec<(usize, Vec<(usize, usize)>)> = (0..count)
        .map(|i| {
            let partition = &partitions[rng.gen_range(0..partitions.len())];
            let picks = partition
                .iter()
                .map(|&size| {
                    let pool = pools.pool(size).expect("checked above");
                    (size, rng.gen_range(0..pool.len()))
                })
                .collect();
            (i, picks)
        })
        .collect();

    let results = par_map(&plan, workers, |(i, picks)| -> Result<Record> {
        let entries: Vec<&FragmentEntry> = picks
            .iter()
            .map(|&(size, k)| &pools.pool(size).expect("checked above")[k])
            .collect();
        let parts: Vec<&IntegralSet> = entries.iter().map(|e| &e.ints).collect();
        let composed = IntegralSet::compose(&parts)?;
        let features = geminal_eigenvalues(&composed)?;
        let e_inf = e_infinity(
            features.as_slice().expect("eigenvalues are contiguous"),
            composed.n_electrons,
            EInfinityMode::default(),
        )?;
        let sizes: Vec<String> = picks.iter().map(|(s, _)| s.to_string()).collect();
        Ok(Record {
            id: format!("{id_prefix}-{i:06}"),
            family_tag: format!("composite:{}", sizes.join("+")),
            params: Vec::new(),
            n_electrons: composed.n_electrons,
            features: features.to_vec(),
            e_infinity: e_inf,
            e_nuclear: composed.e_nuclear,
            // summed in this order so the total is exactly the sum of the
            // stored fragment totals
            target_total: entries.iter().map(|e| e.target_total).sum(),
            target_electronic: entries.iter().map(|e| e.target_electronic).sum(),
            provenance: Provenance::Composite {
                sources: entries.iter().map(|e| e.id.clone()).collect(),
            },
        })
    });

    let mut records = Vec::with_capacity(count);
    for (i, result) in results.into_iter().enumerate() {
        records.push(result.map_err(|e| {
            Error::Data(format!("composite {i}: {e}"))
        })?);
    }
    Ok(records)
}

/// `compose` subcommand: load fragment datasets, draw composites, write
/// one dataset file.
pub fn cmd_compose(
    fragments: &[std::path::PathBuf],
    partitions_text: &str,
    count: usize,
    seed: u64,
    out: &Path,
    workers: usize,
) -> Result<()> {
    if fragments.is_empty() {
        return Err(Error::Config("at least one fragment dataset is required".into()));
    }
    let partitions = parse_partitions(partitions_text)?;
    let mut all = Vec::new();
    let mut key = format!("partitions={partitions_text} count={count}");
    for path in fragments {
        let ds = Dataset::read(path)?;
        key.push_str("\nfragments=");
        key.push_str(&ds.manifest.config_hash);
        all.extend(ds.records);
    }
    let pools = FragmentPools::from_records(all.iter())?;
    let records = compose_records(&pools, &partitions, count, seed, "composite", workers)?;
    let mut ds = Dataset::new(seed, config_hash(&key));
    for record in records {
        ds.push(record);
    }
    ds.write(out)
}
