use std::sync::mpsc;

use rayon::prelude::*;

use super::{sample_perturbation, transform_error, BenchmarkPair, BenchmarkRecord, PerturbationSpec};
use crate::error::{Error, Result};
use crate::icp::{estimate_attributes, register, IcpConfig, StopReason};
use crate::robust::FilterSpec;
use crate::seed::{self, stream};

/// One registration job of the factorial design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkCell {
    pub pair: usize,
    pub filter: usize,
    pub perturb_idx: usize,
}

/// Seed of perturbation `k` on a pair. It does not depend on the filter,
/// so every filter sees the same initial conditions.
pub fn perturbation_seed(master: u64, pair_id: &str, k: usize) -> u64 {
    seed::derive(&[master, seed::hash_str(pair_id), k as u64])
}

/// The `k`-th initial transform for a pair: the ground truth composed with
/// a sampled perturbation.
pub fn initial_transform(
    pair: &BenchmarkPair,
    perturbation: &PerturbationSpec,
    k: usize,
) -> crate::minimizer::RigidTransform {
    let s = perturbation_seed(perturbation.seed, &pair.id, k);
    let mut rng = seed::rng(&[s, stream::PERTURBATION]);
    pair.ground_truth
        .compose(&sample_perturbation(perturbation, &mut rng))
}

fn run_cell(
    pair: &BenchmarkPair,
    filter: &FilterSpec,
    k: usize,
    perturbation: &PerturbationSpec,
    config: &IcpConfig,
) -> BenchmarkRecord {
    let t0 = initial_transform(pair, perturbation, k);
    let config = IcpConfig {
        filter: *filter,
        seed: perturbation_seed(perturbation.seed, &pair.id, k),
        ..config.clone()
    };
    let (estimate, iters, stop_reason) =
        match register(&pair.reading, &pair.reference, &t0, &config) {
            Ok(r) => (r.final_transform, r.iterations, r.stop_reason),
            Err(e) => {
                log::warn!("pair {} filter {filter} perturbation {k}: {e}", pair.id);
                (t0, 0, StopReason::Failed)
            }
        };
    let (trans_err_m, rot_err_rad) = transform_error(&pair.ground_truth, &estimate);
    BenchmarkRecord {
        pair_id: pair.id.clone(),
        filter: filter.kind.name().to_string(),
        param: filter.param(),
        scale_mode: filter.scale_mode(),
        perturb_idx: k,
        trans_err_m,
        rot_err_rad,
        iters,
        stop_reason,
    }
}

/// Run every (pair, filter, perturbation) cell and hand each record to
/// `sink` as soon as it is produced, on the calling thread.
///
/// `jobs` bounds the worker threads (0 uses all cores). Record order is
/// unspecified; records carry their full keys. Failed registrations are
/// recorded with [`StopReason::Failed`] and never abort the run. Returns
/// the number of records produced.
pub fn run_benchmark_streaming<F>(
    pairs: &[BenchmarkPair],
    filters: &[FilterSpec],
    perturbation: &PerturbationSpec,
    config: &IcpConfig,
    jobs: usize,
    mut sink: F,
) -> Result<usize>
where
    F: FnMut(BenchmarkRecord) -> Result<()>,
{
    if pairs.is_empty() || filters.is_empty() {
        return Err(Error::InvalidArgument(
            "benchmark needs at least one pair and one filter".into(),
        ));
    }
    if perturbation.count == 0 {
        return Err(Error::InvalidArgument("perturbation count must be at least 1".into()));
    }
    for f in filters {
        f.validate()?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;

    // Normal and density estimation does not depend on the seed, so it is
    // done once per pair.
    let prepared: Vec<BenchmarkPair> = pool.install(|| {
        pairs
            .par_iter()
            .map(|p| {
                Ok(BenchmarkPair {
                    id: p.id.clone(),
                    reading: estimate_attributes(&p.reading, false, config)?,
                    reference: estimate_attributes(&p.reference, true, config)?,
                    ground_truth: p.ground_truth,
                })
            })
            .collect::<Result<_>>()
    })?;

    let cells: Vec<BenchmarkCell> = (0..prepared.len())
        .flat_map(|pair| {
            (0..filters.len()).flat_map(move |filter| {
                (0..perturbation.count).map(move |perturb_idx| BenchmarkCell {
                    pair,
                    filter,
                    perturb_idx,
                })
            })
        })
        .collect();

    let (tx, rx) = mpsc::channel();
    let mut produced = 0;
    let mut first_err = None;
    std::thread::scope(|scope| {
        let prepared = &prepared;
        let cells = &cells;
        let pool = &pool;
        scope.spawn(move || {
            pool.install(|| {
                cells.par_iter().for_each_with(tx, |tx, c| {
                    let rec = run_cell(
                        &prepared[c.pair],
                        &filters[c.filter],
                        c.perturb_idx,
                        perturbation,
                        config,
                    );
                    let _ = tx.send(rec);
                });
            });
        });
        for rec in rx {
            produced += 1;
            if first_err.is_none() {
                if let Err(e) = sink(rec) {
                    first_err = Some(e);
                }
            }
        }
    });
    match first_err {
        Some(e) => Err(e),
        None => Ok(produced),
    }
}

/// [`run_benchmark_streaming`] collecting records sorted by key.
pub fn run_benchmark(
    pairs: &[BenchmarkPair],
    filters: &[FilterSpec],
    perturbation: &PerturbationSpec,
    config: &IcpConfig,
    jobs: usize,
) -> Result<Vec<BenchmarkRecord>> {
    let mut records = Vec::new();
    run_benchmark_streaming(pairs, filters, perturbation, config, jobs, |r| {
        records.push(r);
        Ok(())
    })?;
    sort_records(&mut records);
    Ok(records)
}

/// Order records by pair, filter, scale mode, parameter and perturbation.
pub fn sort_records(records: &mut [BenchmarkRecord]) {
    records.sort_by(|a, b| {
        (&a.pair_id, &a.filter, &a.scale_mode)
            .cmp(&(&b.pair_id, &b.filter, &b.scale_mode))
            .then(
                a.param
                    .unwrap_or(f64::NEG_INFINITY)
                    .total_cmp(&b.param.unwrap_or(f64::NEG_INFINITY)),
            )
            .then(a.perturb_idx.cmp(&b.perturb_idx))
    });
}

/// Expand each base spec into its sweep when `sweep` is set. Kinds without
/// a parameter stay as they are.
pub fn expand_filters(bases: &[FilterSpec], sweep: bool) -> Result<Vec<FilterSpec>> {
    let mut out = Vec::new();
    for base in bases {
        if sweep && base.param().is_some() {
            out.extend(super::build_sweep(base.kind)?.specs(base)?);
        } else {
            out.push(*base);
        }
    }
    Ok(out)
}
