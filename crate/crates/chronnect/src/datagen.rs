//! Synthetic two-class BOLD-like corpora with planted latent status dynamics.
//!
//! Each scan is driven by a hidden Markov chain over `k` "statuses", where a
//! status is a correlation template over the ROIs. Per volume, the signal is
//! drawn from the current status's template (through its Cholesky factor)
//! plus isotropic observation noise. Two preset class pairs are provided:
//!
//! * order-coded: both classes visit the statuses in a cycle with identical
//!   self-transition probability, one class forwards and one backwards, so
//!   the classes share every occupancy statistic and differ only in the
//!   *order* of status visits;
//! * occupancy-coded: both classes share the transition structure but one
//!   dwells longer in status 0, so occupancy fractions alone separate them.
//!
//! Generation is deterministic per `(spec, seed)`: the template library uses
//! one fixed rng stream and every scan uses its own stream derived from the
//! subject and scan index, so subjects could be generated in parallel without
//! changing a single bit of the output.

use crate::chronnectome::{read_scan_csv, write_atomic, write_scan_csv, BoldTimeSeries};
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Rng stream reserved for the status template library.
const STREAM_LIBRARY: u64 = 0;
/// Scans use streams `1 + subject_index * scans_per_subject + scan_index`.
const STREAM_SCAN_BASE: u64 = 1;

/// Repetition time stamped on generated scans, in seconds.
pub const SYNTH_TR_SECONDS: f64 = 2.0;

/// Floor on the pairwise Frobenius distance between accepted templates.
const MIN_TEMPLATE_DISTANCE: f64 = 0.5;
/// Scale factor for the size-aware separation floor: distances between
/// random block templates grow with sqrt(M(M-1)), so a fixed absolute
/// threshold stops binding as M grows. 0.775 rejects roughly the weakest
/// half of candidate pairs at every size.
const TEMPLATE_DISTANCE_SCALE: f64 = 0.775;
/// Candidate templates tried per library slot before giving up.
const MAX_TEMPLATE_TRIES: usize = 1000;

/// Full description of a two-class synthetic corpus.
///
/// `transitions` holds one row-stochastic k x k matrix per class with
/// self-transitions already baked in; `dwell_volumes` records the nominal
/// mean dwell the preset builders used to construct those matrices and is
/// informational afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub num_rois: usize,
    pub num_volumes: usize,
    pub num_statuses: usize,
    pub transitions: Vec<Matrix>,
    pub dwell_volumes: f64,
    pub noise_sigma: f64,
    pub subjects_per_class: usize,
    pub scans_per_subject: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_rois < 4 {
            return Err(Error::Config(format!(
                "need at least 4 ROIs, got {}",
                self.num_rois
            )));
        }
        if self.num_volumes < 2 {
            return Err(Error::Config(format!(
                "need at least 2 volumes, got {}",
                self.num_volumes
            )));
        }
        if self.num_statuses < 2 {
            return Err(Error::Config(format!(
                "need at least 2 statuses, got {}",
                self.num_statuses
            )));
        }
        if self.transitions.len() != 2 {
            return Err(Error::Config(format!(
                "need one transition matrix per class (2), got {}",
                self.transitions.len()
            )));
        }
        for (class, tm) in self.transitions.iter().enumerate() {
            if tm.rows() != self.num_statuses || tm.cols() != self.num_statuses {
                return Err(Error::shape(
                    "SyntheticSpec::validate",
                    format!(
                        "class {class} transitions are {}x{}, want {k}x{k}",
                        tm.rows(),
                        tm.cols(),
                        k = self.num_statuses
                    ),
                ));
            }
            for i in 0..tm.rows() {
                let row = tm.row(i);
                if row.iter().any(|&p| p < 0.0) {
                    return Err(Error::Config(format!(
                        "class {class} transition row {i} has a negative entry"
                    )));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > 1e-12 {
                    return Err(Error::Config(format!(
                        "class {class} transition row {i} sums to {sum}, want 1"
                    )));
                }
            }
        }
        if !(self.dwell_volumes >= 1.0) {
            return Err(Error::Config(format!(
                "dwell_volumes must be >= 1, got {}",
                self.dwell_volumes
            )));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::Config(format!(
                "noise_sigma must be >= 0, got {}",
                self.noise_sigma
            )));
        }
        if self.subjects_per_class == 0 || self.scans_per_subject == 0 {
            return Err(Error::Config(
                "subjects_per_class and scans_per_subject must be positive".to_string(),
            ));
        }
        Ok(())
    }
}

/// One generated scan together with the latent status path that produced it.
#[derive(Debug, Clone)]
pub struct SyntheticScan {
    pub series: BoldTimeSeries,
    pub status_path: Vec<usize>,
}

/// One generated subject: class label and scans.
#[derive(Debug, Clone)]
pub struct SyntheticSubject {
    pub id: String,
    pub label: usize,
    pub scans: Vec<SyntheticScan>,
}

/// Subject re-read from disk; the latent path is not persisted.
#[derive(Debug, Clone)]
pub struct LoadedSubject {
    pub id: String,
    pub label: usize,
    pub scans: Vec<BoldTimeSeries>,
}

/// Manifest entry for one subject: scan paths are relative to the corpus dir.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSubject {
    pub id: String,
    pub label: usize,
    pub scans: Vec<String>,
}

/// Corpus index written next to the scan files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub subjects: Vec<ManifestSubject>,
    pub spec_echo: SyntheticSpec,
}

/// One candidate correlation template from a random block-loading model.
///
/// Each ROI loads strongly (magnitude 0.8..0.98, random sign) on one of a
/// few latent factors and near zero on the rest; the implied covariance plus
/// a uniqueness term is rescaled to unit diagonal. The uniqueness keeps the
/// result positive definite even though the factor count is below the ROI
/// count.
fn sample_template(num_rois: usize, rng: &mut Rng) -> Matrix {
    let factors = if num_rois >= 8 { 2 + rng.index(2) } else { 2 };
    let mut loadings = Matrix::zeros(num_rois, factors);
    for i in 0..num_rois {
        let own = rng.index(factors);
        let sign = if rng.bernoulli(0.5) { 1.0 } else { -1.0 };
        for f in 0..factors {
            let v = if f == own {
                sign * rng.uniform(0.8, 0.98)
            } else {
                rng.uniform(-0.05, 0.05)
            };
            loadings.set(i, f, v);
        }
    }
    let uniqueness = 0.15;
    let cov = loadings
        .matmul(&loadings.transpose())
        .expect("loadings product is square by construction");
    let mut corr = Matrix::identity(num_rois);
    for i in 0..num_rois {
        for j in 0..num_rois {
            if i != j {
                let denom =
                    ((cov.get(i, i) + uniqueness) * (cov.get(j, j) + uniqueness)).sqrt();
                corr.set(i, j, cov.get(i, j) / denom);
            }
        }
    }
    corr
}

fn build_library(
    num_rois: usize,
    num_statuses: usize,
    min_distance: f64,
    rng: &mut Rng,
) -> Result<Vec<Matrix>> {
    if num_rois < 4 {
        return Err(Error::Config(format!(
            "need at least 4 ROIs, got {num_rois}"
        )));
    }
    if num_statuses < 2 {
        return Err(Error::Config(format!(
            "need at least 2 statuses, got {num_statuses}"
        )));
    }
    let mut library: Vec<Matrix> = Vec::with_capacity(num_statuses);
    for slot in 0..num_statuses {
        let mut accepted = None;
        for _ in 0..MAX_TEMPLATE_TRIES {
            let cand = sample_template(num_rois, rng);
            if cand.cholesky().is_err() {
                continue;
            }
            if library
                .iter()
                .all(|t| t.frobenius_distance(&cand) >= min_distance)
            {
                accepted = Some(cand);
                break;
            }
        }
        match accepted {
            Some(t) => library.push(t),
            None => {
                return Err(Error::Degeneracy(format!(
                    "no valid template at distance >= {min_distance} from the \
                     library after {MAX_TEMPLATE_TRIES} tries (slot {slot})"
                )))
            }
        }
    }
    Ok(library)
}

/// Draws `num_statuses` correlation templates, rejecting candidates closer
/// to any already accepted one than a size-aware separation floor (never
/// below 0.5 in Frobenius distance).
pub fn make_status_library(
    num_rois: usize,
    num_statuses: usize,
    rng: &mut Rng,
) -> Result<Vec<Matrix>> {
    let m = num_rois as f64;
    let floor = MIN_TEMPLATE_DISTANCE.max(TEMPLATE_DISTANCE_SCALE * (m * (m - 1.0)).sqrt());
    build_library(num_rois, num_statuses, floor, rng)
}

/// Samples a status path of `num_volumes` steps; the initial status is
/// uniform, subsequent ones follow the transition rows.
pub fn sample_status_path(transition: &Matrix, num_volumes: usize, rng: &mut Rng) -> Vec<usize> {
    let k = transition.rows();
    let mut path = Vec::with_capacity(num_volumes);
    let mut status = rng.index(k);
    path.push(status);
    for _ in 1..num_volumes {
        let u = rng.uniform(0.0, 1.0);
        let mut acc = 0.0;
        let mut next = k - 1;
        for j in 0..k {
            acc += transition.get(status, j);
            if u < acc {
                next = j;
                break;
            }
        }
        status = next;
        path.push(status);
    }
    path
}

/// Generates one scan for `class`, returning the series and its latent path.
///
/// Volumes are independent given the status: each is the status template's
/// Cholesky factor applied to fresh standard normals, plus `noise_sigma`
/// times another normal per ROI. The noise draw happens even at sigma 0 so
/// the rng consumption pattern does not depend on the noise level.
pub fn synth_scan(
    spec: &SyntheticSpec,
    class: usize,
    library: &[Matrix],
    subject_id: &str,
    scan_id: &str,
    rng: &mut Rng,
) -> Result<(BoldTimeSeries, Vec<usize>)> {
    if class >= spec.transitions.len() {
        return Err(Error::Config(format!(
            "class {class} out of range for {} classes",
            spec.transitions.len()
        )));
    }
    if library.len() != spec.num_statuses {
        return Err(Error::shape(
            "synth_scan",
            format!(
                "library has {} templates, spec wants {}",
                library.len(),
                spec.num_statuses
            ),
        ));
    }
    let m = spec.num_rois;
    let factors = library
        .iter()
        .map(|t| {
            if t.rows() != m || t.cols() != m {
                return Err(Error::shape(
                    "synth_scan",
                    format!("template is {}x{}, want {m}x{m}", t.rows(), t.cols()),
                ));
            }
            t.cholesky()
        })
        .collect::<Result<Vec<Matrix>>>()?;

    let path = sample_status_path(&spec.transitions[class], spec.num_volumes, rng);
    let mut signals = Matrix::zeros(m, spec.num_volumes);
    let mut latent = vec![0.0; m];
    let mut sample = vec![0.0; m];
    for (t, &status) in path.iter().enumerate() {
        for z in latent.iter_mut() {
            *z = rng.standard_normal();
        }
        factors[status].matvec(&latent, &mut sample);
        for (i, &x) in sample.iter().enumerate() {
            signals.set(i, t, x + spec.noise_sigma * rng.standard_normal());
        }
    }
    let series = BoldTimeSeries::new(subject_id, scan_id, SYNTH_TR_SECONDS, signals)?;
    Ok((series, path))
}

/// Shared shape of the preset corpora: desk scale, one scan per subject.
fn preset_base(num_rois: usize, transitions: Vec<Matrix>, dwell_volumes: f64, seed: u64) -> SyntheticSpec {
    let num_statuses = transitions[0].rows();
    SyntheticSpec {
        num_rois,
        num_volumes: 136,
        num_statuses,
        transitions,
        dwell_volumes,
        noise_sigma: 0.1,
        subjects_per_class: 100,
        scans_per_subject: 1,
        seed,
    }
}

/// Mean dwell (volumes) of the order-coded preset: long enough that sliding
/// windows become nearly pure, so each status is identifiable per window and
/// only the visit order separates the classes.
pub const ORDER_DWELL_VOLUMES: f64 = 36.0;
/// Base mean dwell of the occupancy-coded preset: short enough that each
/// scan sees many visits, keeping per-subject occupancy estimates stable.
pub const OCCUPANCY_DWELL_VOLUMES: f64 = 8.0;
/// Dwell multiplier the occupancy-coded preset applies to status 0.
pub const PRESET_DWELL_MULTIPLIER: f64 = 5.0;

/// Cyclic transition matrix: stay with `p_stay`, otherwise step `i -> i+1`
/// (mod k).
fn cycle_chain(num_statuses: usize, p_stay: f64) -> Matrix {
    let mut tm = Matrix::zeros(num_statuses, num_statuses);
    for i in 0..num_statuses {
        tm.set(i, i, p_stay);
        tm.set(i, (i + 1) % num_statuses, 1.0 - p_stay);
    }
    tm
}

/// Chain that leaves status `i` with probability `1/dwell[i]`, splitting the
/// leaving mass evenly over the other statuses.
fn dwell_chain(dwell: &[f64]) -> Matrix {
    let k = dwell.len();
    let mut tm = Matrix::zeros(k, k);
    for i in 0..k {
        let leave = 1.0 / dwell[i];
        tm.set(i, i, 1.0 - leave);
        for j in 0..k {
            if j != i {
                tm.set(i, j, leave / (k - 1) as f64);
            }
        }
    }
    tm
}

/// Classes that differ only in the order of status visits.
///
/// Class 0 cycles forward (0 -> 1 -> ... -> 0) and class 1 runs the same
/// cycle backwards; the matrices are exact transposes. Both are doubly
/// stochastic, so they share the uniform stationary distribution and every
/// occupancy statistic.
pub fn order_coded_spec(num_rois: usize, num_statuses: usize, seed: u64) -> Result<SyntheticSpec> {
    if num_statuses < 3 {
        return Err(Error::Config(format!(
            "order coding needs at least 3 statuses, got {num_statuses}"
        )));
    }
    let p_stay = 1.0 - 1.0 / ORDER_DWELL_VOLUMES;
    let forward = cycle_chain(num_statuses, p_stay);
    let backward = forward.transpose();
    Ok(preset_base(
        num_rois,
        vec![forward, backward],
        ORDER_DWELL_VOLUMES,
        seed,
    ))
}

/// Classes that differ in status occupancy: class 1 dwells
/// `PRESET_DWELL_MULTIPLIER` times longer in status 0.
pub fn occupancy_coded_spec(
    num_rois: usize,
    num_statuses: usize,
    seed: u64,
) -> Result<SyntheticSpec> {
    if num_statuses < 2 {
        return Err(Error::Config(format!(
            "need at least 2 statuses, got {num_statuses}"
        )));
    }
    let even = vec![OCCUPANCY_DWELL_VOLUMES; num_statuses];
    let mut skewed = even.clone();
    skewed[0] *= PRESET_DWELL_MULTIPLIER;
    Ok(preset_base(
        num_rois,
        vec![dwell_chain(&even), dwell_chain(&skewed)],
        OCCUPANCY_DWELL_VOLUMES,
        seed,
    ))
}

/// Stationary distribution of a row-stochastic matrix by power iteration.
pub fn stationary_distribution(transition: &Matrix) -> Result<Vec<f64>> {
    if transition.rows() != transition.cols() || transition.rows() == 0 {
        return Err(Error::shape(
            "stationary_distribution",
            format!("{}x{} is not a transition matrix", transition.rows(), transition.cols()),
        ));
    }
    let k = transition.rows();
    let mut pi = vec![1.0 / k as f64; k];
    let mut next = vec![0.0; k];
    for _ in 0..100_000 {
        for v in next.iter_mut() {
            *v = 0.0;
        }
        for i in 0..k {
            for j in 0..k {
                next[j] += pi[i] * transition.get(i, j);
            }
        }
        let total: f64 = next.iter().sum();
        for v in next.iter_mut() {
            *v /= total;
        }
        let delta: f64 = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut pi, &mut next);
        if delta < 1e-15 {
            return Ok(pi);
        }
    }
    Err(Error::Degeneracy(
        "power iteration did not converge; chain may be periodic".to_string(),
    ))
}

/// Generates the full two-class corpus described by `spec`.
///
/// Subject ids are `c{class}_s{index:03}`; scan `j` of global subject `u`
/// draws from rng stream `1 + u * scans_per_subject + j`, so any subset of
/// subjects can be generated independently with identical results.
pub fn generate_corpus(spec: &SyntheticSpec) -> Result<Vec<SyntheticSubject>> {
    spec.validate()?;
    let mut lib_rng = Rng::new(spec.seed, STREAM_LIBRARY);
    let library = make_status_library(spec.num_rois, spec.num_statuses, &mut lib_rng)?;
    let mut subjects = Vec::with_capacity(2 * spec.subjects_per_class);
    for class in 0..2 {
        for i in 0..spec.subjects_per_class {
            let u = class * spec.subjects_per_class + i;
            let id = format!("c{class}_s{i:03}");
            let mut scans = Vec::with_capacity(spec.scans_per_subject);
            for j in 0..spec.scans_per_subject {
                let stream = STREAM_SCAN_BASE + (u * spec.scans_per_subject + j) as u64;
                let mut rng = Rng::new(spec.seed, stream);
                let scan_id = format!("scan{j}");
                let (series, status_path) =
                    synth_scan(spec, class, &library, &id, &scan_id, &mut rng)?;
                scans.push(SyntheticScan { series, status_path });
            }
            subjects.push(SyntheticSubject { id, label: class, scans });
        }
    }
    Ok(subjects)
}

/// Writes scan CSVs under `dir/{subject}/scan{j}.csv` plus `manifest.json`,
/// returning the manifest.
pub fn write_corpus(
    dir: &Path,
    spec: &SyntheticSpec,
    subjects: &[SyntheticSubject],
) -> Result<CorpusManifest> {
    let mut manifest = CorpusManifest {
        subjects: Vec::with_capacity(subjects.len()),
        spec_echo: spec.clone(),
    };
    for subject in subjects {
        let sub_dir = dir.join(&subject.id);
        std::fs::create_dir_all(&sub_dir)
            .map_err(|e| Error::io(sub_dir.display().to_string(), e))?;
        let mut scan_paths = Vec::with_capacity(subject.scans.len());
        for scan in &subject.scans {
            let rel = format!("{}/{}.csv", subject.id, scan.series.scan_id);
            write_scan_csv(&dir.join(&rel), &scan.series)?;
            scan_paths.push(rel);
        }
        manifest.subjects.push(ManifestSubject {
            id: subject.id.clone(),
            label: subject.label,
            scans: scan_paths,
        });
    }
    let manifest_path = dir.join("manifest.json");
    let json = serde_json::to_vec_pretty(&manifest)?;
    write_atomic(&manifest_path, &json)
        .map_err(|e| Error::io(manifest_path.display().to_string(), e))?;
    Ok(manifest)
}

/// Reads a corpus written by [`write_corpus`] back into memory.
pub fn read_corpus(dir: &Path) -> Result<(CorpusManifest, Vec<LoadedSubject>)> {
    let manifest_path = dir.join("manifest.json");
    let bytes = std::fs::read(&manifest_path)
        .map_err(|e| Error::io(manifest_path.display().to_string(), e))?;
    let manifest: CorpusManifest = serde_json::from_slice(&bytes)?;
    let mut subjects = Vec::with_capacity(manifest.subjects.len());
    for entry in &manifest.subjects {
        let mut scans = Vec::with_capacity(entry.scans.len());
        for rel in &entry.scans {
            let scan_id = Path::new(rel)
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("scan")
                .to_string();
            scans.push(read_scan_csv(
                &dir.join(rel),
                &entry.id,
                &scan_id,
                SYNTH_TR_SECONDS,
            )?);
        }
        subjects.push(LoadedSubject {
            id: entry.id.clone(),
            label: entry.label,
            scans,
        });
    }
    Ok((manifest, subjects))
}
