//! Crop augmentation and subject-grouped fold construction. Splits are by
//! subject, never by scan or crop, so no person contributes to two phases.

use crate::chronnectome::DFCSequence;
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// One fixed-length crop of a dFC sequence, tagged with its origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub subject_id: String,
    pub scan_id: String,
    /// Window index the crop starts at.
    pub crop_index: usize,
    /// crop_len x D.
    pub data: Matrix,
    pub label: usize,
}

/// Cuts every length-`crop_len` contiguous run of windows (at the given
/// stride) into its own sample, all carrying the sequence's label.
pub fn augment(
    dfc: &DFCSequence,
    label: usize,
    crop_len: usize,
    stride: usize,
) -> Result<Vec<Sample>> {
    if label > 1 {
        return Err(Error::Config(format!("label {label} outside {{0, 1}}")));
    }
    if crop_len == 0 || stride == 0 {
        return Err(Error::Config(
            "crop_len and stride must be positive".to_string(),
        ));
    }
    if dfc.num_windows < crop_len {
        return Err(Error::InsufficientData(format!(
            "{} windows cannot fill a crop of {crop_len}",
            dfc.num_windows
        )));
    }
    let mut samples = Vec::new();
    for start in (0..=dfc.num_windows - crop_len).step_by(stride) {
        let mut data = Matrix::zeros(crop_len, dfc.link_dim);
        for r in 0..crop_len {
            data.row_mut(r).copy_from_slice(dfc.rows.row(start + r));
        }
        samples.push(Sample {
            subject_id: dfc.subject_id.clone(),
            scan_id: dfc.scan_id.clone(),
            crop_index: start,
            data,
            label,
        });
    }
    Ok(samples)
}

/// One cross-validation fold: disjoint subject sets for the three phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub train_subjects: BTreeSet<String>,
    pub val_subjects: BTreeSet<String>,
    pub test_subjects: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub folds: Vec<Fold>,
}

impl FoldPlan {
    /// Leakage audit: within each fold the three phases must be pairwise
    /// disjoint and cover every subject, and across folds the test sets must
    /// partition the subject list.
    pub fn audit(&self, subjects: &[(String, usize)]) -> Result<()> {
        let all: BTreeSet<&str> = subjects.iter().map(|(id, _)| id.as_str()).collect();
        if all.len() != subjects.len() {
            return Err(Error::Config("duplicate subject ids".to_string()));
        }
        let mut tested: BTreeSet<&str> = BTreeSet::new();
        for (i, fold) in self.folds.iter().enumerate() {
            let mut seen: BTreeSet<&str> = BTreeSet::new();
            let phases = [&fold.train_subjects, &fold.val_subjects, &fold.test_subjects];
            for phase in phases {
                for id in phase {
                    if !all.contains(id.as_str()) {
                        return Err(Error::Config(format!(
                            "fold {i} references unknown subject {id}"
                        )));
                    }
                    if !seen.insert(id) {
                        return Err(Error::Config(format!(
                            "subject {id} appears in two phases of fold {i}"
                        )));
                    }
                }
            }
            if seen.len() != all.len() {
                return Err(Error::Config(format!(
                    "fold {i} covers {} of {} subjects",
                    seen.len(),
                    all.len()
                )));
            }
            for id in &fold.test_subjects {
                if !tested.insert(id) {
                    return Err(Error::Config(format!(
                        "subject {id} tested in two folds"
                    )));
                }
            }
        }
        if tested.len() != all.len() {
            return Err(Error::Config(format!(
                "test folds cover {} of {} subjects",
                tested.len(),
                all.len()
            )));
        }
        Ok(())
    }
}

/// Stratified k-fold subject split with a per-fold validation carve-out.
///
/// Each class is shuffled once (stream 0) and dealt round-robin into k test
/// folds. Within each fold, the non-test subjects of each class are shuffled
/// on a fold-specific stream and ceil(val_fraction * n) of them become the
/// validation set, so validation is never empty when a class is present.
pub fn make_folds(
    subjects: &[(String, usize)],
    k: usize,
    val_fraction: f64,
    seed: u64,
) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Config(format!("need k >= 2 folds, got {k}")));
    }
    if !(0.0..1.0).contains(&val_fraction) || val_fraction <= 0.0 {
        return Err(Error::Config(format!(
            "val_fraction {val_fraction} outside (0, 1)"
        )));
    }
    let ids: BTreeSet<&str> = subjects.iter().map(|(id, _)| id.as_str()).collect();
    if ids.len() != subjects.len() {
        return Err(Error::Config("duplicate subject ids".to_string()));
    }
    let mut by_class: [Vec<&str>; 2] = [Vec::new(), Vec::new()];
    for (id, label) in subjects {
        if *label > 1 {
            return Err(Error::Config(format!("label {label} outside {{0, 1}}")));
        }
        by_class[*label].push(id);
    }
    for (label, members) in by_class.iter().enumerate() {
        if members.len() < k {
            return Err(Error::Config(format!(
                "class {label} has {} subjects, fewer than {k} folds",
                members.len()
            )));
        }
    }

    let mut rng = Rng::new(seed, 0);
    let mut test_sets: Vec<BTreeSet<String>> = vec![BTreeSet::new(); k];
    for members in by_class.iter_mut() {
        rng.shuffle(members);
        for (i, id) in members.iter().enumerate() {
            test_sets[i % k].insert((*id).to_string());
        }
    }

    let mut folds = Vec::with_capacity(k);
    for (f, test_subjects) in test_sets.into_iter().enumerate() {
        let mut fold_rng = Rng::new(seed, f as u64 + 1);
        let mut val_subjects = BTreeSet::new();
        let mut train_subjects = BTreeSet::new();
        for members in &by_class {
            let mut rest: Vec<&str> = members
                .iter()
                .copied()
                .filter(|id| !test_subjects.contains(*id))
                .collect();
            fold_rng.shuffle(&mut rest);
            let n_val = ((rest.len() as f64) * val_fraction).ceil() as usize;
            for (i, id) in rest.iter().enumerate() {
                if i < n_val {
                    val_subjects.insert((*id).to_string());
                } else {
                    train_subjects.insert((*id).to_string());
                }
            }
        }
        folds.push(Fold {
            train_subjects,
            val_subjects,
            test_subjects,
        });
    }
    let plan = FoldPlan { folds };
    plan.audit(subjects)?;
    Ok(plan)
}
