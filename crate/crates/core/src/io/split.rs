use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::manifest::{DatasetManifest, Label, ManifestError, Split};

pub const DEFAULT_TEST_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct SplitOutcome {
    pub manifest: DatasetManifest,
    /// Strata that ended up with no test rows or no train rows.
    pub warnings: Vec<String>,
}

/// Stratified train/test assignment per `(label, generator)` stratum.
///
/// Each stratum of size `n` contributes `round(test_fraction * n)` test rows,
/// picked by a seeded shuffle of the stratum's ids in sorted order.
pub fn split_train_test(
    manifest: &DatasetManifest,
    test_fraction: f64,
    seed: u64,
) -> Result<SplitOutcome, ManifestError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(ManifestError::BadTestFraction(test_fraction));
    }
    let mut strata: BTreeMap<(Label, &str), Vec<usize>> = BTreeMap::new();
    for (i, row) in manifest.rows.iter().enumerate() {
        strata.entry((row.label, row.generator.as_str())).or_default().push(i);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = manifest.clone();
    let mut warnings = Vec::new();
    for ((label, generator), mut members) in strata {
        members.sort_by(|a, b| manifest.rows[*a].id.cmp(&manifest.rows[*b].id));
        members.shuffle(&mut rng);
        let n_test = (test_fraction * members.len() as f64).round() as usize;
        if n_test == 0 {
            warnings.push(format!(
                "stratum ({label}, {generator}) with {} rows gets no test rows; all assigned to train",
                members.len()
            ));
        } else if n_test == members.len() {
            warnings.push(format!("stratum ({label}, {generator}) has no train rows"));
        }
        for (k, idx) in members.into_iter().enumerate() {
            out.rows[idx].split = if k < n_test { Split::Test } else { Split::Train };
        }
    }
    Ok(SplitOutcome { manifest: out, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::manifest::{ManifestRow, PromptModality};

    fn manifest(strata: &[(Label, &str, usize)]) -> DatasetManifest {
        let mut rows = vec![];
        for (label, generator, n) in strata {
            for i in 0..*n {
                rows.push(ManifestRow {
                    id: format!("{generator}_{i:05}"),
                    path: format!("{generator}/{i}"),
                    label: *label,
                    generator: generator.to_string(),
                    prompt_modality: if label.is_fake() { PromptModality::T2V } else { PromptModality::None },
                    split: Split::Train,
                });
            }
        }
        DatasetManifest { rows }
    }

    fn test_count(m: &DatasetManifest, generator: &str) -> usize {
        m.rows.iter().filter(|r| r.generator == generator && r.split == Split::Test).count()
    }

    #[test]
    fn ten_rows_give_two_test_rows() {
        let out = split_train_test(&manifest(&[(Label::Real, "real", 10)]), 0.2, 1).unwrap();
        assert_eq!(test_count(&out.manifest, "real"), 2);
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn deterministic_for_seed() {
        let m = manifest(&[(Label::Real, "real", 30), (Label::Fake, "a", 17)]);
        let a = split_train_test(&m, 0.2, 9).unwrap();
        let b = split_train_test(&m, 0.2, 9).unwrap();
        assert_eq!(a, b);
        let c = split_train_test(&m, 0.2, 10).unwrap();
        assert_ne!(a.manifest, c.manifest);
    }

    #[test]
    fn tiny_stratum_is_all_train_with_warning() {
        let out = split_train_test(&manifest(&[(Label::Fake, "solo", 2)]), 0.2, 0).unwrap();
        assert_eq!(test_count(&out.manifest, "solo"), 0);
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn rejects_bad_fraction() {
        let m = manifest(&[(Label::Real, "real", 3)]);
        assert!(split_train_test(&m, 0.0, 0).is_err());
        assert!(split_train_test(&m, 1.0, 0).is_err());
    }
}
