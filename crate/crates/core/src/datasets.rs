//! Built-in trial worlds.
//!
//! `DS1`–`DS4` and `DS-CBASP` exercise the variance objective; `DS21`–`DS24`
//! and `DS2-CBASP` exercise the selection-error objective. Variance columns
//! are response variances `σ²`. Two entries are completed by convention:
//! `DS3` doubles its variance from 5 up to 640 across its eight
//! subpopulations, and `DS23` uses `(.05, .05, .3, .3, .3)` for its
//! subpopulation mix (two rare subpopulations).

use crate::error::{Error, Result};
use crate::trial::DatasetSpec;

pub const BUILTIN_NAMES: [&str; 10] = [
    "DS1",
    "DS2",
    "DS3",
    "DS4",
    "DS-CBASP",
    "DS21",
    "DS22",
    "DS23",
    "DS24",
    "DS2-CBASP",
];

const CBASP_MEANS: [[f64; 2]; 3] = [[10.9, 16.2], [9.3, 19.4], [12.9, 15.8]];
const CBASP_VARIANCES: [[f64; 2]; 3] = [[99.3, 79.7], [110.7, 55.9], [103.5, 78.6]];

fn rows<const K: usize>(r: &[[f64; K]]) -> Vec<Vec<f64>> {
    r.iter().map(|row| row.to_vec()).collect()
}

fn ds1_means() -> Vec<Vec<f64>> {
    rows(&[[1.0, 4.0], [2.0, 2.0], [4.0, 1.0], [2.0, 2.0]])
}

/// Rows of `[20, 10, 10]`, with the first `hard` rows set to `first`.
fn three_arm_means(c: usize, first: [f64; 3], hard: usize) -> Vec<Vec<f64>> {
    (0..c)
        .map(|i| {
            if i < hard {
                first.to_vec()
            } else {
                vec![20.0, 10.0, 10.0]
            }
        })
        .collect()
}

pub fn builtin_dataset(name: &str) -> Result<DatasetSpec> {
    match name {
        "DS1" => DatasetSpec::new(
            name,
            vec![0.25; 4],
            ds1_means(),
            rows(&[[1000.0, 1000.0], [100.0, 100.0], [100.0, 100.0], [100.0, 100.0]]),
        ),
        "DS2" => DatasetSpec::new(
            name,
            vec![0.1, 0.3, 0.3, 0.3],
            ds1_means(),
            rows(&[[1000.0, 1000.0], [100.0, 100.0], [100.0, 100.0], [100.0, 100.0]]),
        ),
        "DS3" => DatasetSpec::new(
            name,
            vec![0.125; 8],
            vec![vec![2.0, 2.0]; 8],
            (0..8).map(|i| vec![5.0 * f64::from(1u32 << i); 2]).collect(),
        ),
        "DS4" => DatasetSpec::new(
            name,
            vec![0.25; 4],
            ds1_means(),
            rows(&[[100.0, 1000.0], [100.0, 100.0], [100.0, 1000.0], [100.0, 100.0]]),
        ),
        "DS-CBASP" => DatasetSpec::new(name, vec![1.0 / 3.0; 3], rows(&CBASP_MEANS), rows(&CBASP_VARIANCES)),
        "DS21" => DatasetSpec::new(
            name,
            vec![0.25; 4],
            three_arm_means(4, [20.0, 10.0, 10.0], 0),
            vec![vec![50.0; 3]; 4],
        ),
        "DS22" => DatasetSpec::new(
            name,
            vec![0.25; 4],
            three_arm_means(4, [20.0, 19.0, 15.0], 1),
            vec![vec![50.0; 3]; 4],
        ),
        "DS23" => DatasetSpec::new(
            name,
            vec![0.05, 0.05, 0.3, 0.3, 0.3],
            vec![vec![20.0, 15.0, 15.0]; 5],
            vec![vec![50.0; 3]; 5],
        ),
        "DS24" => DatasetSpec::new(
            name,
            vec![0.125; 8],
            three_arm_means(8, [20.0, 15.0, 15.0], 1),
            vec![vec![50.0; 3]; 8],
        ),
        "DS2-CBASP" => DatasetSpec::new(name, vec![0.2, 0.4, 0.4], rows(&CBASP_MEANS), rows(&CBASP_VARIANCES)),
        _ => Err(Error::UnknownDataset {
            name: name.to_string(),
            valid: BUILTIN_NAMES.join(", "),
        }),
    }
}

pub fn builtin_datasets() -> Vec<DatasetSpec> {
    BUILTIN_NAMES
        .iter()
        .map(|n| builtin_dataset(n).expect("builtin datasets are valid"))
        .collect()
}

/// Largest budget used for a builtin dataset in the reference experiments.
pub fn reference_budget(name: &str) -> Option<usize> {
    match name {
        "DS1" | "DS2" | "DS3" | "DS4" | "DS-CBASP" | "DS21" | "DS22" | "DS23" => Some(200),
        "DS24" => Some(250),
        "DS2-CBASP" => Some(700),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_valid() {
        let all = builtin_datasets();
        assert_eq!(all.len(), 10);
        for (spec, name) in all.iter().zip(BUILTIN_NAMES) {
            assert_eq!(spec.name(), name);
            assert!((spec.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(spec.variances().as_slice().iter().all(|&v| v > 0.0));
            assert!(reference_budget(name).is_some());
        }
    }

    #[test]
    fn table_entries() {
        let ds1 = builtin_dataset("DS1").unwrap();
        assert_eq!((ds1.subpopulations(), ds1.treatments()), (4, 2));
        assert_eq!(ds1.means().row(2), &[4.0, 1.0]);
        assert_eq!(ds1.variances().row(0), &[1000.0, 1000.0]);

        let cbasp = builtin_dataset("DS2-CBASP").unwrap();
        assert_eq!(cbasp.probabilities(), &[0.2, 0.4, 0.4]);
        assert_eq!(cbasp.means().row(1), &[9.3, 19.4]);
        assert_eq!(cbasp.variances().row(2), &[103.5, 78.6]);

        let ds24 = builtin_dataset("DS24").unwrap();
        assert_eq!((ds24.subpopulations(), ds24.treatments()), (8, 3));
        assert_eq!(ds24.means().row(0), &[20.0, 15.0, 15.0]);
        assert!((1..8).all(|i| ds24.means().row(i) == [20.0, 10.0, 10.0]));
        assert!(ds24.variances().as_slice().iter().all(|&v| v == 50.0));

        let ds3 = builtin_dataset("DS3").unwrap();
        assert_eq!((ds3.subpopulations(), ds3.treatments()), (8, 2));
        assert_eq!(ds3.variances().row(1), &[10.0, 10.0]);
        assert_eq!(ds3.variances().row(7), &[640.0, 640.0]);

        let ds22 = builtin_dataset("DS22").unwrap();
        assert_eq!(ds22.means().row(0), &[20.0, 19.0, 15.0]);
        assert_eq!(builtin_dataset("DS23").unwrap().subpopulations(), 5);
    }

    #[test]
    fn unknown_name_lists_valid() {
        let err = builtin_dataset("DS9").unwrap_err().to_string();
        assert!(err.contains("DS9") && err.contains("DS2-CBASP"));
    }
}
