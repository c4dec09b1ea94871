use serde::{Deserialize, Serialize};

use super::ClassifyError;

/// Always predicts the more frequent training class (0 on ties).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MajorityModel {
    pub predicted_class: u8,
    pub class_counts: [usize; 2],
}

impl MajorityModel {
    pub fn predict(&self) -> u8 {
        self.predicted_class
    }

    /// Share of the dominant class in the training labels.
    pub fn training_accuracy(&self) -> f64 {
        let total = self.class_counts[0] + self.class_counts[1];
        self.class_counts[self.predicted_class as usize] as f64 / total as f64
    }
}

pub fn train_majority(labels: &[u8]) -> Result<MajorityModel, ClassifyError> {
    if labels.is_empty() {
        return Err(ClassifyError::EmptyDataset);
    }
    let mut class_counts = [0usize; 2];
    for &l in labels {
        match l {
            0 | 1 => class_counts[l as usize] += 1,
            other => return Err(ClassifyError::BadLabel(other)),
        }
    }
    let predicted_class = (class_counts[1] > class_counts[0]) as u8;
    Ok(MajorityModel {
        predicted_class,
        class_counts,
    })
}
