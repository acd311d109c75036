use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Batch counts after which the latent model is refitted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct UpdateSchedule {
    batches: Vec<u64>,
}

impl Default for UpdateSchedule {
    /// Exponentially spaced refits over a 5000-batch run.
    fn default() -> Self {
        Self {
            batches: vec![0, 50, 150, 350, 750, 1550, 3150],
        }
    }
}

impl UpdateSchedule {
    pub fn new(batches: Vec<u64>) -> Result<Self> {
        if batches.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(format!(
                "update schedule must be strictly increasing: {batches:?}"
            )));
        }
        Ok(Self { batches })
    }

    pub fn is_due(&self, batch_index: u64) -> bool {
        self.batches.binary_search(&batch_index).is_ok()
    }

    pub fn batches(&self) -> &[u64] {
        &self.batches
    }
}

impl TryFrom<Vec<u64>> for UpdateSchedule {
    type Error = Error;

    fn try_from(v: Vec<u64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<UpdateSchedule> for Vec<u64> {
    fn from(s: UpdateSchedule) -> Self {
        s.batches
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schedule() {
        let s = UpdateSchedule::default();
        assert!(s.is_due(0));
        assert!(s.is_due(50));
        assert!(!s.is_due(51));
        assert!(s.is_due(3150));
        assert!(!s.is_due(4999));
    }

    #[test]
    fn rejects_unsorted() {
        assert!(UpdateSchedule::new(vec![0, 50, 50]).is_err());
        assert!(UpdateSchedule::new(vec![10, 5]).is_err());
        assert!(serde_json::from_str::<UpdateSchedule>("[3, 1]").is_err());
        assert_eq!(
            serde_json::from_str::<UpdateSchedule>("[1, 3]")
                .unwrap()
                .batches(),
            &[1, 3]
        );
    }
}
