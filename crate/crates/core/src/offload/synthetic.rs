//! Synthetic encounter traces with planted social groups.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::EncounterRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticTrace {
    /// Sizes of the planted groups; members meet each other often and long.
    pub groups: Vec<usize>,
    /// UEs outside every group.
    pub white_nodes: usize,
    pub encounters_per_pair: usize,
    /// Gamma shape of in-group contact durations.
    pub duration_shape: f64,
    /// Gamma scale of in-group contact durations, seconds.
    pub duration_scale: f64,
    /// Brief chance encounters per white UE, with random partners.
    pub white_encounters: usize,
    /// Gamma scale of chance-encounter durations, seconds.
    pub white_duration_scale: f64,
    /// Observation window, seconds.
    pub span: f64,
}

impl Default for SyntheticTrace {
    fn default() -> Self {
        SyntheticTrace {
            groups: vec![27],
            white_nodes: 0,
            encounters_per_pair: 12,
            duration_shape: 4.0,
            duration_scale: 60.0,
            white_encounters: 3,
            white_duration_scale: 5.0,
            span: 79.0 * 86_400.0,
        }
    }
}

impl SyntheticTrace {
    pub fn n_nodes(&self) -> usize {
        self.groups.iter().sum::<usize>() + self.white_nodes
    }

    pub fn validate(&self) -> Result<()> {
        if self.groups.iter().any(|&g| g < 2) {
            return Err(Error::config("trace.groups entries must be at least 2"));
        }
        if self.n_nodes() < 2 {
            return Err(Error::config("synthetic trace needs at least two UEs"));
        }
        if self.encounters_per_pair == 0 {
            return Err(Error::config("trace.encounters_per_pair must be at least 1"));
        }
        for (name, v) in [
            ("trace.duration_shape", self.duration_shape),
            ("trace.duration_scale", self.duration_scale),
            ("trace.white_duration_scale", self.white_duration_scale),
            ("trace.span", self.span),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Node ids `ue01`, `ue02`, …, zero-padded to a common width; group
    /// members first, white UEs last.
    pub fn node_ids(&self) -> Vec<String> {
        let n = self.n_nodes();
        let width = n.to_string().len();
        (1..=n).map(|i| format!("ue{i:0width$}")).collect()
    }

    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<EncounterRecord>> {
        self.validate()?;
        let ids = self.node_ids();
        let in_group = Gamma::new(self.duration_shape, self.duration_scale).map_err(|e| Error::config(e.to_string()))?;
        let chance =
            Gamma::new(self.duration_shape, self.white_duration_scale).map_err(|e| Error::config(e.to_string()))?;
        let mut records = Vec::new();
        let mut push = |rng: &mut R, a: &str, b: &str, dist: &Gamma<f64>| -> Result<()> {
            let start = rng.random::<f64>() * self.span;
            let duration = dist.sample(rng).max(1e-3);
            records.push(EncounterRecord::new(a, b, start, start + duration)?);
            Ok(())
        };

        let mut offset = 0;
        for &size in &self.groups {
            let members = &ids[offset..offset + size];
            for (i, a) in members.iter().enumerate() {
                for b in &members[i + 1..] {
                    for _ in 0..self.encounters_per_pair {
                        push(rng, a, b, &in_group)?;
                    }
                }
            }
            offset += size;
        }
        for a in &ids[offset..] {
            for _ in 0..self.white_encounters {
                let mut b = &ids[rng.random_range(0..ids.len())];
                while b == a {
                    b = &ids[rng.random_range(0..ids.len())];
                }
                push(rng, a, b, &chance)?;
            }
        }
        records.sort_by(|x, y| x.start.total_cmp(&y.start));
        Ok(records)
    }
}
