//! Indian Buffet Process model of online content selection.
//!
//! Users arrive one at a time. User `n` re-selects every content `k` already
//! chosen by `m_k` earlier users with probability `m_k / n`, then adds
//! `Poisson(α / n)` contents nobody has selected before. Only contents with at
//! least one selector are stored; the unbounded remainder of the catalog shows
//! up solely through the new-content draw.

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ContentId = u64;

pub const HISTORY_HEADER: &str = "user_index,content_id,was_new";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IbpState {
    alpha: f64,
    n_users_seen: u64,
    counts: BTreeMap<ContentId, u64>,
    next_content_id: ContentId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionOutcome {
    /// 1-based position of the user in the process.
    pub user_index: u64,
    /// Contents with viewing history, ascending.
    pub old_contents: Vec<ContentId>,
    /// Freshly created contents, ascending.
    pub new_contents: Vec<ContentId>,
}

impl SelectionOutcome {
    /// Total selections `m_n`.
    pub fn total(&self) -> usize {
        self.old_contents.len() + self.new_contents.len()
    }

    /// New selections `m_n^0`.
    pub fn new_count(&self) -> usize {
        self.new_contents.len()
    }

    /// Old selections `m_n^h = m_n - m_n^0`.
    pub fn old_count(&self) -> usize {
        self.old_contents.len()
    }

    /// All selected contents tagged with whether they are new, old ones first.
    pub fn requests(&self) -> impl Iterator<Item = (ContentId, bool)> + '_ {
        self.old_contents.iter().map(|&c| (c, false)).chain(self.new_contents.iter().map(|&c| (c, true)))
    }
}

impl IbpState {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::domain(format!("IBP alpha must be positive, got {alpha}")));
        }
        Ok(IbpState { alpha, n_users_seen: 0, counts: BTreeMap::new(), next_content_id: 0 })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n_users_seen(&self) -> u64 {
        self.n_users_seen
    }

    /// Index of the user whose session comes next.
    pub fn next_user(&self) -> u64 {
        self.n_users_seen + 1
    }

    /// Number of contents with viewing history (`K_h`).
    pub fn known_contents(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, content: ContentId) -> u64 {
        self.counts.get(&content).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &BTreeMap<ContentId, u64> {
        &self.counts
    }

    /// Prior probability `m_k / n` that user `n` selects `content`.
    pub fn prior_probability(&self, content: ContentId, n: u64) -> Result<f64> {
        self.check_next(n)?;
        Ok(self.count(content) as f64 / n as f64)
    }

    /// Expected number of old selections of the next user, `Σ_k m_k / n`.
    pub fn expected_old_selections(&self) -> f64 {
        let n = self.next_user() as f64;
        self.counts.values().map(|&m| m as f64).sum::<f64>() / n
    }

    fn check_next(&self, n: u64) -> Result<()> {
        if n != self.next_user() {
            return Err(Error::Sequence { expected: self.next_user(), got: n });
        }
        Ok(())
    }

    /// Runs one selection session and folds it into the counts.
    pub fn select<R: Rng + ?Sized>(&mut self, rng: &mut R) -> SelectionOutcome {
        let n = self.next_user();
        let nf = n as f64;

        let old_contents: Vec<ContentId> = self
            .counts
            .iter()
            .filter(|&(_, &m)| rng.random::<f64>() < m as f64 / nf)
            .map(|(&k, _)| k)
            .collect();

        let n_new = Poisson::new(self.alpha / nf).expect("positive rate").sample(rng) as u64;
        let new_contents: Vec<ContentId> = (self.next_content_id..self.next_content_id + n_new).collect();
        self.next_content_id += n_new;

        for k in &old_contents {
            *self.counts.get_mut(k).expect("old content is stored") += 1;
        }
        for &k in &new_contents {
            self.counts.insert(k, 1);
        }
        self.n_users_seen = n;

        SelectionOutcome { user_index: n, old_contents, new_contents }
    }
}

/// Mean number of old selections of user `n` in a process started from an
/// empty catalog: `(n - 1) α / n`.
pub fn expected_old_count(alpha: f64, n: u64) -> Result<f64> {
    if !(alpha > 0.0) || n < 1 {
        return Err(Error::domain(format!("need alpha > 0 and n >= 1, got alpha={alpha}, n={n}")));
    }
    Ok((n - 1) as f64 * alpha / n as f64)
}

pub fn write_history<W: Write>(mut out: W, outcomes: &[SelectionOutcome]) -> Result<()> {
    writeln!(out, "{HISTORY_HEADER}")?;
    for o in outcomes {
        for (content, was_new) in o.requests() {
            writeln!(out, "{},{},{}", o.user_index, content, was_new)?;
        }
    }
    Ok(())
}
