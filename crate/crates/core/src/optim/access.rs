//! Read accounting for data partitions.
//!
//! A loop owns a [`PhaseClock`] that it sets to `Theta` while computing model
//! updates, `Rho` while computing regularization updates, and `Eval` while
//! scoring. Each [`Partition`] counts the rows served under each phase, so a
//! test can confirm that θ-updates never touched the regularization set and
//! ρ-updates never touched the training set.

use crate::datagen::Dataset;
use crate::numkit::Matrix;
use serde::{Deserialize, Serialize};
use std::cell::Cell;

/// What the loop is currently computing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Theta = 0,
    Rho = 1,
    Eval = 2,
}

/// Shared current phase.
#[derive(Debug)]
pub struct PhaseClock(Cell<Phase>);

impl PhaseClock {
    pub fn new() -> Self {
        PhaseClock(Cell::new(Phase::Eval))
    }

    pub fn set(&self, p: Phase) {
        self.0.set(p);
    }

    pub fn get(&self) -> Phase {
        self.0.get()
    }
}

impl Default for PhaseClock {
    fn default() -> Self {
        Self::new()
    }
}

/// Counting view of one partition.
#[derive(Debug)]
pub struct Partition<'a> {
    data: &'a Dataset,
    clock: &'a PhaseClock,
    reads: [Cell<usize>; 3],
}

impl<'a> Partition<'a> {
    pub fn new(data: &'a Dataset, clock: &'a PhaseClock) -> Self {
        Partition { data, clock, reads: Default::default() }
    }

    fn count(&self, n: usize) {
        let c = &self.reads[self.clock.get() as usize];
        c.set(c.get() + n);
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Rows `idx` as inputs and targets.
    pub fn rows(&self, idx: &[usize]) -> (Matrix, Vec<f64>) {
        self.count(idx.len());
        (self.data.x.select_rows(idx), idx.iter().map(|&i| self.data.y[i]).collect())
    }

    /// The whole partition.
    pub fn all(&self) -> &'a Dataset {
        self.count(self.data.len());
        self.data
    }

    /// Reads per phase: `[theta, rho, eval]`.
    pub fn reads(&self) -> [usize; 3] {
        [self.reads[0].get(), self.reads[1].get(), self.reads[2].get()]
    }
}

/// Rows read from each partition, split by phase `[theta, rho, eval]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessCounts {
    pub train: [usize; 3],
    pub reg: [usize; 3],
    pub test: [usize; 3],
}

impl AccessCounts {
    /// Training rows read during ρ-updates plus regularization rows read during θ-updates.
    pub fn cross_access(&self) -> usize {
        self.train[Phase::Rho as usize] + self.reg[Phase::Theta as usize]
    }

    pub fn add(&mut self, o: &AccessCounts) {
        for i in 0..3 {
            self.train[i] += o.train[i];
            self.reg[i] += o.reg[i];
            self.test[i] += o.test[i];
        }
    }
}
