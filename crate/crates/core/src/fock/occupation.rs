//! Phonon occupation vectors with a cap on the total number.

use std::collections::HashMap;

#[derive(Debug, Clone)]
pub struct OccupationSpace {
    modes: usize,
    n_max: usize,
    states: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
}

impl OccupationSpace {
    /// All n ∈ ℕ^modes with Σ n_j ≤ n_max, ordered by total then
    /// lexicographically.
    pub fn new(modes: usize, n_max: usize) -> Self {
        let mut states = Vec::new();
        for total in 0..=n_max {
            let mut current = vec![0u8; modes];
            fill(&mut current, 0, total, &mut states);
        }
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Self { modes, n_max, states, index }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn state(&self, i: usize) -> &[u8] {
        &self.states[i]
    }

    pub fn states(&self) -> &[Vec<u8>] {
        &self.states
    }

    pub fn total(&self, i: usize) -> usize {
        self.states[i].iter().map(|&n| n as usize).sum()
    }

    /// Index of the state with one more phonon in mode j, if it exists.
    pub fn raised(&self, i: usize, j: usize) -> Option<usize> {
        if self.total(i) >= self.n_max {
            return None;
        }
        let mut s = self.states[i].clone();
        s[j] += 1;
        self.index.get(&s).copied()
    }

    pub fn lowered(&self, i: usize, j: usize) -> Option<usize> {
        if self.states[i][j] == 0 {
            return None;
        }
        let mut s = self.states[i].clone();
        s[j] -= 1;
        self.index.get(&s).copied()
    }
}

fn fill(current: &mut Vec<u8>, from: usize, remaining: usize, out: &mut Vec<Vec<u8>>) {
    if remaining == 0 {
        out.push(current.clone());
        return;
    }
    for j in from..current.len() {
        current[j] += 1;
        fill(current, j, remaining - 1, out);
        current[j] -= 1;
    }
}

/// C(modes + n_max, n_max) without building the space.
pub fn occupation_count(modes: usize, n_max: usize) -> usize {
    let mut c: u128 = 1;
    for i in 1..=n_max as u128 {
        c = c * (modes as u128 + i) / i;
    }
    c.min(usize::MAX as u128) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_binomial() {
        for (m, n) in [(1, 3), (4, 2), (12, 2), (6, 3)] {
            assert_eq!(OccupationSpace::new(m, n).len(), occupation_count(m, n));
        }
    }

    #[test]
    fn ladder_round_trip() {
        let s = OccupationSpace::new(3, 2);
        for i in 0..s.len() {
            for j in 0..3 {
                if let Some(up) = s.raised(i, j) {
                    assert_eq!(s.lowered(up, j), Some(i));
                }
            }
        }
    }
}
