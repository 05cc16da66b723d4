use super::Individual;

/// Unbounded set of mutually non-dominated individuals, one per gene set.
#[derive(Debug, Clone, Default)]
pub struct ParetoArchive {
    members: Vec<Individual>,
}

impl ParetoArchive {
    pub fn members(&self) -> &[Individual] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Offers every candidate in order. Returns how many were admitted.
    pub fn update(&mut self, candidates: &[Individual]) -> usize {
        candidates.iter().filter(|c| self.offer(c)).count()
    }

    /// Admits `candidate` unless an archived member dominates it or holds the
    /// same gene set; evicts the members it dominates.
    pub fn offer(&mut self, candidate: &Individual) -> bool {
        let rejected = self.members.iter().any(|m| {
            m.fitness.dominates(&candidate.fitness) || m.key() == candidate.key()
        });
        if rejected {
            return false;
        }
        self.members
            .retain(|m| !candidate.fitness.dominates(&m.fitness));
        self.members.push(candidate.clone());
        true
    }
}
