use std::collections::BTreeSet;

use super::{ModelError, PartyId};

/// An undirected link. Endpoints are stored in ascending order so `(a, b)`
/// and `(b, a)` compare equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge(PartyId, PartyId);

impl Edge {
    pub fn new(a: PartyId, b: PartyId) -> Result<Self, ModelError> {
        if a == b {
            return Err(ModelError::SelfLoop(a));
        }
        Ok(if a < b { Edge(a, b) } else { Edge(b, a) })
    }

    pub fn endpoints(self) -> (PartyId, PartyId) {
        (self.0, self.1)
    }

    pub fn touches(self, p: PartyId) -> bool {
        self.0 == p || self.1 == p
    }
}

/// The link structure `G = (V, E)` of one round together with the subset
/// `E'` of links that are on. Vertices are implicit: the DC and `SM1..=SMn`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FailureGraph {
    n_sm: u32,
    edges: BTreeSet<Edge>,
    working: BTreeSet<Edge>,
}

impl FailureGraph {
    /// Builds a graph over `n_sm` meters. Rejects self-loops and parties
    /// outside the vertex set; `working ⊆ edges` is checked by scenario
    /// validation so that it can be reported as its own error.
    pub fn new<I, J>(n_sm: u32, edges: I, working: J) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = (PartyId, PartyId)>,
        J: IntoIterator<Item = (PartyId, PartyId)>,
    {
        let mut g = FailureGraph {
            n_sm,
            edges: BTreeSet::new(),
            working: BTreeSet::new(),
        };
        for (a, b) in edges {
            let e = g.checked_edge(a, b)?;
            g.edges.insert(e);
        }
        for (a, b) in working {
            let e = g.checked_edge(a, b)?;
            g.working.insert(e);
        }
        Ok(g)
    }

    /// Every pair of parties linked, every link on.
    pub fn complete(n_sm: u32) -> Self {
        let parties: Vec<_> = Self::parties_of(n_sm).collect();
        let mut edges = BTreeSet::new();
        for (x, &a) in parties.iter().enumerate() {
            for &b in &parties[x + 1..] {
                edges.insert(Edge(a, b));
            }
        }
        FailureGraph {
            n_sm,
            working: edges.clone(),
            edges,
        }
    }

    fn parties_of(n_sm: u32) -> impl Iterator<Item = PartyId> {
        std::iter::once(PartyId::Dc).chain((1..=n_sm).map(PartyId::Sm))
    }

    fn checked_edge(&self, a: PartyId, b: PartyId) -> Result<Edge, ModelError> {
        self.check_party(a)?;
        self.check_party(b)?;
        Edge::new(a, b)
    }

    fn check_party(&self, p: PartyId) -> Result<(), ModelError> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(ModelError::UnknownParty(p))
        }
    }

    pub fn n_sm(&self) -> u32 {
        self.n_sm
    }

    pub fn parties(&self) -> impl Iterator<Item = PartyId> {
        Self::parties_of(self.n_sm)
    }

    pub fn contains(&self, p: PartyId) -> bool {
        match p {
            PartyId::Dc => true,
            PartyId::Sm(i) => (1..=self.n_sm).contains(&i),
        }
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn working(&self) -> &BTreeSet<Edge> {
        &self.working
    }

    /// First working link that is not an edge of `G`, if any.
    pub fn stray_working_edge(&self) -> Option<Edge> {
        self.working.difference(&self.edges).next().copied()
    }

    /// Replaces `E'`, keeping `G`.
    pub fn with_working<J>(&self, working: J) -> Result<Self, ModelError>
    where
        J: IntoIterator<Item = (PartyId, PartyId)>,
    {
        Self::new(
            self.n_sm,
            self.edges.iter().map(|e| e.endpoints()),
            working,
        )
    }

    /// Whether the link between `a` and `b` is on this round.
    pub fn link_on(&self, a: PartyId, b: PartyId) -> Result<bool, ModelError> {
        let e = self.checked_edge(a, b)?;
        Ok(self.working.contains(&e))
    }
}
