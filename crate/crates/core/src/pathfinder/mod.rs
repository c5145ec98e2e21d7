//! Grid-based dynamic programming over flyby states.
//!
//! Every stage branches each archived node through the leveraging database
//! to the V_inf grid, then prunes the children with a four-objective Pareto
//! filter and grid bins. Moon phases are chained by a soft exit condition,
//! and the Enceladus phase closes paths with an insertion burn.

pub mod checkpoint;
pub mod dp;
pub mod flyby;
pub mod pareto;
pub mod tour;

use serde::{Deserialize, Serialize};

use crate::astro::MoonId;
use crate::resonance::ResonanceFamily;
use crate::vilt::LegEstimate;

pub use dp::{
    branch, run_full_tour, run_moon_tour, BinSettings, BranchLimits, DpSettings, MoonGraph,
    MoonPhase, StageDiagnostics, Terminal, TourOptions, TourResult,
};
pub use flyby::{departure_pump_range, eoi_delta_v, exit_feasible, ExitState};
pub use pareto::{non_dominated, pareto_2d, pareto_prune, BinWidths, ObjectiveVector};
pub use tour::{reconstruct_tour, FlybyRow, RowKind, Tour};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

/// How a node was reached from its parent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeLink {
    Start,
    /// A leveraging leg at the same moon.
    Leg {
        family: ResonanceFamily,
        leg: LegEstimate,
    },
    /// Arrival at the next inner moon after a maximum-bend flyby.
    Handoff {
        from: MoonId,
        alpha_dep_deg: f64,
        rp_km: f64,
    },
    /// Orbit insertion closing the tour.
    Insertion {
        dv_mps: f64,
        altitude_km: f64,
    },
}

impl NodeLink {
    fn rank(&self) -> u8 {
        match self {
            NodeLink::Start => 0,
            NodeLink::Leg { .. } => 1,
            NodeLink::Handoff { .. } => 2,
            NodeLink::Insertion { .. } => 3,
        }
    }

    /// Total order used to break ties between otherwise equal candidates.
    fn tie_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.rank()
            .cmp(&other.rank())
            .then_with(|| match (self, other) {
                (NodeLink::Leg { family: a, .. }, NodeLink::Leg { family: b, .. }) => {
                    a.sort_key().cmp(&b.sort_key())
                }
                _ => std::cmp::Ordering::Equal,
            })
    }
}

/// Arrival state at a flyby plus the accumulated cost of the path to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathNode {
    pub moon: MoonId,
    pub v_inf_mps: f64,
    /// Arrival pump-angle magnitude, deg.
    pub alpha_deg: f64,
    pub tof_days: f64,
    pub dv_mps: f64,
    pub parent: Option<NodeId>,
    pub link: NodeLink,
    /// Flybys at the current moon, counting this one.
    pub flybys: u32,
    /// Orientation fixed by the last asymmetric 1:1 leg of this moon phase.
    pub sign: Option<i8>,
}

impl PathNode {
    pub fn start(moon: MoonId, v_inf_mps: f64, alpha_deg: f64) -> Self {
        Self {
            moon,
            v_inf_mps,
            alpha_deg: alpha_deg.abs(),
            tof_days: 0.0,
            dv_mps: 0.0,
            parent: None,
            link: NodeLink::Start,
            flybys: 1,
            sign: None,
        }
    }

    pub fn objectives(&self) -> ObjectiveVector {
        ObjectiveVector::new(self.tof_days, self.dv_mps, self.alpha_deg, self.v_inf_mps)
    }

    /// Deterministic total order: objectives, then parent, then link.
    pub fn total_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.objectives()
            .lex_cmp(&other.objectives())
            .then(self.parent.cmp(&other.parent))
            .then_with(|| self.link.tie_cmp(&other.link))
            .then(self.sign.cmp(&other.sign))
            .then(self.flybys.cmp(&other.flybys))
            .then(self.moon.cmp(&other.moon))
    }
}

/// Append-only node store; parents always precede their children.
#[derive(Debug, Clone, Default)]
pub struct NodeArena {
    nodes: Vec<PathNode>,
}

impl NodeArena {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, node: PathNode) -> NodeId {
        debug_assert!(node.parent.is_none_or(|p| p.0 < self.nodes.len()));
        self.nodes.push(node);
        NodeId(self.nodes.len() - 1)
    }

    pub fn get(&self, id: NodeId) -> &PathNode {
        &self.nodes[id.0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &PathNode)> {
        self.nodes.iter().enumerate().map(|(i, n)| (NodeId(i), n))
    }

    /// Ids from the root to `id`, inclusive.
    pub fn chain(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = vec![id];
        let mut cur = self.get(id).parent;
        while let Some(p) = cur {
            out.push(p);
            cur = self.get(p).parent;
        }
        out.reverse();
        out
    }
}
