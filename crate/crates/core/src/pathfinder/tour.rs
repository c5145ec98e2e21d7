//! Flyby tables recovered from a node's parent chain.

use crate::astro::{self, MoonId, SystemModel};
use crate::error::{Error, Result};
use crate::pathfinder::{NodeArena, NodeId, NodeLink, PathNode};
use crate::resonance::ResonanceFamily;

/// Reported altitude when a flyby needs no bend at all, km.
pub const MAX_REPORTED_ALTITUDE_KM: f64 = 99_999.0;

const CHAIN_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RowKind {
    /// Leveraging leg with signed orientations.
    Leg(ResonanceFamily),
    /// Maximum-bend flyby leaving for the next moon.
    Exit(MoonId),
    /// Orbit insertion.
    Insertion,
    /// Last flyby of a path that was not closed.
    Open,
}

/// One flyby and the transfer that follows it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlybyRow {
    pub moon: MoonId,
    /// 1-based within the moon.
    pub index: u32,
    pub kind: RowKind,
    pub tof_days: f64,
    pub altitude_km: f64,
    pub v_inf_mps: f64,
    pub dv_mps: f64,
    pub alpha_arr_deg: f64,
    pub alpha_dep_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tour {
    pub id: usize,
    pub end: NodeId,
    pub rows: Vec<FlybyRow>,
    pub tof_days: f64,
    pub dv_mps: f64,
}

impl Tour {
    /// Per-moon (ToF, ΔV) sums, in visiting order; insertion excluded.
    pub fn moon_totals(&self) -> Vec<(MoonId, f64, f64)> {
        let mut out: Vec<(MoonId, f64, f64)> = Vec::new();
        for r in self.rows.iter().filter(|r| r.kind != RowKind::Insertion) {
            match out.last_mut() {
                Some(last) if last.0 == r.moon => {
                    last.1 += r.tof_days;
                    last.2 += r.dv_mps;
                }
                _ => out.push((r.moon, r.tof_days, r.dv_mps)),
            }
        }
        out
    }

    pub fn insertion_dv_mps(&self) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.kind == RowKind::Insertion)
            .map(|r| r.dv_mps)
    }
}

fn altitude(
    sys: &SystemModel,
    moon: MoonId,
    v_inf_mps: f64,
    alpha_arr: f64,
    alpha_dep: f64,
) -> f64 {
    let params = sys.moon(moon);
    let bend = (alpha_dep.abs() - alpha_arr.abs()).abs();
    astro::flyby_altitude_for_bend(params, v_inf_mps, bend)
        .clamp(params.min_flyby_alt_km, MAX_REPORTED_ALTITUDE_KM)
}

fn broken(id: NodeId, what: &str) -> Error {
    Error::InconsistentChain(format!("node {}: {what}", id.0))
}

/// Assign orientations within one moon phase. `legs` holds the family of
/// each leg in order; symmetric families take the orientation in force,
/// which defaults to outbound when no asymmetric leg fixes it.
fn assign_signs(legs: &[(NodeId, ResonanceFamily)]) -> Result<Vec<ResonanceFamily>> {
    let mut out = Vec::with_capacity(legs.len());
    let mut pending = Vec::new();
    let mut current: Option<i8> = None;
    for &(id, fam) in legs {
        if fam.symmetric() {
            match current {
                Some(s) => out.push(ResonanceFamily::new(fam.m, fam.n, s, s)),
                None => {
                    pending.push(out.len());
                    out.push(fam);
                }
            }
        } else {
            if current.is_some_and(|s| s != fam.p) {
                return Err(broken(id, "orientation mismatch between consecutive legs"));
            }
            for i in pending.drain(..) {
                let f = out[i];
                out[i] = ResonanceFamily::new(f.m, f.n, fam.p, fam.p);
            }
            current = Some(fam.q);
            out.push(fam);
        }
    }
    for i in pending {
        let f = out[i];
        out[i] = ResonanceFamily::new(f.m, f.n, 1, 1);
    }
    Ok(out)
}

fn check_step(id: NodeId, prev: &PathNode, node: &PathNode) -> Result<()> {
    if node.tof_days < prev.tof_days - CHAIN_TOL || node.dv_mps < prev.dv_mps - CHAIN_TOL {
        return Err(broken(id, "accumulated cost decreases"));
    }
    match node.link {
        NodeLink::Start => Err(broken(id, "start node has a parent")),
        NodeLink::Leg { leg, .. } => {
            if node.moon != prev.moon {
                return Err(broken(id, "leg changes moon"));
            }
            if (node.tof_days - prev.tof_days - leg.tof_days).abs() > CHAIN_TOL
                || (node.dv_mps - prev.dv_mps - leg.dv_mps.abs()).abs() > CHAIN_TOL
            {
                return Err(broken(id, "leg cost does not match the accumulators"));
            }
            Ok(())
        }
        NodeLink::Handoff { from, .. } => {
            if from != prev.moon || prev.moon.next() != Some(node.moon) {
                return Err(broken(id, "hand-off is not to the next inner moon"));
            }
            Ok(())
        }
        NodeLink::Insertion { dv_mps, .. } => {
            if (node.dv_mps - prev.dv_mps - dv_mps).abs() > CHAIN_TOL {
                return Err(broken(id, "insertion cost does not match the accumulators"));
            }
            Ok(())
        }
    }
}

/// Flyby table of the path ending at `end`.
pub fn reconstruct_tour(
    arena: &NodeArena,
    end: NodeId,
    sys: &SystemModel,
    tour_id: usize,
) -> Result<Tour> {
    let chain = arena.chain(end);
    let first = arena.get(chain[0]);
    if first.link != NodeLink::Start {
        return Err(broken(chain[0], "chain does not begin at a start node"));
    }
    for w in chain.windows(2) {
        check_step(w[1], arena.get(w[0]), arena.get(w[1]))?;
    }

    // Orientation assignment per moon phase.
    let mut signed: Vec<Option<ResonanceFamily>> = vec![None; chain.len()];
    let mut phase: Vec<(usize, NodeId, ResonanceFamily)> = Vec::new();
    let flush = |phase: &mut Vec<(usize, NodeId, ResonanceFamily)>,
                 signed: &mut Vec<Option<ResonanceFamily>>|
     -> Result<()> {
        let legs: Vec<(NodeId, ResonanceFamily)> =
            phase.iter().map(|&(_, id, f)| (id, f)).collect();
        for ((pos, _, _), f) in phase.iter().zip(assign_signs(&legs)?) {
            signed[*pos] = Some(f);
        }
        phase.clear();
        Ok(())
    };
    for (pos, &id) in chain.iter().enumerate() {
        match arena.get(id).link {
            NodeLink::Leg { family, .. } => phase.push((pos, id, family)),
            NodeLink::Handoff { .. } => flush(&mut phase, &mut signed)?,
            _ => {}
        }
    }
    flush(&mut phase, &mut signed)?;

    let mut rows = Vec::new();
    let mut index = 0;
    for (pos, &id) in chain.iter().enumerate() {
        let node = arena.get(id);
        if matches!(node.link, NodeLink::Insertion { .. }) {
            continue;
        }
        index = if matches!(node.link, NodeLink::Start | NodeLink::Handoff { .. }) {
            1
        } else {
            index + 1
        };
        let next = chain.get(pos + 1).map(|&n| arena.get(n));
        let (kind, tof, dv, alpha_dep, alt) = match next.map(|n| n.link) {
            Some(NodeLink::Leg { leg, .. }) => {
                let fam = signed[pos + 1].expect("every leg is signed");
                let alt = altitude(
                    sys,
                    node.moon,
                    node.v_inf_mps,
                    node.alpha_deg,
                    leg.alpha_dep_deg,
                );
                (
                    RowKind::Leg(fam),
                    leg.tof_days,
                    leg.dv_mps.abs(),
                    leg.alpha_dep_deg.abs(),
                    alt,
                )
            }
            Some(NodeLink::Handoff { alpha_dep_deg, .. }) => {
                let to = next.expect("hand-off has a node").moon;
                let alt = altitude(
                    sys,
                    node.moon,
                    node.v_inf_mps,
                    node.alpha_deg,
                    alpha_dep_deg,
                );
                (RowKind::Exit(to), 0.0, 0.0, alpha_dep_deg, alt)
            }
            Some(NodeLink::Insertion {
                dv_mps,
                altitude_km,
            }) => (RowKind::Insertion, 0.0, dv_mps, node.alpha_deg, altitude_km),
            Some(NodeLink::Start) => {
                return Err(broken(chain[pos + 1], "start node inside a chain"))
            }
            None => (RowKind::Open, 0.0, 0.0, node.alpha_deg, f64::NAN),
        };
        rows.push(FlybyRow {
            moon: node.moon,
            index,
            kind,
            tof_days: tof,
            altitude_km: alt,
            v_inf_mps: node.v_inf_mps,
            dv_mps: dv,
            alpha_arr_deg: node.alpha_deg,
            alpha_dep_deg: alpha_dep,
        });
    }
    let last = arena.get(end);
    Ok(Tour {
        id: tour_id,
        end,
        rows,
        tof_days: last.tof_days,
        dv_mps: last.dv_mps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vilt::LegEstimate;

    fn leg(tof: f64, dv: f64, a_dep: f64, a_arr: f64) -> LegEstimate {
        LegEstimate {
            dv_mps: dv,
            tof_days: tof,
            v_inf_dep_mps: 900.0,
            v_inf_arr_mps: 900.0,
            alpha_dep_deg: a_dep,
            alpha_arr_deg: a_arr,
        }
    }

    fn child(
        arena: &NodeArena,
        parent: NodeId,
        family: ResonanceFamily,
        l: LegEstimate,
    ) -> PathNode {
        let p = arena.get(parent);
        PathNode {
            v_inf_mps: l.v_inf_arr_mps,
            alpha_deg: l.alpha_arr_deg,
            tof_days: p.tof_days + l.tof_days,
            dv_mps: p.dv_mps + l.dv_mps.abs(),
            parent: Some(parent),
            link: NodeLink::Leg { family, leg: l },
            flybys: p.flybys + 1,
            ..*p
        }
    }

    #[test]
    fn single_ballistic_leg() {
        let sys = SystemModel::saturn();
        let mut arena = NodeArena::new();
        let s = arena.push(PathNode::start(MoonId::Rhea, 900.0, 120.0));
        let fam = ResonanceFamily::new(4, 3, 1, 1);
        let c = arena.push(child(&arena, s, fam, leg(18.0, 0.0, 120.0, 120.0)));
        let t = reconstruct_tour(&arena, c, &sys, 0).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[0].kind, RowKind::Leg(fam));
        assert_eq!(t.rows[0].dv_mps, 0.0);
        assert_eq!(t.rows[0].altitude_km, MAX_REPORTED_ALTITUDE_KM);
        assert_eq!(t.rows[1].kind, RowKind::Open);
        assert_eq!(t.tof_days, 18.0);
    }

    #[test]
    fn asymmetric_leg_fixes_earlier_orientations() {
        let sys = SystemModel::saturn();
        let mut arena = NodeArena::new();
        let s = arena.push(PathNode::start(MoonId::Rhea, 900.0, 100.0));
        let a = arena.push(child(
            &arena,
            s,
            ResonanceFamily::new(4, 3, 1, 1),
            leg(18.0, 1.0, 100.0, 100.0),
        ));
        let b = arena.push(child(
            &arena,
            a,
            ResonanceFamily::new(1, 1, -1, 1),
            leg(6.5, 0.0, 100.0, 100.0),
        ));
        let c = arena.push(child(
            &arena,
            b,
            ResonanceFamily::new(5, 4, 1, 1),
            leg(22.0, 0.0, 100.0, 100.0),
        ));
        let t = reconstruct_tour(&arena, c, &sys, 0).unwrap();
        let fams: Vec<RowKind> = t.rows.iter().map(|r| r.kind).collect();
        assert_eq!(fams[0], RowKind::Leg(ResonanceFamily::new(4, 3, -1, -1)));
        assert_eq!(fams[1], RowKind::Leg(ResonanceFamily::new(1, 1, -1, 1)));
        assert_eq!(fams[2], RowKind::Leg(ResonanceFamily::new(5, 4, 1, 1)));
    }

    #[test]
    fn outbound_arrival_matches_plus_minus_one_to_one() {
        let legs = [
            (NodeId(1), ResonanceFamily::new(1, 1, -1, 1)),
            (NodeId(2), ResonanceFamily::new(1, 1, 1, -1)),
        ];
        let out = assign_signs(&legs).unwrap();
        assert_eq!(out[0].q, out[1].p);
    }

    #[test]
    fn conflicting_orientations_are_rejected() {
        let legs = [
            (NodeId(1), ResonanceFamily::new(1, 1, 1, -1)),
            (NodeId(2), ResonanceFamily::new(1, 1, 1, -1)),
        ];
        assert!(matches!(
            assign_signs(&legs),
            Err(Error::InconsistentChain(_))
        ));
    }

    #[test]
    fn tampered_accumulators_are_rejected() {
        let sys = SystemModel::saturn();
        let mut arena = NodeArena::new();
        let s = arena.push(PathNode::start(MoonId::Rhea, 900.0, 120.0));
        let mut bad = child(
            &arena,
            s,
            ResonanceFamily::new(4, 3, 1, 1),
            leg(18.0, 2.0, 120.0, 120.0),
        );
        bad.dv_mps = 0.5;
        let c = arena.push(bad);
        assert!(matches!(
            reconstruct_tour(&arena, c, &sys, 0),
            Err(Error::InconsistentChain(_))
        ));
    }

    #[test]
    fn altitude_inverts_the_bend() {
        let sys = SystemModel::saturn();
        let rhea = sys.moon(MoonId::Rhea);
        let bend = astro::max_bend_angle_at(rhea, 900.0, 300.0);
        assert_close!(
            altitude(&sys, MoonId::Rhea, 900.0, 100.0, 100.0 + bend),
            300.0,
            1e-6
        );
        let full = astro::max_bend_angle(rhea, 900.0);
        assert_close!(
            altitude(&sys, MoonId::Rhea, 900.0, 100.0, 100.0 + full),
            rhea.min_flyby_alt_km,
            1e-6
        );
    }
}
