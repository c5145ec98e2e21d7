//! Branch and prune stages within one moon, and the chained tour.

use std::path::PathBuf;

use rayon::prelude::*;

use crate::astro::{self, MoonId, MoonParams, SearchBounds, SystemModel};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::pathfinder::checkpoint;
use crate::pathfinder::flyby::{departure_pump_range, eoi_delta_v, exit_feasible};
use crate::pathfinder::pareto::{pareto_2d, pareto_prune, BinWidths, ObjectiveVector};
use crate::pathfinder::tour::{reconstruct_tour, Tour};
use crate::pathfinder::{NodeArena, NodeId, NodeLink, PathNode};
use crate::resonance::ResonanceFamily;
use crate::vilt::{leg_from_departure, vinf_grid, ViltDatabase};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinSettings {
    pub widths: BinWidths,
    /// Pump-angle bin as a fraction of the local maximum bend angle.
    pub alpha_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchLimits {
    pub dv_cap_mps: f64,
    pub tof_cap_days: f64,
    /// 0 disables the cap.
    pub max_flybys: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpSettings {
    pub limits: BranchLimits,
    /// `None` keeps every non-dominated node.
    pub bins: Option<BinSettings>,
    pub dp_grid_step_mps: f64,
    /// Record the archive of every stage in [`MoonPhase::archives`].
    pub keep_stage_archives: bool,
}

impl DpSettings {
    pub fn from_config(cfg: &RunConfig) -> Self {
        Self {
            limits: BranchLimits {
                dv_cap_mps: cfg.dv_cap_mps,
                tof_cap_days: cfg.tof_cap_days(),
                max_flybys: cfg.max_flybys_per_moon,
            },
            bins: Some(BinSettings {
                widths: BinWidths {
                    tof_days: cfg.bin_tof_days,
                    dv_mps: cfg.bin_dv_mps,
                    v_inf_mps: cfg.bin_vinf_mps,
                },
                alpha_fraction: cfg.bin_alpha_fraction,
            }),
            dp_grid_step_mps: cfg.dp_grid_step_mps,
            keep_stage_archives: false,
        }
    }
}

/// Branching targets of one moon: its database, floors and V_inf grid.
#[derive(Debug, Clone)]
pub struct MoonGraph<'a> {
    pub moon: MoonId,
    pub params: MoonParams,
    pub db: &'a ViltDatabase,
    pub targets: Vec<f64>,
    families: Vec<(ResonanceFamily, f64)>,
}

impl<'a> MoonGraph<'a> {
    pub fn new(db: &'a ViltDatabase, sys: &SystemModel, dp_grid_step_mps: f64) -> Self {
        let families = db
            .families()
            .filter_map(|f| db.family_floor(&f, sys).map(|floor| (f, floor)))
            .collect();
        Self {
            moon: db.moon,
            params: *sys.moon(db.moon),
            db,
            targets: vinf_grid(&db.bounds, dp_grid_step_mps),
            families,
        }
    }

    /// Restrict branching to a subset of families.
    pub fn with_families(mut self, keep: &[ResonanceFamily]) -> Self {
        self.families.retain(|(f, _)| keep.contains(f));
        self
    }

    /// Restrict branching to a subset of target speeds.
    pub fn with_targets(mut self, targets: Vec<f64>) -> Self {
        self.targets = targets;
        self
    }

    pub fn families(&self) -> impl Iterator<Item = ResonanceFamily> + '_ {
        self.families.iter().map(|(f, _)| *f)
    }
}

/// Children of `node` over every family and grid target speed.
pub fn branch(
    node: &PathNode,
    id: NodeId,
    graph: &MoonGraph,
    limits: &BranchLimits,
) -> Vec<PathNode> {
    if limits.max_flybys > 0 && node.flybys >= limits.max_flybys {
        return Vec::new();
    }
    let bend = astro::max_bend_angle(&graph.params, node.v_inf_mps);
    let (lo, hi) = departure_pump_range(node.alpha_deg, bend);
    let mut out = Vec::new();
    for &(family, floor) in &graph.families {
        let sign = if family.symmetric() {
            node.sign
        } else {
            if node.sign.is_some_and(|s| s != family.p) {
                continue;
            }
            Some(family.q)
        };
        for &target in &graph.targets {
            let center = 0.5 * (node.v_inf_mps + target);
            let Ok(rec) = graph.db.interpolate(&family, center) else {
                continue;
            };
            let Ok(leg) = leg_from_departure(&rec, node.v_inf_mps, floor, limits.dv_cap_mps) else {
                continue;
            };
            let alpha_dep = leg.alpha_dep_deg.abs();
            if alpha_dep < lo - 1e-9 || alpha_dep > hi + 1e-9 {
                continue;
            }
            let tof = node.tof_days + leg.tof_days;
            if tof > limits.tof_cap_days {
                continue;
            }
            out.push(PathNode {
                moon: node.moon,
                v_inf_mps: target,
                alpha_deg: leg.alpha_arr_deg.abs().min(180.0),
                tof_days: tof,
                dv_mps: node.dv_mps + leg.dv_mps.abs(),
                parent: Some(id),
                link: NodeLink::Leg { family, leg },
                flybys: node.flybys + 1,
                sign,
            });
        }
    }
    out
}

/// Indices of the 4D prune survivors of `nodes`, which must already be in
/// [`PathNode::total_cmp`] order.
fn prune_sorted(nodes: &[PathNode], bins: Option<&BinSettings>, params: &MoonParams) -> Vec<usize> {
    let objs: Vec<ObjectiveVector> = nodes.iter().map(PathNode::objectives).collect();
    match bins {
        Some(b) => {
            let alpha =
                |i: usize| astro::max_bend_angle(params, nodes[i].v_inf_mps) * b.alpha_fraction;
            pareto_prune(&objs, Some((&b.widths, &alpha)))
        }
        None => pareto_prune(&objs, None),
    }
}

/// Deterministic 4D prune of candidates sitting at `params`' moon.
pub fn prune_nodes(
    mut nodes: Vec<PathNode>,
    bins: Option<&BinSettings>,
    params: &MoonParams,
) -> Vec<PathNode> {
    nodes.par_sort_by(|a, b| a.total_cmp(b));
    prune_sorted(&nodes, bins, params)
        .into_iter()
        .map(|i| nodes[i])
        .collect()
}

/// How a moon phase ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Terminal {
    /// Hand off to the next inner moon.
    Exit { to: MoonId, bounds: SearchBounds },
    /// Close paths below the trigger speed with an insertion burn.
    Insertion { trigger_mps: f64, altitude_km: f64 },
}

/// One line of the per-stage diagnostics stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageDiagnostics {
    pub moon: MoonId,
    pub stage: usize,
    /// Children generated before pruning (0 for the initial stage).
    pub candidates: usize,
    pub archive: usize,
    /// Archive members added by this stage.
    pub added: usize,
    pub harvested: usize,
}

impl std::fmt::Display for StageDiagnostics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} stage {}: candidates {} archive {} added {} harvested {}",
            self.moon.key(),
            self.stage,
            self.candidates,
            self.archive,
            self.added,
            self.harvested
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoonPhase {
    pub moon: MoonId,
    pub initial: Vec<NodeId>,
    pub stages: Vec<StageDiagnostics>,
    /// Next-moon arrival nodes from every stage, or completed tours.
    pub harvested: Vec<NodeId>,
    /// Archive when the phase ended.
    pub archive: Vec<NodeId>,
    /// Archive at the start of every stage, when requested.
    pub archives: Vec<Vec<NodeId>>,
    /// Loaded from a checkpoint instead of being run.
    pub resumed: bool,
}

fn harvest(
    arena: &NodeArena,
    archive: &[NodeId],
    terminal: &Terminal,
    moon: &MoonParams,
    sys: &SystemModel,
) -> Vec<PathNode> {
    archive
        .iter()
        .filter_map(|&id| {
            let node = arena.get(id);
            match *terminal {
                Terminal::Exit { to, bounds } => {
                    exit_feasible(node, id, to, sys, &bounds).map(|x| PathNode {
                        moon: to,
                        v_inf_mps: x.v_inf_mps,
                        alpha_deg: x.alpha_deg.abs(),
                        tof_days: node.tof_days,
                        dv_mps: node.dv_mps,
                        parent: Some(id),
                        link: NodeLink::Handoff {
                            from: node.moon,
                            alpha_dep_deg: x.alpha_dep_deg,
                            rp_km: x.rp_km,
                        },
                        flybys: 1,
                        sign: None,
                    })
                }
                Terminal::Insertion {
                    trigger_mps,
                    altitude_km,
                } => (node.v_inf_mps < trigger_mps).then(|| {
                    let dv = eoi_delta_v(node.v_inf_mps, moon, altitude_km);
                    PathNode {
                        dv_mps: node.dv_mps + dv,
                        parent: Some(id),
                        link: NodeLink::Insertion {
                            dv_mps: dv,
                            altitude_km,
                        },
                        ..*node
                    }
                }),
            }
        })
        .collect()
}

/// Run branch/prune stages at one moon until no new node survives.
///
/// The archive holds every non-dominated node found so far at this moon;
/// each stage branches only the nodes the previous stage added, and prunes
/// the children together with the archive. Newly added nodes are harvested
/// and stay in the archive. Exit harvests are returned unpruned; insertion
/// harvests are filtered to the (ToF, ΔV) front.
pub fn run_moon_tour(
    arena: &mut NodeArena,
    initial: &[NodeId],
    graph: &MoonGraph,
    terminal: &Terminal,
    sys: &SystemModel,
    settings: &DpSettings,
) -> Result<MoonPhase> {
    if initial.is_empty() || initial.iter().any(|&id| arena.get(id).moon != graph.moon) {
        return Err(Error::EmptyFront(graph.moon));
    }
    let mut archive = initial.to_vec();
    let mut frontier = initial.to_vec();
    let mut stages = Vec::new();
    let mut archives = Vec::new();
    let mut harvested_nodes = Vec::new();
    let mut candidates = 0;
    for stage in 0.. {
        let got = harvest(arena, &frontier, terminal, &graph.params, sys);
        let diag = StageDiagnostics {
            moon: graph.moon,
            stage,
            candidates,
            archive: archive.len(),
            added: frontier.len(),
            harvested: got.len(),
        };
        log::info!("{diag}");
        stages.push(diag);
        harvested_nodes.extend(got);
        if settings.keep_stage_archives {
            archives.push(archive.clone());
        }

        let parents: Vec<(NodeId, PathNode)> =
            frontier.iter().map(|&id| (id, *arena.get(id))).collect();
        let children: Vec<PathNode> = parents
            .par_iter()
            .map(|(id, node)| branch(node, *id, graph, &settings.limits))
            .collect::<Vec<_>>()
            .concat();
        if children.is_empty() {
            break;
        }
        candidates = children.len();
        let mut pool: Vec<(Option<NodeId>, PathNode)> = archive
            .iter()
            .map(|&id| (Some(id), *arena.get(id)))
            .collect();
        pool.extend(children.into_iter().map(|n| (None, n)));
        // Stored nodes sort before identical new ones.
        pool.par_sort_by(|a, b| {
            a.1.total_cmp(&b.1)
                .then_with(|| b.0.is_some().cmp(&a.0.is_some()))
        });
        let nodes: Vec<PathNode> = pool.iter().map(|p| p.1).collect();
        let keep = prune_sorted(&nodes, settings.bins.as_ref(), &graph.params);
        let mut next_archive = Vec::with_capacity(keep.len());
        frontier = Vec::new();
        for i in keep {
            match pool[i].0 {
                Some(id) => next_archive.push(id),
                None => {
                    let id = arena.push(pool[i].1);
                    next_archive.push(id);
                    frontier.push(id);
                }
            }
        }
        archive = next_archive;
        if frontier.is_empty() {
            break;
        }
    }

    let harvested = match terminal {
        Terminal::Exit { .. } => harvested_nodes.into_iter().map(|n| arena.push(n)).collect(),
        Terminal::Insertion { .. } => {
            harvested_nodes.par_sort_by(|a, b| a.total_cmp(b));
            let pts: Vec<(f64, f64)> = harvested_nodes
                .iter()
                .map(|n| (n.tof_days, n.dv_mps))
                .collect();
            pareto_2d(&pts)
                .into_iter()
                .map(|i| arena.push(harvested_nodes[i]))
                .collect()
        }
    };
    let harvested: Vec<NodeId> = harvested;
    if harvested.is_empty() {
        return Err(Error::EmptyFront(graph.moon));
    }
    Ok(MoonPhase {
        moon: graph.moon,
        initial: initial.to_vec(),
        stages,
        harvested,
        archive,
        archives,
        resumed: false,
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TourOptions {
    /// Write one checkpoint per completed hand-off phase here.
    pub checkpoint_dir: Option<PathBuf>,
    /// Skip phases whose checkpoint already exists.
    pub resume: bool,
}

#[derive(Debug, Clone)]
pub struct TourResult {
    pub arena: NodeArena,
    pub phases: Vec<MoonPhase>,
    /// Pruned arrival set of every moon after the first: the front at the
    /// end of the previous moon's phase.
    pub entries: Vec<(MoonId, Vec<NodeId>)>,
    /// Completed tours on the (ToF, ΔV) front, by increasing ToF.
    pub front: Vec<NodeId>,
    pub tours: Vec<Tour>,
}

fn database_for(dbs: &[ViltDatabase], moon: MoonId) -> Result<&ViltDatabase> {
    dbs.iter()
        .find(|d| d.moon == moon)
        .ok_or_else(|| Error::Validation(format!("no leveraging database for {moon}")))
}

/// Chain the moon phases from the configured start to Enceladus insertion.
pub fn run_full_tour(
    config: &RunConfig,
    dbs: &[ViltDatabase],
    options: &TourOptions,
) -> Result<TourResult> {
    config.validate()?;
    if config.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::Validation(format!("workers: {e}")))?;
        pool.install(|| full_tour(config, dbs, options))
    } else {
        full_tour(config, dbs, options)
    }
}

fn full_tour(
    config: &RunConfig,
    dbs: &[ViltDatabase],
    options: &TourOptions,
) -> Result<TourResult> {
    let sys = config.system();
    let settings = DpSettings::from_config(config);
    let start = PathNode::start(
        config.initial_moon,
        config.initial_vinf_mps,
        config.initial_alpha_deg,
    );
    if !config
        .bounds_of(config.initial_moon)
        .contains(start.v_inf_mps)
    {
        return Err(Error::Validation(
            "initial_vinf_mps outside the initial moon's bounds".into(),
        ));
    }
    let mut arena = NodeArena::new();
    let mut initial = vec![arena.push(start)];
    let mut phases = Vec::new();
    let mut entries = Vec::new();
    let mut moon = config.initial_moon;
    loop {
        let next = moon.next();
        if let (Some(to), Some(dir), true) = (next, &options.checkpoint_dir, options.resume) {
            let path = checkpoint::path_for(dir, moon);
            if path.exists() {
                let (loaded, frontier) = checkpoint::read_checkpoint(&path)?;
                log::info!("{}: resumed from {}", moon.key(), path.display());
                arena = loaded;
                phases.push(MoonPhase {
                    moon,
                    initial: Vec::new(),
                    stages: Vec::new(),
                    harvested: Vec::new(),
                    archive: Vec::new(),
                    archives: Vec::new(),
                    resumed: true,
                });
                entries.push((to, frontier.clone()));
                initial = frontier;
                moon = to;
                continue;
            }
        }
        let db = database_for(dbs, moon)?;
        let graph = MoonGraph::new(db, &sys, settings.dp_grid_step_mps);
        let terminal = match next {
            Some(to) => Terminal::Exit {
                to,
                bounds: *config.bounds_of(to),
            },
            None => Terminal::Insertion {
                trigger_mps: config.eoi_trigger_vinf_mps,
                altitude_km: config.eoi_altitude_km,
            },
        };
        let phase = run_moon_tour(&mut arena, &initial, &graph, &terminal, &sys, &settings)?;
        let Some(to) = next else {
            let front = phase.harvested.clone();
            phases.push(phase);
            let tours = front
                .iter()
                .enumerate()
                .map(|(i, &id)| reconstruct_tour(&arena, id, &sys, i))
                .collect::<Result<Vec<_>>>()?;
            return Ok(TourResult {
                arena,
                phases,
                entries,
                front,
                tours,
            });
        };
        let arrivals: Vec<PathNode> = phase.harvested.iter().map(|&id| *arena.get(id)).collect();
        let ids_by_node: Vec<NodeId> = phase.harvested.clone();
        // Prune on the arrival states, then map back to the stored ids.
        let mut order: Vec<usize> = (0..arrivals.len()).collect();
        order.sort_by(|&a, &b| arrivals[a].total_cmp(&arrivals[b]));
        let sorted: Vec<PathNode> = order.iter().map(|&i| arrivals[i]).collect();
        let objs: Vec<ObjectiveVector> = sorted.iter().map(PathNode::objectives).collect();
        let to_params = *sys.moon(to);
        let keep = match settings.bins.as_ref() {
            Some(b) => {
                let alpha = |i: usize| {
                    astro::max_bend_angle(&to_params, sorted[i].v_inf_mps) * b.alpha_fraction
                };
                pareto_prune(&objs, Some((&b.widths, &alpha)))
            }
            None => pareto_prune(&objs, None),
        };
        initial = keep.into_iter().map(|k| ids_by_node[order[k]]).collect();
        log::info!(
            "{}: {} arrivals, {} kept for {}",
            moon.key(),
            arrivals.len(),
            initial.len(),
            to.key()
        );
        if let Some(dir) = &options.checkpoint_dir {
            checkpoint::write_checkpoint(&checkpoint::path_for(dir, moon), &arena, &initial)?;
        }
        entries.push((to, initial.clone()));
        phases.push(phase);
        moon = to;
    }
}
