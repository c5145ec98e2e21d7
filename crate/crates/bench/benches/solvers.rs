use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use moontour_core::pathfinder::{branch, pareto_prune, BranchLimits, MoonGraph, NodeId, PathNode};
use moontour_core::resonance::{ballistic, ballistic_case2, ResonanceFamily};
use moontour_core::vilt::{solve_leg, LegProblem};
use moontour_core::{MoonId, SystemModel};
use moontour_perf::{objective_cloud, rhea_database};
use std::hint::black_box;

fn ballistic_solvers(c: &mut Criterion) {
    let sys = SystemModel::saturn();
    let rhea = *sys.moon(MoonId::Rhea);
    let fam = ResonanceFamily::new(7, 4, 1, -1);
    c.bench_function("case2 rhea 7:4 (+,-)", |b| {
        b.iter(|| ballistic_case2(black_box(fam), &rhea, &sys, black_box(1400.0)))
    });
    let sym = ResonanceFamily::new(7, 4, 1, 1);
    c.bench_function("case1 rhea 7:4 (+,+)", |b| {
        b.iter(|| ballistic(black_box(sym), &rhea, &sys, black_box(1400.0)))
    });
}

fn leg_solver(c: &mut Criterion) {
    let sys = SystemModel::saturn();
    let mut g = c.benchmark_group("solve_leg");
    for (moon, fam, v) in [
        (MoonId::Rhea, ResonanceFamily::new(13, 9, 1, 1), 890.0),
        (MoonId::Titan, ResonanceFamily::new(1, 1, 1, -1), 1320.0),
    ] {
        let p = LegProblem {
            family: fam,
            moon,
            v_inf_mps: v,
            dv_inf_mps: 5.0,
        };
        g.bench_with_input(
            BenchmarkId::from_parameter(format!("{} {fam}", moon.key())),
            &p,
            |b, p| b.iter(|| solve_leg(black_box(p), &sys)),
        );
    }
    g.finish();
}

fn pruning(c: &mut Criterion) {
    let mut g = c.benchmark_group("pareto_prune");
    for n in [100, 1000, 5000] {
        let pts = objective_cloud(n, 7);
        g.bench_with_input(BenchmarkId::from_parameter(n), &pts, |b, pts| {
            b.iter(|| pareto_prune(black_box(pts), None))
        });
    }
    g.finish();
}

fn branching(c: &mut Criterion) {
    let sys = SystemModel::saturn();
    let db = rhea_database(60.0);
    let graph = MoonGraph::new(&db, &sys, 30.0);
    let limits = BranchLimits {
        dv_cap_mps: 100.0,
        tof_cap_days: 3.0 * 365.25,
        max_flybys: 40,
    };
    let alpha = ballistic(
        ResonanceFamily::new(1, 1, 1, 1),
        sys.moon(MoonId::Rhea),
        &sys,
        920.0,
    )
    .map(|s| s.alpha_deg)
    .unwrap_or(90.0);
    let node = PathNode::start(MoonId::Rhea, 920.0, alpha);
    c.bench_function("branch rhea node", |b| {
        b.iter(|| branch(black_box(&node), NodeId(0), &graph, &limits))
    });
}

criterion_group!(benches, ballistic_solvers, leg_solver, pruning, branching);
criterion_main!(benches);
