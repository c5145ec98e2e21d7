//! Phase checkpoints: the ancestors of a hand-off front as CSV, enough to
//! resume the tour at the next moon and still reconstruct every path.
//!
//! Floats are written in shortest round-trip form so a resumed run
//! reproduces the uninterrupted one exactly.

use std::path::{Path, PathBuf};

use crate::astro::MoonId;
use crate::error::{Error, Result};
use crate::pathfinder::{NodeArena, NodeId, NodeLink, PathNode};
use crate::resonance::ResonanceFamily;
use crate::vilt::LegEstimate;

pub const CHECKPOINT_HEADER: [&str; 22] = [
    "id",
    "parent",
    "moon",
    "vinf_mps",
    "alpha_deg",
    "tof_days",
    "dv_mps",
    "flybys",
    "sign",
    "link",
    "M",
    "N",
    "p",
    "q",
    "leg_dv_mps",
    "leg_tof_days",
    "leg_vinf_dep_mps",
    "leg_vinf_arr_mps",
    "leg_alpha_dep_deg",
    "leg_alpha_arr_deg",
    "aux",
    "frontier",
];

pub fn path_for(dir: &Path, moon: MoonId) -> PathBuf {
    dir.join(format!("{}.csv", moon.key()))
}

fn row(id: usize, parent: Option<usize>, n: &PathNode, frontier: bool) -> Vec<String> {
    let f = |x: f64| format!("{x}");
    let mut r = vec![
        id.to_string(),
        parent.map(|p| p.to_string()).unwrap_or_default(),
        n.moon.key().to_string(),
        f(n.v_inf_mps),
        f(n.alpha_deg),
        f(n.tof_days),
        f(n.dv_mps),
        n.flybys.to_string(),
        n.sign.map(|s| s.to_string()).unwrap_or_default(),
    ];
    let empty = |k: usize| vec![String::new(); k];
    match n.link {
        NodeLink::Start => {
            r.push("start".into());
            r.extend(empty(11));
        }
        NodeLink::Leg { family, leg } => {
            r.push("leg".into());
            r.extend([family.m, family.n].map(|x| x.to_string()));
            r.extend([family.p, family.q].map(|x| x.to_string()));
            r.extend(
                [
                    leg.dv_mps,
                    leg.tof_days,
                    leg.v_inf_dep_mps,
                    leg.v_inf_arr_mps,
                    leg.alpha_dep_deg,
                    leg.alpha_arr_deg,
                ]
                .map(f),
            );
            r.push(String::new());
        }
        NodeLink::Handoff {
            from,
            alpha_dep_deg,
            rp_km,
        } => {
            r.push(format!("handoff:{}", from.key()));
            r.extend(empty(8));
            r.push(f(alpha_dep_deg));
            r.push(String::new());
            r.push(f(rp_km));
        }
        NodeLink::Insertion {
            dv_mps,
            altitude_km,
        } => {
            r.push("insertion".into());
            r.extend(empty(4));
            r.push(f(dv_mps));
            r.extend(empty(5));
            r.push(f(altitude_km));
        }
    }
    r.push(if frontier { "1" } else { "0" }.into());
    r
}

/// Write the ancestors of `frontier`, renumbered in arena order.
pub fn write_checkpoint(path: &Path, arena: &NodeArena, frontier: &[NodeId]) -> Result<()> {
    let mut keep = vec![false; arena.len()];
    let mut is_front = vec![false; arena.len()];
    for &id in frontier {
        is_front[id.0] = true;
        let mut cur = Some(id);
        while let Some(c) = cur {
            if keep[c.0] {
                break;
            }
            keep[c.0] = true;
            cur = arena.get(c).parent;
        }
    }
    let mut remap = vec![usize::MAX; arena.len()];
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(CHECKPOINT_HEADER).expect("in-memory write");
    let mut next = 0;
    for (id, node) in arena.iter() {
        if !keep[id.0] {
            continue;
        }
        remap[id.0] = next;
        let parent = node.parent.map(|p| remap[p.0]);
        w.write_record(row(next, parent, node, is_front[id.0]))
            .expect("in-memory write");
        next += 1;
    }
    let bytes = w.into_inner().expect("in-memory flush");
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Load a checkpoint: the node arena and the frontier ids, in file order.
pub fn read_checkpoint(path: &Path) -> Result<(NodeArena, Vec<NodeId>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_checkpoint(&text, path)
}

pub fn parse_checkpoint(text: &str, source: &Path) -> Result<(NodeArena, Vec<NodeId>)> {
    let bad = |line: usize, msg: String| Error::Parse {
        path: source.to_path_buf(),
        message: format!("line {line}: {msg}"),
    };
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header = rd.headers().map_err(|e| bad(1, e.to_string()))?;
    if header.iter().ne(CHECKPOINT_HEADER.iter().copied()) {
        return Err(bad(1, "unexpected header".into()));
    }
    let mut arena = NodeArena::new();
    let mut frontier = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| bad(line, e.to_string()))?;
        let get = |k: usize| rec.get(k).unwrap_or("");
        let num = |k: usize| -> Result<f64> {
            get(k)
                .parse::<f64>()
                .map_err(|_| bad(line, format!("{} is not a number", CHECKPOINT_HEADER[k])))
        };
        let int = |k: usize| -> Result<i64> {
            get(k)
                .parse::<i64>()
                .map_err(|_| bad(line, format!("{} is not an integer", CHECKPOINT_HEADER[k])))
        };
        let moon_of =
            |s: &str| MoonId::parse(s).ok_or_else(|| bad(line, format!("unknown moon {s}")));
        if int(0)? as usize != i {
            return Err(bad(line, "ids must be consecutive from 0".into()));
        }
        let parent = match get(1) {
            "" => None,
            _ => {
                let p = int(1)? as usize;
                if p >= i {
                    return Err(bad(line, "parent must precede its child".into()));
                }
                Some(NodeId(p))
            }
        };
        let sign = match get(8) {
            "" => None,
            "1" => Some(1),
            "-1" => Some(-1),
            s => return Err(bad(line, format!("bad sign {s}"))),
        };
        let link = match get(9) {
            "start" => NodeLink::Start,
            "leg" => {
                let orient = |k: usize| -> Result<i8> {
                    match int(k)? {
                        1 => Ok(1),
                        -1 => Ok(-1),
                        _ => Err(bad(line, "orientation must be 1 or -1".into())),
                    }
                };
                let (m, n) = (int(10)?, int(11)?);
                if m < 1 || n < 1 {
                    return Err(bad(line, "M and N must be positive".into()));
                }
                NodeLink::Leg {
                    family: ResonanceFamily::new(m as u32, n as u32, orient(12)?, orient(13)?),
                    leg: LegEstimate {
                        dv_mps: num(14)?,
                        tof_days: num(15)?,
                        v_inf_dep_mps: num(16)?,
                        v_inf_arr_mps: num(17)?,
                        alpha_dep_deg: num(18)?,
                        alpha_arr_deg: num(19)?,
                    },
                }
            }
            "insertion" => NodeLink::Insertion {
                dv_mps: num(14)?,
                altitude_km: num(20)?,
            },
            s => match s.strip_prefix("handoff:") {
                Some(from) => NodeLink::Handoff {
                    from: moon_of(from)?,
                    alpha_dep_deg: num(18)?,
                    rp_km: num(20)?,
                },
                None => return Err(bad(line, format!("unknown link {s}"))),
            },
        };
        let id = arena.push(PathNode {
            moon: moon_of(get(2))?,
            v_inf_mps: num(3)?,
            alpha_deg: num(4)?,
            tof_days: num(5)?,
            dv_mps: num(6)?,
            parent,
            link,
            flybys: int(7)? as u32,
            sign,
        });
        match get(21) {
            "1" => frontier.push(id),
            "0" => {}
            s => return Err(bad(line, format!("bad frontier flag {s}"))),
        }
    }
    Ok((arena, frontier))
}
