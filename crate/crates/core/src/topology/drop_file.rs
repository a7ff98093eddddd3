//! Plain-text drop files: one line per site or user, so a drop can be
//! frozen, diffed, and reloaded for reproduction runs.

use super::{CellId, ClusterLayout, Direction, NodeSet, UeId, UeNode};
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DropFileError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Render a drop to its text form.
pub fn render_drop(layout: &ClusterLayout, nodes: &NodeSet) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# drop v1");
    let _ = writeln!(s, "isd_m {}", layout.isd_m);
    let _ = writeln!(s, "cell_radius_m {}", layout.cell_radius_m);
    for (i, p) in layout.bs_pos.iter().enumerate() {
        let _ = writeln!(s, "bs {} {:.6} {:.6}", i, p[0], p[1]);
    }
    for ue in &nodes.ues {
        let _ = writeln!(
            s,
            "ue {} {:.6} {:.6} {} {}",
            ue.id.0,
            ue.pos[0],
            ue.pos[1],
            ue.serving.0,
            ue.direction.as_str()
        );
    }
    s
}

/// Parse the text form back into a drop.
pub fn parse_drop(text: &str) -> Result<(ClusterLayout, NodeSet), DropFileError> {
    let mut isd_m = None;
    let mut cell_radius_m = None;
    let mut bs_pos: Vec<(usize, [f64; 2])> = Vec::new();
    let mut ues = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut parts = t.split_whitespace();
        let tag = parts.next().unwrap();
        let mut next = |what: &str| -> Result<String, DropFileError> {
            parts
                .next()
                .map(str::to_string)
                .ok_or_else(|| DropFileError::Parse {
                    line,
                    reason: format!("missing {what}"),
                })
        };
        let parse_f = |s: String, what: &str| -> Result<f64, DropFileError> {
            s.parse().map_err(|_| DropFileError::Parse {
                line,
                reason: format!("bad {what}: {s}"),
            })
        };
        match tag {
            "isd_m" => isd_m = Some(parse_f(next("value")?, "isd_m")?),
            "cell_radius_m" => cell_radius_m = Some(parse_f(next("value")?, "cell_radius_m")?),
            "bs" => {
                let id: usize =
                    next("id")?
                        .parse()
                        .map_err(|_| DropFileError::Parse {
                            line,
                            reason: "bad bs id".into(),
                        })?;
                let x = parse_f(next("x")?, "x")?;
                let y = parse_f(next("y")?, "y")?;
                bs_pos.push((id, [x, y]));
            }
            "ue" => {
                let id: u32 = next("id")?
                    .parse()
                    .map_err(|_| DropFileError::Parse {
                        line,
                        reason: "bad ue id".into(),
                    })?;
                let x = parse_f(next("x")?, "x")?;
                let y = parse_f(next("y")?, "y")?;
                let serving: u16 =
                    next("serving")?
                        .parse()
                        .map_err(|_| DropFileError::Parse {
                            line,
                            reason: "bad serving cell".into(),
                        })?;
                let dir = match next("direction")?.as_str() {
                    "dl" => Direction::Dl,
                    "ul" => Direction::Ul,
                    other => {
                        return Err(DropFileError::Parse {
                            line,
                            reason: format!("bad direction: {other}"),
                        })
                    }
                };
                ues.push(UeNode {
                    id: UeId(id),
                    serving: CellId(serving),
                    pos: [x, y],
                    direction: dir,
                });
            }
            other => {
                return Err(DropFileError::Parse {
                    line,
                    reason: format!("unknown record: {other}"),
                })
            }
        }
    }
    let isd_m = isd_m.ok_or(DropFileError::Parse {
        line: 0,
        reason: "missing isd_m".into(),
    })?;
    let cell_radius_m = cell_radius_m.ok_or(DropFileError::Parse {
        line: 0,
        reason: "missing cell_radius_m".into(),
    })?;
    bs_pos.sort_by_key(|(id, _)| *id);
    for (want, (got, _)) in bs_pos.iter().enumerate() {
        if *got != want {
            return Err(DropFileError::Parse {
                line: 0,
                reason: format!("bs ids must be dense from 0, missing {want}"),
            });
        }
    }
    ues.sort_by_key(|u| u.id.0);
    Ok((
        ClusterLayout {
            isd_m,
            cell_radius_m,
            bs_pos: bs_pos.into_iter().map(|(_, p)| p).collect(),
        },
        NodeSet { ues },
    ))
}

pub fn dump_drop(
    path: &Path,
    layout: &ClusterLayout,
    nodes: &NodeSet,
) -> Result<(), DropFileError> {
    std::fs::write(path, render_drop(layout, nodes))?;
    Ok(())
}

pub fn load_drop(path: &Path) -> Result<(ClusterLayout, NodeSet), DropFileError> {
    parse_drop(&std::fs::read_to_string(path)?)
}
