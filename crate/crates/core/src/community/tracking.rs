//! Matching communities between consecutive snapshots.
//!
//! A year-t community `A` is linked to every year-t+1 community `B` with
//! `|A ∩ B| / |A| >= threshold`. Classification per source:
//! no link → disappear; several links → split; a single link to `B` → merge
//! when `B` is linked from two or more sources, continue otherwise. Targets
//! with no incoming link appear.

use std::fmt::Write as _;

use super::CommunityPartition;
use crate::error::{Error, Result};
use crate::fmt::real;

pub const DEFAULT_OVERLAP_THRESHOLD: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EventKind {
    Continue,
    Merge,
    Split,
    Disappear,
    Appear,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Continue => "continue",
            EventKind::Merge => "merge",
            EventKind::Split => "split",
            EventKind::Disappear => "disappear",
            EventKind::Appear => "appear",
        }
    }
}

/// `overlaps` align with `sources` for merges and with `targets` otherwise;
/// appear events carry none.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionEvent {
    pub kind: EventKind,
    pub sources: Vec<usize>,
    pub targets: Vec<usize>,
    pub overlaps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionReport {
    pub from_label: String,
    pub to_label: String,
    pub events: Vec<TransitionEvent>,
}

impl TransitionReport {
    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    /// `kind,src_ids,dst_ids,overlaps`; lists are `;`-separated.
    pub fn to_csv(&self) -> String {
        let join_ids = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";");
        let mut out = String::from("kind,src_ids,dst_ids,overlaps\n");
        for e in &self.events {
            let overlaps: Vec<String> = e.overlaps.iter().map(|&o| real(o)).collect();
            let _ = writeln!(
                out,
                "{},{},{},{}",
                e.kind.as_str(),
                join_ids(&e.sources),
                join_ids(&e.targets),
                overlaps.join(";")
            );
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = format!("transitions {} -> {}\n", self.from_label, self.to_label);
        let _ = writeln!(out, "{:<10} {:<16} {:<16} overlaps", "kind", "from", "to");
        let ids = |v: &[usize]| {
            if v.is_empty() {
                "-".to_string()
            } else {
                v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
            }
        };
        for e in &self.events {
            let overlaps: Vec<String> = e.overlaps.iter().map(|o| format!("{o:.3}")).collect();
            let _ = writeln!(
                out,
                "{:<10} {:<16} {:<16} {}",
                e.kind.as_str(),
                ids(&e.sources),
                ids(&e.targets),
                overlaps.join(",")
            );
        }
        out
    }
}

pub fn track_communities(
    part_t: &CommunityPartition,
    part_t1: &CommunityPartition,
    threshold: f64,
) -> Result<TransitionReport> {
    if part_t.assignment.len() != part_t1.assignment.len() {
        return Err(Error::validation(format!(
            "partitions cover different node sets ({} vs {} nodes)",
            part_t.assignment.len(),
            part_t1.assignment.len()
        )));
    }
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::validation(format!("overlap threshold must lie in (0, 1], got {threshold}")));
    }
    let (na, nb) = (part_t.community_count(), part_t1.community_count());
    let mut inter = vec![vec![0usize; nb]; na];
    let mut size_a = vec![0usize; na];
    for (&a, &b) in part_t.assignment.iter().zip(&part_t1.assignment) {
        inter[a][b] += 1;
        size_a[a] += 1;
    }

    let links: Vec<Vec<(usize, f64)>> = (0..na)
        .map(|a| {
            (0..nb)
                .filter_map(|b| {
                    let o = inter[a][b] as f64 / size_a[a] as f64;
                    (inter[a][b] > 0 && o >= threshold).then_some((b, o))
                })
                .collect()
        })
        .collect();
    let mut incoming = vec![0usize; nb];
    for l in &links {
        for &(b, _) in l {
            incoming[b] += 1;
        }
    }

    let mut events = Vec::new();
    let mut merge_sources: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nb];
    for (a, l) in links.iter().enumerate() {
        match l.as_slice() {
            [] => events.push(TransitionEvent {
                kind: EventKind::Disappear,
                sources: vec![a],
                targets: Vec::new(),
                overlaps: Vec::new(),
            }),
            [(b, o)] if incoming[*b] >= 2 => merge_sources[*b].push((a, *o)),
            [(b, o)] => events.push(TransitionEvent {
                kind: EventKind::Continue,
                sources: vec![a],
                targets: vec![*b],
                overlaps: vec![*o],
            }),
            many => events.push(TransitionEvent {
                kind: EventKind::Split,
                sources: vec![a],
                targets: many.iter().map(|&(b, _)| b).collect(),
                overlaps: many.iter().map(|&(_, o)| o).collect(),
            }),
        }
    }
    for (b, srcs) in merge_sources.into_iter().enumerate() {
        if !srcs.is_empty() {
            events.push(TransitionEvent {
                kind: EventKind::Merge,
                sources: srcs.iter().map(|&(a, _)| a).collect(),
                targets: vec![b],
                overlaps: srcs.iter().map(|&(_, o)| o).collect(),
            });
        }
    }
    for (b, &k) in incoming.iter().enumerate() {
        if k == 0 {
            events.push(TransitionEvent {
                kind: EventKind::Appear,
                sources: Vec::new(),
                targets: vec![b],
                overlaps: Vec::new(),
            });
        }
    }
    events.sort_by(|x, y| (x.kind, &x.sources, &x.targets).cmp(&(y.kind, &y.sources, &y.targets)));

    Ok(TransitionReport { from_label: part_t.label.clone(), to_label: part_t1.label.clone(), events })
}
