use std::collections::HashMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::{enumerate_tasks, Task, TaskKind, TileSymbolic};
use crate::ctsf::TileCoord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub struct DagStats {
    pub potrf: usize,
    pub trsm: usize,
    pub syrk: usize,
    pub gemm: usize,
    pub tasks: usize,
    pub edges: usize,
    /// Nodes on the longest dependency chain.
    pub critical_path: usize,
    /// Largest number of tasks sharing an earliest-start level.
    pub max_width: usize,
}

/// Precedence graph of the tile factorization.
#[derive(Debug, Clone)]
pub struct TaskDag {
    tasks: Vec<Task>,
    preds: Vec<Vec<usize>>,
}

impl TaskDag {
    /// A task depends on the last writer of each tile it reads or writes.
    pub fn build(s: &TileSymbolic) -> Self {
        let tasks = enumerate_tasks(s);
        let mut last_writer: HashMap<TileCoord, usize> = HashMap::new();
        let mut preds = Vec::with_capacity(tasks.len());
        for (i, t) in tasks.iter().enumerate() {
            let mut p: Vec<usize> = t
                .waits()
                .into_iter()
                .chain(std::iter::once(t.target()))
                .filter_map(|c| last_writer.get(&c).copied())
                .collect();
            p.sort_unstable();
            p.dedup();
            preds.push(p);
            last_writer.insert(t.target(), i);
        }
        TaskDag { tasks, preds }
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn predecessors(&self, i: usize) -> &[usize] {
        &self.preds[i]
    }

    pub fn edge_count(&self) -> usize {
        self.preds.iter().map(Vec::len).sum()
    }

    /// Earliest-start level of each task, starting at 1.
    pub fn levels(&self) -> Vec<usize> {
        let mut level = vec![0usize; self.tasks.len()];
        for i in 0..self.tasks.len() {
            level[i] = 1 + self.preds[i].iter().map(|&p| level[p]).max().unwrap_or(0);
        }
        level
    }

    pub fn stats(&self) -> DagStats {
        let count = |k: TaskKind| self.tasks.iter().filter(|t| t.kind == k).count();
        let levels = self.levels();
        let depth = levels.iter().copied().max().unwrap_or(0);
        let mut width = vec![0usize; depth + 1];
        for &l in &levels {
            width[l] += 1;
        }
        DagStats {
            potrf: count(TaskKind::Potrf),
            trsm: count(TaskKind::Trsm),
            syrk: count(TaskKind::Syrk),
            gemm: count(TaskKind::Gemm),
            tasks: self.tasks.len(),
            edges: self.edge_count(),
            critical_path: depth,
            max_width: width.into_iter().max().unwrap_or(0),
        }
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph tasks {\n");
        for (i, t) in self.tasks.iter().enumerate() {
            let color = match t.kind {
                TaskKind::Potrf => "green",
                TaskKind::Trsm => "blue",
                TaskKind::Syrk => "red",
                TaskKind::Gemm => "yellow",
            };
            let _ = writeln!(out, "  t{i} [label=\"{t}\", style=filled, fillcolor={color}];");
        }
        for (i, p) in self.preds.iter().enumerate() {
            for &j in p {
                let _ = writeln!(out, "  t{j} -> t{i};");
            }
        }
        out.push_str("}\n");
        out
    }
}

pub fn dag_stats(s: &TileSymbolic) -> DagStats {
    TaskDag::build(s).stats()
}
