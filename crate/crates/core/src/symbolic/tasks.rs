use serde::Serialize;

use super::TileSymbolic;
use crate::ctsf::TileCoord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TaskKind {
    Potrf = 1,
    Syrk = 2,
    Trsm = 3,
    Gemm = 4,
}

impl TaskKind {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Potrf => "POTRF",
            TaskKind::Syrk => "SYRK",
            TaskKind::Trsm => "TRSM",
            TaskKind::Gemm => "GEMM",
        }
    }

    /// SYRK and GEMM add into their target; POTRF and TRSM finalize it.
    pub fn is_accumulation(self) -> bool {
        matches!(self, TaskKind::Syrk | TaskKind::Gemm)
    }
}

/// One tile kernel invocation.
///
/// `k` is the step (tile column of the target). For SYRK and GEMM, `n` is
/// the source column. POTRF has `m = k`; POTRF and TRSM carry `n = k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Task {
    pub m: usize,
    pub k: usize,
    pub n: usize,
    #[serde(rename = "type")]
    pub kind: TaskKind,
}

impl Task {
    pub fn potrf(k: usize) -> Self {
        Task { m: k, k, n: k, kind: TaskKind::Potrf }
    }

    pub fn syrk(k: usize, n: usize) -> Self {
        Task { m: k, k, n, kind: TaskKind::Syrk }
    }

    pub fn trsm(m: usize, k: usize) -> Self {
        Task { m, k, n: k, kind: TaskKind::Trsm }
    }

    pub fn gemm(m: usize, k: usize, n: usize) -> Self {
        Task { m, k, n, kind: TaskKind::Gemm }
    }

    /// The tile this task writes.
    pub fn target(&self) -> TileCoord {
        TileCoord::new(self.m, self.k)
    }

    /// Finalized tiles this task reads; each must be published first.
    pub fn waits(&self) -> Vec<TileCoord> {
        match self.kind {
            TaskKind::Potrf => Vec::new(),
            TaskKind::Syrk => vec![TileCoord::new(self.k, self.n)],
            TaskKind::Trsm => vec![TileCoord::new(self.k, self.k)],
            TaskKind::Gemm => vec![TileCoord::new(self.k, self.n), TileCoord::new(self.m, self.n)],
        }
    }

    /// Flag set on completion.
    pub fn publishes(&self) -> Option<TileCoord> {
        (!self.kind.is_accumulation()).then(|| self.target())
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            TaskKind::Potrf => write!(f, "POTRF({})", self.k),
            TaskKind::Trsm => write!(f, "TRSM({},{})", self.m, self.k),
            TaskKind::Syrk => write!(f, "SYRK({},{};{})", self.m, self.k, self.n),
            TaskKind::Gemm => write!(f, "GEMM({},{};{})", self.m, self.k, self.n),
        }
    }
}

/// All tasks writing one tile: its accumulations followed by the finalizer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaskGroup {
    pub target: TileCoord,
    pub owner: usize,
    pub tasks: Vec<Task>,
}

impl TaskGroup {
    pub fn accumulations(&self) -> &[Task] {
        &self.tasks[..self.tasks.len() - 1]
    }

    pub fn finalizer(&self) -> Task {
        self.tasks[self.tasks.len() - 1]
    }
}

/// Task groups in global target order with owner 0.
pub fn task_groups(s: &TileSymbolic) -> Vec<TaskGroup> {
    s.targets()
        .map(|target| {
            let (m, k) = (target.row, target.col);
            let mut tasks: Vec<Task> = s
                .accumulations(target)
                .into_iter()
                .map(|n| if m == k { Task::syrk(k, n) } else { Task::gemm(m, k, n) })
                .collect();
            tasks.push(if m == k { Task::potrf(k) } else { Task::trsm(m, k) });
            TaskGroup { target, owner: 0, tasks }
        })
        .collect()
}

/// Left-looking task order.
pub fn enumerate_tasks(s: &TileSymbolic) -> Vec<Task> {
    task_groups(s).into_iter().flat_map(|g| g.tasks).collect()
}

/// Static per-worker schedule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaskTable {
    workers: usize,
    groups: Vec<TaskGroup>,
    lists: Vec<Vec<Task>>,
}

/// Round-robin tile ownership over the global target order.
pub fn build_task_table(s: &TileSymbolic, workers: usize) -> TaskTable {
    let workers = workers.max(1);
    let mut groups = task_groups(s);
    let mut lists = vec![Vec::new(); workers];
    for (ordinal, g) in groups.iter_mut().enumerate() {
        g.owner = ordinal % workers;
        lists[g.owner].extend_from_slice(&g.tasks);
    }
    TaskTable { workers, groups, lists }
}

impl TaskTable {
    pub fn worker_count(&self) -> usize {
        self.workers
    }

    pub fn groups(&self) -> &[TaskGroup] {
        &self.groups
    }

    pub fn list(&self, worker: usize) -> &[Task] {
        &self.lists[worker]
    }

    pub fn lists(&self) -> &[Vec<Task>] {
        &self.lists
    }

    pub fn owner(&self, target: TileCoord) -> Option<usize> {
        self.groups.iter().find(|g| g.target == target).map(|g| g.owner)
    }

    pub fn task_count(&self) -> usize {
        self.lists.iter().map(Vec::len).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctsf::TileGrid;
    use crate::symbolic::tile_symbolic_factorize;

    fn sym(t: usize, tiles: &[(usize, usize)]) -> TileSymbolic {
        let g = TileGrid::from_occupancy(t, 1, tiles.iter().map(|&(r, c)| TileCoord::new(r, c))).unwrap();
        tile_symbolic_factorize(&g)
    }

    fn dense(t: usize) -> TileSymbolic {
        let all: Vec<_> = (0..t).flat_map(|c| (c..t).map(move |r| (r, c))).collect();
        sym(t, &all)
    }

    fn count(tasks: &[Task], kind: TaskKind) -> usize {
        tasks.iter().filter(|t| t.kind == kind).count()
    }

    #[test]
    fn single_tile() {
        assert_eq!(enumerate_tasks(&sym(1, &[])), vec![Task::potrf(0)]);
    }

    #[test]
    fn two_by_two_dense() {
        assert_eq!(
            enumerate_tasks(&dense(2)),
            vec![Task::potrf(0), Task::trsm(1, 0), Task::syrk(1, 0), Task::potrf(1)]
        );
    }

    #[test]
    fn tile_arrowhead_three() {
        let tasks = enumerate_tasks(&sym(3, &[(2, 0), (2, 1)]));
        assert_eq!(count(&tasks, TaskKind::Gemm), 0);
        let into_last = tasks.iter().filter(|t| t.kind == TaskKind::Syrk && t.k == 2).count();
        assert_eq!(into_last, 2);
    }

    #[test]
    fn dense_six_totals() {
        let tasks = enumerate_tasks(&dense(6));
        let t = 6;
        assert_eq!(count(&tasks, TaskKind::Potrf), t);
        assert_eq!(count(&tasks, TaskKind::Trsm), t * (t - 1) / 2);
        assert_eq!(count(&tasks, TaskKind::Syrk), t * (t - 1) / 2);
        assert_eq!(count(&tasks, TaskKind::Gemm), t * (t - 1) * (t - 2) / 6);
    }

    #[test]
    fn ownership_round_robin() {
        let tt = build_task_table(&dense(2), 2);
        assert_eq!(tt.owner(TileCoord::new(0, 0)), Some(0));
        assert_eq!(tt.owner(TileCoord::new(1, 0)), Some(1));
        assert_eq!(tt.owner(TileCoord::new(1, 1)), Some(0));
    }

    #[test]
    fn single_worker_list_is_global_order() {
        let s = dense(5);
        assert_eq!(build_task_table(&s, 1).list(0), enumerate_tasks(&s).as_slice());
    }

    #[test]
    fn lists_partition_and_keep_step_order() {
        let s = sym(8, &[(7, 0), (7, 1), (7, 2), (3, 2), (5, 4), (6, 5), (7, 6), (4, 1)]);
        let all = enumerate_tasks(&s);
        for workers in 1..6 {
            let tt = build_task_table(&s, workers);
            let mut union: Vec<String> = tt.lists().iter().flatten().map(Task::to_string).collect();
            let mut expect: Vec<String> = all.iter().map(Task::to_string).collect();
            union.sort();
            expect.sort();
            assert_eq!(union, expect);
            for list in tt.lists() {
                assert!(list.windows(2).all(|w| w[0].k <= w[1].k));
            }
            // Each group sits contiguously on its owner.
            for g in tt.groups() {
                let list = tt.list(g.owner);
                let start = list.iter().position(|t| *t == g.tasks[0]).unwrap();
                assert_eq!(&list[start..start + g.tasks.len()], g.tasks.as_slice());
            }
        }
    }

    #[test]
    fn waits_and_publishes() {
        assert_eq!(Task::gemm(5, 3, 1).waits(), vec![TileCoord::new(3, 1), TileCoord::new(5, 1)]);
        assert_eq!(Task::syrk(3, 1).waits(), vec![TileCoord::new(3, 1)]);
        assert_eq!(Task::syrk(3, 1).publishes(), None);
        assert_eq!(Task::trsm(4, 2).publishes(), Some(TileCoord::new(4, 2)));
    }
}
