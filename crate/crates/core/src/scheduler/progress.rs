use std::collections::HashMap;
use std::hint;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Condvar, Mutex, PoisonError};
use std::thread;

use crate::ctsf::TileCoord;
use crate::error::{Error, Result};

const SPINS: usize = 256;
const YIELDS: usize = 32;

/// Monotonic one-shot flags with blocking waits and a shared abort switch.
///
/// A waiter spins briefly, then yields, then sleeps on a condition variable.
/// Setters only touch the mutex when someone is asleep; the `SeqCst`
/// store/load pair on the flag and the sleeper count rules out a missed
/// wakeup.
#[derive(Debug)]
pub(crate) struct Flags {
    flags: Box<[AtomicBool]>,
    sleepers: AtomicUsize,
    lock: Mutex<()>,
    cv: Condvar,
    abort: AtomicBool,
    spins: usize,
}

impl Flags {
    pub(crate) fn new(count: usize) -> Self {
        // Spinning on a single hardware thread only delays the publisher.
        let multi = thread::available_parallelism().map_or(1, |n| n.get()) > 1;
        Flags {
            flags: (0..count).map(|_| AtomicBool::new(false)).collect(),
            sleepers: AtomicUsize::new(0),
            lock: Mutex::new(()),
            cv: Condvar::new(),
            abort: AtomicBool::new(false),
            spins: if multi { SPINS } else { 0 },
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.flags.len()
    }

    pub(crate) fn is_set(&self, i: usize) -> bool {
        self.flags[i].load(Ordering::Acquire)
    }

    pub(crate) fn set(&self, i: usize) {
        self.flags[i].store(true, Ordering::SeqCst);
        self.wake();
    }

    fn wake(&self) {
        if self.sleepers.load(Ordering::SeqCst) > 0 {
            let _g = self.lock.lock().unwrap_or_else(PoisonError::into_inner);
            self.cv.notify_all();
        }
    }

    pub(crate) fn abort(&self) {
        self.abort.store(true, Ordering::SeqCst);
        self.wake();
    }

    pub(crate) fn is_aborted(&self) -> bool {
        self.abort.load(Ordering::Acquire)
    }

    /// Blocks until flag `i` is set. Everything written before the matching
    /// `set` is visible on return.
    pub(crate) fn wait(&self, i: usize) -> Result<()> {
        let flag = &self.flags[i];
        for _ in 0..self.spins {
            if flag.load(Ordering::Acquire) {
                return Ok(());
            }
            hint::spin_loop();
        }
        for _ in 0..YIELDS {
            if flag.load(Ordering::Acquire) {
                return Ok(());
            }
            if self.is_aborted() {
                return Err(Error::Aborted);
            }
            thread::yield_now();
        }
        self.sleepers.fetch_add(1, Ordering::SeqCst);
        let mut g = self.lock.lock().unwrap_or_else(PoisonError::into_inner);
        let out = loop {
            if flag.load(Ordering::SeqCst) {
                break Ok(());
            }
            if self.abort.load(Ordering::SeqCst) {
                break Err(Error::Aborted);
            }
            g = self.cv.wait(g).unwrap_or_else(PoisonError::into_inner);
        };
        drop(g);
        self.sleepers.fetch_sub(1, Ordering::SeqCst);
        out
    }
}

/// Completion flags of the factor tiles.
#[derive(Debug)]
pub struct ProgressTable {
    index: HashMap<TileCoord, usize>,
    tiles: usize,
    flags: Flags,
}

impl ProgressTable {
    pub fn new(coords: impl IntoIterator<Item = TileCoord>) -> Self {
        let index: HashMap<TileCoord, usize> = coords.into_iter().enumerate().map(|(s, c)| (c, s)).collect();
        let tiles = index.len();
        ProgressTable { index, tiles, flags: Flags::new(tiles) }
    }

    fn slot(&self, m: usize, k: usize) -> usize {
        *self.index.get(&TileCoord::new(m, k)).unwrap_or_else(|| panic!("tile ({m}, {k}) has no progress flag"))
    }

    pub fn publish_flag(&self, m: usize, k: usize) {
        self.flags.set(self.slot(m, k));
    }

    /// Returns once `(m, k)` is published, or `Err(Aborted)` if the run was
    /// aborted first.
    ///
    /// # Panics
    /// If `(m, k)` is not a factor tile.
    pub fn wait_flag(&self, m: usize, k: usize) -> Result<()> {
        self.flags.wait(self.slot(m, k))
    }

    pub fn is_published(&self, m: usize, k: usize) -> bool {
        self.flags.is_set(self.slot(m, k))
    }

    pub fn published_count(&self) -> usize {
        (0..self.tiles).filter(|&s| self.flags.is_set(s)).count()
    }

    pub fn abort(&self) {
        self.flags.abort();
    }

    pub fn is_aborted(&self) -> bool {
        self.flags.is_aborted()
    }
}
