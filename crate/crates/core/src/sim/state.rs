use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::NetworkTopology;

/// Library file identifier. Ids are 1-based popularity ranks: file 1 is the
/// most popular.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FileId(pub u32);

impl FileId {
    pub fn from_index(index: usize) -> Self {
        FileId(index as u32 + 1)
    }

    /// 0-based position in the library.
    pub fn index(self) -> usize {
        debug_assert!(self.0 >= 1, "file ids are 1-based");
        self.0 as usize - 1
    }
}

impl std::fmt::Display for FileId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Bookkeeping used by the replacement baselines.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotMeta {
    pub last_access: u64,
    pub frequency: u64,
    pub inserted_at: u64,
}

/// Slot-addressed edge caches; `x[e][f] = 1` iff some slot of `e` holds `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheState {
    num_files: usize,
    slots: Vec<Vec<Option<FileId>>>,
    meta: Vec<Vec<SlotMeta>>,
    clock: u64,
}

impl CacheState {
    pub fn empty(num_edges: usize, slots: usize, num_files: usize) -> Self {
        Self {
            num_files,
            slots: vec![vec![None; slots]; num_edges],
            meta: vec![vec![SlotMeta::default(); slots]; num_edges],
            clock: 0,
        }
    }

    /// Fully warmed caches from explicit per-edge file lists.
    pub fn from_files(files: &[Vec<FileId>], num_files: usize) -> Self {
        let slots = files.first().map_or(0, Vec::len);
        let mut cache = Self::empty(files.len(), slots, num_files);
        for (e, row) in files.iter().enumerate() {
            assert_eq!(row.len(), slots, "ragged cache rows");
            for (k, &f) in row.iter().enumerate() {
                cache.slots[e][k] = Some(f);
            }
        }
        cache
    }

    /// Every edge filled with `slots` distinct files drawn uniformly.
    pub fn random_full<R: Rng + ?Sized>(
        num_edges: usize,
        slots: usize,
        num_files: usize,
        rng: &mut R,
    ) -> Self {
        let files: Vec<Vec<FileId>> = (0..num_edges)
            .map(|_| {
                sample(rng, num_files, slots)
                    .into_iter()
                    .map(FileId::from_index)
                    .collect()
            })
            .collect();
        Self::from_files(&files, num_files)
    }

    pub fn num_edges(&self) -> usize {
        self.slots.len()
    }

    pub fn num_slots(&self) -> usize {
        self.slots.first().map_or(0, Vec::len)
    }

    pub fn num_files(&self) -> usize {
        self.num_files
    }

    pub fn slot(&self, edge: usize, slot: usize) -> Option<FileId> {
        self.slots[edge][slot]
    }

    pub fn slots(&self, edge: usize) -> &[Option<FileId>] {
        &self.slots[edge]
    }

    pub fn meta(&self, edge: usize, slot: usize) -> SlotMeta {
        self.meta[edge][slot]
    }

    pub fn meta_mut(&mut self, edge: usize, slot: usize) -> &mut SlotMeta {
        &mut self.meta[edge][slot]
    }

    /// Writes `file` into `slot`, resetting its metadata to a fresh insertion.
    pub fn set_slot(&mut self, edge: usize, slot: usize, file: Option<FileId>) {
        self.slots[edge][slot] = file;
        let now = self.clock;
        self.meta[edge][slot] = SlotMeta {
            last_access: now,
            frequency: u64::from(file.is_some()),
            inserted_at: now,
        };
    }

    /// Advances and returns the logical clock used for recency metadata.
    pub fn tick(&mut self) -> u64 {
        self.clock += 1;
        self.clock
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    /// `x[e][f]`.
    pub fn holds(&self, edge: usize, file: FileId) -> bool {
        self.slots[edge].contains(&Some(file))
    }

    pub fn slot_of(&self, edge: usize, file: FileId) -> Option<usize> {
        self.slots[edge].iter().position(|s| *s == Some(file))
    }

    pub fn files(&self, edge: usize) -> impl Iterator<Item = FileId> + '_ {
        self.slots[edge].iter().flatten().copied()
    }

    pub fn occupied(&self, edge: usize) -> usize {
        self.slots[edge].iter().flatten().count()
    }

    /// Cached file ids per edge, in slot order.
    pub fn file_lists(&self) -> Vec<Vec<FileId>> {
        (0..self.num_edges()).map(|e| self.files(e).collect()).collect()
    }

    /// Row `e` of `x` as a 0/1 count per file. Entries above 1 would mean a
    /// duplicated file.
    pub fn indicator_row(&self, edge: usize) -> Vec<u32> {
        let mut row = vec![0u32; self.num_files];
        for f in self.files(edge) {
            if f.index() < self.num_files {
                row[f.index()] += 1;
            }
        }
        row
    }

    /// Same slots, ignoring replacement metadata.
    pub fn same_contents(&self, other: &CacheState) -> bool {
        self.slots == other.slots
    }
}

/// One active request per user (`z`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestState {
    files: Vec<FileId>,
}

impl RequestState {
    pub fn new(files: Vec<FileId>) -> Self {
        Self { files }
    }

    pub fn files(&self) -> &[FileId] {
        &self.files
    }

    pub fn file(&self, user: usize) -> FileId {
        self.files[user]
    }

    pub fn num_users(&self) -> usize {
        self.files.len()
    }

    /// `z[u][f]`.
    pub fn requests(&self, user: usize, file: FileId) -> bool {
        self.files[user] == file
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    Single,
    Joint,
    Cloud,
}

/// User association `y` plus the transmission mode of every user.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssociationState {
    /// `links[u]`: ascending servers with `y[e][u] = 1`.
    links: Vec<Vec<usize>>,
    modes: Vec<Mode>,
    num_edges: usize,
}

impl AssociationState {
    /// Everyone served by the cloud.
    pub fn all_cloud(num_edges: usize, num_users: usize) -> Self {
        Self {
            links: vec![Vec::new(); num_users],
            modes: vec![Mode::Cloud; num_users],
            num_edges,
        }
    }

    /// Builds an association from explicit server sets; the mode follows the
    /// link count.
    pub fn from_links(num_edges: usize, mut links: Vec<Vec<usize>>) -> Self {
        let modes = links
            .iter_mut()
            .map(|l| {
                l.sort_unstable();
                l.dedup();
                match l.len() {
                    0 => Mode::Cloud,
                    1 => Mode::Single,
                    _ => Mode::Joint,
                }
            })
            .collect();
        Self {
            links,
            modes,
            num_edges,
        }
    }

    pub fn num_users(&self) -> usize {
        self.links.len()
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    /// `y[e][u]`.
    pub fn linked(&self, edge: usize, user: usize) -> bool {
        self.links[user].binary_search(&edge).is_ok()
    }

    pub fn servers_of(&self, user: usize) -> &[usize] {
        &self.links[user]
    }

    pub fn mode(&self, user: usize) -> Mode {
        self.modes[user]
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn set_links(&mut self, user: usize, mut servers: Vec<usize>) {
        servers.sort_unstable();
        servers.dedup();
        self.modes[user] = match servers.len() {
            0 => Mode::Cloud,
            1 => Mode::Single,
            _ => Mode::Joint,
        };
        self.links[user] = servers;
    }

    pub fn link_count(&self) -> usize {
        self.links.iter().map(Vec::len).sum()
    }

    /// Every link points at a covering server; modes agree with link counts.
    pub fn respects(&self, topology: &NetworkTopology) -> bool {
        self.links.len() == topology.num_users()
            && self.links.iter().enumerate().all(|(u, l)| {
                l.iter().all(|&e| e < self.num_edges && topology.covers(e, u))
                    && match self.modes[u] {
                        Mode::Cloud => l.is_empty(),
                        Mode::Single => l.len() == 1,
                        Mode::Joint => l.len() >= 2,
                    }
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    #[test]
    fn random_full_caches_are_distinct() {
        let mut rng = stream(5, Stream::InitialCache);
        let cache = CacheState::random_full(3, 10, 50, &mut rng);
        for e in 0..3 {
            assert_eq!(cache.occupied(e), 10);
            assert!(cache.indicator_row(e).iter().all(|&c| c <= 1));
        }
    }

    #[test]
    fn association_modes_follow_link_count() {
        let a = AssociationState::from_links(3, vec![vec![], vec![2], vec![1, 0]]);
        assert_eq!(a.modes(), &[Mode::Cloud, Mode::Single, Mode::Joint]);
        assert!(a.linked(0, 2) && a.linked(1, 2) && !a.linked(2, 2));
        assert_eq!(a.link_count(), 3);
    }

    #[test]
    fn file_ids_are_one_based() {
        assert_eq!(FileId::from_index(0), FileId(1));
        assert_eq!(FileId(50).index(), 49);
    }
}
