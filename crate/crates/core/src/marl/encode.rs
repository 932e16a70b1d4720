//! Fixed-size encodings of the caching game for the approximators.
//!
//! Observation of edge `e`: the histogram of files requested by its covered
//! users (normalised by the user count) followed by its own cache as a
//! slot × file one-hot block.
//!
//! Critic input: for every edge, the request histogram and the 0/1 file mask
//! of the cache *after* the joint action. The action enters the critic
//! through its effect on the caches, which is linear in the action's
//! categorical probabilities and therefore differentiable.

use serde::{Deserialize, Serialize};

use super::action::{decode_action, CacheAction, Decoded};
use crate::sim::{CacheState, FileId, NetworkTopology, RequestState};

/// Requested and cached files per edge (`F^r(t)`, `F^c(t)`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameState {
    pub requested: Vec<Vec<FileId>>,
    pub cached: Vec<Vec<Option<FileId>>>,
}

impl GameState {
    pub fn capture(topology: &NetworkTopology, req: &RequestState, cache: &CacheState) -> Self {
        Self {
            requested: (0..topology.num_edges())
                .map(|e| {
                    topology
                        .users_covered_by(e)
                        .iter()
                        .map(|&u| req.file(u))
                        .collect()
                })
                .collect(),
            cached: (0..cache.num_edges()).map(|e| cache.slots(e).to_vec()).collect(),
        }
    }

    pub fn num_edges(&self) -> usize {
        self.cached.len()
    }

    pub fn holds(&self, edge: usize, file: FileId) -> bool {
        self.cached[edge].contains(&Some(file))
    }

    /// Slots of `edge` after applying `action`, with the duplicate rule.
    pub fn slots_after(&self, edge: usize, action: CacheAction, num_files: usize) -> Vec<Option<FileId>> {
        let mut slots = self.cached[edge].clone();
        if let Ok(Decoded::Replace { slot, file }) =
            decode_action(action, slots.len(), num_files)
        {
            if !slots.contains(&Some(file)) {
                slots[slot] = Some(file);
            }
        }
        slots
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub edges: usize,
    pub files: usize,
    pub slots: usize,
}

impl Dims {
    pub fn actions(&self) -> usize {
        self.slots * self.files + 1
    }

    pub fn observation_len(&self) -> usize {
        self.files + self.slots * self.files
    }

    pub fn critic_input_len(&self) -> usize {
        2 * self.edges * self.files
    }

    pub fn global_state_len(&self) -> usize {
        self.edges * self.observation_len()
    }

    fn hist_into(&self, files: &[FileId], out: &mut [f64]) {
        out.fill(0.0);
        if files.is_empty() {
            return;
        }
        let w = 1.0 / files.len() as f64;
        for f in files {
            out[f.index()] += w;
        }
    }

    fn mask_into(&self, slots: &[Option<FileId>], out: &mut [f64]) {
        out.fill(0.0);
        for f in slots.iter().flatten() {
            out[f.index()] = 1.0;
        }
    }

    /// `o_e`: only edge `e`'s requests and cache appear.
    pub fn observation_into(&self, state: &GameState, edge: usize, out: &mut [f64]) {
        let (hist, onehot) = out.split_at_mut(self.files);
        self.hist_into(&state.requested[edge], hist);
        onehot.fill(0.0);
        for (k, f) in state.cached[edge].iter().enumerate() {
            if let Some(f) = f {
                onehot[k * self.files + f.index()] = 1.0;
            }
        }
    }

    pub fn observation(&self, state: &GameState, edge: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.observation_len()];
        self.observation_into(state, edge, &mut out);
        out
    }

    /// Concatenated observations of every edge.
    pub fn global_state_into(&self, state: &GameState, out: &mut [f64]) {
        for (e, chunk) in out.chunks_exact_mut(self.observation_len()).enumerate() {
            self.observation_into(state, e, chunk);
        }
    }

    /// Offset of edge `e`'s post-action mask inside the critic input.
    pub fn mask_offset(&self, edge: usize) -> usize {
        edge * 2 * self.files + self.files
    }

    /// Critic input for `state` under the joint `actions`.
    pub fn critic_input_into(&self, state: &GameState, actions: &[CacheAction], out: &mut [f64]) {
        for (e, chunk) in out.chunks_exact_mut(2 * self.files).enumerate() {
            let (hist, mask) = chunk.split_at_mut(self.files);
            self.hist_into(&state.requested[e], hist);
            let slots = state.slots_after(e, actions[e], self.files);
            self.mask_into(&slots, mask);
        }
    }

    /// Expected file mask of `edge` when its action is drawn from `probs`.
    /// Writes `mask = m0 + Σ_{k, f ∉ cache} p(k,f) (e_f − e_{c_k})`.
    pub fn relaxed_mask_into(&self, state: &GameState, edge: usize, probs: &[f64], out: &mut [f64]) {
        let slots = &state.cached[edge];
        self.mask_into(slots, out);
        for (k, current) in slots.iter().enumerate() {
            let base = 1 + k * self.files;
            for f in 0..self.files {
                let fid = FileId::from_index(f);
                if state.holds(edge, fid) {
                    continue;
                }
                let p = probs[base + f];
                out[f] += p;
                if let Some(c) = current {
                    out[c.index()] -= p;
                }
            }
        }
    }

    /// Pulls a gradient on `edge`'s mask back onto its action probabilities
    /// (the transpose of the linear map in [`Self::relaxed_mask_into`]).
    pub fn mask_grad_to_probs(&self, state: &GameState, edge: usize, mask_grad: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.actions()];
        for (k, current) in state.cached[edge].iter().enumerate() {
            let base = 1 + k * self.files;
            let removed = current.map_or(0.0, |c| mask_grad[c.index()]);
            for f in 0..self.files {
                if !state.holds(edge, FileId::from_index(f)) {
                    g[base + f] = mask_grad[f] - removed;
                }
            }
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marl::action::encode_action;
    use crate::sim::Point;

    fn dims() -> Dims {
        Dims {
            edges: 2,
            files: 4,
            slots: 2,
        }
    }

    fn state() -> GameState {
        GameState {
            requested: vec![vec![FileId(1), FileId(1), FileId(3)], vec![FileId(2)]],
            cached: vec![
                vec![Some(FileId(1)), Some(FileId(2))],
                vec![Some(FileId(3)), Some(FileId(4))],
            ],
        }
    }

    #[test]
    fn observation_is_local() {
        let d = dims();
        let mut s = state();
        let before = d.observation(&s, 0);
        s.requested[1] = vec![FileId(4), FileId(4)];
        s.cached[1] = vec![Some(FileId(1)), Some(FileId(2))];
        assert_eq!(d.observation(&s, 0), before);
        assert!((before[0] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(before[4 + 0], 1.0); // slot 0 holds file 1
        assert_eq!(before[4 + 4 + 1], 1.0); // slot 1 holds file 2
    }

    #[test]
    fn one_hot_relaxation_matches_hard_transition() {
        let d = dims();
        let s = state();
        for a in 0..d.actions() as u32 {
            let mut probs = vec![0.0; d.actions()];
            probs[a as usize] = 1.0;
            let mut soft = vec![0.0; d.files];
            d.relaxed_mask_into(&s, 0, &probs, &mut soft);
            let mut hard = vec![0.0; d.critic_input_len()];
            d.critic_input_into(&s, &[CacheAction(a), CacheAction::NO_OP], &mut hard);
            let off = d.mask_offset(0);
            assert_eq!(&hard[off..off + d.files], soft.as_slice(), "action {a}");
        }
    }

    #[test]
    fn mask_gradient_prefers_valuable_swaps() {
        let d = dims();
        let s = state();
        // value on file 3 only: replacing either slot of edge 0 with file 3 helps,
        // and removing nothing of value costs nothing.
        let g = d.mask_grad_to_probs(&s, 0, &[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(g[encode_action(0, FileId(3), 4).index()], 1.0);
        assert_eq!(g[encode_action(1, FileId(3), 4).index()], 1.0);
        assert_eq!(g[encode_action(0, FileId(2), 4).index()], 0.0); // duplicate
        assert_eq!(g[0], 0.0);
    }

    #[test]
    fn capture_groups_requests_by_coverage() {
        let topo = NetworkTopology::from_positions(
            vec![Point::new(0.0, 0.0), Point::new(300.0, 0.0)],
            vec![Point::new(0.0, 0.0), Point::new(300.0, 0.0), Point::new(10.0, 0.0)],
            100.0,
        );
        let req = RequestState::new(vec![FileId(1), FileId(2), FileId(3)]);
        let cache = CacheState::from_files(&[vec![FileId(1)], vec![FileId(2)]], 4);
        let s = GameState::capture(&topo, &req, &cache);
        assert_eq!(s.requested, vec![vec![FileId(1), FileId(3)], vec![FileId(2)]]);
    }
}
