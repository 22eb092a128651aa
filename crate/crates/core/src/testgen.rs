//! Constrained-random test pattern generation driven by mutual information.
//!
//! For each suspicious wire the mutual information against every primary
//! input is computed on the transition-encoded waveforms. Inputs whose MI
//! exceeds the suspect's mean-MI threshold are its strongly correlated
//! primary inputs (the suspect's SSCPI). A minimum set of inputs covering
//! all coverable suspects is then selected (exact subset DP on small
//! instances, greedy otherwise) and turned into a stimulus: selected inputs
//! stay fully random, everything else is held at a constant.

use std::collections::BTreeMap;
use std::ops::{Add, Sub};

use thiserror::Error;

use crate::bits::Bits;
use crate::infotheory::{self, InfoError};
use crate::real::Real;
use crate::simulator::{InputPolicy, StimulusSpec};
use crate::store::WaveformStore;
use crate::waveform::encode_transitions;

use rayon::prelude::*;

#[derive(Error, Debug)]
pub enum TestgenError {
    #[error("store has no wire named {0:?}")]
    MissingWire(String),
    #[error("no suspects to cover")]
    NothingToCover,
    #[error("stores have different cycle counts: {0} vs {1}")]
    CycleMismatch(u64, u64),
    #[error(transparent)]
    Info(#[from] InfoError),
}

/// Set of suspects, packed one bit per suspect index. `+` is set union and
/// `-` is set difference.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct CoverSet {
    words: Vec<u64>,
}

impl CoverSet {
    pub fn empty(universe: usize) -> Self {
        CoverSet {
            words: vec![0u64; universe.div_ceil(64)],
        }
    }

    pub fn insert(&mut self, idx: usize) {
        self.words[idx / 64] |= 1u64 << (idx % 64);
    }

    pub fn contains(&self, idx: usize) -> bool {
        (self.words[idx / 64] >> (idx % 64)) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_subset_of(&self, other: &CoverSet) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            (0..64).filter_map(move |b| if (w >> b) & 1 == 1 { Some(k * 64 + b) } else { None })
        })
    }
}

impl Add for &CoverSet {
    type Output = CoverSet;

    fn add(self, rhs: &CoverSet) -> CoverSet {
        CoverSet {
            words: self
                .words
                .iter()
                .zip(&rhs.words)
                .map(|(a, b)| a | b)
                .collect(),
        }
    }
}

impl Sub for &CoverSet {
    type Output = CoverSet;

    fn sub(self, rhs: &CoverSet) -> CoverSet {
        CoverSet {
            words: self
                .words
                .iter()
                .zip(&rhs.words)
                .map(|(a, b)| a & !b)
                .collect(),
        }
    }
}

/// MI matrix between suspects and primary inputs, per-suspect thresholds,
/// and the derived strong-correlation structure.
#[derive(Clone, Debug)]
pub struct StrongCorrelationList<F> {
    pub suspects: Vec<String>,
    pub inputs: Vec<String>,
    /// `mi[i][j]` = I(suspect_i ; input_j) in nats, on encoded waveforms.
    pub mi: Vec<Vec<F>>,
    /// `thresholds[i]` = mean of row i.
    pub thresholds: Vec<F>,
    /// `bits[i][j]` = `mi[i][j] > thresholds[i]` (strictly greater).
    pub bits: Vec<Vec<bool>>,
    /// Per-suspect set of strongly correlated input indices.
    pub sscpi: Vec<Vec<usize>>,
    /// Suspect indices with empty SSCPI; excluded from covering.
    pub uncoverable: Vec<usize>,
}

impl<F: Real> StrongCorrelationList<F> {
    /// `{pi_j}`: the set of (coverable) suspects whose SSCPI contains input j.
    pub fn covered_by_input(&self, j: usize) -> CoverSet {
        let mut set = CoverSet::empty(self.suspects.len());
        for (i, sscpi) in self.sscpi.iter().enumerate() {
            if sscpi.contains(&j) {
                set.insert(i);
            }
        }
        set
    }
}

/// Computes the strong correlation list from a store.
pub fn build_correlation_list<F: Real>(
    store: &WaveformStore,
    suspects: &[String],
    inputs: &[String],
) -> Result<StrongCorrelationList<F>, TestgenError> {
    let encoded = |name: &String| -> Result<Bits, TestgenError> {
        let row = store
            .row_by_name(name)
            .ok_or_else(|| TestgenError::MissingWire(name.clone()))?;
        let enc = encode_transitions(name.clone(), row)
            .map_err(|_| TestgenError::Info(InfoError::SequenceTooShort))?;
        Ok(enc.symbols)
    };
    let suspect_rows: Vec<Bits> = suspects.iter().map(encoded).collect::<Result<_, _>>()?;
    let input_rows: Vec<Bits> = inputs.iter().map(encoded).collect::<Result<_, _>>()?;

    let mi: Vec<Vec<F>> = suspect_rows
        .par_iter()
        .map(|srow| {
            input_rows
                .iter()
                .map(|irow| infotheory::mutual_information(srow, irow))
                .collect::<Result<Vec<F>, InfoError>>()
        })
        .collect::<Result<_, _>>()?;

    let l = inputs.len();
    let thresholds: Vec<F> = mi
        .iter()
        .map(|row| row.iter().copied().sum::<F>() / F::from_count(l.max(1)))
        .collect();
    let bits: Vec<Vec<bool>> = mi
        .iter()
        .zip(&thresholds)
        .map(|(row, &t)| row.iter().map(|&v| v > t).collect())
        .collect();
    let sscpi: Vec<Vec<usize>> = bits
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter_map(|(j, &b)| if b { Some(j) } else { None })
                .collect()
        })
        .collect();
    let uncoverable: Vec<usize> = sscpi
        .iter()
        .enumerate()
        .filter_map(|(i, s)| if s.is_empty() { Some(i) } else { None })
        .collect();
    Ok(StrongCorrelationList {
        suspects: suspects.to_vec(),
        inputs: inputs.to_vec(),
        mi,
        thresholds,
        bits,
        sscpi,
        uncoverable,
    })
}

/// Chosen input set covering all coverable suspects.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScpiSelection {
    /// Indices into the input list, ascending.
    pub chosen: Vec<usize>,
    /// Coverable suspect indices (the covering target).
    pub covered: Vec<usize>,
    /// True when produced by the exact DP, false for the greedy path.
    pub optimal: bool,
}

/// Exact-DP instance limits: beyond these the subset table is impractical
/// and the greedy bound takes over.
pub const DP_MAX_SUSPECTS: usize = 20;
pub const DP_MAX_INPUTS: usize = 24;

/// Selects a minimum (or greedily small) set of inputs covering every
/// coverable suspect. Uncoverable suspects are excluded up front; an empty
/// target yields an empty selection.
pub fn select_scpi<F: Real>(list: &StrongCorrelationList<F>) -> ScpiSelection {
    let coverable: Vec<usize> = (0..list.suspects.len())
        .filter(|i| !list.uncoverable.contains(i))
        .collect();
    if coverable.is_empty() {
        return ScpiSelection {
            chosen: Vec::new(),
            covered: Vec::new(),
            optimal: true,
        };
    }
    if coverable.len() <= DP_MAX_SUSPECTS && list.inputs.len() <= DP_MAX_INPUTS {
        select_scpi_exact(list).expect("within DP limits")
    } else {
        select_scpi_greedy(list)
    }
}

/// Per-input cover masks over the coverable suspects, remapped to dense
/// bit positions.
fn dense_cover_masks<F: Real>(list: &StrongCorrelationList<F>) -> (Vec<usize>, Vec<u32>) {
    let coverable: Vec<usize> = (0..list.suspects.len())
        .filter(|i| !list.uncoverable.contains(i))
        .collect();
    let position: BTreeMap<usize, usize> = coverable
        .iter()
        .enumerate()
        .map(|(pos, &i)| (i, pos))
        .collect();
    let masks: Vec<u32> = (0..list.inputs.len())
        .map(|j| {
            let mut mask = 0u32;
            for (i, sscpi) in list.sscpi.iter().enumerate() {
                if sscpi.contains(&j) {
                    if let Some(&pos) = position.get(&i) {
                        mask |= 1 << pos;
                    }
                }
            }
            mask
        })
        .collect();
    (coverable, masks)
}

/// Exact minimum cover by DP over suspect subsets: `f(k, y)` is the optimal
/// count using only the first k inputs to cover subset y, with
/// `f(0, {}) = 0` and `f(0, y) = infinity` otherwise.
/// Returns `None` when the instance exceeds the DP limits.
pub fn select_scpi_exact<F: Real>(list: &StrongCorrelationList<F>) -> Option<ScpiSelection> {
    let (coverable, masks) = dense_cover_masks(list);
    let t = coverable.len();
    let l = list.inputs.len();
    if t > DP_MAX_SUSPECTS || l > DP_MAX_INPUTS {
        return None;
    }
    let full: u32 = (1u32 << t) - 1;
    let states = 1usize << t;
    const INF: u8 = u8::MAX;
    let mut f = vec![INF; states];
    f[0] = 0;
    // decision[k][y] = input k used at state (k+1, y)
    let mut decisions: Vec<Vec<u64>> = Vec::with_capacity(l);
    for k in 0..l {
        let cover = masks[k];
        let mut layer = vec![0u64; states.div_ceil(64)];
        if cover != 0 {
            let mut next = f.clone();
            for y in 0..states {
                let rest = y as u32 & !cover;
                let via = f[rest as usize].saturating_add(1);
                if via < next[y] {
                    next[y] = via;
                    layer[y / 64] |= 1u64 << (y % 64);
                }
            }
            f = next;
        }
        decisions.push(layer);
    }
    if f[full as usize] == INF {
        return None; // cannot happen: every coverable suspect has a cover
    }
    // walk the decisions back to the chosen inputs
    let mut chosen = Vec::new();
    let mut y = full;
    for k in (0..l).rev() {
        if (decisions[k][y as usize / 64] >> (y as usize % 64)) & 1 == 1 {
            chosen.push(k);
            y &= !masks[k];
        }
    }
    chosen.reverse();
    Some(ScpiSelection {
        chosen,
        covered: coverable,
        optimal: true,
    })
}

/// Greedy cover: repeatedly take the input covering the most uncovered
/// suspects, ties broken by lowest input index.
pub fn select_scpi_greedy<F: Real>(list: &StrongCorrelationList<F>) -> ScpiSelection {
    let coverable: Vec<usize> = (0..list.suspects.len())
        .filter(|i| !list.uncoverable.contains(i))
        .collect();
    let mut remaining = CoverSet::empty(list.suspects.len());
    for &i in &coverable {
        remaining.insert(i);
    }
    let covers: Vec<CoverSet> = (0..list.inputs.len())
        .map(|j| list.covered_by_input(j))
        .collect();
    let mut chosen = Vec::new();
    while !remaining.is_empty() {
        let (best, gain) = covers
            .iter()
            .enumerate()
            .map(|(j, c)| (j, (c - &(c - &remaining)).len()))
            .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
            .expect("at least one input");
        if gain == 0 {
            break; // nothing left coverable (cannot happen for coverable targets)
        }
        chosen.push(best);
        remaining = &remaining - &covers[best];
    }
    chosen.sort_unstable();
    ScpiSelection {
        chosen,
        covered: coverable,
        optimal: false,
    }
}

/// How non-selected inputs are held during constrained-random simulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HoldValue {
    Zero,
    One,
    /// Each input holds its majority value from the baseline store
    /// (ties hold 0).
    Majority,
}

/// Builds the constrained-random stimulus: chosen inputs stay fully random,
/// every other input is pinned to a constant.
pub fn make_constrained_spec(
    chosen_inputs: &[String],
    pi_names: &[String],
    baseline: &WaveformStore,
    hold: HoldValue,
    seed: u64,
    cycles: u64,
) -> Result<StimulusSpec, TestgenError> {
    let mut inputs = BTreeMap::new();
    for name in pi_names {
        if chosen_inputs.contains(name) {
            inputs.insert(name.clone(), InputPolicy::FullRandom);
            continue;
        }
        let policy = match hold {
            HoldValue::Zero => InputPolicy::Const0,
            HoldValue::One => InputPolicy::Const1,
            HoldValue::Majority => {
                let row = baseline
                    .row_by_name(name)
                    .ok_or_else(|| TestgenError::MissingWire(name.clone()))?;
                if 2 * row.count_ones() > row.len() {
                    InputPolicy::Const1
                } else {
                    InputPolicy::Const0
                }
            }
        };
        inputs.insert(name.clone(), policy);
    }
    Ok(StimulusSpec {
        seed,
        cycles,
        inputs,
    })
}

/// Transition statistics over the suspect wires of one store.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TransitionStats<F> {
    pub tr_max: u64,
    pub tr_ave: F,
}

/// Before/after transition comparison for a stimulus campaign.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TransitionGain<F> {
    pub before: TransitionStats<F>,
    pub after: TransitionStats<F>,
}

fn transition_stats<F: Real>(
    store: &WaveformStore,
    suspects: &[String],
) -> Result<TransitionStats<F>, TestgenError> {
    let mut counts = Vec::with_capacity(suspects.len());
    for name in suspects {
        let row = store
            .row_by_name(name)
            .ok_or_else(|| TestgenError::MissingWire(name.clone()))?;
        counts.push(row.count_adjacent_diffs() as u64);
    }
    let tr_max = counts.iter().copied().max().unwrap_or(0);
    let total: u64 = counts.iter().sum();
    let tr_ave = if counts.is_empty() {
        F::zero()
    } else {
        F::from_f64_lossy(total as f64) / F::from_count(counts.len())
    };
    Ok(TransitionStats { tr_max, tr_ave })
}

/// Computes `tr_max` / `tr_ave` over the suspects in both stores.
pub fn transition_gain<F: Real>(
    before: &WaveformStore,
    after: &WaveformStore,
    suspects: &[String],
) -> Result<TransitionGain<F>, TestgenError> {
    if before.cycles != after.cycles {
        return Err(TestgenError::CycleMismatch(before.cycles, after.cycles));
    }
    Ok(TransitionGain {
        before: transition_stats(before, suspects)?,
        after: transition_stats(after, suspects)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_bench;
    use crate::rng::SplitMix64;
    use crate::simulator::exhaustive_simulate;
    use proptest::prelude::*;

    const FIG7: &str =
        "INPUT(a)\nINPUT(b)\nINPUT(c)\nOUTPUT(f)\nd = AND(a, b)\ne = NOT(c)\nf = OR(d, e)\n";

    /// Builds a correlation list directly from cover sets, for cover tests.
    fn list_from_covers(l: usize, covers: &[(usize, &[usize])], t: usize) -> StrongCorrelationList<f64> {
        let mut sscpi = vec![Vec::new(); t];
        for &(input, suspects) in covers {
            for &s in suspects {
                sscpi[s].push(input);
            }
        }
        let bits: Vec<Vec<bool>> = sscpi
            .iter()
            .map(|row| (0..l).map(|j| row.contains(&j)).collect())
            .collect();
        let uncoverable = sscpi
            .iter()
            .enumerate()
            .filter_map(|(i, s)| if s.is_empty() { Some(i) } else { None })
            .collect();
        StrongCorrelationList {
            suspects: (0..t).map(|i| format!("sw{}", i)).collect(),
            inputs: (0..l).map(|j| format!("pi{}", j)).collect(),
            mi: vec![vec![0.0; l]; t],
            thresholds: vec![0.0; t],
            bits,
            sscpi,
            uncoverable,
        }
    }

    fn cover_is_sound(list: &StrongCorrelationList<f64>, sel: &ScpiSelection) -> bool {
        let mut covered = CoverSet::empty(list.suspects.len());
        for &j in &sel.chosen {
            covered = &covered + &list.covered_by_input(j);
        }
        sel.covered.iter().all(|&i| covered.contains(i))
    }

    fn exhaustive_minimum(list: &StrongCorrelationList<f64>) -> usize {
        let l = list.inputs.len();
        let target: Vec<usize> = (0..list.suspects.len())
            .filter(|i| !list.uncoverable.contains(i))
            .collect();
        let mut best = usize::MAX;
        for mask in 0..(1usize << l) {
            let mut covered = CoverSet::empty(list.suspects.len());
            for j in 0..l {
                if (mask >> j) & 1 == 1 {
                    covered = &covered + &list.covered_by_input(j);
                }
            }
            if target.iter().all(|&i| covered.contains(i)) {
                best = best.min(mask.count_ones() as usize);
            }
        }
        best
    }

    #[test]
    fn correlation_list_finds_the_driving_input() {
        // e = NOT(c): its encoded waveform equals c's (the encoding is
        // complement-invariant), so MI(e; c) = H(enc c) while a and b are
        // independent of e. Random stimulus keeps every input's encoding
        // non-degenerate.
        let n = parse_bench(FIG7, "fig7").unwrap();
        let store =
            crate::simulator::simulate(&n, &StimulusSpec::full_random(21, 4096)).unwrap();
        let inputs = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let list: StrongCorrelationList<f64> =
            build_correlation_list(&store, &["e".to_string()], &inputs).unwrap();
        assert!(list.mi[0][2] > 0.1, "I(e;c) = {}", list.mi[0][2]);
        assert!(list.mi[0][0] < 0.01);
        assert!(list.mi[0][1] < 0.01);
        assert_eq!(list.sscpi[0], vec![2]);
        assert!(list.uncoverable.is_empty());
        // threshold identity
        let sum: f64 = list.mi[0].iter().sum();
        assert!((list.thresholds[0] * 3.0 - sum).abs() < 1e-12);
    }

    #[test]
    fn suspect_identical_to_input_dominates() {
        let n = parse_bench(FIG7, "fig7").unwrap();
        let store =
            crate::simulator::simulate(&n, &StimulusSpec::full_random(22, 4096)).unwrap();
        let inputs = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        // `a` as its own suspect: MI(a;a) = H(enc a) > mean
        let list: StrongCorrelationList<f64> =
            build_correlation_list(&store, &["a".to_string()], &inputs).unwrap();
        assert!(list.sscpi[0].contains(&0));
    }

    #[test]
    fn constant_suspect_is_uncoverable() {
        let n = parse_bench(
            "INPUT(a)\nINPUT(b)\nOUTPUT(z)\nx = XOR(a, a)\nz = OR(x, b)",
            "c",
        )
        .unwrap();
        let store = crate::simulator::simulate(&n, &StimulusSpec::full_random(5, 512)).unwrap();
        let inputs = vec!["a".to_string(), "b".to_string()];
        let list: StrongCorrelationList<f64> =
            build_correlation_list(&store, &["x".to_string()], &inputs).unwrap();
        assert_eq!(list.sscpi[0], Vec::<usize>::new());
        assert_eq!(list.uncoverable, vec![0]);
        let sel = select_scpi(&list);
        assert!(sel.chosen.is_empty());
        assert!(sel.covered.is_empty());
    }

    #[test]
    fn illustrative_three_input_instance() {
        // {pi_0} = {sw_0, sw_2}, {pi_1} = {sw_1, sw_2}, {pi_2} = {sw_0, sw_1, sw_2}
        let list = list_from_covers(
            3,
            &[(0, &[0, 2]), (1, &[1, 2]), (2, &[0, 1, 2])],
            3,
        );
        let sel = select_scpi(&list);
        assert_eq!(sel.chosen, vec![2]);
        assert!(sel.optimal);
        assert_eq!(exhaustive_minimum(&list), 1);
        assert!(cover_is_sound(&list, &sel));
    }

    #[test]
    fn empty_target_yields_empty_selection() {
        let list = list_from_covers(3, &[], 0);
        let sel = select_scpi(&list);
        assert!(sel.chosen.is_empty());
    }

    #[test]
    fn greedy_gadget_beaten_by_exact_dp() {
        // rows r0..r2 partition the 12 suspects (optimum 3); g3..g5 bait the
        // greedy into four picks
        let list = list_from_covers(
            6,
            &[
                (0, &[0, 1, 2, 3]),     // row A
                (1, &[4, 5, 6, 7]),     // row B
                (2, &[8, 9, 10, 11]),   // row C
                (3, &[0, 1, 4, 5, 8]),  // bait: 5 elements
                (4, &[2, 6, 9, 10]),    // bait: 4 of the remainder
                (5, &[3, 7]),           // bait: 2 of the remainder
            ],
            12,
        );
        let greedy = select_scpi_greedy(&list);
        let exact = select_scpi_exact(&list).unwrap();
        assert_eq!(greedy.chosen.len(), 4, "greedy picks {:?}", greedy.chosen);
        assert_eq!(exact.chosen.len(), 3);
        assert!(!greedy.optimal);
        assert!(exact.optimal);
        assert_eq!(exhaustive_minimum(&list), 3);
        assert!(cover_is_sound(&list, &greedy));
        assert!(cover_is_sound(&list, &exact));
    }

    fn random_feasible_instance(rng: &mut SplitMix64) -> StrongCorrelationList<f64> {
        let t = 1 + (rng.next_u64() % 10) as usize;
        let l = 1 + (rng.next_u64() % 10) as usize;
        let mut covers: Vec<(usize, Vec<usize>)> = (0..l).map(|j| (j, Vec::new())).collect();
        for i in 0..t {
            // each suspect appears in at least one input's set
            let forced = (rng.next_u64() % l as u64) as usize;
            covers[forced].1.push(i);
            for (j, cover) in covers.iter_mut().enumerate() {
                if j != forced && rng.next_u64() % 3 == 0 {
                    cover.1.push(i);
                }
            }
        }
        let slices: Vec<(usize, &[usize])> =
            covers.iter().map(|(j, v)| (*j, v.as_slice())).collect();
        list_from_covers(l, &slices, t)
    }

    #[test]
    fn dp_matches_exhaustive_minimum_on_random_instances() {
        let mut rng = SplitMix64::new(555);
        for _ in 0..500 {
            let list = random_feasible_instance(&mut rng);
            let sel = select_scpi_exact(&list).unwrap();
            assert!(cover_is_sound(&list, &sel));
            assert_eq!(
                sel.chosen.len(),
                exhaustive_minimum(&list),
                "instance sscpi {:?}",
                list.sscpi
            );
        }
    }

    #[test]
    fn greedy_within_classical_bound() {
        let mut rng = SplitMix64::new(808);
        for _ in 0..300 {
            let list = random_feasible_instance(&mut rng);
            let greedy = select_scpi_greedy(&list);
            let exact = select_scpi_exact(&list).unwrap();
            assert!(cover_is_sound(&list, &greedy));
            let t = list.suspects.len() as f64;
            let bound = (exact.chosen.len() as f64) * (1.0 + t.ln());
            assert!(
                greedy.chosen.len() as f64 <= bound + 1e-9,
                "greedy {} vs bound {}",
                greedy.chosen.len(),
                bound
            );
        }
    }

    #[test]
    fn constrained_spec_policies() {
        let n = parse_bench(FIG7, "fig7").unwrap();
        let store = exhaustive_simulate(&n).unwrap();
        let pis = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        // majority over the 8-row truth table columns: a has 4 ones of 8 -> tie -> 0
        let spec = make_constrained_spec(
            &["c".to_string()],
            &pis,
            &store,
            HoldValue::Majority,
            9,
            100,
        )
        .unwrap();
        assert_eq!(spec.inputs["c"], InputPolicy::FullRandom);
        assert_eq!(spec.inputs["a"], InputPolicy::Const0);
        assert_eq!(spec.inputs["b"], InputPolicy::Const0);
        assert_eq!(spec.seed, 9);
        assert_eq!(spec.cycles, 100);

        // all chosen -> indistinguishable from full random
        let spec = make_constrained_spec(&pis, &pis, &store, HoldValue::Majority, 9, 100).unwrap();
        assert!(spec
            .inputs
            .values()
            .all(|&p| p == InputPolicy::FullRandom));

        // none chosen -> degenerate all-constant spec
        let spec = make_constrained_spec(&[], &pis, &store, HoldValue::One, 9, 100).unwrap();
        assert!(spec.inputs.values().all(|&p| p == InputPolicy::Const1));
    }

    #[test]
    fn majority_hold_follows_biased_baseline() {
        let n = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(x)\nx = AND(a, b)", "t").unwrap();
        let spec = StimulusSpec {
            seed: 0,
            cycles: 50,
            inputs: [
                ("a".to_string(), InputPolicy::Const1),
                ("b".to_string(), InputPolicy::Const0),
            ]
            .into_iter()
            .collect(),
        };
        let store = crate::simulator::simulate(&n, &spec).unwrap();
        let out = make_constrained_spec(
            &[],
            &["a".to_string(), "b".to_string()],
            &store,
            HoldValue::Majority,
            1,
            50,
        )
        .unwrap();
        assert_eq!(out.inputs["a"], InputPolicy::Const1);
        assert_eq!(out.inputs["b"], InputPolicy::Const0);
    }

    #[test]
    fn transition_gain_identity_and_arithmetic() {
        let rows = vec![
            Bits::from_bitstring("00010001").unwrap(), // 3 transitions? 0->0,0->0,0->1,1->0,0->0,0->0,0->1
            Bits::from_bitstring("01010100").unwrap(),
        ];
        let store = WaveformStore::new(
            "t",
            0,
            8,
            0,
            vec!["A".into(), "B".into()],
            rows,
            vec![],
        );
        let names = vec!["A".to_string(), "B".to_string()];
        let gain: TransitionGain<f64> = transition_gain(&store, &store, &names).unwrap();
        assert_eq!(gain.before, gain.after);
        // A: 0001 0001 -> transitions at 2-3, 3-4, 6-7 = 3; B: 01010100 -> 6
        assert_eq!(gain.before.tr_max, 6);
        assert!((gain.before.tr_ave - 4.5).abs() < 1e-12);
    }

    #[test]
    fn transition_gain_cycle_mismatch() {
        let s1 = WaveformStore::new(
            "a",
            0,
            4,
            0,
            vec!["w".into()],
            vec![Bits::from_bitstring("0101").unwrap()],
            vec![],
        );
        let s2 = WaveformStore::new(
            "b",
            0,
            6,
            0,
            vec!["w".into()],
            vec![Bits::from_bitstring("010101").unwrap()],
            vec![],
        );
        assert!(matches!(
            transition_gain::<f64>(&s1, &s2, &["w".to_string()]),
            Err(TestgenError::CycleMismatch(4, 6))
        ));
    }

    #[test]
    fn constrained_raises_transitions_on_rare_trigger() {
        // trig = AND(a, b, c, d): rare under full random, much livelier when
        // b, c, d are held at 1 and only a toggles
        let text = "INPUT(a)\nINPUT(b)\nINPUT(c)\nINPUT(d)\nOUTPUT(t)\nt = AND(a, b, c, d)\n";
        let n = parse_bench(text, "rare").unwrap();
        let before =
            crate::simulator::simulate(&n, &StimulusSpec::full_random(3, 4096)).unwrap();
        let constrained = make_constrained_spec(
            &["a".to_string()],
            &n.input_names(),
            &before,
            HoldValue::One,
            3,
            4096,
        )
        .unwrap();
        let after = crate::simulator::simulate(&n, &constrained).unwrap();
        let gain: TransitionGain<f64> =
            transition_gain(&before, &after, &["t".to_string()]).unwrap();
        assert!(
            gain.after.tr_ave > gain.before.tr_ave,
            "expected gain, got {:?}",
            gain
        );
    }

    proptest! {
        #[test]
        fn cover_set_algebra(
            a in proptest::collection::vec(any::<bool>(), 40),
            b in proptest::collection::vec(any::<bool>(), 40)
        ) {
            let mut sa = CoverSet::empty(40);
            let mut sb = CoverSet::empty(40);
            for i in 0..40 {
                if a[i] { sa.insert(i); }
                if b[i] { sb.insert(i); }
            }
            let union = &sa + &sb;
            let diff = &sa - &sb;
            for i in 0..40 {
                prop_assert_eq!(union.contains(i), a[i] || b[i]);
                prop_assert_eq!(diff.contains(i), a[i] && !b[i]);
            }
            prop_assert!(diff.is_subset_of(&sa));
            prop_assert!(sa.is_subset_of(&union));
        }

        #[test]
        fn selection_always_covers(seed in any::<u64>()) {
            let mut rng = SplitMix64::new(seed);
            let list = random_feasible_instance(&mut rng);
            let sel = select_scpi(&list);
            prop_assert!(cover_is_sound(&list, &sel));
        }
    }
}
