//! Exploration of reduction and labelled transition systems, and the
//! checkers for strong, strong reduction and strong barbed
//! bisimilarity. Verdicts are exact only when both explorations
//! closed; otherwise they say up to which game depth no difference was
//! found. Negative verdicts carry a replayable witness.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::ccs_sos::{barbs_ccs, step_ccs, step_ccs_pool, step_gamma_tau, step_gamma_visible};
use crate::names::Name;
use crate::pi_sos::{barbs_pi, step_early, step_early_tau};
use crate::syntax::{alpha_canonical, alpha_canonical_ccs, Action, Barb, CcsTerm, DefEnv, PiTerm};

pub const DEFAULT_MAX_STATES: usize = 20000;
pub const DEFAULT_MAX_DEPTH: usize = 64;

const PRODUCT_CAP: usize = 250_000;
const WITNESS_CAP: usize = 200_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExploreError {
    pub state: String,
    pub msg: String,
}

impl fmt::Display for ExploreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "exploring {}: {}", self.state, self.msg)
    }
}

/// A reduction graph with barbs. States are canonical printings, the
/// root is state 0. The frontier lists states whose successors were
/// not computed because a bound was hit; the graph is complete iff the
/// frontier is empty. Barbs are recorded for frontier states too.
#[derive(Clone, Debug)]
pub struct Bts {
    pub states: Vec<String>,
    pub reductions: Vec<Vec<usize>>,
    pub barbs: Vec<BTreeSet<Barb>>,
    pub depth: Vec<usize>,
    pub frontier: BTreeSet<usize>,
    pub complete: bool,
}

/// A labelled transition graph over a fixed instantiation pool, root
/// at state 0.
#[derive(Clone, Debug)]
pub struct Lts {
    pub states: Vec<String>,
    pub transitions: Vec<Vec<(Action, usize)>>,
    pub pool: BTreeSet<Name>,
    pub depth: Vec<usize>,
    pub frontier: BTreeSet<usize>,
    pub complete: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessStep {
    pub side: u8,
    pub from: String,
    pub to: String,
    pub label: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub steps: Vec<WitnessStep>,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GameResult {
    Bisimilar,
    BisimilarToDepth(usize),
    NotBisimilar(Witness),
}

impl fmt::Display for GameResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GameResult::Bisimilar => write!(f, "bisimilar"),
            GameResult::BisimilarToDepth(d) => write!(f, "bisimilar to depth {d}"),
            GameResult::NotBisimilar(w) => {
                write!(f, "not bisimilar: {} after {} steps", w.reason, w.steps.len())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EquivError {
    PoolMismatch,
}

impl fmt::Display for EquivError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EquivError::PoolMismatch => {
                write!(f, "the two systems were explored over different pools")
            }
        }
    }
}

struct Raw<T, L> {
    states: Vec<String>,
    reps: Vec<T>,
    succ: Vec<Vec<(L, usize)>>,
    depth: Vec<usize>,
    frontier: BTreeSet<usize>,
}

/// Breadth-first closure under `step`, deduplicating states by key.
/// Expansion stops at `max_depth` from the root and no state is
/// recorded beyond `max_states`; a state whose expansion was cut keeps
/// no edges and joins the frontier, as do all states left unexpanded.
fn explore_raw<T, L, K, S>(
    root: T,
    mut key_fn: K,
    mut step: S,
    max_states: usize,
    max_depth: usize,
) -> Result<Raw<T, L>, ExploreError>
where
    T: Clone,
    L: Clone + Ord,
    K: FnMut(&T) -> String,
    S: FnMut(&T) -> Result<Vec<(L, T)>, String>,
{
    let mut raw = Raw {
        states: Vec::new(),
        reps: Vec::new(),
        succ: Vec::new(),
        depth: Vec::new(),
        frontier: BTreeSet::new(),
    };
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let mut queue: VecDeque<usize> = VecDeque::new();

    let rk = key_fn(&root);
    index.insert(rk.clone(), 0);
    raw.states.push(rk);
    raw.reps.push(root);
    raw.succ.push(Vec::new());
    raw.depth.push(0);
    queue.push_back(0);

    let mut full = false;
    while let Some(i) = queue.pop_front() {
        if full || raw.depth[i] >= max_depth {
            raw.frontier.insert(i);
            continue;
        }
        let succs = step(&raw.reps[i])
            .map_err(|msg| ExploreError { state: raw.states[i].clone(), msg })?;
        let mut edges: Vec<(L, usize)> = Vec::new();
        let mut cut = false;
        for (l, t) in succs {
            let k = key_fn(&t);
            let id = match index.get(&k) {
                Some(&id) => id,
                None => {
                    if raw.states.len() >= max_states {
                        cut = true;
                        break;
                    }
                    let id = raw.states.len();
                    index.insert(k.clone(), id);
                    raw.states.push(k);
                    raw.reps.push(t);
                    raw.succ.push(Vec::new());
                    raw.depth.push(raw.depth[i] + 1);
                    queue.push_back(id);
                    id
                }
            };
            edges.push((l, id));
        }
        if cut {
            raw.frontier.insert(i);
            full = true;
        } else {
            edges.sort();
            edges.dedup();
            raw.succ[i] = edges;
        }
    }
    Ok(raw)
}

/// Explore the reduction graph below `root`, recording the barbs of
/// every state met along the way.
pub fn explore_bts<T, K, S, B>(
    root: T,
    key_fn: K,
    mut tau_step: S,
    mut barb_fn: B,
    max_states: usize,
    max_depth: usize,
) -> Result<Bts, ExploreError>
where
    T: Clone,
    K: FnMut(&T) -> String,
    S: FnMut(&T) -> Result<Vec<T>, String>,
    B: FnMut(&T) -> Result<BTreeSet<Barb>, String>,
{
    let raw: Raw<T, ()> = explore_raw(
        root,
        key_fn,
        |t| Ok(tau_step(t)?.into_iter().map(|s| ((), s)).collect()),
        max_states,
        max_depth,
    )?;
    let mut barbs = Vec::with_capacity(raw.reps.len());
    for (i, rep) in raw.reps.iter().enumerate() {
        let b = barb_fn(rep)
            .map_err(|msg| ExploreError { state: raw.states[i].clone(), msg })?;
        barbs.push(b);
    }
    let complete = raw.frontier.is_empty();
    Ok(Bts {
        states: raw.states,
        reductions: raw
            .succ
            .into_iter()
            .map(|v| v.into_iter().map(|(_, j)| j).collect())
            .collect(),
        barbs,
        depth: raw.depth,
        frontier: raw.frontier,
        complete,
    })
}

/// Explore the labelled transition graph below `root`; `pool` is only
/// recorded here, the step function is expected to respect it.
pub fn explore_lts<T, K, S>(
    root: T,
    key_fn: K,
    mut step: S,
    pool: &BTreeSet<Name>,
    max_states: usize,
    max_depth: usize,
) -> Result<Lts, ExploreError>
where
    T: Clone,
    K: FnMut(&T) -> String,
    S: FnMut(&T) -> Result<Vec<(Action, T)>, String>,
{
    let raw: Raw<T, Action> = explore_raw(
        root,
        key_fn,
        |t| step(t).map(|v| v.into_iter().map(|(a, s)| (a, s)).collect()),
        max_states,
        max_depth,
    )?;
    let complete = raw.frontier.is_empty();
    Ok(Lts {
        states: raw.states,
        transitions: raw.succ,
        pool: pool.clone(),
        depth: raw.depth,
        frontier: raw.frontier,
        complete,
    })
}

fn pi_key(p: &PiTerm) -> String {
    format!("pi:{}", alpha_canonical(p))
}

fn ccs_key(e: &CcsTerm) -> String {
    format!("ccs:{}", alpha_canonical_ccs(e))
}

pub fn bts_pi(
    p: &PiTerm,
    env: &DefEnv,
    max_states: usize,
    max_depth: usize,
) -> Result<Bts, ExploreError> {
    explore_bts(
        p.clone(),
        pi_key,
        |q| {
            step_early_tau(q, env)
                .map(|v| v.into_iter().map(|t| t.target).collect())
                .map_err(|e| e.to_string())
        },
        |q| barbs_pi(q, env).map_err(|e| e.to_string()),
        max_states,
        max_depth,
    )
}

pub fn bts_gamma(
    e: &CcsTerm,
    env: &DefEnv,
    max_states: usize,
    max_depth: usize,
) -> Result<Bts, ExploreError> {
    explore_bts(
        e.clone(),
        ccs_key,
        |t| step_gamma_tau(t, env).map_err(|e| e.to_string()),
        |t| barbs_ccs(t, env).map_err(|e| e.to_string()),
        max_states,
        max_depth,
    )
}

/// Reduction graph under the classic handshake semantics; used for
/// terms of the pair-action encoding, whose relabellings must not be
/// able to create synchronisations.
pub fn bts_ccs_classic(
    e: &CcsTerm,
    env: &DefEnv,
    max_states: usize,
    max_depth: usize,
) -> Result<Bts, ExploreError> {
    explore_bts(
        e.clone(),
        ccs_key,
        |t| {
            step_ccs(t, env)
                .map(|v| {
                    v.into_iter()
                        .filter(|(a, _)| a.is_tau())
                        .map(|(_, s)| s)
                        .collect()
                })
                .map_err(|e| e.to_string())
        },
        |t| barbs_ccs(t, env).map_err(|e| e.to_string()),
        max_states,
        max_depth,
    )
}

pub fn lts_pi(
    p: &PiTerm,
    env: &DefEnv,
    pool: &BTreeSet<Name>,
    max_states: usize,
    max_depth: usize,
) -> Result<Lts, ExploreError> {
    explore_lts(
        p.clone(),
        pi_key,
        |q| {
            step_early(q, env, pool)
                .map(|v| v.into_iter().map(|t| (t.action, t.target)).collect())
                .map_err(|e| e.to_string())
        },
        pool,
        max_states,
        max_depth,
    )
}

/// Labelled system under the symbolic early semantics, whose labels
/// carry matching prefixes. This is the system mirrored action for
/// action by the translation's gamma semantics, synchronisations
/// included.
pub fn lts_pi_symbolic(
    p: &PiTerm,
    env: &DefEnv,
    pool: &BTreeSet<Name>,
    max_states: usize,
    max_depth: usize,
) -> Result<Lts, ExploreError> {
    explore_lts(
        p.clone(),
        pi_key,
        |q| {
            crate::pi_sos::step_early_symbolic(q, env, pool)
                .map(|v| v.into_iter().map(|t| (t.action, t.target)).collect())
                .map_err(|e| e.to_string())
        },
        pool,
        max_states,
        max_depth,
    )
}

pub fn lts_gamma(
    e: &CcsTerm,
    env: &DefEnv,
    pool: &BTreeSet<Name>,
    max_states: usize,
    max_depth: usize,
) -> Result<Lts, ExploreError> {
    explore_lts(
        e.clone(),
        ccs_key,
        |t| step_gamma_visible(t, env, pool).map_err(|e| e.to_string()),
        pool,
        max_states,
        max_depth,
    )
}

pub fn lts_classic(
    e: &CcsTerm,
    env: &DefEnv,
    pool: &BTreeSet<Name>,
    max_states: usize,
    max_depth: usize,
) -> Result<Lts, ExploreError> {
    explore_lts(
        e.clone(),
        ccs_key,
        |t| step_ccs_pool(t, env, pool).map_err(|e| e.to_string()),
        pool,
        max_states,
        max_depth,
    )
}

/// Union of the barb sets of every state reachable by at most `k`
/// reductions, under the gamma semantics.
pub fn weak_barb_probe(
    e: &CcsTerm,
    env: &DefEnv,
    k: usize,
) -> Result<BTreeSet<Barb>, ExploreError> {
    let bts = bts_gamma(e, env, DEFAULT_MAX_STATES, k)?;
    Ok(bts.barbs.into_iter().flatten().collect())
}

/// Length of the longest reduction sequence from the root, or None if
/// a reachable cycle makes the chains unbounded.
pub fn longest_tau_chain(b: &Bts) -> Option<usize> {
    const WHITE: u8 = 0;
    const GREY: u8 = 1;
    const BLACK: u8 = 2;
    let n = b.states.len();
    let mut color = alloc::vec![WHITE; n];
    let mut best = alloc::vec![0usize; n];
    // explicit stack of (state, next-successor index)
    let mut stack: Vec<(usize, usize)> = alloc::vec![(0, 0)];
    color[0] = GREY;
    while let Some(&mut (s, ref mut i)) = stack.last_mut() {
        if *i < b.reductions[s].len() {
            let t = b.reductions[s][*i];
            *i += 1;
            match color[t] {
                GREY => return None,
                WHITE => {
                    color[t] = GREY;
                    stack.push((t, 0));
                }
                _ => {}
            }
        } else {
            color[s] = BLACK;
            best[s] = b.reductions[s]
                .iter()
                .map(|&t| best[t] + 1)
                .max()
                .unwrap_or(0);
            stack.pop();
        }
    }
    Some(best[0])
}

/// The game arena: two systems with successor lists over a shared
/// label alphabet. Reduction systems use the single label `tau`.
struct Game<'a> {
    succ1: Vec<Vec<(u32, usize)>>,
    succ2: Vec<Vec<(u32, usize)>>,
    barbs1: Option<&'a [BTreeSet<Barb>]>,
    barbs2: Option<&'a [BTreeSet<Barb>]>,
    frontier1: &'a BTreeSet<usize>,
    frontier2: &'a BTreeSet<usize>,
    states1: &'a [String],
    states2: &'a [String],
    labels: Vec<String>,
    labeled: bool,
    complete: bool,
}

fn game_bts<'a>(b1: &'a Bts, b2: &'a Bts, use_barbs: bool) -> Game<'a> {
    let lift = |r: &Vec<Vec<usize>>| -> Vec<Vec<(u32, usize)>> {
        r.iter().map(|row| row.iter().map(|&j| (0u32, j)).collect()).collect()
    };
    Game {
        succ1: lift(&b1.reductions),
        succ2: lift(&b2.reductions),
        barbs1: if use_barbs { Some(&b1.barbs) } else { None },
        barbs2: if use_barbs { Some(&b2.barbs) } else { None },
        frontier1: &b1.frontier,
        frontier2: &b2.frontier,
        states1: &b1.states,
        states2: &b2.states,
        labels: alloc::vec!["tau".to_string()],
        labeled: false,
        complete: b1.complete && b2.complete,
    }
}

fn game_lts<'a>(l1: &'a Lts, l2: &'a Lts) -> Game<'a> {
    let mut ids: BTreeMap<&Action, u32> = BTreeMap::new();
    let mut labels: Vec<String> = Vec::new();
    let mut lift = |t: &'a Vec<Vec<(Action, usize)>>| -> Vec<Vec<(u32, usize)>> {
        t.iter()
            .map(|row| {
                row.iter()
                    .map(|(a, j)| {
                        let next = ids.len() as u32;
                        let lid = *ids.entry(a).or_insert(next);
                        if lid == next {
                            labels.push(a.to_string());
                        }
                        (lid, *j)
                    })
                    .collect()
            })
            .collect()
    };
    let succ1 = lift(&l1.transitions);
    let succ2 = lift(&l2.transitions);
    Game {
        succ1,
        succ2,
        barbs1: None,
        barbs2: None,
        frontier1: &l1.frontier,
        frontier2: &l2.frontier,
        states1: &l1.states,
        states2: &l2.states,
        labels,
        labeled: true,
        complete: l1.complete && l2.complete,
    }
}

impl<'a> Game<'a> {
    fn barbs_differ(&self, s: usize, t: usize) -> bool {
        match (self.barbs1, self.barbs2) {
            (Some(b1), Some(b2)) => b1[s] != b2[t],
            _ => false,
        }
    }

    fn label_text(&self, l: u32) -> Option<String> {
        if self.labeled {
            Some(self.labels[l as usize].clone())
        } else {
            None
        }
    }
}

/// Coarsest partition refinement over the disjoint union of the two
/// systems; sound only when both are complete. Returns whether the
/// roots share a block.
fn refine(g: &Game) -> bool {
    let n1 = g.succ1.len();
    let n = n1 + g.succ2.len();
    let succ = |i: usize| -> Vec<(u32, usize)> {
        if i < n1 {
            g.succ1[i].iter().map(|&(l, j)| (l, j)).collect()
        } else {
            g.succ2[i - n1].iter().map(|&(l, j)| (l, j + n1)).collect()
        }
    };
    let mut block: Vec<usize> = if g.barbs1.is_some() {
        let mut groups: BTreeMap<&BTreeSet<Barb>, usize> = BTreeMap::new();
        (0..n)
            .map(|i| {
                let b = if i < n1 {
                    &g.barbs1.unwrap()[i]
                } else {
                    &g.barbs2.unwrap()[i - n1]
                };
                let next = groups.len();
                *groups.entry(b).or_insert(next)
            })
            .collect()
    } else {
        alloc::vec![0; n]
    };
    let mut count = block.iter().collect::<BTreeSet<_>>().len();
    loop {
        let mut groups: BTreeMap<(usize, BTreeSet<(u32, usize)>), usize> = BTreeMap::new();
        let mut next: Vec<usize> = alloc::vec![0; n];
        for i in 0..n {
            let sig: BTreeSet<(u32, usize)> =
                succ(i).into_iter().map(|(l, j)| (l, block[j])).collect();
            let id = groups.len();
            next[i] = *groups.entry((block[i], sig)).or_insert(id);
        }
        let new_count = groups.len();
        block = next;
        if new_count == count {
            return block[0] == block[n1];
        }
        count = new_count;
    }
}

/// Bounded game on the reachable product. Pairs touching a frontier
/// state are horizons: never declared losing, and the depth of the
/// shallowest one qualifies a positive verdict. A pair is losing when
/// its barbs differ or one side has a move all of whose responses are
/// losing.
fn bounded(g: &Game) -> GameResult {
    let mut ids: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut pdepth: Vec<usize> = Vec::new();
    let mut expanded: Vec<bool> = Vec::new();
    let mut queue: VecDeque<usize> = VecDeque::new();
    let mut horizon: Option<usize> = None;
    let note_horizon = |horizon: &mut Option<usize>, d: usize| {
        *horizon = Some(horizon.map_or(d, |h| h.min(d)));
    };
    ids.insert((0, 0), 0);
    pairs.push((0, 0));
    pdepth.push(0);
    expanded.push(false);
    queue.push_back(0);
    let mut capped = false;
    while let Some(p) = queue.pop_front() {
        let (s, t) = pairs[p];
        if capped || g.frontier1.contains(&s) || g.frontier2.contains(&t) {
            note_horizon(&mut horizon, pdepth[p]);
            continue;
        }
        expanded[p] = true;
        'moves: for &(l1, s2) in &g.succ1[s] {
            for &(l2, t2) in &g.succ2[t] {
                if l1 != l2 {
                    continue;
                }
                if !ids.contains_key(&(s2, t2)) {
                    if pairs.len() >= PRODUCT_CAP {
                        capped = true;
                        note_horizon(&mut horizon, pdepth[p] + 1);
                        expanded[p] = false;
                        break 'moves;
                    }
                    let id = pairs.len();
                    ids.insert((s2, t2), id);
                    pairs.push((s2, t2));
                    pdepth.push(pdepth[p] + 1);
                    expanded.push(false);
                    queue.push_back(id);
                }
            }
        }
    }

    let mut losing: Vec<bool> =
        pairs.iter().map(|&(s, t)| g.barbs_differ(s, t)).collect();
    loop {
        let mut changed = false;
        for p in 0..pairs.len() {
            if losing[p] || !expanded[p] {
                continue;
            }
            let (s, t) = pairs[p];
            let wins = |att: &[(u32, usize)], def: &[(u32, usize)], from_left: bool| -> bool {
                att.iter().any(|&(l, a2)| {
                    def.iter().filter(|&&(l2, _)| l2 == l).all(|&(_, d2)| {
                        let key = if from_left { (a2, d2) } else { (d2, a2) };
                        ids.get(&key).map(|&q| losing[q]).unwrap_or(false)
                    })
                })
            };
            if wins(&g.succ1[s], &g.succ2[t], true) || wins(&g.succ2[t], &g.succ1[s], false) {
                losing[p] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    if losing[0] {
        return GameResult::NotBisimilar(find_witness(g));
    }
    match horizon {
        None => GameResult::Bisimilar,
        Some(d) => GameResult::BisimilarToDepth(d),
    }
}

/// Breadth-first search for a shortest attacker path that defeats
/// every defender response: either the final barbs differ from all
/// remaining responses, or a move has no response at all.
fn find_witness(g: &Game) -> Witness {
    type Pos = (u8, usize, BTreeSet<usize>);
    let mut seen: BTreeSet<Pos> = BTreeSet::new();
    let mut arena: Vec<(Pos, Option<(usize, WitnessStep)>)> = Vec::new();
    let mut queue: VecDeque<usize> = VecDeque::new();
    for side in [1u8, 2u8] {
        let pos: Pos = (side, 0, BTreeSet::from([0]));
        seen.insert(pos.clone());
        arena.push((pos, None));
        queue.push_back(arena.len() - 1);
    }
    let path = |arena: &Vec<(Pos, Option<(usize, WitnessStep)>)>, mut i: usize| {
        let mut steps = Vec::new();
        while let Some((prev, step)) = &arena[i].1.as_ref().map(|(p, s)| (*p, s.clone())) {
            steps.push(step.clone());
            i = *prev;
        }
        steps.reverse();
        steps
    };
    while let Some(i) = queue.pop_front() {
        if arena.len() > WITNESS_CAP {
            break;
        }
        let (side, a, ds) = arena[i].0.clone();
        let (succ_a, succ_d, frontier_a, frontier_d, states_a) = if side == 1 {
            (&g.succ1, &g.succ2, g.frontier1, g.frontier2, g.states1)
        } else {
            (&g.succ2, &g.succ1, g.frontier2, g.frontier1, g.states2)
        };
        let barbs_bad = |d: usize| {
            if side == 1 {
                g.barbs_differ(a, d)
            } else {
                g.barbs_differ(d, a)
            }
        };
        if g.barbs1.is_some() && ds.iter().all(|&d| barbs_bad(d)) {
            return Witness { steps: path(&arena, i), reason: "barb mismatch".to_string() };
        }
        if frontier_a.contains(&a) || ds.iter().any(|d| frontier_d.contains(d)) {
            continue;
        }
        for &(l, a2) in &succ_a[a] {
            let responses: BTreeSet<usize> = ds
                .iter()
                .flat_map(|&d| {
                    succ_d[d]
                        .iter()
                        .filter(move |&&(l2, _)| l2 == l)
                        .map(|&(_, d2)| d2)
                })
                .collect();
            let step = WitnessStep {
                side,
                from: states_a[a].clone(),
                to: states_a[a2].clone(),
                label: g.label_text(l),
            };
            if responses.is_empty() {
                let mut steps = path(&arena, i);
                let reason = match g.label_text(l) {
                    Some(t) => format!("unmatched transition {t}"),
                    None => "unmatched reduction".to_string(),
                };
                steps.push(step);
                return Witness { steps, reason };
            }
            let pos: Pos = (side, a2, responses);
            if seen.insert(pos.clone()) {
                arena.push((pos, Some((i, step))));
                queue.push_back(arena.len() - 1);
            }
        }
    }
    Witness {
        steps: Vec::new(),
        reason: "distinguished by partition refinement; no linear attacker path found"
            .to_string(),
    }
}

fn check_core(g: &Game) -> GameResult {
    if g.complete {
        if refine(g) {
            GameResult::Bisimilar
        } else {
            GameResult::NotBisimilar(find_witness(g))
        }
    } else {
        bounded(g)
    }
}

/// Strong barbed bisimilarity on the two reduction graphs: related
/// states carry equal barb sets and match each other's reductions.
pub fn check_barbed_bisim(b1: &Bts, b2: &Bts) -> GameResult {
    check_core(&game_bts(b1, b2, true))
}

/// As above with the barb requirement dropped.
pub fn check_reduction_bisim(b1: &Bts, b2: &Bts) -> GameResult {
    check_core(&game_bts(b1, b2, false))
}

/// Strong bisimilarity on labelled systems explored over one pool.
pub fn check_strong_bisim(l1: &Lts, l2: &Lts) -> Result<GameResult, EquivError> {
    if l1.pool != l2.pool {
        return Err(EquivError::PoolMismatch);
    }
    Ok(check_core(&game_lts(l1, l2)))
}

fn replay(g: &Game, w: &Witness) -> bool {
    if w.steps.is_empty() {
        return g.barbs_differ(0, 0);
    }
    let side = w.steps[0].side;
    if w.steps.iter().any(|s| s.side != side) {
        return false;
    }
    let (succ_a, succ_d, frontier_a, frontier_d, states_a) = if side == 1 {
        (&g.succ1, &g.succ2, g.frontier1, g.frontier2, g.states1)
    } else {
        (&g.succ2, &g.succ1, g.frontier2, g.frontier1, g.states2)
    };
    let mut att = 0usize;
    let mut ds: BTreeSet<usize> = BTreeSet::from([0]);
    for (k, step) in w.steps.iter().enumerate() {
        if states_a[att] != step.from || frontier_a.contains(&att) {
            return false;
        }
        if ds.iter().any(|d| frontier_d.contains(d)) {
            return false;
        }
        let found = succ_a[att].iter().find(|&&(l, a2)| {
            states_a[a2] == step.to && g.label_text(l) == step.label
        });
        let Some(&(l, a2)) = found else { return false };
        ds = ds
            .iter()
            .flat_map(|&d| {
                succ_d[d]
                    .iter()
                    .filter(move |&&(l2, _)| l2 == l)
                    .map(|&(_, d2)| d2)
            })
            .collect();
        att = a2;
        if ds.is_empty() {
            return k + 1 == w.steps.len();
        }
    }
    let barbs_bad = |d: usize| {
        if side == 1 {
            g.barbs_differ(att, d)
        } else {
            g.barbs_differ(d, att)
        }
    };
    g.barbs1.is_some() && ds.iter().all(|&d| barbs_bad(d))
}

/// Check that a witness really drives the two reduction graphs into a
/// violation: each attacker step exists, and at the end either no
/// response remains or every remaining response fails the barb clause.
pub fn replay_witness_bts(b1: &Bts, b2: &Bts, w: &Witness, use_barbs: bool) -> bool {
    replay(&game_bts(b1, b2, use_barbs), w)
}

pub fn replay_witness_lts(l1: &Lts, l2: &Lts, w: &Witness) -> bool {
    replay(&game_lts(l1, l2), w)
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn bts_dot(b: &Bts, name: &str) -> String {
    let mut out = format!("digraph {name} {{\n");
    for (i, key) in b.states.iter().enumerate() {
        let barbs: Vec<String> = b.barbs[i].iter().map(|x| x.to_string()).collect();
        let label = if barbs.is_empty() {
            key.clone()
        } else {
            format!("{key}\\n{{{}}}", barbs.join(", "))
        };
        out.push_str(&format!("  s{i} [label=\"{}\"];\n", dot_escape(&label)));
    }
    for (i, row) in b.reductions.iter().enumerate() {
        for j in row {
            out.push_str(&format!("  s{i} -> s{j} [style=bold];\n"));
        }
    }
    out.push_str("}\n");
    out
}

pub fn lts_dot(l: &Lts, name: &str) -> String {
    let mut out = format!("digraph {name} {{\n");
    for (i, key) in l.states.iter().enumerate() {
        out.push_str(&format!("  s{i} [label=\"{}\"];\n", dot_escape(key)));
    }
    for (i, row) in l.transitions.iter().enumerate() {
        for (a, j) in row {
            let style = if a.is_tau() { " style=bold" } else { "" };
            out.push_str(&format!(
                "  s{i} -> s{j} [label=\"{}\"{style}];\n",
                dot_escape(&a.to_string())
            ));
        }
    }
    out.push_str("}\n");
    out
}
