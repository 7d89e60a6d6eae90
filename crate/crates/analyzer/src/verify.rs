use std::fmt;

use crate::adversary::AdversaryModel;
use crate::error::{AnalyzerError, Result};
use crate::system::TransitionSystem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Violation {
    /// A program transition leaves the invariant.
    ClosureEdge,
    /// An adversary transition leaves the invariant.
    AdversaryClosureEdge,
    /// A cycle of program transitions outside the invariant.
    Cycle,
    /// A state outside the invariant with no way to continue.
    Deadlock,
    /// A program transition is enabled inside the invariant.
    NotSilent,
    /// After an adversary step from the invariant, `k - 1` program steps can
    /// end outside it.
    NotContained,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Violation::ClosureEdge => "program transition leaves the invariant",
            Violation::AdversaryClosureEdge => "adversary transition leaves the invariant",
            Violation::Cycle => "cycle outside the invariant",
            Violation::Deadlock => "deadlock outside the invariant",
            Violation::NotSilent => "transition enabled inside the invariant",
            Violation::NotContained => "adversary step not repaired within k-1 program steps",
        };
        f.write_str(s)
    }
}

/// A step along a witness path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    Program,
    Adversary,
    Stutter,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CounterExample {
    pub violation: Violation,
    /// Witness states, as indices into the transition system. For cycles
    /// the first state is repeated at the end.
    pub path: Vec<u32>,
    /// How each state after the first was reached.
    pub steps: Vec<Step>,
}

impl CounterExample {
    fn edge(violation: Violation, s: u32, t: u32, step: Step) -> Self {
        CounterExample { violation, path: vec![s, t], steps: vec![step] }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    CounterExample(CounterExample),
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    pub fn counter_example(&self) -> Option<&CounterExample> {
        match self {
            Verdict::Pass => None,
            Verdict::CounterExample(c) => Some(c),
        }
    }

    pub fn violation(&self) -> Option<Violation> {
        self.counter_example().map(|c| c.violation)
    }
}

impl From<Result<(), CounterExample>> for Verdict {
    fn from(r: Result<(), CounterExample>) -> Self {
        match r {
            Ok(()) => Verdict::Pass,
            Err(c) => Verdict::CounterExample(c),
        }
    }
}

fn check_closure(ts: &TransitionSystem, inv: &[bool]) -> Result<(), CounterExample> {
    for s in ts.states().filter(|&s| inv[s as usize]) {
        if let Some(e) = ts.successors(s).iter().find(|e| !inv[e.to as usize]) {
            return Err(CounterExample::edge(Violation::ClosureEdge, s, e.to, Step::Program));
        }
    }
    Ok(())
}

/// Depth-first search from `starts`. Finds a cycle, or a vertex whose
/// successor list is empty. Successors `>= vertices` are exits and are not
/// followed.
fn find_cycle_or_deadlock<F>(
    vertices: usize,
    starts: impl Iterator<Item = usize>,
    succ: F,
) -> Option<(Violation, Vec<usize>)>
where
    F: Fn(usize) -> Vec<usize>,
{
    const WHITE: u8 = 0;
    const GREY: u8 = 1;
    const BLACK: u8 = 2;
    let mut color = vec![WHITE; vertices];
    for root in starts {
        if color[root] != WHITE {
            continue;
        }
        // Stack of (vertex, successors, next successor position).
        let mut stack: Vec<(usize, Vec<usize>, usize)> = Vec::new();
        color[root] = GREY;
        let first = succ(root);
        if first.is_empty() {
            return Some((Violation::Deadlock, vec![root]));
        }
        stack.push((root, first, 0));
        while let Some(top) = stack.last_mut() {
            if top.2 == top.1.len() {
                color[top.0] = BLACK;
                stack.pop();
                continue;
            }
            let next = top.1[top.2];
            top.2 += 1;
            if next >= vertices {
                continue;
            }
            match color[next] {
                WHITE => {
                    color[next] = GREY;
                    let out = succ(next);
                    if out.is_empty() {
                        let mut path: Vec<usize> = stack.iter().map(|f| f.0).collect();
                        path.push(next);
                        return Some((Violation::Deadlock, path));
                    }
                    stack.push((next, out, 0));
                }
                GREY => {
                    let from = stack.iter().position(|f| f.0 == next).expect("grey vertex is on the stack");
                    let mut path: Vec<usize> = stack[from..].iter().map(|f| f.0).collect();
                    path.push(next);
                    return Some((Violation::Cycle, path));
                }
                _ => {}
            }
        }
    }
    None
}

fn check_convergence(ts: &TransitionSystem, inv: &[bool]) -> Result<(), CounterExample> {
    let outside = ts.states().filter(|&s| !inv[s as usize]).map(|s| s as usize);
    let found = find_cycle_or_deadlock(ts.state_count(), outside, |s| {
        let out = ts.successors(s as u32);
        if out.is_empty() {
            return Vec::new();
        }
        // Edges into I end the search; a placeholder keeps the state from
        // being read as a deadlock.
        let mut next: Vec<usize> = out.iter().filter(|e| !inv[e.to as usize]).map(|e| e.to as usize).collect();
        if next.len() < out.len() {
            next.push(usize::MAX);
        }
        next
    });
    match found {
        None => Ok(()),
        Some((violation, path)) => {
            let steps = vec![Step::Program; path.len() - 1];
            Err(CounterExample { violation, path: path.into_iter().map(|s| s as u32).collect(), steps })
        }
    }
}

/// Closure under δ_p, and convergence: the program graph restricted to
/// states outside the invariant is acyclic and has no dead ends, so every
/// computation reaches the invariant under any daemon.
pub fn verify_stabilization(ts: &TransitionSystem, invariant: &[bool]) -> Verdict {
    check_closure(ts, invariant).and_then(|_| check_convergence(ts, invariant)).into()
}

/// Stabilization, and no program transition enabled inside the invariant.
pub fn verify_silent(ts: &TransitionSystem, invariant: &[bool]) -> Verdict {
    let stab = verify_stabilization(ts, invariant);
    if !stab.is_pass() {
        return stab;
    }
    for s in ts.states().filter(|&s| invariant[s as usize]) {
        if let Some(e) = ts.successors(s).first() {
            return Verdict::CounterExample(CounterExample::edge(Violation::NotSilent, s, e.to, Step::Program));
        }
    }
    Verdict::Pass
}

fn check_k(k: u32) -> Result<()> {
    if k < 2 {
        return Err(AnalyzerError::InvalidK(k));
    }
    Ok(())
}

/// Convergence of the product with a steps-since-adversary counter. The
/// counter runs over `0..k`; an adversary step needs the counter at `k - 1`
/// or a state where no program transition is enabled, and resets it.
fn check_product_convergence(
    ts: &TransitionSystem,
    adv: &AdversaryModel,
    k: u32,
    inv: &[bool],
) -> Result<(), CounterExample> {
    let k = k as usize;
    let n = ts.state_count();
    let id = |s: usize, c: usize| s * k + c;
    let starts = (0..n).filter(|&s| !inv[s]).map(|s| id(s, k - 1));
    let found = find_cycle_or_deadlock(n * k, starts, |v| {
        let (s, c) = (v / k, v % k);
        let prog = ts.successors(s as u32);
        let mut next = Vec::new();
        let mut reaches_inv = false;
        for e in prog {
            if inv[e.to as usize] {
                reaches_inv = true;
            } else {
                next.push(id(e.to as usize, (c + 1).min(k - 1)));
            }
        }
        if c == k - 1 || prog.is_empty() {
            for e in adv.successors(s as u32) {
                if inv[e.to as usize] {
                    reaches_inv = true;
                } else {
                    next.push(id(e.to as usize, 0));
                }
            }
        }
        if reaches_inv {
            next.push(usize::MAX);
        }
        next
    });
    match found {
        None => Ok(()),
        Some((violation, path)) => {
            let steps = path.windows(2).map(|w| if w[1] % k == 0 { Step::Adversary } else { Step::Program }).collect();
            Err(CounterExample { violation, path: path.into_iter().map(|v| (v / k) as u32).collect(), steps })
        }
    }
}

fn check_adversary_closure(adv: &AdversaryModel, inv: &[bool]) -> Result<(), CounterExample> {
    for (s, t) in adv.pairs() {
        if inv[s as usize] && !inv[t as usize] {
            return Err(CounterExample::edge(Violation::AdversaryClosureEdge, s, t, Step::Adversary));
        }
    }
    Ok(())
}

/// k-active stabilization: the invariant is closed under program and
/// adversary transitions, and every computation in which the adversary acts
/// at most once per `k - 1` program steps reaches the invariant.
pub fn verify_k_active(ts: &TransitionSystem, adv: &AdversaryModel, k: u32, invariant: &[bool]) -> Result<Verdict> {
    check_k(k)?;
    Ok(check_closure(ts, invariant)
        .and_then(|_| check_adversary_closure(adv, invariant))
        .and_then(|_| check_product_convergence(ts, adv, k, invariant))
        .into())
}

/// Every path of `steps` program transitions from `s1`, padded with
/// stutter steps where no transition is enabled, ends in the invariant.
/// Returns a failing path otherwise.
fn contained_from(
    ts: &TransitionSystem,
    inv: &[bool],
    bad: &[Vec<bool>],
    s1: u32,
    steps: usize,
) -> Option<(Vec<u32>, Vec<Step>)> {
    if !bad[steps][s1 as usize] {
        return None;
    }
    let mut path = vec![s1];
    let mut kinds = Vec::new();
    let mut s = s1;
    for j in (1..=steps).rev() {
        let out = ts.successors(s);
        if out.is_empty() {
            kinds.push(Step::Stutter);
        } else {
            s = out.iter().map(|e| e.to).find(|&t| bad[j - 1][t as usize]).expect("bad layer has a bad successor");
            kinds.push(Step::Program);
        }
        path.push(s);
    }
    debug_assert!(!inv[s as usize]);
    Some((path, kinds))
}

/// `bad[j][s]`: some path of `j` program steps from `s`, padded with
/// stutter steps, ends outside the invariant.
fn bad_layers(ts: &TransitionSystem, inv: &[bool], steps: usize) -> Vec<Vec<bool>> {
    let mut layers = Vec::with_capacity(steps + 1);
    layers.push(inv.iter().map(|&i| !i).collect::<Vec<bool>>());
    for j in 1..=steps {
        let prev: &Vec<bool> = &layers[j - 1];
        let layer = ts
            .states()
            .map(|s| {
                let out = ts.successors(s);
                if out.is_empty() {
                    prev[s as usize]
                } else {
                    out.iter().any(|e| prev[e.to as usize])
                }
            })
            .collect();
        layers.push(layer);
    }
    layers
}

fn check_containment(ts: &TransitionSystem, adv: &AdversaryModel, k: u32, inv: &[bool]) -> Result<(), CounterExample> {
    let steps = (k - 1) as usize;
    let bad = bad_layers(ts, inv, steps);
    for s0 in ts.states().filter(|&s| inv[s as usize]) {
        for e in adv.successors(s0) {
            if let Some((mut path, mut kinds)) = contained_from(ts, inv, &bad, e.to, steps) {
                path.insert(0, s0);
                kinds.insert(0, Step::Adversary);
                return Err(CounterExample { violation: Violation::NotContained, path, steps: kinds });
            }
        }
    }
    Ok(())
}

/// Contained k-active stabilization: the invariant is closed under program
/// transitions, every computation with at most one adversary step per
/// `k - 1` program steps reaches it, and an adversary step taken inside the
/// invariant is repaired by the next `k - 1` program steps. The invariant
/// need not be closed under adversary transitions.
pub fn verify_contained_k_active(
    ts: &TransitionSystem,
    adv: &AdversaryModel,
    k: u32,
    invariant: &[bool],
) -> Result<Verdict> {
    check_k(k)?;
    Ok(check_closure(ts, invariant)
        .and_then(|_| check_product_convergence(ts, adv, k, invariant))
        .and_then(|_| check_containment(ts, adv, k, invariant))
        .into())
}

/// The literal k-active definition followed by the containment condition.
pub fn verify_contained_k_active_strict(
    ts: &TransitionSystem,
    adv: &AdversaryModel,
    k: u32,
    invariant: &[bool],
) -> Result<Verdict> {
    let base = verify_k_active(ts, adv, k, invariant)?;
    if !base.is_pass() {
        return Ok(base);
    }
    Ok(check_containment(ts, adv, k, invariant).into())
}

/// Smallest `k >= 2` for which `verify` passes, searched up to `max_k`.
/// `verify` must be monotone in `k`.
pub fn minimal_k<F>(max_k: u32, mut verify: F) -> Result<Option<u32>>
where
    F: FnMut(u32) -> Result<Verdict>,
{
    let max_k = max_k.max(2);
    if !verify(max_k)?.is_pass() {
        return Ok(None);
    }
    let (mut lo, mut hi) = (2u32, max_k);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if verify(mid)?.is_pass() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(Some(lo))
}
