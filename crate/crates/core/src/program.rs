//! Guarded-command programs over a graph and their transition semantics.
//!
//! Guards and statements are closures over a [`LocalView`], so the same
//! objects drive live execution (where views may be stale) and exhaustive
//! enumeration (where views are always fresh).

use std::fmt;
use std::sync::Arc;

use crate::error::{ModelError, Result};
use crate::graph::{GraphTopology, NodeId};
use crate::space::StateSpace;
use crate::state::{GlobalState, LocalView, VarDecl};
use crate::value::Value;

/// New values for some of the owner's variables, by slot.
pub type Assignment = Vec<(usize, Value)>;

type GuardFn = dyn Fn(&LocalView) -> bool + Send + Sync;
type StatementFn = dyn Fn(&LocalView) -> Assignment + Send + Sync;

/// A named `guard -> statement` pair, shared by every node that runs it.
pub struct Rule {
    name: String,
    guard: Box<GuardFn>,
    statement: Box<StatementFn>,
}

impl Rule {
    pub fn new<G, S>(name: impl Into<String>, guard: G, statement: S) -> Self
    where
        G: Fn(&LocalView) -> bool + Send + Sync + 'static,
        S: Fn(&LocalView) -> Assignment + Send + Sync + 'static,
    {
        Rule { name: name.into(), guard: Box::new(guard), statement: Box::new(statement) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Rule").field("name", &self.name).finish_non_exhaustive()
    }
}

/// An action of one node.
#[derive(Clone, Debug)]
pub struct ActionDef {
    owner: NodeId,
    rule: Arc<Rule>,
}

impl ActionDef {
    pub fn new(owner: NodeId, rule: Arc<Rule>) -> Self {
        ActionDef { owner, rule }
    }

    pub fn owner(&self) -> NodeId {
        self.owner
    }

    pub fn rule_name(&self) -> &str {
        self.rule.name()
    }

    pub fn is_enabled(&self, view: &LocalView) -> bool {
        debug_assert_eq!(view.owner(), self.owner);
        (self.rule.guard)(view)
    }

    /// Runs the statement on `view` without checking the guard.
    pub fn execute(&self, view: &LocalView) -> Assignment {
        (self.rule.statement)(view)
    }
}

impl PartialEq for ActionDef {
    fn eq(&self, other: &Self) -> bool {
        self.owner == other.owner && Arc::ptr_eq(&self.rule, &other.rule)
    }
}

/// One edge of δ_p, labeled by the acting node and rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub from: GlobalState,
    pub to: GlobalState,
    pub node: NodeId,
    pub rule: String,
}

#[derive(Clone, Debug)]
pub struct ProgramSpec {
    topology: Arc<GraphTopology>,
    vars: Arc<[VarDecl]>,
    actions: Arc<[Vec<ActionDef>]>,
}

impl ProgramSpec {
    /// `actions[j]` lists node `j`'s actions in priority order.
    pub fn new(topology: Arc<GraphTopology>, vars: Vec<VarDecl>, actions: Vec<Vec<ActionDef>>) -> Result<Self> {
        if vars.is_empty() {
            return Err(ModelError::InvalidParameter("program declares no variables".into()));
        }
        if actions.len() != topology.node_count() {
            return Err(ModelError::InvalidParameter(format!(
                "{} action lists for {} nodes",
                actions.len(),
                topology.node_count()
            )));
        }
        for (j, list) in actions.iter().enumerate() {
            for a in list {
                if !topology.contains(a.owner()) {
                    return Err(ModelError::UnknownNode(a.owner()));
                }
                if a.owner().index() != j {
                    return Err(ModelError::InvalidParameter(format!(
                        "action `{}` of node {} listed under node {j}",
                        a.rule_name(),
                        a.owner()
                    )));
                }
            }
        }
        Ok(ProgramSpec { topology, vars: vars.into(), actions: actions.into() })
    }

    pub fn topology(&self) -> &GraphTopology {
        &self.topology
    }

    pub fn topology_arc(&self) -> &Arc<GraphTopology> {
        &self.topology
    }

    pub fn vars(&self) -> &[VarDecl] {
        &self.vars
    }

    pub fn vars_per_node(&self) -> usize {
        self.vars.len()
    }

    pub fn node_count(&self) -> usize {
        self.topology.node_count()
    }

    pub fn slot_of(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|d| d.name == name)
    }

    pub fn actions_of(&self, j: NodeId) -> &[ActionDef] {
        &self.actions[j.index()]
    }

    /// State with every variable at its declared default.
    pub fn default_state(&self) -> GlobalState {
        let defaults: Vec<Value> = self.vars.iter().map(|d| d.default).collect();
        GlobalState::filled(self.node_count(), &defaults)
    }

    pub fn view(&self, state: &GlobalState, j: NodeId) -> LocalView {
        LocalView::extract(&self.topology, state, j)
    }

    /// Actions of `j` whose guards hold on the fresh view of `state`.
    pub fn enabled_actions(&self, state: &GlobalState, j: NodeId) -> Vec<&ActionDef> {
        let view = self.view(state, j);
        self.enabled_on(&view)
    }

    pub fn enabled_on(&self, view: &LocalView) -> Vec<&ActionDef> {
        self.actions[view.owner().index()].iter().filter(|a| a.is_enabled(view)).collect()
    }

    /// Highest-priority action enabled on `view`.
    pub fn first_enabled(&self, view: &LocalView) -> Option<&ActionDef> {
        self.actions[view.owner().index()].iter().find(|a| a.is_enabled(view))
    }

    pub fn any_enabled(&self, state: &GlobalState) -> bool {
        self.topology.nodes().any(|j| self.first_enabled(&self.view(state, j)).is_some())
    }

    /// Checks an assignment against the owner's variable domains.
    pub fn check_assignment(&self, owner: NodeId, assignment: &Assignment) -> Result<()> {
        for &(slot, v) in assignment {
            let decl = self
                .vars
                .get(slot)
                .ok_or_else(|| ModelError::InvalidParameter(format!("statement wrote unknown slot {slot}")))?;
            if !decl.domain.contains(&v) {
                return Err(ModelError::OutOfDomain { node: owner, var: decl.name.clone(), value: v });
            }
        }
        Ok(())
    }

    /// Executes `action`'s statement on `view` and writes the result into a
    /// copy of `state`. Only the owner's variables change; the new values are
    /// computed from `view`, which need not agree with `state`.
    pub fn apply_action(&self, state: &GlobalState, action: &ActionDef, view: &LocalView) -> Result<GlobalState> {
        if view.owner() != action.owner() {
            return Err(ModelError::ViewMismatch { view: view.owner(), action: action.owner() });
        }
        let assignment = action.execute(view);
        self.check_assignment(action.owner(), &assignment)?;
        let mut next = state.clone();
        for (slot, v) in assignment {
            next.set(action.owner(), slot, v);
        }
        Ok(next)
    }

    /// Successors of `state` under δ_p with fresh views, labeled by
    /// `(node, action)`.
    pub fn successors(&self, state: &GlobalState) -> Result<Vec<(GlobalState, &ActionDef)>> {
        let mut out = Vec::new();
        for j in self.topology.nodes() {
            let view = self.view(state, j);
            for a in self.enabled_on(&view) {
                out.push((self.apply_action(state, a, &view)?, a));
            }
        }
        Ok(out)
    }

    /// The full transition relation δ_p, enumerated over the declared
    /// domains. Refuses state spaces larger than `cap`.
    pub fn program_transitions(&self, cap: u64) -> Result<Vec<Transition>> {
        let space = StateSpace::new(self, cap)?;
        let mut out = Vec::new();
        for idx in 0..space.size() {
            let s = space.decode(idx);
            for (t, a) in self.successors(&s)? {
                out.push(Transition { from: s.clone(), to: t, node: a.owner(), rule: a.rule_name().to_string() });
            }
        }
        Ok(out)
    }

    /// Copy of this program with node actions replaced, keeping topology and
    /// variables. Used to build protocol variants.
    pub fn with_actions(&self, actions: Vec<Vec<ActionDef>>) -> Result<Self> {
        ProgramSpec::new(self.topology.clone(), self.vars.to_vec(), actions)
    }
}
