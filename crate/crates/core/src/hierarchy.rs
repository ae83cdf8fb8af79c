//! The account hierarchy: a parent-edge tree rooted at the genesis account.
//!
//! Edges are created when an account with no roles is granted roles, and
//! survive later role removal. A subsequent grant from a different issuer
//! rewires the edge, which is how accounts move between managers.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::ledger::RoleIndex;
use crate::txmodel::{AccountKey, Role, RoleSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HierarchyError {
    #[error("granting {target:?} from {issuer:?} would create a cycle")]
    CycleCreated { issuer: AccountKey, target: AccountKey },
    #[error("unknown node {0:?}")]
    UnknownNode(AccountKey),
    #[error("no manager ancestor above {0:?}")]
    NoManagerAncestor(AccountKey),
    #[error("{0:?} does not hold the L role")]
    MissingLRole(AccountKey),
}

/// Accounts under some node's authority, including the node itself.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ScopeSet(pub BTreeSet<AccountKey>);

impl ScopeSet {
    pub fn contains(&self, key: &AccountKey) -> bool {
        self.0.contains(key)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &AccountKey> {
        self.0.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HierarchyTree {
    root: Option<AccountKey>,
    parent: BTreeMap<AccountKey, Option<AccountKey>>,
    children: BTreeMap<AccountKey, BTreeSet<AccountKey>>,
}

impl HierarchyTree {
    pub fn with_root(root: AccountKey) -> Self {
        let mut t = HierarchyTree { root: Some(root), ..Default::default() };
        t.parent.insert(root, None);
        t
    }

    pub fn root(&self) -> Option<AccountKey> {
        self.root
    }

    pub fn is_registered(&self, key: &AccountKey) -> bool {
        self.parent.contains_key(key)
    }

    pub fn parent(&self, key: &AccountKey) -> Option<AccountKey> {
        self.parent.get(key).copied().flatten()
    }

    pub fn children(&self, key: &AccountKey) -> impl Iterator<Item = &AccountKey> {
        self.children.get(key).into_iter().flatten()
    }

    /// Registered accounts in key order.
    pub fn nodes(&self) -> impl Iterator<Item = &AccountKey> {
        self.parent.keys()
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// (parent, child) pairs sorted by parent then child key.
    pub fn edges(&self) -> Vec<(AccountKey, AccountKey)> {
        let mut out: Vec<_> = self
            .parent
            .iter()
            .filter_map(|(c, p)| p.map(|p| (p, *c)))
            .collect();
        out.sort();
        out
    }

    /// Distance from the root; the root has depth 0.
    pub fn depth(&self, key: &AccountKey) -> Result<u32, HierarchyError> {
        if !self.is_registered(key) {
            return Err(HierarchyError::UnknownNode(*key));
        }
        Ok(self.ancestors(key).count() as u32)
    }

    /// Strict ancestors, nearest first.
    pub fn ancestors(&self, key: &AccountKey) -> impl Iterator<Item = AccountKey> + '_ {
        std::iter::successors(self.parent(key), move |k| self.parent(k))
    }

    /// True if `ancestor` equals `node` or lies on its parent chain.
    pub fn is_ancestor_or_self(&self, ancestor: &AccountKey, node: &AccountKey) -> bool {
        node == ancestor || self.ancestors(node).any(|a| a == *ancestor)
    }

    /// Validation-time check for a role transition; see [`Self::on_role_transition`].
    pub fn check_transition(
        &self,
        issuer: &AccountKey,
        target: &AccountKey,
        old_roles: RoleSet,
        new_roles: RoleSet,
    ) -> Result<(), HierarchyError> {
        if self.root.is_none() || !old_roles.is_empty() || new_roles.is_empty() {
            return Ok(());
        }
        if self.is_ancestor_or_self(target, issuer) {
            return Err(HierarchyError::CycleCreated { issuer: *issuer, target: *target });
        }
        Ok(())
    }

    /// Returns the tree after `issuer` changes `target`'s roles from `old_roles`
    /// to `new_roles`.
    pub fn on_role_transition(
        &self,
        issuer: &AccountKey,
        target: &AccountKey,
        old_roles: RoleSet,
        new_roles: RoleSet,
    ) -> Result<HierarchyTree, HierarchyError> {
        let mut next = self.clone();
        next.transition(issuer, target, old_roles, new_roles)?;
        Ok(next)
    }

    pub(crate) fn transition(
        &mut self,
        issuer: &AccountKey,
        target: &AccountKey,
        old_roles: RoleSet,
        new_roles: RoleSet,
    ) -> Result<(), HierarchyError> {
        if self.root.is_none() {
            // genesis grant
            *self = HierarchyTree::with_root(*target);
            return Ok(());
        }
        self.check_transition(issuer, target, old_roles, new_roles)?;
        if !old_roles.is_empty() || new_roles.is_empty() {
            return Ok(());
        }
        if let Some(Some(prev)) = self.parent.get(target) {
            if let Some(set) = self.children.get_mut(prev) {
                set.remove(target);
            }
        }
        self.parent.insert(*target, Some(*issuer));
        self.children.entry(*issuer).or_default().insert(*target);
        Ok(())
    }

    /// Breadth-first search over child edges from `node`, including `node`.
    pub fn manager_scope(&self, node: &AccountKey) -> Result<ScopeSet, HierarchyError> {
        if !self.is_registered(node) {
            return Err(HierarchyError::UnknownNode(*node));
        }
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([*node]);
        while let Some(n) = queue.pop_front() {
            if seen.insert(n) {
                queue.extend(self.children(&n).copied());
            }
        }
        Ok(ScopeSet(seen))
    }

    /// Walks up from `node` to the first account holding M and returns that
    /// account's manager scope.
    pub fn nearest_manager(&self, node: &AccountKey, roles: &RoleIndex) -> Result<AccountKey, HierarchyError> {
        if !self.is_registered(node) {
            return Err(HierarchyError::UnknownNode(*node));
        }
        std::iter::once(*node)
            .chain(self.ancestors(node))
            .find(|k| roles.roles(k).contains(Role::Manager))
            .ok_or(HierarchyError::NoManagerAncestor(*node))
    }

    pub fn law_scope(&self, node: &AccountKey, roles: &RoleIndex) -> Result<ScopeSet, HierarchyError> {
        if !self.is_registered(node) {
            return Err(HierarchyError::UnknownNode(*node));
        }
        if !roles.roles(node).contains(Role::LawEnforcement) {
            return Err(HierarchyError::MissingLRole(*node));
        }
        let anchor = self.nearest_manager(node, roles)?;
        self.manager_scope(&anchor)
    }
}

/// Node label in the `Name (M, C, L, U, A, D)` style.
pub fn dot_label(name: &str, roles: RoleSet, locked: bool) -> String {
    let mut parts: Vec<String> = roles.iter().map(|r| r.letter().to_string()).collect();
    if locked {
        parts.push("D".into());
    }
    format!("{name} ({})", parts.join(", "))
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Renders the hierarchy as a Graphviz digraph.
///
/// Nodes are every registered account plus `extra` (accounts that hold coin
/// but were never registered), in account-key order. Accounts without an
/// entry in `names` are labelled by a short key prefix.
pub fn export_dot(
    tree: &HierarchyTree,
    roles: &RoleIndex,
    names: &BTreeMap<AccountKey, String>,
    extra: &[AccountKey],
) -> String {
    let name_of = |k: &AccountKey| names.get(k).cloned().unwrap_or_else(|| k.short());
    let nodes: BTreeSet<AccountKey> = tree.nodes().copied().chain(extra.iter().copied()).collect();

    let mut out = String::from("digraph hierarchy {\n    node [shape=box];\n");
    for k in &nodes {
        let name = name_of(k);
        let label = dot_label(&name, roles.roles(k), roles.is_locked(k));
        let _ = writeln!(out, "    {} [label={}];", quote(&name), quote(&label));
    }
    for (p, c) in tree.edges() {
        let _ = writeln!(out, "    {} -> {};", quote(&name_of(&p)), quote(&name_of(&c)));
    }
    out.push_str("}\n");
    out
}
