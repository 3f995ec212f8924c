//! Strong junction trees: moralization, temporally constrained triangulation,
//! clique-tree construction with a strong root, and table expansion for moved
//! observations.

mod schedule;

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{InfluenceDiagram, ModelError, ObservationScenario, VarId};

pub use schedule::{control_schedule, validate_schedule, ControlSchedule, EliminationStep, Operator};

#[derive(Debug, Error)]
pub enum JtreeError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("elimination order must list every variable exactly once")]
    IncompleteOrder,
    #[error("no clique contains the family of `{0}`")]
    AssignmentFailure(String),
    #[error("`{0}` does not occur in the junction tree")]
    NotInTree(String),
    #[error("expansion required: `{variable}` cannot be eliminated after `{blocking}` on this tree")]
    ExpansionRequired { variable: String, blocking: String },
    #[error("invalid control schedule: {0}")]
    InvalidSchedule(String),
}

/// Undirected graph over the diagram's variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MoralGraph {
    adjacency: Vec<BTreeSet<VarId>>,
}

impl MoralGraph {
    fn with_families(n: usize, families: &[Vec<VarId>]) -> Self {
        let mut adjacency = vec![BTreeSet::new(); n];
        for fam in families {
            for (i, &a) in fam.iter().enumerate() {
                for &b in &fam[i + 1..] {
                    if a != b {
                        adjacency[a.0].insert(b);
                        adjacency[b.0].insert(a);
                    }
                }
            }
        }
        MoralGraph { adjacency }
    }

    pub fn neighbors(&self, v: VarId) -> &BTreeSet<VarId> {
        &self.adjacency[v.0]
    }

    pub fn has_edge(&self, a: VarId, b: VarId) -> bool {
        self.adjacency[a.0].contains(&b)
    }

    /// Edges as sorted pairs `(low, high)`.
    pub fn edges(&self) -> Vec<(VarId, VarId)> {
        let mut out = Vec::new();
        for (i, adj) in self.adjacency.iter().enumerate() {
            for &b in adj {
                if b.0 > i {
                    out.push((VarId(i), b));
                }
            }
        }
        out
    }
}

/// Every CPT family and every utility-parent set of the diagram.
pub(crate) fn families(id: &InfluenceDiagram) -> Vec<Vec<VarId>> {
    let mut out: Vec<Vec<VarId>> = id
        .cpts()
        .iter()
        .map(|c| {
            let mut f = c.parents.clone();
            f.push(c.child);
            f
        })
        .collect();
    out.extend(id.utilities().iter().map(|u| u.parents.clone()));
    out
}

/// Marries the parents of every chance variable and of every utility node, then
/// drops directions. Decisions carry no informational arcs, so none are added.
pub fn moralize(id: &InfluenceDiagram) -> MoralGraph {
    MoralGraph::with_families(id.num_variables(), &families(id))
}

/// Greedy min-fill elimination of `group` on `graph`, appending to `order`.
/// Ties go to the smallest clique-state product, then to the lexicographically
/// smallest name.
fn eliminate_group(
    id: &InfluenceDiagram,
    graph: &mut [BTreeSet<VarId>],
    group: &[VarId],
    order: &mut Vec<VarId>,
) {
    let mut pending: Vec<VarId> = group.to_vec();
    while !pending.is_empty() {
        let key = |v: VarId| {
            let nb: Vec<VarId> = graph[v.0].iter().copied().collect();
            let mut fill = 0usize;
            for (i, a) in nb.iter().enumerate() {
                for b in &nb[i + 1..] {
                    if !graph[a.0].contains(b) {
                        fill += 1;
                    }
                }
            }
            let states: u128 = nb
                .iter()
                .chain(std::iter::once(&v))
                .map(|x| id.cardinality(*x) as u128)
                .product();
            (fill, states)
        };
        let (pos, _) = pending
            .iter()
            .enumerate()
            .map(|(i, &v)| (i, (key(v), id.name(v))))
            .min_by(|a, b| a.1.cmp(&b.1))
            .expect("pending is non-empty");
        let v = pending.swap_remove(pos);
        eliminate_vertex(graph, v);
        order.push(v);
    }
}

fn eliminate_vertex(graph: &mut [BTreeSet<VarId>], v: VarId) {
    let nb: Vec<VarId> = graph[v.0].iter().copied().collect();
    for (i, &a) in nb.iter().enumerate() {
        for &b in &nb[i + 1..] {
            graph[a.0].insert(b);
            graph[b.0].insert(a);
        }
    }
    for &a in &nb {
        graph[a.0].remove(&v);
    }
    graph[v.0].clear();
}

/// Elimination order `I_n, D_n, I_{n-1}, ..., D_1, I_0` under `scenario`, with
/// min-fill inside each information set.
pub fn strong_elimination_order(
    id: &InfluenceDiagram,
    scenario: &ObservationScenario,
) -> Result<Vec<VarId>, JtreeError> {
    scenario.validate(id)?;
    let mut graph = moralize(id).adjacency;
    let mut order = Vec::with_capacity(id.num_variables());
    for k in (0..=id.num_decisions()).rev() {
        eliminate_group(id, &mut graph, &scenario.set(k), &mut order);
        if k > 0 {
            let d = id.decisions()[k - 1];
            eliminate_vertex(&mut graph, d);
            order.push(d);
        }
    }
    Ok(order)
}

/// Unconstrained min-fill order, used for probability-only propagation.
pub fn free_elimination_order(id: &InfluenceDiagram, extra: &[Vec<VarId>]) -> Vec<VarId> {
    let mut fams = families(id);
    fams.extend(extra.iter().cloned());
    let mut graph = MoralGraph::with_families(id.num_variables(), &fams).adjacency;
    let all: Vec<VarId> = id.var_ids().collect();
    let mut order = Vec::with_capacity(all.len());
    eliminate_group(id, &mut graph, &all, &mut order);
    order
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clique {
    /// Members sorted by variable index.
    pub members: Vec<VarId>,
    /// Members added by table expansion rather than by triangulation.
    pub expanded: Vec<VarId>,
}

impl Clique {
    pub fn contains(&self, v: VarId) -> bool {
        self.members.binary_search(&v).is_ok()
    }

    fn holds_natively(&self, v: VarId) -> bool {
        self.contains(v) && !self.expanded.contains(&v)
    }
}

/// Rooted clique tree with potential assignments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrongJunctionTree {
    cliques: Vec<Clique>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    root: usize,
    cards: Vec<usize>,
    rank: Vec<usize>,
    cpt_home: Vec<usize>,
    utility_home: Vec<usize>,
    extra_home: Vec<usize>,
}

/// Triangulates along `order` and builds the rooted clique tree. The root is the
/// clique closed last, i.e. the one holding the last eliminated variables.
pub fn build_strong_tree(
    id: &InfluenceDiagram,
    order: &[VarId],
) -> Result<StrongJunctionTree, JtreeError> {
    build_tree(id, order, &[])
}

/// Tree for probability propagation with additional families kept together.
pub fn build_inference_tree(
    id: &InfluenceDiagram,
    extra: &[Vec<VarId>],
) -> Result<StrongJunctionTree, JtreeError> {
    let order = free_elimination_order(id, extra);
    build_tree(id, &order, extra)
}

fn build_tree(
    id: &InfluenceDiagram,
    order: &[VarId],
    extra: &[Vec<VarId>],
) -> Result<StrongJunctionTree, JtreeError> {
    let n = id.num_variables();
    let mut rank = vec![usize::MAX; n];
    for (i, v) in order.iter().enumerate() {
        if v.0 >= n || rank[v.0] != usize::MAX {
            return Err(JtreeError::IncompleteOrder);
        }
        rank[v.0] = i;
    }
    if order.len() != n {
        return Err(JtreeError::IncompleteOrder);
    }

    if n == 0 {
        return Ok(StrongJunctionTree {
            cliques: vec![Clique {
                members: Vec::new(),
                expanded: Vec::new(),
            }],
            parent: vec![None],
            children: vec![Vec::new()],
            root: 0,
            cards: Vec::new(),
            rank,
            cpt_home: Vec::new(),
            utility_home: vec![0; id.utilities().len()],
            extra_home: vec![0; extra.len()],
        });
    }

    let mut fams = families(id);
    fams.extend(extra.iter().cloned());
    let mut graph = MoralGraph::with_families(n, &fams).adjacency;

    // elimination cliques, one node per variable
    let mut sets: Vec<BTreeSet<VarId>> = Vec::with_capacity(n);
    for &v in order {
        let mut c: BTreeSet<VarId> = graph[v.0].clone();
        c.insert(v);
        sets.push(c);
        eliminate_vertex(&mut graph, v);
    }
    let mut parent: Vec<Option<usize>> = (0..n)
        .map(|i| {
            let v = order[i];
            sets[i]
                .iter()
                .filter(|u| **u != v)
                .map(|u| rank[u.0])
                .min()
        })
        .collect();
    let mut alive = vec![true; n];
    let mut forward: Vec<usize> = (0..n).collect();

    // contract edges whose endpoints are nested until every clique is maximal
    loop {
        let mut changed = false;
        for c in 0..n {
            if !alive[c] {
                continue;
            }
            let Some(p) = parent[c] else { continue };
            if sets[p].is_subset(&sets[c]) {
                // parent absorbed into child: child takes the parent's place
                parent[c] = parent[p];
                for (x, px) in parent.iter_mut().enumerate() {
                    if alive[x] && x != c && *px == Some(p) {
                        *px = Some(c);
                    }
                }
                alive[p] = false;
                forward[p] = c;
                changed = true;
            } else if sets[c].is_subset(&sets[p]) {
                for (x, px) in parent.iter_mut().enumerate() {
                    if alive[x] && *px == Some(c) {
                        *px = Some(p);
                    }
                }
                alive[c] = false;
                forward[c] = p;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    // the last-closed clique is the root; other components hang off it
    let mut root = n - 1;
    while !alive[root] {
        root = forward[root];
    }
    while let Some(p) = parent[root] {
        root = p;
    }
    for c in 0..n {
        if alive[c] && c != root && parent[c].is_none() {
            parent[c] = Some(root);
        }
    }

    // compact: order cliques by elimination of their node, root last
    let kept: Vec<usize> = (0..n).filter(|&c| alive[c]).collect();
    let mut new_index = vec![usize::MAX; n];
    for (i, &c) in kept.iter().enumerate() {
        new_index[c] = i;
    }
    let cliques: Vec<Clique> = kept
        .iter()
        .map(|&c| Clique {
            members: sets[c].iter().copied().collect(),
            expanded: Vec::new(),
        })
        .collect();
    let parent: Vec<Option<usize>> = kept.iter().map(|&c| parent[c].map(|p| new_index[p])).collect();
    let root = new_index[root];
    let mut children = vec![Vec::new(); cliques.len()];
    for (c, p) in parent.iter().enumerate() {
        if let Some(p) = p {
            children[*p].push(c);
        }
    }

    let mut tree = StrongJunctionTree {
        cliques,
        parent,
        children,
        root,
        cards: id.var_ids().map(|v| id.cardinality(v)).collect(),
        rank,
        cpt_home: Vec::new(),
        utility_home: Vec::new(),
        extra_home: Vec::new(),
    };
    let depth = tree.depths();
    let home = |fam: &[VarId], what: &str| -> Result<usize, JtreeError> {
        (0..tree.cliques.len())
            .filter(|&c| fam.iter().all(|v| tree.cliques[c].contains(*v)))
            .min_by_key(|&c| (depth[c], c))
            .ok_or_else(|| JtreeError::AssignmentFailure(what.to_string()))
    };
    let cpt_home = id
        .cpts()
        .iter()
        .map(|c| {
            let mut f = c.parents.clone();
            f.push(c.child);
            home(&f, id.name(c.child))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let utility_home = id
        .utilities()
        .iter()
        .map(|u| home(&u.parents, &u.name))
        .collect::<Result<Vec<_>, _>>()?;
    let extra_home = extra
        .iter()
        .map(|f| home(f, "extra family"))
        .collect::<Result<Vec<_>, _>>()?;
    tree.cpt_home = cpt_home;
    tree.utility_home = utility_home;
    tree.extra_home = extra_home;
    Ok(tree)
}

impl StrongJunctionTree {
    pub fn cliques(&self) -> &[Clique] {
        &self.cliques
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, c: usize) -> Option<usize> {
        self.parent[c]
    }

    pub fn children(&self, c: usize) -> &[usize] {
        &self.children[c]
    }

    /// Separator between `c` and its parent.
    pub fn separator(&self, c: usize) -> Option<Vec<VarId>> {
        let p = self.parent[c]?;
        Some(
            self.cliques[c]
                .members
                .iter()
                .copied()
                .filter(|v| self.cliques[p].contains(*v))
                .collect(),
        )
    }

    /// Tree edges `(child, parent)`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.parent
            .iter()
            .enumerate()
            .filter_map(|(c, p)| p.map(|p| (c, p)))
            .collect()
    }

    pub fn cardinality(&self, v: VarId) -> usize {
        self.cards[v.0]
    }

    /// Position of `v` in the elimination order the tree was built from.
    pub fn elimination_rank(&self, v: VarId) -> usize {
        self.rank[v.0]
    }

    /// Clique holding the CPT with index `i` in [`InfluenceDiagram::cpts`].
    pub fn cpt_home(&self, i: usize) -> usize {
        self.cpt_home[i]
    }

    pub fn utility_home(&self, i: usize) -> usize {
        self.utility_home[i]
    }

    pub fn extra_home(&self, i: usize) -> usize {
        self.extra_home[i]
    }

    pub fn depths(&self) -> Vec<usize> {
        let mut depth = vec![0; self.cliques.len()];
        for c in self.top_down() {
            if let Some(p) = self.parent[c] {
                depth[c] = depth[p] + 1;
            }
        }
        depth
    }

    /// Cliques ordered root first, parents before children.
    pub fn top_down(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.cliques.len());
        let mut stack = vec![self.root];
        while let Some(c) = stack.pop() {
            out.push(c);
            stack.extend(self.children[c].iter().rev());
        }
        out
    }

    /// Children before parents, root last.
    pub fn bottom_up(&self) -> Vec<usize> {
        let mut v = self.top_down();
        v.reverse();
        v
    }

    /// Whether `a` lies on the path from `b` to the root (`a <= b`).
    pub fn is_ancestor_or_self(&self, a: usize, mut b: usize) -> bool {
        loop {
            if a == b {
                return true;
            }
            match self.parent[b] {
                Some(p) => b = p,
                None => return false,
            }
        }
    }

    /// The clique closest to the root containing `v`.
    pub fn top_clique(&self, v: VarId) -> Option<usize> {
        let depth = self.depths();
        (0..self.cliques.len())
            .filter(|&c| self.cliques[c].contains(v))
            .min_by_key(|&c| (depth[c], c))
    }

    /// The clique closest to the root holding `v` from triangulation (not expansion).
    pub(crate) fn native_top_clique(&self, v: VarId) -> Option<usize> {
        let depth = self.depths();
        (0..self.cliques.len())
            .filter(|&c| self.cliques[c].holds_natively(v))
            .min_by_key(|&c| (depth[c], c))
    }

    fn lowest_common_ancestor(&self, a: usize, b: usize) -> usize {
        let mut x = a;
        loop {
            if self.is_ancestor_or_self(x, b) {
                return x;
            }
            x = self.parent[x].expect("root is an ancestor of every clique");
        }
    }

    /// Entries in all clique tables plus all separator tables.
    pub fn total_table_size(&self) -> usize {
        let size = |vs: &[VarId]| vs.iter().map(|v| self.cards[v.0]).product::<usize>();
        let cliques: usize = self.cliques.iter().map(|c| size(&c.members)).sum();
        let seps: usize = (0..self.cliques.len())
            .filter_map(|c| self.separator(c))
            .map(|s| size(&s))
            .sum();
        cliques + seps
    }

    /// Exhaustive running-intersection check: every variable's cliques are connected.
    pub fn has_running_intersection(&self) -> bool {
        let nvars = self.cards.len();
        for v in (0..nvars).map(VarId) {
            let holders: Vec<usize> = (0..self.cliques.len())
                .filter(|&c| self.cliques[c].contains(v))
                .collect();
            // connected iff exactly one holder has a parent outside the set
            let tops = holders
                .iter()
                .filter(|&&c| match self.parent[c] {
                    Some(p) => !self.cliques[p].contains(v),
                    None => true,
                })
                .count();
            if !holders.is_empty() && tops != 1 {
                return false;
            }
        }
        true
    }

    /// Plain-text dump: one clique per line, then the edges and the root.
    pub fn dump(&self, id: &InfluenceDiagram) -> String {
        let names = |vs: &[VarId]| {
            let mut ns: Vec<&str> = vs.iter().map(|v| id.name(*v)).collect();
            ns.sort_unstable();
            ns.join(" ")
        };
        let mut out = String::new();
        for (i, c) in self.cliques.iter().enumerate() {
            let _ = writeln!(out, "clique {i}: {}", names(&c.members));
        }
        for (c, p) in self.edges() {
            let sep = self.separator(c).unwrap_or_default();
            let _ = writeln!(out, "edge {c} -> {p}: {}", names(&sep));
        }
        let _ = writeln!(out, "root {}", self.root);
        out
    }
}

/// Adds `a` to every clique between `C_iA` and `C_A` so the tree supports
/// observing `a` immediately before `D_i` as well as at its original placement.
///
/// `C_i` and `C_A` are the cliques closest to the root containing `D_i` and `a`;
/// `C_iA` is their greatest lower bound towards the root.
pub fn expand_for_observation(
    tree: &StrongJunctionTree,
    id: &InfluenceDiagram,
    a: VarId,
    i: usize,
) -> Result<StrongJunctionTree, JtreeError> {
    let d = id.decision(i)?;
    if let Err(illegal) = id.observation_legal_early(a, i - 1)? {
        return Err(JtreeError::Model(ModelError::Illegal(illegal)));
    }
    let c_i = tree
        .top_clique(d)
        .ok_or_else(|| JtreeError::NotInTree(id.name(d).to_string()))?;
    let c_a = tree
        .top_clique(a)
        .ok_or_else(|| JtreeError::NotInTree(id.name(a).to_string()))?;
    let c_ia = tree.lowest_common_ancestor(c_i, c_a);

    let mut out = tree.clone();
    let mut c = c_a;
    while c != c_ia {
        c = tree.parent[c].expect("C_iA lies above C_A");
        let clique = &mut out.cliques[c];
        if !clique.contains(a) {
            let at = clique.members.binary_search(&a).unwrap_err();
            clique.members.insert(at, a);
            clique.expanded.push(a);
        }
    }
    Ok(out)
}

impl InfluenceDiagram {
    /// Legality of observing `x` in `target` when `target` may precede the modeled
    /// placement; placements at or after the modeled one are always allowed here.
    pub(crate) fn observation_legal_early(
        &self,
        x: VarId,
        target: usize,
    ) -> Result<Result<(), crate::model::IllegalObservation>, ModelError> {
        match self.modeled_placement(x) {
            Some(m) if target > m => Ok(match self.ancestor_violation(x, target) {
                Some(e) => Err(e),
                None => Ok(()),
            }),
            _ => self.observation_legal(x, target),
        }
    }
}
