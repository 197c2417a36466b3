//! Exact solver for the uncapacitated transportation problem.
//!
//! Primal network simplex on the bipartite graph `sources -> sinks` with an
//! artificial root, block-search pricing and a spanning tree stored as
//! parent / predecessor arc / thread (preorder) lists with subtree sizes, in the
//! style of LEMON's `NetworkSimplex`.

use crate::error::{Error, Result};

/// `min Σ c_ij f_ij` subject to row sums `supply` and column sums `demand`.
#[derive(Debug, Clone)]
pub struct TransportProblem {
    supply: Vec<f64>,
    demand: Vec<f64>,
    /// Row-major `supply.len() x demand.len()`.
    cost: Vec<f64>,
}

impl TransportProblem {
    pub fn new(supply: Vec<f64>, demand: Vec<f64>, cost: Vec<f64>) -> Result<Self> {
        if supply.is_empty() || demand.is_empty() {
            return Err(Error::Argument("transport problem needs sources and sinks".into()));
        }
        if cost.len() != supply.len() * demand.len() {
            return Err(Error::Argument(format!(
                "cost matrix has {} entries, expected {}",
                cost.len(),
                supply.len() * demand.len()
            )));
        }
        if supply.iter().chain(&demand).any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::Argument("supplies and demands must be finite and non-negative".into()));
        }
        if cost.iter().any(|c| !c.is_finite()) {
            return Err(Error::Argument("costs must be finite".into()));
        }
        let (s, d): (f64, f64) = (supply.iter().sum(), demand.iter().sum());
        if (s - d).abs() > 1e-12 * s.max(d).max(1.0) {
            return Err(Error::Infeasible);
        }
        Ok(Self { supply, demand, cost })
    }

    pub fn n_sources(&self) -> usize {
        self.supply.len()
    }

    pub fn n_sinks(&self) -> usize {
        self.demand.len()
    }

    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.demand.len() + j]
    }
}

/// An optimal plan.
#[derive(Debug, Clone)]
pub struct TransportSolution {
    pub cost: f64,
    /// Row-major flows, same layout as the cost matrix.
    pub flow: Vec<f64>,
    pub pivots: usize,
}

const STATE_TREE: i8 = 0;
const STATE_LOWER: i8 = 1;
const DIR_UP: i8 = 1;
const DIR_DOWN: i8 = -1;
const MIN_BLOCK_SIZE: usize = 10;

struct Simplex<'a> {
    problem: &'a TransportProblem,
    n_src: usize,
    n_dst: usize,
    /// Real arcs come first (`i * n_dst + j`), then one artificial arc per node.
    arc_num: usize,
    root: usize,
    art_source: Vec<usize>,
    art_target: Vec<usize>,
    art_cost: f64,

    flow: Vec<f64>,
    state: Vec<i8>,
    pi: Vec<f64>,
    parent: Vec<Option<usize>>,
    pred: Vec<usize>,
    pred_dir: Vec<i8>,
    thread: Vec<usize>,
    rev_thread: Vec<usize>,
    succ_num: Vec<usize>,
    last_succ: Vec<usize>,
    dirty_revs: Vec<usize>,

    block_size: usize,
    next_arc: usize,
    tolerance: f64,

    in_arc: usize,
    join: usize,
    u_in: usize,
    v_in: usize,
    u_out: usize,
    delta: f64,
}

impl<'a> Simplex<'a> {
    fn new(problem: &'a TransportProblem) -> Self {
        let (n_src, n_dst) = (problem.n_sources(), problem.n_sinks());
        let node_num = n_src + n_dst;
        let arc_num = n_src * n_dst;
        let root = node_num;
        let max_cost = problem.cost.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let art_cost = (max_cost + 1.0) * node_num as f64;

        let all = arc_num + node_num;
        let mut s = Self {
            problem,
            n_src,
            n_dst,
            arc_num,
            root,
            art_source: vec![0; node_num],
            art_target: vec![0; node_num],
            art_cost,
            flow: vec![0.0; all],
            state: vec![STATE_LOWER; all],
            pi: vec![0.0; node_num + 1],
            parent: vec![None; node_num + 1],
            pred: vec![usize::MAX; node_num + 1],
            pred_dir: vec![0; node_num + 1],
            thread: vec![0; node_num + 1],
            rev_thread: vec![0; node_num + 1],
            succ_num: vec![0; node_num + 1],
            last_succ: vec![0; node_num + 1],
            dirty_revs: Vec::new(),
            block_size: ((arc_num as f64).sqrt().ceil() as usize).max(MIN_BLOCK_SIZE),
            next_arc: 0,
            // Reduced costs are differences of potentials of size up to the
            // artificial cost; anything below this is rounding noise.
            tolerance: 16.0 * f64::EPSILON * art_cost,
            in_arc: 0,
            join: 0,
            u_in: 0,
            v_in: 0,
            u_out: 0,
            delta: 0.0,
        };

        s.thread[root] = 0;
        s.rev_thread[0] = root;
        s.succ_num[root] = node_num + 1;
        s.last_succ[root] = root - 1;
        for u in 0..node_num {
            let e = arc_num + u;
            s.parent[u] = Some(root);
            s.pred[u] = e;
            s.thread[u] = u + 1;
            s.rev_thread[u + 1] = u;
            s.succ_num[u] = 1;
            s.last_succ[u] = u;
            s.state[e] = STATE_TREE;
            let supply = s.supply(u);
            if supply >= 0.0 {
                s.pred_dir[u] = DIR_UP;
                s.pi[u] = 0.0;
                s.art_source[u] = u;
                s.art_target[u] = root;
                s.flow[e] = supply;
            } else {
                s.pred_dir[u] = DIR_DOWN;
                s.pi[u] = art_cost;
                s.art_source[u] = root;
                s.art_target[u] = u;
                s.flow[e] = -supply;
            }
        }
        s
    }

    fn supply(&self, u: usize) -> f64 {
        if u < self.n_src {
            self.problem.supply[u]
        } else {
            -self.problem.demand[u - self.n_src]
        }
    }

    fn source(&self, e: usize) -> usize {
        if e < self.arc_num {
            e / self.n_dst
        } else {
            self.art_source[e - self.arc_num]
        }
    }

    fn target(&self, e: usize) -> usize {
        if e < self.arc_num {
            self.n_src + e % self.n_dst
        } else {
            self.art_target[e - self.arc_num]
        }
    }

    fn arc_cost(&self, e: usize) -> f64 {
        if e < self.arc_num {
            self.problem.cost[e]
        } else if self.art_source[e - self.arc_num] == self.root {
            self.art_cost
        } else {
            0.0
        }
    }

    fn reduced(&self, e: usize) -> f64 {
        let (i, j) = (e / self.n_dst, self.n_src + e % self.n_dst);
        f64::from(self.state[e]) * (self.problem.cost[e] + self.pi[i] - self.pi[j])
    }

    /// Block search: scan blocks of arcs cyclically and take the most negative
    /// reduced cost of the first block that has one.
    fn find_entering_arc(&mut self) -> bool {
        let mut min = -self.tolerance;
        let mut found = None;
        let mut cnt = self.block_size;
        let order = (self.next_arc..self.arc_num).chain(0..self.next_arc);
        for e in order {
            let c = self.reduced(e);
            if c < min {
                min = c;
                found = Some(e);
            }
            cnt -= 1;
            if cnt == 0 {
                if found.is_some() {
                    self.next_arc = e;
                    break;
                }
                cnt = self.block_size;
            }
        }
        match found {
            Some(e) => {
                self.in_arc = e;
                true
            }
            None => false,
        }
    }

    fn find_join_node(&mut self) {
        let mut u = self.source(self.in_arc);
        let mut v = self.target(self.in_arc);
        while u != v {
            if self.succ_num[u] < self.succ_num[v] {
                u = self.parent[u].expect("non-root node");
            } else {
                v = self.parent[v].expect("non-root node");
            }
        }
        self.join = u;
    }

    /// Ratio test. Every arc is uncapacitated, so only arcs whose flow
    /// decreases along the cycle can block it.
    fn find_leaving_arc(&mut self) -> bool {
        let (first, second) = if self.state[self.in_arc] == STATE_LOWER {
            (self.source(self.in_arc), self.target(self.in_arc))
        } else {
            (self.target(self.in_arc), self.source(self.in_arc))
        };
        self.delta = f64::INFINITY;
        let mut result = 0;
        let mut u = first;
        while u != self.join {
            if self.pred_dir[u] == DIR_UP {
                let d = self.flow[self.pred[u]].max(0.0);
                if d < self.delta {
                    self.delta = d;
                    self.u_out = u;
                    result = 1;
                }
            }
            u = self.parent[u].expect("non-root node");
        }
        let mut u = second;
        while u != self.join {
            if self.pred_dir[u] == DIR_DOWN {
                let d = self.flow[self.pred[u]].max(0.0);
                if d <= self.delta {
                    self.delta = d;
                    self.u_out = u;
                    result = 2;
                }
            }
            u = self.parent[u].expect("non-root node");
        }
        if result == 1 {
            self.u_in = first;
            self.v_in = second;
        } else {
            self.u_in = second;
            self.v_in = first;
        }
        result != 0
    }

    fn change_flow(&mut self) {
        if self.delta > 0.0 {
            let val = f64::from(self.state[self.in_arc]) * self.delta;
            self.flow[self.in_arc] += val;
            let mut u = self.source(self.in_arc);
            while u != self.join {
                let e = self.pred[u];
                self.flow[e] -= f64::from(self.pred_dir[u]) * val;
                u = self.parent[u].expect("non-root node");
            }
            let mut u = self.target(self.in_arc);
            while u != self.join {
                let e = self.pred[u];
                self.flow[e] += f64::from(self.pred_dir[u]) * val;
                u = self.parent[u].expect("non-root node");
            }
        }
        self.state[self.in_arc] = STATE_TREE;
        let out = self.pred[self.u_out];
        self.flow[out] = 0.0;
        self.state[out] = STATE_LOWER;
    }

    fn update_tree_structure(&mut self) {
        let u_in = self.u_in;
        let v_in = self.v_in;
        let u_out = self.u_out;
        let join = self.join;
        let in_arc = self.in_arc;
        let old_rev_thread = self.rev_thread[u_out];
        let old_succ_num = self.succ_num[u_out];
        let old_last_succ = self.last_succ[u_out];
        let v_out = self.parent[u_out].expect("non-root node");
        let in_dir = if u_in == self.source(in_arc) { DIR_UP } else { DIR_DOWN };

        if u_in == u_out {
            self.parent[u_in] = Some(v_in);
            self.pred[u_in] = in_arc;
            self.pred_dir[u_in] = in_dir;
            if self.thread[v_in] != u_out {
                let mut after = self.thread[old_last_succ];
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
                after = self.thread[v_in];
                self.thread[v_in] = u_out;
                self.rev_thread[u_out] = v_in;
                self.thread[old_last_succ] = after;
                self.rev_thread[after] = old_last_succ;
            }
        } else {
            let thread_continue = if old_rev_thread == v_in { self.thread[old_last_succ] } else { self.thread[v_in] };

            // Re-hang the stem u_in .. u_out below v_in, reversing it.
            let mut stem = u_in;
            let mut par_stem = v_in;
            let mut last = self.last_succ[u_in];
            let mut after = self.thread[last];
            self.thread[v_in] = u_in;
            self.dirty_revs.clear();
            self.dirty_revs.push(v_in);
            while stem != u_out {
                let next_stem = self.parent[stem].expect("stem below the root");
                self.thread[last] = next_stem;
                self.dirty_revs.push(last);

                let before = self.rev_thread[stem];
                self.thread[before] = after;
                self.rev_thread[after] = before;

                self.parent[stem] = Some(par_stem);
                par_stem = stem;
                stem = next_stem;

                last = if self.last_succ[stem] == self.last_succ[par_stem] {
                    self.rev_thread[par_stem]
                } else {
                    self.last_succ[stem]
                };
                after = self.thread[last];
            }
            self.parent[u_out] = Some(par_stem);
            self.thread[last] = thread_continue;
            self.rev_thread[thread_continue] = last;
            self.last_succ[u_out] = last;

            if old_rev_thread != v_in {
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
            }

            for k in 0..self.dirty_revs.len() {
                let u = self.dirty_revs[k];
                let t = self.thread[u];
                self.rev_thread[t] = u;
            }

            let mut tmp_sc = 0usize;
            let tmp_ls = self.last_succ[u_out];
            let mut u = u_out;
            while u != u_in {
                let p = self.parent[u].expect("stem below the root");
                self.pred[u] = self.pred[p];
                self.pred_dir[u] = -self.pred_dir[p];
                // succ_num[u] - succ_num[p] is negative; accumulate signed.
                tmp_sc = (tmp_sc as isize + self.succ_num[u] as isize - self.succ_num[p] as isize) as usize;
                self.succ_num[u] = tmp_sc;
                self.last_succ[p] = tmp_ls;
                u = p;
            }
            self.pred[u_in] = in_arc;
            self.pred_dir[u_in] = in_dir;
            self.succ_num[u_in] = old_succ_num;
        }

        let up_limit_out = if self.last_succ[join] == v_in { Some(join) } else { None };
        let last_succ_out = self.last_succ[u_out];
        let mut u = Some(v_in);
        while let Some(x) = u {
            if self.last_succ[x] != v_in {
                break;
            }
            self.last_succ[x] = last_succ_out;
            u = self.parent[x];
        }

        let replacement = if join != old_rev_thread && v_in != old_rev_thread {
            Some(old_rev_thread)
        } else if last_succ_out != old_last_succ {
            Some(last_succ_out)
        } else {
            None
        };
        if let Some(rep) = replacement {
            let mut u = Some(v_out);
            while let Some(x) = u {
                if Some(x) == up_limit_out || self.last_succ[x] != old_last_succ {
                    break;
                }
                self.last_succ[x] = rep;
                u = self.parent[x];
            }
        }

        let mut u = v_in;
        while u != join {
            self.succ_num[u] += old_succ_num;
            u = self.parent[u].expect("below join");
        }
        let mut u = v_out;
        while u != join {
            self.succ_num[u] -= old_succ_num;
            u = self.parent[u].expect("below join");
        }
    }

    fn update_potential(&mut self) {
        let sigma =
            self.pi[self.v_in] - self.pi[self.u_in] - f64::from(self.pred_dir[self.u_in]) * self.arc_cost(self.in_arc);
        let end = self.thread[self.last_succ[self.u_in]];
        let mut u = self.u_in;
        while u != end {
            self.pi[u] += sigma;
            u = self.thread[u];
        }
    }

    fn run(mut self) -> Result<TransportSolution> {
        let mut pivots = 0;
        while self.find_entering_arc() {
            self.find_join_node();
            if !self.find_leaving_arc() {
                return Err(Error::Argument("transport problem is unbounded".into()));
            }
            self.change_flow();
            self.update_tree_structure();
            self.update_potential();
            pivots += 1;
        }
        let total: f64 = self.problem.supply.iter().sum();
        let residual: f64 = self.flow[self.arc_num..].iter().map(|f| f.abs()).sum();
        if residual > 1e-9 * total.max(1.0) {
            return Err(Error::Infeasible);
        }
        let flow: Vec<f64> = self.flow[..self.arc_num].to_vec();
        let cost = flow.iter().zip(&self.problem.cost).map(|(f, c)| f * c).sum();
        Ok(TransportSolution { cost, flow, pivots })
    }
}

/// Solves the problem to optimality.
pub fn solve(problem: &TransportProblem) -> Result<TransportSolution> {
    Simplex::new(problem).run()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_prefers_the_cheap_diagonal() {
        let p = TransportProblem::new(vec![1.0, 1.0], vec![1.0, 1.0], vec![0.0, 5.0, 5.0, 1.0]).unwrap();
        let s = solve(&p).unwrap();
        assert_eq!(s.cost, 1.0);
        assert_eq!(s.flow, vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn unbalanced_masses_are_rejected() {
        assert!(matches!(TransportProblem::new(vec![1.0], vec![2.0], vec![0.0]), Err(Error::Infeasible)));
    }

    #[test]
    fn marginals_hold() {
        let supply = vec![3.0, 1.0, 2.0];
        let demand = vec![2.0, 2.0, 1.0, 1.0];
        let cost: Vec<f64> = (0..12).map(|k| ((k * 7) % 5) as f64 + 0.5).collect();
        let p = TransportProblem::new(supply.clone(), demand.clone(), cost).unwrap();
        let s = solve(&p).unwrap();
        for (i, &a) in supply.iter().enumerate() {
            let row: f64 = (0..4).map(|j| s.flow[i * 4 + j]).sum();
            assert!((row - a).abs() < 1e-12);
        }
        for (j, &b) in demand.iter().enumerate() {
            let col: f64 = (0..3).map(|i| s.flow[i * 4 + j]).sum();
            assert!((col - b).abs() < 1e-12);
        }
        assert!(s.flow.iter().all(|&f| f >= 0.0));
    }
}
