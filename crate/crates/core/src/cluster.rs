//! Greedy ball clustering: picks a set of representatives with pairwise
//! disjoint balls and assigns every client to a representative whose ball
//! intersects its own. Every rounding algorithm in this crate is built on
//! this subroutine.

use std::collections::BTreeMap;

use crate::model::{Ball, ClientId};

/// Output of [`greedy_cluster`]: representatives in selection order and the
/// assignment of every input client to its representative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    pub reps: Vec<ClientId>,
    pub assign: BTreeMap<ClientId, ClientId>,
}

impl Clustering {
    pub fn rep_of(&self, j: ClientId) -> ClientId {
        self.assign[&j]
    }

    /// Clients assigned to representative `rep` (including itself).
    pub fn members_of(&self, rep: ClientId) -> Vec<ClientId> {
        self.assign.iter().filter(|&(_, &r)| r == rep).map(|(&j, _)| j).collect()
    }
}

/// Processes `q` in decreasing `g` order (ties by ascending client id).
/// Each selected representative absorbs every remaining client whose ball
/// intersects its own, itself included. `balls` is indexed by client id;
/// ball intersection is exact set intersection of the facility-id sets, so
/// no distance arithmetic happens here.
///
/// The output satisfies: balls of distinct representatives are disjoint;
/// every j maps to a representative with intersecting ball and
/// g(rep) >= g(j).
pub fn greedy_cluster(q: &[ClientId], balls: &[Ball], g: impl Fn(ClientId) -> f64) -> Clustering {
    let mut order: Vec<ClientId> = q.to_vec();
    order.sort_unstable();
    order.dedup();
    // g values are compared exactly; callers needing tolerance quantize first
    order.sort_by(|&a, &b| g(b).partial_cmp(&g(a)).expect("ordering values must not be NaN").then(a.cmp(&b)));

    let mut remaining: BTreeMap<ClientId, ()> = order.iter().map(|&j| (j, ())).collect();
    let mut reps = Vec::new();
    let mut assign = BTreeMap::new();
    for &j in &order {
        if !remaining.contains_key(&j) {
            continue;
        }
        reps.push(j);
        remaining.remove(&j);
        assign.insert(j, j);
        let absorbed: Vec<ClientId> = remaining
            .keys()
            .copied()
            .filter(|&j2| balls[j].intersects(&balls[j2]))
            .collect();
        for j2 in absorbed {
            remaining.remove(&j2);
            assign.insert(j2, j);
        }
    }
    Clustering { reps, assign }
}

/// The inhomogeneous ordering used by the reduction and iterative-rounding
/// paths: larger radii first (g = -R), so every representative has
/// R_rep <= R_j for its assignees.
pub fn greedy_cluster_neg_radius(q: &[ClientId], balls: &[Ball], radii: &[f64]) -> Clustering {
    greedy_cluster(q, balls, |j| -radii[j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::line_instance;
    use proptest::prelude::*;

    #[test]
    fn empty_input() {
        let c = greedy_cluster(&[], &[], |_| 0.0);
        assert!(c.reps.is_empty());
        assert!(c.assign.is_empty());
    }

    #[test]
    fn intersecting_pair_collapses_to_higher_g() {
        // facilities at {0,1,3}: G_c1 = {f0,f1}, G_c2 = {f1,f3} share f1
        let inst = line_instance(&[0.0, 1.0, 3.0], &[0.0, 3.0], 2.0, &[1.0; 3], 9.0);
        let balls = inst.balls(None);
        assert_eq!(balls[0].facilities, vec![0, 1]);
        assert_eq!(balls[1].facilities, vec![1, 2]);
        let c = greedy_cluster(&[0, 1], &balls, |j| if j == 0 { 1.0 } else { 0.0 });
        assert_eq!(c.reps, vec![0]);
        assert_eq!(c.rep_of(0), 0);
        assert_eq!(c.rep_of(1), 0);
    }

    #[test]
    fn tie_breaks_by_client_id() {
        let inst = line_instance(&[0.0, 1.0, 3.0], &[0.0, 3.0], 2.0, &[1.0; 3], 9.0);
        let balls = inst.balls(None);
        let c = greedy_cluster(&[0, 1], &balls, |_| 0.0);
        assert_eq!(c.reps, vec![0]);
        assert_eq!(c.rep_of(1), 0);
    }

    #[test]
    fn idempotent_on_representatives() {
        let inst = line_instance(&[0.0, 4.0, 8.0], &[0.0, 4.0, 8.0], 1.0, &[1.0; 3], 9.0);
        let balls = inst.balls(None);
        let g = |j: ClientId| -(j as f64);
        let first = greedy_cluster(&[0, 1, 2], &balls, g);
        let again = greedy_cluster(&first.reps, &balls, g);
        assert_eq!(again.reps, first.reps);
        for &r in &again.reps {
            assert_eq!(again.rep_of(r), r);
        }
    }

    proptest! {
        // Observation-style properties on random line instances
        #[test]
        fn output_properties_hold(
            seed in 0u64..500,
            n in 1usize..12,
            m in 1usize..10,
        ) {
            use rand::prelude::*;
            use rand_chacha::ChaCha8Rng;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let fxs: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..20.0)).collect();
            let cxs: Vec<f64> = (0..n).map(|_| {
                // keep the standing assumption by sampling near facilities
                let f = fxs[rng.gen_range(0..m)];
                f + rng.gen_range(-2.0..2.0)
            }).collect();
            let inst = line_instance(&fxs, &cxs, 2.5, &vec![1.0; m], 9.0);
            let balls = inst.balls(None);
            let gv: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let q: Vec<usize> = (0..n).collect();
            let c = greedy_cluster(&q, &balls, |j| gv[j]);

            // (i) balls of distinct representatives are disjoint
            for (a, &r1) in c.reps.iter().enumerate() {
                for &r2 in &c.reps[a + 1..] {
                    prop_assert!(!balls[r1].intersects(&balls[r2]));
                }
            }
            // (ii) each client's ball meets its representative's, with g(rep) >= g(j)
            for &j in &q {
                let r = c.rep_of(j);
                prop_assert!(balls[j].intersects(&balls[r]));
                prop_assert!(gv[r] >= gv[j]);
                // intersecting balls imply d(j, rep) <= R_j + R_rep
                let bound = inst.radii[j] + inst.radii[r] + 2.0 * crate::model::DIST_TOL;
                prop_assert!(inst.dist_clients(j, r) <= bound);
            }
            // determinism
            let c2 = greedy_cluster(&q, &balls, |j| gv[j]);
            prop_assert_eq!(c, c2);
        }
    }
}
