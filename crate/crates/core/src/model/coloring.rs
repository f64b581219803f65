use super::IsingInstance;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coloring {
    pub colors: Vec<usize>,
    /// Number of colors used; an upper bound on the chromatic number.
    pub chi_upper: usize,
}

impl Coloring {
    pub fn is_proper(&self, instance: &IsingInstance) -> bool {
        instance
            .couplings()
            .iter()
            .all(|c| self.colors[c.i] != self.colors[c.j])
    }
}

/// First-fit coloring of the coupling graph, visiting vertices by
/// descending degree with ties broken by index.
pub fn greedy_coloring(instance: &IsingInstance) -> Coloring {
    let adj = instance.adjacency();
    let n = instance.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| adj[b].len().cmp(&adj[a].len()).then(a.cmp(&b)));

    let mut colors = vec![usize::MAX; n];
    let mut used = Vec::new();
    let mut chi_upper = 0;
    for v in order {
        used.clear();
        used.resize(adj[v].len() + 1, false);
        for &u in &adj[v] {
            let c = colors[u];
            if c < used.len() {
                used[c] = true;
            }
        }
        let c = used.iter().position(|&t| !t).unwrap_or(used.len());
        colors[v] = c;
        chi_upper = chi_upper.max(c + 1);
    }
    Coloring { colors, chi_upper }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate, Ensemble, FunctionalKind, WeightDist};
    use proptest::prelude::*;

    /// Smallest k admitting a proper k-coloring, by exhaustive search.
    fn chromatic_number(instance: &IsingInstance) -> usize {
        let n = instance.n();
        for k in 1..=n {
            let mut colors = vec![0usize; n];
            loop {
                let proper = instance
                    .couplings()
                    .iter()
                    .all(|c| colors[c.i] != colors[c.j]);
                if proper {
                    return k;
                }
                // odometer increment in base k
                let mut pos = 0;
                while pos < n {
                    colors[pos] += 1;
                    if colors[pos] < k {
                        break;
                    }
                    colors[pos] = 0;
                    pos += 1;
                }
                if pos == n {
                    break;
                }
            }
        }
        n
    }

    #[test]
    fn examples() {
        let empty = IsingInstance::empty(5, FunctionalKind::PairProduct).unwrap();
        assert_eq!(greedy_coloring(&empty).chi_upper, 1);

        let k4 = generate(Ensemble::SpinGlassPm1, 4, 0).unwrap();
        assert_eq!(greedy_coloring(&k4).chi_upper, 4);

        let path = IsingInstance::new(3, FunctionalKind::PairProduct, [(0, 1, 1.0), (1, 2, -1.0)])
            .unwrap();
        assert_eq!(chromatic_number(&path), 2);
        assert_eq!(greedy_coloring(&path).chi_upper, 2);
    }

    proptest! {
        #[test]
        fn proper_and_bounded_below_by_chromatic_number(
            seed in any::<u64>(), n in 1usize..=8, p in 0.0f64..1.0
        ) {
            let e = Ensemble::ErdosRenyi { p, weights: WeightDist::PlusMinusOne };
            let inst = generate(e, n, seed).unwrap();
            let col = greedy_coloring(&inst);
            prop_assert!(col.is_proper(&inst));
            prop_assert!(col.chi_upper >= chromatic_number(&inst));
        }
    }
}
