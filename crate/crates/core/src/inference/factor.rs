use crate::network::{config_count, config_states, BeliefNetwork};

/// A table over a sorted set of variables, indexed mixed-radix with the
/// lowest variable index most significant.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Factor {
    pub vars: Vec<usize>,
    pub cards: Vec<usize>,
    pub values: Vec<f64>,
}

impl Factor {
    pub fn scalar(value: f64) -> Self {
        Self {
            vars: Vec::new(),
            cards: Vec::new(),
            values: vec![value],
        }
    }

    /// The CPT of `node` restricted to the observed states in `evidence`.
    pub fn from_cpt(bn: &BeliefNetwork, node: usize, evidence: &[Option<usize>]) -> Self {
        let n = bn.node(node);
        let mut family: Vec<usize> = n.parents.clone();
        family.push(node);

        let mut vars: Vec<usize> = family.iter().copied().filter(|&v| evidence[v].is_none()).collect();
        vars.sort_unstable();
        vars.dedup();
        let cards: Vec<usize> = vars.iter().map(|&v| bn.cardinality(v)).collect();
        let size = config_count(&cards);

        let mut states = vec![0; vars.len()];
        let mut parent_states = vec![0; n.parents.len()];
        let mut values = Vec::with_capacity(size);
        let lookup = |v: usize, states: &[usize]| -> usize {
            match evidence[v] {
                Some(s) => s,
                None => states[vars.binary_search(&v).expect("unobserved family member")],
            }
        };
        for idx in 0..size {
            config_states(&cards, idx, &mut states);
            for (slot, &p) in parent_states.iter_mut().zip(&n.parents) {
                *slot = lookup(p, &states);
            }
            values.push(n.cpt.prob(&parent_states, lookup(node, &states)));
        }
        Self { vars, cards, values }
    }

    pub fn product(&self, other: &Factor) -> Factor {
        let mut vars = self.vars.clone();
        vars.extend_from_slice(&other.vars);
        vars.sort_unstable();
        vars.dedup();
        let cards: Vec<usize> = vars
            .iter()
            .map(|v| {
                self.card_of(*v)
                    .or_else(|| other.card_of(*v))
                    .expect("variable in union")
            })
            .collect();

        let self_strides = strides_within(&vars, &self.vars, &self.cards);
        let other_strides = strides_within(&vars, &other.vars, &other.cards);
        let size = config_count(&cards);
        let mut values = Vec::with_capacity(size);
        let mut counter = vec![0usize; vars.len()];
        let (mut ia, mut ib) = (0usize, 0usize);
        for _ in 0..size {
            values.push(self.values[ia] * other.values[ib]);
            // odometer increment, last digit fastest
            for d in (0..vars.len()).rev() {
                counter[d] += 1;
                ia += self_strides[d];
                ib += other_strides[d];
                if counter[d] < cards[d] {
                    break;
                }
                ia -= self_strides[d] * cards[d];
                ib -= other_strides[d] * cards[d];
                counter[d] = 0;
            }
        }
        Factor { vars, cards, values }
    }

    pub fn sum_out(&self, var: usize) -> Factor {
        let Some(pos) = self.vars.iter().position(|&v| v == var) else {
            return self.clone();
        };
        let card = self.cards[pos];
        let inner: usize = self.cards[pos + 1..].iter().product();
        let outer: usize = self.cards[..pos].iter().product();
        let mut values = vec![0.0; outer * inner];
        for o in 0..outer {
            for s in 0..card {
                let base = (o * card + s) * inner;
                for i in 0..inner {
                    values[o * inner + i] += self.values[base + i];
                }
            }
        }
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        vars.remove(pos);
        cards.remove(pos);
        Factor { vars, cards, values }
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    fn card_of(&self, var: usize) -> Option<usize> {
        self.vars.iter().position(|&v| v == var).map(|i| self.cards[i])
    }
}

/// Stride of each variable of `union` inside a factor over `sub` (0 when absent).
fn strides_within(union: &[usize], sub: &[usize], sub_cards: &[usize]) -> Vec<usize> {
    let mut sub_strides = vec![1usize; sub.len()];
    for i in (0..sub.len().saturating_sub(1)).rev() {
        sub_strides[i] = sub_strides[i + 1] * sub_cards[i + 1];
    }
    union
        .iter()
        .map(|v| match sub.iter().position(|s| s == v) {
            Some(i) => sub_strides[i],
            None => 0,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factor(vars: Vec<usize>, cards: Vec<usize>, values: Vec<f64>) -> Factor {
        Factor { vars, cards, values }
    }

    #[test]
    fn product_aligns_shared_variables() {
        // f(a,b) * g(b,c), all binary
        let f = factor(vec![0, 1], vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]);
        let g = factor(vec![1, 2], vec![2, 2], vec![5.0, 6.0, 7.0, 8.0]);
        let h = f.product(&g);
        assert_eq!(h.vars, vec![0, 1, 2]);
        // h(a,b,c) = f(a,b) g(b,c)
        let expected = [
            1.0 * 5.0, 1.0 * 6.0, 2.0 * 7.0, 2.0 * 8.0,
            3.0 * 5.0, 3.0 * 6.0, 4.0 * 7.0, 4.0 * 8.0,
        ];
        assert_eq!(h.values, expected);
    }

    #[test]
    fn sum_out_middle_variable() {
        let f = factor(vec![0, 1, 2], vec![2, 3, 2], (0..12).map(f64::from).collect());
        let g = f.sum_out(1);
        assert_eq!(g.vars, vec![0, 2]);
        // a=0,c=0: 0+2+4 ; a=0,c=1: 1+3+5 ; a=1,c=0: 6+8+10 ; a=1,c=1: 7+9+11
        assert_eq!(g.values, vec![6.0, 9.0, 24.0, 27.0]);
    }

    #[test]
    fn scalar_product_scales() {
        let f = factor(vec![3], vec![2], vec![0.25, 0.75]);
        assert_eq!(Factor::scalar(2.0).product(&f).values, vec![0.5, 1.5]);
    }
}
