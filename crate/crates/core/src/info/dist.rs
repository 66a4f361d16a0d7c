//! Finite distributions, joint tables and base-2 information quantities.

use super::InfoError;

/// Tolerance on the total mass of a distribution built from doubles.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Kahan-compensated sum.
pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Probability table over outcomes `0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self, InfoError> {
        if probs.is_empty() {
            return Err(InfoError::InvalidDistribution("no outcomes".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(InfoError::InvalidDistribution(format!("probability {p}")));
        }
        let total = kahan_sum(probs.iter().copied());
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(InfoError::InvalidDistribution(format!("total mass {total}")));
        }
        Ok(Distribution { probs })
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self, InfoError> {
        let total = kahan_sum(weights.iter().copied());
        if !(total > 0.0) {
            return Err(InfoError::InvalidDistribution("zero total weight".into()));
        }
        Distribution::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn uniform(k: usize) -> Self {
        Distribution { probs: vec![1.0 / k as f64; k] }
    }

    pub fn point(k: usize, at: usize) -> Self {
        let mut probs = vec![0.0; k];
        probs[at] = 1.0;
        Distribution { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, u: usize) -> f64 {
        self.probs[u]
    }
}

pub fn statistical_distance(p: &Distribution, q: &Distribution) -> Result<f64, InfoError> {
    if p.len() != q.len() {
        return Err(InfoError::LengthMismatch(p.len(), q.len()));
    }
    Ok(0.5 * kahan_sum(p.probs.iter().zip(&q.probs).map(|(a, b)| (a - b).abs())))
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

pub fn entropy(p: &Distribution) -> f64 {
    kahan_sum(p.probs.iter().map(|&x| plogp(x)))
}

/// Joint table over variables with the given cardinalities; variable 0 varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    cards: Vec<usize>,
    probs: Vec<f64>,
}

impl JointTable {
    pub fn new(cards: Vec<usize>, probs: Vec<f64>) -> Result<Self, InfoError> {
        let size: usize = cards.iter().product();
        if size != probs.len() {
            return Err(InfoError::LengthMismatch(size, probs.len()));
        }
        Distribution::new(probs.clone())?;
        Ok(JointTable { cards, probs })
    }

    /// Table whose entries are `f(assignment)`; weights are normalized.
    pub fn from_fn(cards: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self, InfoError> {
        let size: usize = cards.iter().product();
        let mut probs = Vec::with_capacity(size);
        let mut assignment = vec![0; cards.len()];
        for _ in 0..size {
            probs.push(f(&assignment));
            for (a, &c) in assignment.iter_mut().zip(&cards) {
                *a += 1;
                if *a < c {
                    break;
                }
                *a = 0;
            }
        }
        let d = Distribution::from_weights(&probs)?;
        Ok(JointTable { cards, probs: d.probs })
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Marginal over `vars`, in the order given.
    pub fn marginal(&self, vars: &[usize]) -> JointTable {
        let cards: Vec<usize> = vars.iter().map(|&v| self.cards[v]).collect();
        let mut strides = vec![0usize; self.cards.len()];
        let mut s = 1;
        for (&v, &c) in vars.iter().zip(&cards) {
            strides[v] += s;
            s *= c;
        }
        let mut probs = vec![0.0; s];
        let mut assignment = vec![0; self.cards.len()];
        let mut target = 0usize;
        for &p in &self.probs {
            probs[target] += p;
            for (i, a) in assignment.iter_mut().enumerate() {
                *a += 1;
                target += strides[i];
                if *a < self.cards[i] {
                    break;
                }
                target -= strides[i] * *a;
                *a = 0;
            }
        }
        JointTable { cards, probs }
    }

    fn entropy_of(&self, vars: &[usize]) -> f64 {
        if vars.is_empty() {
            return 0.0;
        }
        let mut sorted = vars.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        kahan_sum(self.marginal(&sorted).probs.iter().map(|&p| plogp(p)))
    }

    pub fn entropy(&self, vars: &[usize]) -> f64 {
        self.entropy_of(vars)
    }

    /// `H(A | C)`; conditioning events of probability zero carry no weight.
    pub fn conditional_entropy(&self, a: &[usize], given: &[usize]) -> f64 {
        let ac: Vec<usize> = a.iter().chain(given).copied().collect();
        self.entropy_of(&ac) - self.entropy_of(given)
    }

    /// `I(A; B | C)`.
    pub fn mutual_information(&self, a: &[usize], b: &[usize], c: &[usize]) -> f64 {
        let ac: Vec<usize> = a.iter().chain(c).copied().collect();
        let bc: Vec<usize> = b.iter().chain(c).copied().collect();
        let abc: Vec<usize> = a.iter().chain(b).chain(c).copied().collect();
        self.entropy_of(&ac) + self.entropy_of(&bc) - self.entropy_of(&abc) - self.entropy_of(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinskerCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub const PINSKER_TOLERANCE: f64 = 1e-12;

/// `E_q ||P - (P | Q = q)||^2 <= (ln 2 / 2) I(P; Q)` for a joint given as
/// rows indexed by the P-coordinate.
pub fn pinsker_check(joint: &[Vec<f64>]) -> Result<PinskerCheck, InfoError> {
    let rows = joint.len();
    let cols = joint.first().map_or(0, |r| r.len());
    if rows == 0 || cols == 0 || joint.iter().any(|r| r.len() != cols) {
        return Err(InfoError::InvalidDistribution("ragged or empty joint".into()));
    }
    let probs: Vec<f64> = (0..cols).flat_map(|q| (0..rows).map(move |p| (p, q))).map(|(p, q)| joint[p][q]).collect();
    let table = JointTable::new(vec![rows, cols], probs)?;
    let pm = table.marginal(&[0]);
    let qm = table.marginal(&[1]);
    let lhs = kahan_sum((0..cols).filter(|&q| qm.probs[q] > 0.0).map(|q| {
        let d = 0.5 * kahan_sum((0..rows).map(|p| (pm.probs[p] - joint[p][q] / qm.probs[q]).abs()));
        qm.probs[q] * d * d
    }));
    let rhs = std::f64::consts::LN_2 / 2.0 * table.mutual_information(&[0], &[1], &[]);
    Ok(PinskerCheck { lhs, rhs, holds: lhs <= rhs + PINSKER_TOLERANCE })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_examples() {
        let a = Distribution::new(vec![0.5, 0.5]).unwrap();
        let b = Distribution::new(vec![0.75, 0.25]).unwrap();
        assert_eq!(statistical_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(statistical_distance(&a, &b).unwrap(), 0.25);
        assert_eq!(statistical_distance(&Distribution::point(2, 0), &Distribution::point(2, 1)).unwrap(), 1.0);
        assert!(statistical_distance(&a, &Distribution::uniform(3)).is_err());
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&Distribution::uniform(2)), 1.0);
        let copy = JointTable::new(vec![2, 2], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert!((copy.mutual_information(&[0], &[1], &[]) - 1.0).abs() < 1e-15);
        let indep = JointTable::new(vec![2, 2], vec![0.25; 4]).unwrap();
        assert!(indep.mutual_information(&[0], &[1], &[]).abs() < 1e-15);
        assert!((copy.conditional_entropy(&[0], &[1])).abs() < 1e-15);
    }

    #[test]
    fn marginal_orders_variables() {
        // P(a, b) with a fastest: (0,0)=.1 (1,0)=.2 (0,1)=.3 (1,1)=.4
        let t = JointTable::new(vec![2, 2], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let b = t.marginal(&[1]);
        assert!((b.probs()[0] - 0.3).abs() < 1e-15 && (b.probs()[1] - 0.7).abs() < 1e-15);
        let swapped = t.marginal(&[1, 0]);
        assert_eq!(swapped.probs(), &[0.1, 0.3, 0.2, 0.4]);
    }

    #[test]
    fn pinsker_examples() {
        let c = pinsker_check(&[vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap();
        assert!(c.lhs.abs() < 1e-15 && c.rhs.abs() < 1e-15 && c.holds);
        let c = pinsker_check(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert!((c.lhs - 0.25).abs() < 1e-15);
        assert!((c.rhs - std::f64::consts::LN_2 / 2.0).abs() < 1e-15);
        assert!(c.holds);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(Distribution::new(vec![0.5, 0.6]).is_err());
        assert!(Distribution::new(vec![-0.1, 1.1]).is_err());
        assert!(JointTable::new(vec![2, 2], vec![1.0]).is_err());
    }
}
