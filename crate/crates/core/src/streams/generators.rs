use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

use super::Sample;

/// Draws instances for a given concept index. Generators with built-in
/// incremental drift (hyperplane, RBF) move their model on every draw.
pub trait ConceptGenerator: Send {
    fn n_features(&self) -> usize;
    fn n_classes(&self) -> usize;
    /// Number of distinct concepts; concept indices wrap around.
    fn n_concepts(&self) -> usize;
    fn sample(&mut self, concept: usize, rng: &mut ChaCha8Rng) -> Sample;
    /// Per-feature scale used by perturbation drift; zero leaves a feature
    /// untouched.
    fn feature_scales(&self) -> Vec<f64>;
}

fn flip(label: usize, n_classes: usize, noise: f64, rng: &mut ChaCha8Rng) -> usize {
    if noise > 0.0 && rng.random::<f64>() < noise {
        if n_classes == 2 {
            1 - label
        } else {
            let other = rng.random_range(0..n_classes - 1);
            if other >= label { other + 1 } else { other }
        }
    } else {
        label
    }
}

pub const SEA_THRESHOLDS: [f64; 4] = [8.0, 9.0, 7.0, 9.5];

/// SEA concepts: three features in `[0, 10]`, class 1 iff `f1 + f2 <= theta`.
#[derive(Debug, Clone)]
pub struct SeaGenerator {
    thresholds: Vec<f64>,
    noise: f64,
}

impl SeaGenerator {
    pub fn new(thresholds: Vec<f64>, noise: f64) -> Result<Self> {
        if thresholds.is_empty() {
            return Err(Error::config("sea-thresholds", "need at least one threshold"));
        }
        if !(0.0..=1.0).contains(&noise) {
            return Err(Error::config("sea-noise", "must lie in [0, 1]"));
        }
        Ok(Self { thresholds, noise })
    }

    pub fn label(&self, concept: usize, f1: f64, f2: f64) -> usize {
        usize::from(f1 + f2 <= self.thresholds[concept % self.thresholds.len()])
    }
}

impl ConceptGenerator for SeaGenerator {
    fn n_features(&self) -> usize {
        3
    }

    fn n_classes(&self) -> usize {
        2
    }

    fn n_concepts(&self) -> usize {
        self.thresholds.len()
    }

    fn sample(&mut self, concept: usize, rng: &mut ChaCha8Rng) -> Sample {
        let features: Vec<f64> = (0..3).map(|_| rng.random::<f64>() * 10.0).collect();
        let label = self.label(concept, features[0], features[1]);
        Sample {
            label: flip(label, 2, self.noise, rng),
            features,
        }
    }

    fn feature_scales(&self) -> Vec<f64> {
        vec![10.0; 3]
    }
}

/// Label of Agrawal classification function `function` (1 to 10) for the
/// attribute vector `[salary, commission, age, elevel, car, zipcode,
/// hvalue, hyears, loan]`.
pub fn agrawal_label(function: u8, f: &[f64]) -> usize {
    let (salary, commission, age, elevel, hvalue, hyears, loan) =
        (f[0], f[1], f[2], f[3], f[6], f[7], f[8]);
    let between = |v: f64, lo: f64, hi: f64| lo <= v && v <= hi;
    let el = elevel as i64;
    let group0 = match function {
        1 => age < 40.0 || age >= 60.0,
        2 => {
            if age < 40.0 {
                between(salary, 50_000.0, 100_000.0)
            } else if age < 60.0 {
                between(salary, 75_000.0, 125_000.0)
            } else {
                between(salary, 25_000.0, 75_000.0)
            }
        }
        3 => {
            if age < 40.0 {
                el == 0 || el == 1
            } else if age < 60.0 {
                (1..=3).contains(&el)
            } else {
                (2..=4).contains(&el)
            }
        }
        4 => {
            if age < 40.0 {
                if el == 0 || el == 1 {
                    between(salary, 25_000.0, 75_000.0)
                } else {
                    between(salary, 50_000.0, 100_000.0)
                }
            } else if age < 60.0 {
                if (1..=3).contains(&el) {
                    between(salary, 50_000.0, 100_000.0)
                } else {
                    between(salary, 75_000.0, 125_000.0)
                }
            } else if (2..=4).contains(&el) {
                between(salary, 50_000.0, 100_000.0)
            } else {
                between(salary, 25_000.0, 75_000.0)
            }
        }
        5 => {
            if age < 40.0 {
                if between(salary, 50_000.0, 100_000.0) {
                    between(loan, 100_000.0, 300_000.0)
                } else {
                    between(loan, 200_000.0, 400_000.0)
                }
            } else if age < 60.0 {
                if between(salary, 75_000.0, 125_000.0) {
                    between(loan, 200_000.0, 400_000.0)
                } else {
                    between(loan, 300_000.0, 500_000.0)
                }
            } else if between(salary, 25_000.0, 75_000.0) {
                between(loan, 300_000.0, 500_000.0)
            } else {
                between(loan, 100_000.0, 300_000.0)
            }
        }
        6 => {
            let total = salary + commission;
            if age < 40.0 {
                between(total, 50_000.0, 100_000.0)
            } else if age < 60.0 {
                between(total, 75_000.0, 125_000.0)
            } else {
                between(total, 25_000.0, 75_000.0)
            }
        }
        7 => 2.0 * (salary + commission) / 3.0 - loan / 5.0 - 20_000.0 > 0.0,
        8 => 2.0 * (salary + commission) / 3.0 - 5_000.0 * elevel - 20_000.0 > 0.0,
        9 => 2.0 * (salary + commission) / 3.0 - 5_000.0 * elevel - loan / 5.0 - 10_000.0 > 0.0,
        10 => {
            let equity = if hyears >= 20.0 {
                hvalue * (hyears - 20.0) / 10.0
            } else {
                0.0
            };
            2.0 * (salary + commission) / 3.0 - 5_000.0 * elevel + equity / 5.0 - 10_000.0 > 0.0
        }
        _ => panic!("agrawal function index must lie in 1..=10"),
    };
    usize::from(!group0)
}

/// Agrawal loan-application generator; one classification function per concept.
#[derive(Debug, Clone)]
pub struct AgrawalGenerator {
    functions: Vec<u8>,
    noise: f64,
}

impl AgrawalGenerator {
    pub fn new(functions: Vec<u8>, noise: f64) -> Result<Self> {
        if functions.is_empty() {
            return Err(Error::config("agrawal-functions", "need at least one function"));
        }
        if let Some(bad) = functions.iter().find(|f| !(1..=10).contains(*f)) {
            return Err(Error::config(
                "agrawal-functions",
                format!("function index {bad} outside 1..=10"),
            ));
        }
        if !(0.0..=1.0).contains(&noise) {
            return Err(Error::config("agrawal-noise", "must lie in [0, 1]"));
        }
        Ok(Self { functions, noise })
    }

    pub fn draw_features(rng: &mut ChaCha8Rng) -> Vec<f64> {
        let salary = 20_000.0 + 130_000.0 * rng.random::<f64>();
        let commission = if salary >= 75_000.0 {
            0.0
        } else {
            10_000.0 + 65_000.0 * rng.random::<f64>()
        };
        let age = rng.random_range(20..=80) as f64;
        let elevel = rng.random_range(0..=4) as f64;
        let car = rng.random_range(1..=20) as f64;
        let zipcode = rng.random_range(0..=8) as f64;
        let hvalue = (9.0 - zipcode) * 100_000.0 * (0.5 + rng.random::<f64>());
        let hyears = rng.random_range(1..=30) as f64;
        let loan = 500_000.0 * rng.random::<f64>();
        vec![salary, commission, age, elevel, car, zipcode, hvalue, hyears, loan]
    }
}

impl ConceptGenerator for AgrawalGenerator {
    fn n_features(&self) -> usize {
        9
    }

    fn n_classes(&self) -> usize {
        2
    }

    fn n_concepts(&self) -> usize {
        self.functions.len()
    }

    fn sample(&mut self, concept: usize, rng: &mut ChaCha8Rng) -> Sample {
        let features = Self::draw_features(rng);
        let label = agrawal_label(self.functions[concept % self.functions.len()], &features);
        Sample {
            label: flip(label, 2, self.noise, rng),
            features,
        }
    }

    fn feature_scales(&self) -> Vec<f64> {
        // nominal codes (elevel, car, zipcode) are not perturbed
        vec![130_000.0, 65_000.0, 60.0, 0.0, 0.0, 0.0, 1_350_000.0, 29.0, 500_000.0]
    }
}

/// Rotating hyperplane: features in `[0, 1]`, class 1 iff
/// `sum_j w_j x_j >= sum_j w_j / 2`; weights move by `magnitude` per instance.
#[derive(Debug, Clone)]
pub struct HyperplaneGenerator {
    weights: Vec<f64>,
    directions: Vec<f64>,
    n_drift_features: usize,
    magnitude: f64,
    flip_probability: f64,
    noise: f64,
}

impl HyperplaneGenerator {
    pub fn new(
        n_features: usize,
        n_drift_features: usize,
        magnitude: f64,
        flip_probability: f64,
        noise: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::config("hyperplane-features", "must be positive"));
        }
        if n_drift_features > n_features {
            return Err(Error::config("hyperplane-drift-features", "cannot exceed the feature count"));
        }
        if magnitude < 0.0 {
            return Err(Error::config("hyperplane-magnitude", "must be non-negative"));
        }
        if !(0.0..=1.0).contains(&flip_probability) || !(0.0..=1.0).contains(&noise) {
            return Err(Error::config("hyperplane-noise", "probabilities must lie in [0, 1]"));
        }
        Ok(Self {
            weights: (0..n_features).map(|_| rng.random::<f64>()).collect(),
            directions: vec![1.0; n_features],
            n_drift_features,
            magnitude,
            flip_probability,
            noise,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl ConceptGenerator for HyperplaneGenerator {
    fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn n_classes(&self) -> usize {
        2
    }

    fn n_concepts(&self) -> usize {
        1
    }

    fn sample(&mut self, _concept: usize, rng: &mut ChaCha8Rng) -> Sample {
        let features: Vec<f64> = (0..self.weights.len()).map(|_| rng.random::<f64>()).collect();
        let sum: f64 = features.iter().zip(&self.weights).map(|(x, w)| x * w).sum();
        let threshold = 0.5 * self.weights.iter().sum::<f64>();
        let label = flip(usize::from(sum >= threshold), 2, self.noise, rng);
        for j in 0..self.n_drift_features {
            self.weights[j] += self.directions[j] * self.magnitude;
            if rng.random::<f64>() < self.flip_probability {
                self.directions[j] = -self.directions[j];
            }
        }
        Sample { features, label }
    }

    fn feature_scales(&self) -> Vec<f64> {
        vec![1.0; self.weights.len()]
    }
}

#[derive(Debug, Clone)]
struct Centroid {
    center: Vec<f64>,
    label: usize,
    std_dev: f64,
    weight: f64,
    direction: Vec<f64>,
}

fn unit_vector(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Random radial basis function generator with moving centroids.
#[derive(Debug, Clone)]
pub struct RbfGenerator {
    centroids: Vec<Centroid>,
    n_classes: usize,
    n_features: usize,
    speed: f64,
    total_weight: f64,
}

impl RbfGenerator {
    pub fn new(
        n_centroids: usize,
        n_classes: usize,
        n_features: usize,
        speed: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        if n_centroids == 0 || n_classes == 0 || n_features == 0 {
            return Err(Error::config("rbf-centroids", "centroids, classes and features must be positive"));
        }
        if speed < 0.0 {
            return Err(Error::config("rbf-speed", "must be non-negative"));
        }
        let centroids: Vec<Centroid> = (0..n_centroids)
            .map(|_| Centroid {
                center: (0..n_features).map(|_| rng.random::<f64>()).collect(),
                label: rng.random_range(0..n_classes),
                std_dev: rng.random::<f64>(),
                weight: rng.random::<f64>(),
                direction: unit_vector(n_features, rng),
            })
            .collect();
        let total_weight = centroids.iter().map(|c| c.weight).sum();
        Ok(Self {
            centroids,
            n_classes,
            n_features,
            speed,
            total_weight,
        })
    }

    pub fn centers(&self) -> impl Iterator<Item = &[f64]> {
        self.centroids.iter().map(|c| c.center.as_slice())
    }

    fn pick(&self, rng: &mut ChaCha8Rng) -> usize {
        let mut u = rng.random::<f64>() * self.total_weight;
        for (i, c) in self.centroids.iter().enumerate() {
            if u < c.weight {
                return i;
            }
            u -= c.weight;
        }
        self.centroids.len() - 1
    }
}

impl ConceptGenerator for RbfGenerator {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn n_concepts(&self) -> usize {
        1
    }

    fn sample(&mut self, _concept: usize, rng: &mut ChaCha8Rng) -> Sample {
        let c = &self.centroids[self.pick(rng)];
        let offset = unit_vector(self.n_features, rng);
        let radius: f64 = StandardNormal.sample(rng);
        let radius = radius * c.std_dev;
        let features = c
            .center
            .iter()
            .zip(&offset)
            .map(|(m, d)| m + d * radius)
            .collect();
        let sample = Sample {
            features,
            label: c.label,
        };
        if self.speed > 0.0 {
            for c in &mut self.centroids {
                for (x, d) in c.center.iter_mut().zip(c.direction.iter_mut()) {
                    *x += *d * self.speed;
                    if *x > 1.0 || *x < 0.0 {
                        *x = x.clamp(0.0, 1.0);
                        *d = -*d;
                    }
                }
            }
        }
        sample
    }

    fn feature_scales(&self) -> Vec<f64> {
        vec![1.0; self.n_features]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn sea_boundary() {
        let sea = SeaGenerator::new(SEA_THRESHOLDS.to_vec(), 0.0).unwrap();
        assert_eq!(sea.label(0, 0.0, 0.0), 1);
        assert_eq!(sea.label(0, 4.0, 4.0), 1);
        assert_eq!(sea.label(0, 4.0, 4.1), 0);
        assert_eq!(sea.label(3, 5.0, 4.5), 1);
    }

    #[test]
    fn sea_concepts_disagree() {
        let sea = SeaGenerator::new(SEA_THRESHOLDS.to_vec(), 0.0).unwrap();
        let mut r = rng(3);
        let disagreements = (0..10_000)
            .filter(|_| {
                let (a, b) = (r.random::<f64>() * 10.0, r.random::<f64>() * 10.0);
                sea.label(0, a, b) != sea.label(1, a, b)
            })
            .count();
        // P(8 < f1 + f2 <= 9) = (81 - 64) / 200 for uniform [0, 10]^2
        assert!(disagreements > 0);
        assert!((disagreements as f64 / 10_000.0 - 0.085).abs() < 0.015, "{disagreements}");
    }

    #[test]
    fn agrawal_function_one_depends_only_on_age() {
        let mut r = rng(5);
        for _ in 0..2000 {
            let mut f = AgrawalGenerator::draw_features(&mut r);
            let label = agrawal_label(1, &f);
            assert_eq!(label, usize::from((40.0..60.0).contains(&f[2])));
            let age = f[2];
            let mut other = AgrawalGenerator::draw_features(&mut r);
            other[2] = age;
            f.copy_from_slice(&other);
            assert_eq!(agrawal_label(1, &f), label);
        }
    }

    #[test]
    fn agrawal_feature_ranges() {
        let mut r = rng(9);
        for _ in 0..2000 {
            let f = AgrawalGenerator::draw_features(&mut r);
            assert!((20_000.0..=150_000.0).contains(&f[0]));
            assert!(f[0] < 75_000.0 || f[1] == 0.0);
            assert!((20.0..=80.0).contains(&f[2]));
            assert!((0.0..=4.0).contains(&f[3]));
            assert!((0.0..=500_000.0).contains(&f[8]));
            for fun in 1..=10 {
                assert!(agrawal_label(fun, &f) < 2);
            }
        }
    }

    #[test]
    fn agrawal_rejects_bad_function() {
        assert!(AgrawalGenerator::new(vec![0], 0.0).is_err());
        assert!(AgrawalGenerator::new(vec![11], 0.0).is_err());
        assert!(AgrawalGenerator::new(vec![1, 10], 0.0).is_ok());
    }

    #[test]
    fn hyperplane_weight_drift_bounded() {
        let mut r = rng(1);
        let mut gen = HyperplaneGenerator::new(10, 10, 0.001, 0.1, 0.05, &mut r).unwrap();
        let w0 = gen.weights().to_vec();
        for t in 1..=5000 {
            gen.sample(0, &mut r);
            for (w, w0) in gen.weights().iter().zip(&w0) {
                assert!((w - w0).abs() <= t as f64 * 0.001 + 1e-12);
            }
        }
    }

    #[test]
    fn rbf_labels_in_range() {
        let mut r = rng(2);
        let mut gen = RbfGenerator::new(50, 5, 10, 0.001, &mut r).unwrap();
        for _ in 0..5000 {
            let s = gen.sample(0, &mut r);
            assert!(s.label < 5);
            assert_eq!(s.features.len(), 10);
        }
        for c in gen.centers() {
            assert!(c.iter().all(|x| (0.0..=1.0).contains(x)));
        }
    }
}
