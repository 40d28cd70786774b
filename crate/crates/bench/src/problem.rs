//! Test problems on a native box domain, mapped affinely to the unit box the
//! engine works in.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Func = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub dims: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub lambda: f64,
    pub f_opt: f64,
    pub f_min: f64,
    objective: Func,
    constraint: Func,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("dims", &self.dims)
            .field("lambda", &self.lambda)
            .field("f_opt", &self.f_opt)
            .field("f_min", &self.f_min)
            .finish_non_exhaustive()
    }
}

impl Problem {
    /// Objective at a native point.
    pub fn objective(&self, x: &[f64]) -> f64 {
        (self.objective)(x)
    }

    /// Constraint at a native point.
    pub fn constraint(&self, x: &[f64]) -> f64 {
        (self.constraint)(x)
    }

    pub fn is_feasible(&self, x: &[f64]) -> bool {
        self.constraint(x) >= self.lambda
    }

    pub fn to_native(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(u, (lo, hi))| lo + u * (hi - lo))
            .collect()
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(x, (lo, hi))| (x - lo) / (hi - lo))
            .collect()
    }
}

/// `f(x) = -cos(2 x1) cos(x2) - sin(x1)` subject to
/// `c(x) = -cos(x1) cos(x2) + sin(x1) sin(x2) >= 0.5` on `[0, 6]^2`.
pub fn gardner2d() -> Problem {
    Problem {
        name: "gardner2d".into(),
        dims: 2,
        lower: vec![0.0; 2],
        upper: vec![6.0; 2],
        lambda: 0.5,
        f_opt: 1.88875,
        f_min: -2.0,
        objective: Arc::new(|x| -(2.0 * x[0]).cos() * x[1].cos() - x[0].sin()),
        constraint: Arc::new(|x| -x[0].cos() * x[1].cos() + x[0].sin() * x[1].sin()),
    }
}

const HARTMANN_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
const HARTMANN_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];
const HARTMANN_P: [[f64; 6]; 4] = [
    [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
    [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
    [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
    [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
];

pub fn hartmann6(x: &[f64]) -> f64 {
    HARTMANN_ALPHA
        .iter()
        .zip(HARTMANN_A.iter().zip(&HARTMANN_P))
        .map(|(alpha, (a, p))| {
            let e: f64 = (0..6).map(|j| a[j] * (x[j] - p[j]).powi(2)).sum();
            alpha * (-e).exp()
        })
        .sum()
}

/// Hartmann-6 (sign flipped for maximization) subject to `-||x|| >= -1` on
/// `[0, 1]^6`.
pub fn hartmann6c() -> Problem {
    Problem {
        name: "hartmann6".into(),
        dims: 6,
        lower: vec![0.0; 6],
        upper: vec![1.0; 6],
        lambda: -1.0,
        f_opt: 3.32237,
        f_min: 0.0,
        objective: Arc::new(hartmann6),
        constraint: Arc::new(|x| -x.iter().map(|v| v * v).sum::<f64>().sqrt()),
    }
}

/// Seeded parameters of a reference-matching instance.
#[derive(Debug, Clone, PartialEq)]
pub struct RefMatch {
    pub reference: Vec<f64>,
    pub centers: Vec<Vec<f64>>,
    pub scales: Vec<f64>,
    pub heights: Vec<f64>,
    pub lambda: f64,
    /// The uniform sample whose mean constraint value sets `lambda`.
    pub lambda_sample: Vec<Vec<f64>>,
    /// Largest L1 distance from the reference inside the unit box.
    pub max_gap: f64,
}

pub const REFMATCH_DIMS: usize = 6;
pub const REFMATCH_LAMBDA_SAMPLES: usize = 1000;

impl RefMatch {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = REFMATCH_DIMS;
        let centers: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..d).map(|_| rng.random_range(0.2..0.8)).collect())
            .collect();
        let scales = (0..3).map(|_| rng.random_range(0.1..0.3)).collect();
        let heights = (0..3).map(|_| rng.random_range(0.5..1.0)).collect();
        let mut rm = Self {
            reference: Vec::new(),
            centers,
            scales,
            heights,
            lambda: 0.0,
            lambda_sample: Vec::new(),
            max_gap: 0.0,
        };
        rm.lambda_sample = (0..REFMATCH_LAMBDA_SAMPLES)
            .map(|_| (0..d).map(|_| rng.random()).collect())
            .collect();
        rm.lambda = rm.lambda_sample.iter().map(|x| rm.constraint(x)).sum::<f64>()
            / REFMATCH_LAMBDA_SAMPLES as f64;
        rm.reference = loop {
            let x: Vec<f64> = (0..d).map(|_| rng.random()).collect();
            if rm.constraint(&x) >= rm.lambda {
                break x;
            }
        };
        rm.max_gap = rm.reference.iter().map(|r| r.max(1.0 - r)).sum();
        rm
    }

    /// Sum of three Gaussian bumps.
    pub fn constraint(&self, x: &[f64]) -> f64 {
        self.centers
            .iter()
            .zip(self.scales.iter().zip(&self.heights))
            .map(|(c, (s, h))| {
                let d2: f64 = x.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum();
                h * (-d2 / (2.0 * s * s)).exp()
            })
            .sum()
    }

    /// Negative L1 distance to the reference.
    pub fn objective(&self, x: &[f64]) -> f64 {
        -x.iter().zip(&self.reference).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }
}

/// Match a seeded reference point whose neighbourhood satisfies a bumpy
/// constraint. The optimality gap of this problem is the L1 parameter gap,
/// and the no-feasible fallback is the largest attainable gap.
pub fn refmatch6(seed: u64) -> Problem {
    let rm = Arc::new(RefMatch::new(seed));
    let (obj, cons) = (rm.clone(), rm.clone());
    Problem {
        name: "refmatch6".into(),
        dims: REFMATCH_DIMS,
        lower: vec![0.0; REFMATCH_DIMS],
        upper: vec![1.0; REFMATCH_DIMS],
        lambda: rm.lambda,
        f_opt: 0.0,
        f_min: -rm.max_gap,
        objective: Arc::new(move |x| obj.objective(x)),
        constraint: Arc::new(move |x| cons.constraint(x)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Gardner2d,
    Hartmann6,
    RefMatch6,
}

impl ProblemKind {
    pub fn build(self, seed: u64) -> Problem {
        match self {
            ProblemKind::Gardner2d => gardner2d(),
            ProblemKind::Hartmann6 => hartmann6c(),
            ProblemKind::RefMatch6 => refmatch6(seed),
        }
    }

    /// Warm-start size used when none is given.
    pub fn default_warm_points(self) -> usize {
        match self {
            ProblemKind::RefMatch6 => 1000,
            _ => 200,
        }
    }
}

impl std::str::FromStr for ProblemKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gardner2d" => Ok(ProblemKind::Gardner2d),
            "hartmann6" | "hartmann6c" => Ok(ProblemKind::Hartmann6),
            "refmatch6" => Ok(ProblemKind::RefMatch6),
            other => Err(format!(
                "unknown problem {other:?} (expected gardner2d, hartmann6 or refmatch6)"
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gardner_reference_points() {
        let p = gardner2d();
        assert_eq!(p.objective(&[0.0, 0.0]), -1.0);
        assert_eq!(p.constraint(&[0.0, 0.0]), -1.0);
        assert!(!p.is_feasible(&[0.0, 0.0]));
    }

    #[test]
    fn hartmann_constraint_and_optimum() {
        let p = hartmann6c();
        assert_eq!(p.constraint(&[0.0; 6]), 0.0);
        assert!(p.is_feasible(&[0.0; 6]));
        assert!((p.constraint(&[1.0; 6]) + 6f64.sqrt()).abs() < 1e-15);
        let xstar = [0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573];
        assert!((p.objective(&xstar) - 3.32237).abs() < 1e-5);
        assert!(p.is_feasible(&xstar));
    }

    #[test]
    fn refmatch_threshold_and_reference() {
        let rm = RefMatch::new(7);
        assert!(rm.scales.iter().all(|s| (0.1..0.3).contains(s)));
        assert!(rm.constraint(&rm.reference) >= rm.lambda);
        assert_eq!(rm.objective(&rm.reference), 0.0);
        let p = refmatch6(7);
        assert_eq!(p.lambda, rm.lambda);
        assert_eq!(p.f_min, -rm.max_gap);
    }
}
