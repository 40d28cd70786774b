//! Computable constraints the service can evaluate on candidate designs.

use std::collections::BTreeMap;
use std::sync::Arc;

pub type ConstraintFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct Constraint {
    pub id: String,
    /// Number of native parameters the function expects.
    pub arity: usize,
    pub default_lambda: f64,
    pub eval: ConstraintFn,
}

impl std::fmt::Debug for Constraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Constraint")
            .field("id", &self.id)
            .field("arity", &self.arity)
            .field("default_lambda", &self.default_lambda)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Registry {
    entries: BTreeMap<String, Constraint>,
}

impl Registry {
    /// A registry holding the contrast-ratio constraint.
    pub fn with_defaults() -> Self {
        let mut r = Self::default();
        r.register(Constraint {
            id: CONTRAST.into(),
            arity: 6,
            default_lambda: 4.5,
            eval: Arc::new(|x| contrast_ratio([x[0], x[1], x[2]], [x[3], x[4], x[5]])),
        });
        r
    }

    pub fn register(&mut self, c: Constraint) {
        self.entries.insert(c.id.clone(), c);
    }

    pub fn get(&self, id: &str) -> Option<&Constraint> {
        self.entries.get(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

pub const CONTRAST: &str = "contrast";

fn linearize(c: f64) -> f64 {
    let c = c.clamp(0.0, 1.0);
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

/// Relative luminance of an sRGB colour with channels in `[0, 1]`.
pub fn relative_luminance(rgb: [f64; 3]) -> f64 {
    0.2126 * linearize(rgb[0]) + 0.7152 * linearize(rgb[1]) + 0.0722 * linearize(rgb[2])
}

/// `(L_max + 0.05) / (L_min + 0.05)`, between 1 and 21.
pub fn contrast_ratio(a: [f64; 3], b: [f64; 3]) -> f64 {
    let (la, lb) = (relative_luminance(a), relative_luminance(b));
    (la.max(lb) + 0.05) / (la.min(lb) + 0.05)
}
