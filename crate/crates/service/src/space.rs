//! Named design parameters and their mapping to the engine's unit box.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::constraint::{Registry, CONTRAST};
use crate::error::ApiError;

pub const BANNER_COLORS: &str = "banner-colors";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    #[serde(default)]
    pub label: String,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintRef {
    pub id: String,
    /// Threshold; the registered default when absent.
    #[serde(default)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpace {
    pub parameters: Vec<Parameter>,
    pub render_template: String,
    pub constraint: ConstraintRef,
}

impl DesignSpace {
    /// Foreground and background sRGB triplets under the contrast constraint.
    pub fn banner_colors() -> Self {
        let p = |name: &str, label: &str| Parameter {
            name: name.into(),
            label: label.into(),
            lo: 0.0,
            hi: 1.0,
        };
        Self {
            parameters: vec![
                p("fg_r", "Foreground red"),
                p("fg_g", "Foreground green"),
                p("fg_b", "Foreground blue"),
                p("bg_r", "Background red"),
                p("bg_g", "Background green"),
                p("bg_b", "Background blue"),
            ],
            render_template: BANNER_COLORS.into(),
            constraint: ConstraintRef { id: CONTRAST.into(), lambda: None },
        }
    }

    pub fn dims(&self) -> usize {
        self.parameters.len()
    }

    /// Checks the space against the registry and returns the threshold.
    pub fn validate(&self, registry: &Registry) -> Result<f64, ApiError> {
        if self.parameters.is_empty() {
            return Err(ApiError::bad_request("design space has no parameters"));
        }
        for (k, p) in self.parameters.iter().enumerate() {
            if p.name.is_empty() {
                return Err(ApiError::bad_request(format!("parameter {k} has no name")));
            }
            if self.parameters[..k].iter().any(|q| q.name == p.name) {
                return Err(ApiError::bad_request(format!("duplicate parameter {:?}", p.name)));
            }
            if !(p.lo.is_finite() && p.hi.is_finite() && p.lo < p.hi) {
                return Err(ApiError::bad_request(format!(
                    "parameter {:?} needs finite lo < hi, got [{}, {}]",
                    p.name, p.lo, p.hi
                )));
            }
        }
        if self.render_template == BANNER_COLORS && self.dims() != 6 {
            return Err(ApiError::bad_request("banner-colors needs exactly 6 parameters"));
        }
        let c = registry.get(&self.constraint.id).ok_or_else(|| {
            ApiError::not_found(format!("unknown constraint {:?}", self.constraint.id))
        })?;
        if c.arity != self.dims() {
            return Err(ApiError::bad_request(format!(
                "constraint {:?} takes {} parameters, space has {}",
                c.id,
                c.arity,
                self.dims()
            )));
        }
        let lambda = self.constraint.lambda.unwrap_or(c.default_lambda);
        if !lambda.is_finite() {
            return Err(ApiError::bad_request("constraint threshold must be finite"));
        }
        Ok(lambda)
    }

    pub fn to_native(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(&self.parameters)
            .map(|(u, p)| p.lo + u * (p.hi - p.lo))
            .collect()
    }

    pub fn to_map(&self, native: &[f64]) -> BTreeMap<String, f64> {
        self.parameters
            .iter()
            .zip(native)
            .map(|(p, v)| (p.name.clone(), *v))
            .collect()
    }
}
