//! Built-in example scenarios. The JSON sources live in `scenarios/`.

use serde::Serialize;
use thiserror::Error;

use super::scenario::{Scenario, ScenarioError};

pub struct Example {
    pub name: &'static str,
    pub summary: &'static str,
    /// `(variant, scenario JSON)`; the first entry is the default.
    pub variants: &'static [(&'static str, &'static str)],
}

pub const EXAMPLES: [Example; 8] = [
    Example {
        name: "flat",
        summary: "flat spray, Φ ≡ 0",
        variants: &[("default", include_str!("../../scenarios/flat.json"))],
    },
    Example {
        name: "klein",
        summary: "Klein metric on the ball via g = −ln√(1−|x|²), κ = −1",
        variants: &[
            ("2d", include_str!("../../scenarios/klein.json")),
            ("3d", include_str!("../../scenarios/klein_3d.json")),
        ],
    },
    Example {
        name: "positive_cc",
        summary: "projective sphere metric via g = −ln√(1+|x|²), κ = +1",
        variants: &[("default", include_str!("../../scenarios/positive_cc.json"))],
    },
    Example {
        name: "numata",
        summary: "Numata-type metric F = |y| + ⟨x,y⟩, scalar curvature",
        variants: &[("default", include_str!("../../scenarios/numata.json"))],
    },
    Example {
        name: "affine2d_g",
        summary: "G = (φ(y¹)², ψ(y²)²)/2 with φ = ψ = −2g′/g, g(x¹+x²) = t/2 or t²",
        variants: &[
            ("half", include_str!("../../scenarios/affine2d_g_half.json")),
            ("square", include_str!("../../scenarios/affine2d_g_square.json")),
        ],
    },
    Example {
        name: "degenerate2d",
        summary: "G = (y¹y², −(y²)²/2), metrizable by a degenerate F",
        variants: &[("default", include_str!("../../scenarios/degenerate2d.json"))],
    },
    Example {
        name: "nonmetrizable2d",
        summary: "G = (((y¹)²+(y²)²)/2, 2y¹y²), fails the horizontal condition",
        variants: &[("default", include_str!("../../scenarios/nonmetrizable2d.json"))],
    },
    Example {
        name: "shen_ricciflat",
        summary: "φ = x², ψ = −x¹: ρ = 0 while Φ ≠ 0",
        variants: &[("default", include_str!("../../scenarios/shen_ricciflat.json"))],
    },
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegistryError {
    #[error("unknown example {0:?}; run `examples` for the list")]
    UnknownExample(String),
    #[error("example {name:?} has no variant {variant:?} (available: {available})")]
    UnknownVariant { name: String, variant: String, available: String },
    #[error("built-in scenario is invalid: {0}")]
    Invalid(#[from] ScenarioError),
}

pub fn names() -> Vec<&'static str> {
    EXAMPLES.iter().map(|e| e.name).collect()
}

pub fn find(name: &str) -> Option<&'static Example> {
    EXAMPLES.iter().find(|e| e.name == name)
}

pub fn example_scenario(name: &str, variant: Option<&str>) -> Result<Scenario, RegistryError> {
    let ex = find(name).ok_or_else(|| RegistryError::UnknownExample(name.to_string()))?;
    let json = match variant {
        None => ex.variants[0].1,
        Some(v) => {
            ex.variants.iter().find(|(k, _)| *k == v).map(|(_, j)| *j).ok_or_else(|| {
                RegistryError::UnknownVariant {
                    name: name.to_string(),
                    variant: v.to_string(),
                    available: ex.variants.iter().map(|(k, _)| *k).collect::<Vec<_>>().join(", "),
                }
            })?
        }
    };
    Ok(Scenario::from_json(json)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExampleInfo {
    pub name: &'static str,
    pub variant: &'static str,
    pub n: usize,
    pub mode: String,
    pub expected: String,
    pub summary: &'static str,
}

/// One row per example variant.
pub fn list_examples() -> Vec<ExampleInfo> {
    let mut rows = Vec::new();
    for ex in &EXAMPLES {
        for (variant, json) in ex.variants {
            let sc = Scenario::from_json(json).expect("built-in scenarios are valid");
            let expected = sc
                .expected
                .as_ref()
                .and_then(|e| e.verdict)
                .map(|v| v.to_string())
                .unwrap_or_default();
            rows.push(ExampleInfo {
                name: ex.name,
                variant,
                n: sc.dim(),
                mode: format!("{:?}", sc.spec.mode).to_lowercase(),
                expected,
                summary: ex.summary,
            });
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exactly_the_documented_entries() {
        assert_eq!(
            names(),
            [
                "flat",
                "klein",
                "positive_cc",
                "numata",
                "affine2d_g",
                "degenerate2d",
                "nonmetrizable2d",
                "shen_ricciflat"
            ]
        );
    }

    #[test]
    fn every_variant_loads_with_an_expected_verdict() {
        let rows = list_examples();
        assert_eq!(rows.len(), 10);
        assert!(rows.iter().all(|r| !r.expected.is_empty()));
    }

    #[test]
    fn lookup_errors() {
        assert!(matches!(example_scenario("nope", None), Err(RegistryError::UnknownExample(_))));
        assert!(matches!(
            example_scenario("klein", Some("4d")),
            Err(RegistryError::UnknownVariant { .. })
        ));
        assert_eq!(example_scenario("klein", Some("3d")).unwrap().dim(), 3);
    }
}
