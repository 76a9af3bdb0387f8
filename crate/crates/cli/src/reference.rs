//! Published values the `reproduce` targets are compared against.

use serde::{Deserialize, Serialize};

const REFERENCE_JSON: &str = include_str!("../data/reference.json");

#[derive(Debug, Clone, Deserialize)]
pub struct ReferenceSet {
    pub version: u32,
    pub anchors: Vec<Anchor>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Anchor {
    pub id: String,
    pub target: String,
    pub description: String,
    pub value: f64,
    pub tolerance: f64,
    /// Tolerance is relative to `value` rather than absolute.
    #[serde(default)]
    pub relative: bool,
}

impl Anchor {
    pub fn accepts(&self, measured: f64) -> bool {
        let err = (measured - self.value).abs();
        if self.relative {
            err <= self.tolerance * self.value.abs()
        } else {
            // Slack for values like 1/3 written out in decimal.
            err <= self.tolerance + 1e-12
        }
    }

    pub fn tolerance_label(&self) -> String {
        if self.relative {
            format!("±{}%", self.tolerance * 100.0)
        } else {
            format!("±{}", fmt_console(self.tolerance))
        }
    }
}

/// Outcome of one anchor.
#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub id: String,
    pub description: String,
    pub reference: f64,
    pub measured: f64,
    pub tolerance: f64,
    pub relative: bool,
    pub pass: bool,
}

impl Comparison {
    pub fn new(anchor: &Anchor, measured: f64) -> Self {
        Self {
            id: anchor.id.clone(),
            description: anchor.description.clone(),
            reference: anchor.value,
            measured,
            tolerance: anchor.tolerance,
            relative: anchor.relative,
            pass: anchor.accepts(measured),
        }
    }

    pub fn report_line(&self, anchor: &Anchor) -> String {
        format!(
            "{} {:<30} {}: reference {} measured {} ({})",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.description,
            fmt_console(self.reference),
            fmt_console(self.measured),
            anchor.tolerance_label()
        )
    }
}

/// Plain decimals in the usual range, scientific notation outside it.
pub fn fmt_console(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && !(1e-4..1e7).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

impl ReferenceSet {
    pub fn embedded() -> &'static ReferenceSet {
        static SET: std::sync::OnceLock<ReferenceSet> = std::sync::OnceLock::new();
        SET.get_or_init(|| serde_json::from_str(REFERENCE_JSON).expect("embedded reference data parses"))
    }

    pub fn for_target<'a>(&'a self, target: &'a str) -> impl Iterator<Item = &'a Anchor> + 'a {
        self.anchors.iter().filter(move |a| a.target == target)
    }

    pub fn get(&self, id: &str) -> Option<&Anchor> {
        self.anchors.iter().find(|a| a.id == id)
    }
}
