use serde::{Deserialize, Serialize};

use super::PcgError;
use crate::model::ItemKind;

const DEFAULT_CATALOG_JSON: &str = include_str!("default_catalog.json");

/// Scatter rule for one family of companion meshes around a placed item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompanionRule {
    pub mesh_family: String,
    pub min_count: u32,
    pub max_count: u32,
    /// Scatter radius in meters.
    pub radius: f64,
    #[serde(default)]
    pub forbid_water: bool,
}

/// How one item kind grows into an ecosystem of instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EcosystemTemplate {
    pub kind: ItemKind,
    pub primary_variants: u32,
    #[serde(default)]
    pub companion_rules: Vec<CompanionRule>,
}

impl EcosystemTemplate {
    pub fn check(&self) -> Result<(), PcgError> {
        if self.primary_variants == 0 {
            return Err(PcgError::InvalidCatalog(format!(
                "{}: primary_variants must be positive",
                self.kind
            )));
        }
        for rule in &self.companion_rules {
            if rule.min_count > rule.max_count {
                return Err(PcgError::InvalidCatalog(format!(
                    "{}/{}: min_count exceeds max_count",
                    self.kind, rule.mesh_family
                )));
            }
            if !(rule.radius.is_finite() && rule.radius >= 0.0) {
                return Err(PcgError::InvalidCatalog(format!(
                    "{}/{}: radius must be a non-negative number",
                    self.kind, rule.mesh_family
                )));
            }
        }
        Ok(())
    }
}

/// An ordered set of templates with at most one entry per kind.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    templates: Vec<EcosystemTemplate>,
}

impl Catalog {
    pub fn new(templates: Vec<EcosystemTemplate>) -> Result<Catalog, PcgError> {
        for (i, t) in templates.iter().enumerate() {
            t.check()?;
            if templates[..i].iter().any(|o| o.kind == t.kind) {
                return Err(PcgError::InvalidCatalog(format!(
                    "duplicate template for {}",
                    t.kind
                )));
            }
        }
        Ok(Catalog { templates })
    }

    /// Parses a catalog file: a JSON array of templates.
    pub fn from_json(bytes: &[u8]) -> Result<Catalog, PcgError> {
        let templates: Vec<EcosystemTemplate> =
            serde_json::from_slice(bytes).map_err(|e| PcgError::InvalidCatalog(e.to_string()))?;
        Catalog::new(templates)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.templates).expect("templates serialize")
    }

    pub fn get(&self, kind: ItemKind) -> Option<&EcosystemTemplate> {
        self.templates.iter().find(|t| t.kind == kind)
    }

    pub fn templates(&self) -> &[EcosystemTemplate] {
        &self.templates
    }

    pub fn covers_all_kinds(&self) -> bool {
        ItemKind::ALL.iter().all(|k| self.get(*k).is_some())
    }
}

impl Default for Catalog {
    fn default() -> Self {
        Catalog::from_json(DEFAULT_CATALOG_JSON.as_bytes()).expect("embedded catalog is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_catalog_covers_everything() {
        let c = Catalog::default();
        assert!(c.covers_all_kinds());
        let tree = c.get(ItemKind::Tree).unwrap();
        assert_eq!(tree.primary_variants, 4);
        assert_eq!(tree.companion_rules[0].mesh_family, "grass_tuft");
        assert_eq!(
            (
                tree.companion_rules[0].min_count,
                tree.companion_rules[0].max_count
            ),
            (5, 12)
        );
        assert_eq!(c.get(ItemKind::Boulder).unwrap().primary_variants, 10);
        assert_eq!(c.get(ItemKind::Well).unwrap().primary_variants, 1);
        let again = Catalog::from_json(c.to_json().as_bytes()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn bad_catalogs_are_refused() {
        let dup = r#"[{"kind":"well","primary_variants":1},{"kind":"well","primary_variants":1}]"#;
        assert!(Catalog::from_json(dup.as_bytes()).is_err());
        let inverted = r#"[{"kind":"tree","primary_variants":1,"companion_rules":[
            {"mesh_family":"x","min_count":3,"max_count":1,"radius":1.0}]}]"#;
        assert!(Catalog::from_json(inverted.as_bytes()).is_err());
        let zero = r#"[{"kind":"tree","primary_variants":0}]"#;
        assert!(Catalog::from_json(zero.as_bytes()).is_err());
        let unknown = r#"[{"kind":"tree","primary_variants":1,"colour":"red"}]"#;
        assert!(Catalog::from_json(unknown.as_bytes()).is_err());
    }
}
