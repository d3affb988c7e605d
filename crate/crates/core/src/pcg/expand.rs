use std::f64::consts::TAU;

use super::rng::{item_rng, SplitMix64};
use super::template::{Catalog, EcosystemTemplate};
use super::PcgError;
use crate::model::{PlacedItem, Space, Terrain, WorldPoint};

/// Candidate positions tried per companion before it is skipped.
pub const MAX_SCATTER_ATTEMPTS: u32 = 16;

pub const STREAM_PRIMARY: u64 = 0;
pub const STREAM_COUNTS: u64 = 1;
/// Placements for rule `i` draw from stream `STREAM_PLACEMENT_BASE + i`.
pub const STREAM_PLACEMENT_BASE: u64 = 2;

/// One concrete mesh instance in the world.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionInstance {
    pub mesh: String,
    pub position: WorldPoint,
    /// In `[0, 360)`.
    pub yaw_deg: f64,
    /// In `[0.75, 1.25)`.
    pub scale: f64,
    /// Id of the item this instance grew from.
    pub source_item: u64,
}

fn orientation(rng: &mut SplitMix64) -> (f64, f64) {
    let yaw = rng.next_f64() * 360.0;
    let scale = 0.75 + 0.5 * rng.next_f64();
    (yaw, scale)
}

/// Expands one placed item into its primary mesh followed by scattered companions.
pub fn expand_item(
    space: &Space,
    item: &PlacedItem,
    template: &EcosystemTemplate,
) -> Result<Vec<ExpansionInstance>, PcgError> {
    if template.kind != item.kind {
        return Err(PcgError::TemplateMismatch {
            item: item.kind,
            template: template.kind,
        });
    }
    let grid = &space.grid;
    let center = grid
        .grid_to_world(item.cell)
        .map_err(|_| PcgError::ItemOutOfBounds(item.id))?;

    let mut out = Vec::new();
    let mut primary = item_rng(space.seed, item.id, STREAM_PRIMARY);
    let variant = primary.below(template.primary_variants.max(1).into());
    let (yaw_deg, scale) = orientation(&mut primary);
    out.push(ExpansionInstance {
        mesh: format!("{}/variant_{variant}", item.kind),
        position: center,
        yaw_deg,
        scale,
        source_item: item.id,
    });

    let mut counts = item_rng(space.seed, item.id, STREAM_COUNTS);
    for (rule_index, rule) in template.companion_rules.iter().enumerate() {
        let count = counts.range_inclusive(rule.min_count.into(), rule.max_count.into());
        let mut placement = item_rng(
            space.seed,
            item.id,
            STREAM_PLACEMENT_BASE + rule_index as u64,
        );
        let mesh = format!("{}/{}", item.kind, rule.mesh_family);
        for _ in 0..count {
            for _ in 0..MAX_SCATTER_ATTEMPTS {
                let r = placement.next_f64() * rule.radius;
                let theta = placement.next_f64() * TAU;
                let candidate =
                    WorldPoint::new(center.x + r * theta.cos(), 0.0, center.z + r * theta.sin());
                let Ok(cell) = grid.cell_of_world(candidate) else {
                    continue;
                };
                if rule.forbid_water && space.terrain_at(cell) == Ok(Terrain::Water) {
                    continue;
                }
                let (yaw_deg, scale) = orientation(&mut placement);
                out.push(ExpansionInstance {
                    mesh: mesh.clone(),
                    position: candidate,
                    yaw_deg,
                    scale,
                    source_item: item.id,
                });
                break;
            }
        }
    }
    Ok(out)
}

/// Expands every item of `space` in ascending id order.
pub fn expand_scene(space: &Space, catalog: &Catalog) -> Result<Vec<ExpansionInstance>, PcgError> {
    let mut out = Vec::new();
    for item in &space.items {
        let template = catalog
            .get(item.kind)
            .ok_or(PcgError::MissingTemplate(item.kind))?;
        out.extend(expand_item(space, item, template)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Cell, GridSpec, ItemKind};
    use crate::pcg::CompanionRule;

    fn demo_with_tree() -> (Space, PlacedItem) {
        let mut s = Space::new("s1", "demo", 42, GridSpec::default()).unwrap();
        let id = s.place_item(ItemKind::Tree, Cell::new(3, 2)).unwrap();
        let item = *s.item(id).unwrap();
        (s, item)
    }

    #[test]
    fn expansion_is_deterministic() {
        let (s, item) = demo_with_tree();
        let cat = Catalog::default();
        let t = cat.get(ItemKind::Tree).unwrap();
        let a = expand_item(&s, &item, t).unwrap();
        let b = expand_item(&s, &item, t).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].position, WorldPoint::new(7.0, 0.0, 5.0));
        assert!(a[0].mesh.starts_with("tree/variant_"));
    }

    #[test]
    fn template_mismatch() {
        let (s, item) = demo_with_tree();
        let cat = Catalog::default();
        assert_eq!(
            expand_item(&s, &item, cat.get(ItemKind::Well).unwrap()),
            Err(PcgError::TemplateMismatch {
                item: ItemKind::Tree,
                template: ItemKind::Well
            })
        );
    }

    #[test]
    fn all_water_skips_every_companion() {
        let mut s = Space::new("w", "water", 9, GridSpec::new(1, 1, 2.0).unwrap()).unwrap();
        s.set_terrain(Cell::new(0, 0), Terrain::Water).unwrap();
        let id = s.place_item(ItemKind::Tree, Cell::new(0, 0)).unwrap();
        let out = expand_scene(&s, &Catalog::default()).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].source_item, id);
    }

    #[test]
    fn missing_template() {
        let (s, _) = demo_with_tree();
        let cat = Catalog::new(vec![]).unwrap();
        assert_eq!(
            expand_scene(&s, &cat),
            Err(PcgError::MissingTemplate(ItemKind::Tree))
        );
        let empty = Space::new("e", "e", 0, GridSpec::default()).unwrap();
        assert_eq!(expand_scene(&empty, &cat), Ok(vec![]));
    }

    #[test]
    fn counts_respect_template_bounds() {
        let (s, item) = demo_with_tree();
        let template = EcosystemTemplate {
            kind: ItemKind::Tree,
            primary_variants: 1,
            companion_rules: vec![CompanionRule {
                mesh_family: "moss".into(),
                min_count: 4,
                max_count: 4,
                radius: 0.5,
                forbid_water: false,
            }],
        };
        let out = expand_item(&s, &item, &template).unwrap();
        assert_eq!(out.len(), 5);
        assert_eq!(out[0].mesh, "tree/variant_0");
        assert!(out[1..].iter().all(|i| i.mesh == "tree/moss"));
    }
}
