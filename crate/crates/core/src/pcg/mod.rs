//! Deterministic procedural expansion of placed items.

mod expand;
mod rng;
mod template;

use thiserror::Error;

use crate::model::ItemKind;

pub use expand::{
    expand_item, expand_scene, ExpansionInstance, MAX_SCATTER_ATTEMPTS, STREAM_COUNTS,
    STREAM_PLACEMENT_BASE, STREAM_PRIMARY,
};
pub use rng::{item_rng, mix, splitmix64_next, SplitMix64, GOLDEN_GAMMA};
pub use template::{Catalog, CompanionRule, EcosystemTemplate};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PcgError {
    #[error("template for {template} used on a {item}")]
    TemplateMismatch { item: ItemKind, template: ItemKind },
    #[error("catalog has no template for {0}")]
    MissingTemplate(ItemKind),
    #[error("item {0} lies outside the grid")]
    ItemOutOfBounds(u64),
    #[error("invalid catalog: {0}")]
    InvalidCatalog(String),
}
