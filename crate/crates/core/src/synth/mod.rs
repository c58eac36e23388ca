//! Seeded synthetic data: a news corpus with planted duplicates, a panel
//! with planted coefficients, and the small end-to-end fixture.

pub mod corpus;
pub mod fixture;
pub mod panel;
pub mod towns;

pub use corpus::{generate_corpus, CorpusParams, SynthArticle, SynthCorpus, SynthEvent};
pub use panel::{planted_panel, PanelParams, PlantedPanel};
pub use towns::{Town, TOWNS};
