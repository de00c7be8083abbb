//! Sampling-based motion planning for k-color teams of disc robots.
pub mod congen;
pub mod geom;
pub mod graphgen;
pub mod pebble;
pub mod plan;
pub mod rng;
pub mod roadmap;
pub mod scenario;
pub mod verify;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/pebbles.md")]
    mod pebbles {}
    #[doc = include_str!("../../../book/src/pumped.md")]
    mod pumped {}
    #[doc = include_str!("../../../book/src/connections.md")]
    mod connections {}
    #[doc = include_str!("../../../book/src/roadmap.md")]
    mod roadmap {}
    #[doc = include_str!("../../../book/src/files.md")]
    mod files {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
