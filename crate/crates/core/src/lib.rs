//! Occlusion-free planar embeddings of 3D tree skeletons.
//!
//! The pipeline reads a skeleton, finds an informative camera view for every
//! subtree, projects node angles onto the local view planes and then searches
//! per-segment length and angle ratios with a particle swarm so the 2D
//! layout keeps lengths and bends while no two edges overlap. The view set
//! also drives a 3D fly-through path.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the scalar.

pub mod embedding;
pub mod evaluation;
pub mod geom;
pub mod navigation;
pub mod pipeline;
pub mod projection;
pub mod pso;
pub mod scalar;
pub mod skeleton;
pub mod viewpoint;

pub use scalar::Real;

pub type SkeletonTreeF64 = skeleton::SkeletonTree<f64>;
pub type SkeletonTreeF32 = skeleton::SkeletonTree<f32>;
pub type EmbeddingSolutionF64 = embedding::EmbeddingSolution<f64>;
pub type EmbeddingSolutionF32 = embedding::EmbeddingSolution<f32>;
pub type ViewHierarchyF64 = viewpoint::ViewHierarchy<f64>;
pub type ViewHierarchyF32 = viewpoint::ViewHierarchy<f32>;
pub type CameraPathF64 = navigation::CameraPath<f64>;
pub type CameraPathF32 = navigation::CameraPath<f32>;
pub type PreparedF64 = pipeline::Prepared<f64>;
pub type PreparedF32 = pipeline::Prepared<f32>;
pub type Vec2F64 = geom::Vec2<f64>;
pub type Vec3F64 = geom::Vec3<f64>;
