//! Everything derived from a skeleton before the embedding solve.

use crate::embedding::LayoutModel;
use crate::projection::{compute_target_angles, TargetAngles};
use crate::scalar::Real;
use crate::skeleton::{
    build_enhanced_tree, build_hierarchy, segment_tree, EnhancedTree, Segmentation, SkeletonTree, SubtreeHierarchy,
};
use crate::viewpoint::{build_view_hierarchy, ViewError, ViewHierarchy, ViewSearchConfig};

/// Segments, view hierarchy and target angles for one tree. Immutable once
/// built and shareable across threads.
#[derive(Clone, Debug)]
pub struct Prepared<T> {
    pub enhanced: EnhancedTree<T>,
    pub segments: Segmentation,
    pub hierarchy: SubtreeHierarchy,
    pub views: ViewHierarchy<T>,
    pub targets: TargetAngles<T>,
}

impl<T: Real> Prepared<T> {
    pub fn new(tree: SkeletonTree<T>, views: &ViewSearchConfig) -> Result<Self, ViewError> {
        let segments = segment_tree(&tree);
        let hierarchy = build_hierarchy(&tree, &segments);
        let enhanced = build_enhanced_tree(&tree);
        let views = build_view_hierarchy(&enhanced, &hierarchy, views)?;
        let targets = compute_target_angles(&enhanced.base, &segments, &hierarchy, &views);
        Ok(Self { enhanced, segments, hierarchy, views, targets })
    }

    pub fn tree(&self) -> &SkeletonTree<T> {
        &self.enhanced.base
    }

    pub fn model(&self) -> LayoutModel<'_, T> {
        LayoutModel::new(self.tree(), &self.segments, &self.targets)
    }
}
