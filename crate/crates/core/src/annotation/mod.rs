//! Ground-truth production from depth sequences: seed boxes refined by ICP,
//! voxel carving, mesh extraction and tight boxes.

mod carving;
mod depth;
mod pipeline;
mod registration;
mod surface;

pub use carving::{free_space, voxel_carve, OccupancyGrid, DEFAULT_CARVE_MARGIN, DEFAULT_VOXEL_SIZE};
pub use depth::{backproject, DepthFrame, DepthMap, Intrinsics};
pub use pipeline::{
    accumulate_points, annotate_sequence, refine_box_poses, Annotation, AnnotationDiagnostics, AnnotationInput,
    AnnotationParams, FrameDiagnostics, DEFAULT_CROP_MARGIN, DEFAULT_SYM_REPLICAS,
};
pub use registration::{icp_align, rigid_alignment, IcpParams, IcpResult};
pub use surface::{extract_mesh, laplacian_smooth, tight_bbox, DEFAULT_SMOOTHING_ITERATIONS, DEFAULT_SMOOTHING_LAMBDA};
