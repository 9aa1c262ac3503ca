#pragma once

#include <span>

#include "trirast/raster_pipe.hpp"
#include "trirast/scene_core.hpp"

namespace trirast {

struct OracleConfig {
    RasterConfig raster;
    /// true: replicate the pipeline's stage routing exactly.
    /// false: every non-culled triangle in front of the near plane goes
    /// through the stage-1 loop regardless of size; near-plane crossers still
    /// need the stage-3 ray cast.
    bool honorStages = true;
};

/// Single-threaded reference renderer. Calls the same classification and
/// fragment kernels as the parallel pipeline, in draw-list order, with
/// unbounded queues and a plain scalar min-merge.
Framebuffer renderReference(const DrawList& drawList, const Camera& camera, const OracleConfig& config = {});

Framebuffer renderReference(std::span<const SceneNode> scene, const Camera& camera, const OracleConfig& config = {});

}  // namespace trirast
