#include "trirast/ref_raster.hpp"

#include <vector>

namespace trirast {

Framebuffer renderReference(const DrawList& drawList, const Camera& camera, const OracleConfig& config) {
    RasterParams params = RasterParams::from(camera, config.raster);
    Framebuffer fb(params.width, params.height);
    auto merge = [&fb](std::size_t pixel, uint64_t fragment) { fb.mergeSerial(pixel, fragment); };

    std::vector<Stage2Entry> stage2;
    for (std::size_t item = 0; item < drawList.items.size(); ++item) {
        const DrawItem& di = drawList.items[item];
        for (uint64_t local = 0; local < di.triangleCount; ++local) {
            Stage1Decision d = setupTriangle(fetchViewTriangle(di, local), params);
            uint64_t id = di.firstGlobalTriangle + local;
            if (d.route == Stage1Route::Small ||
                (!config.honorStages && d.route == Stage1Route::Forward && !d.setup.nearPlaneCrossing)) {
                rasterizeSmall(d.setup, id, params.width, merge);
            } else if (d.route == Stage1Route::Forward) {
                stage2.push_back({uint32_t(item), uint32_t(local)});
            }
        }
    }

    std::vector<Stage3Entry> stage3;
    for (const Stage2Entry& e : stage2) {
        const DrawItem& di = drawList.items[e.drawItemIndex];
        Stage2Decision d = classifyStage2(fetchViewTriangle(di, e.localTriangleIndex), params);
        if (d.route == Stage2Route::Direct) {
            rasterizeStrided(d.setup, di.firstGlobalTriangle + e.localTriangleIndex, params.width, merge);
        } else if (d.route == Stage2Route::Tiles) {
            for (const TileCoord& t : tilesForRect(d.clippedBounds, params.tilePx)) {
                stage3.push_back({e.drawItemIndex, e.localTriangleIndex, t.x, t.y});
            }
        }
    }

    for (const Stage3Entry& e : stage3) {
        const DrawItem& di = drawList.items[e.drawItemIndex];
        rayCastTile(fetchViewTriangle(di, e.localTriangleIndex), tileRect({e.tileX, e.tileY}, params), params,
                    di.firstGlobalTriangle + e.localTriangleIndex, merge);
    }
    return fb;
}

Framebuffer renderReference(std::span<const SceneNode> scene, const Camera& camera, const OracleConfig& config) {
    return renderReference(buildDrawList(scene, camera), camera, config);
}

}  // namespace trirast
