#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mirror3d/calibration.hpp"
#include "mirror3d/reconstruction.hpp"
#include "mirror3d/synthetic.hpp"

namespace mirror3d::config {

using Json = nlohmann::json;

/// Every config and sidecar file carries "schema_version": 1.
inline constexpr int kSchemaVersion = 1;

/// A parsed JSON config plus the directory that relative paths in it refer to.
struct Document {
    Json json;
    std::filesystem::path base_dir;

    std::filesystem::path resolve(const std::string& relative) const;
    bool has(const char* key) const { return json.contains(key); }
    const Json& at(const char* key) const;
};

/// Throws IoError when the file cannot be read and ConfigError on malformed
/// JSON or a schema version mismatch.
Document load(const std::filesystem::path& path);
Document parse(const std::string& text, const std::filesystem::path& base_dir = ".");
void write(const std::filesystem::path& path, const Json& json);

Point3 parse_point(const Json& j, const char* what);
Json to_json(const Point3& p);

CameraIntrinsics parse_camera(const Json& j);
Json to_json(const CameraIntrinsics& k);

PixelPolygon parse_polygon(const Json& j);
Json to_json(const PixelPolygon& poly);

std::vector<Pixel> parse_pixels(const Json& j);
Json to_json(const std::vector<Pixel>& pixels);

Plane parse_plane(const Json& j);
Json to_json(const Plane& plane);

/// {"type": "sphere" | "cylinder" | "plane", ...}
Primitive parse_primitive(const Json& j);
Json to_json(const Primitive& prim);

/// Scene section; either explicit "objects"/"mirrors" or a "two_mirror"
/// generator block with a single object.
SceneConfig parse_scene(const Json& j, const CameraIntrinsics& k);

RansacConfig parse_ransac(const Json& j, RansacConfig defaults);
CarveConfig parse_carve(const Json& j);

/// [{"plane": [a,b,c,d], "region": [[x,y],...]}, ...]
std::vector<Mirror> parse_mirrors(const Json& j);
Json to_json(const std::vector<Mirror>& mirrors);

}  // namespace mirror3d::config
