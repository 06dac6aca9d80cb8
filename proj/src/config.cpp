#include "mirror3d/config.hpp"

#include <fstream>
#include <sstream>

#include "mirror3d/errors.hpp"

namespace mirror3d::config {

namespace {

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception&) {
        throw ConfigError(std::string("config field '") + key + "' has the wrong type");
    }
}

template <class T>
T require(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) {
        throw ConfigError(std::string("config field '") + key + "' is missing");
    }
    return get_or<T>(j, key, T{});
}

Vec3 parse_vec(const Json& j, const char* what) {
    if (!j.is_array() || j.size() != 3) {
        throw ConfigError(std::string(what) + " must be an array of 3 numbers");
    }
    Vec3 v;
    for (int i = 0; i < 3; ++i) {
        if (!j[static_cast<std::size_t>(i)].is_number()) {
            throw ConfigError(std::string(what) + " must be an array of 3 numbers");
        }
        v(i) = j[static_cast<std::size_t>(i)].get<double>();
    }
    return v;
}

Rect3 parse_rect(const Json& j) {
    return {parse_vec(require<Json>(j, "corner"), "corner"), parse_vec(require<Json>(j, "edge_u"), "edge_u"),
            parse_vec(require<Json>(j, "edge_v"), "edge_v")};
}

Json rect_json(const Rect3& r) {
    return {{"corner", to_json(r.corner)}, {"edge_u", to_json(r.edge_u)}, {"edge_v", to_json(r.edge_v)}};
}

}  // namespace

std::filesystem::path Document::resolve(const std::string& relative) const {
    const std::filesystem::path p(relative);
    return p.is_absolute() ? p : base_dir / p;
}

const Json& Document::at(const char* key) const {
    if (!json.contains(key)) {
        throw ConfigError(std::string("config section '") + key + "' is missing");
    }
    return json.at(key);
}

Document parse(const std::string& text, const std::filesystem::path& base_dir) {
    Document doc;
    try {
        doc.json = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    if (!doc.json.is_object()) {
        throw ConfigError("config root must be a JSON object");
    }
    const int version = get_or<int>(doc.json, "schema_version", -1);
    if (version != kSchemaVersion) {
        throw ConfigError("unsupported schema_version " + std::to_string(version) + " (expected " +
                          std::to_string(kSchemaVersion) + ")");
    }
    doc.base_dir = base_dir;
    return doc;
}

Document load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read config '" + path.string() + "'");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    auto base = path.parent_path();
    return parse(buffer.str(), base.empty() ? std::filesystem::path(".") : base);
}

void write(const std::filesystem::path& path, const Json& json) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    out << json.dump(2) << '\n';
    if (!out) {
        throw IoError("failed writing '" + path.string() + "'");
    }
}

Point3 parse_point(const Json& j, const char* what) {
    return parse_vec(j, what);
}

Json to_json(const Point3& p) {
    return Json::array({p.x(), p.y(), p.z()});
}

CameraIntrinsics parse_camera(const Json& j) {
    CameraIntrinsics k;
    k.fx = get_or(j, "fx", k.fx);
    k.fy = get_or(j, "fy", k.fy);
    k.cx = get_or(j, "cx", k.cx);
    k.cy = get_or(j, "cy", k.cy);
    k.width = get_or(j, "width", k.width);
    k.height = get_or(j, "height", k.height);
    k.validate();
    return k;
}

Json to_json(const CameraIntrinsics& k) {
    return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

std::vector<Pixel> parse_pixels(const Json& j) {
    if (!j.is_array()) {
        throw ConfigError("pixel list must be an array of [x, y] pairs");
    }
    std::vector<Pixel> pixels;
    for (const auto& v : j) {
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
            throw ConfigError("pixel list must be an array of [x, y] pairs");
        }
        pixels.push_back({v[0].get<double>(), v[1].get<double>()});
    }
    return pixels;
}

Json to_json(const std::vector<Pixel>& pixels) {
    Json out = Json::array();
    for (const auto& p : pixels) {
        out.push_back(Json::array({p.x, p.y}));
    }
    return out;
}

PixelPolygon parse_polygon(const Json& j) {
    return PixelPolygon(parse_pixels(j));
}

Json to_json(const PixelPolygon& poly) {
    return to_json(poly.vertices());
}

Plane parse_plane(const Json& j) {
    if (!j.is_array() || j.size() != 4) {
        throw ConfigError("plane must be an array [a, b, c, d]");
    }
    try {
        return Plane(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>());
    } catch (const Json::exception&) {
        throw ConfigError("plane must be an array of 4 numbers");
    } catch (const DegenerateInput& e) {
        throw ConfigError(e.what());
    }
}

Json to_json(const Plane& plane) {
    return Json::array({plane.a(), plane.b(), plane.c(), plane.d()});
}

Primitive parse_primitive(const Json& j) {
    const auto type = require<std::string>(j, "type");
    if (type == "sphere") {
        return Sphere{parse_point(get_or(j, "center", Json::array({0.0, 0.0, 0.0})), "sphere center"),
                      require<double>(j, "radius")};
    }
    if (type == "cylinder") {
        Cylinder c;
        c.axis_point = parse_point(get_or(j, "axis_point", Json::array({0.0, 0.0, 0.0})), "axis_point");
        c.axis_dir = parse_vec(get_or(j, "axis_dir", Json::array({0.0, 1.0, 0.0})), "axis_dir");
        c.radius = require<double>(j, "radius");
        c.half_length = require<double>(j, "half_length");
        return c;
    }
    if (type == "plane") {
        return PlanarPatch{parse_rect(j)};
    }
    throw ConfigError("unknown object type '" + type + "'");
}

Json to_json(const Primitive& prim) {
    if (const auto* s = std::get_if<Sphere>(&prim)) {
        return {{"type", "sphere"}, {"center", to_json(s->center)}, {"radius", s->radius}};
    }
    if (const auto* c = std::get_if<Cylinder>(&prim)) {
        return {{"type", "cylinder"},
                {"axis_point", to_json(c->axis_point)},
                {"axis_dir", to_json(c->axis_dir)},
                {"radius", c->radius},
                {"half_length", c->half_length}};
    }
    Json out = rect_json(std::get<PlanarPatch>(prim).rect);
    out["type"] = "plane";
    return out;
}

SceneConfig parse_scene(const Json& j, const CameraIntrinsics& k) {
    if (!j.is_object()) {
        throw ConfigError("scene section must be an object");
    }
    std::vector<Primitive> objects;
    for (const auto& o : get_or(j, "objects", Json::array())) {
        objects.push_back(parse_primitive(o));
    }

    SceneConfig scene;
    if (j.contains("two_mirror")) {
        const Json& w = j.at("two_mirror");
        if (objects.size() != 1) {
            throw ConfigError("a two_mirror scene takes exactly one object");
        }
        if (j.contains("mirrors")) {
            throw ConfigError("a two_mirror scene generates its own mirrors");
        }
        TwoMirrorLayout layout;
        layout.intrinsics = k;
        layout.mirror_distance_mm = get_or(w, "mirror_distance_mm", 0.0);
        layout.markers_per_mirror = get_or(w, "markers_per_mirror", layout.markers_per_mirror);
        layout.noise_sigma_mm = get_or(j, "noise_sigma_mm", layout.noise_sigma_mm);
        layout.seed = get_or<std::uint64_t>(j, "seed", 0);
        scene = make_two_mirror_scene(require<double>(w, "angle_deg"), objects.front(),
                                      get_or(w, "object_distance_mm", 2000.0), layout);
    } else {
        scene.intrinsics = k;
        scene.objects = std::move(objects);
        scene.noise_sigma_mm = get_or(j, "noise_sigma_mm", scene.noise_sigma_mm);
        scene.seed = get_or<std::uint64_t>(j, "seed", 0);
        for (const auto& m : get_or(j, "mirrors", Json::array())) {
            MirrorRect mirror;
            mirror.rect = parse_rect(m);
            mirror.marker_radius_mm = get_or(m, "marker_radius_mm", mirror.marker_radius_mm);
            for (const auto& st : parse_pixels(get_or(m, "markers", Json::array()))) {
                mirror.markers_st.emplace_back(st.x, st.y);
            }
            scene.mirrors.push_back(std::move(mirror));
        }
    }
    scene.render_markers = get_or(j, "render_markers", false);
    scene.validate();
    return scene;
}

RansacConfig parse_ransac(const Json& j, RansacConfig defaults) {
    if (j.is_null()) {
        return defaults;
    }
    defaults.iterations = get_or(j, "iterations", defaults.iterations);
    defaults.inlier_threshold_mm = get_or(j, "inlier_threshold_mm", defaults.inlier_threshold_mm);
    defaults.min_inliers = get_or(j, "min_inliers", defaults.min_inliers);
    defaults.min_inlier_fraction = get_or(j, "min_inlier_fraction", defaults.min_inlier_fraction);
    defaults.seed = get_or(j, "seed", defaults.seed);
    defaults.validate();
    return defaults;
}

CarveConfig parse_carve(const Json& j) {
    CarveConfig cfg;
    if (j.is_null()) {
        return cfg;
    }
    cfg.threshold_mm = get_or(j, "threshold_mm", cfg.threshold_mm);
    const auto lookup = get_or<std::string>(j, "lookup", "nearest");
    if (lookup == "nearest") {
        cfg.lookup = DepthLookup::nearest;
    } else if (lookup == "bilinear") {
        cfg.lookup = DepthLookup::bilinear;
    } else {
        throw ConfigError("unknown depth lookup '" + lookup + "' (expected nearest or bilinear)");
    }
    cfg.validate();
    return cfg;
}

std::vector<Mirror> parse_mirrors(const Json& j) {
    if (!j.is_array()) {
        throw ConfigError("mirrors must be an array");
    }
    std::vector<Mirror> mirrors;
    for (const auto& m : j) {
        mirrors.emplace_back(parse_plane(require<Json>(m, "plane")), parse_polygon(require<Json>(m, "region")));
    }
    return mirrors;
}

Json to_json(const std::vector<Mirror>& mirrors) {
    Json out = Json::array();
    for (const auto& m : mirrors) {
        out.push_back({{"plane", to_json(m.plane)}, {"region", to_json(m.region)}});
    }
    return out;
}

}  // namespace mirror3d::config
