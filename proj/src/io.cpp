#include "mirror3d/io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mirror3d/errors.hpp"

namespace mirror3d {

namespace {

constexpr std::array<std::array<std::uint8_t, 3>, 6> kPalette{{
    {255, 64, 64},   // direct view
    {64, 200, 64},   // mirror 1
    {64, 96, 255},   // mirror 2
    {255, 200, 0},
    {200, 0, 255},
    {0, 220, 220},
}};

// Next whitespace-delimited PGM header token, skipping '#' comments.
std::string pgm_token(std::istream& in) {
    std::string token;
    int ch = 0;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
            continue;
        }
        if (std::isspace(ch)) {
            if (!token.empty()) {
                return token;
            }
            continue;
        }
        token.push_back(static_cast<char>(ch));
    }
    if (token.empty()) {
        throw IoError("truncated PGM header");
    }
    return token;
}

int pgm_int(std::istream& in, const char* what) {
    const std::string token = pgm_token(in);
    try {
        std::size_t used = 0;
        const int value = std::stoi(token, &used);
        if (used != token.size()) {
            throw std::invalid_argument(token);
        }
        return value;
    } catch (const std::exception&) {
        throw IoError(std::string("bad PGM ") + what + ": '" + token + "'");
    }
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode) {
    std::ofstream out(path, mode);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    return out;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode) {
    std::ifstream in(path, mode);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    return in;
}

}  // namespace

void write_pgm(std::ostream& out, const DepthImage& depth) {
    out << "P5\n" << depth.width() << ' ' << depth.height() << "\n65535\n";
    std::vector<char> bytes(depth.data().size() * 2);
    for (std::size_t i = 0; i < depth.data().size(); ++i) {
        bytes[2 * i] = static_cast<char>(depth.data()[i] >> 8);
        bytes[2 * i + 1] = static_cast<char>(depth.data()[i] & 0xff);
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("failed writing PGM data");
    }
}

DepthImage read_pgm(std::istream& in) {
    if (pgm_token(in) != "P5") {
        throw IoError("not a binary PGM (P5) file");
    }
    const int width = pgm_int(in, "width");
    const int height = pgm_int(in, "height");
    const int maxval = pgm_int(in, "maxval");
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) {
        throw IoError("unsupported PGM geometry or maxval");
    }
    const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    const std::size_t bytes_per_sample = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(count * bytes_per_sample);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
        throw IoError("truncated PGM data");
    }
    std::vector<std::uint16_t> data(count);
    for (std::size_t i = 0; i < count; ++i) {
        data[i] = bytes_per_sample == 2 ? static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]) : raw[i];
    }
    return DepthImage(width, height, std::move(data));
}

void write_pgm(const std::filesystem::path& path, const DepthImage& depth) {
    auto out = open_out(path, std::ios::binary);
    write_pgm(out, depth);
}

DepthImage read_pgm(const std::filesystem::path& path) {
    auto in = open_in(path, std::ios::binary);
    return read_pgm(in);
}

std::array<std::uint8_t, 3> label_color(int label) {
    if (label < 0 || label > 255) {
        throw ConfigError("label " + std::to_string(label) + " cannot be encoded as a color");
    }
    if (static_cast<std::size_t>(label) < kPalette.size()) {
        return kPalette[static_cast<std::size_t>(label)];
    }
    const auto v = static_cast<std::uint8_t>(label);
    return {v, v, 0};
}

int color_label(const std::array<std::uint8_t, 3>& rgb) {
    for (std::size_t i = 0; i < kPalette.size(); ++i) {
        if (kPalette[i] == rgb) {
            return static_cast<int>(i);
        }
    }
    if (rgb[0] == rgb[1] && rgb[2] == 0 && rgb[0] >= kPalette.size()) {
        return rgb[0];
    }
    return -1;
}

void write_ply(std::ostream& out, const LabeledCloud& cloud) {
    if (cloud.points.size() != cloud.labels.size()) {
        throw ConfigError("cloud has mismatched point and label counts");
    }
    out << "ply\nformat ascii 1.0\ncomment units millimeters; color encodes source label\n"
        << "element vertex " << cloud.size() << "\n"
        << "property float x\nproperty float y\nproperty float z\n"
        << "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
    char line[128];
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto& p = cloud.points[i];
        const auto rgb = label_color(cloud.labels[i]);
        std::snprintf(line, sizeof line, "%.9g %.9g %.9g %u %u %u\n", static_cast<double>(static_cast<float>(p.x())),
                      static_cast<double>(static_cast<float>(p.y())),
                      static_cast<double>(static_cast<float>(p.z())), rgb[0], rgb[1], rgb[2]);
        out << line;
    }
    if (!out) {
        throw IoError("failed writing PLY data");
    }
}

LabeledCloud read_ply(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "ply") {
        throw IoError("not a PLY file");
    }
    std::size_t vertices = 0;
    bool in_vertex = false;
    bool ascii = false;
    std::vector<std::string> props;
    std::vector<bool> single;
    while (std::getline(in, line)) {
        std::istringstream tokens(line);
        std::string kw;
        tokens >> kw;
        if (kw == "format") {
            std::string fmt;
            tokens >> fmt;
            ascii = fmt == "ascii";
        } else if (kw == "element") {
            std::string name;
            tokens >> name;
            in_vertex = name == "vertex";
            if (in_vertex) {
                tokens >> vertices;
            } else {
                throw IoError("unsupported PLY element '" + name + "'");
            }
        } else if (kw == "property" && in_vertex) {
            std::string type;
            std::string name;
            tokens >> type >> name;
            props.push_back(name);
            single.push_back(type == "float" || type == "float32");
        } else if (kw == "end_header") {
            break;
        }
    }
    if (!ascii) {
        throw IoError("only ASCII PLY files are supported");
    }
    auto find = [&](const char* name) -> int {
        for (std::size_t i = 0; i < props.size(); ++i) {
            if (props[i] == name) {
                return static_cast<int>(i);
            }
        }
        return -1;
    };
    const int ix = find("x");
    const int iy = find("y");
    const int iz = find("z");
    const int ir = find("red");
    const int ig = find("green");
    const int ib = find("blue");
    if (ix < 0 || iy < 0 || iz < 0) {
        throw IoError("PLY vertices lack x/y/z properties");
    }

    LabeledCloud cloud;
    cloud.points.reserve(vertices);
    cloud.labels.reserve(vertices);
    std::vector<double> values(props.size());
    for (std::size_t v = 0; v < vertices; ++v) {
        if (!std::getline(in, line)) {
            throw IoError("truncated PLY vertex list");
        }
        std::istringstream tokens(line);
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!(tokens >> values[i])) {
                throw IoError("malformed PLY vertex line: '" + line + "'");
            }
            if (single[i]) {
                values[i] = static_cast<float>(values[i]);
            }
        }
        int label = kDirectLabel;
        if (ir >= 0 && ig >= 0 && ib >= 0) {
            label = color_label({static_cast<std::uint8_t>(values[static_cast<std::size_t>(ir)]),
                                 static_cast<std::uint8_t>(values[static_cast<std::size_t>(ig)]),
                                 static_cast<std::uint8_t>(values[static_cast<std::size_t>(ib)])});
        }
        cloud.push_back({values[static_cast<std::size_t>(ix)], values[static_cast<std::size_t>(iy)],
                         values[static_cast<std::size_t>(iz)]},
                        label);
    }
    return cloud;
}

void write_ply(const std::filesystem::path& path, const LabeledCloud& cloud) {
    auto out = open_out(path, std::ios::out);
    write_ply(out, cloud);
}

LabeledCloud read_ply(const std::filesystem::path& path) {
    auto in = open_in(path, std::ios::in);
    return read_ply(in);
}

}  // namespace mirror3d
