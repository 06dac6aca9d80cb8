#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "mirror3d/errors.hpp"
#include "mirror3d/io.hpp"

using namespace mirror3d;

TEST(Pgm, RoundTripsEveryValue) {
    std::vector<std::uint16_t> data(65536);
    for (std::size_t i = 0; i < data.size(); ++i) {
        data[i] = static_cast<std::uint16_t>(i);
    }
    const DepthImage image(256, 256, data);
    std::stringstream buf;
    write_pgm(buf, image);
    EXPECT_EQ(read_pgm(buf), image);
}

TEST(Pgm, RoundTripsRandomImages) {
    std::mt19937_64 rng(41);
    std::uniform_int_distribution<int> dim(1, 40);
    std::uniform_int_distribution<int> value(0, 65535);
    for (int trial = 0; trial < 50; ++trial) {
        DepthImage image(dim(rng), dim(rng));
        for (auto& v : image.data()) {
            v = static_cast<std::uint16_t>(value(rng));
        }
        std::stringstream buf;
        write_pgm(buf, image);
        EXPECT_EQ(read_pgm(buf), image);
    }
}

TEST(Pgm, HeaderIsBigEndianSixteenBit) {
    const DepthImage image(2, 1, {0x0102, 0xA0B0});
    std::stringstream buf;
    write_pgm(buf, image);
    const std::string s = buf.str();
    EXPECT_EQ(s.substr(0, 15), "P5\n2 1\n65535\n\x01\x02");
    EXPECT_EQ(static_cast<unsigned char>(s[15]), 0xA0);
    EXPECT_EQ(static_cast<unsigned char>(s[16]), 0xB0);
}

TEST(Pgm, ReadsCommentsAndEightBitFiles) {
    std::stringstream buf("P5\n# a comment\n3 1\n255\n\x01\x02\x03");
    const DepthImage image = read_pgm(buf);
    EXPECT_EQ(image.data(), (std::vector<std::uint16_t>{1, 2, 3}));
}

TEST(Pgm, RejectsMalformedInput) {
    std::stringstream ascii("P2\n2 2\n255\n1 2 3 4\n");
    EXPECT_THROW(read_pgm(ascii), IoError);
    std::stringstream truncated("P5\n4 4\n65535\n\x01\x02");
    EXPECT_THROW(read_pgm(truncated), IoError);
    std::stringstream bad_dims("P5\nx 4\n65535\n");
    EXPECT_THROW(read_pgm(bad_dims), IoError);
    EXPECT_THROW(read_pgm(std::filesystem::path("/nonexistent/dir/file.pgm")), IoError);
    EXPECT_THROW(write_pgm(std::filesystem::path("/nonexistent/dir/file.pgm"), DepthImage(1, 1)), IoError);
}

TEST(Ply, RoundTripsFloatPointsAndLabels) {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<float> coord(-5000, 5000);
    std::uniform_int_distribution<int> label(0, 255);
    LabeledCloud cloud;
    for (int i = 0; i < 2000; ++i) {
        cloud.push_back(Point3(coord(rng), coord(rng), coord(rng)), label(rng));
    }
    std::stringstream buf;
    write_ply(buf, cloud);
    const LabeledCloud back = read_ply(buf);
    EXPECT_EQ(back.points, cloud.points);
    EXPECT_EQ(back.labels, cloud.labels);
}

TEST(Ply, DoublesAreStoredAsFloats) {
    LabeledCloud cloud;
    cloud.push_back(Point3(0.1, 1.0 / 3.0, 2000.123456789), 2);
    std::stringstream buf;
    write_ply(buf, cloud);
    const LabeledCloud back = read_ply(buf);
    for (int i = 0; i < 3; ++i) {
        EXPECT_EQ(back.points[0](i), static_cast<double>(static_cast<float>(cloud.points[0](i))));
    }
}

TEST(Ply, ReadsPlainXyzWithoutColor) {
    std::stringstream buf("ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\n"
                          "property float z\nend_header\n1 2 3\n4 5 6\n");
    const LabeledCloud cloud = read_ply(buf);
    ASSERT_EQ(cloud.size(), 2u);
    EXPECT_EQ(cloud.points[1], Point3(4, 5, 6));
    EXPECT_EQ(cloud.labels[1], kDirectLabel);
}

TEST(Ply, RejectsMalformedInput) {
    std::stringstream not_ply("hello\n");
    EXPECT_THROW(read_ply(not_ply), IoError);
    std::stringstream binary("ply\nformat binary_little_endian 1.0\nelement vertex 0\nend_header\n");
    EXPECT_THROW(read_ply(binary), IoError);
    std::stringstream truncated("ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\n"
                                "property float z\nend_header\n1 2 3\n");
    EXPECT_THROW(read_ply(truncated), IoError);
    LabeledCloud negative;
    negative.push_back(Point3::Zero(), -1);
    std::stringstream out;
    EXPECT_THROW(write_ply(out, negative), ConfigError);
}

TEST(LabelColors, DistinctAndInvertible) {
    std::set<std::array<std::uint8_t, 3>> seen;
    for (int label = 0; label <= 255; ++label) {
        const auto rgb = label_color(label);
        EXPECT_TRUE(seen.insert(rgb).second) << label;
        EXPECT_EQ(color_label(rgb), label);
    }
    EXPECT_EQ(color_label({1, 2, 3}), -1);
    EXPECT_THROW(label_color(256), ConfigError);
}
