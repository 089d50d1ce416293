#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "slicematch/smtf.h"
#include "slicematch/tensor.h"
#include "test_util.h"

using namespace slicematch;
using testutil::random_map;
using testutil::random_vector;
using testutil::temp_path;

TEST_SUITE("core_tensor") {

TEST_CASE("l2_normalize basics") {
    const std::vector<float> v{3.0f, 4.0f};
    const auto n = l2_normalize(v);
    CHECK(n[0] == doctest::Approx(0.6).epsilon(1e-7));
    CHECK(n[1] == doctest::Approx(0.8).epsilon(1e-7));

    const std::vector<float> zero{0.0f, 0.0f, 0.0f};
    const auto nz = l2_normalize(zero);
    for (float x : nz) CHECK(x == 0.0f);

    const auto r = random_vector(512, 42);
    const auto nr = l2_normalize(r);
    double norm = 0.0;
    for (float x : nr) norm += static_cast<double>(x) * x;
    CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("l2_normalize is idempotent") {
    const auto v = random_vector(17, 7);
    const auto once = l2_normalize(v);
    const auto twice = l2_normalize(once);
    for (std::size_t i = 0; i < v.size(); ++i) {
        CHECK(twice[i] == doctest::Approx(once[i]).epsilon(1e-6));
    }
}

TEST_CASE("l2_normalize rejects non-finite input") {
    std::vector<float> v{1.0f, std::numeric_limits<float>::quiet_NaN()};
    CHECK_THROWS_AS(l2_normalize(v), std::invalid_argument);
    v[1] = std::numeric_limits<float>::infinity();
    CHECK_THROWS_AS(l2_normalize(v), std::invalid_argument);
}

TEST_CASE("cosine_similarity examples") {
    const std::vector<float> v{0.3f, -1.2f, 2.5f};
    CHECK(cosine_similarity(v, v) == doctest::Approx(1.0).epsilon(1e-7));

    const std::vector<float> e1{1.0f, 0.0f};
    const std::vector<float> e2{0.0f, 1.0f};
    CHECK(cosine_similarity(e1, e2) == doctest::Approx(0.0));

    const std::vector<float> a{1.0f, 2.0f, 3.0f};
    const std::vector<float> b{4.0f, 5.0f, 6.0f};
    CHECK(cosine_similarity(a, b) ==
          doctest::Approx(32.0 / std::sqrt(14.0 * 77.0)).epsilon(1e-9));

    CHECK_THROWS(cosine_similarity(a, e1));
}

TEST_CASE("cosine_similarity symmetry, scale invariance, clamping") {
    const auto a = random_vector(33, 1);
    const auto b = random_vector(33, 2);
    CHECK(cosine_similarity(a, b) == doctest::Approx(cosine_similarity(b, a)).epsilon(1e-12));

    std::vector<float> a_scaled(a);
    for (auto& x : a_scaled) x *= 37.5f;
    CHECK(cosine_similarity(a_scaled, b) == doctest::Approx(cosine_similarity(a, b)).epsilon(1e-6));

    CHECK(cosine_similarity(a, a) <= 1.0);
    const std::vector<float> big(64, 1e18f);
    CHECK(cosine_similarity(big, big) <= 1.0);
}

TEST_CASE("make_feature_map validates") {
    CHECK_THROWS(make_feature_map(0, 2, 2, {}));
    CHECK_THROWS(make_feature_map(2, 2, 2, std::vector<float>(7, 0.0f)));
    std::vector<float> bad(8, 0.0f);
    bad[3] = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS(make_feature_map(2, 2, 2, bad));
    const FeatureMap ok = make_feature_map(2, 2, 2, std::vector<float>(8, 1.0f));
    CHECK(ok.at(1, 1, 1) == 1.0f);
    CHECK(ok.all_finite());
}

TEST_CASE("feature map layout is channel-minor") {
    FeatureMap m = FeatureMap::zeros(2, 3, 4);
    m.at(1, 2, 3) = 9.0f;
    CHECK(m.data[(1 * 3 + 2) * 4 + 3] == 9.0f);
    CHECK(m.cell(1, 2)[3] == 9.0f);
}

TEST_CASE("resize_width_bilinear identity and closed form") {
    const FeatureMap m = random_map(3, 5, 2, 9);
    const FeatureMap same = resize_width_bilinear(m, 5);
    CHECK(same.data == m.data);

    FeatureMap two = FeatureMap::zeros(1, 2, 1);
    two.at(0, 0, 0) = 0.0f;
    two.at(0, 1, 0) = 2.0f;
    const FeatureMap four = resize_width_bilinear(two, 4);
    CHECK(four.at(0, 0, 0) == doctest::Approx(0.0));
    CHECK(four.at(0, 1, 0) == doctest::Approx(0.5));
    CHECK(four.at(0, 2, 0) == doctest::Approx(1.5));
    CHECK(four.at(0, 3, 0) == doctest::Approx(2.0));
}

TEST_CASE("resize_width_bilinear preserves constants and row bounds") {
    FeatureMap c = FeatureMap::zeros(2, 7, 3);
    for (auto& v : c.data) v = 1.25f;
    for (int w : {1, 3, 10, 23}) {
        const FeatureMap r = resize_width_bilinear(c, w);
        CHECK(r.width == w);
        for (float v : r.data) CHECK(v == doctest::Approx(1.25f));
    }

    // Monotone row: outputs stay within the source min/max.
    FeatureMap mono = FeatureMap::zeros(1, 6, 1);
    for (int j = 0; j < 6; ++j) mono.at(0, j, 0) = static_cast<float>(j * j);
    for (int w : {2, 5, 9, 17}) {
        const FeatureMap r = resize_width_bilinear(mono, w);
        for (float v : r.data) {
            CHECK(v >= 0.0f);
            CHECK(v <= 25.0f);
        }
    }
}

TEST_CASE("global descriptor slots") {
    GlobalDescriptor d = make_global_descriptor(3, 4);
    CHECK(d.values.size() == 12);
    d.slot(1)[2] = 5.0f;
    CHECK(d.values[6] == 5.0f);
    CHECK(d.slot(1)[2] == 5.0f);
}

TEST_CASE("smtf round-trips tensors and feature maps") {
    SmtfTensor t;
    t.dims = {3, 4, 5};
    t.data = random_vector(60, 11);
    const std::string path = temp_path("roundtrip.smtf");
    write_smtf(path, t);
    const SmtfTensor back = read_smtf(path);
    CHECK(back.dims == t.dims);
    CHECK(back.data == t.data);

    const FeatureMap m = random_map(4, 6, 3, 12);
    const std::string mpath = temp_path("map.smtf");
    write_smtf(mpath, m);
    const FeatureMap mback = read_smtf_feature_map(mpath);
    CHECK(mback.height == 4);
    CHECK(mback.width == 6);
    CHECK(mback.channels == 3);
    CHECK(mback.data == m.data);
    std::remove(path.c_str());
    std::remove(mpath.c_str());
}

TEST_CASE("smtf rejects corrupt files") {
    const std::string path = temp_path("corrupt.smtf");

    {
        std::ofstream out(path, std::ios::binary);
        out << "NOPE";
    }
    CHECK_THROWS(read_smtf(path));

    SmtfTensor t;
    t.dims = {2, 2};
    t.data = {1.0f, 2.0f, 3.0f, 4.0f};
    write_smtf(path, t);
    {
        // Truncate the payload.
        std::ifstream in(path, std::ios::binary);
        std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
        bytes.resize(bytes.size() - 5);
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    CHECK_THROWS(read_smtf(path));

    {
        // Bad version field.
        write_smtf(path, t);
        std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(4);
        const char nine = 9;
        f.write(&nine, 1);
    }
    CHECK_THROWS(read_smtf(path));

    CHECK_THROWS(read_smtf(temp_path("missing.smtf")));
    std::remove(path.c_str());
}

TEST_CASE("smtf validates on write") {
    SmtfTensor bad;
    bad.dims = {2, 3};
    bad.data = {1.0f};
    CHECK_THROWS(write_smtf(temp_path("bad.smtf"), bad));
    bad.dims = {};
    bad.data = {};
    CHECK_THROWS(write_smtf(temp_path("bad2.smtf"), bad));
}

}  // TEST_SUITE
