#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "testutil.hpp"

using namespace tspm;
using Catch::Matchers::WithinAbs;
using testutil::make_instance;

namespace {

double mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

std::vector<double> random_signal(std::mt19937_64& rng, std::size_t n) {
    std::vector<double> x(n);
    for (auto& v : x) v = detail::uniform01(rng) * 4.0 - 2.0;
    return x;
}

}  // namespace

TEST_CASE("resampling a constant is exact at any length", "[preprocess]") {
    const std::vector<double> x(6, 5.0);
    for (std::size_t m : {3u, 6u, 11u}) {
        const auto y = resample_fourier(x, m);
        REQUIRE(y.size() == m);
        for (double v : y) CHECK_THAT(v, WithinAbs(5.0, 1e-9));
    }
}

TEST_CASE("downsampling one cosine cycle keeps the cycle", "[preprocess]") {
    std::vector<double> x(8);
    for (std::size_t k = 0; k < 8; ++k)
        x[k] = std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / 8.0);
    const auto y = resample_fourier(x, 4);
    REQUIRE(y.size() == 4);
    const std::vector<double> want = {1.0, 0.0, -1.0, 0.0};
    for (std::size_t k = 0; k < 4; ++k) CHECK_THAT(y[k], WithinAbs(want[k], 1e-9));
}

TEST_CASE("resampling to the same length is the identity", "[preprocess]") {
    auto rng = detail::make_rng(31);
    for (int rep = 0; rep < 20; ++rep) {
        const auto n = detail::uniform_int(rng, 1, 40);
        const auto x = random_signal(rng, n);
        const auto y = resample_fourier(x, n);
        REQUIRE(y.size() == x.size());
        for (std::size_t k = 0; k < n; ++k) CHECK_THAT(y[k], WithinAbs(x[k], 1e-9));
    }
}

TEST_CASE("resampling preserves the signal mean", "[preprocess]") {
    auto rng = detail::make_rng(77);
    for (int rep = 0; rep < 30; ++rep) {
        const auto n = detail::uniform_int(rng, 2, 48);
        const auto m = detail::uniform_int(rng, 1, 70);
        const auto x = random_signal(rng, n);
        const auto y = resample_fourier(x, m);
        CHECK_THAT(mean(y), WithinAbs(mean(x), 1e-9));
    }
}

TEST_CASE("upsampling two points inserts midpoints", "[preprocess]") {
    const std::vector<double> x = {3.0, 7.0};
    const auto y = resample_fourier(x, 4);
    REQUIRE(y.size() == 4);
    const std::vector<double> want = {3.0, 5.0, 7.0, 5.0};
    for (std::size_t k = 0; k < 4; ++k) CHECK_THAT(y[k], WithinAbs(want[k], 1e-9));
}

// A linear ramp is not band-limited, so stretching 20 -> 57 frames rings hard:
// the output overshoots past 1.1 and the final frame lands nowhere near the
// ramp's endpoint. Frozen values from an independent reference resampler.
TEST_CASE("ramp upsampling rings at the discontinuity", "[preprocess]") {
    std::vector<double> x(20);
    for (std::size_t k = 0; k < 20; ++k) x[k] = static_cast<double>(k) / 19.0;
    const auto y = resample_fourier(x, 57);
    REQUIRE(y.size() == 57);

    CHECK_THAT(y[0], WithinAbs(0.0, 1e-9));
    CHECK_THAT(y[1], WithinAbs(-0.12563496366375451, 1e-9));
    CHECK_THAT(y[28], WithinAbs(0.51638325658674289, 1e-9));
    CHECK_THAT(y[53], WithinAbs(1.1259938299615646, 1e-9));
    CHECK_THAT(y[56], WithinAbs(0.32708943953379577, 1e-9));

    const double peak = *std::max_element(y.begin(), y.end());
    CHECK(peak > 1.1);                       // overshoot above the input range
    CHECK(std::fabs(y[56] - 1.0) > 0.5);     // endpoint is nowhere near ramp(1)
    CHECK_THAT(mean(y), WithinAbs(0.5, 1e-9));
}

TEST_CASE("temporal scaling hits the target frame count on every channel", "[preprocess]") {
    const auto inst = make_instance("g", {{1, 1, 1, 1, 1, 1}, {2, 2, 2, 2, 2, 2}});
    const auto out = temporal_scale(inst, 9);
    CHECK(out.label() == "g");
    REQUIRE(out.num_frames() == 9);
    REQUIRE(out.num_channels() == 2);
    for (std::size_t t = 0; t < 9; ++t) {
        CHECK_THAT(out.at(0, t), WithinAbs(1.0, 1e-9));
        CHECK_THAT(out.at(1, t), WithinAbs(2.0, 1e-9));
    }
    CHECK_THROWS_AS(temporal_scale(inst, 0), std::invalid_argument);
}

TEST_CASE("spatial scaling maps each channel onto [0,1]", "[preprocess]") {
    const auto inst = make_instance("g", {{2, 4, 6}, {-1, 0, 3}});
    const auto out = spatial_scale(inst);
    CHECK_THAT(out.at(0, 0), WithinAbs(0.0, 1e-12));
    CHECK_THAT(out.at(0, 1), WithinAbs(0.5, 1e-12));
    CHECK_THAT(out.at(0, 2), WithinAbs(1.0, 1e-12));
    CHECK_THAT(out.at(1, 0), WithinAbs(0.0, 1e-12));
    CHECK_THAT(out.at(1, 1), WithinAbs(0.25, 1e-12));
    CHECK_THAT(out.at(1, 2), WithinAbs(1.0, 1e-12));
}

TEST_CASE("constant channels scale to the midpoint", "[preprocess]") {
    const auto out = spatial_scale(make_instance("g", {{7, 7, 7}, {1, 2, 3}}));
    for (std::size_t t = 0; t < 3; ++t) CHECK(out.at(0, t) == 0.5);
}

TEST_CASE("spatial scaling is idempotent and bounded", "[preprocess]") {
    auto rng = detail::make_rng(5);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<std::vector<double>> chans;
        for (int c = 0; c < 3; ++c) chans.push_back(random_signal(rng, 15));
        const auto once = spatial_scale(make_instance("g", std::move(chans)));
        for (double v : once.values()) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
        const auto twice = spatial_scale(once);
        for (std::size_t i = 0; i < once.values().size(); ++i)
            CHECK_THAT(twice.values()[i], WithinAbs(once.values()[i], 1e-12));
        // Non-constant channels touch both endpoints.
        for (std::size_t c = 0; c < 3; ++c) {
            const auto ch = once.channel(c);
            CHECK(*std::min_element(ch.begin(), ch.end()) == 0.0);
            CHECK(*std::max_element(ch.begin(), ch.end()) == 1.0);
        }
    }
}

TEST_CASE("differentiation takes first differences", "[preprocess]") {
    const auto out = differentiate(make_instance("g", {{0, 1, 3, 6}, {5, 5, 5, 5}}));
    REQUIRE(out.num_frames() == 3);
    CHECK(out.at(0, 0) == 1.0);
    CHECK(out.at(0, 1) == 2.0);
    CHECK(out.at(0, 2) == 3.0);
    for (std::size_t t = 0; t < 3; ++t) CHECK(out.at(1, t) == 0.0);
    CHECK_THROWS_AS(differentiate(make_instance("g", {{4.0}})), std::invalid_argument);
}

TEST_CASE("preprocessing lands on the target frame count in both variants", "[preprocess]") {
    auto rng = detail::make_rng(12);
    const auto inst = make_instance("g", {random_signal(rng, 23), random_signal(rng, 23)});

    PreprocessConfig plain;
    plain.target_frames = 57;
    const auto a = preprocess_instance(inst, plain);
    CHECK(a.num_frames() == 57);
    for (double v : a.values()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }

    PreprocessConfig deriv;
    deriv.target_frames = 57;
    deriv.use_derivative = true;
    const auto b = preprocess_instance(inst, deriv);
    CHECK(b.num_frames() == 57);
    for (double v : b.values()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }

    PreprocessConfig bad;
    bad.target_frames = 1;
    CHECK_THROWS_AS(validate(bad), std::invalid_argument);
}

TEST_CASE("derivative variant differentiates before scaling", "[preprocess]") {
    // 4 frames resampled to target+1 = 4 is the identity, so the derivative
    // pipeline reduces to spatial_scale(differentiate(inst)) here.
    const auto inst = make_instance("g", {{0, 2, 3, 3}});
    PreprocessConfig cfg;
    cfg.target_frames = 3;
    cfg.use_derivative = true;
    const auto out = preprocess_instance(inst, cfg);
    REQUIRE(out.num_frames() == 3);
    // diffs are [2,1,0] -> scaled [1, 0.5, 0]
    CHECK_THAT(out.at(0, 0), WithinAbs(1.0, 1e-9));
    CHECK_THAT(out.at(0, 1), WithinAbs(0.5, 1e-9));
    CHECK_THAT(out.at(0, 2), WithinAbs(0.0, 1e-9));
}

TEST_CASE("flattening interleaves channels frame by frame", "[preprocess]") {
    std::vector<TimeSeriesInstance> insts;
    insts.push_back(make_instance("u", {{1, 2, 3}, {4, 5, 6}}));
    insts.push_back(make_instance("v", {{7, 8, 9}, {10, 11, 12}}));
    ChannelSchema schema({{"a", ChannelGroup::POS}, {"b", ChannelGroup::ROT}});
    const auto m = flatten(Dataset(schema, std::move(insts)));

    REQUIRE(m.rows == 2);
    REQUIRE(m.cols == 6);
    CHECK(m.row_labels == std::vector<std::string>{"u", "v"});
    const std::vector<double> row0 = {1, 4, 2, 5, 3, 6};
    const std::vector<double> row1 = {7, 10, 8, 11, 9, 12};
    for (std::size_t j = 0; j < 6; ++j) {
        CHECK(m.at(0, j) == row0[j]);
        CHECK(m.at(1, j) == row1[j]);
    }
}

TEST_CASE("flattening rejects ragged frame counts", "[preprocess]") {
    std::vector<TimeSeriesInstance> insts;
    insts.push_back(make_instance("u", {{1, 2, 3}}));
    insts.push_back(make_instance("v", {{7, 8}}));
    ChannelSchema schema({{"a", ChannelGroup::POS}});
    CHECK_THROWS_WITH(flatten(Dataset(schema, std::move(insts))),
                      Catch::Matchers::ContainsSubstring("v"));
}

TEST_CASE("preprocessing a dataset preserves order and labels", "[preprocess]") {
    SyntheticSpec spec;
    spec.num_classes = 2;
    spec.instances_per_class = 3;
    spec.num_channels = 2;
    spec.num_frames = 19;
    spec.seed = 3;
    spec.planted_patterns = {{PlantSpec{0, PlantLevel::High, 1, 2, 4, 5}},
                             {PlantSpec{1, PlantLevel::High, 1, 2, 4, 5}}};
    const auto ds = generate_synthetic(spec);

    PreprocessConfig cfg;
    cfg.target_frames = 30;
    const auto out = preprocess_dataset(ds, cfg);
    REQUIRE(out.size() == ds.size());
    CHECK(out.schema() == ds.schema());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(out.instances()[i].label() == ds.instances()[i].label());
        CHECK(out.instances()[i].num_frames() == 30);
    }
}
