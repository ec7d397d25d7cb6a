#include <gtest/gtest.h>

#include <cmath>

#include "infratl/dataset.hpp"
#include "infratl/map.hpp"

using namespace infratl;
using namespace infratl::mapping;

namespace {

nn::Checkpoint untrained_checkpoint() {
    nn::Model<float> m(nn::ModelConfig{}, 2);
    data::Normalizer n;
    n.input_mean = 1.0;
    n.input_std = 0.05;
    n.label_mean = -70.0;
    n.label_std = 15.0;
    n.freq_mean = 1.0;
    n.freq_std = 0.9;
    return nn::make_checkpoint(m, n, nn::TrainResult{});
}

}  // namespace

TEST(Map, Azimuths) {
    const auto a = map_azimuths(8);
    ASSERT_EQ(a.size(), 8u);
    EXPECT_DOUBLE_EQ(a[0], 0.0);
    EXPECT_DOUBLE_EQ(a[3], 135.0);
    EXPECT_EQ(engine_from_string("cnn"), Engine::cnn);
    EXPECT_THROW(engine_from_string("fdtd"), Error);
}

TEST(Map, PeRowsMatchStandaloneMarch) {
    MapOptions o;
    o.frequency = 0.1;
    o.n_azimuths = 4;
    o.radius_km = 300.0;
    o.workers = 2;
    const auto g = build_pe_map(o);
    ASSERT_EQ(g.n_azimuths(), 4u);
    ASSERT_EQ(g.n_ranges(), 30u);
    for (std::size_t a = 0; a < 4; ++a) {
        const auto slice = atmos::build_slice(o.climatology, o.gravity_waves, g.azimuths_deg[a]);
        const auto tl = pe::march_ground_tl(slice, o.frequency, o.pe_config, o.radius_km * 1000.0);
        for (std::size_t r = 0; r < 30; ++r) EXPECT_EQ(g.at(a, r), static_cast<float>(tl[r]));
    }
}

TEST(Map, CnnDefaultShapeAndRowMatchesPredict) {
    MapOptions o;
    o.engine = Engine::cnn;
    o.frequency = 0.5;
    o.n_azimuths = 72;
    const auto ck = untrained_checkpoint();
    const auto g = build_cnn_map(o, ck);
    EXPECT_EQ(g.n_azimuths(), 72u);
    EXPECT_EQ(g.n_ranges(), 200u);
    for (float v : g.values) ASSERT_TRUE(std::isfinite(v));

    auto model = nn::model_from_checkpoint<float>(ck);
    const auto slice = atmos::build_slice(o.climatology, o.gravity_waves, 0.0);
    const std::vector<float> f{static_cast<float>(ck.normalizer.apply_freq(o.frequency))};
    const auto pred = model.predict(data::slice_image(slice, ck.normalizer), f);
    for (std::size_t r = 0; r < 200; ++r) {
        EXPECT_EQ(g.at(0, r), static_cast<float>(ck.normalizer.invert_label(pred.data[r])));
    }
}
