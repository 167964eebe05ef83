#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "gtest/gtest.h"
#include "sphand/errors.hpp"
#include "sphand/features.hpp"
#include "sphand/geometry.hpp"

using namespace sphand;

namespace {

SkeletonSequence random_sequence(int t, int m, int v, std::uint64_t seed) {
    SkeletonSequence seq = SkeletonSequence::zeros(t, m, v);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double& x : seq.coords) x = gauss(rng);
    return seq;
}

std::vector<int> iota_set(int n) {
    std::vector<int> ids(n);
    for (int i = 0; i < n; ++i) ids[i] = i;
    return ids;
}

} // namespace

TEST(ResizeTemporal, LinearMidpointAndIdentity) {
    SkeletonSequence seq = SkeletonSequence::zeros(2, 1, 1);
    seq.at(0, 0, 0)[0] = 1.0;
    seq.at(1, 0, 0)[0] = 3.0;
    const SkeletonSequence three = resize_temporal(seq, 3);
    EXPECT_NEAR(three.at(0, 0, 0)[0], 1.0, 1e-12);
    EXPECT_NEAR(three.at(1, 0, 0)[0], 2.0, 1e-12);
    EXPECT_NEAR(three.at(2, 0, 0)[0], 3.0, 1e-12);

    const SkeletonSequence same = resize_temporal(seq, 2);
    for (std::size_t i = 0; i < seq.coords.size(); ++i)
        EXPECT_NEAR(same.coords[i], seq.coords[i], 1e-12);
}

TEST(ResizeTemporal, ConstantStaysConstantAndSingleFrameBroadcasts) {
    SkeletonSequence seq = SkeletonSequence::zeros(5, 1, 2);
    for (double& x : seq.coords) x = 2.5;
    const SkeletonSequence resized = resize_temporal(seq, 11);
    for (double x : resized.coords) EXPECT_NEAR(x, 2.5, 1e-12);

    const SkeletonSequence one = random_sequence(1, 1, 3, 5);
    const SkeletonSequence broad = resize_temporal(one, 4);
    EXPECT_EQ(broad.frames, 4);
    for (int t = 0; t < 4; ++t)
        for (int v = 0; v < 3; ++v)
            for (int k = 0; k < 3; ++k) EXPECT_EQ(broad.at(t, 0, v)[k], one.at(0, 0, v)[k]);
}

TEST(Velocity, ConstantGivesZerosLinearGivesConstant) {
    SkeletonSequence constant = SkeletonSequence::zeros(4, 1, 2);
    for (double& x : constant.coords) x = 1.25;
    for (double x : velocity(constant).coords) EXPECT_EQ(x, 0.0);

    SkeletonSequence linear = SkeletonSequence::zeros(5, 1, 1);
    for (int t = 0; t < 5; ++t) {
        linear.at(t, 0, 0)[0] = 0.5 * t;
        linear.at(t, 0, 0)[2] = -1.0 * t;
    }
    const SkeletonSequence vel = velocity(linear);
    for (int t = 0; t < 4; ++t) {
        EXPECT_NEAR(vel.at(t, 0, 0)[0], 0.5, 1e-12);
        EXPECT_NEAR(vel.at(t, 0, 0)[2], -1.0, 1e-12);
    }
    EXPECT_EQ(vel.at(4, 0, 0)[0], 0.0);
    EXPECT_EQ(vel.at(4, 0, 0)[2], 0.0);
}

TEST(Velocity, RotationEquivariant) {
    const SkeletonSequence seq = random_sequence(6, 1, 4, 13);
    std::mt19937_64 rng(14);
    const Rotation r = sample_rotation(rng, RotationMode::so3_uniform);
    const SkeletonSequence a = velocity(rotate(seq, r));
    const SkeletonSequence b = rotate(velocity(seq), r);
    ASSERT_EQ(a.coords.size(), b.coords.size());
    for (std::size_t i = 0; i < a.coords.size(); ++i) EXPECT_NEAR(a.coords[i], b.coords[i], 1e-12);
}

TEST(Assemble, ModeNoneIsRawCoordinates) {
    const SkeletonSequence seq = random_sequence(4, 1, 5, 21);
    EmbedConfig cfg;
    cfg.mode = EmbedMode::none;
    cfg.target_frames = 0;
    std::mt19937_64 rng(1);
    const FeatureTensor ft = assemble({seq}, cfg, rng);
    EXPECT_EQ(ft.n, 1);
    EXPECT_EQ(ft.c, 3);
    EXPECT_EQ(ft.t, 4);
    EXPECT_EQ(ft.v, 5);
    for (int t = 0; t < 4; ++t)
        for (int v = 0; v < 5; ++v)
            for (int k = 0; k < 3; ++k) EXPECT_EQ(ft.at(0, 0, k, t, v), seq.at(t, 0, v)[k]);
}

TEST(Assemble, ChannelArithmeticFphaLshr) {
    // 21-joint hand, all joints in the set, magnitude: 3 + 21*8 = 171.
    const SkeletonSequence seq = random_sequence(3, 1, 21, 22);
    EmbedConfig cfg;
    cfg.mode = EmbedMode::lshr;
    cfg.format = ComplexFormat::magnitude;
    cfg.degrees = {1, 2};
    cfg.hand_set = iota_set(21);
    cfg.target_frames = 0;
    EXPECT_EQ(total_channels(cfg), 171);
    EXPECT_EQ(channel_names(cfg).size(), 171u);
    std::mt19937_64 rng(2);
    const FeatureTensor ft = assemble({seq}, cfg, rng);
    EXPECT_EQ(ft.c, 171);
    EXPECT_EQ(ft.channel_map.size(), 171u);
}

TEST(Assemble, ChannelArithmeticNtuLshtAndZeroFill) {
    // 25-joint body, 8 hand joints, mag+phase transform: 3 + 8*2 = 19.
    const SkeletonSequence seq = random_sequence(3, 2, 25, 23);
    EmbedConfig cfg;
    cfg.mode = EmbedMode::lsht;
    cfg.format = ComplexFormat::mag_and_phase;
    cfg.degrees = {1, 2};
    cfg.hand_set = ntu_hand_set();
    cfg.target_frames = 0;
    EXPECT_EQ(total_channels(cfg), 19);
    std::mt19937_64 rng(3);
    const FeatureTensor ft = assemble({seq}, cfg, rng);
    EXPECT_EQ(ft.c, 19);

    // Every embedding channel is exactly zero at the 17 non-hand joints.
    const std::vector<int> hand = ntu_hand_set();
    double off_sum = 0.0;
    for (int v = 0; v < 25; ++v) {
        if (std::find(hand.begin(), hand.end(), v) != hand.end()) continue;
        for (int m = 0; m < ft.m; ++m)
            for (int c = 3; c < ft.c; ++c)
                for (int t = 0; t < ft.t; ++t) off_sum += std::abs(ft.at(0, m, c, t, v));
    }
    EXPECT_EQ(off_sum, 0.0);

    // Hand joints do carry signal.
    double on_sum = 0.0;
    for (int v : hand)
        for (int c = 3; c < ft.c; ++c)
            for (int t = 0; t < ft.t; ++t) on_sum += std::abs(ft.at(0, 0, c, t, v));
    EXPECT_GT(on_sum, 0.0);
}

TEST(Assemble, ChannelCountFormulaHoldsAcrossRandomConfigs) {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> mode_pick(0, 4);
    std::uniform_int_distribution<int> fmt_pick(0, 5);
    std::uniform_int_distribution<int> joints_pick(4, 10);
    for (int i = 0; i < 40; ++i) {
        const int joints = joints_pick(rng);
        EmbedConfig cfg;
        cfg.mode = static_cast<EmbedMode>(mode_pick(rng));
        cfg.format = static_cast<ComplexFormat>(fmt_pick(rng));
        cfg.degrees = (i % 3 == 0) ? std::vector<int>{1} : std::vector<int>{1, 2};
        const int set_size = 2 + static_cast<int>(rng() % (joints - 1));
        cfg.hand_set = iota_set(std::min(set_size, joints));
        cfg.target_frames = 0;

        const int harm = (cfg.degrees.size() == 1) ? 3 : 8;
        const int parts = format_parts(cfg.format);
        int expected = (cfg.mode == EmbedMode::lshr_only) ? 0 : 3;
        if (cfg.mode == EmbedMode::lshr || cfg.mode == EmbedMode::lshr_only ||
            cfg.mode == EmbedMode::random_baseline)
            expected += static_cast<int>(cfg.hand_set.size()) * harm * parts;
        else if (cfg.mode == EmbedMode::lsht)
            expected += harm * parts;

        EXPECT_EQ(total_channels(cfg), expected);
        EXPECT_EQ(channel_names(cfg).size(), static_cast<std::size_t>(expected));
        const SkeletonSequence seq = random_sequence(2, 1, joints, 100 + i);
        std::mt19937_64 arng(i);
        const FeatureTensor ft = assemble({seq}, cfg, arng);
        EXPECT_EQ(ft.c, expected);
    }
}

TEST(Assemble, MagnitudeChannelsInvariantToUpAxisRotation) {
    const SkeletonSequence seq = random_sequence(4, 1, 8, 41);
    EmbedConfig cfg;
    cfg.mode = EmbedMode::lshr;
    cfg.format = ComplexFormat::magnitude;
    cfg.degrees = {1, 2};
    cfg.hand_set = iota_set(8);
    cfg.up_axis = Axis::y;
    cfg.target_frames = 0;

    std::mt19937_64 rng(4);
    const FeatureTensor base = assemble({seq}, cfg, rng);
    std::uniform_real_distribution<double> angle(0.0, 6.28);
    for (int i = 0; i < 4; ++i) {
        const SkeletonSequence rot = rotate(seq, Rotation::about_axis(Axis::y, angle(rng)));
        std::mt19937_64 rng2(4);
        const FeatureTensor turned = assemble({rot}, cfg, rng2);
        bool raw_differs = false;
        for (int t = 0; t < base.t && !raw_differs; ++t)
            for (int v = 0; v < base.v && !raw_differs; ++v)
                for (int k = 0; k < 3; ++k)
                    if (std::abs(base.at(0, 0, k, t, v) - turned.at(0, 0, k, t, v)) > 1e-6) {
                        raw_differs = true;
                        break;
                    }
        EXPECT_TRUE(raw_differs); // raw coordinates must move
        for (int c = 3; c < base.c; ++c)
            for (int t = 0; t < base.t; ++t)
                for (int v = 0; v < base.v; ++v)
                    EXPECT_NEAR(base.at(0, 0, c, t, v), turned.at(0, 0, c, t, v), 1e-10);
    }
}

TEST(Assemble, RandomBaselineMatchesLshrShapes) {
    EmbedConfig lshr;
    lshr.mode = EmbedMode::lshr;
    lshr.format = ComplexFormat::magnitude;
    lshr.degrees = {1, 2};
    lshr.hand_set = iota_set(8);
    lshr.target_frames = 0;
    EmbedConfig random = lshr;
    random.mode = EmbedMode::random_baseline;

    EXPECT_EQ(total_channels(lshr), total_channels(random));
    EXPECT_EQ(channel_names(lshr), channel_names(random));

    const SkeletonSequence seq = random_sequence(3, 1, 8, 42);
    std::mt19937_64 r1(7), r2(7);
    const FeatureTensor a = assemble({seq}, lshr, r1);
    const FeatureTensor b = assemble({seq}, random, r2);
    EXPECT_EQ(a.c, b.c);
    EXPECT_EQ(a.t, b.t);
    EXPECT_EQ(a.v, b.v);
    EXPECT_EQ(a.channel_map, b.channel_map);

    // Same raw block, different embedding payload.
    double diff = 0.0;
    for (int c = 3; c < a.c; ++c)
        for (int t = 0; t < a.t; ++t)
            for (int v = 0; v < a.v; ++v)
                diff += std::abs(a.at(0, 0, c, t, v) - b.at(0, 0, c, t, v));
    EXPECT_GT(diff, 1.0);
}

TEST(Assemble, RandomBaselineIsSeedDeterministic) {
    EmbedConfig cfg;
    cfg.mode = EmbedMode::random_baseline;
    cfg.degrees = {1, 2};
    cfg.hand_set = iota_set(6);
    cfg.target_frames = 0;
    const SkeletonSequence seq = random_sequence(3, 1, 6, 43);
    std::mt19937_64 r1(11), r2(11), r3(12);
    const FeatureTensor a = assemble({seq}, cfg, r1);
    const FeatureTensor b = assemble({seq}, cfg, r2);
    const FeatureTensor c = assemble({seq}, cfg, r3);
    EXPECT_EQ(a.data, b.data);
    EXPECT_NE(a.data, c.data);
}

TEST(Assemble, LshrOnlyDropsRawChannels) {
    EmbedConfig cfg;
    cfg.mode = EmbedMode::lshr_only;
    cfg.format = ComplexFormat::magnitude;
    cfg.degrees = {1, 2};
    cfg.hand_set = iota_set(8);
    cfg.target_frames = 0;
    EXPECT_EQ(total_channels(cfg), 64);
    const SkeletonSequence seq = random_sequence(3, 1, 8, 44);
    std::mt19937_64 rng(5);
    const FeatureTensor ft = assemble({seq}, cfg, rng);
    EXPECT_EQ(ft.c, 64);
    EXPECT_EQ(ft.channel_map[0].substr(0, 4), "lshr");
}

TEST(Assemble, LabelsResizeAndErrors) {
    SkeletonSequence a = random_sequence(6, 1, 5, 45);
    a.label = 3;
    SkeletonSequence b = random_sequence(9, 1, 5, 46); // different T is fine
    EmbedConfig cfg;
    cfg.mode = EmbedMode::none;
    cfg.target_frames = 4;
    std::mt19937_64 rng(6);
    const FeatureTensor ft = assemble({a, b}, cfg, rng);
    EXPECT_EQ(ft.n, 2);
    EXPECT_EQ(ft.t, 4);
    ASSERT_EQ(ft.labels.size(), 2u);
    EXPECT_EQ(ft.labels[0], 3);
    EXPECT_EQ(ft.labels[1], -1);

    SkeletonSequence wrong = random_sequence(6, 1, 7, 47); // inconsistent V
    std::mt19937_64 rng2(6);
    EXPECT_THROW(assemble({a, wrong}, cfg, rng2), ShapeError);
    std::mt19937_64 rng3(6);
    EXPECT_THROW(assemble({}, cfg, rng3), ShapeError);
}

TEST(HandSets, DefaultOverrideAndValidation) {
    const std::vector<int> ntu = ntu_hand_set();
    EXPECT_EQ(ntu.size(), 8u);
    for (int id : ntu) {
        EXPECT_GE(id, 0);
        EXPECT_LT(id, 25);
    }

    const std::string path = "/tmp/sphand_hand_set_test.txt";
    {
        std::ofstream out(path);
        out << "# thumb and friends\n1, 2\n5 7\n";
    }
    EXPECT_EQ(load_hand_set_file(path), (std::vector<int>{1, 2, 5, 7}));
    {
        std::ofstream out(path);
        out << "1 2 x\n";
    }
    EXPECT_THROW(load_hand_set_file(path), ConfigError);
    EXPECT_THROW(load_hand_set_file("/nonexistent/hands.txt"), ConfigError);

    EXPECT_EQ(resolve_hand_set({}, 4), (std::vector<int>{0, 1, 2, 3}));
    EXPECT_THROW(resolve_hand_set({25}, 25), ConfigError);
    EXPECT_THROW(resolve_hand_set({1, 1}, 4), ConfigError);
    EXPECT_THROW(resolve_hand_set({-1}, 4), ConfigError);
}

TEST(FeatureFiles, RoundTripWithSidecars) {
    EmbedConfig cfg;
    cfg.mode = EmbedMode::lshr;
    cfg.degrees = {1};
    cfg.hand_set = iota_set(5);
    cfg.target_frames = 0;
    SkeletonSequence seq = random_sequence(3, 1, 5, 48);
    seq.label = 2;
    std::mt19937_64 rng(8);
    const FeatureTensor ft = assemble({seq}, cfg, rng);

    const std::string base = "/tmp/sphand_features_test";
    write_features(ft, base);
    const FeatureTensor back = read_features(base + ".sktf");
    EXPECT_EQ(back.n, ft.n);
    EXPECT_EQ(back.c, ft.c);
    EXPECT_EQ(back.data, ft.data);
    EXPECT_EQ(back.channel_map, ft.channel_map);
    EXPECT_EQ(back.labels, ft.labels);
}

TEST(ChannelStandardization, ZeroMeanUnitVarianceAndSharedStats) {
    SkeletonSequence seq = random_sequence(8, 1, 6, 49);
    EmbedConfig cfg;
    cfg.mode = EmbedMode::none;
    cfg.target_frames = 0;
    std::mt19937_64 rng(9);
    FeatureTensor train = assemble({seq, random_sequence(8, 1, 6, 50)}, cfg, rng);

    const ChannelStats stats = channel_stats(train);
    FeatureTensor whitened = train;
    standardize(whitened, stats);
    const std::size_t per_channel =
        static_cast<std::size_t>(whitened.n) * whitened.m * whitened.t * whitened.v;
    for (int c = 0; c < whitened.c; ++c) {
        double sum = 0.0, sq = 0.0;
        for (int n = 0; n < whitened.n; ++n)
            for (int t = 0; t < whitened.t; ++t)
                for (int v = 0; v < whitened.v; ++v) {
                    const double x = whitened.at(n, 0, c, t, v);
                    sum += x;
                    sq += x * x;
                }
        EXPECT_NEAR(sum / per_channel, 0.0, 1e-10);
        EXPECT_NEAR(sq / per_channel, 1.0, 1e-8);
    }

    // Applying train stats to another tensor uses the same affine map.
    std::mt19937_64 rng2(10);
    FeatureTensor test = assemble({random_sequence(8, 1, 6, 51)}, cfg, rng2);
    const double before = test.at(0, 0, 1, 2, 3);
    standardize(test, stats);
    EXPECT_NEAR(test.at(0, 0, 1, 2, 3), (before - stats.mean[1]) / stats.sd[1], 1e-12);

    FeatureTensor wrong = FeatureTensor::zeros(1, 1, 5, 2, 2);
    EXPECT_THROW(standardize(wrong, stats), ShapeError);
}

TEST(ChannelStandardization, ConstantChannelMapsToZero) {
    FeatureTensor ft = FeatureTensor::zeros(2, 1, 2, 3, 3);
    for (int n = 0; n < 2; ++n)
        for (int t = 0; t < 3; ++t)
            for (int v = 0; v < 3; ++v) {
                ft.at(n, 0, 0, t, v) = 7.5; // constant channel
                ft.at(n, 0, 1, t, v) = 0.1 * (n + t + v);
            }
    const ChannelStats stats = channel_stats(ft);
    standardize(ft, stats);
    for (int n = 0; n < 2; ++n)
        for (int t = 0; t < 3; ++t)
            for (int v = 0; v < 3; ++v) EXPECT_EQ(ft.at(n, 0, 0, t, v), 0.0);
}

TEST(ModeStrings, RoundTripAndRejection) {
    EXPECT_EQ(embed_mode_from_string("lshr-only"), EmbedMode::lshr_only);
    EXPECT_EQ(embed_mode_from_string("random"), EmbedMode::random_baseline);
    EXPECT_EQ(embed_mode_to_string(EmbedMode::lsht), "lsht");
    EXPECT_THROW(embed_mode_from_string("fourier"), ConfigError);
    EXPECT_EQ(modality_from_string("velocity"), Modality::velocity);
    EXPECT_THROW(modality_from_string("jerk"), ConfigError);
}
