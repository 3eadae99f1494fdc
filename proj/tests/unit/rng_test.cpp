#include "foliated/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using foliated::Philox4x32;
using foliated::ProcessTag;
using foliated::RngStream;

// Known-answer vectors published with the Random123 reference implementation.
TEST(Philox, KnownAnswerZero)
{
    auto const out = Philox4x32::apply({0, 0, 0, 0}, {0, 0});
    EXPECT_EQ(out, (Philox4x32::Counter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
}

TEST(Philox, KnownAnswerOnes)
{
    auto const out = Philox4x32::apply({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                                       {0xffffffff, 0xffffffff});
    EXPECT_EQ(out, (Philox4x32::Counter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
}

TEST(Philox, KnownAnswerPi)
{
    auto const out = Philox4x32::apply({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                                       {0xa4093822, 0x299f31d0});
    EXPECT_EQ(out, (Philox4x32::Counter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(RngStream, Deterministic)
{
    RngStream a(42, 7, ProcessTag::leaf_noise);
    RngStream b(42, 7, ProcessTag::leaf_noise);
    for (int i = 0; i < 1000; ++i)
        ASSERT_EQ(a(), b());
}

TEST(RngStream, KeysSeparateStreams)
{
    RngStream base(42, 7, ProcessTag::leaf_noise);
    RngStream other_tag(42, 7, ProcessTag::transversal_noise);
    RngStream other_id(42, 8, ProcessTag::leaf_noise);
    RngStream other_seed(43, 7, ProcessTag::leaf_noise);
    std::set<std::uint32_t> seen;
    for (int i = 0; i < 64; ++i)
        seen.insert(base());
    int collisions = 0;
    for (auto* s : {&other_tag, &other_id, &other_seed})
        for (int i = 0; i < 64; ++i)
            collisions += static_cast<int>(seen.count((*s)()));
    EXPECT_LE(collisions, 1);
}

TEST(RngStream, UniformOpenStaysInside)
{
    RngStream s(1, 0, ProcessTag::auxiliary);
    double sum = 0;
    int const n = 200000;
    for (int i = 0; i < n; ++i)
    {
        double const u = s.uniform_open();
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
    }
    // Mean 1/2, sd 1/sqrt(12 n)
    EXPECT_NEAR(sum / n, 0.5, 5 / std::sqrt(12.0 * n));
}

TEST(RngStream, ExponentialAndNormalMoments)
{
    RngStream s(3, 0, ProcessTag::auxiliary);
    int const n = 200000;
    double e_sum = 0, z_sum = 0, z_sq = 0;
    for (int i = 0; i < n; ++i)
    {
        e_sum += s.exponential(2.0);
        double const z = s.normal();
        z_sum += z;
        z_sq += z * z;
    }
    EXPECT_NEAR(e_sum / n, 0.5, 5 * 0.5 / std::sqrt(n));
    EXPECT_NEAR(z_sum / n, 0.0, 5 / std::sqrt(n));
    EXPECT_NEAR(z_sq / n, 1.0, 5 * std::sqrt(2.0 / n));
}

TEST(RngStream, CountsBlocks)
{
    RngStream s(0, 0, ProcessTag::leaf_noise);
    EXPECT_EQ(s.blocks_used(), 0u);
    for (int i = 0; i < 5; ++i)
        s();
    EXPECT_EQ(s.blocks_used(), 2u);
}
